//! The `A_{n-1}` elliptic hypergeometric integral, its transformation formula
//! and the change of variables that ties it to the star weights.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{
    relative_residual, sqrt_s_product, star_v1, star_v2, weight_w, StarConfig,
};
use crate::quadrature::{grid_mean, integrate_adaptive, QuadratureReport, QuadratureSpec};
use crate::special::{elliptic_gamma, elliptic_gamma_recip, EllipticNomes};

const ONE: Complex64 = Complex64::new(1.0, 0.0);
/// Largest `n` the cached integrand supports.
pub const MAX_RANK: usize = 16;

/// The `4n` parameters `{t_i}, {s_i}` of the integral, all inside the unit disk.
#[derive(Debug, Clone)]
pub struct RainsParams {
    t: Vec<Complex64>,
    s: Vec<Complex64>,
    n: usize,
    nomes: EllipticNomes,
}

impl RainsParams {
    pub fn new(t: Vec<Complex64>, s: Vec<Complex64>, nomes: EllipticNomes) -> Result<Self> {
        let n = t.len() / 2;
        if !(2..=MAX_RANK).contains(&n) || t.len() != 2 * n {
            return Err(Error::Precondition(format!(
                "need 2n parameters t_i with 2 <= n <= {MAX_RANK}, got {}",
                t.len()
            )));
        }
        if s.len() != t.len() {
            return Err(Error::DimensionMismatch {
                expected: t.len(),
                got: s.len(),
            });
        }
        if let Some(bad) = t.iter().chain(&s).find(|x| !(x.norm() < 1.0)) {
            return Err(Error::Domain(format!(
                "parameter {bad} lies outside the open unit disk"
            )));
        }
        Ok(Self { t, s, n, nomes })
    }

    pub fn t(&self) -> &[Complex64] {
        &self.t
    }

    pub fn s(&self) -> &[Complex64] {
        &self.s
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nomes(&self) -> &EllipticNomes {
        &self.nomes
    }

    /// The same integral with the roles of `t` and `s` exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            t: self.s.clone(),
            s: self.t.clone(),
            ..self.clone()
        }
    }
}

/// Parameters of the transformed integral, `t~_i = T^{1/n} / t_i` and
/// `s~_i = U^{1/n} / s_i`.
#[derive(Debug, Clone, Serialize)]
pub struct TildeParams {
    pub t_tilde: Vec<Complex64>,
    pub s_tilde: Vec<Complex64>,
    /// `T = prod t_j`
    pub t_product: Complex64,
    /// `U = prod s_j`
    pub s_product: Complex64,
    /// Every transformed parameter lies strictly inside the unit disk.
    pub in_unit_polydisk: bool,
}

impl TildeParams {
    pub fn into_params(self, nomes: &EllipticNomes) -> Result<RainsParams> {
        RainsParams::new(self.t_tilde, self.s_tilde, nomes.clone())
    }
}

/// Tilde transform with principal `n`-th roots.
pub fn tilde_transform(params: &RainsParams) -> Result<TildeParams> {
    tilde_transform_with_roots(params, 0, 0)
}

/// Tilde transform with `T^{1/n}` multiplied by `omega^t_twist` and `U^{1/n}`
/// by `omega^s_twist`, `omega = e^{2 pi i / n}`.
pub fn tilde_transform_with_roots(
    params: &RainsParams,
    t_twist: usize,
    s_twist: usize,
) -> Result<TildeParams> {
    let t_product = params.t.iter().product::<Complex64>();
    let s_product = params.s.iter().product::<Complex64>();
    if t_product.norm() == 0.0 || s_product.norm() == 0.0 {
        return Err(Error::Domain("tilde transform needs nonzero T and U".into()));
    }
    let n = params.n as f64;
    let omega = |k: usize| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / n);
    let t_root = t_product.powf(1.0 / n) * omega(t_twist);
    let s_root = s_product.powf(1.0 / n) * omega(s_twist);
    let t_tilde: Vec<Complex64> = params.t.iter().map(|t| t_root / t).collect();
    let s_tilde: Vec<Complex64> = params.s.iter().map(|s| s_root / s).collect();
    let in_unit_polydisk = t_tilde.iter().chain(&s_tilde).all(|x| x.norm() < 1.0);
    Ok(TildeParams {
        t_tilde,
        s_tilde,
        t_product,
        s_product,
        in_unit_polydisk,
    })
}

/// `(1/n!) (G(p) G(q) / (2 pi i))^{n-1} oint prod_{k,j} Gamma(t_j z_k) Gamma(s_j / z_k)
/// / prod_{k != l} Gamma(z_k / z_l) prod_{k<n} dz_k / z_k` with `z_1 ... z_n = 1`.
///
/// The quadrature dimension is always `n - 1`; `spec.dims` is ignored.
pub fn rains_integral(params: &RainsParams, spec: &QuadratureSpec) -> Result<QuadratureReport> {
    let n = params.n;
    let spec = spec.with_dims(n - 1)?;
    let factorial: f64 = (2..=n).map(|k| k as f64).product();
    let prefactor = params.nomes.g_product().powi(n as i32 - 1) / factorial;
    let report = integrate_adaptive(&spec, |points| {
        let cache = GridCache::build(params, points)?;
        grid_mean(n - 1, points, |idx| Ok(cache.integrand(idx)))
    })?;
    Ok(report.scaled(prefactor))
}

/// Integrand values on the doubled angle set `theta_m = pi m / N`,
/// `m = 0..2N`. Free variables sit at odd `m`; `z_n` and every ratio
/// `z_k / z_l` land somewhere in the same set.
struct GridCache {
    modulus: usize,
    n: usize,
    single: Vec<Complex64>,
    pair: Vec<Complex64>,
}

impl GridCache {
    fn build(params: &RainsParams, points: usize) -> Result<Self> {
        let modulus = 2 * points;
        let nomes = &params.nomes;
        let mut single = Vec::with_capacity(modulus);
        let mut pair = Vec::with_capacity(modulus);
        for m in 0..modulus {
            let z = Complex64::from_polar(1.0, PI * m as f64 / points as f64);
            let z_inv = z.conj();
            let mut acc = ONE;
            for (t, s) in params.t.iter().zip(&params.s) {
                acc *= elliptic_gamma(t * z, nomes)? * elliptic_gamma(s * z_inv, nomes)?;
            }
            single.push(acc);
            pair.push(elliptic_gamma_recip(z, nomes)?);
        }
        Ok(Self {
            modulus,
            n: params.n,
            single,
            pair,
        })
    }

    fn integrand(&self, idx: &[usize]) -> Complex64 {
        let modulus = self.modulus;
        let mut storage = [0usize; MAX_RANK];
        let m = &mut storage[..self.n];
        let mut sum = 0;
        for (slot, &i) in m.iter_mut().zip(idx) {
            *slot = 2 * i + 1;
            sum += *slot;
        }
        m[self.n - 1] = (modulus - sum % modulus) % modulus;
        let mut acc = ONE;
        for &mk in m.iter() {
            acc *= self.single[mk];
        }
        for (k, &mk) in m.iter().enumerate() {
            for (l, &ml) in m.iter().enumerate() {
                if k != l {
                    acc *= self.pair[(mk + modulus - ml) % modulus];
                }
            }
        }
        acc
    }
}

/// `prod_{j,k} Gamma(t_j s_k)` over all `4n^2` pairs.
pub fn gamma_cross_product(params: &RainsParams) -> Result<Complex64> {
    let mut acc = ONE;
    for t in &params.t {
        for s in &params.s {
            acc *= elliptic_gamma(t * s, &params.nomes)?;
        }
    }
    Ok(acc)
}

#[derive(Debug, Clone)]
pub struct RainsReport {
    pub direct: QuadratureReport,
    pub transformed: QuadratureReport,
    pub gamma_product: Complex64,
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub residual: f64,
}

/// Both sides of the transformation formula
/// `I(t, s) = prod Gamma(t_j s_k) I(t~, s~)`.
pub fn rains_transformation(
    params: &RainsParams,
    tilde: &TildeParams,
    spec: &QuadratureSpec,
) -> Result<RainsReport> {
    if !tilde.in_unit_polydisk {
        return Err(Error::Domain(
            "transformed parameters leave the unit polydisk".into(),
        ));
    }
    let transformed_params = tilde.clone().into_params(&params.nomes)?;
    let direct = rains_integral(params, spec)?;
    let transformed = rains_integral(&transformed_params, spec)?;
    let gamma_product = gamma_cross_product(params)?;
    let lhs = direct.value;
    let rhs = gamma_product * transformed.value;
    Ok(RainsReport {
        direct,
        transformed,
        gamma_product,
        lhs,
        rhs,
        residual: relative_residual(lhs, rhs),
    })
}

pub fn rains_residual(params: &RainsParams, spec: &QuadratureSpec) -> Result<f64> {
    let tilde = tilde_transform(params)?;
    rains_transformation(params, &tilde, spec).map(|r| r.residual)
}

/// Parameters of the integral equal to the white-centred star:
/// `t_j = e^{-2(u-v) - 2i c_j}`, `t_{n+j} = e^{-2(u'-v') - 2i b_j}`,
/// `s_j = e^{2(u'-v-eta) + 2i a_j}`, `s_{n+j} = e^{2(u-v'-eta) + 2i d_j}`.
pub fn rapidity_to_params(cfg: &StarConfig) -> Result<RainsParams> {
    cfg.validate()?;
    let eta = cfg.nomes.eta().re;
    let [a1, a2, a3, a4] = cfg.rap.alphas();
    let block = |scale: f64, sign: f64, spin: &[f64]| -> Vec<Complex64> {
        spin.iter()
            .map(|x| Complex64::from_polar(scale.exp(), sign * 2.0 * x))
            .collect()
    };
    let mut t = block(-2.0 * a1, -1.0, cfg.c.components());
    t.extend(block(-2.0 * a2, -1.0, cfg.b.components()));
    let mut s = block(2.0 * (a3 - eta), 1.0, cfg.a.components());
    s.extend(block(2.0 * (a4 - eta), 1.0, cfg.d.components()));
    RainsParams::new(t, s, cfg.nomes.clone())
}

/// Closed form of the transformed parameters for a star configuration:
/// `t~_j = e^{-2(u'-v') + 2i c_j}`, `t~_{n+j} = e^{-2(u-v) + 2i b_j}`,
/// `s~_j = e^{2(u-v'-eta) - 2i a_j}`, `s~_{n+j} = e^{2(u'-v-eta) - 2i d_j}`.
pub fn rapidity_to_tilde_params(cfg: &StarConfig) -> Result<RainsParams> {
    cfg.validate()?;
    let eta = cfg.nomes.eta().re;
    let [a1, a2, a3, a4] = cfg.rap.alphas();
    let block = |scale: f64, sign: f64, spin: &[f64]| -> Vec<Complex64> {
        spin.iter()
            .map(|x| Complex64::from_polar(scale.exp(), sign * 2.0 * x))
            .collect()
    };
    let mut t = block(-2.0 * a2, 1.0, cfg.c.components());
    t.extend(block(-2.0 * a1, 1.0, cfg.b.components()));
    let mut s = block(2.0 * (a4 - eta), -1.0, cfg.a.components());
    s.extend(block(2.0 * (a3 - eta), -1.0, cfg.d.components()));
    RainsParams::new(t, s, cfg.nomes.clone())
}

/// `rho = sqrt(S(c) S(b)) / (kappa(eta-u+v) kappa(eta-u'+v') kappa(u'-v) kappa(u-v'))`.
pub fn prefactor_rho(cfg: &StarConfig) -> Result<Complex64> {
    cfg.validate()?;
    let eta = cfg.nomes.eta().re;
    let [a1, a2, a3, a4] = cfg.rap.alphas();
    let root = sqrt_s_product(cfg.c.components(), cfg.b.components(), &cfg.nomes)?;
    let k = &cfg.kappa;
    Ok(Complex64::new(root, 0.0) / (k.eval(eta - a1) * k.eval(eta - a2) * k.eval(a3) * k.eval(a4)))
}

#[derive(Debug, Clone, Copy)]
pub struct EquivalenceReport {
    pub star: QuadratureReport,
    pub integral: QuadratureReport,
    pub rho: Complex64,
    /// `|V - rho I| / |V|`.
    pub residual: f64,
}

fn equivalence(star: QuadratureReport, integral: QuadratureReport, rho: Complex64) -> EquivalenceReport {
    let diff = (star.value - rho * integral.value).norm();
    let scale = star.value.norm();
    let residual = if scale > 0.0 {
        diff / scale
    } else if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    EquivalenceReport {
        star,
        integral,
        rho,
        residual,
    }
}

/// `V1` against `rho I(t, s)` under `z_j = e^{2 i x_j}`.
pub fn equivalence_v1(cfg: &StarConfig, spec: &QuadratureSpec) -> Result<EquivalenceReport> {
    let star = star_v1(cfg, spec)?;
    let params = rapidity_to_params(cfg)?;
    let integral = rains_integral(&params, spec)?;
    Ok(equivalence(star, integral, prefactor_rho(cfg)?))
}

/// `V2` against `rho I(t~, s~)` under `z_j = e^{-2 i x_j}`.
pub fn equivalence_v2(cfg: &StarConfig, spec: &QuadratureSpec) -> Result<EquivalenceReport> {
    let star = star_v2(cfg, spec)?;
    let params = rapidity_to_params(cfg)?;
    let tilde = tilde_transform(&params)?.into_params(&cfg.nomes)?;
    let integral = rains_integral(&tilde, spec)?;
    Ok(equivalence(star, integral, prefactor_rho(cfg)?))
}

pub fn check_equivalence_v1(cfg: &StarConfig, spec: &QuadratureSpec) -> Result<f64> {
    equivalence_v1(cfg, spec).map(|r| r.residual)
}

pub fn check_equivalence_v2(cfg: &StarConfig, spec: &QuadratureSpec) -> Result<f64> {
    equivalence_v2(cfg, spec).map(|r| r.residual)
}

/// `W_{v'-v}(b,a) W_{u'-u}(c,a) / (W_{v'-v}(d,c) W_{u'-u}(d,b))`.
pub fn w_factor_ratio(cfg: &StarConfig) -> Result<Complex64> {
    cfg.validate()?;
    let (dv, du) = (cfg.rap.v_prime - cfg.rap.v, cfg.rap.u_prime - cfg.rap.u);
    let (nomes, kappa) = (&cfg.nomes, &cfg.kappa);
    let top = weight_w(dv, &cfg.b, &cfg.a, nomes, kappa)? * weight_w(du, &cfg.c, &cfg.a, nomes, kappa)?;
    let bottom = weight_w(dv, &cfg.d, &cfg.c, nomes, kappa)? * weight_w(du, &cfg.d, &cfg.b, nomes, kappa)?;
    Ok(top / bottom)
}

/// Relative mismatch between the W-factor ratio and `prod Gamma(t_j s_k)`.
pub fn w_factor_residual(cfg: &StarConfig) -> Result<f64> {
    let ratio = w_factor_ratio(cfg)?;
    let product = gamma_cross_product(&rapidity_to_params(cfg)?)?;
    Ok(relative_residual(ratio, product))
}
