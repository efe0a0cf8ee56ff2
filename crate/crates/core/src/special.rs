//! Elliptic gamma functions and the single-spin factor.
//!
//! All infinite double products are accumulated shell by shell in `j + k`
//! order and truncated once a bound on the remaining deviation from one
//! drops below the nomes' truncation threshold.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::Spin;

/// Default truncation threshold for every product and series.
pub const DEFAULT_TRUNC_EPS: f64 = 1e-17;

/// A denominator factor smaller than `POLE_FACTOR * trunc_eps` counts as a pole.
pub const POLE_FACTOR: f64 = 1e3;

const MAX_SHELLS: usize = 20_000;
const MAX_SERIES_TERMS: usize = 10_000_000;
const TABLE_TARGET: f64 = 1e-40;
const TABLE_CAP: usize = 8192;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// The pair of elliptic nomes `(p, q)` with the derived crossing parameter
/// `eta = -Log(pq) / 2`.
#[derive(Debug, Clone)]
pub struct EllipticNomes {
    p: Complex64,
    q: Complex64,
    eta: Complex64,
    trunc_eps: f64,
    // p^{2j} and q^{2j}, long enough for most calls; longer shells fall back to powi.
    p_even: Vec<Complex64>,
    q_even: Vec<Complex64>,
    g_p: Complex64,
    g_q: Complex64,
}

impl EllipticNomes {
    pub fn new(p: Complex64, q: Complex64) -> Result<Self> {
        Self::with_trunc_eps(p, q, DEFAULT_TRUNC_EPS)
    }

    /// Real nomes, the regime every verification suite runs in.
    pub fn real(p: f64, q: f64) -> Result<Self> {
        Self::new(Complex64::new(p, 0.0), Complex64::new(q, 0.0))
    }

    pub fn with_trunc_eps(p: Complex64, q: Complex64, trunc_eps: f64) -> Result<Self> {
        for (name, nome) in [("p", p), ("q", q)] {
            let r = nome.norm();
            if !(r > 0.0 && r < 1.0) || !nome.re.is_finite() || !nome.im.is_finite() {
                return Err(Error::Domain(format!(
                    "nome {name} = {nome} must satisfy 0 < |{name}| < 1"
                )));
            }
        }
        if !(trunc_eps > 0.0 && trunc_eps.is_finite()) {
            return Err(Error::Domain(format!(
                "truncation threshold must be positive, got {trunc_eps}"
            )));
        }
        let eta = -0.5 * (p * q).ln();
        let m = p.norm().max(q.norm());
        let len = ((TABLE_TARGET.ln() / (2.0 * m.ln())).ceil() as usize + 2).min(TABLE_CAP);
        let p_even = even_powers(p, len);
        let q_even = even_powers(q, len);
        let (g_p, _) = g_euler_with(p, trunc_eps)?;
        let (g_q, _) = g_euler_with(q, trunc_eps)?;
        Ok(Self {
            p,
            q,
            eta,
            trunc_eps,
            p_even,
            q_even,
            g_p,
            g_q,
        })
    }

    pub fn p(&self) -> Complex64 {
        self.p
    }

    pub fn q(&self) -> Complex64 {
        self.q
    }

    /// Crossing parameter; `exp(-2 eta) = p q`.
    pub fn eta(&self) -> Complex64 {
        self.eta
    }

    pub fn trunc_eps(&self) -> f64 {
        self.trunc_eps
    }

    /// `G(p) G(q)`, the normalisation shared by `kappa_s` and the Rains integral.
    pub fn g_product(&self) -> Complex64 {
        self.g_p * self.g_q
    }

    /// Both nomes are real (imaginary parts exactly zero).
    pub fn is_real(&self) -> bool {
        self.p.im == 0.0 && self.q.im == 0.0
    }

    /// Same nomes with `p` and `q` exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            p: self.q,
            q: self.p,
            eta: self.eta,
            trunc_eps: self.trunc_eps,
            p_even: self.q_even.clone(),
            q_even: self.p_even.clone(),
            g_p: self.g_q,
            g_q: self.g_p,
        }
    }

    fn pole_threshold(&self) -> f64 {
        POLE_FACTOR * self.trunc_eps
    }

    fn max_modulus(&self) -> f64 {
        self.p.norm().max(self.q.norm())
    }

    #[inline]
    fn p2(&self, j: usize) -> Complex64 {
        match self.p_even.get(j) {
            Some(v) => *v,
            None => self.p.powi(2 * j as i32),
        }
    }

    #[inline]
    fn q2(&self, k: usize) -> Complex64 {
        match self.q_even.get(k) {
            Some(v) => *v,
            None => self.q.powi(2 * k as i32),
        }
    }

    /// Visit `p^{2j} q^{2k}` in shell order until the tail bound
    /// `(s+1) m^{2s} spread / (1-m^2)^2` drops below `trunc_eps`.
    fn for_each_shell<F>(&self, spread: f64, mut visit: F) -> Result<()>
    where
        F: FnMut(Complex64) -> Result<()>,
    {
        let m2 = self.max_modulus().powi(2);
        let tail = 1.0 / ((1.0 - m2) * (1.0 - m2));
        let mut m2s = 1.0;
        for s in 0..MAX_SHELLS {
            if (s as f64 + 1.0) * m2s * spread * tail < self.trunc_eps {
                return Ok(());
            }
            for j in 0..=s {
                visit(self.p2(j) * self.q2(s - j))?;
            }
            m2s *= m2;
        }
        Err(Error::NotConverged { terms: MAX_SHELLS })
    }
}

fn even_powers(x: Complex64, len: usize) -> Vec<Complex64> {
    let x2 = x * x;
    let mut out = Vec::with_capacity(len);
    let mut acc = ONE;
    for _ in 0..len {
        out.push(acc);
        acc *= x2;
    }
    out
}

fn finite(z: Complex64, what: &'static str) -> Result<Complex64> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(z)
    } else {
        Err(Error::NonFinite(what))
    }
}

/// `G(z) = prod_{k >= 1} (1 - z^{2k})` at the default truncation.
pub fn g_euler(z: Complex64) -> Result<Complex64> {
    g_euler_with(z, DEFAULT_TRUNC_EPS).map(|(v, _)| v)
}

/// `G(z)` together with the number of factors used.
pub fn g_euler_with(z: Complex64, trunc_eps: f64) -> Result<(Complex64, usize)> {
    let r2 = z.norm_sqr();
    if !(r2 < 1.0) {
        return Err(Error::Domain(format!("G(z) requires |z| < 1, got {z}")));
    }
    let z2 = z * z;
    let stop = trunc_eps * (1.0 - r2);
    let mut power = z2;
    let mut modulus = r2;
    let mut value = ONE;
    let mut factors = 0;
    while modulus >= stop {
        value *= ONE - power;
        power *= z2;
        modulus *= r2;
        factors += 1;
        if factors > MAX_SERIES_TERMS {
            return Err(Error::NotConverged { terms: factors });
        }
    }
    Ok((finite(value, "g_euler")?, factors))
}

/// The elliptic gamma function in additive normalisation,
/// `prod_{j,k} (1 - e^{2iz} q^{2j+1} p^{2k+1}) / (1 - e^{-2iz} q^{2j+1} p^{2k+1})`.
///
/// Valid for every `z` off the pole lattice `Im z >= Re eta`.
pub fn phi(z: Complex64, nomes: &EllipticNomes) -> Result<Complex64> {
    phi_ratio(z, nomes, false)
}

/// `1 / phi(z)`, computed as a product so that zeros come out exactly.
pub fn phi_recip(z: Complex64, nomes: &EllipticNomes) -> Result<Complex64> {
    phi_ratio(z, nomes, true)
}

fn phi_ratio(z: Complex64, nomes: &EllipticNomes, invert: bool) -> Result<Complex64> {
    let w = (2.0 * I * z).exp();
    let w_inv = (-2.0 * I * z).exp();
    let pq = nomes.p * nomes.q;
    let spread = pq.norm() * (w.norm() + w_inv.norm());
    let threshold = nomes.pole_threshold();
    let mut num = ONE;
    let mut den = ONE;
    nomes.for_each_shell(spread, |c| {
        let c = c * pq;
        let (top, bottom) = if invert {
            (ONE - w_inv * c, ONE - w * c)
        } else {
            (ONE - w * c, ONE - w_inv * c)
        };
        if bottom.norm() < threshold {
            return Err(Error::Pole(format!("phi: z = {z} lies on the pole lattice")));
        }
        num *= top;
        den *= bottom;
        Ok(())
    })?;
    finite(num / den, "phi")
}

/// Exponential form of `phi`, valid strictly inside `|Im z| < Re eta`.
pub fn phi_series(z: Complex64, nomes: &EllipticNomes) -> Result<Complex64> {
    let re_eta = nomes.eta.re;
    if !(z.im.abs() < re_eta - nomes.trunc_eps) {
        return Err(Error::StripViolation {
            im: z.im,
            re_eta,
        });
    }
    let pq = nomes.p * nomes.q;
    let down = (-2.0 * I * z).exp();
    let up = (2.0 * I * z).exp();
    let ratio = pq.norm() * down.norm().max(up.norm());
    let (p2, q2) = (nomes.p * nomes.p, nomes.q * nomes.q);
    let (p2n, q2n) = (p2.norm(), q2.norm());

    let mut sum = Complex64::new(0.0, 0.0);
    let mut pq_k = ONE;
    let mut down_k = ONE;
    let mut up_k = ONE;
    let mut p2_k = ONE;
    let mut q2_k = ONE;
    let mut bound = 1.0;
    let (mut p2n_k, mut q2n_k) = (1.0, 1.0);
    for k in 1..=MAX_SERIES_TERMS {
        pq_k *= pq;
        down_k *= down;
        up_k *= up;
        p2_k *= p2;
        q2_k *= q2;
        bound *= ratio;
        p2n_k *= p2n;
        q2n_k *= q2n;
        let kf = k as f64;
        sum += pq_k * (down_k - up_k) / (kf * (ONE - q2_k) * (ONE - p2_k));
        let tail = 2.0 * bound / (kf * (1.0 - q2n_k) * (1.0 - p2n_k) * (1.0 - ratio));
        if tail < nomes.trunc_eps {
            return finite(sum.exp(), "phi_series");
        }
    }
    Err(Error::NotConverged {
        terms: MAX_SERIES_TERMS,
    })
}

/// Standard elliptic gamma function
/// `Gamma(z; p^2, q^2) = prod_{j,k} (1 - p^{2j+2} q^{2k+2} / z) / (1 - p^{2j} q^{2k} z)`.
pub fn elliptic_gamma(z: Complex64, nomes: &EllipticNomes) -> Result<Complex64> {
    gamma_ratio(z, nomes, false)
}

/// `1 / Gamma(z; p^2, q^2)`; exactly zero at the poles of `Gamma` such as `z = 1`.
pub fn elliptic_gamma_recip(z: Complex64, nomes: &EllipticNomes) -> Result<Complex64> {
    gamma_ratio(z, nomes, true)
}

fn gamma_ratio(z: Complex64, nomes: &EllipticNomes, invert: bool) -> Result<Complex64> {
    if z.norm() == 0.0 {
        return Err(Error::Domain("elliptic gamma is undefined at z = 0".into()));
    }
    let pq = nomes.p * nomes.q;
    let pq2 = pq * pq;
    let z_inv = z.inv();
    let spread = z.norm() + pq2.norm() * z_inv.norm();
    let threshold = nomes.pole_threshold();
    let mut num = ONE;
    let mut den = ONE;
    nomes.for_each_shell(spread, |c| {
        let a = ONE - pq2 * c * z_inv;
        let b = ONE - c * z;
        let (top, bottom) = if invert { (b, a) } else { (a, b) };
        if bottom.norm() < threshold {
            return Err(Error::Pole(format!(
                "elliptic gamma: z = {z} hits the {} lattice",
                if invert { "zero" } else { "pole" }
            )));
        }
        num *= top;
        den *= bottom;
        Ok(())
    })?;
    finite(num / den, "elliptic_gamma")
}

/// `n! (pi / (G(q) G(p)))^{n-1}`.
pub fn kappa_s(n: usize, nomes: &EllipticNomes) -> Result<Complex64> {
    if n < 2 {
        return Err(Error::Precondition(format!("kappa_s needs n >= 2, got {n}")));
    }
    let factorial: f64 = (2..=n).map(|k| k as f64).product();
    let base = Complex64::new(PI, 0.0) / nomes.g_product();
    finite(factorial * base.powi(n as i32 - 1), "kappa_s")
}

/// Single-spin factor `S(x) = kappa_s^{-1} prod_{j != k} phi(x_j - x_k + i eta)^{-1}`.
///
/// Vanishes exactly when two components coincide modulo `pi`.
pub fn single_spin_s(x: &Spin, nomes: &EllipticNomes) -> Result<Complex64> {
    single_spin_s_raw(x.components(), nomes)
}

pub(crate) fn single_spin_s_raw(x: &[f64], nomes: &EllipticNomes) -> Result<Complex64> {
    let n = x.len();
    let kappa = kappa_s(n, nomes)?;
    let threshold = nomes.pole_threshold();
    let shift = I * nomes.eta;
    let mut acc = ONE;
    for (j, &xj) in x.iter().enumerate() {
        for (k, &xk) in x.iter().enumerate() {
            if j == k {
                continue;
            }
            let d = xj - xk;
            if (ONE - Complex64::from_polar(1.0, 2.0 * d)).norm() < threshold {
                return Ok(Complex64::new(0.0, 0.0));
            }
            acc *= phi_recip(Complex64::new(d, 0.0) + shift, nomes)?;
        }
    }
    finite(acc / kappa, "single_spin_s")
}

/// `S(x)` through the multiplicative form
/// `kappa_s^{-1} (prod_{j != k} Gamma(z_j / z_k))^{-1}` with `z_j = e^{2 i x_j}`.
pub fn single_spin_s_via_gamma(x: &Spin, nomes: &EllipticNomes) -> Result<Complex64> {
    let comps = x.components();
    let kappa = kappa_s(comps.len(), nomes)?;
    let mut acc = ONE;
    for (j, &xj) in comps.iter().enumerate() {
        for (k, &xk) in comps.iter().enumerate() {
            if j != k {
                acc *= elliptic_gamma_recip(Complex64::from_polar(1.0, 2.0 * (xj - xk)), nomes)?;
            }
        }
    }
    finite(acc / kappa, "single_spin_s_via_gamma")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn nomes(p: f64, q: f64) -> EllipticNomes {
        EllipticNomes::real(p, q).unwrap()
    }

    // Naive double product, independent of the shell machinery.
    fn phi_oracle(z: Complex64, p: f64, q: f64) -> Complex64 {
        let w = (2.0 * I * z).exp();
        let mut v = ONE;
        for j in 0..60 {
            for k in 0..60 {
                let c = q.powi(2 * j + 1) * p.powi(2 * k + 1);
                if c < 1e-20 {
                    continue;
                }
                v *= (ONE - w * c) / (ONE - c / w);
            }
        }
        v
    }

    #[test]
    fn nome_validation() {
        assert!(EllipticNomes::real(0.0, 0.3).is_err());
        assert!(EllipticNomes::real(0.3, 1.0).is_err());
        assert!(EllipticNomes::with_trunc_eps(c(0.2, 0.0), c(0.2, 0.0), 0.0).is_err());
        let n = nomes(0.2, 0.3);
        let back = (-2.0 * n.eta()).exp();
        assert!((back - c(0.06, 0.0)).norm() < 1e-16);
        assert!(n.eta().im.abs() < 1e-16 && n.eta().re > 0.0);
    }

    #[test]
    fn g_euler_values() {
        assert_eq!(g_euler(c(0.0, 0.0)).unwrap(), ONE);
        assert!(g_euler(c(1.0, 0.0)).is_err());

        let mut oracle = 1.0f64;
        let mut zk = 0.25f64;
        for _ in 0..1_000_000 {
            if zk < 1e-18 {
                break;
            }
            oracle *= 1.0 - zk;
            zk *= 0.25;
        }
        let g = g_euler(c(0.5, 0.0)).unwrap();
        assert!((g.re - oracle).abs() < 1e-15 && g.im == 0.0);

        let (slow, factors) = g_euler_with(c(0.99, 0.0), DEFAULT_TRUNC_EPS).unwrap();
        let mut oracle = 1.0f64;
        let mut zk = 0.99f64 * 0.99;
        for _ in 0..1_000_000 {
            if zk < 1e-22 {
                break;
            }
            oracle *= 1.0 - zk;
            zk *= 0.99 * 0.99;
        }
        assert!(factors > 1000);
        assert!(((slow.re - oracle) / oracle).abs() < 1e-11, "{slow} {oracle}");
    }

    #[test]
    fn phi_basic_values() {
        let n = nomes(0.2, 0.2);
        assert!((phi(c(0.0, 0.0), &n).unwrap() - ONE).norm() < 1e-15);
        let z = c(0.3, 0.1);
        let shifted = phi(z + PI, &n).unwrap();
        assert!((shifted - phi(z, &n).unwrap()).norm() < 1e-13);
        let v = phi(c(0.7, 0.0), &n).unwrap();
        assert!((v - phi_oracle(c(0.7, 0.0), 0.2, 0.2)).norm() < 1e-14);
    }

    #[test]
    fn phi_pole_is_reported() {
        let n = nomes(0.2, 0.2);
        // The leading denominator factor vanishes at z = i eta.
        let err = phi(Complex64::new(0.0, n.eta().re), &n).unwrap_err();
        assert!(matches!(err, Error::Pole(_)));
    }

    #[test]
    fn phi_series_agrees_and_respects_strip() {
        let n = nomes(0.2, 0.2);
        assert!((phi_series(c(0.0, 0.0), &n).unwrap() - ONE).norm() < 1e-15);
        let a = phi_series(c(0.7, 0.0), &n).unwrap();
        let b = phi(c(0.7, 0.0), &n).unwrap();
        assert!((a - b).norm() < 1e-12);
        let edge = c(0.1, n.eta().re);
        assert!(matches!(
            phi_series(edge, &n),
            Err(Error::StripViolation { .. })
        ));
    }

    #[test]
    fn gamma_examples() {
        let n = nomes(0.2, 0.3);
        let pq = n.p() * n.q();
        assert!((elliptic_gamma(pq, &n).unwrap() - ONE).norm() < 1e-15);
        assert!(matches!(
            elliptic_gamma(c(0.0, 0.0), &n),
            Err(Error::Domain(_))
        ));
        assert!(matches!(elliptic_gamma(ONE, &n), Err(Error::Pole(_))));
        assert_eq!(elliptic_gamma_recip(ONE, &n).unwrap(), c(0.0, 0.0));

        let n = nomes(0.25, 0.25);
        let x = 0.4;
        let arg = n.p() * n.q() * Complex64::from_polar(1.0, -2.0 * x);
        let bridge = elliptic_gamma(arg, &n).unwrap();
        assert!((bridge - phi(c(x, 0.0), &n).unwrap()).norm() < 1e-14);
    }

    #[test]
    fn gamma_degenerates_to_q_pochhammer() {
        let n = nomes(1e-8, 0.4);
        let z = c(0.3, 0.0);
        let mut poch = ONE;
        let mut qk = 1.0;
        while qk > 1e-25 {
            poch *= ONE - qk * z;
            qk *= 0.16;
        }
        let g = elliptic_gamma(z, &n).unwrap();
        assert!((g - poch.inv()).norm() < 1e-12);
    }

    #[test]
    fn kappa_values() {
        let tiny = nomes(1e-12, 1e-12);
        assert!((kappa_s(2, &tiny).unwrap() - c(2.0 * PI, 0.0)).norm() < 1e-12);
        let n = nomes(0.2, 0.2);
        let g = g_euler(c(0.2, 0.0)).unwrap().re;
        let expected = 6.0 * (PI / (g * g)).powi(2);
        assert!((kappa_s(3, &n).unwrap().re - expected).abs() < 1e-12 * expected);
        assert!(matches!(kappa_s(1, &n), Err(Error::Precondition(_))));
    }

    #[test]
    fn single_spin_routes_agree() {
        let n = nomes(0.2, 0.2);
        let x = Spin::new(vec![0.8, PI - 0.8]).unwrap();
        let a = single_spin_s(&x, &n).unwrap();
        let b = single_spin_s_via_gamma(&x, &n).unwrap();
        assert!((a - b).norm() < 1e-12 * a.norm().max(1.0));
        assert!(a.im.abs() < 1e-13 && a.re > 0.0);

        let coincident = Spin::new(vec![1.0, 1.0, PI - 2.0]).unwrap();
        assert_eq!(single_spin_s(&coincident, &n).unwrap(), c(0.0, 0.0));
    }
}
