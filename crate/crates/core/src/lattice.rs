//! Continuous-spin edge model: spins, Boltzmann weights, four-edge stars and
//! small-lattice partition functions.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_torus, QuadratureReport, QuadratureSpec};
use crate::special::{phi, single_spin_s_raw, EllipticNomes};

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const SUM_TOL: f64 = 1e-12;

/// Reduce an angle into `[0, pi)`.
pub fn reduce_mod_pi(x: f64) -> f64 {
    let r = x.rem_euclid(PI);
    if r >= PI {
        0.0
    } else {
        r
    }
}

/// An `n`-component spin on the torus: components in `[0, pi)` summing to
/// zero modulo `pi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Spin {
    components: Vec<f64>,
}

impl Spin {
    pub fn new(components: Vec<f64>) -> Result<Self> {
        if components.len() < 2 {
            return Err(Error::Precondition(format!(
                "a spin needs n >= 2 components, got {}",
                components.len()
            )));
        }
        if let Some(bad) = components.iter().find(|x| !(**x >= 0.0 && **x < PI)) {
            return Err(Error::Domain(format!("spin component {bad} is outside [0, pi)")));
        }
        let sum: f64 = components.iter().sum();
        let off = sum - PI * (sum / PI).round();
        if off.abs() > SUM_TOL {
            return Err(Error::Domain(format!(
                "spin components sum to {sum}, not a multiple of pi"
            )));
        }
        Ok(Self { components })
    }

    /// Build a spin from its first `n - 1` components; the last one is fixed
    /// by the zero-sum constraint.
    pub fn from_free(free: &[f64]) -> Result<Self> {
        if free.is_empty() {
            return Err(Error::Precondition("a spin needs n >= 2 components".into()));
        }
        Ok(Self {
            components: complete_spin(free),
        })
    }

    pub fn zero(n: usize) -> Result<Self> {
        Self::new(vec![0.0; n])
    }

    pub fn n(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[f64] {
        &self.components
    }

    /// The spin with every component negated (mod `pi`).
    pub fn negated(&self) -> Self {
        Self {
            components: self.components.iter().map(|x| reduce_mod_pi(-x)).collect(),
        }
    }
}

impl TryFrom<Vec<f64>> for Spin {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Spin::new(v)
    }
}

impl From<Spin> for Vec<f64> {
    fn from(s: Spin) -> Self {
        s.components
    }
}

pub(crate) fn complete_spin(free: &[f64]) -> Vec<f64> {
    let mut comps: Vec<f64> = free.iter().map(|&x| reduce_mod_pi(x)).collect();
    let sum: f64 = free.iter().sum();
    comps.push(reduce_mod_pi(-sum));
    comps
}

/// Rapidities of the two horizontal (`u`, `u'`) and two vertical (`v`, `v'`)
/// line families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RapidityData {
    pub u: f64,
    pub u_prime: f64,
    pub v: f64,
    pub v_prime: f64,
}

impl RapidityData {
    /// `[u - v, u' - v', u' - v, u - v']`.
    pub fn alphas(&self) -> [f64; 4] {
        [
            self.u - self.v,
            self.u_prime - self.v_prime,
            self.u_prime - self.v,
            self.u - self.v_prime,
        ]
    }

    /// All four spectral differences must lie in `(0, eta)`.
    pub fn check_regime(&self, eta: f64) -> Result<()> {
        for (i, a) in self.alphas().iter().enumerate() {
            if !(*a > 0.0 && *a < eta) {
                return Err(Error::Precondition(format!(
                    "alpha_{} = {a} is outside (0, eta = {eta})",
                    i + 1
                )));
            }
        }
        Ok(())
    }

    /// Swap `u <-> u'` and `v <-> v'`.
    pub fn swapped(&self) -> Self {
        Self {
            u: self.u_prime,
            u_prime: self.u,
            v: self.v_prime,
            v_prime: self.v,
        }
    }
}

/// Normalisation `kappa_n(alpha)` of the edge weights. It cancels from every
/// identity checked here, so it is pluggable.
#[derive(Clone, Copy)]
pub struct Kappa {
    name: &'static str,
    f: fn(f64) -> Complex64,
}

impl Kappa {
    pub const UNIT: Kappa = Kappa {
        name: "unit",
        f: |_| ONE,
    };
    pub const EXPONENTIAL: Kappa = Kappa {
        name: "exp",
        f: |a| Complex64::new(a.exp(), 0.0),
    };

    pub fn custom(name: &'static str, f: fn(f64) -> Complex64) -> Self {
        Self { name, f }
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn eval(&self, alpha: f64) -> Complex64 {
        (self.f)(alpha)
    }
}

impl Default for Kappa {
    fn default() -> Self {
        Kappa::UNIT
    }
}

impl fmt::Debug for Kappa {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Kappa({})", self.name)
    }
}

/// Rapidities, corner spins and nomes of a four-edge star.
#[derive(Debug, Clone)]
pub struct StarConfig {
    pub rap: RapidityData,
    pub a: Spin,
    pub b: Spin,
    pub c: Spin,
    pub d: Spin,
    pub nomes: EllipticNomes,
    pub kappa: Kappa,
}

impl StarConfig {
    pub fn n(&self) -> usize {
        self.a.n()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.a.n();
        for s in [&self.b, &self.c, &self.d] {
            if s.n() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: s.n(),
                });
            }
        }
        if !self.nomes.is_real() {
            return Err(Error::Branch(
                "star weights are supported for real nomes only".into(),
            ));
        }
        self.rap.check_regime(self.nomes.eta().re)
    }
}

fn check_same_n(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    Ok(())
}

/// `W_alpha(x, y) = kappa(alpha)^{-1} prod_{j,k} phi(x_j - y_k + i alpha)`.
pub fn weight_w(
    alpha: f64,
    x: &Spin,
    y: &Spin,
    nomes: &EllipticNomes,
    kappa: &Kappa,
) -> Result<Complex64> {
    weight_w_raw(alpha, x.components(), y.components(), nomes, kappa)
}

pub(crate) fn weight_w_raw(
    alpha: f64,
    x: &[f64],
    y: &[f64],
    nomes: &EllipticNomes,
    kappa: &Kappa,
) -> Result<Complex64> {
    check_same_n(x, y)?;
    let re_eta = nomes.eta().re;
    if !(alpha.abs() < re_eta) {
        return Err(Error::Precondition(format!(
            "weight W needs |alpha| < Re eta = {re_eta}, got {alpha}"
        )));
    }
    let mut acc = ONE;
    for &xj in x {
        for &yk in y {
            acc *= phi(Complex64::new(xj - yk, alpha), nomes)?;
        }
    }
    Ok(acc / kappa.eval(alpha))
}

/// `Wbar_alpha(x, y) = sqrt(S(x) S(y)) W_{eta - alpha}(x, y)`, for real nomes
/// and `0 < alpha < eta`.
pub fn weight_wbar(
    alpha: f64,
    x: &Spin,
    y: &Spin,
    nomes: &EllipticNomes,
    kappa: &Kappa,
) -> Result<Complex64> {
    weight_wbar_raw(alpha, x.components(), y.components(), nomes, kappa)
}

pub(crate) fn weight_wbar_raw(
    alpha: f64,
    x: &[f64],
    y: &[f64],
    nomes: &EllipticNomes,
    kappa: &Kappa,
) -> Result<Complex64> {
    check_same_n(x, y)?;
    if !nomes.is_real() {
        return Err(Error::Branch("Wbar needs real nomes".into()));
    }
    let eta = nomes.eta().re;
    if !(alpha > 0.0 && alpha < eta) {
        return Err(Error::Precondition(format!(
            "weight Wbar needs 0 < alpha < eta = {eta}, got {alpha}"
        )));
    }
    let root = sqrt_s_product(x, y, nomes)?;
    if root == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    Ok(weight_w_raw(eta - alpha, x, y, nomes, kappa)? * root)
}

/// Principal `sqrt(S(x) S(y))`, refusing anything that is not numerically a
/// nonnegative real.
pub(crate) fn sqrt_s_product(x: &[f64], y: &[f64], nomes: &EllipticNomes) -> Result<f64> {
    let sx = real_nonnegative(single_spin_s_raw(x, nomes)?)?;
    let sy = real_nonnegative(single_spin_s_raw(y, nomes)?)?;
    Ok((sx * sy).sqrt())
}

fn real_nonnegative(s: Complex64) -> Result<f64> {
    let scale = s.norm();
    if s.im.abs() > 1e-10 * scale || s.re < -1e-10 * scale {
        return Err(Error::Branch(format!(
            "single-spin factor {s} is not a nonnegative real"
        )));
    }
    Ok(s.re.max(0.0))
}

/// The four edge types of the lattice, in the order their factors are
/// multiplied into every star and partition-function integrand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EdgeKind {
    /// `Wbar_{u-v}(black, white)`
    BarUV,
    /// `Wbar_{u'-v'}(black, white)`
    BarUpVp,
    /// `W_{u'-v}(white, black)`
    WUpV,
    /// `W_{u-v'}(white, black)`
    WUVp,
}

impl EdgeKind {
    /// Edge type from the lattice step leading from the white to the black end.
    pub fn from_step(dx: i64, dy: i64) -> Option<Self> {
        match (dx, dy) {
            (1, -1) => Some(EdgeKind::WUVp),
            (-1, 1) => Some(EdgeKind::WUpV),
            (-1, -1) => Some(EdgeKind::BarUV),
            (1, 1) => Some(EdgeKind::BarUpVp),
            _ => None,
        }
    }

    fn factor(
        self,
        white: &[f64],
        black: &[f64],
        rap: &RapidityData,
        nomes: &EllipticNomes,
        kappa: &Kappa,
    ) -> Result<Complex64> {
        let [a1, a2, a3, a4] = rap.alphas();
        match self {
            EdgeKind::BarUV => weight_wbar_raw(a1, black, white, nomes, kappa),
            EdgeKind::BarUpVp => weight_wbar_raw(a2, black, white, nomes, kappa),
            EdgeKind::WUpV => weight_w_raw(a3, white, black, nomes, kappa),
            EdgeKind::WUVp => weight_w_raw(a4, white, black, nomes, kappa),
        }
    }
}

/// Which colour the centre of a four-edge star has.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SiteColor {
    White,
    Black,
}

impl SiteColor {
    fn other(self) -> Self {
        match self {
            SiteColor::White => SiteColor::Black,
            SiteColor::Black => SiteColor::White,
        }
    }
}

/// Corner spins `(neighbour, kind)` of a star in factor order.
fn star_edges(cfg: &StarConfig, centre: SiteColor) -> [(&Spin, EdgeKind); 4] {
    match centre {
        SiteColor::White => [
            (&cfg.c, EdgeKind::BarUV),
            (&cfg.b, EdgeKind::BarUpVp),
            (&cfg.a, EdgeKind::WUpV),
            (&cfg.d, EdgeKind::WUVp),
        ],
        SiteColor::Black => [
            (&cfg.b, EdgeKind::BarUV),
            (&cfg.c, EdgeKind::BarUpVp),
            (&cfg.d, EdgeKind::WUpV),
            (&cfg.a, EdgeKind::WUVp),
        ],
    }
}

fn star_integrand(cfg: &StarConfig, centre: SiteColor, free: &[f64]) -> Result<Complex64> {
    let x = complete_spin(free);
    star_edges(cfg, centre)
        .iter()
        .try_fold(ONE, |acc, (corner, kind)| {
            let f = match centre {
                SiteColor::White => kind.factor(&x, corner.components(), &cfg.rap, &cfg.nomes, &cfg.kappa),
                SiteColor::Black => kind.factor(corner.components(), &x, &cfg.rap, &cfg.nomes, &cfg.kappa),
            }?;
            Ok(acc * f)
        })
}

fn star(cfg: &StarConfig, centre: SiteColor, spec: &QuadratureSpec) -> Result<QuadratureReport> {
    cfg.validate()?;
    let spec = spec.with_dims(cfg.n() - 1)?;
    integrate_torus(|free| star_integrand(cfg, centre, free), &spec)
}

/// White-centred star
/// `V1 = int dx Wbar_{u-v}(c,x) Wbar_{u'-v'}(b,x) W_{u'-v}(x,a) W_{u-v'}(x,d)`.
///
/// The quadrature dimension is always `n - 1`; `spec.dims` is ignored.
pub fn star_v1(cfg: &StarConfig, spec: &QuadratureSpec) -> Result<QuadratureReport> {
    star(cfg, SiteColor::White, spec)
}

/// Black-centred star
/// `V2 = int dy Wbar_{u-v}(y,b) Wbar_{u'-v'}(y,c) W_{u'-v}(d,y) W_{u-v'}(a,y)`.
pub fn star_v2(cfg: &StarConfig, spec: &QuadratureSpec) -> Result<QuadratureReport> {
    star(cfg, SiteColor::Black, spec)
}

/// Both sides of the star-star relation.
#[derive(Debug, Clone, Copy)]
pub struct StarStarReport {
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub v1: QuadratureReport,
    pub v2: QuadratureReport,
    pub residual: f64,
}

/// `|a - b| / max(|a|, |b|)`, zero when both vanish.
pub fn relative_residual(a: Complex64, b: Complex64) -> f64 {
    let scale = a.norm().max(b.norm());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).norm() / scale
    }
}

pub fn star_star(cfg: &StarConfig, spec: &QuadratureSpec) -> Result<StarStarReport> {
    cfg.validate()?;
    let eta = cfg.nomes.eta().re;
    let RapidityData {
        u,
        u_prime,
        v,
        v_prime,
    } = cfg.rap;
    let (dv, du) = (v_prime - v, u_prime - u);
    if !(dv.abs() < eta && du.abs() < eta) {
        return Err(Error::Precondition(format!(
            "outer weights need |v'-v| = {} and |u'-u| = {} below eta = {eta}",
            dv.abs(),
            du.abs()
        )));
    }
    let (nomes, kappa) = (&cfg.nomes, &cfg.kappa);
    let v1 = star_v1(cfg, spec)?;
    let v2 = star_v2(cfg, spec)?;
    let lhs = weight_w(dv, &cfg.d, &cfg.c, nomes, kappa)?
        * weight_w(du, &cfg.d, &cfg.b, nomes, kappa)?
        * v1.value;
    let rhs = weight_w(dv, &cfg.b, &cfg.a, nomes, kappa)?
        * weight_w(du, &cfg.c, &cfg.a, nomes, kappa)?
        * v2.value;
    Ok(StarStarReport {
        lhs,
        rhs,
        v1,
        v2,
        residual: relative_residual(lhs, rhs),
    })
}

/// Relative mismatch of the two sides of the star-star relation.
pub fn star_star_residual(cfg: &StarConfig, spec: &QuadratureSpec) -> Result<f64> {
    star_star(cfg, spec).map(|r| r.residual)
}

/// Largest number of integrated sites a patch may have.
pub const MAX_INTERNAL_SITES: usize = 3;
/// Largest value of `n * internal sites`.
pub const MAX_SPIN_DOF: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SiteRef {
    Boundary(usize),
    Internal(usize),
}

#[derive(Debug, Clone, Copy)]
struct Edge {
    kind: EdgeKind,
    white: SiteRef,
    black: SiteRef,
}

/// A rectangular window of the diagonal square lattice.
///
/// Sites sit at integer points `(col, row)` with `col + row` even, inside
/// `0 <= col < width`, `0 <= row < height`. Rows alternate colour starting
/// with `bottom` at row 0. Sites whose four diagonal neighbours all lie in the
/// window are integrated over; the rest carry fixed boundary spins, listed in
/// row-major order (row 0 first, columns ascending).
#[derive(Debug, Clone)]
pub struct LatticePatch {
    width: usize,
    height: usize,
    bottom: SiteColor,
    boundary_sites: Vec<(usize, usize)>,
    internal_sites: Vec<(usize, usize)>,
    edges: Vec<Edge>,
}

impl LatticePatch {
    pub fn new(width: usize, height: usize, bottom: SiteColor) -> Result<Self> {
        let mut boundary_sites = Vec::new();
        let mut internal_sites = Vec::new();
        for row in 0..height {
            for col in (row % 2..width).step_by(2) {
                let interior = col >= 1 && row >= 1 && col + 1 < width && row + 1 < height;
                if interior {
                    internal_sites.push((col, row));
                } else {
                    boundary_sites.push((col, row));
                }
            }
        }
        if internal_sites.is_empty() {
            return Err(Error::Precondition(format!(
                "a {width}x{height} patch has no internal site"
            )));
        }
        if internal_sites.len() > MAX_INTERNAL_SITES {
            return Err(Error::Precondition(format!(
                "{} internal sites exceed the desk-scale limit of {MAX_INTERNAL_SITES}",
                internal_sites.len()
            )));
        }

        let color = |row: usize| if row.is_multiple_of(2) { bottom } else { bottom.other() };
        let lookup = |site: (usize, usize)| -> SiteRef {
            match internal_sites.iter().position(|&s| s == site) {
                Some(i) => SiteRef::Internal(i),
                None => SiteRef::Boundary(
                    boundary_sites
                        .iter()
                        .position(|&s| s == site)
                        .expect("every lattice site is internal or boundary"),
                ),
            }
        };
        let mut edges = Vec::new();
        for row in 0..height {
            if color(row) != SiteColor::White {
                continue;
            }
            for col in (row % 2..width).step_by(2) {
                for (dx, dy) in [(-1i64, -1i64), (1, -1), (-1, 1), (1, 1)] {
                    let (nc, nr) = (col as i64 + dx, row as i64 + dy);
                    if nc < 0 || nr < 0 || nc >= width as i64 || nr >= height as i64 {
                        continue;
                    }
                    let kind = EdgeKind::from_step(dx, dy).expect("diagonal step");
                    edges.push(Edge {
                        kind,
                        white: lookup((col, row)),
                        black: lookup((nc as usize, nr as usize)),
                    });
                }
            }
        }
        edges.sort_by_key(|e| e.kind);
        Ok(Self {
            width,
            height,
            bottom,
            boundary_sites,
            internal_sites,
            edges,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bottom(&self) -> SiteColor {
        self.bottom
    }

    pub fn boundary_sites(&self) -> &[(usize, usize)] {
        &self.boundary_sites
    }

    pub fn internal_sites(&self) -> &[(usize, usize)] {
        &self.internal_sites
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }
}

/// Partition function of a lattice patch with fixed boundary spins: the
/// product of all edge weights integrated over every internal spin.
pub fn partition_function(
    patch: &LatticePatch,
    boundary: &[Spin],
    rap: &RapidityData,
    nomes: &EllipticNomes,
    kappa: &Kappa,
    spec: &QuadratureSpec,
) -> Result<QuadratureReport> {
    if boundary.len() != patch.boundary_sites.len() {
        return Err(Error::DimensionMismatch {
            expected: patch.boundary_sites.len(),
            got: boundary.len(),
        });
    }
    let n = boundary[0].n();
    if let Some(s) = boundary.iter().find(|s| s.n() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: s.n(),
        });
    }
    let sites = patch.internal_sites.len();
    if n * sites > MAX_SPIN_DOF {
        return Err(Error::Precondition(format!(
            "n * internal sites = {} exceeds the supported limit of {MAX_SPIN_DOF}",
            n * sites
        )));
    }
    if !nomes.is_real() {
        return Err(Error::Branch("partition function needs real nomes".into()));
    }
    rap.check_regime(nomes.eta().re)?;

    let free_per_site = n - 1;
    let spec = spec.with_dims(free_per_site * sites)?;
    let integrand = |free: &[f64]| -> Result<Complex64> {
        let internal: Vec<Vec<f64>> = free
            .chunks(free_per_site)
            .map(complete_spin)
            .collect();
        let spin = |r: SiteRef| -> &[f64] {
            match r {
                SiteRef::Boundary(i) => boundary[i].components(),
                SiteRef::Internal(i) => &internal[i],
            }
        };
        patch.edges.iter().try_fold(ONE, |acc, e| {
            Ok(acc * e.kind.factor(spin(e.white), spin(e.black), rap, nomes, kappa)?)
        })
    };
    integrate_torus(integrand, &spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::single_spin_s;

    fn nomes() -> EllipticNomes {
        EllipticNomes::real(0.2, 0.2).unwrap()
    }

    fn spin2(x: f64) -> Spin {
        Spin::from_free(&[x]).unwrap()
    }

    fn config(n: usize) -> StarConfig {
        let nm = nomes();
        let eta = nm.eta().re;
        let rap = RapidityData {
            u: 0.45 * eta,
            u_prime: 0.5 * eta,
            v: 0.0,
            v_prime: 0.2 * eta,
        };
        let mk = |seed: f64| {
            let free: Vec<f64> = (0..n - 1).map(|k| seed * (k as f64 + 1.3)).collect();
            Spin::from_free(&free).unwrap()
        };
        StarConfig {
            rap,
            a: mk(0.4),
            b: mk(1.1),
            c: mk(2.3),
            d: mk(2.9),
            nomes: nm,
            kappa: Kappa::UNIT,
        }
    }

    #[test]
    fn spin_validation() {
        assert!(Spin::new(vec![0.5]).is_err());
        assert!(Spin::new(vec![0.5, 0.5]).is_err());
        assert!(Spin::new(vec![-0.1, 0.1]).is_err());
        assert!(Spin::new(vec![0.5, PI - 0.5]).is_ok());
        let s = Spin::from_free(&[4.0, -7.0]).unwrap();
        assert_eq!(s.n(), 3);
        assert!(Spin::new(s.components().to_vec()).is_ok());
        let json = serde_json::to_string(&s).unwrap();
        let back: Spin = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
        assert!(serde_json::from_str::<Spin>("[0.5, 0.5]").is_err());
    }

    #[test]
    fn weight_at_zero_angle_on_diagonal_is_one() {
        let x = Spin::from_free(&[0.3, 1.9]).unwrap();
        let w = weight_w(0.0, &x, &x, &nomes(), &Kappa::UNIT).unwrap();
        assert!((w - ONE).norm() < 1e-14);
    }

    #[test]
    fn weight_is_pi_periodic() {
        let nm = nomes();
        let x = Spin::from_free(&[0.3, 1.9]).unwrap();
        let y = Spin::from_free(&[2.2, 0.4]).unwrap();
        let shifted: Vec<f64> = x.components().iter().map(|v| v + PI).collect();
        let a = weight_w(0.4, &x, &y, &nm, &Kappa::UNIT).unwrap();
        let b = weight_w_raw(0.4, &shifted, y.components(), &nm, &Kappa::UNIT).unwrap();
        assert!((a - b).norm() < 1e-13 * a.norm());
    }

    #[test]
    fn weight_matches_direct_product() {
        let nm = nomes();
        let alpha = 0.3 * nm.eta().re;
        let x = Spin::new(vec![0.5, PI - 0.5]).unwrap();
        let y = Spin::new(vec![1.1, PI - 1.1]).unwrap();
        let mut oracle = ONE;
        for xj in x.components() {
            for yk in y.components() {
                let z = Complex64::new(xj - yk, alpha);
                let w = (Complex64::i() * 2.0 * z).exp();
                for j in 0..40 {
                    for k in 0..40 {
                        let c = 0.2f64.powi(2 * j + 1) * 0.2f64.powi(2 * k + 1);
                        oracle *= (ONE - w * c) / (ONE - c / w);
                    }
                }
            }
        }
        let w = weight_w(alpha, &x, &y, &nm, &Kappa::UNIT).unwrap();
        assert!((w - oracle).norm() < 1e-13 * oracle.norm());
    }

    #[test]
    fn weight_preconditions() {
        let nm = nomes();
        let eta = nm.eta().re;
        let x = spin2(0.3);
        let y3 = Spin::from_free(&[0.1, 0.2]).unwrap();
        assert!(matches!(
            weight_w(0.1, &x, &y3, &nm, &Kappa::UNIT),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(weight_w(eta, &x, &x, &nm, &Kappa::UNIT).is_err());
        assert!(weight_wbar(0.0, &x, &x, &nm, &Kappa::UNIT).is_err());
        let complex = EllipticNomes::new(Complex64::new(0.1, 0.1), Complex64::new(0.2, 0.0)).unwrap();
        assert!(matches!(
            weight_wbar(0.1, &x, &x, &complex, &Kappa::UNIT),
            Err(Error::Branch(_))
        ));
    }

    #[test]
    fn wbar_composes_s_and_w() {
        let nm = nomes();
        let eta = nm.eta().re;
        let x = spin2(0.7);
        let y = spin2(2.0);
        let alpha = 0.35 * eta;
        let sx = single_spin_s(&x, &nm).unwrap().re;
        let sy = single_spin_s(&y, &nm).unwrap().re;
        let w = weight_w(eta - alpha, &x, &y, &nm, &Kappa::UNIT).unwrap();
        let wbar = weight_wbar(alpha, &x, &y, &nm, &Kappa::UNIT).unwrap();
        assert!((wbar - w * (sx * sy).sqrt()).norm() < 1e-14 * wbar.norm());

        let coincident = Spin::new(vec![1.0, 1.0, PI - 2.0]).unwrap();
        let other = Spin::from_free(&[0.2, 0.9]).unwrap();
        let zero = weight_wbar(alpha, &coincident, &other, &nm, &Kappa::UNIT).unwrap();
        assert_eq!(zero, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn rapidity_regime() {
        let eta = nomes().eta().re;
        let good = RapidityData {
            u: 0.5,
            u_prime: 0.6,
            v: 0.0,
            v_prime: 0.1,
        };
        assert!(good.check_regime(eta).is_ok());
        let [a1, a2, a3, a4] = good.alphas();
        assert!((a1 + a2 - a3 - a4).abs() < 1e-15);
        let bad = RapidityData { v_prime: 0.7, ..good };
        assert!(bad.check_regime(eta).is_err());
    }

    #[test]
    fn star_integrand_is_pi_periodic() {
        let cfg = config(3);
        let free = [0.4, 2.1];
        let shifted = [0.4 + PI, 2.1 + PI];
        let a = star_integrand(&cfg, SiteColor::White, &free).unwrap();
        let b = star_integrand(&cfg, SiteColor::White, &shifted).unwrap();
        assert!((a - b).norm() < 1e-12 * a.norm());
    }

    #[test]
    fn degenerate_rapidity_pairs() {
        let mut cfg = config(2);
        let eta = cfg.nomes.eta().re;
        cfg.rap = RapidityData {
            u: 0.4 * eta,
            u_prime: 0.4 * eta,
            v: 0.0,
            v_prime: 0.0,
        };
        let spec = QuadratureSpec::fixed(1, 128).unwrap();
        let r = star_star_residual(&cfg, &spec).unwrap();
        assert!(r < 1e-12, "residual {r}");
    }

    #[test]
    fn v2_is_v1_of_negated_corners_with_swapped_rapidities() {
        let cfg = config(2);
        let mirrored = StarConfig {
            rap: cfg.rap.swapped(),
            a: cfg.a.negated(),
            b: cfg.b.negated(),
            c: cfg.c.negated(),
            d: cfg.d.negated(),
            ..cfg.clone()
        };
        let spec = QuadratureSpec::fixed(1, 64).unwrap();
        let v2 = star_v2(&cfg, &spec).unwrap().value;
        let v1 = star_v1(&mirrored, &spec).unwrap().value;
        assert!(relative_residual(v1, v2) < 1e-13);
    }

    #[test]
    fn degenerate_corners_stay_finite() {
        let mut cfg = config(3);
        let coincident = Spin::new(vec![1.0, 1.0, PI - 2.0]).unwrap();
        cfg.b = coincident.clone();
        cfg.c = coincident;
        let spec = QuadratureSpec::fixed(2, 16).unwrap();
        let v = star_v2(&cfg, &spec).unwrap().value;
        assert!(v.re.is_finite() && v.im.is_finite());
    }

    #[test]
    fn n2_star_weights_are_real() {
        let cfg = config(2);
        let spec = QuadratureSpec::fixed(1, 64).unwrap();
        for v in [star_v1(&cfg, &spec).unwrap(), star_v2(&cfg, &spec).unwrap()] {
            assert!(v.value.im.abs() < 1e-9 * v.value.re.abs());
        }
    }

    #[test]
    fn patch_geometry() {
        let single = LatticePatch::new(3, 3, SiteColor::Black).unwrap();
        assert_eq!(single.internal_sites(), &[(1, 1)]);
        assert_eq!(single.boundary_sites(), &[(0, 0), (2, 0), (0, 2), (2, 2)]);
        assert_eq!(single.edge_count(), 4);

        let two = LatticePatch::new(5, 3, SiteColor::Black).unwrap();
        assert_eq!(two.internal_sites().len(), 2);
        assert_eq!(two.edge_count(), 8);

        assert!(LatticePatch::new(2, 2, SiteColor::Black).is_err());
        assert!(LatticePatch::new(9, 3, SiteColor::Black).is_err());
    }

    #[test]
    fn measure_of_constant_is_pi_power() {
        let spec = QuadratureSpec::fixed(2, 16).unwrap();
        let r = integrate_torus(|_| Ok(ONE), &spec).unwrap();
        assert_eq!(r.value, Complex64::new(PI * PI, 0.0));
    }
}
