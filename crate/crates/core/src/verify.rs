//! Seeded verification suites behind the command-line driver.
//!
//! Every draw owns an independent random stream: a ChaCha8 generator seeded
//! with `seed_from_u64(seed)` and positioned on stream number `draw index`.
//! Draws can therefore run in any order, or in parallel, and still reproduce
//! bit for bit.

use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lattice::{
    partition_function, relative_residual, star_star, star_v1, Kappa, LatticePatch, RapidityData,
    SiteColor, Spin, StarConfig,
};
use crate::quadrature::{QuadratureReport, QuadratureSpec};
use crate::rains::{equivalence_v1, equivalence_v2, rains_transformation, rapidity_to_params, tilde_transform, w_factor_residual};
use crate::report;
use crate::special::{elliptic_gamma, phi, phi_series, EllipticNomes};

/// Rejection attempts allowed when drawing rapidities.
pub const MAX_REJECTIONS: usize = 10_000;
/// Sampling window for every spectral difference, as fractions of `eta`.
pub const ALPHA_WINDOW: (f64, f64) = (0.1, 0.9);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    EvalGamma,
    EvalPhi,
    VerifyReflection,
    VerifyRains,
    VerifyStarStar,
    VerifyChain,
    PartitionDemo,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::EvalGamma,
        Command::EvalPhi,
        Command::VerifyReflection,
        Command::VerifyRains,
        Command::VerifyStarStar,
        Command::VerifyChain,
        Command::PartitionDemo,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Command::EvalGamma => "eval-gamma",
            Command::EvalPhi => "eval-phi",
            Command::VerifyReflection => "verify-reflection",
            Command::VerifyRains => "verify-rains",
            Command::VerifyStarStar => "verify-star-star",
            Command::VerifyChain => "verify-chain",
            Command::PartitionDemo => "partition-demo",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown command `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(Error::Config(format!("unknown format `{other}`"))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Json => "json",
            Format::Csv => "csv",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub nome_p: f64,
    pub nome_q: f64,
    pub n: usize,
    pub seed: u64,
    pub draws: usize,
    pub grid_n: usize,
    pub max_grid_n: usize,
    pub rel_tol: f64,
    pub output_path: Option<PathBuf>,
    pub format: Format,
    /// Evaluate `eval-gamma` / `eval-phi` at this point instead of at seeded draws.
    pub point: Option<Complex64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: Command::VerifyReflection,
            nome_p: 0.2,
            nome_q: 0.2,
            n: 2,
            seed: 42,
            draws: 20,
            grid_n: 128,
            max_grid_n: 128,
            rel_tol: 1e-9,
            output_path: None,
            format: Format::Json,
            point: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("p", self.nome_p), ("q", self.nome_q)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Config(format!("nome {name} = {v} must lie in (0, 1)")));
            }
        }
        if self.n < 2 {
            return Err(Error::Config(format!("n must be at least 2, got {}", self.n)));
        }
        if self.draws < 1 {
            return Err(Error::Config("draws must be at least 1".into()));
        }
        if self.grid_n > self.max_grid_n {
            return Err(Error::Config(format!(
                "grid ({}) exceeds max grid ({})",
                self.grid_n, self.max_grid_n
            )));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::Config(format!("tolerance must be positive, got {}", self.rel_tol)));
        }
        self.quadrature_spec(1).map(|_| ())
    }

    pub fn nomes(&self) -> Result<EllipticNomes> {
        EllipticNomes::real(self.nome_p, self.nome_q)
    }

    /// A run with `max_grid_n == grid_n` integrates on that single grid; a
    /// larger cap doubles the grid until the quadrature estimate drops below
    /// `rel_tol`.
    pub fn quadrature_spec(&self, dims: usize) -> Result<QuadratureSpec> {
        if self.max_grid_n == self.grid_n {
            QuadratureSpec::fixed(dims, self.grid_n)
        } else {
            QuadratureSpec::new(dims, self.grid_n, self.rel_tol, self.max_grid_n)
        }
    }
}

/// A seed-derived input recorded in a report.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamValue {
    Real(f64),
    Complex(Complex64),
    Vector(Vec<f64>),
}

/// Outcome of one seeded draw.
#[derive(Debug, Clone, PartialEq)]
pub struct DrawRecord {
    pub index: usize,
    /// Seed-derived inputs, by name.
    pub params: Vec<(String, ParamValue)>,
    /// Individual identity residuals feeding `residual`.
    pub components: Vec<(String, f64)>,
    pub residual: f64,
    pub grid: usize,
    pub est_rel_err: f64,
    pub converged: bool,
    pub error: Option<String>,
    /// Informative only; excluded from determinism checks.
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub draws: usize,
    pub failures: usize,
    pub max_residual: f64,
    pub median_residual: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub config: RunConfig,
    pub draws: Vec<DrawRecord>,
    pub summary: Summary,
}

impl VerificationReport {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => report::to_json(self),
            Format::Csv => report::to_csv(self),
        }
    }

    /// `PASS max_residual=...` or `FAIL max_residual=...`.
    pub fn summary_line(&self) -> String {
        format!(
            "{} max_residual={}",
            if self.summary.pass { "PASS" } else { "FAIL" },
            report::num(self.summary.max_residual)
        )
    }
}

/// The generator for draw `index` of a run seeded with `seed`.
pub fn draw_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Random spin: `n - 1` uniform components, the last fixed by the constraint.
pub fn sample_spin<R: Rng>(rng: &mut R, n: usize) -> Result<Spin> {
    let free: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(0.0..PI)).collect();
    Spin::from_free(&free)
}

/// Draw a star configuration inside the verification regime: three spectral
/// differences uniform in `(0.1 eta, 0.9 eta)`, the fourth fixed by
/// `a1 + a2 = a3 + a4` and rejected unless it lands in the same window; the
/// gauge is `v = 0`.
pub fn sample_regime<R: Rng>(rng: &mut R, n: usize, nomes: &EllipticNomes) -> Result<StarConfig> {
    if !nomes.is_real() {
        return Err(Error::Config("regime sampling needs real nomes".into()));
    }
    let eta = nomes.eta().re;
    let (lo, hi) = (ALPHA_WINDOW.0 * eta, ALPHA_WINDOW.1 * eta);
    for _ in 0..MAX_REJECTIONS {
        let a1 = rng.gen_range(lo..hi);
        let a2 = rng.gen_range(lo..hi);
        let a3 = rng.gen_range(lo..hi);
        let a4 = a1 + a2 - a3;
        if !(a4 > lo && a4 < hi) {
            continue;
        }
        let rap = RapidityData {
            u: a1,
            u_prime: a3,
            v: 0.0,
            v_prime: a3 - a2,
        };
        return Ok(StarConfig {
            rap,
            a: sample_spin(rng, n)?,
            b: sample_spin(rng, n)?,
            c: sample_spin(rng, n)?,
            d: sample_spin(rng, n)?,
            nomes: nomes.clone(),
            kappa: Kappa::UNIT,
        });
    }
    Err(Error::RejectionLimit(MAX_REJECTIONS))
}

struct Outcome {
    params: Vec<(String, ParamValue)>,
    components: Vec<(String, f64)>,
    residual: f64,
    grid: usize,
    est_rel_err: f64,
}

fn real(name: &str, x: f64) -> (String, ParamValue) {
    (name.to_string(), ParamValue::Real(x))
}

fn complex(name: &str, z: Complex64) -> (String, ParamValue) {
    (name.to_string(), ParamValue::Complex(z))
}

fn star_params(cfg: &StarConfig) -> Vec<(String, ParamValue)> {
    let mut out = vec![
        real("u", cfg.rap.u),
        real("u_prime", cfg.rap.u_prime),
        real("v", cfg.rap.v),
        real("v_prime", cfg.rap.v_prime),
    ];
    for (name, spin) in [("a", &cfg.a), ("b", &cfg.b), ("c", &cfg.c), ("d", &cfg.d)] {
        out.push((name.to_string(), ParamValue::Vector(spin.components().to_vec())));
    }
    out
}

fn worst(reports: &[QuadratureReport]) -> (usize, f64) {
    reports.iter().fold((0, 0.0), |(g, e), r| {
        (g.max(r.points_per_dim_used), f64::max(e, r.est_rel_err))
    })
}

fn eval_point<R: Rng>(config: &RunConfig, rng: &mut R, re_eta: f64) -> Complex64 {
    config.point.unwrap_or_else(|| {
        Complex64::new(rng.gen_range(0.0..PI), rng.gen_range(-0.9..0.9) * re_eta)
    })
}

fn run_draw(config: &RunConfig, nomes: &EllipticNomes, index: usize) -> Result<Outcome> {
    let mut rng = draw_rng(config.seed, index);
    let re_eta = nomes.eta().re;
    let one = Complex64::new(1.0, 0.0);
    match config.command {
        Command::EvalGamma => {
            let z = config.point.unwrap_or_else(|| {
                Complex64::from_polar(rng.gen_range(0.1..0.9), rng.gen_range(-PI..PI))
            });
            let value = elliptic_gamma(z, nomes)?;
            let pq = nomes.p() * nomes.q();
            let mirror = elliptic_gamma(pq * pq / z, nomes)?;
            let residual = (value * mirror - one).norm();
            let params = vec![complex("z", z), complex("gamma", value)];
            Ok(Outcome {
                params,
                components: vec![("gamma_reflection".into(), residual)],
                residual,
                grid: 0,
                est_rel_err: 0.0,
            })
        }
        Command::EvalPhi => {
            let z = eval_point(config, &mut rng, re_eta);
            let value = phi(z, nomes)?;
            let series = phi_series(z, nomes)?;
            let residual = (value - series).norm();
            let params = vec![complex("z", z), complex("phi", value)];
            Ok(Outcome {
                params,
                components: vec![("series_agreement".into(), residual)],
                residual,
                grid: 0,
                est_rel_err: 0.0,
            })
        }
        Command::VerifyReflection => {
            let z = eval_point(config, &mut rng, re_eta);
            let x: f64 = rng.gen_range(0.0..PI);
            let w = Complex64::from_polar(rng.gen_range(0.1..0.9), rng.gen_range(-PI..PI));
            let pq = nomes.p() * nomes.q();
            let phi_z = phi(z, nomes)?;
            let reflection = (phi_z * phi(-z, nomes)? - one).norm();
            let periodicity = (phi(z + PI, nomes)? - phi_z).norm();
            let bridge = (phi(Complex64::new(x, 0.0), nomes)?
                - elliptic_gamma(pq * Complex64::from_polar(1.0, -2.0 * x), nomes)?)
            .norm();
            let gamma_w = elliptic_gamma(w, nomes)?;
            let gamma_reflection = (gamma_w * elliptic_gamma(pq * pq / w, nomes)? - one).norm();
            let nome_symmetry = relative_residual(gamma_w, elliptic_gamma(w, &nomes.swapped())?);
            let components = vec![
                ("reflection".to_string(), reflection),
                ("periodicity".to_string(), periodicity),
                ("bridge".to_string(), bridge),
                ("gamma_reflection".to_string(), gamma_reflection),
                ("nome_symmetry".to_string(), nome_symmetry),
            ];
            let residual = components.iter().map(|(_, r)| *r).fold(0.0, f64::max);
            let params = vec![complex("z", z), real("x", x), complex("w", w)];
            Ok(Outcome {
                params,
                components,
                residual,
                grid: 0,
                est_rel_err: 0.0,
            })
        }
        Command::VerifyRains => {
            let cfg = sample_regime(&mut rng, config.n, nomes)?;
            let params = rapidity_to_params(&cfg)?;
            let tilde = tilde_transform(&params)?;
            let spec = config.quadrature_spec(config.n - 1)?;
            let r = rains_transformation(&params, &tilde, &spec)?;
            let (grid, est_rel_err) = worst(&[r.direct, r.transformed]);
            Ok(Outcome {
                params: star_params(&cfg),
                components: vec![("rains".into(), r.residual)],
                residual: r.residual,
                grid,
                est_rel_err,
            })
        }
        Command::VerifyStarStar => {
            let cfg = sample_regime(&mut rng, config.n, nomes)?;
            let spec = config.quadrature_spec(config.n - 1)?;
            let r = star_star(&cfg, &spec)?;
            let (grid, est_rel_err) = worst(&[r.v1, r.v2]);
            Ok(Outcome {
                params: star_params(&cfg),
                components: vec![("star_star".into(), r.residual)],
                residual: r.residual,
                grid,
                est_rel_err,
            })
        }
        Command::VerifyChain => {
            let cfg = sample_regime(&mut rng, config.n, nomes)?;
            let spec = config.quadrature_spec(config.n - 1)?;
            let v1 = equivalence_v1(&cfg, &spec)?;
            let v2 = equivalence_v2(&cfg, &spec)?;
            let w = w_factor_residual(&cfg)?;
            let components = vec![
                ("equivalence_v1".to_string(), v1.residual),
                ("equivalence_v2".to_string(), v2.residual),
                ("w_factors".to_string(), w),
            ];
            let residual = components.iter().map(|(_, r)| *r).fold(0.0, f64::max);
            let (grid, est_rel_err) = worst(&[v1.star, v1.integral, v2.star, v2.integral]);
            Ok(Outcome {
                params: star_params(&cfg),
                components,
                residual,
                grid,
                est_rel_err,
            })
        }
        Command::PartitionDemo => {
            let cfg = sample_regime(&mut rng, config.n, nomes)?;
            let spec = config.quadrature_spec(config.n - 1)?;
            let patch = LatticePatch::new(3, 3, SiteColor::Black)?;
            let boundary = [cfg.c.clone(), cfg.d.clone(), cfg.a.clone(), cfg.b.clone()];
            let z = partition_function(&patch, &boundary, &cfg.rap, nomes, &cfg.kappa, &spec)?;
            let v1 = star_v1(&cfg, &spec)?;
            let residual = relative_residual(z.value, v1.value);
            let mut params = star_params(&cfg);
            params.push(complex("z_single", z.value));
            let mut reports = vec![z, v1];
            if config.n == 2 {
                let wide = LatticePatch::new(5, 3, SiteColor::Black)?;
                let extra: Vec<Spin> = (0..2)
                    .map(|_| sample_spin(&mut rng, config.n))
                    .collect::<Result<_>>()?;
                let boundary = [
                    cfg.c.clone(),
                    cfg.d.clone(),
                    extra[0].clone(),
                    cfg.a.clone(),
                    cfg.b.clone(),
                    extra[1].clone(),
                ];
                let spec2 = config.quadrature_spec(2)?;
                let z2 = partition_function(&wide, &boundary, &cfg.rap, nomes, &cfg.kappa, &spec2)?;
                params.push(complex("z_two_site", z2.value));
                reports.push(z2);
            }
            let (grid, est_rel_err) = worst(&reports);
            Ok(Outcome {
                params,
                components: vec![("single_site_vs_star".into(), residual)],
                residual,
                grid,
                est_rel_err,
            })
        }
    }
}

fn record(config: &RunConfig, nomes: &EllipticNomes, index: usize) -> DrawRecord {
    let start = Instant::now();
    let outcome = run_draw(config, nomes, index);
    let wall_time_s = start.elapsed().as_secs_f64();
    match outcome {
        Ok(o) => DrawRecord {
            index,
            params: o.params,
            components: o.components,
            residual: o.residual,
            grid: o.grid,
            est_rel_err: o.est_rel_err,
            converged: true,
            error: None,
            wall_time_s,
        },
        Err(e) => DrawRecord {
            index,
            params: Vec::new(),
            components: Vec::new(),
            residual: f64::NAN,
            grid: 0,
            est_rel_err: f64::NAN,
            converged: false,
            error: Some(e.to_string()),
            wall_time_s,
        },
    }
}

fn summarize(draws: &[DrawRecord], rel_tol: f64) -> Summary {
    let failures = draws.iter().filter(|d| !d.converged).count();
    let mut residuals: Vec<f64> = draws
        .iter()
        .filter(|d| d.converged)
        .map(|d| d.residual)
        .collect();
    residuals.sort_by(f64::total_cmp);
    let max_residual = if failures > 0 || residuals.iter().any(|r| r.is_nan()) {
        f64::NAN
    } else {
        residuals.last().copied().unwrap_or(0.0)
    };
    let median_residual = match residuals.len() {
        0 => f64::NAN,
        len if len % 2 == 1 => residuals[len / 2],
        len => 0.5 * (residuals[len / 2 - 1] + residuals[len / 2]),
    };
    Summary {
        draws: draws.len(),
        failures,
        max_residual,
        median_residual,
        pass: failures == 0 && max_residual < rel_tol,
    }
}

/// Run the configured suite. Per-draw failures are reported in-band; only
/// configuration errors abort.
pub fn run(config: &RunConfig) -> Result<VerificationReport> {
    config.validate()?;
    let nomes = config.nomes()?;
    let draws = match (config.command, config.point) {
        (Command::EvalGamma | Command::EvalPhi, Some(_)) => 1,
        _ => config.draws,
    };

    #[cfg(feature = "parallel")]
    let records: Vec<DrawRecord> = {
        use rayon::prelude::*;
        (0..draws)
            .into_par_iter()
            .map(|i| record(config, &nomes, i))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let records: Vec<DrawRecord> = (0..draws).map(|i| record(config, &nomes, i)).collect();

    let summary = summarize(&records, config.rel_tol);
    Ok(VerificationReport {
        config: config.clone(),
        draws: records,
        summary,
    })
}

/// Run the suite and, when `output_path` is set, write the rendered report.
pub fn run_and_write(config: &RunConfig) -> Result<VerificationReport> {
    let report = run(config)?;
    if let Some(path) = &config.output_path {
        std::fs::write(path, report.render(config.format))
            .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(report)
}
