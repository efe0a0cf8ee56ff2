//! Tensor-product trapezoidal rules on periodic domains.
//!
//! Every pass evaluates a uniform half-step-offset grid. Nodes are split into
//! fixed-size chunks that may be evaluated in parallel; chunk sums are
//! combined by pairwise summation in lexicographic node order, so a report is
//! bit-identical however the work is scheduled.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

const CHUNK: usize = 1024;
const MAX_NODES: u64 = 1 << 34;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub dims: usize,
    pub points_per_dim: usize,
    pub target_rel_tol: f64,
    pub max_points_per_dim: usize,
}

impl QuadratureSpec {
    pub fn new(
        dims: usize,
        points_per_dim: usize,
        target_rel_tol: f64,
        max_points_per_dim: usize,
    ) -> Result<Self> {
        let spec = Self {
            dims,
            points_per_dim,
            target_rel_tol,
            max_points_per_dim,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// A single resolution with no refinement: the report still carries the
    /// estimate against the half-resolution grid, but never fails on it.
    pub fn fixed(dims: usize, points_per_dim: usize) -> Result<Self> {
        Self::new(dims, points_per_dim, f64::INFINITY, points_per_dim)
    }

    /// Copy of this spec for a different number of integration variables.
    pub fn with_dims(self, dims: usize) -> Result<Self> {
        Self::new(
            dims,
            self.points_per_dim,
            self.target_rel_tol,
            self.max_points_per_dim,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims == 0 {
            return Err(Error::Config("quadrature needs at least one dimension".into()));
        }
        if self.points_per_dim < 8 || self.points_per_dim > self.max_points_per_dim {
            return Err(Error::Config(format!(
                "need 8 <= points_per_dim ({}) <= max_points_per_dim ({})",
                self.points_per_dim, self.max_points_per_dim
            )));
        }
        if !(self.target_rel_tol > 0.0) {
            return Err(Error::Config(format!(
                "target_rel_tol must be positive, got {}",
                self.target_rel_tol
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureReport {
    pub value: Complex64,
    pub points_per_dim_used: usize,
    /// `|value_N - value_{N/2}| / |value_N|`.
    pub est_rel_err: f64,
    /// Integrand evaluations of the final pass, `N^dims`.
    pub evaluations: usize,
}

impl QuadratureReport {
    /// The same report with its value multiplied by a constant.
    pub fn scaled(self, factor: Complex64) -> Self {
        Self {
            value: self.value * factor,
            ..self
        }
    }
}

fn rel_change(value: Complex64, coarse: Complex64) -> f64 {
    let diff = (value - coarse).norm();
    let scale = value.norm();
    if scale > 0.0 {
        diff / scale
    } else if diff == 0.0 {
        0.0
    } else {
        f64::MAX
    }
}

/// Drives the resolution-doubling loop. `pass(N)` must return the integral
/// approximated on an `N`-per-dimension grid.
pub fn integrate_adaptive<P>(spec: &QuadratureSpec, mut pass: P) -> Result<QuadratureReport>
where
    P: FnMut(usize) -> Result<Complex64>,
{
    spec.validate()?;
    let mut n = spec.points_per_dim;
    let mut coarse = pass(n / 2)?;
    loop {
        let value = pass(n)?;
        let est = rel_change(value, coarse);
        if est < spec.target_rel_tol {
            let evaluations = n.checked_pow(spec.dims as u32).unwrap_or(usize::MAX);
            return Ok(QuadratureReport {
                value,
                points_per_dim_used: n,
                est_rel_err: est,
                evaluations,
            });
        }
        if 2 * n > spec.max_points_per_dim {
            return Err(Error::QuadratureNotConverged {
                points_per_dim: n,
                est_rel_err: est,
            });
        }
        coarse = value;
        n *= 2;
    }
}

/// Mean of `f` over the `n^dims` grid of multi-indices, visited in
/// lexicographic order (first index slowest).
pub fn grid_mean<F>(dims: usize, n: usize, f: F) -> Result<Complex64>
where
    F: Fn(&[usize]) -> Result<Complex64> + Sync,
{
    let total = n
        .checked_pow(dims as u32)
        .filter(|&t| t as u64 <= MAX_NODES && t > 0)
        .ok_or_else(|| Error::Config(format!("grid {n}^{dims} is too large")))?;
    let chunks = total.div_ceil(CHUNK);

    let chunk_sum = |c: usize| -> Result<Complex64> {
        let start = c * CHUNK;
        let end = (start + CHUNK).min(total);
        let mut index = vec![0usize; dims];
        let mut values = Vec::with_capacity(end - start);
        for linear in start..end {
            let mut rest = linear;
            for slot in index.iter_mut().rev() {
                *slot = rest % n;
                rest /= n;
            }
            values.push(f(&index)?);
        }
        Ok(pairwise_sum(&values))
    };

    #[cfg(feature = "parallel")]
    let sums: Vec<Result<Complex64>> = {
        use rayon::prelude::*;
        (0..chunks).into_par_iter().map(chunk_sum).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let sums: Vec<Result<Complex64>> = (0..chunks).map(chunk_sum).collect();

    let sums = sums.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(pairwise_sum(&sums) / total as f64)
}

pub fn pairwise_sum(values: &[Complex64]) -> Complex64 {
    if values.len() <= 8 {
        return values.iter().fold(Complex64::new(0.0, 0.0), |acc, v| acc + v);
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Node `i` of an `n`-point half-step-offset grid on `[0, period)`.
#[inline]
pub fn node(i: usize, n: usize, period: f64) -> f64 {
    (i as f64 + 0.5) * period / n as f64
}

/// `int_{[0,pi)^d} f(x) dx` for `f` that is `pi`-periodic in every variable.
pub fn integrate_torus<F>(f: F, spec: &QuadratureSpec) -> Result<QuadratureReport>
where
    F: Fn(&[f64]) -> Result<Complex64> + Sync,
{
    let dims = spec.dims;
    let volume = PI.powi(dims as i32);
    integrate_adaptive(spec, |n| {
        let mean = grid_mean(dims, n, |idx| {
            let x: Vec<f64> = idx.iter().map(|&i| node(i, n, PI)).collect();
            f(&x)
        })?;
        Ok(mean * volume)
    })
}

/// `oint f(z) prod_k dz_k / (2 pi i z_k)` over the unit circles `|z_k| = 1`.
pub fn integrate_unit_torus_product<F>(f: F, spec: &QuadratureSpec) -> Result<QuadratureReport>
where
    F: Fn(&[Complex64]) -> Result<Complex64> + Sync,
{
    let dims = spec.dims;
    integrate_adaptive(spec, |n| {
        grid_mean(dims, n, |idx| {
            let z: Vec<Complex64> = idx
                .iter()
                .map(|&i| Complex64::from_polar(1.0, node(i, n, 2.0 * PI)))
                .collect();
            f(&z)
        })
    })
}
