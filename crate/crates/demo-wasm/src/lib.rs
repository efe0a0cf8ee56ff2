//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Each exported function returns a flat `Float64Array` of fixed-width rows so
//! the page can plot it without any marshalling layer.

use std::f64::consts::PI;

use starstar::lattice::star_star;
use starstar::rains::{rains_transformation, rapidity_to_params, tilde_transform};
use starstar::verify::{draw_rng, sample_regime};
use starstar::{phi, Complex64, EllipticNomes, QuadratureSpec, Result};
use wasm_bindgen::prelude::*;

/// Grids visited by the convergence sweeps.
pub const SWEEP: [usize; 6] = [8, 16, 32, 64, 128, 256];

/// Rows `[x, Re phi, Im phi, |phi|]` along `z = x + i f eta`, `x` in `[0, pi)`.
pub fn phi_rows(p: f64, q: f64, im_fraction: f64, samples: usize) -> Result<Vec<f64>> {
    let nomes = EllipticNomes::real(p, q)?;
    let y = im_fraction * nomes.eta().re;
    let mut out = Vec::with_capacity(4 * samples);
    for k in 0..samples {
        let x = PI * k as f64 / samples as f64;
        let v = phi(Complex64::new(x, y), &nomes)?;
        out.extend([x, v.re, v.im, v.norm()]);
    }
    Ok(out)
}

/// Rows `[N, residual, est_rel_err]` of the star-star relation for one
/// seeded draw of rank `n`, on grids up to `max_grid`.
pub fn star_star_rows(p: f64, q: f64, n: usize, seed: u64, draw: usize, max_grid: usize) -> Result<Vec<f64>> {
    let nomes = EllipticNomes::real(p, q)?;
    let cfg = sample_regime(&mut draw_rng(seed, draw), n, &nomes)?;
    let mut out = Vec::new();
    for grid in SWEEP.into_iter().filter(|&g| g <= max_grid) {
        let r = star_star(&cfg, &QuadratureSpec::fixed(n - 1, grid)?)?;
        out.extend([grid as f64, r.residual, r.v1.est_rel_err.max(r.v2.est_rel_err)]);
    }
    Ok(out)
}

/// Rows `[N, residual, est_rel_err]` of the transformation formula for the
/// integral attached to one seeded star configuration.
pub fn rains_rows(p: f64, q: f64, n: usize, seed: u64, draw: usize, max_grid: usize) -> Result<Vec<f64>> {
    let nomes = EllipticNomes::real(p, q)?;
    let cfg = sample_regime(&mut draw_rng(seed, draw), n, &nomes)?;
    let params = rapidity_to_params(&cfg)?;
    let tilde = tilde_transform(&params)?;
    let mut out = Vec::new();
    for grid in SWEEP.into_iter().filter(|&g| g <= max_grid) {
        let r = rains_transformation(&params, &tilde, &QuadratureSpec::fixed(n - 1, grid)?)?;
        out.extend([grid as f64, r.residual, r.direct.est_rel_err.max(r.transformed.est_rel_err)]);
    }
    Ok(out)
}

fn js(e: starstar::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub fn phi_curve(p: f64, q: f64, im_fraction: f64, samples: usize) -> std::result::Result<Vec<f64>, JsError> {
    phi_rows(p, q, im_fraction, samples).map_err(js)
}

#[wasm_bindgen]
pub fn star_star_convergence(
    p: f64,
    q: f64,
    n: usize,
    seed: u32,
    draw: usize,
    max_grid: usize,
) -> std::result::Result<Vec<f64>, JsError> {
    star_star_rows(p, q, n, u64::from(seed), draw, max_grid).map_err(js)
}

#[wasm_bindgen]
pub fn rains_convergence(
    p: f64,
    q: f64,
    n: usize,
    seed: u32,
    draw: usize,
    max_grid: usize,
) -> std::result::Result<Vec<f64>, JsError> {
    rains_rows(p, q, n, u64::from(seed), draw, max_grid).map_err(js)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_curve_has_unit_modulus_on_the_real_line() {
        let rows = phi_rows(0.2, 0.3, 0.0, 16).unwrap();
        assert_eq!(rows.len(), 64);
        for row in rows.chunks(4) {
            assert!((row[3] - 1.0).abs() < 1e-13);
        }
        assert!(phi_rows(0.2, 0.3, 1.0, 4).is_err());
    }

    #[test]
    fn sweeps_converge() {
        let rows = star_star_rows(0.2, 0.2, 2, 1, 0, 128).unwrap();
        assert_eq!(rows.len(), 3 * 5);
        assert!(rows[rows.len() - 2] < 1e-9);
        let rows = rains_rows(0.2, 0.2, 2, 1, 0, 64).unwrap();
        assert_eq!(rows.len(), 3 * 4);
        assert!(rows[rows.len() - 2] < 1e-9);
    }
}
