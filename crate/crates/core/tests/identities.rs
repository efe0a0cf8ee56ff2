//! End-to-end checks of the transformation formula, the star-star relation
//! and the chain between them, against self-convergence references.

use starstar::lattice::{partition_function, relative_residual, star_star, star_v1, LatticePatch, SiteColor};
use starstar::rains::{
    equivalence_v1, equivalence_v2, rains_integral, rains_transformation, rapidity_to_params,
    tilde_transform, tilde_transform_with_roots, w_factor_residual, RainsParams,
};
use starstar::verify::{draw_rng, sample_regime, sample_spin};
use starstar::{Complex64, EllipticNomes, Kappa, QuadratureSpec, StarConfig};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn reference_params() -> RainsParams {
    RainsParams::new(
        vec![c(0.3, 0.0), c(0.4, 0.0), c(0.2, 0.0), c(0.0, 0.5)],
        vec![c(0.35, 0.0), c(0.25, 0.0), c(0.15, 0.0), c(0.45, 0.0)],
        EllipticNomes::real(0.2, 0.2).unwrap(),
    )
    .unwrap()
}

fn draw(seed: u64, index: usize, n: usize, p: f64) -> StarConfig {
    let nomes = EllipticNomes::real(p, p).unwrap();
    sample_regime(&mut draw_rng(seed, index), n, &nomes).unwrap()
}

#[test]
fn rains_integral_matches_fine_grid_reference() {
    let params = reference_params();
    let coarse = rains_integral(&params, &QuadratureSpec::fixed(1, 256).unwrap()).unwrap();
    let fine = rains_integral(&params, &QuadratureSpec::fixed(1, 512).unwrap()).unwrap();
    assert!(relative_residual(coarse.value, fine.value) < 1e-13);
    assert!(coarse.est_rel_err < 1e-12);
}

#[test]
fn rains_estimate_shrinks_geometrically() {
    let params = reference_params();
    let e32 = rains_integral(&params, &QuadratureSpec::fixed(1, 32).unwrap()).unwrap().est_rel_err;
    let e64 = rains_integral(&params, &QuadratureSpec::fixed(1, 64).unwrap()).unwrap().est_rel_err;
    assert!(e32 / e64 >= 1e3, "{e32} -> {e64}");
}

#[test]
fn transformation_formula_n2_over_draws() {
    let spec = QuadratureSpec::fixed(1, 128).unwrap();
    for p in [0.15, 0.25] {
        for i in 0..5 {
            let cfg = draw(7, i, 2, p);
            let params = rapidity_to_params(&cfg).unwrap();
            let r = rains_transformation(&params, &tilde_transform(&params).unwrap(), &spec).unwrap();
            assert!(r.residual < 1e-9, "p={p} draw {i}: {}", r.residual);
        }
    }
}

#[test]
fn paired_root_twist_leaves_the_residual_unchanged() {
    let cfg = draw(3, 0, 3, 0.2);
    let params = rapidity_to_params(&cfg).unwrap();
    let spec = QuadratureSpec::fixed(2, 64).unwrap();
    let base = rains_transformation(&params, &tilde_transform(&params).unwrap(), &spec).unwrap();
    for k in 1..3 {
        let twisted = tilde_transform_with_roots(&params, k, 3 - k).unwrap();
        let r = rains_transformation(&params, &twisted, &spec).unwrap();
        assert!((r.residual - base.residual).abs() < 1e-11);
    }
}

#[test]
fn star_star_n3_against_a_finer_grid() {
    let cfg = draw(11, 0, 3, 0.2);
    let coarse = star_star(&cfg, &QuadratureSpec::fixed(2, 48).unwrap()).unwrap();
    let fine = star_star(&cfg, &QuadratureSpec::fixed(2, 128).unwrap()).unwrap();
    assert!(relative_residual(coarse.v1.value, fine.v1.value) < 1e-6);
    assert!(relative_residual(coarse.v2.value, fine.v2.value) < 1e-6);
    assert!(coarse.residual < 1e-6);
    assert!(fine.residual < 1e-12);
}

#[test]
fn star_star_residual_fits_the_error_budget() {
    let spec = QuadratureSpec::fixed(1, 64).unwrap();
    for i in 0..4 {
        let cfg = draw(5, i, 2, 0.2);
        let ss = star_star(&cfg, &spec).unwrap().residual;
        let e1 = equivalence_v1(&cfg, &spec).unwrap().residual;
        let e2 = equivalence_v2(&cfg, &spec).unwrap().residual;
        let wf = w_factor_residual(&cfg).unwrap();
        let params = rapidity_to_params(&cfg).unwrap();
        let rr = rains_transformation(&params, &tilde_transform(&params).unwrap(), &spec)
            .unwrap()
            .residual;
        // Floor at one ulp-scale so that exact agreement everywhere passes.
        let budget = 10.0 * (e1 + e2 + wf + rr) + 1e-15;
        assert!(ss <= budget, "draw {i}: {ss} > {budget}");
    }
}

#[test]
fn normalisation_cancels_from_star_star() {
    let spec = QuadratureSpec::fixed(1, 128).unwrap();
    for i in 0..3 {
        let unit = draw(13, i, 2, 0.2);
        let exp = StarConfig {
            kappa: Kappa::EXPONENTIAL,
            ..unit.clone()
        };
        let a = star_star(&unit, &spec).unwrap().residual;
        let b = star_star(&exp, &spec).unwrap().residual;
        assert!((a - b).abs() < 1e-12);
        let ra = equivalence_v1(&unit, &spec).unwrap().residual;
        let rb = equivalence_v1(&exp, &spec).unwrap().residual;
        assert!((ra - rb).abs() < 1e-12);
    }
}

#[test]
fn single_site_patch_is_the_star_weight() {
    let cfg = draw(17, 0, 3, 0.2);
    let spec = QuadratureSpec::fixed(2, 24).unwrap();
    let patch = LatticePatch::new(3, 3, SiteColor::Black).unwrap();
    let boundary = [cfg.c.clone(), cfg.d.clone(), cfg.a.clone(), cfg.b.clone()];
    let z = partition_function(&patch, &boundary, &cfg.rap, &cfg.nomes, &cfg.kappa, &spec).unwrap();
    assert_eq!(z, star_v1(&cfg, &spec).unwrap());
}

#[test]
fn two_site_partition_function_self_converges() {
    let cfg = draw(19, 0, 2, 0.2);
    let mut rng = draw_rng(19, 1);
    let e = sample_spin(&mut rng, 2).unwrap();
    let f = sample_spin(&mut rng, 2).unwrap();
    let patch = LatticePatch::new(5, 3, SiteColor::Black).unwrap();
    assert_eq!(patch.internal_sites().len(), 2);
    let boundary = [cfg.c.clone(), cfg.d.clone(), e, cfg.a.clone(), cfg.b.clone(), f];
    let z = |n| {
        partition_function(&patch, &boundary, &cfg.rap, &cfg.nomes, &cfg.kappa, &QuadratureSpec::fixed(2, n).unwrap())
            .unwrap()
    };
    let (coarse, fine) = (z(64), z(128));
    assert!(relative_residual(coarse.value, fine.value) < 1e-8);
    assert!(fine.value.im.abs() < 1e-10 * fine.value.norm());
}
