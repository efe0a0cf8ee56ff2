//! Elliptic gamma functions, the continuous-spin edge model built from them,
//! and numerical verification of the star-star relation through the `A_{n-1}`
//! elliptic hypergeometric transformation formula.

// `!(x < y)` is used deliberately throughout so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod lattice;
pub mod quadrature;
pub mod rains;
pub mod report;
pub mod special;
pub mod verify;

pub use error::{Error, Result};
pub use lattice::{
    partition_function, star_star, star_star_residual, star_v1, star_v2, weight_w, weight_wbar,
    Kappa, LatticePatch, RapidityData, SiteColor, Spin, StarConfig,
};
pub use num_complex::Complex64;
pub use quadrature::{QuadratureReport, QuadratureSpec};
pub use rains::{
    check_equivalence_v1, check_equivalence_v2, gamma_cross_product, prefactor_rho,
    rains_integral, rains_residual, rapidity_to_params, tilde_transform, RainsParams, TildeParams,
};
pub use special::{
    elliptic_gamma, g_euler, kappa_s, phi, phi_series, single_spin_s, EllipticNomes,
};
pub use verify::{run, Command, Format, RunConfig, VerificationReport};
