//! Conformal maps of the exterior disc, the Schwarzian derivative, the Bers
//! norm and quasiconformal dilatation.

mod beltrami;
mod bers;
mod laurent;
mod schwarzian;

pub use beltrami::{
    compose_dilatation, max_dilatation_K, BeltramiField, DiscGrid, QuadDiffDomain, QuadDiffSample,
};
pub use bers::{
    ahlfors_weill_K, bers_norm, bers_norm_of, poincare_density, teich_distance_from_K, BersGrid, BersNorm,
    Domain,
};
pub use laurent::{
    sample_quasicircle, univalence_grid_check, LaurentMap, NonUnivalenceWitness, Quasicircle,
    UnivalenceCertificate, UnivalenceVerdict, DEFAULT_CERT_RESOLUTION, MAX_ORDER,
};
pub use schwarzian::{
    moebius_schwarzian, schwarzian, schwarzian_from_jet, Composite, Holomorphic, MoebiusTransform,
};

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TeichError {
    #[error("Möbius coefficients have zero determinant")]
    DegenerateMoebius,
    #[error("derivative vanishes at z = {0}")]
    CriticalPoint(Complex64),
    #[error("map is not univalent: {0:?}")]
    NotUnivalent(NonUnivalenceWitness),
    #[error("truncation order {0} exceeds the maximum of 16")]
    OrderTooLarge(usize),
    #[error("non-finite coefficient")]
    NonFinite,
    #[error("at least 16 samples are required, got {0}")]
    TooFewSamples(usize),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("point lies on the unit circle, where the density diverges")]
    Divergence,
    #[error("point lies outside the domain")]
    OutsideDomain,
    #[error("Bers norm refinement did not converge after {levels} levels (last value {value}, gap {gap})")]
    Resolution { value: f64, gap: f64, levels: usize },
    #[error("Bers norm {0} >= 1/2: no extension bound from this certificate")]
    OutOfCertificate(f64),
    #[error("dilatation K = {0} < 1")]
    InvalidK(f64),
    #[error("Beltrami coefficient has modulus {0} >= 1")]
    NotContracting(f64),
    #[error("grids do not match")]
    GridMismatch,
    #[error("degenerate composition: |1 - conj(mu_f) mu_g| = {0}")]
    DegenerateComposition(f64),
    #[error("Cauchy-Riemann residual {0} exceeds tolerance")]
    NotHolomorphic(f64),
}
