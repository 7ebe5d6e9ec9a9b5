//! Data at infinity of a quasicircle and the equidistant foliation it
//! determines.
//!
//! Every field lives in the chart `|z| > 1` of the map `Ψ`. There the
//! hyperbolic metric of the image domain is the exterior Poincaré metric
//! `e^{2η}|dz|^2`, and the second form at infinity has traceless part
//! `-Re(S_Ψ dz^2)`.

mod data;
mod leaves;

pub use data::{
    det_b0_bers_consistency, forms_at_infinity, forms_at_level, gauss_residual, DataAtInfinity, InfinityGrid,
    InfinitySample,
};
pub use leaves::{
    foliation_width, leaf_eigenvalues, leaf_forms, LeafForms, LeafSample, WidthReport,
};

use thiserror::Error;

use crate::teich::TeichError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InfinityError {
    #[error(transparent)]
    Teich(#[from] TeichError),
    #[error("data at infinity did not converge after {levels} levels (last change {change})")]
    Resolution { levels: usize, change: f64 },
    #[error("e^rho E + e^-rho B* is singular at rho = {0}")]
    LeafDegeneracy(f64),
    #[error("a = {0} >= 1/2 violates the hypothesis of the eigenvalue formula")]
    Hypothesis(f64),
    #[error("sup a = {0} >= 1/2: no foliation width")]
    OutOfRegime(f64),
}
