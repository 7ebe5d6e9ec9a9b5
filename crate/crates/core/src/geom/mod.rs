//! Closed-form hyperbolic geometry in the hyperboloid model.

mod minkowski;
mod models;

pub use minkowski::{
    hyp_distance, mink_cross, mink_inner, normal_flow, plane_signed_sinh_distance,
    project_to_plane, HPoint, Isometry, MinkVec4, SupportPlane, QUADRIC_TOL,
};
pub use models::{
    ball_to_hpoint, from_ball, from_klein, model_convert, to_ball, to_klein, BoundaryPoint,
    Model, ModelPoint,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("non-finite coordinates")]
    NonFinite,
    #[error("vector is not on the hyperboloid (<v,v> = {0})")]
    OffHyperboloid(f64),
    #[error("dual vector is not unit spacelike (<p,p> = {0})")]
    NotUnitSpacelike(f64),
    #[error("vector is not spacelike (<v,v> = {0})")]
    NotSpacelike(f64),
    #[error("vector is not a future null vector (<v,v> = {0})")]
    NotNull(f64),
    #[error("numerical inconsistency: |<p,q>| = {0} < 1")]
    Inconsistent(f64),
    #[error("invalid normal frame: <n,n> = {norm_sq}, <x,n> = {inner}")]
    InvalidFrame { norm_sq: f64, inner: f64 },
    #[error("matrix does not preserve the Minkowski form (defect {0})")]
    NotIsometry(f64),
    #[error("chart coordinates outside the model (radius {0})")]
    OutsideModel(f64),
    #[error("interior and ideal points cannot be converted into each other")]
    ChartMismatch,
    #[error("cosh r * tanh w = {0} >= 1: the perpendicular misses the far plane")]
    Divergent(f64),
}

/// Distance data for two planes at distance `w` along a common perpendicular.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceProfile {
    /// `arctanh(cosh r tanh w)`.
    pub d: f64,
    /// `cosh r sinh w / sqrt(1 - sinh^2 r sinh^2 w)`.
    pub sinh_d: f64,
}

/// Distance from `P-` of the point of `P+` lying over a point of `P-` at
/// distance `r` from the foot of the common perpendicular of length `w`.
pub fn parallel_planes_distance_profile(r: f64, w: f64) -> Result<DistanceProfile, GeomError> {
    if !r.is_finite() || !w.is_finite() {
        return Err(GeomError::NonFinite);
    }
    let (r, w) = (r.abs(), w.abs());
    let x = r.cosh() * w.tanh();
    if x >= 1.0 {
        return Err(GeomError::Divergent(x));
    }
    let (sr, sw) = (r.sinh(), w.sinh());
    Ok(DistanceProfile {
        d: x.atanh(),
        sinh_d: r.cosh() * sw / (1.0 - sr * sr * sw * sw).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_examples() {
        let p = parallel_planes_distance_profile(0.0, 0.7).unwrap();
        assert!((p.d - 0.7).abs() < 1e-15);
        let p = parallel_planes_distance_profile(1.3, 0.0).unwrap();
        assert_eq!(p.d, 0.0);
        // high-precision evaluation of arctanh(cosh 0.5 tanh 0.5)
        let p = parallel_planes_distance_profile(0.5, 0.5).unwrap();
        assert!((p.d - 0.577_842_170_034_544_6).abs() < 1e-12);
        assert!((p.d.sinh() - p.sinh_d).abs() < 1e-12);
        assert!(matches!(
            parallel_planes_distance_profile(3.0, 1.0),
            Err(GeomError::Divergent(_))
        ));
    }
}
