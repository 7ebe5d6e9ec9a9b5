//! Chart conversions between the hyperboloid, Klein and Poincaré ball models
//! and the ideal boundary identified with the Riemann sphere.
//!
//! Boundary convention, used by every module: the ideal sphere is the unit
//! sphere of the ball models, and `z` in the Riemann sphere corresponds to
//! the null ray through `(xi, 1)` with
//!
//! ```text
//! xi = (2 Re z, 2 Im z, |z|^2 - 1) / (|z|^2 + 1)
//! ```
//!
//! (stereographic projection from the north pole), so the unit disc maps to
//! the lower hemisphere and `z = 0` to the south pole `(0, 0, -1)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::minkowski::{HPoint, MinkVec4};
use super::GeomError;

/// A point of the Riemann sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BoundaryPoint {
    Finite(Complex64),
    Infinity,
}

impl BoundaryPoint {
    /// Unit vector `xi` of the ideal sphere.
    pub fn to_sphere(&self) -> [f64; 3] {
        match *self {
            BoundaryPoint::Infinity => [0.0, 0.0, 1.0],
            BoundaryPoint::Finite(z) => {
                let r2 = z.norm_sqr();
                if !r2.is_finite() {
                    return [0.0, 0.0, 1.0];
                }
                let d = r2 + 1.0;
                [2.0 * z.re / d, 2.0 * z.im / d, (r2 - 1.0) / d]
            }
        }
    }

    /// Inverse stereographic projection; the north pole gives `Infinity`.
    pub fn from_sphere(xi: [f64; 3]) -> Result<Self, GeomError> {
        let n = (xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]).sqrt();
        if !n.is_finite() || n == 0.0 {
            return Err(GeomError::NonFinite);
        }
        let (x, y, z) = (xi[0] / n, xi[1] / n, xi[2] / n);
        let denom = 1.0 - z;
        if denom <= 1e-300 {
            return Ok(BoundaryPoint::Infinity);
        }
        // 1 - z loses digits near the north pole; use (x^2+y^2)/(1+z) there.
        let denom = if z > 0.0 { (x * x + y * y) / (1.0 + z) } else { denom };
        if denom <= 1e-300 {
            return Ok(BoundaryPoint::Infinity);
        }
        Ok(BoundaryPoint::Finite(Complex64::new(x / denom, y / denom)))
    }

    /// Future-pointing null vector `(xi, 1)`.
    pub fn to_null(&self) -> MinkVec4 {
        let xi = self.to_sphere();
        MinkVec4::new(xi[0], xi[1], xi[2], 1.0)
    }

    /// Accepts any future null vector (up to scale).
    pub fn from_null(v: MinkVec4) -> Result<Self, GeomError> {
        if !v.is_finite() {
            return Err(GeomError::NonFinite);
        }
        let t = v.0[3];
        if t <= 0.0 || v.norm_sq().abs() > 1e-9 * t * t {
            return Err(GeomError::NotNull(v.norm_sq()));
        }
        Self::from_sphere([v.0[0] / t, v.0[1] / t, v.0[2] / t])
    }
}

/// The target charts of [`model_convert`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Model {
    Hyperboloid,
    Klein,
    PoincareBall,
    BoundaryC,
}

/// A point expressed in one of the charts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ModelPoint {
    Hyperboloid(HPoint),
    Klein([f64; 3]),
    PoincareBall([f64; 3]),
    Boundary(BoundaryPoint),
    /// A ball-model point that sits on the unit sphere, i.e. at infinity.
    AtInfinity(BoundaryPoint),
}

fn norm3_sq(v: [f64; 3]) -> f64 {
    v[0] * v[0] + v[1] * v[1] + v[2] * v[2]
}

pub fn to_klein(x: &HPoint) -> [f64; 3] {
    let v = x.vec().0;
    [v[0] / v[3], v[1] / v[3], v[2] / v[3]]
}

pub fn to_ball(x: &HPoint) -> [f64; 3] {
    let v = x.vec().0;
    let d = 1.0 + v[3];
    [v[0] / d, v[1] / d, v[2] / d]
}

fn unit_sphere_point(k: [f64; 3]) -> Result<BoundaryPoint, GeomError> {
    BoundaryPoint::from_sphere(k)
}

/// Klein coordinates to the hyperboloid; `|k| >= 1` is reported as a point
/// at infinity when `|k| = 1` and as an error when outside the ball.
pub fn from_klein(k: [f64; 3]) -> Result<ModelPoint, GeomError> {
    let r2 = norm3_sq(k);
    if !r2.is_finite() {
        return Err(GeomError::NonFinite);
    }
    if (r2 - 1.0).abs() <= 1e-15 {
        return Ok(ModelPoint::AtInfinity(unit_sphere_point(k)?));
    }
    if r2 > 1.0 {
        return Err(GeomError::OutsideModel(r2.sqrt()));
    }
    let s = 1.0 / (1.0 - r2).sqrt();
    Ok(ModelPoint::Hyperboloid(HPoint::normalize(MinkVec4::new(
        k[0] * s,
        k[1] * s,
        k[2] * s,
        s,
    ))?))
}

/// Poincaré ball coordinates to the hyperboloid.
pub fn from_ball(b: [f64; 3]) -> Result<ModelPoint, GeomError> {
    let r2 = norm3_sq(b);
    if !r2.is_finite() {
        return Err(GeomError::NonFinite);
    }
    if (r2 - 1.0).abs() <= 1e-15 {
        return Ok(ModelPoint::AtInfinity(unit_sphere_point(b)?));
    }
    if r2 > 1.0 {
        return Err(GeomError::OutsideModel(r2.sqrt()));
    }
    let d = 1.0 - r2;
    Ok(ModelPoint::Hyperboloid(HPoint::from_spatial([
        2.0 * b[0] / d,
        2.0 * b[1] / d,
        2.0 * b[2] / d,
    ])))
}

/// Ball coordinates of an interior point, as an [`HPoint`].
pub fn ball_to_hpoint(b: [f64; 3]) -> Result<HPoint, GeomError> {
    match from_ball(b)? {
        ModelPoint::Hyperboloid(h) => Ok(h),
        _ => Err(GeomError::OutsideModel(norm3_sq(b).sqrt())),
    }
}

/// Converts between charts. Interior points cannot be sent to the boundary
/// chart and ideal points cannot be sent to interior charts.
pub fn model_convert(x: ModelPoint, target: Model) -> Result<ModelPoint, GeomError> {
    let interior = match x {
        ModelPoint::Hyperboloid(h) => Some(h),
        ModelPoint::Klein(k) => match from_klein(k)? {
            ModelPoint::Hyperboloid(h) => Some(h),
            other => return convert_ideal(other, target),
        },
        ModelPoint::PoincareBall(b) => match from_ball(b)? {
            ModelPoint::Hyperboloid(h) => Some(h),
            other => return convert_ideal(other, target),
        },
        ModelPoint::Boundary(_) | ModelPoint::AtInfinity(_) => None,
    };
    match interior {
        Some(h) => match target {
            Model::Hyperboloid => Ok(ModelPoint::Hyperboloid(h)),
            Model::Klein => Ok(ModelPoint::Klein(to_klein(&h))),
            Model::PoincareBall => Ok(ModelPoint::PoincareBall(to_ball(&h))),
            Model::BoundaryC => Err(GeomError::ChartMismatch),
        },
        None => convert_ideal(x, target),
    }
}

fn convert_ideal(x: ModelPoint, target: Model) -> Result<ModelPoint, GeomError> {
    let bp = match x {
        ModelPoint::Boundary(bp) | ModelPoint::AtInfinity(bp) => bp,
        _ => return Err(GeomError::ChartMismatch),
    };
    match target {
        Model::BoundaryC => Ok(ModelPoint::Boundary(bp)),
        _ => Err(GeomError::ChartMismatch),
    }
}
