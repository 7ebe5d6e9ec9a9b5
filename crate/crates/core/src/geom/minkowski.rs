//! Minkowski space R^{3,1}, the hyperboloid, planes and isometries.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use super::GeomError;

/// Tolerance for the hyperboloid and de Sitter quadrics.
pub const QUADRIC_TOL: f64 = 1e-10;

/// A vector of R^{3,1}; the last component is the timelike one.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MinkVec4(pub [f64; 4]);

impl MinkVec4 {
    pub const E1: MinkVec4 = MinkVec4([1.0, 0.0, 0.0, 0.0]);
    pub const E2: MinkVec4 = MinkVec4([0.0, 1.0, 0.0, 0.0]);
    pub const E3: MinkVec4 = MinkVec4([0.0, 0.0, 1.0, 0.0]);
    pub const E4: MinkVec4 = MinkVec4([0.0, 0.0, 0.0, 1.0]);

    pub fn new(x1: f64, x2: f64, x3: f64, x4: f64) -> Self {
        MinkVec4([x1, x2, x3, x4])
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    /// Minkowski square `<v,v>`.
    pub fn norm_sq(&self) -> f64 {
        mink_inner(*self, *self)
    }

    pub fn scale(self, s: f64) -> Self {
        MinkVec4(self.0.map(|c| c * s))
    }

    /// Spatial part (x1, x2, x3).
    pub fn spatial(&self) -> [f64; 3] {
        [self.0[0], self.0[1], self.0[2]]
    }

    /// Unit spacelike vector in the direction of `self`.
    pub fn normalized_spacelike(self) -> Result<Self, GeomError> {
        let n2 = self.norm_sq();
        if !(n2 > 0.0) || !self.is_finite() {
            return Err(GeomError::NotSpacelike(n2));
        }
        Ok(self.scale(1.0 / n2.sqrt()))
    }
}

impl Add for MinkVec4 {
    type Output = MinkVec4;
    fn add(self, o: MinkVec4) -> MinkVec4 {
        MinkVec4([
            self.0[0] + o.0[0],
            self.0[1] + o.0[1],
            self.0[2] + o.0[2],
            self.0[3] + o.0[3],
        ])
    }
}

impl Sub for MinkVec4 {
    type Output = MinkVec4;
    fn sub(self, o: MinkVec4) -> MinkVec4 {
        MinkVec4([
            self.0[0] - o.0[0],
            self.0[1] - o.0[1],
            self.0[2] - o.0[2],
            self.0[3] - o.0[3],
        ])
    }
}

impl Neg for MinkVec4 {
    type Output = MinkVec4;
    fn neg(self) -> MinkVec4 {
        self.scale(-1.0)
    }
}

impl Mul<MinkVec4> for f64 {
    type Output = MinkVec4;
    fn mul(self, v: MinkVec4) -> MinkVec4 {
        v.scale(self)
    }
}

/// The bilinear form of signature (+,+,+,-).
#[inline]
pub fn mink_inner(a: MinkVec4, b: MinkVec4) -> f64 {
    a.0[0] * b.0[0] + a.0[1] * b.0[1] + a.0[2] * b.0[2] - a.0[3] * b.0[3]
}

/// Generalized cross product: the vector Minkowski-orthogonal to `a`, `b`, `c`,
/// with `<cross(a,b,c), v> = det[a, b, c, v]`.
pub fn mink_cross(a: MinkVec4, b: MinkVec4, c: MinkVec4) -> MinkVec4 {
    let m = |i: usize, j: usize, k: usize| {
        a.0[i] * (b.0[j] * c.0[k] - b.0[k] * c.0[j]) - a.0[j] * (b.0[i] * c.0[k] - b.0[k] * c.0[i])
            + a.0[k] * (b.0[i] * c.0[j] - b.0[j] * c.0[i])
    };
    // Euclidean cofactors, then lower the index of the timelike slot.
    let e = [-m(1, 2, 3), m(0, 2, 3), -m(0, 1, 3), m(0, 1, 2)];
    MinkVec4([e[0], e[1], e[2], -e[3]])
}

/// A point of the hyperboloid model `<v,v> = -1, v4 > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HPoint(MinkVec4);

impl HPoint {
    pub const ORIGIN: HPoint = HPoint(MinkVec4::E4);

    /// Checks the quadric within [`QUADRIC_TOL`] and renormalizes.
    pub fn new(v: MinkVec4) -> Result<Self, GeomError> {
        if !v.is_finite() {
            return Err(GeomError::NonFinite);
        }
        let n2 = v.norm_sq();
        if (n2 + 1.0).abs() > QUADRIC_TOL * (1.0 + v.0[3] * v.0[3]) || v.0[3] <= 0.0 {
            return Err(GeomError::OffHyperboloid(n2));
        }
        Ok(HPoint(v.scale(1.0 / (-n2).sqrt())))
    }

    /// Projects any future timelike vector onto the hyperboloid.
    pub fn normalize(v: MinkVec4) -> Result<Self, GeomError> {
        if !v.is_finite() {
            return Err(GeomError::NonFinite);
        }
        let n2 = v.norm_sq();
        if !(n2 < 0.0) || v.0[3] <= 0.0 {
            return Err(GeomError::OffHyperboloid(n2));
        }
        Ok(HPoint(v.scale(1.0 / (-n2).sqrt())))
    }

    /// Lifts a spatial vector `y` to `(y, sqrt(1+|y|^2))`.
    pub fn from_spatial(y: [f64; 3]) -> Self {
        let t = (1.0 + y[0] * y[0] + y[1] * y[1] + y[2] * y[2]).sqrt();
        HPoint(MinkVec4([y[0], y[1], y[2], t]))
    }

    pub fn vec(&self) -> MinkVec4 {
        self.0
    }

    /// Projects `v` to the tangent space at `self`.
    pub fn tangent_part(&self, v: MinkVec4) -> MinkVec4 {
        v + mink_inner(v, self.0) * self.0
    }

    /// Riemannian logarithm: the tangent vector at `self` pointing to `q`
    /// with length `d(self, q)`.
    pub fn log(&self, q: &HPoint) -> MinkVec4 {
        let w = self.tangent_part(q.0);
        let s2 = w.norm_sq().max(0.0);
        if s2 == 0.0 {
            return MinkVec4::default();
        }
        let s = s2.sqrt();
        let d = s.asinh();
        w.scale(d / s)
    }

    /// Riemannian exponential of a tangent vector at `self`.
    pub fn exp(&self, v: MinkVec4) -> HPoint {
        let n2 = v.norm_sq().max(0.0);
        if n2 == 0.0 {
            return *self;
        }
        let n = n2.sqrt();
        let p = n.cosh() * self.0 + (n.sinh() / n) * v;
        HPoint::normalize(p).unwrap_or(*self)
    }

    /// Parallel transport of a tangent vector at the origin to `self`.
    pub fn transport_from_origin(&self, v: MinkVec4) -> MinkVec4 {
        let o = MinkVec4::E4;
        let c = mink_inner(self.0, v) / (1.0 - mink_inner(o, self.0));
        v + c * (o + self.0)
    }
}

/// A totally geodesic plane `p^perp`, with `p` a unit spacelike vector.
///
/// `orientation` is +1 or -1; the positive side is where
/// `orientation * <x, p> > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportPlane {
    pub p: MinkVec4,
    pub orientation: f64,
}

impl SupportPlane {
    pub fn new(p: MinkVec4) -> Result<Self, GeomError> {
        if !p.is_finite() {
            return Err(GeomError::NonFinite);
        }
        let n2 = p.norm_sq();
        if (n2 - 1.0).abs() > QUADRIC_TOL * (1.0 + p.0[3] * p.0[3]) {
            return Err(GeomError::NotUnitSpacelike(n2));
        }
        Ok(SupportPlane {
            p: p.scale(1.0 / n2.sqrt()),
            orientation: 1.0,
        })
    }

    /// Normalizes an arbitrary spacelike dual vector.
    pub fn from_dual(p: MinkVec4) -> Result<Self, GeomError> {
        Ok(SupportPlane {
            p: p.normalized_spacelike()?,
            orientation: 1.0,
        })
    }

    /// Orients the plane so that `reference` lies on its positive side.
    pub fn oriented_towards(mut self, reference: &HPoint) -> Self {
        if mink_inner(reference.vec(), self.p) < 0.0 {
            self.orientation = -1.0;
        } else {
            self.orientation = 1.0;
        }
        self
    }

    pub fn flipped(mut self) -> Self {
        self.orientation = -self.orientation;
        self
    }

    /// The dual vector with the orientation folded in.
    pub fn oriented_dual(&self) -> MinkVec4 {
        self.p.scale(self.orientation)
    }

    /// The plane through the origin-based height `a` along the x3 axis,
    /// parallel to the equatorial plane `x3 = 0`, positive side above.
    pub fn horizontal(a: f64) -> Self {
        SupportPlane {
            p: MinkVec4::new(0.0, 0.0, a.cosh(), a.sinh()),
            orientation: 1.0,
        }
    }
}

/// An element of SO+(3,1) acting linearly on R^{3,1}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Isometry {
    pub m: Matrix4<f64>,
}

fn minkowski_gram() -> Matrix4<f64> {
    Matrix4::from_diagonal(&nalgebra::Vector4::new(1.0, 1.0, 1.0, -1.0))
}

impl Isometry {
    pub fn identity() -> Self {
        Isometry {
            m: Matrix4::identity(),
        }
    }

    /// Validates `m^T J m = J` within 1e-9 and `m44 > 0`.
    pub fn new(m: Matrix4<f64>) -> Result<Self, GeomError> {
        let j = minkowski_gram();
        let defect = (m.transpose() * j * m - j).amax();
        if !(defect <= 1e-9 * (1.0 + m.amax() * m.amax())) || m[(3, 3)] <= 0.0 {
            return Err(GeomError::NotIsometry(defect));
        }
        Ok(Isometry { m })
    }

    /// Rotation of the spatial factor by `angle` in the (i, j) coordinate plane.
    pub fn rotation(i: usize, j: usize, angle: f64) -> Self {
        let mut m = Matrix4::identity();
        let (s, c) = angle.sin_cos();
        m[(i, i)] = c;
        m[(j, j)] = c;
        m[(i, j)] = -s;
        m[(j, i)] = s;
        Isometry { m }
    }

    /// Hyperbolic translation of length `t` along spatial axis `axis`.
    pub fn boost(axis: usize, t: f64) -> Self {
        let mut m = Matrix4::identity();
        let (s, c) = (t.sinh(), t.cosh());
        m[(axis, axis)] = c;
        m[(3, 3)] = c;
        m[(axis, 3)] = s;
        m[(3, axis)] = s;
        Isometry { m }
    }

    pub fn compose(&self, other: &Isometry) -> Isometry {
        Isometry { m: self.m * other.m }
    }

    pub fn apply_vec(&self, v: MinkVec4) -> MinkVec4 {
        let r = self.m * nalgebra::Vector4::from(v.0);
        MinkVec4([r[0], r[1], r[2], r[3]])
    }

    pub fn apply(&self, x: &HPoint) -> HPoint {
        HPoint::normalize(self.apply_vec(x.vec())).expect("isometry preserves the hyperboloid")
    }

    pub fn apply_plane(&self, plane: &SupportPlane) -> SupportPlane {
        SupportPlane {
            p: self.apply_vec(plane.p),
            orientation: plane.orientation,
        }
    }
}

/// `arccosh(|<p,q>|)`, evaluated through the chordal form for accuracy at
/// short range.
pub fn hyp_distance(p: &HPoint, q: &HPoint) -> Result<f64, GeomError> {
    let ip = mink_inner(p.vec(), q.vec());
    if ip.abs() < 1.0 - 1e-8 {
        return Err(GeomError::Inconsistent(ip));
    }
    // |p - q|^2 = -2 - 2<p,q> = 4 sinh^2(d/2)
    let chord2 = (-2.0 - 2.0 * ip).max(0.0);
    Ok(2.0 * (0.5 * chord2.sqrt()).asinh())
}

/// `orientation * <x, p>`, the hyperbolic sine of the signed distance.
pub fn plane_signed_sinh_distance(x: &HPoint, plane: &SupportPlane) -> f64 {
    plane.orientation * mink_inner(x.vec(), plane.p)
}

/// `cosh(rho) x + sinh(rho) n` for a unit tangent `n` at `x`.
pub fn normal_flow(x: &HPoint, n: MinkVec4, rho: f64) -> Result<HPoint, GeomError> {
    if !n.is_finite() || !rho.is_finite() {
        return Err(GeomError::NonFinite);
    }
    let nn = n.norm_sq();
    let xn = mink_inner(x.vec(), n);
    if (nn - 1.0).abs() > 1e-9 || xn.abs() > 1e-9 {
        return Err(GeomError::InvalidFrame { norm_sq: nn, inner: xn });
    }
    HPoint::normalize(rho.cosh() * x.vec() + rho.sinh() * n)
}

/// Foot of the perpendicular from `x` to the plane.
pub fn project_to_plane(x: &HPoint, plane: &SupportPlane) -> HPoint {
    let s = mink_inner(x.vec(), plane.p);
    HPoint::normalize(x.vec() - s * plane.p).expect("projection stays timelike")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inner_product_signature() {
        assert_eq!(mink_inner(MinkVec4::E4, MinkVec4::E4), -1.0);
        assert_eq!(mink_inner(MinkVec4::E1, MinkVec4::E1), 1.0);
        let a = MinkVec4::new(1.0, 0.0, 0.0, 1.0);
        let b = MinkVec4::new(0.0, 1.0, 0.0, 1.0);
        assert_eq!(mink_inner(a, b), -1.0);
    }

    #[test]
    fn distance_basics() {
        let o = HPoint::ORIGIN;
        assert_eq!(hyp_distance(&o, &o).unwrap(), 0.0);
        let q = HPoint::new(MinkVec4::new(0.0, 0.0, 1f64.sinh(), 1f64.cosh())).unwrap();
        assert!((hyp_distance(&o, &q).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn distance_rejects_inconsistent_points() {
        // Bypass the constructor to smuggle in a non-hyperboloid vector.
        let bad = HPoint(MinkVec4::new(0.0, 0.0, 0.0, 0.5));
        assert!(matches!(
            hyp_distance(&HPoint::ORIGIN, &bad),
            Err(GeomError::Inconsistent(_))
        ));
    }

    #[test]
    fn cross_is_orthogonal() {
        let a = MinkVec4::new(0.3, -1.0, 2.0, 0.7);
        let b = MinkVec4::new(1.1, 0.2, -0.4, 2.0);
        let c = MinkVec4::new(-0.5, 0.9, 0.1, 1.3);
        let n = mink_cross(a, b, c);
        for v in [a, b, c] {
            assert!(mink_inner(n, v).abs() < 1e-12);
        }
    }

    #[test]
    fn normal_flow_examples() {
        let o = HPoint::ORIGIN;
        let x = normal_flow(&o, MinkVec4::E3, 0.0).unwrap();
        assert_eq!(x, o);
        let y = normal_flow(&o, MinkVec4::E3, 1.0).unwrap();
        assert!((y.vec().0[2] - 1f64.sinh()).abs() < 1e-14);
        assert!((y.vec().0[3] - 1f64.cosh()).abs() < 1e-14);
        for rho in [0.3, -0.3, 2.0, -2.0] {
            let z = normal_flow(&o, MinkVec4::E3, rho).unwrap();
            assert!((hyp_distance(&o, &z).unwrap() - f64::abs(rho)).abs() < 1e-12);
        }
        assert!(matches!(
            normal_flow(&o, MinkVec4::E4, 1.0),
            Err(GeomError::InvalidFrame { .. })
        ));
    }

    #[test]
    fn projection_examples() {
        let plane = SupportPlane::new(MinkVec4::E3).unwrap();
        let t: f64 = 0.8;
        let x = HPoint::new(MinkVec4::new(0.0, 0.0, t.sinh(), t.cosh())).unwrap();
        let foot = project_to_plane(&x, &plane);
        assert!((foot.vec() - MinkVec4::E4).0.iter().all(|c| c.abs() < 1e-14));
        assert!((plane_signed_sinh_distance(&x, &plane) - t.sinh()).abs() < 1e-14);
        let on = HPoint::from_spatial([0.4, -1.2, 0.0]);
        let same = project_to_plane(&on, &plane);
        assert!(hyp_distance(&on, &same).unwrap() < 1e-12);
    }

    #[test]
    fn isometry_validation() {
        let t = Isometry::boost(0, 0.7).compose(&Isometry::rotation(1, 2, 0.3));
        assert!(Isometry::new(t.m).is_ok());
        let mut m = t.m;
        m[(0, 1)] += 1e-3;
        assert!(Isometry::new(m).is_err());
    }
}
