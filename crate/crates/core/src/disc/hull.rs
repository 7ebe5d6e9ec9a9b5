//! Outer approximation of the convex hull of a quasicircle by support planes.

use serde::{Deserialize, Serialize};

use super::mesh::TriMesh;
use super::DiscError;
use crate::geom::{mink_inner, BoundaryPoint, MinkVec4, SupportPlane};
use crate::teich::Quasicircle;

/// Finitely many support planes of the hull of the sampled curve, each with
/// every sample on its nonnegative side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexHullProxy {
    pub planes: Vec<SupportPlane>,
}

impl ConvexHullProxy {
    /// Ideal points as null vectors with unit last coordinate.
    fn null_samples(gamma: &Quasicircle) -> Vec<MinkVec4> {
        gamma
            .samples
            .iter()
            .map(|&z| BoundaryPoint::Finite(z).to_null())
            .collect()
    }

    /// For `n_planes / 2` pairs of roughly opposite samples, takes the plane
    /// through both that is closest to horizontal, in both orientations, and
    /// pushes it along its normal geodesic until no sample is on the
    /// negative side.
    pub fn build(gamma: &Quasicircle, n_planes: usize) -> Result<Self, DiscError> {
        let v = Self::null_samples(gamma);
        let n = v.len();
        if n < 4 || n_planes < 2 {
            return Err(DiscError::Resolution(format!("{n} samples, {n_planes} planes")));
        }
        let pairs = (n_planes / 2).min(n / 2);
        let mut planes = Vec::with_capacity(2 * pairs);
        for k in 0..pairs {
            let i = k * (n / 2) / pairs;
            let (v1, v2) = (v[i], v[i + n / 2]);
            let g = mink_inner(v1, v2);
            if g.abs() < 1e-14 {
                return Err(DiscError::Resolution(format!("coincident samples {i} and {}", i + n / 2)));
            }
            let e3 = MinkVec4::E3;
            let p = e3 - (mink_inner(e3, v2) / g) * v1 - (mink_inner(e3, v1) / g) * v2;
            let p = p
                .normalized_spacelike()
                .map_err(|_| DiscError::Resolution(format!("vertical pencil at sample {i}")))?;
            for p in [p, -p] {
                let foot = MinkVec4::E4 - mink_inner(MinkVec4::E4, p) * p;
                let c = foot.scale(1.0 / (-foot.norm_sq()).sqrt());
                // a + tanh(s) b >= 0 for every sample, with b < 0
                let t = v
                    .iter()
                    .map(|&w| mink_inner(w, p) / mink_inner(w, c).abs())
                    .fold(f64::INFINITY, f64::min);
                if t <= -1.0 + 1e-12 {
                    return Err(DiscError::Resolution(format!("samples surround plane {i}")));
                }
                let s = t.min(1.0 - 1e-12).atanh();
                let q = s.cosh() * p + s.sinh() * c;
                planes.push(SupportPlane::from_dual(q)?);
            }
        }
        Ok(ConvexHullProxy { planes })
    }

    /// Most negative `<x, p>` over the given vertices and all planes, or 0.
    pub fn violation<'a>(&self, points: impl Iterator<Item = &'a crate::geom::HPoint>) -> f64 {
        let mut worst = 0.0f64;
        for x in points {
            for pl in &self.planes {
                worst = worst.min(mink_inner(x.vec(), pl.oriented_dual()));
            }
        }
        worst
    }
}

/// Containment of the mesh in the hull proxy, split by vertex class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HullReport {
    /// Most negative signed sinh-distance over all vertices (0 if inside).
    pub violation: f64,
    /// The same over interior vertices only.
    pub interior_violation: f64,
    pub planes: usize,
}

pub fn hull_containment(mesh: &TriMesh, gamma: &Quasicircle, n_planes: usize) -> Result<HullReport, DiscError> {
    let proxy = ConvexHullProxy::build(gamma, n_planes)?;
    let bnd = mesh.is_boundary_mask();
    Ok(HullReport {
        violation: proxy.violation(mesh.vertices.iter()),
        interior_violation: proxy.violation(mesh.vertices.iter().enumerate().filter(|(i, _)| !bnd[*i]).map(|(_, x)| x)),
        planes: proxy.planes.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disc::{seed_mesh_from_map, SolverConfig};
    use crate::geom::{HPoint, Isometry};
    use crate::teich::{sample_quasicircle, LaurentMap};

    fn cfg() -> SolverConfig {
        SolverConfig {
            target_vertices: 2000,
            ..SolverConfig::default()
        }
    }

    #[test]
    fn circle_is_its_own_hull() {
        let psi = LaurentMap::identity();
        let g = sample_quasicircle(&psi, 256).unwrap();
        let m = seed_mesh_from_map(&psi, &cfg()).unwrap();
        let r = hull_containment(&m, &g, 64).unwrap();
        assert!(r.violation.abs() < 1e-9, "{}", r.violation);
        let proxy = ConvexHullProxy::build(&g, 64).unwrap();
        for pl in &proxy.planes {
            for s in ConvexHullProxy::null_samples(&g) {
                assert!(mink_inner(s, pl.oriented_dual()) >= -1e-12);
            }
        }
    }

    #[test]
    fn translated_mesh_is_caught() {
        let psi = LaurentMap::identity();
        let g = sample_quasicircle(&psi, 256).unwrap();
        let mut m = seed_mesh_from_map(&psi, &cfg()).unwrap();
        let b = Isometry::boost(2, 0.5);
        m.vertices = m.vertices.iter().map(|x: &HPoint| b.apply(x)).collect();
        assert!(hull_containment(&m, &g, 64).unwrap().violation < -0.1);
    }

    #[test]
    fn ellipse_samples_are_one_sided() {
        let psi = LaurentMap::ellipse(0.1).unwrap();
        let g = sample_quasicircle(&psi, 512).unwrap();
        let proxy = ConvexHullProxy::build(&g, 64).unwrap();
        assert_eq!(proxy.planes.len(), 64);
        let worst = proxy.planes.iter().fold(f64::INFINITY, |w, pl| {
            ConvexHullProxy::null_samples(&g)
                .iter()
                .fold(w, |w, &s| w.min(mink_inner(s, pl.oriented_dual())))
        });
        assert!(worst > -1e-12 && worst < 1e-9, "{worst}");
    }
}
