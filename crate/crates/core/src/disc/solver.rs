//! Area minimisation with the boundary loop held fixed.
//!
//! Vertices move only along their normals. Each step solves
//! `(L + 2M) δ = -g`, where `g` is the normal component of the area gradient,
//! `L` the cotangent stiffness matrix and `M` the vertex areas: `L + 2M` is
//! the second variation of area at a totally geodesic disc, so the step is a
//! Newton step near flat solutions and a well-scaled descent direction
//! elsewhere. A backtracking line search keeps the area non-increasing.

use serde::{Deserialize, Serialize};

use super::mesh::{edge_length, face_area, face_area_grad, SolverConfig, TriMesh};
use super::sparse::{conjugate_gradient, Csr};
use super::DiscError;
use crate::geom::{mink_inner, HPoint};

/// Outcome of [`minimize_area`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Minimized {
    pub mesh: TriMesh,
    pub converged: bool,
    pub iterations: usize,
    /// Final `max |g_i| / M_i` over interior vertices.
    pub residual: f64,
    /// Area after every accepted step, starting with the seed.
    pub area_history: Vec<f64>,
    /// Largest hyperbolic distance between a vertex and its seed position.
    pub max_displacement: f64,
}

/// Slack allowed in the area comparison for summation round-off.
const AREA_ROUNDOFF: f64 = 1e-13;

/// Normal components of the area gradient at every vertex.
pub fn normal_gradient(mesh: &TriMesh) -> Vec<f64> {
    let mut g = vec![0.0; mesh.vertices.len()];
    for f in &mesh.faces {
        let (_, gr) = face_area_grad(&mesh.vertices[f[0]], &mesh.vertices[f[1]], &mesh.vertices[f[2]]);
        for k in 0..3 {
            g[f[k]] += mink_inner(gr[k], mesh.normals[f[k]]);
        }
    }
    g
}

/// `max |g_i| / M_i` over interior vertices.
pub fn mean_curvature_residual(mesh: &TriMesh) -> f64 {
    let g = normal_gradient(mesh);
    let (_, m) = mesh.cotan_laplacian();
    let bnd = mesh.is_boundary_mask();
    (0..mesh.vertices.len())
        .filter(|&i| !bnd[i])
        .map(|i| g[i].abs() / m[i])
        .fold(0.0, f64::max)
}

fn displaced(mesh: &TriMesh, interior: &[usize], delta: &[f64], alpha: f64) -> Vec<HPoint> {
    let mut v = mesh.vertices.clone();
    for (k, &i) in interior.iter().enumerate() {
        v[i] = mesh.vertices[i].exp(mesh.normals[i].scale(alpha * delta[k]));
    }
    v
}

fn area_of(faces: &[[usize; 3]], v: &[HPoint]) -> f64 {
    faces.iter().map(|f| face_area(&v[f[0]], &v[f[1]], &v[f[2]])).sum()
}

/// Descends the hyperbolic area with the boundary fixed until the discrete
/// mean curvature falls below `config.tol` or the iteration cap is reached.
pub fn minimize_area(mesh: &TriMesh, config: &SolverConfig) -> Result<Minimized, DiscError> {
    config.validate()?;
    let seed = mesh.vertices.clone();
    let mut mesh = mesh.clone();
    mesh.compute_normals();
    let bnd = mesh.is_boundary_mask();
    let interior: Vec<usize> = (0..mesh.vertices.len()).filter(|&i| !bnd[i]).collect();
    let mut slot = vec![usize::MAX; mesh.vertices.len()];
    for (k, &i) in interior.iter().enumerate() {
        slot[i] = k;
    }
    let mut area = mesh.total_area();
    let mut history = vec![area];
    let mut residual = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;
    for it in 0..config.max_iters {
        iterations = it;
        if config.flip_every > 0 && it > 0 && it % config.flip_every == 0 {
            mesh.delaunay_flips();
            mesh.compute_normals();
        }
        let min_angle = mesh.min_angle_deg();
        if min_angle < 1.0 {
            return Err(DiscError::RemeshRequired(min_angle));
        }
        let g = normal_gradient(&mesh);
        let (w, m) = mesh.cotan_laplacian();
        residual = interior.iter().map(|&i| g[i].abs() / m[i]).fold(0.0, f64::max);
        if residual < config.tol {
            // a converged mesh must also be Delaunay; otherwise keep going
            // on the flipped connectivity
            if config.flip_every > 0 && mesh.delaunay_flips() > 0 {
                mesh.compute_normals();
                continue;
            }
            converged = true;
            break;
        }
        let rows: Vec<Vec<(usize, f64)>> = interior
            .iter()
            .map(|&i| {
                let mut row = Vec::with_capacity(w[i].len() + 1);
                let mut diag = 2.0 * m[i];
                let mut nb: Vec<(&usize, &f64)> = w[i].iter().collect();
                nb.sort_unstable_by_key(|e| *e.0);
                for (&j, &wij) in nb {
                    let wij = wij.max(0.0);
                    diag += wij;
                    if slot[j] != usize::MAX {
                        row.push((slot[j], -wij));
                    }
                }
                row.push((slot[i], diag));
                row
            })
            .collect();
        let a = Csr::from_rows(rows);
        let rhs: Vec<f64> = interior.iter().map(|&i| -g[i]).collect();
        let (delta, _) = conjugate_gradient(&a, &rhs, 1e-10, 2000);
        let dmax = delta.iter().fold(0.0f64, |s, d| s.max(d.abs()));
        let mut alpha = if dmax > config.max_step { config.max_step / dmax } else { 1.0 };
        let mut accepted = false;
        for _ in 0..40 {
            let trial = displaced(&mesh, &interior, &delta, alpha);
            let new_area = area_of(&mesh.faces, &trial);
            if new_area <= area + AREA_ROUNDOFF * area {
                mesh.vertices = trial;
                mesh.compute_normals();
                area = new_area;
                history.push(area);
                accepted = true;
                break;
            }
            alpha *= config.backtrack;
        }
        if !accepted {
            break;
        }
        iterations = it + 1;
    }
    if !converged && iterations == config.max_iters {
        // the last accepted step may already be below tolerance
        residual = mean_curvature_residual(&mesh);
        converged = residual < config.tol;
    }
    let max_displacement = seed
        .iter()
        .zip(&mesh.vertices)
        .map(|(a, b)| edge_length(a, b))
        .fold(0.0, f64::max);
    Ok(Minimized {
        mesh,
        converged,
        iterations,
        residual,
        area_history: history,
        max_displacement,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disc::seed_mesh_from_map;
    use crate::teich::LaurentMap;

    fn cfg(n: usize) -> SolverConfig {
        SolverConfig {
            target_vertices: n,
            ..SolverConfig::default()
        }
    }

    #[test]
    fn flat_disc_is_a_fixed_point() {
        let m = seed_mesh_from_map(&LaurentMap::identity(), &cfg(2000)).unwrap();
        let r = minimize_area(&m, &cfg(2000)).unwrap();
        assert!(r.converged);
        assert!(r.max_displacement < 1e-6);
    }

    #[test]
    fn ellipse_converges_with_monotone_area() {
        let c = cfg(2000);
        let m = seed_mesh_from_map(&LaurentMap::ellipse(0.05).unwrap(), &c).unwrap();
        let r = minimize_area(&m, &c).unwrap();
        assert!(r.converged, "{} after {} iterations", r.residual, r.iterations);
        for w in r.area_history.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + AREA_ROUNDOFF));
        }
        assert!(r.area_history.last().unwrap() < &r.area_history[0]);
        r.mesh.validate().unwrap();
    }
}
