//! Principal curvatures, the equation `Δu = 2u` for sinh-distances to planes,
//! and the Schauder-ratio diagnostic.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt::Write as _;

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use super::fit::{sym_eigenvalues, PolyFit};
use super::mesh::{edge_length, TriMesh};
use super::DiscError;
use crate::geom::{mink_cross, mink_inner, HPoint, MinkVec4, SupportPlane};

/// How the planes `P` entering `Hess u - u E = <∇U, N> B` are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ProbeStrategy {
    /// Three planes through each vertex whose duals are the parallel
    /// transports of `e1`, `e2`, `e3` from the origin; the three estimates
    /// are combined by least squares in `<p_k, N>`.
    TransportedFrame,
    /// One fixed plane for every vertex.
    Plane(SupportPlane),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VertexFlag {
    Ok,
    Boundary,
    /// The neighbourhood is too small or too flat for the fit.
    Degenerate,
    /// `|<∇U, N>|` too small to divide by.
    WeakProbe,
}

impl VertexFlag {
    fn as_str(&self) -> &'static str {
        match self {
            VertexFlag::Ok => "ok",
            VertexFlag::Boundary => "boundary",
            VertexFlag::Degenerate => "degenerate",
            VertexFlag::WeakProbe => "weak_probe",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureReport {
    /// `λ` per vertex: half the spread of the eigenvalues of `B`; zero where
    /// the flag is not `Ok`.
    pub lambda: Vec<f64>,
    pub eigenvalues: Vec<[f64; 2]>,
    pub flags: Vec<VertexFlag>,
    pub sup_lambda: f64,
    /// Largest `|tr B|` over reported vertices.
    pub max_trace: f64,
    /// Reported vertices where the two eigenvalues have the same sign.
    pub same_sign_vertices: usize,
    pub vertex_count: usize,
}

impl CurvatureReport {
    fn from_operators(ops: Vec<Result<Matrix2<f64>, VertexFlag>>) -> Self {
        let n = ops.len();
        let mut lambda = vec![0.0; n];
        let mut eigenvalues = vec![[0.0; 2]; n];
        let mut flags = vec![VertexFlag::Ok; n];
        let (mut sup_lambda, mut max_trace, mut same) = (0.0f64, 0.0f64, 0);
        for (i, op) in ops.into_iter().enumerate() {
            match op {
                Ok(b) => {
                    let (e1, e2) = sym_eigenvalues(&b);
                    eigenvalues[i] = [e1, e2];
                    lambda[i] = 0.5 * (e1 - e2);
                    sup_lambda = sup_lambda.max(lambda[i]);
                    max_trace = max_trace.max((e1 + e2).abs());
                    if e1 * e2 > 0.0 {
                        same += 1;
                    }
                }
                Err(f) => flags[i] = f,
            }
        }
        CurvatureReport {
            lambda,
            eigenvalues,
            flags,
            sup_lambda,
            max_trace,
            same_sign_vertices: same,
            vertex_count: n,
        }
    }

    /// CSV with header `vertexId,lambda,flag`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("vertexId,lambda,flag\n");
        for (i, (l, f)) in self.lambda.iter().zip(&self.flags).enumerate() {
            let _ = writeln!(s, "{},{},{}", i, l, f.as_str());
        }
        s
    }

    /// Largest relative disagreement `|λ_a - λ_b| / λ_a` over vertices where
    /// both reports are valid and `λ_a > threshold`.
    pub fn max_relative_disagreement(&self, other: &CurvatureReport, threshold: f64) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.lambda.len().min(other.lambda.len()) {
            if self.flags[i] == VertexFlag::Ok && other.flags[i] == VertexFlag::Ok && self.lambda[i] > threshold {
                worst = worst.max((self.lambda[i] - other.lambda[i]).abs() / self.lambda[i]);
            }
        }
        worst
    }
}

/// Orthonormal basis of the tangent plane of the surface at `x`.
fn tangent_frame(x: &HPoint, n: MinkVec4) -> Option<(MinkVec4, MinkVec4)> {
    let mut best: Option<MinkVec4> = None;
    let mut best_norm = 0.0;
    for r in [MinkVec4::E1, MinkVec4::E2, MinkVec4::E3] {
        let t = x.tangent_part(r);
        let t = t - mink_inner(t, n) * n;
        let s = t.norm_sq();
        if s > best_norm {
            best_norm = s;
            best = Some(t);
        }
    }
    let e1 = best?.normalized_spacelike().ok()?;
    let e2 = mink_cross(x.vec(), n, e1).normalized_spacelike().ok()?;
    Some((e1, e2))
}

/// Surface-tangent coordinates of `y` seen from `x`.
fn local_coords(x: &HPoint, frame: &(MinkVec4, MinkVec4), y: &HPoint) -> [f64; 2] {
    let v = x.log(y);
    [mink_inner(v, frame.0), mink_inner(v, frame.1)]
}

fn fit_degree(count: usize) -> usize {
    if count >= 18 {
        4
    } else if count >= 14 {
        3
    } else {
        2
    }
}

/// Shape operator from the sinh-distance functions to probe planes.
pub fn principal_curvatures(mesh: &TriMesh, probe: ProbeStrategy) -> CurvatureReport {
    let adj = mesh.adjacency();
    let bnd = mesh.is_boundary_mask();
    let ops = (0..mesh.vertices.len())
        .map(|i| {
            if bnd[i] {
                return Err(VertexFlag::Boundary);
            }
            let x = &mesh.vertices[i];
            let n = mesh.normals[i];
            let frame = tangent_frame(x, n).ok_or(VertexFlag::Degenerate)?;
            let ring = mesh.k_ring(&adj, i, 2);
            let mut pts = vec![[0.0, 0.0]];
            pts.extend(ring.iter().map(|&j| local_coords(x, &frame, &mesh.vertices[j])));
            let deg = fit_degree(pts.len());
            let duals: Vec<MinkVec4> = match probe {
                ProbeStrategy::TransportedFrame => [MinkVec4::E1, MinkVec4::E2, MinkVec4::E3]
                    .iter()
                    .map(|&e| x.transport_from_origin(e))
                    .collect(),
                ProbeStrategy::Plane(p) => vec![p.oriented_dual()],
            };
            let mut num = Matrix2::zeros();
            let mut den = 0.0;
            for p in duals {
                // <∇U, N> with ∇U = p + <p, x> x
                let c = mink_inner(x.tangent_part(p), n);
                let u0 = mink_inner(x.vec(), p);
                let vals: Vec<f64> = std::iter::once(u0)
                    .chain(ring.iter().map(|&j| mink_inner(mesh.vertices[j].vec(), p)))
                    .collect();
                let fit = PolyFit::fit(&pts, &vals, deg).ok_or(VertexFlag::Degenerate)?;
                let h = fit.hessian(0.0, 0.0) - Matrix2::identity() * fit.value(0.0, 0.0);
                num += h * c;
                den += c * c;
            }
            if den < 1e-2 {
                return Err(VertexFlag::WeakProbe);
            }
            Ok(num / den)
        })
        .collect();
    CurvatureReport::from_operators(ops)
}

/// Independent estimate: Euclidean height fit in Poincaré-ball coordinates,
/// converted to the hyperbolic metric by the conformal change
/// `κ_h = (1 - |X|^2)/2 κ_E + <X, n>`.
pub fn ball_fit_curvatures(mesh: &TriMesh) -> CurvatureReport {
    let adj = mesh.adjacency();
    let bnd = mesh.is_boundary_mask();
    let ball = mesh.ball_coords();
    let sub = |a: [f64; 3], b: [f64; 3]| [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    let dot = |a: [f64; 3], b: [f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    let cross = |a: [f64; 3], b: [f64; 3]| {
        [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
    };
    let mut en = vec![[0.0; 3]; ball.len()];
    for f in &mesh.faces {
        let c = cross(sub(ball[f[1]], ball[f[0]]), sub(ball[f[2]], ball[f[0]]));
        for &v in f {
            for k in 0..3 {
                en[v][k] += c[k];
            }
        }
    }
    let ops = (0..ball.len())
        .map(|i| {
            if bnd[i] {
                return Err(VertexFlag::Boundary);
            }
            let nn = dot(en[i], en[i]).sqrt();
            if nn == 0.0 {
                return Err(VertexFlag::Degenerate);
            }
            let n = [en[i][0] / nn, en[i][1] / nn, en[i][2] / nn];
            let r = if n[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
            let t1 = {
                let d = dot(r, n);
                let v = [r[0] - d * n[0], r[1] - d * n[1], r[2] - d * n[2]];
                let l = dot(v, v).sqrt();
                [v[0] / l, v[1] / l, v[2] / l]
            };
            let t2 = cross(n, t1);
            let x0 = ball[i];
            let ring = mesh.k_ring(&adj, i, 2);
            let mut pts = vec![[0.0, 0.0]];
            let mut vals = vec![0.0];
            for &j in &ring {
                let d = sub(ball[j], x0);
                pts.push([dot(d, t1), dot(d, t2)]);
                vals.push(dot(d, n));
            }
            let fit = PolyFit::fit(&pts, &vals, fit_degree(pts.len())).ok_or(VertexFlag::Degenerate)?;
            let g = fit.gradient(0.0, 0.0);
            let h = fit.hessian(0.0, 0.0);
            let w = (1.0 + g[0] * g[0] + g[1] * g[1]).sqrt();
            let first = Matrix2::new(1.0 + g[0] * g[0], g[0] * g[1], g[0] * g[1], 1.0 + g[1] * g[1]);
            // shape operator of the outward-curving convention, -I^{-1} II
            let ke = -first.try_inverse().ok_or(VertexFlag::Degenerate)? * h / w;
            let r2 = dot(x0, x0);
            let kh = ke * (0.5 * (1.0 - r2)) + Matrix2::identity() * dot(x0, n);
            Ok(-kh)
        })
        .collect();
    CurvatureReport::from_operators(ops)
}

/// `u = sinh` of the signed distance to `plane` at every vertex.
pub fn plane_function(mesh: &TriMesh, plane: &SupportPlane) -> Vec<f64> {
    let p = plane.oriented_dual();
    mesh.vertices.iter().map(|x| mink_inner(x.vec(), p)).collect()
}

/// `max |Δu - 2u| / (1 + |u|)` over interior vertices, with the cotangent
/// Laplacian of the induced metric.
pub fn pde_residual(mesh: &TriMesh, plane: &SupportPlane) -> f64 {
    let u = plane_function(mesh, plane);
    let (w, m) = mesh.cotan_laplacian();
    let bnd = mesh.is_boundary_mask();
    let mut worst = 0.0f64;
    for i in 0..u.len() {
        if bnd[i] {
            continue;
        }
        let mut nb: Vec<(&usize, &f64)> = w[i].iter().collect();
        nb.sort_unstable_by_key(|e| *e.0);
        let lap: f64 = nb.iter().map(|(&j, &wij)| wij * (u[j] - u[i])).sum::<f64>() / m[i];
        worst = worst.max((lap - 2.0 * u[i]).abs() / (1.0 + u[i].abs()));
    }
    worst
}

#[derive(PartialEq)]
struct Item(f64, usize);

impl Eq for Item {}

impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Item {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

/// Edge-path distances from `src`, up to `limit`.
pub fn mesh_distances(mesh: &TriMesh, adj: &[Vec<usize>], src: usize, limit: f64) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; mesh.vertices.len()];
    dist[src] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(Item(0.0, src));
    while let Some(Item(d, v)) = heap.pop() {
        if d > dist[v] || d > limit {
            continue;
        }
        for &w in &adj[v] {
            let nd = d + edge_length(&mesh.vertices[v], &mesh.vertices[w]);
            if nd < dist[w] {
                dist[w] = nd;
                heap.push(Item(nd, w));
            }
        }
    }
    dist
}

/// `‖u‖_{C²(B_{R/2})} / ‖u‖_{C⁰(B_R)}` for `u` the sinh-distance to `plane`,
/// from a quartic fit in tangent coordinates at `vertex`. Zero when `u`
/// vanishes on the ball.
pub fn schauder_ratio(mesh: &TriMesh, vertex: usize, plane: &SupportPlane, r: f64) -> Result<f64, DiscError> {
    let adj = mesh.adjacency();
    let bnd = mesh.is_boundary_mask();
    let dist = mesh_distances(mesh, &adj, vertex, 1.5 * r);
    if (0..dist.len()).any(|i| bnd[i] && dist[i] <= 1.25 * r) {
        return Err(DiscError::OutOfDomain(vertex));
    }
    let u = plane_function(mesh, plane);
    let ball: Vec<usize> = (0..dist.len()).filter(|&i| dist[i] <= r).collect();
    let c0 = ball.iter().map(|&i| u[i].abs()).fold(0.0, f64::max);
    if c0 < 1e-14 {
        return Ok(0.0);
    }
    let x = &mesh.vertices[vertex];
    let frame = tangent_frame(x, mesh.normals[vertex]).ok_or(DiscError::OutOfDomain(vertex))?;
    let pts: Vec<[f64; 2]> = ball.iter().map(|&i| local_coords(x, &frame, &mesh.vertices[i])).collect();
    let vals: Vec<f64> = ball.iter().map(|&i| u[i]).collect();
    let fit = PolyFit::fit(&pts, &vals, 4).ok_or(DiscError::OutOfDomain(vertex))?;
    let (mut s0, mut s1, mut s2) = (0.0f64, 0.0f64, 0.0f64);
    for (k, &i) in ball.iter().enumerate() {
        if dist[i] <= 0.5 * r {
            let [px, py] = pts[k];
            let g = fit.gradient(px, py);
            let h = fit.hessian(px, py);
            s0 = s0.max(fit.value(px, py).abs());
            s1 = s1.max((g[0] * g[0] + g[1] * g[1]).sqrt());
            s2 = s2.max(h.norm());
        }
    }
    Ok((s0 + s1 + s2) / c0)
}
