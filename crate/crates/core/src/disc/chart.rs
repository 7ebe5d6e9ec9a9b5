//! Conformal parametrisations of a disc by the unit disc, the harmonic-map
//! residual of `σ` into the Poincaré ball, and conformal-factor bounds.

use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::fit::PolyFit;
use super::mesh::TriMesh;
use super::sparse::{conjugate_gradient, Csr};
use super::DiscError;

/// Largest relative conformality defect accepted by [`ConformalChart::from_mesh`].
pub const CHART_TOLERANCE: f64 = 0.3;

/// Samples `σ(z_i)` of a map from the unit disc into the Poincaré ball over a
/// triangulated set of nodes, with the conformal factor `f` of the induced
/// metric `e^{2f}|dz|^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConformalChart {
    pub z: Vec<Complex64>,
    pub sigma: Vec<[f64; 3]>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary: Vec<bool>,
    /// Nodes where derivatives are trusted: off the boundary and, for mesh
    /// charts, outside the 2-ring of the Green's-function pole, where the
    /// discrete logarithm displaces the first rings.
    pub reliable: Vec<bool>,
    /// `f` at every node; NaN where no fit was possible.
    pub f: Vec<f64>,
    /// Largest `(|<σ_x,σ_y>| + ||σ_x|-|σ_y||·m) / m^2` over reliable nodes,
    /// with `m` the mean of `|σ_x|` and `|σ_y|`.
    pub conformality_defect: f64,
}

/// First and second derivatives of `σ` at one node.
struct Jet {
    dx: [f64; 3],
    dy: [f64; 3],
    lap: [f64; 3],
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// `ω = ln(2 / (1 - |σ|^2))`, the log conformal factor of the ball metric.
fn omega(s: [f64; 3]) -> f64 {
    (2.0 / (1.0 - dot(s, s))).ln()
}

fn adjacency(n: usize, tris: &[[usize; 3]]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for t in tris {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            if !adj[a].contains(&b) {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
    }
    for a in adj.iter_mut() {
        a.sort_unstable();
    }
    adj
}

fn two_ring(adj: &[Vec<usize>], i: usize) -> Vec<usize> {
    let mut out: Vec<usize> = adj[i].clone();
    for &j in &adj[i] {
        out.extend(adj[j].iter().copied().filter(|&k| k != i));
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// Symmetric cotangent weights `(cot α + cot β)/2` of a triangulated surface
/// in Euclidean space.
fn euclidean_cotan_weights(x: &[[f64; 3]], faces: &[[usize; 3]]) -> Vec<HashMap<usize, f64>> {
    let mut w: Vec<HashMap<usize, f64>> = vec![HashMap::new(); x.len()];
    let sub = |a: [f64; 3], b: [f64; 3]| [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    for f in faces {
        for k in 0..3 {
            let (o, i, j) = (f[k], f[(k + 1) % 3], f[(k + 2) % 3]);
            let (u, v) = (sub(x[i], x[o]), sub(x[j], x[o]));
            let c = [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]];
            let cot = dot(u, v) / dot(c, c).sqrt();
            *w[i].entry(j).or_insert(0.0) += 0.5 * cot;
            *w[j].entry(i).or_insert(0.0) += 0.5 * cot;
        }
    }
    w
}

impl ConformalChart {
    fn jets(&self, adj: &[Vec<usize>]) -> Vec<Option<Jet>> {
        (0..self.z.len())
            .map(|i| {
                let ring = two_ring(adj, i);
                let mut pts = vec![[0.0, 0.0]];
                pts.extend(ring.iter().map(|&j| {
                    let d = self.z[j] - self.z[i];
                    [d.re, d.im]
                }));
                let deg = if pts.len() >= 14 { 3 } else { 2 };
                let mut jet = Jet { dx: [0.0; 3], dy: [0.0; 3], lap: [0.0; 3] };
                for l in 0..3 {
                    let vals: Vec<f64> = std::iter::once(self.sigma[i][l])
                        .chain(ring.iter().map(|&j| self.sigma[j][l]))
                        .collect();
                    let fit = PolyFit::fit(&pts, &vals, deg)?;
                    let g = fit.gradient(0.0, 0.0);
                    let h = fit.hessian(0.0, 0.0);
                    jet.dx[l] = g[0];
                    jet.dy[l] = g[1];
                    jet.lap[l] = h[(0, 0)] + h[(1, 1)];
                }
                Some(jet)
            })
            .collect()
    }

    fn finish(
        z: Vec<Complex64>,
        sigma: Vec<[f64; 3]>,
        triangles: Vec<[usize; 3]>,
        boundary: Vec<bool>,
        pole: Option<usize>,
    ) -> Self {
        let adj = adjacency(z.len(), &triangles);
        let mut reliable: Vec<bool> = boundary.iter().map(|b| !b).collect();
        if let Some(p) = pole {
            reliable[p] = false;
            for j in two_ring(&adj, p) {
                reliable[j] = false;
            }
        }
        let mut chart = ConformalChart {
            f: vec![f64::NAN; z.len()],
            z,
            sigma,
            triangles,
            boundary,
            reliable,
            conformality_defect: 0.0,
        };
        let jets = chart.jets(&adj);
        for (i, jet) in jets.iter().enumerate() {
            let Some(jet) = jet else { continue };
            let grad2 = dot(jet.dx, jet.dx) + dot(jet.dy, jet.dy);
            chart.f[i] = 0.5 * (0.5 * grad2).ln() + omega(chart.sigma[i]);
            if chart.reliable[i] {
                let (a, b) = (dot(jet.dx, jet.dx).sqrt(), dot(jet.dy, jet.dy).sqrt());
                let m = 0.5 * (a + b);
                let d = (dot(jet.dx, jet.dy).abs() + (a - b).abs() * m) / (m * m);
                chart.conformality_defect = chart.conformality_defect.max(d);
            }
        }
        chart
    }

    /// Samples `sigma` on the square lattice of spacing `h` inside the disc
    /// of radius `radius`, each square split into two triangles.
    pub fn from_grid(h: f64, radius: f64, sigma: impl Fn(Complex64) -> [f64; 3]) -> Result<Self, DiscError> {
        if !(h > 0.0 && radius > h && radius < 1.0) {
            return Err(DiscError::Config(format!("grid step {h} and radius {radius}")));
        }
        let m = (radius / h).floor() as i64;
        let side = (2 * m + 1) as usize;
        let mut index = vec![usize::MAX; side * side];
        let mut z = Vec::new();
        for a in -m..=m {
            for b in -m..=m {
                let p = Complex64::new(a as f64 * h, b as f64 * h);
                if p.norm() <= radius {
                    index[(a + m) as usize * side + (b + m) as usize] = z.len();
                    z.push(p);
                }
            }
        }
        let at = |a: usize, b: usize| index[a * side + b];
        let mut triangles = Vec::new();
        for a in 0..side - 1 {
            for b in 0..side - 1 {
                let (p, q, r, s) = (at(a, b), at(a + 1, b), at(a + 1, b + 1), at(a, b + 1));
                if p != usize::MAX && q != usize::MAX && r != usize::MAX {
                    triangles.push([p, q, r]);
                }
                if p != usize::MAX && r != usize::MAX && s != usize::MAX {
                    triangles.push([p, r, s]);
                }
            }
        }
        let adj = adjacency(z.len(), &triangles);
        // interior nodes have all four lattice neighbours
        let boundary = adj.iter().map(|a| a.len() < 6).collect();
        let sigma = z.iter().map(|&w| sigma(w)).collect();
        Ok(Self::finish(z, sigma, triangles, boundary, None))
    }

    /// Conformal chart of a mesh: `log z = -G + iθ` with `G` the discrete
    /// Dirichlet Green's function of the cotangent Laplacian with pole at
    /// vertex 0 and `θ` its harmonic conjugate, scaled so the boundary lies on
    /// the circle of radius `mesh.boundary_radius`.
    pub fn from_mesh(mesh: &TriMesh) -> Result<Self, DiscError> {
        let n = mesh.vertices.len();
        let bnd = mesh.is_boundary_mask();
        if bnd[0] || mesh.params.len() != n {
            return Err(DiscError::Topology("chart needs an interior vertex 0 and parameters".into()));
        }
        // harmonicity is conformally invariant, so the flat triangles of the
        // ball model serve as well as the hyperbolic ones and do not feel the
        // growth of the metric towards the boundary
        let ball = mesh.ball_coords();
        let w = euclidean_cotan_weights(&ball, &mesh.faces);

        let interior: Vec<usize> = (0..n).filter(|&i| !bnd[i]).collect();
        let mut slot = vec![usize::MAX; n];
        for (k, &i) in interior.iter().enumerate() {
            slot[i] = k;
        }
        let rows: Vec<Vec<(usize, f64)>> = interior
            .iter()
            .map(|&i| {
                let mut row = Vec::new();
                let mut diag = 0.0;
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
        let mut rhs = vec![0.0; interior.len()];
        rhs[slot[0]] = 2.0 * PI;
        let (gi, _) = conjugate_gradient(&Csr::from_rows(rows), &rhs, 1e-12, 20 * n);
        let mut g = vec![0.0; n];
        for (k, &i) in interior.iter().enumerate() {
            g[i] = gi[k];
        }

        // target increments of θ along edges, from the rotated gradient of -G
        let mut target: HashMap<(usize, usize), (f64, f64)> = HashMap::new();
        for f in &mesh.faces {
            if f.contains(&0) {
                continue;
            }
            let len = |a: usize, b: usize| {
                let (p, q) = (ball[f[a]], ball[f[b]]);
                dot([p[0] - q[0], p[1] - q[1], p[2] - q[2]], [p[0] - q[0], p[1] - q[1], p[2] - q[2]]).sqrt()
            };
            let (lab, lac, lbc) = (len(0, 1), len(0, 2), len(1, 2));
            let cx = (lab * lab + lac * lac - lbc * lbc) / (2.0 * lab);
            let p = [[0.0, 0.0], [lab, 0.0], [cx, (lac * lac - cx * cx).max(0.0).sqrt()]];
            let (e1, e2) = ([p[1][0], p[1][1]], [p[2][0], p[2][1]]);
            let det = e1[0] * e2[1] - e1[1] * e2[0];
            if det <= 0.0 {
                continue;
            }
            let (d1, d2) = (g[f[0]] - g[f[1]], g[f[0]] - g[f[2]]);
            // gradient of -G solves <grad, e_k> = d_k
            let gx = (d1 * e2[1] - d2 * e1[1]) / det;
            let gy = (e1[0] * d2 - e2[0] * d1) / det;
            let rot = [-gy, gx];
            for k in 0..3 {
                let (a, b) = (k, (k + 1) % 3);
                let inc = rot[0] * (p[b][0] - p[a][0]) + rot[1] * (p[b][1] - p[a][1]);
                let (i, j) = (f[a], f[b]);
                let e = target.entry((i.min(j), i.max(j))).or_insert((0.0, 0.0));
                e.0 += if i < j { inc } else { -inc };
                e.1 += 1.0;
            }
        }
        let wrap = |t: f64| (t + PI).rem_euclid(2.0 * PI) - PI;
        let others: Vec<usize> = (1..n).collect();
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); others.len()];
        let mut rhs = vec![0.0; others.len()];
        let mut keys: Vec<&(usize, usize)> = target.keys().collect();
        keys.sort_unstable();
        for &(i, j) in keys {
            if i == 0 {
                continue;
            }
            let (sum, cnt) = target[&(i, j)];
            let t = sum / cnt - wrap(mesh.params[j].arg() - mesh.params[i].arg());
            let c = w[i].get(&j).copied().unwrap_or(0.0).max(1e-3);
            let (a, b) = (i - 1, j - 1);
            rows[a].push((a, c));
            rows[a].push((b, -c));
            rows[b].push((b, c));
            rows[b].push((a, -c));
            rhs[a] -= c * t;
            rhs[b] += c * t;
        }
        // pin the first remaining vertex
        rows[0].push((0, 1.0));
        let (psi, _) = conjugate_gradient(&Csr::from_rows(rows), &rhs, 1e-12, 20 * n);

        let rho = mesh.boundary_radius;
        let mut z = vec![Complex64::new(0.0, 0.0); n];
        for i in 1..n {
            let theta = mesh.params[i].arg() + psi[i - 1];
            z[i] = Complex64::from_polar(rho * (-g[i]).exp(), theta);
        }
        let chart = Self::finish(z, ball, mesh.faces.clone(), bnd, Some(0));
        if !(chart.conformality_defect <= CHART_TOLERANCE) {
            return Err(DiscError::Chart(chart.conformality_defect));
        }
        Ok(chart)
    }
}

/// Largest normalised tension `|Δσ + Γ(σ)(∂σ, ∂σ)|` over reliable nodes:
/// for the ball metric `e^{2ω}δ` the tension is
/// `Δσ + 2 Dσ Dσᵀ ∇ω - |Dσ|^2 ∇ω`, measured in the ball metric and divided by
/// `‖dσ‖^2 = e^{2ω}|Dσ|^2`.
pub fn harmonic_residual(chart: &ConformalChart) -> f64 {
    let adj = adjacency(chart.z.len(), &chart.triangles);
    let jets = chart.jets(&adj);
    let mut worst = 0.0f64;
    for (i, jet) in jets.iter().enumerate() {
        let Some(jet) = jet else { continue };
        if !chart.reliable[i] {
            continue;
        }
        let s = chart.sigma[i];
        let r2 = dot(s, s);
        let gw = [2.0 * s[0] / (1.0 - r2), 2.0 * s[1] / (1.0 - r2), 2.0 * s[2] / (1.0 - r2)];
        let grad2 = dot(jet.dx, jet.dx) + dot(jet.dy, jet.dy);
        let (px, py) = (dot(jet.dx, gw), dot(jet.dy, gw));
        let mut tau = [0.0; 3];
        for l in 0..3 {
            tau[l] = jet.lap[l] + 2.0 * (jet.dx[l] * px + jet.dy[l] * py) - grad2 * gw[l];
        }
        let e = omega(s).exp();
        worst = worst.max(dot(tau, tau).sqrt() / (e * grad2));
    }
    worst
}

/// Relative slacks `min (P - e^{2f}) / P` and `min (e^{2f} - P/δ^2) / P` over
/// reliable nodes, with `P = 4/(1-|z|^2)^2` and `δ^2 = 1 + sup λ^2`.
pub fn conformal_factor_bounds(chart: &ConformalChart, sup_lambda: f64) -> (f64, f64) {
    let delta2 = 1.0 + sup_lambda * sup_lambda;
    let (mut upper, mut lower) = (f64::INFINITY, f64::INFINITY);
    for i in 0..chart.z.len() {
        if !chart.reliable[i] || !chart.f[i].is_finite() {
            continue;
        }
        let d = 1.0 - chart.z[i].norm_sqr();
        let p = 4.0 / (d * d);
        let e2f = (2.0 * chart.f[i]).exp();
        upper = upper.min((p - e2f) / p);
        lower = lower.min((e2f - p / delta2) / p);
    }
    (upper, lower)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disc::{minimize_area, seed_mesh_from_map, SolverConfig};
    use crate::teich::LaurentMap;

    fn planar(w: Complex64) -> [f64; 3] {
        [w.re, w.im, 0.0]
    }

    /// A disc automorphism: conformal and harmonic into the equatorial plane.
    fn moebius(w: Complex64) -> [f64; 3] {
        let a = Complex64::new(0.3, -0.2);
        planar((w - a) / (Complex64::new(1.0, 0.0) - a.conj() * w))
    }

    #[test]
    fn geodesic_disc_chart_is_exact() {
        let c = ConformalChart::from_grid(0.01, 0.9, planar).unwrap();
        assert!(harmonic_residual(&c) < 1e-3);
        let (u, l) = conformal_factor_bounds(&c, 0.0);
        assert!(u.abs() < 1e-9 && l.abs() < 1e-9, "{u} {l}");
        assert!(c.conformality_defect < 1e-9);
    }

    #[test]
    fn residual_refines_and_detects_perturbation() {
        let a = harmonic_residual(&ConformalChart::from_grid(0.04, 0.8, moebius).unwrap());
        let b = harmonic_residual(&ConformalChart::from_grid(0.02, 0.8, moebius).unwrap());
        assert!(b < 0.5 * a, "{a} {b}");
        let bent = |w: Complex64| {
            let s = moebius(w);
            [s[0], s[1], 0.1 * (1.0 - w.norm_sqr())]
        };
        let c = harmonic_residual(&ConformalChart::from_grid(0.02, 0.8, bent).unwrap());
        assert!(c > 10.0 * b, "{b} {c}");
    }

    #[test]
    fn violated_bound_is_reported() {
        let big = |w: Complex64| planar(w * 1.05);
        let c = ConformalChart::from_grid(0.02, 0.9, big).unwrap();
        assert!(conformal_factor_bounds(&c, 0.0).0 < 0.0);
    }

    #[test]
    fn mesh_chart_of_flat_disc_matches_identity() {
        let cfg = SolverConfig {
            target_vertices: 3000,
            ..SolverConfig::default()
        };
        let m = seed_mesh_from_map(&LaurentMap::identity(), &cfg).unwrap();
        let c = ConformalChart::from_mesh(&m).unwrap();
        let worst = c
            .z
            .iter()
            .zip(&c.sigma)
            .map(|(z, s)| (z - Complex64::new(s[0], s[1])).norm())
            .fold(0.0, f64::max);
        assert!(worst < 2e-2, "{worst}");
        let (u, l) = conformal_factor_bounds(&c, 0.0);
        assert!(u > -3e-2 && l > -3e-2, "{u} {l}");
        assert!(harmonic_residual(&c) < 5e-2);
    }

    #[test]
    fn mesh_chart_of_ellipse_disc() {
        let cfg = SolverConfig {
            target_vertices: 3000,
            ..SolverConfig::default()
        };
        let psi = LaurentMap::ellipse(0.1).unwrap();
        let r = minimize_area(&seed_mesh_from_map(&psi, &cfg).unwrap(), &cfg).unwrap();
        let c = ConformalChart::from_mesh(&r.mesh).unwrap();
        let lambda = crate::disc::principal_curvatures(&r.mesh, crate::disc::ProbeStrategy::TransportedFrame).sup_lambda;
        let (u, l) = conformal_factor_bounds(&c, lambda);
        assert!(u > -3e-2 && l > -3e-2, "{u} {l}");
        assert!(c.conformality_defect < 0.1);
    }
}
