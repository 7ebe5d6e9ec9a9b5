//! Triangulated discs on the hyperboloid: seeding, intrinsic geometry and
//! OFF input/output.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::DiscError;
use crate::geom::{ball_to_hpoint, mink_cross, mink_inner, to_ball, to_klein, BoundaryPoint, HPoint, MinkVec4};
use crate::teich::{Holomorphic, LaurentMap, Quasicircle};

/// Solver and seeding parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Euclidean gap between the boundary loop and the ideal sphere of the
    /// Poincaré ball.
    pub epsilon: f64,
    /// Target for `max |∂A/∂n| / A_i`, the discrete mean curvature.
    pub tol: f64,
    pub max_iters: usize,
    /// Backtracking factor of the line search.
    pub backtrack: f64,
    /// Largest normal step, in hyperbolic length.
    pub max_step: f64,
    /// Intrinsic Delaunay flips run every this many iterations.
    pub flip_every: usize,
    /// Approximate vertex count of the seed mesh.
    pub target_vertices: usize,
    /// Number of meshes in refinement studies; each level doubles the count.
    pub refinement_levels: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            epsilon: 0.02,
            tol: 1e-7,
            max_iters: 200,
            backtrack: 0.5,
            max_step: 0.5,
            flip_every: 50,
            target_vertices: 10_000,
            refinement_levels: 3,
            seed: 7,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), DiscError> {
        if !(self.epsilon > 1e-4 && self.epsilon < 0.2) {
            return Err(DiscError::Config(format!("epsilon {} outside (1e-4, 0.2)", self.epsilon)));
        }
        if !(self.tol > 0.0) {
            return Err(DiscError::Config("tol must be positive".into()));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) || !(self.max_step > 0.0) {
            return Err(DiscError::Config("invalid step rule".into()));
        }
        if self.target_vertices < 50 {
            return Err(DiscError::Config("at least 50 vertices are required".into()));
        }
        Ok(())
    }
}

/// A triangulated disc with vertices on the hyperboloid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriMesh {
    pub vertices: Vec<HPoint>,
    /// Counter-clockwise as seen from the side the normals point to.
    pub faces: Vec<[usize; 3]>,
    /// Boundary loop in positive order.
    pub boundary: Vec<usize>,
    pub normals: Vec<MinkVec4>,
    /// Parameter of each vertex in the seed disc; only its argument is used,
    /// as the base angle of conformal charts.
    pub params: Vec<Complex64>,
    /// Euclidean radius of the sphere carrying the boundary loop.
    pub boundary_radius: f64,
}

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Hyperbolic distance from the chordal Minkowski length of `a - b`.
pub fn edge_length(a: &HPoint, b: &HPoint) -> f64 {
    let d = a.vec() - b.vec();
    2.0 * (0.5 * d.norm_sq().max(0.0).sqrt()).asinh()
}

/// Area of the geodesic triangle `abc`.
pub fn face_area(a: &HPoint, b: &HPoint, c: &HPoint) -> f64 {
    let (a, b, c) = (a.vec(), b.vec(), c.vec());
    let n = mink_cross(a, b - a, c - a);
    let den = 1.0 - mink_inner(a, b) - mink_inner(b, c) - mink_inner(c, a);
    2.0 * n.norm_sq().max(0.0).sqrt().atan2(den)
}

/// Area of `abc` and its Minkowski gradients with respect to `a`, `b`, `c`;
/// tangent projection gives the Riemannian gradients.
pub fn face_area_grad(a: &HPoint, b: &HPoint, c: &HPoint) -> (f64, [MinkVec4; 3]) {
    let (a, b, c) = (a.vec(), b.vec(), c.vec());
    let n = mink_cross(a, b - a, c - a);
    let d = n.norm_sq().max(0.0);
    let sd = d.sqrt();
    let den = 1.0 - mink_inner(a, b) - mink_inner(b, c) - mink_inner(c, a);
    let area = 2.0 * sd.atan2(den);
    if sd == 0.0 {
        return (area, [MinkVec4::default(); 3]);
    }
    // D = <n, n>, n = cross(a, b, c); dD/da = 2 cross(b, c, n) by the
    // cyclic symmetry of the determinant.
    let gd = [
        mink_cross(b, c - b, n).scale(-2.0),
        mink_cross(c, a - c, n).scale(-2.0),
        mink_cross(a, b - a, n).scale(-2.0),
    ];
    let gden = [-(b + c), -(c + a), -(a + b)];
    let k = 2.0 / (d + den * den);
    let g = [0, 1, 2].map(|i| (den / (2.0 * sd) * gd[i] - sd * gden[i]).scale(k));
    (area, g)
}

/// Interior angle at the first vertex of a Euclidean triangle with sides
/// `opp` (opposite) and `s1`, `s2`.
fn angle(opp: f64, s1: f64, s2: f64) -> f64 {
    ((s1 * s1 + s2 * s2 - opp * opp) / (2.0 * s1 * s2)).clamp(-1.0, 1.0).acos()
}

impl TriMesh {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn is_boundary_mask(&self) -> Vec<bool> {
        let mut m = vec![false; self.vertices.len()];
        for &b in &self.boundary {
            m[b] = true;
        }
        m
    }

    pub fn interior_vertices(&self) -> Vec<usize> {
        let m = self.is_boundary_mask();
        (0..self.vertices.len()).filter(|&i| !m[i]).collect()
    }

    pub fn ball_coords(&self) -> Vec<[f64; 3]> {
        self.vertices.iter().map(to_ball).collect()
    }

    pub fn total_area(&self) -> f64 {
        self.faces
            .iter()
            .map(|f| face_area(&self.vertices[f[0]], &self.vertices[f[1]], &self.vertices[f[2]]))
            .sum()
    }

    /// Sorted neighbour lists.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for f in &self.faces {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        for l in &mut adj {
            l.sort_unstable();
            l.dedup();
        }
        adj
    }

    /// Vertices within `rings` edges of `i`, excluding `i`, in sorted order.
    pub fn k_ring(&self, adj: &[Vec<usize>], i: usize, rings: usize) -> Vec<usize> {
        let mut seen = vec![i];
        let mut frontier = vec![i];
        for _ in 0..rings {
            let mut next = Vec::new();
            for &v in &frontier {
                for &w in &adj[v] {
                    if !seen.contains(&w) {
                        seen.push(w);
                        next.push(w);
                    }
                }
            }
            frontier = next;
        }
        seen.remove(0);
        seen.sort_unstable();
        seen
    }

    /// Area-weighted unit normals, tangent to the hyperboloid at each vertex
    /// and oriented by the face winding.
    pub fn compute_normals(&mut self) {
        let mut acc = vec![MinkVec4::default(); self.vertices.len()];
        for f in &self.faces {
            let (a, b, c) = (self.vertices[f[0]].vec(), self.vertices[f[1]].vec(), self.vertices[f[2]].vec());
            // counter-clockwise faces get the upward normal
            let n = mink_cross(a, c - a, b - a);
            for &v in f {
                acc[v] = acc[v] + n;
            }
        }
        self.normals = acc
            .into_iter()
            .zip(&self.vertices)
            .map(|(n, x)| {
                let t = x.tangent_part(n);
                let s = t.norm_sq();
                if s > 0.0 {
                    t.scale(1.0 / s.sqrt())
                } else {
                    t
                }
            })
            .collect();
    }

    /// Cotangent weights of the Euclidean triangles with the hyperbolic edge
    /// lengths, per directed edge, and the mixed Voronoi area of each vertex.
    pub fn cotan_laplacian(&self) -> (Vec<HashMap<usize, f64>>, Vec<f64>) {
        let n = self.vertices.len();
        let mut w: Vec<HashMap<usize, f64>> = vec![HashMap::new(); n];
        let mut area = vec![0.0; n];
        for f in &self.faces {
            let x = [&self.vertices[f[0]], &self.vertices[f[1]], &self.vertices[f[2]]];
            // l[k] is the side opposite vertex k
            let l = [edge_length(x[1], x[2]), edge_length(x[2], x[0]), edge_length(x[0], x[1])];
            let ang = [angle(l[0], l[1], l[2]), angle(l[1], l[2], l[0]), angle(l[2], l[0], l[1])];
            let s = 0.5 * (l[0] + l[1] + l[2]);
            let ta = (s * (s - l[0]) * (s - l[1]) * (s - l[2])).max(0.0).sqrt();
            for k in 0..3 {
                let (i, j) = (f[(k + 1) % 3], f[(k + 2) % 3]);
                let c = 0.5 / ang[k].tan();
                *w[i].entry(j).or_insert(0.0) += c;
                *w[j].entry(i).or_insert(0.0) += c;
            }
            let obtuse = ang.iter().position(|&t| t > 0.5 * PI);
            for k in 0..3 {
                let v = f[k];
                area[v] += match obtuse {
                    None => {
                        // Voronoi region inside the triangle
                        let (lb, lc) = (l[(k + 1) % 3], l[(k + 2) % 3]);
                        0.125 * (lb * lb / ang[(k + 1) % 3].tan() + lc * lc / ang[(k + 2) % 3].tan())
                    }
                    Some(o) if o == k => 0.5 * ta,
                    Some(_) => 0.25 * ta,
                };
            }
        }
        (w, area)
    }

    /// Smallest interior angle of any face, in degrees.
    pub fn min_angle_deg(&self) -> f64 {
        let mut m = f64::INFINITY;
        for f in &self.faces {
            let x = [&self.vertices[f[0]], &self.vertices[f[1]], &self.vertices[f[2]]];
            let l = [edge_length(x[1], x[2]), edge_length(x[2], x[0]), edge_length(x[0], x[1])];
            for k in 0..3 {
                m = m.min(angle(l[k], l[(k + 1) % 3], l[(k + 2) % 3]));
            }
        }
        m.to_degrees()
    }

    /// Flips interior edges whose opposite angles sum past `π`, using the
    /// hyperbolic edge lengths. Returns the number of flips.
    pub fn delaunay_flips(&mut self) -> usize {
        let mut total = 0;
        for _ in 0..20 {
            let mut flips = 0;
            let mut edge_faces: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
            for (fi, f) in self.faces.iter().enumerate() {
                for k in 0..3 {
                    let (a, b) = (f[k], f[(k + 1) % 3]);
                    edge_faces.entry((a.min(b), a.max(b))).or_default().push(fi);
                }
            }
            let mut keys: Vec<(usize, usize)> = edge_faces.keys().copied().collect();
            keys.sort_unstable();
            let mut touched = vec![false; self.faces.len()];
            for e in keys {
                let fs = &edge_faces[&e];
                if fs.len() != 2 || touched[fs[0]] || touched[fs[1]] {
                    continue;
                }
                let (f0, f1) = (self.faces[fs[0]], self.faces[fs[1]]);
                let opp = |f: [usize; 3]| f.iter().copied().find(|&v| v != e.0 && v != e.1).unwrap();
                let (c, d) = (opp(f0), opp(f1));
                let x = |i: usize| &self.vertices[i];
                let ang_at = |p: usize| {
                    angle(edge_length(x(e.0), x(e.1)), edge_length(x(p), x(e.0)), edge_length(x(p), x(e.1)))
                };
                if ang_at(c) + ang_at(d) <= PI + 1e-12 {
                    continue;
                }
                // f0 contains a->b in its winding; the flipped pair keeps it
                let k = (0..3).find(|&k| f0[k] == c).unwrap();
                let (a, b) = (f0[(k + 1) % 3], f0[(k + 2) % 3]);
                self.faces[fs[0]] = [c, a, d];
                self.faces[fs[1]] = [d, b, c];
                touched[fs[0]] = true;
                touched[fs[1]] = true;
                flips += 1;
            }
            total += flips;
            if flips == 0 {
                break;
            }
        }
        total
    }

    /// Checks disc topology, the quadric and the boundary sphere.
    pub fn validate(&self) -> Result<(), DiscError> {
        let v = self.vertices.len() as i64;
        let f = self.faces.len() as i64;
        let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
        for face in &self.faces {
            for k in 0..3 {
                let (a, b) = (face[k], face[(k + 1) % 3]);
                *edges.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        if edges.values().any(|&c| c > 2) {
            return Err(DiscError::Topology("non-manifold edge".into()));
        }
        let e = edges.len() as i64;
        if v - e + f != 1 {
            return Err(DiscError::Topology(format!("Euler characteristic {}", v - e + f)));
        }
        let nb = edges.values().filter(|&&c| c == 1).count();
        if nb != self.boundary.len() {
            return Err(DiscError::Topology("boundary is not a single loop".into()));
        }
        for x in &self.vertices {
            let n = x.vec().norm_sq();
            if (n + 1.0).abs() > 1e-9 * x.vec().0[3].powi(2) {
                return Err(DiscError::Topology(format!("vertex off the hyperboloid ({n})")));
            }
        }
        for &b in &self.boundary {
            let r = norm3(to_ball(&self.vertices[b]));
            if (r - self.boundary_radius).abs() > 1e-9 {
                return Err(DiscError::Topology(format!("boundary vertex at radius {r}")));
            }
        }
        Ok(())
    }

    /// OFF text with Klein-model coordinates.
    pub fn to_off(&self) -> String {
        let mut s = String::from("OFF\n# vertex coordinates in the Klein model (x/x4)\n");
        let _ = writeln!(s, "# boundary_radius {:e}", self.boundary_radius);
        let _ = writeln!(s, "{} {} 0", self.vertices.len(), self.faces.len());
        for v in &self.vertices {
            let k = to_klein(v);
            let _ = writeln!(s, "{:.17e} {:.17e} {:.17e}", k[0], k[1], k[2]);
        }
        for f in &self.faces {
            let _ = writeln!(s, "3 {} {} {}", f[0], f[1], f[2]);
        }
        s
    }

    pub fn from_off(text: &str) -> Result<Self, DiscError> {
        let bad = |m: &str| DiscError::Parse(m.to_string());
        let mut lines = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty());
        if lines.next() != Some("OFF") {
            return Err(bad("missing OFF header"));
        }
        let counts: Vec<usize> = lines
            .next()
            .ok_or_else(|| bad("missing counts"))?
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad("bad count")))
            .collect::<Result<_, _>>()?;
        if counts.len() < 2 {
            return Err(bad("bad counts line"));
        }
        let mut vertices = Vec::with_capacity(counts[0]);
        for _ in 0..counts[0] {
            let k: Vec<f64> = lines
                .next()
                .ok_or_else(|| bad("missing vertex"))?
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| bad("bad coordinate")))
                .collect::<Result<_, _>>()?;
            if k.len() != 3 {
                return Err(bad("vertex needs three coordinates"));
            }
            let r2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
            if r2 >= 1.0 {
                return Err(bad("vertex outside the Klein ball"));
            }
            let s = 1.0 / (1.0 - r2).sqrt();
            vertices.push(HPoint::normalize(MinkVec4::new(k[0] * s, k[1] * s, k[2] * s, s)).map_err(DiscError::Geom)?);
        }
        let mut faces = Vec::with_capacity(counts[1]);
        for _ in 0..counts[1] {
            let t: Vec<usize> = lines
                .next()
                .ok_or_else(|| bad("missing face"))?
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| bad("bad index")))
                .collect::<Result<_, _>>()?;
            if t.len() != 4 || t[0] != 3 || t[1..].iter().any(|&i| i >= vertices.len()) {
                return Err(bad("only triangles are supported"));
            }
            faces.push([t[1], t[2], t[3]]);
        }
        let boundary = boundary_loop(&faces)?;
        let balls: Vec<[f64; 3]> = vertices.iter().map(to_ball).collect();
        let boundary_radius = boundary.iter().map(|&b| norm3(balls[b])).sum::<f64>() / boundary.len() as f64;
        let params = balls.iter().map(|b| Complex64::new(b[0], b[1])).collect();
        let mut mesh = TriMesh {
            vertices,
            faces,
            boundary,
            normals: Vec::new(),
            params,
            boundary_radius,
        };
        mesh.compute_normals();
        Ok(mesh)
    }
}

/// Boundary loop of an oriented disc triangulation, following the winding.
pub fn boundary_loop(faces: &[[usize; 3]]) -> Result<Vec<usize>, DiscError> {
    let mut directed: HashMap<(usize, usize), ()> = HashMap::new();
    for f in faces {
        for k in 0..3 {
            directed.insert((f[k], f[(k + 1) % 3]), ());
        }
    }
    let mut next: HashMap<usize, usize> = HashMap::new();
    for &(a, b) in directed.keys() {
        if !directed.contains_key(&(b, a)) && next.insert(a, b).is_some() {
            return Err(DiscError::Topology("pinched boundary".into()));
        }
    }
    let start = *next.keys().min().ok_or_else(|| DiscError::Topology("closed surface".into()))?;
    let mut lp = vec![start];
    let mut cur = next[&start];
    while cur != start {
        lp.push(cur);
        cur = *next.get(&cur).ok_or_else(|| DiscError::Topology("open boundary chain".into()))?;
        if lp.len() > next.len() {
            return Err(DiscError::Topology("boundary chain does not close".into()));
        }
    }
    if lp.len() != next.len() {
        return Err(DiscError::Topology("more than one boundary loop".into()));
    }
    Ok(lp)
}

fn signed_area2(a: Complex64, b: Complex64, c: Complex64) -> f64 {
    (b - a).re * (c - a).im - (b - a).im * (c - a).re
}

/// Joins two concentric rings of the parameter disc by a zipper of triangles.
fn zip_rings(
    faces: &mut Vec<[usize; 3]>,
    params: &[Complex64],
    inner: (usize, usize, f64),
    outer: (usize, usize, f64),
) {
    let (i0, n, oi) = inner;
    let (j0, m, oo) = outer;
    let ang_in = |i: usize| 2.0 * PI * (i as f64 + oi) / n as f64;
    let ang_out = |j: usize| 2.0 * PI * (j as f64 + oo) / m as f64;
    // outer start: largest angle not exceeding the first inner angle
    let a0 = ang_in(0);
    let mut js = 0usize;
    let mut best = f64::INFINITY;
    for j in 0..m {
        let d = (a0 - ang_out(j)).rem_euclid(2.0 * PI);
        if d < best {
            best = d;
            js = j;
        }
    }
    let unwrapped_out = |k: usize| a0 - best + 2.0 * PI * k as f64 / m as f64;
    let (mut i, mut j) = (0usize, 0usize);
    while i < n || j < m {
        let adv_inner = if i == n {
            false
        } else if j == m {
            true
        } else {
            ang_in(i + 1) < unwrapped_out(j + 1)
        };
        let vi = i0 + i % n;
        let vj = j0 + (js + j) % m;
        let tri = if adv_inner {
            i += 1;
            [vi, i0 + i % n, vj]
        } else {
            j += 1;
            [vi, j0 + (js + j) % m, vj]
        };
        let t = if signed_area2(params[tri[0]], params[tri[1]], params[tri[2]]) < 0.0 {
            [tri[0], tri[2], tri[1]]
        } else {
            tri
        };
        faces.push(t);
    }
}

/// Ring radii (hyperbolic) and counts of a hyperbolically uniform disc of
/// radius `s_max` with about `target` vertices.
fn ring_layout(s_max: f64, target: usize) -> Vec<(f64, usize)> {
    let area = 2.0 * PI * (s_max.cosh() - 1.0);
    let mut h = (area / (0.866 * target as f64)).sqrt();
    for _ in 0..30 {
        let rings = rings_for(s_max, h);
        let count: usize = rings.iter().map(|r| r.1).sum();
        let ratio = count as f64 / target as f64;
        if (ratio - 1.0).abs() < 0.01 {
            break;
        }
        h *= ratio.sqrt();
    }
    rings_for(s_max, h)
}

fn rings_for(s_max: f64, h: f64) -> Vec<(f64, usize)> {
    // rows of an equilateral lattice are sqrt(3)/2 apart
    let k_max = (s_max / (0.866 * h)).ceil().max(2.0) as usize;
    let ds = s_max / k_max as f64;
    let mut out = vec![(0.0, 1)];
    for k in 1..=k_max {
        let s = k as f64 * ds;
        let n = ((2.0 * PI * s.sinh() / h).round() as usize).max(6 * k);
        out.push((s, n));
    }
    out
}

/// Harmonic extension of sampled sphere-valued boundary data, evaluated at
/// `w / rho` in the unit disc.
struct HarmonicExtension {
    modes: Vec<(i64, [Complex64; 3])>,
}

impl HarmonicExtension {
    fn new(samples: &[[f64; 3]], offset: f64) -> Self {
        let n = samples.len();
        let mut planner = FftPlanner::<f64>::new();
        let fft = planner.plan_fft_forward(n);
        let mut coef = [vec![], vec![], vec![]];
        for (c, out) in coef.iter_mut().enumerate() {
            let mut buf: Vec<Complex64> = samples.iter().map(|s| Complex64::new(s[c], 0.0)).collect();
            fft.process(&mut buf);
            *out = buf;
        }
        let half = (n as i64 - 1) / 2;
        let mut modes = Vec::new();
        for m in -half..=half {
            let idx = m.rem_euclid(n as i64) as usize;
            // samples sit at angles 2π(j + offset)/n
            let shift = Complex64::from_polar(1.0 / n as f64, -2.0 * PI * m as f64 * offset / n as f64);
            let c = [coef[0][idx] * shift, coef[1][idx] * shift, coef[2][idx] * shift];
            if c.iter().any(|z| z.norm() > 0.0) {
                modes.push((m, c));
            }
        }
        HarmonicExtension { modes }
    }

    fn eval(&self, w: Complex64) -> [f64; 3] {
        let (r, phi) = w.to_polar();
        let mut out = [0.0; 3];
        for (m, c) in &self.modes {
            let f = Complex64::from_polar(r.powi(m.unsigned_abs() as i32), phi * *m as f64);
            for k in 0..3 {
                out[k] += (c[k] * f).re;
            }
        }
        out
    }
}

/// `ξ(Ψ(e^{iφ}))` with `|Ψ|^2 - 1` expanded around the unit circle so that
/// the identity gives points exactly on the equator.
pub fn boundary_point(psi: &LaurentMap, phi: f64) -> [f64; 3] {
    let u = Complex64::from_polar(1.0, phi);
    let delta = psi.eval(u) - u;
    if !delta.is_finite() || delta.norm() > 1e6 {
        return BoundaryPoint::Finite(u + delta).to_sphere();
    }
    let w = u + delta;
    let m = 2.0 * (u.conj() * delta).re + delta.norm_sqr();
    let d = 2.0 + m;
    [2.0 * w.re / d, 2.0 * w.im / d, m / d]
}

/// Seeds a disc whose boundary loop is the radial projection of `gamma` to
/// the sphere of radius `1 - ε` and whose interior is the harmonic extension
/// of that loop in ball coordinates, sampled on a hyperbolically uniform
/// ring triangulation.
const RELAX_ITERS: usize = 30;

fn plane_point(w: Complex64) -> HPoint {
    let d = 1.0 - w.norm_sqr();
    HPoint::from_spatial([2.0 * w.re / d, 2.0 * w.im / d, 0.0])
}

fn plane_param(x: &HPoint) -> Complex64 {
    let v = x.vec().0;
    Complex64::new(v[0], v[1]) / (1.0 + v[3])
}

/// Hyperbolic Lloyd relaxation of the parameter triangulation, interleaved
/// with Delaunay flips. The pointwise cotangent Laplacian is far more
/// accurate on the resulting near-centroidal meshes than on raw ring
/// zippers. Boundary parameters stay put.
fn relax_parameters(params: &mut [Complex64], faces: &mut Vec<[usize; 3]>, boundary: &[usize], iters: usize) {
    let mut fixed = vec![false; params.len()];
    for &b in boundary {
        fixed[b] = true;
    }
    fixed[0] = true;
    let mut flat = TriMesh {
        vertices: params.iter().map(|&w| plane_point(w)).collect(),
        faces: std::mem::take(faces),
        boundary: boundary.to_vec(),
        normals: Vec::new(),
        params: Vec::new(),
        boundary_radius: 1.0,
    };
    for _ in 0..iters {
        flat.delaunay_flips();
        let mut acc = vec![MinkVec4::default(); params.len()];
        for f in &flat.faces {
            let (a, b, c) = (&flat.vertices[f[0]], &flat.vertices[f[1]], &flat.vertices[f[2]]);
            let area = face_area(a, b, c);
            let centroid = a.vec() + b.vec() + c.vec();
            let centroid = centroid.scale(area / (-centroid.norm_sq()).sqrt());
            for &v in f {
                acc[v] = acc[v] + centroid;
            }
        }
        let old = flat.vertices.clone();
        for i in 0..params.len() {
            if !fixed[i] {
                if let Ok(x) = HPoint::normalize(acc[i]) {
                    flat.vertices[i] = x;
                }
            }
        }
        let inverted = flat.faces.iter().any(|f| {
            let w = |k: usize| plane_param(&flat.vertices[f[k]]);
            signed_area2(w(0), w(1), w(2)) <= 0.0
        });
        if inverted {
            flat.vertices = old;
            break;
        }
    }
    flat.delaunay_flips();
    for (w, x) in params.iter_mut().zip(&flat.vertices) {
        *w = plane_param(x);
    }
    *faces = flat.faces;
}

pub fn seed_mesh(gamma: &Quasicircle, config: &SolverConfig) -> Result<TriMesh, DiscError> {
    seed_mesh_from_map(&gamma.source, config)
}

pub fn seed_mesh_from_map(psi: &LaurentMap, config: &SolverConfig) -> Result<TriMesh, DiscError> {
    config.validate()?;
    let rho = 1.0 - config.epsilon;
    let s_max = 2.0 * rho.atanh();
    let rings = ring_layout(s_max, config.target_vertices);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let offsets: Vec<f64> = rings.iter().map(|_| rng.gen_range(0.0..1.0)).collect();

    let mut params = Vec::new();
    let mut starts = Vec::new();
    for (k, &(s, n)) in rings.iter().enumerate() {
        starts.push(params.len());
        let r = (0.5 * s).tanh();
        for j in 0..n {
            params.push(Complex64::from_polar(r, 2.0 * PI * (j as f64 + offsets[k]) / n as f64));
        }
    }
    let mut faces = Vec::new();
    // central fan
    let n1 = rings[1].1;
    for j in 0..n1 {
        faces.push([0, starts[1] + j, starts[1] + (j + 1) % n1]);
    }
    for k in 1..rings.len() - 1 {
        zip_rings(
            &mut faces,
            &params,
            (starts[k], rings[k].1, offsets[k]),
            (starts[k + 1], rings[k + 1].1, offsets[k + 1]),
        );
    }

    let kb = rings.len() - 1;
    let nb = rings[kb].1;
    let boundary: Vec<usize> = (starts[kb]..starts[kb] + nb).collect();
    relax_parameters(&mut params, &mut faces, &boundary, RELAX_ITERS);
    let g: Vec<[f64; 3]> = boundary
        .iter()
        .map(|&b| boundary_point(psi, params[b].arg()))
        .collect();
    let ext = HarmonicExtension::new(&g, offsets[kb]);
    let mut vertices = Vec::with_capacity(params.len());
    for (i, w) in params.iter().enumerate() {
        let x = if i >= starts[kb] {
            boundary_point(psi, w.arg())
        } else {
            ext.eval(w / rho)
        };
        let ball = [rho * x[0], rho * x[1], rho * x[2]];
        vertices.push(ball_to_hpoint(ball).map_err(DiscError::Geom)?);
    }
    let mut mesh = TriMesh {
        vertices,
        faces,
        boundary,
        normals: Vec::new(),
        params,
        boundary_radius: rho,
    };
    mesh.compute_normals();
    mesh.validate().map_err(|e| DiscError::Seeding(e.to_string()))?;
    if mesh.min_angle_deg() < 1.0 {
        return Err(DiscError::Seeding("degenerate seed triangle".into()));
    }
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::teich::sample_quasicircle;

    fn small() -> SolverConfig {
        SolverConfig {
            target_vertices: 1500,
            ..SolverConfig::default()
        }
    }

    #[test]
    fn circle_seed_is_flat() {
        let q = sample_quasicircle(&LaurentMap::identity(), 64).unwrap();
        let m = seed_mesh(&q, &small()).unwrap();
        assert!((m.len() as f64 - 1500.0).abs() < 100.0, "{}", m.len());
        for (x, n) in m.vertices.iter().zip(&m.normals) {
            assert_eq!(x.vec().0[2], 0.0);
            assert!((n.0[2] - 1.0).abs() < 1e-12, "{n:?}");
        }
        for &b in &m.boundary {
            assert!((norm3(to_ball(&m.vertices[b])) - 0.98).abs() < 1e-12);
        }
        assert!(m.min_angle_deg() > 15.0);
    }

    #[test]
    fn ellipse_seed_is_a_disc() {
        let q = sample_quasicircle(&LaurentMap::ellipse(0.1).unwrap(), 64).unwrap();
        let m = seed_mesh(&q, &small()).unwrap();
        m.validate().unwrap();
        let bad = SolverConfig {
            epsilon: 0.3,
            ..small()
        };
        assert!(seed_mesh(&q, &bad).is_err());
    }

    #[test]
    fn area_gradient_matches_finite_differences() {
        let a = HPoint::from_spatial([0.1, -0.2, 0.05]);
        let b = HPoint::from_spatial([0.4, 0.1, -0.1]);
        let c = HPoint::from_spatial([-0.05, 0.35, 0.2]);
        let (area, g) = face_area_grad(&a, &b, &c);
        assert!((area - face_area(&a, &b, &c)).abs() < 1e-15);
        let pts = [a, b, c];
        for k in 0..3 {
            for dir in [MinkVec4::E1, MinkVec4::E2, MinkVec4::E3] {
                let v = pts[k].tangent_part(dir);
                let h = 1e-6;
                let mut p = pts;
                p[k] = pts[k].exp(v.scale(h));
                let mut m = pts;
                m[k] = pts[k].exp(v.scale(-h));
                let fd = (face_area(&p[0], &p[1], &p[2]) - face_area(&m[0], &m[1], &m[2])) / (2.0 * h);
                let an = mink_inner(pts[k].tangent_part(g[k]), v);
                assert!((fd - an).abs() < 1e-8, "{fd} {an}");
            }
        }
    }

    #[test]
    fn area_of_ideal_like_triangle_is_below_pi() {
        let a = HPoint::from_spatial([30.0, 0.0, 0.0]);
        let b = HPoint::from_spatial([-15.0, 26.0, 0.0]);
        let c = HPoint::from_spatial([-15.0, -26.0, 0.0]);
        let t = face_area(&a, &b, &c);
        assert!(t < PI && t > 3.0);
    }

    #[test]
    fn off_round_trip_and_flips() {
        let q = sample_quasicircle(&LaurentMap::ellipse(0.05).unwrap(), 64).unwrap();
        let mut m = seed_mesh(&q, &small()).unwrap();
        let back = TriMesh::from_off(&m.to_off()).unwrap();
        assert_eq!(back.faces, m.faces);
        assert_eq!(back.boundary.len(), m.boundary.len());
        for (x, y) in back.vertices.iter().zip(&m.vertices) {
            assert!(edge_length(x, y) < 1e-9);
        }
        let before = m.min_angle_deg();
        m.delaunay_flips();
        m.validate().unwrap();
        assert!(m.min_angle_deg() >= before - 1e-9);
    }
}
