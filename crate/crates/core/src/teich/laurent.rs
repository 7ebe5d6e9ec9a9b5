//! Conformal maps `z + sum c_k z^-k` of the exterior disc and the quasicircles
//! they bound.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::schwarzian::Holomorphic;
use super::TeichError;

/// Largest supported truncation order.
pub const MAX_ORDER: usize = 16;

/// Default resolution of the univalence certificate built by [`LaurentMap::new`].
pub const DEFAULT_CERT_RESOLUTION: usize = 256;

/// Proof record that a [`LaurentMap`] passed [`univalence_grid_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnivalenceCertificate {
    pub resolution: usize,
    pub rings: usize,
    /// Smallest `|Ψ'|` seen on the grid.
    pub min_derivative: f64,
}

/// Why a map failed the univalence check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NonUnivalenceWitness {
    /// `Ψ'` vanishes (numerically) at a grid point.
    CriticalPoint { z: Complex64 },
    /// Two non-adjacent edges of the image of a ring meet.
    SelfIntersection { z1: Complex64, z2: Complex64 },
    /// The image of a ring winds negatively, so some values are taken twice.
    ReversedOrientation { radius: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum UnivalenceVerdict {
    Certified(UnivalenceCertificate),
    Failed(NonUnivalenceWitness),
}

impl UnivalenceVerdict {
    pub fn is_certified(&self) -> bool {
        matches!(self, UnivalenceVerdict::Certified(_))
    }
}

/// `Ψ(z) = z + sum_{k=1..m} c_k z^{-k}` on `|z| > 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaurentMap {
    coefficients: Vec<Complex64>,
    certificate: Option<UnivalenceCertificate>,
}

impl LaurentMap {
    /// Builds the map and certifies univalence at [`DEFAULT_CERT_RESOLUTION`].
    pub fn new(coefficients: Vec<Complex64>) -> Result<Self, TeichError> {
        Self::with_resolution(coefficients, DEFAULT_CERT_RESOLUTION)
    }

    pub fn with_resolution(coefficients: Vec<Complex64>, resolution: usize) -> Result<Self, TeichError> {
        let mut map = Self::uncertified(coefficients)?;
        match univalence_grid_check(&map, resolution) {
            UnivalenceVerdict::Certified(c) => {
                map.certificate = Some(c);
                Ok(map)
            }
            UnivalenceVerdict::Failed(w) => Err(TeichError::NotUnivalent(w)),
        }
    }

    /// The map without a univalence certificate; only the order is checked.
    pub fn uncertified(coefficients: Vec<Complex64>) -> Result<Self, TeichError> {
        if coefficients.len() > MAX_ORDER {
            return Err(TeichError::OrderTooLarge(coefficients.len()));
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(TeichError::NonFinite);
        }
        let mut coefficients = coefficients;
        while coefficients.last().is_some_and(|c| *c == Complex64::new(0.0, 0.0)) {
            coefficients.pop();
        }
        Ok(LaurentMap {
            coefficients,
            certificate: None,
        })
    }

    pub fn identity() -> Self {
        LaurentMap {
            coefficients: Vec::new(),
            certificate: Some(UnivalenceCertificate {
                resolution: usize::MAX,
                rings: 0,
                min_derivative: 1.0,
            }),
        }
    }

    /// `Ψ(z) = z + t/z`, whose boundary is an ellipse with semi-axes `1 ± t`.
    pub fn ellipse(t: f64) -> Result<Self, TeichError> {
        Self::new(vec![Complex64::new(t, 0.0)])
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn certificate(&self) -> Option<&UnivalenceCertificate> {
        self.certificate.as_ref()
    }

    pub fn is_identity(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// Parses `k re im` lines; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self, TeichError> {
        let mut coeffs: Vec<Complex64> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = || TeichError::Parse(format!("line {}: `{}`", lineno + 1, raw));
            let mut it = line.split_whitespace();
            let k: usize = it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
            let re: f64 = it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
            let im: f64 = it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
            if it.next().is_some() || k == 0 {
                return Err(bad());
            }
            if k > MAX_ORDER {
                return Err(TeichError::OrderTooLarge(k));
            }
            if coeffs.len() < k {
                coeffs.resize(k, Complex64::new(0.0, 0.0));
            }
            coeffs[k - 1] = Complex64::new(re, im);
        }
        Self::new(coeffs)
    }

    /// `k re im` lines, one per nonzero coefficient.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (i, c) in self.coefficients.iter().enumerate() {
            if *c != Complex64::new(0.0, 0.0) {
                let _ = writeln!(s, "{} {:e} {:e}", i + 1, c.re, c.im);
            }
        }
        s
    }

    /// The quadratic differential `S_Ψ(1/ζ) ζ^{-4}` in the inverted coordinate
    /// `ζ = 1/z` of the unit disc; holomorphic at `ζ = 0`.
    pub fn inverted_schwarzian(&self, zeta: Complex64) -> Result<Complex64, TeichError> {
        // Ψ'(1/ζ) = A, Ψ''(1/ζ) = ζ^3 B, Ψ'''(1/ζ) = -ζ^4 C
        let mut a = Complex64::new(1.0, 0.0);
        let mut b = Complex64::new(0.0, 0.0);
        let mut c = Complex64::new(0.0, 0.0);
        let mut pw = Complex64::new(1.0, 0.0); // ζ^{k-1}
        for (i, ck) in self.coefficients.iter().enumerate() {
            let k = (i + 1) as f64;
            a -= k * ck * pw * zeta * zeta;
            b += k * (k + 1.0) * ck * pw;
            c += k * (k + 1.0) * (k + 2.0) * ck * pw;
            pw *= zeta;
        }
        if !(a.norm() > 1e-14) {
            return Err(TeichError::CriticalPoint(zeta.inv()));
        }
        Ok(-c / a - 1.5 * zeta * zeta * b * b / (a * a))
    }
}

impl Holomorphic for LaurentMap {
    fn jet(&self, z: Complex64) -> [Complex64; 4] {
        let w = z.inv();
        let mut f = z;
        let mut d1 = Complex64::new(1.0, 0.0);
        let mut d2 = Complex64::new(0.0, 0.0);
        let mut d3 = Complex64::new(0.0, 0.0);
        let mut pw = w; // z^{-k}
        for (i, ck) in self.coefficients.iter().enumerate() {
            let k = (i + 1) as f64;
            let t = ck * pw;
            f += t;
            d1 -= k * t * w;
            d2 += k * (k + 1.0) * t * w * w;
            d3 -= k * (k + 1.0) * (k + 2.0) * t * w * w * w;
            pw *= w;
        }
        [f, d1, d2, d3]
    }
}

fn orient(a: Complex64, b: Complex64, c: Complex64) -> f64 {
    (b - a).re * (c - a).im - (b - a).im * (c - a).re
}

fn point_segment_distance(p: Complex64, a: Complex64, b: Complex64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = (((p - a) * ab.conj()).re / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// Whether the closed segments `[a,b]` and `[c,d]` cross or come within `tol`.
fn segments_meet(a: Complex64, b: Complex64, c: Complex64, d: Complex64, tol: f64) -> bool {
    let o1 = orient(a, b, c);
    let o2 = orient(a, b, d);
    let o3 = orient(c, d, a);
    let o4 = orient(c, d, b);
    if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
        return true;
    }
    let dist = point_segment_distance(c, a, b)
        .min(point_segment_distance(d, a, b))
        .min(point_segment_distance(a, c, d))
        .min(point_segment_distance(b, c, d));
    dist <= tol
}

/// First pair of non-adjacent edges of the closed polygon that meet.
pub(crate) fn polygon_self_intersection(pts: &[Complex64]) -> Option<(usize, usize)> {
    let n = pts.len();
    if n < 3 {
        return Some((0, 0));
    }
    let diam = pts
        .iter()
        .map(|p| (p - pts[0]).norm())
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let tol = 1e-12 * diam;
    // bounding boxes prune most pairs
    let boxes: Vec<[f64; 4]> = (0..n)
        .map(|i| {
            let (a, b) = (pts[i], pts[(i + 1) % n]);
            [a.re.min(b.re), a.re.max(b.re), a.im.min(b.im), a.im.max(b.im)]
        })
        .collect();
    for i in 0..n {
        for j in (i + 2)..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let (bi, bj) = (&boxes[i], &boxes[j]);
            if bi[1] + tol < bj[0] || bj[1] + tol < bi[0] || bi[3] + tol < bj[2] || bj[3] + tol < bi[2] {
                continue;
            }
            if segments_meet(pts[i], pts[(i + 1) % n], pts[j], pts[(j + 1) % n], tol) {
                return Some((i, j));
            }
        }
    }
    None
}

fn signed_area(pts: &[Complex64]) -> f64 {
    let n = pts.len();
    (0..n)
        .map(|i| {
            let (a, b) = (pts[i], pts[(i + 1) % n]);
            a.re * b.im - a.im * b.re
        })
        .sum::<f64>()
        * 0.5
}

/// Radii of the boundary-concentrated test grid.
fn certificate_radii() -> Vec<f64> {
    let mut r = vec![1.0];
    r.extend((0..6).map(|j| 1.0 + 0.5f64.powi(j)));
    r.push(4.0);
    r
}

/// Tests injectivity of `Ψ` on `|z| > 1`: on each ring of the grid `Ψ'` must
/// not vanish and the image polygon must be simple and positively oriented.
/// For `Ψ(z) = z + O(1/z)` the argument principle turns a simple positive
/// image of `|z| = r` into injectivity on `|z| > r`.
pub fn univalence_grid_check(psi: &LaurentMap, resolution: usize) -> UnivalenceVerdict {
    let resolution = resolution.max(64);
    let radii = certificate_radii();
    let mut min_derivative = f64::INFINITY;
    for &r in &radii {
        let mut pts = Vec::with_capacity(resolution);
        let mut zs = Vec::with_capacity(resolution);
        for j in 0..resolution {
            let z = Complex64::from_polar(r, 2.0 * PI * j as f64 / resolution as f64);
            let [f, d1, _, _] = psi.jet(z);
            let scale = 1.0 + psi.coefficients.iter().map(|c| c.norm()).sum::<f64>();
            if d1.norm() <= 1e-9 * scale {
                return UnivalenceVerdict::Failed(NonUnivalenceWitness::CriticalPoint { z });
            }
            min_derivative = min_derivative.min(d1.norm());
            pts.push(f);
            zs.push(z);
        }
        if signed_area(&pts) <= 0.0 {
            return UnivalenceVerdict::Failed(NonUnivalenceWitness::ReversedOrientation { radius: r });
        }
        if let Some((i, j)) = polygon_self_intersection(&pts) {
            return UnivalenceVerdict::Failed(NonUnivalenceWitness::SelfIntersection {
                z1: zs[i],
                z2: zs[j],
            });
        }
    }
    UnivalenceVerdict::Certified(UnivalenceCertificate {
        resolution,
        rings: radii.len(),
        min_derivative,
    })
}

/// Samples `Ψ(e^{iθ_j})` of a quasicircle together with the data computed
/// for it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quasicircle {
    pub thetas: Vec<f64>,
    pub samples: Vec<Complex64>,
    pub source: LaurentMap,
    /// Upper bound for the dilatation (Ahlfors-Weill), when available.
    pub k_upper: Option<f64>,
    pub bers_norm: Option<f64>,
}

impl Quasicircle {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// CSV with header `theta,re,im`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("theta,re,im\n");
        for (t, z) in self.thetas.iter().zip(&self.samples) {
            let _ = writeln!(s, "{},{},{}", t, z.re, z.im);
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> std::io::Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_csv().as_bytes())
    }
}

/// `n` equally spaced samples of `Ψ(S^1)`; the polygon must be simple.
pub fn sample_quasicircle(psi: &LaurentMap, n: usize) -> Result<Quasicircle, TeichError> {
    if n < 16 {
        return Err(TeichError::TooFewSamples(n));
    }
    let thetas: Vec<f64> = (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect();
    let samples: Vec<Complex64> = thetas
        .iter()
        .map(|&t| psi.eval(Complex64::from_polar(1.0, t)))
        .collect();
    if let Some((i, j)) = polygon_self_intersection(&samples) {
        return Err(TeichError::NotUnivalent(NonUnivalenceWitness::SelfIntersection {
            z1: Complex64::from_polar(1.0, thetas[i]),
            z2: Complex64::from_polar(1.0, thetas[j]),
        }));
    }
    if signed_area(&samples) <= 0.0 {
        return Err(TeichError::NotUnivalent(NonUnivalenceWitness::ReversedOrientation {
            radius: 1.0,
        }));
    }
    Ok(Quasicircle {
        thetas,
        samples,
        source: psi.clone(),
        k_upper: None,
        bers_norm: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identity_samples_the_unit_circle() {
        let q = sample_quasicircle(&LaurentMap::identity(), 16).unwrap();
        for (idx, want) in [(0, c(1.0, 0.0)), (4, c(0.0, 1.0)), (8, c(-1.0, 0.0)), (12, c(0.0, -1.0))] {
            assert!((q.samples[idx] - want).norm() < 1e-15);
        }
        assert!(sample_quasicircle(&LaurentMap::identity(), 4).is_err());
    }

    #[test]
    fn ellipse_axes() {
        let t = 0.1;
        let q = sample_quasicircle(&LaurentMap::ellipse(t).unwrap(), 64).unwrap();
        for (theta, z) in q.thetas.iter().zip(&q.samples) {
            let want = c((1.0 + t) * theta.cos(), (1.0 - t) * theta.sin());
            assert!((z - want).norm() < 1e-14);
        }
        assert!((q.samples[0].re - 1.1).abs() < 1e-14);
        assert!((q.samples[16].im - 0.9).abs() < 1e-14);
    }

    #[test]
    fn joukowski_slit_is_rejected() {
        let j = LaurentMap::uncertified(vec![c(1.0, 0.0)]).unwrap();
        assert!(matches!(
            sample_quasicircle(&j, 64),
            Err(TeichError::NotUnivalent(_))
        ));
        assert!(LaurentMap::new(vec![c(1.0, 0.0)]).is_err());
    }

    #[test]
    fn grid_check_finds_witness() {
        let bad = LaurentMap::uncertified(vec![c(1.2, 0.0)]).unwrap();
        match univalence_grid_check(&bad, 64) {
            UnivalenceVerdict::Failed(w) => {
                // brute force: the reversed ellipse takes interior values twice,
                // e.g. Ψ(z) = Ψ(1.2/z) for |z| slightly above 1.
                let z = c(1.05, 0.3);
                let z2 = 1.2 / z;
                assert!(z2.norm() > 1.0);
                assert!((bad.eval(z) - bad.eval(z2)).norm() < 1e-12);
                let _ = w;
            }
            UnivalenceVerdict::Certified(_) => panic!("c1 = 1.2 must fail"),
        }
        assert!(univalence_grid_check(&LaurentMap::identity(), 64).is_certified());
    }

    #[test]
    fn area_condition_always_certifies() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let m = rng.gen_range(1..=6);
            let budget = rng.gen_range(0.0..0.99);
            let raw: Vec<Complex64> = (0..m)
                .map(|_| Complex64::from_polar(rng.gen_range(0.0..1.0), rng.gen_range(0.0..2.0 * PI)))
                .collect();
            let weight: f64 = raw.iter().enumerate().map(|(i, z)| (i + 1) as f64 * z.norm()).sum();
            let coeffs: Vec<Complex64> = raw.iter().map(|z| z * (budget / weight.max(1e-12))).collect();
            let map = LaurentMap::uncertified(coeffs).unwrap();
            assert!(univalence_grid_check(&map, 128).is_certified(), "{:?}", map);
        }
    }

    #[test]
    fn text_round_trip() {
        let m = LaurentMap::new(vec![c(0.1, -0.02), c(0.0, 0.0), c(0.01, 0.03)]).unwrap();
        let back = LaurentMap::parse(&m.to_text()).unwrap();
        assert_eq!(back.coefficients(), m.coefficients());
        assert!(LaurentMap::parse("1 0.1").is_err());
        assert!(LaurentMap::parse("17 0.0 0.0").is_err());
    }

    #[test]
    fn inverted_schwarzian_matches_direct() {
        let m = LaurentMap::new(vec![c(0.1, 0.05), c(-0.03, 0.02), c(0.0, 0.01)]).unwrap();
        for z in [c(1.3, 0.4), c(-2.0, 1.0), c(0.2, -1.1)] {
            let direct = super::super::schwarzian::schwarzian(&m, z).unwrap();
            let zeta = z.inv();
            let inv = m.inverted_schwarzian(zeta).unwrap();
            assert!((inv * zeta.powi(4) - direct).norm() < 1e-12 * (1.0 + direct.norm()));
        }
        // at infinity only the c1 term survives
        assert!((m.inverted_schwarzian(c(0.0, 0.0)).unwrap() + 6.0 * c(0.1, 0.05)).norm() < 1e-15);
    }
}
