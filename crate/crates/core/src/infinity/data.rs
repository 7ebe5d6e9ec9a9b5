use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::InfinityError;
use crate::teich::{bers_norm, schwarzian, BersGrid, LaurentMap};

/// Sampling of `|z| > 1` used by [`forms_at_infinity`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfinityGrid {
    /// Refinement levels tried before giving up.
    pub max_levels: usize,
    /// Relative change of `sup a` accepted between levels.
    pub rel_tol: f64,
    /// Hyperbolic step of the curvature stencil at the coarsest level.
    pub stencil_step: f64,
}

impl Default for InfinityGrid {
    fn default() -> Self {
        InfinityGrid {
            max_levels: 6,
            rel_tol: 1e-9,
            stencil_step: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfinitySample {
    pub z: Complex64,
    /// `η = ln(2/(|z|^2-1))`.
    pub eta: f64,
    /// `S_Ψ(z)`.
    pub h: Complex64,
    /// `e^{-2η}|h|`, the eigenvalue modulus of `B0*`.
    pub a: f64,
}

impl InfinitySample {
    /// `I* = e^{2η} E`.
    pub fn i_star(&self) -> Matrix2<f64> {
        Matrix2::identity() * (2.0 * self.eta).exp()
    }

    /// Traceless shape operator `e^{-2η} [[-Re h, Im h], [Im h, Re h]]`.
    pub fn b0_star(&self) -> Matrix2<f64> {
        let s = (-2.0 * self.eta).exp();
        Matrix2::new(-self.h.re, self.h.im, self.h.im, self.h.re) * s
    }

    /// `B* = B0* + E/2`.
    pub fn b_star(&self) -> Matrix2<f64> {
        self.b0_star() + Matrix2::identity() * 0.5
    }
}

/// Sampled data at infinity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataAtInfinity {
    pub source: LaurentMap,
    pub samples: Vec<InfinitySample>,
    pub sup_a: f64,
    /// Index of the sample realising `sup_a`.
    pub argmax: usize,
    pub level: usize,
    /// Hyperbolic stencil step used by [`gauss_residual`].
    pub stencil_step: f64,
}

/// `η(z) = ln(2/(|z|^2-1))`.
fn eta(z: Complex64) -> f64 {
    (2.0 / (z.norm_sqr() - 1.0)).ln()
}

/// `η(z+d) - η(z)` without cancellation.
fn eta_increment(z: Complex64, d: Complex64) -> f64 {
    let num = 2.0 * (z.conj() * d).re + d.norm_sqr();
    -(num / (z.norm_sqr() - 1.0)).ln_1p()
}

fn sample(psi: &LaurentMap, z: Complex64) -> Result<InfinitySample, InfinityError> {
    let h = schwarzian(psi, z)?;
    let s = 0.5 * (z.norm_sqr() - 1.0);
    Ok(InfinitySample {
        z,
        eta: eta(z),
        h,
        a: s * s * h.norm(),
    })
}

fn level_samples(psi: &LaurentMap, level: usize) -> Result<Vec<InfinitySample>, InfinityError> {
    let j_max = 4 + 2 * level as i32;
    let n_a = 64usize << level;
    let mut radii: Vec<f64> = (1..=j_max).rev().map(|j| 1.0 + 0.5f64.powi(j)).collect();
    // geometric outer rings up to 2^{j_max}
    let mut r = 2.0;
    while r <= 2f64.powi(j_max) * (1.0 + 1e-12) {
        radii.push(r);
        r *= 2f64.sqrt();
    }
    let mut out = Vec::with_capacity(radii.len() * n_a);
    for &r in &radii {
        for k in 0..n_a {
            out.push(sample(psi, Complex64::from_polar(r, 2.0 * PI * k as f64 / n_a as f64))?);
        }
    }
    Ok(out)
}

/// Pattern search for the sup of `a` in `(ln(|z|-1), arg z)` from a grid point.
fn polish(psi: &LaurentMap, start: &InfinitySample) -> Result<InfinitySample, InfinityError> {
    let mut best = *start;
    let mut s = (best.z.norm() - 1.0).ln();
    let mut th = best.z.arg();
    let (mut ds, mut dth) = (0.25, 0.05);
    while ds > 1e-12 || dth > 1e-12 {
        let mut moved = false;
        for (es, et) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)] {
            let ss = (s + es * ds).clamp(-30.0, 20.0);
            let tt = th + et * dth;
            let cand = sample(psi, Complex64::from_polar(1.0 + ss.exp(), tt))?;
            if cand.a > best.a {
                best = cand;
                s = ss;
                th = tt;
                moved = true;
                break;
            }
        }
        if !moved {
            ds *= 0.5;
            dth *= 0.5;
        }
    }
    Ok(best)
}

fn build(psi: &LaurentMap, level: usize, step: f64) -> Result<DataAtInfinity, InfinityError> {
    let mut samples = level_samples(psi, level)?;
    let (mut argmax, mut sup_a) = (0, f64::NEG_INFINITY);
    for (i, s) in samples.iter().enumerate() {
        if s.a > sup_a {
            sup_a = s.a;
            argmax = i;
        }
    }
    if sup_a > 0.0 {
        let p = polish(psi, &samples[argmax])?;
        if p.a > sup_a {
            sup_a = p.a;
            argmax = samples.len();
            samples.push(p);
        }
    }
    Ok(DataAtInfinity {
        source: psi.clone(),
        samples,
        sup_a,
        argmax,
        level,
        stencil_step: step * 0.5f64.powi(level as i32),
    })
}

/// Samples `η`, `h = S_Ψ` and `a = e^{-2η}|h|` on a boundary-graded grid of
/// `|z| > 1`, refining until `sup a` is stable.
pub fn forms_at_infinity(psi: &LaurentMap, grid: &InfinityGrid) -> Result<DataAtInfinity, InfinityError> {
    let mut prev = build(psi, 0, grid.stencil_step)?;
    let mut change = f64::INFINITY;
    for level in 1..grid.max_levels.max(2) {
        let next = build(psi, level, grid.stencil_step)?;
        change = (next.sup_a - prev.sup_a).abs();
        if change <= grid.rel_tol * next.sup_a.max(1e-300) || next.sup_a == 0.0 {
            return Ok(next);
        }
        prev = next;
    }
    Err(InfinityError::Resolution {
        levels: grid.max_levels.max(2),
        change,
    })
}

/// Data at a fixed level without the convergence loop.
pub fn forms_at_level(psi: &LaurentMap, level: usize, stencil_step: f64) -> Result<DataAtInfinity, InfinityError> {
    build(psi, level, stencil_step * 2f64.powi(level as i32))
}

/// `max |1 + K_{I*}|` with `K = -e^{-2η} Δη` from the five-point Laplacian.
/// The stencil has hyperbolic step `data.stencil_step` at every sample, so the
/// residual is a pure second-order discretisation error.
pub fn gauss_residual(data: &DataAtInfinity) -> f64 {
    gauss_residual_at(data, data.stencil_step)
}

pub(crate) fn gauss_residual_at(data: &DataAtInfinity, step: f64) -> f64 {
    let mut worst = 0.0f64;
    for s in &data.samples {
        // beyond |z| = 2 the stencil is laid out in ζ = 1/z, where the same
        // metric reads 2|dζ|/(1-|ζ|^2) and ∞ is an ordinary point
        let (w, sign) = if s.z.norm() <= 2.0 { (s.z, 1.0) } else { (s.z.inv(), -1.0) };
        let g = 0.5 * sign * (w.norm_sqr() - 1.0);
        let he = step * g;
        if (w.norm() - 1.0).abs() <= 2.0 * he {
            continue;
        }
        // η(w+d) - η(w) = -ln(1 + (2 Re(conj(w) d) + |d|^2)/(|w|^2-1)) in both charts
        let lap: f64 = [
            Complex64::new(he, 0.0),
            Complex64::new(-he, 0.0),
            Complex64::new(0.0, he),
            Complex64::new(0.0, -he),
        ]
        .iter()
        .map(|d| eta_increment(w, *d))
        .sum::<f64>()
            / (he * he);
        let k = -(g * g) * lap;
        worst = worst.max((1.0 + k).abs());
    }
    worst
}

/// `|sup a^2 - ‖Ψ‖_B^2| / max(‖Ψ‖_B^2, 1e-12)`: the sampled determinant of
/// `B0*` against the independently computed Bers norm.
pub fn det_b0_bers_consistency(psi: &LaurentMap) -> Result<f64, InfinityError> {
    let data = forms_at_infinity(psi, &InfinityGrid::default())?;
    let b = bers_norm(psi, &BersGrid::default())?.value;
    Ok(consistency_gap(data.sup_a, b))
}

pub(crate) fn consistency_gap(sup_a: f64, bers: f64) -> f64 {
    (sup_a * sup_a - bers * bers).abs() / (bers * bers).max(1e-12)
}

impl DataAtInfinity {
    /// CSV with header `re(z),im(z),eta,re(h),im(h),a`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("re(z),im(z),eta,re(h),im(h),a\n");
        for p in &self.samples {
            let _ = writeln!(s, "{},{},{},{},{},{}", p.z.re, p.z.im, p.eta, p.h.re, p.h.im, p.a);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identity_has_no_traceless_part() {
        let d = forms_at_infinity(&LaurentMap::identity(), &InfinityGrid::default()).unwrap();
        assert_eq!(d.sup_a, 0.0);
        for s in d.samples.iter().take(500) {
            assert!((s.b_star() - Matrix2::identity() * 0.5).norm() < 1e-15);
            assert!((s.b_star().trace() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn sup_a_matches_bers_norm() {
        for m in [
            LaurentMap::ellipse(0.1).unwrap(),
            LaurentMap::new(vec![c(0.05, 0.02), c(0.03, -0.04), c(0.0, 0.02)]).unwrap(),
        ] {
            let d = forms_at_infinity(&m, &InfinityGrid::default()).unwrap();
            let b = bers_norm(&m, &BersGrid::default()).unwrap().value;
            assert!((d.sup_a - b).abs() <= 1e-6 * b, "{} {}", d.sup_a, b);
            assert!(d.samples.iter().all(|s| s.a >= 0.0 && s.a <= d.sup_a));
            assert!(d.samples.iter().all(|s| (s.b_star().trace() - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn ellipse_a_tends_to_its_value_at_infinity() {
        // S = -6t/(z^2-t)^2, so a -> 3t/2 on large circles rather than 0
        let d = forms_at_level(&LaurentMap::ellipse(0.1).unwrap(), 2, 0.08).unwrap();
        let rmax = d.samples.iter().map(|s| s.z.norm()).fold(0.0, f64::max);
        for s in d.samples.iter().filter(|s| (s.z.norm() - rmax).abs() < 1e-9) {
            assert!((s.a - 0.15).abs() < 1e-5);
        }
    }

    #[test]
    fn gauss_residual_is_second_order() {
        let d = forms_at_level(&LaurentMap::identity(), 1, 0.08).unwrap();
        let r: Vec<f64> = [0.04, 0.02, 0.01].iter().map(|&h| gauss_residual_at(&d, h)).collect();
        assert!((r[0] / r[1] - 4.0).abs() < 0.1 && (r[1] / r[2] - 4.0).abs() < 0.1, "{r:?}");
        // the worst case sits next to the circle with leading error about 3h^2
        assert!(r[2] > 2e-4 && r[2] < 4e-4, "{r:?}");
        let d2 = forms_at_level(&LaurentMap::ellipse(0.2).unwrap(), 1, 0.005).unwrap();
        assert!(gauss_residual(&d2) < 1e-4);
    }

    #[test]
    fn consistency_gap_values() {
        assert_eq!(det_b0_bers_consistency(&LaurentMap::identity()).unwrap(), 0.0);
        assert!(det_b0_bers_consistency(&LaurentMap::ellipse(0.1).unwrap()).unwrap() < 1e-4);
    }

    #[test]
    fn csv_header() {
        let d = forms_at_level(&LaurentMap::ellipse(0.1).unwrap(), 0, 0.08).unwrap();
        let csv = d.to_csv();
        assert!(csv.starts_with("re(z),im(z),eta,re(h),im(h),a\n"));
        assert_eq!(csv.lines().count(), d.samples.len() + 1);
    }
}
