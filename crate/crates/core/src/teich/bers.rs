//! Hyperbolic densities, the Bers norm of a Laurent map and the K estimates
//! derived from it.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::laurent::LaurentMap;
use super::schwarzian::{schwarzian, Holomorphic};
use super::TeichError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Domain {
    Disc,
    ExteriorDisc,
}

/// Density of the curvature -1 metric: `2/(1-|z|^2)` on the disc and
/// `2/(|z|^2-1)` on its exterior.
pub fn poincare_density(z: Complex64, domain: Domain) -> Result<f64, TeichError> {
    let r2 = z.norm_sqr();
    if !r2.is_finite() {
        return Err(TeichError::NonFinite);
    }
    let gap = match domain {
        Domain::Disc => 1.0 - r2,
        Domain::ExteriorDisc => r2 - 1.0,
    };
    if gap.abs() <= 1e-15 {
        return Err(TeichError::Divergence);
    }
    if gap < 0.0 {
        return Err(TeichError::OutsideDomain);
    }
    Ok(2.0 / gap)
}

/// Refinement controls for [`bers_norm`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BersGrid {
    /// Relative agreement required between successive levels.
    pub rel_tol: f64,
    pub max_levels: usize,
    /// Angular samples on the coarsest level.
    pub base_angles: usize,
    /// Uniform radial samples on the coarsest level.
    pub base_radii: usize,
}

impl Default for BersGrid {
    fn default() -> Self {
        BersGrid {
            rel_tol: 1e-4,
            max_levels: 6,
            base_angles: 512,
            base_radii: 16,
        }
    }
}

/// Result of [`bers_norm`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BersNorm {
    /// Sup after local maximisation around the best grid point.
    pub value: f64,
    /// Sup over the finest grid alone.
    pub grid_value: f64,
    /// Difference between the last two levels.
    pub gap: f64,
    pub levels: usize,
}

/// `sup (|z|^2-1)^2/4 |S_Ψ(z)|` over `|z| > 1`, computed in `ζ = 1/z` so that
/// `z = ∞` is an ordinary grid point. Levels are refined until two successive
/// values agree to `grid.rel_tol`.
pub fn bers_norm(psi: &LaurentMap, grid: &BersGrid) -> Result<BersNorm, TeichError> {
    if psi.is_identity() {
        return Ok(BersNorm {
            value: 0.0,
            grid_value: 0.0,
            gap: 0.0,
            levels: 1,
        });
    }
    let weight = |zeta: Complex64| -> Result<f64, TeichError> {
        let s = 1.0 - zeta.norm_sqr();
        Ok(0.25 * s * s * psi.inverted_schwarzian(zeta)?.norm())
    };
    refine(&weight, grid)
}

/// Bers norm of any map holomorphic on `|z| > 1`, evaluated from its exact
/// jet; the point at infinity is approached but not sampled.
pub fn bers_norm_of<F: Holomorphic + ?Sized>(f: &F, grid: &BersGrid) -> Result<BersNorm, TeichError> {
    let weight = |zeta: Complex64| -> Result<f64, TeichError> {
        let zeta = if zeta.norm() < 1e-6 {
            Complex64::new(1e-6, 0.0)
        } else {
            zeta
        };
        let z = zeta.inv();
        let s = z.norm_sqr() - 1.0;
        Ok(0.25 * s * s * schwarzian(f, z)?.norm())
    };
    refine(&weight, grid)
}

fn level_sup(
    weight: &dyn Fn(Complex64) -> Result<f64, TeichError>,
    grid: &BersGrid,
    level: usize,
) -> Result<(f64, f64, f64), TeichError> {
    let n_r = grid.base_radii << level;
    let n_a = grid.base_angles << level.min(3);
    let mut radii: Vec<f64> = (0..n_r).map(|k| k as f64 / n_r as f64).collect();
    radii.extend((1..=(8 + 2 * level)).map(|j| 1.0 - 0.5f64.powi(j as i32)));
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for &r in &radii {
        let count = if r == 0.0 { 1 } else { n_a };
        for j in 0..count {
            let th = 2.0 * PI * j as f64 / n_a as f64;
            let v = weight(Complex64::from_polar(r, th))?;
            if v > best.0 {
                best = (v, r, th);
            }
        }
    }
    let (gv, mut r, mut th) = best;
    let mut v = gv;
    // pattern search in (r, θ)
    let mut dr = 1.0 / n_r as f64;
    let mut dth = 2.0 * PI / n_a as f64;
    while dr > 1e-13 || dth > 1e-13 {
        let mut moved = false;
        for (er, et) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)] {
            let rr = (r + er * dr).clamp(0.0, 1.0 - 1e-12);
            let tt = th + et * dth;
            let w = weight(Complex64::from_polar(rr, tt))?;
            if w > v {
                v = w;
                r = rr;
                th = tt;
                moved = true;
                break;
            }
        }
        if !moved {
            dr *= 0.5;
            dth *= 0.5;
        }
    }
    Ok((v, gv, r))
}

fn refine(
    weight: &dyn Fn(Complex64) -> Result<f64, TeichError>,
    grid: &BersGrid,
) -> Result<BersNorm, TeichError> {
    let mut prev: Option<f64> = None;
    let mut last = (0.0, 0.0, f64::INFINITY);
    for level in 0..grid.max_levels.max(2) {
        let (v, gv, _) = level_sup(weight, grid, level)?;
        if let Some(p) = prev {
            let gap = (v - p).abs();
            last = (v, gv, gap);
            if gap <= grid.rel_tol * v.abs().max(1e-300) || v.abs() < 1e-300 {
                return Ok(BersNorm {
                    value: v,
                    grid_value: gv,
                    gap,
                    levels: level + 1,
                });
            }
        }
        prev = Some(v);
    }
    Err(TeichError::Resolution {
        value: last.0,
        gap: last.2,
        levels: grid.max_levels.max(2),
    })
}

/// Upper bound `(1+2b)/(1-2b)` for the dilatation of a quasiconformal
/// extension of a map with Bers norm `b < 1/2`.
#[allow(non_snake_case)]
pub fn ahlfors_weill_K(bers_norm: f64) -> Result<f64, TeichError> {
    if !bers_norm.is_finite() || bers_norm < 0.0 {
        return Err(TeichError::NonFinite);
    }
    if bers_norm >= 0.5 {
        return Err(TeichError::OutOfCertificate(bers_norm));
    }
    Ok((1.0 + 2.0 * bers_norm) / (1.0 - 2.0 * bers_norm))
}

/// `log(K)/2`.
#[allow(non_snake_case)]
pub fn teich_distance_from_K(k: f64) -> Result<f64, TeichError> {
    if !(k >= 1.0) || !k.is_finite() {
        return Err(TeichError::InvalidK(k));
    }
    Ok(0.5 * k.ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::teich::schwarzian::{Composite, MoebiusTransform};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn density_values() {
        assert_eq!(poincare_density(c(0.0, 0.0), Domain::Disc).unwrap(), 2.0);
        assert!((poincare_density(c(2.0, 0.0), Domain::ExteriorDisc).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(poincare_density(c(1.0, 0.0), Domain::Disc), Err(TeichError::Divergence));
        assert_eq!(poincare_density(c(0.5, 0.0), Domain::ExteriorDisc), Err(TeichError::OutsideDomain));
    }

    #[test]
    fn density_inversion_consistency() {
        // z -> 1/conj(z) is an isometry from the disc to its exterior
        for i in 1..10 {
            for j in 0..12 {
                let z = Complex64::from_polar(i as f64 / 10.0, j as f64 * 0.5);
                let w = z.conj().inv();
                let jac = 1.0 / z.norm_sqr();
                let lhs = poincare_density(z, Domain::Disc).unwrap();
                let rhs = poincare_density(w, Domain::ExteriorDisc).unwrap() * jac;
                assert!((lhs - rhs).abs() < 1e-12 * lhs);
            }
        }
    }

    #[test]
    fn ellipse_family_norm_is_three_halves_t() {
        let g = BersGrid::default();
        let mut prev = -1.0;
        for i in 0..=6 {
            let t = 0.05 * i as f64;
            let b = bers_norm(&LaurentMap::ellipse(t).unwrap(), &g).unwrap();
            assert!((b.value - 1.5 * t).abs() < 1e-9, "t={t} {b:?}");
            assert!(b.value > prev);
            prev = b.value;
        }
    }

    #[test]
    fn identity_and_nehari() {
        assert_eq!(bers_norm(&LaurentMap::identity(), &BersGrid::default()).unwrap().value, 0.0);
        let m = LaurentMap::new(vec![c(0.3, 0.1), c(0.0, 0.1), c(-0.05, 0.0)]).unwrap();
        let b = bers_norm(&m, &BersGrid::default()).unwrap();
        assert!(b.value <= 1.5 + 1e-6);
        assert!(b.gap <= 1e-4 * b.value);
    }

    #[test]
    fn moebius_post_composition_invariance() {
        let m = LaurentMap::new(vec![c(0.1, 0.02), c(0.0, -0.03)]).unwrap();
        let mob = MoebiusTransform::new(c(1.0, 0.5), c(0.2, 0.0), c(0.05, 0.1), c(1.0, -0.3)).unwrap();
        let comp = Composite { outer: &mob, inner: &m };
        let g = BersGrid::default();
        let a = bers_norm(&m, &g).unwrap();
        let b = bers_norm_of(&comp, &g).unwrap();
        assert!((a.value - b.value).abs() < 1e-4 * a.value + a.gap + b.gap);
    }

    #[test]
    fn k_formulas() {
        assert_eq!(ahlfors_weill_K(0.0).unwrap(), 1.0);
        assert!((ahlfors_weill_K(0.25).unwrap() - 3.0).abs() < 1e-15);
        assert!(matches!(ahlfors_weill_K(0.5), Err(TeichError::OutOfCertificate(_))));
        assert_eq!(teich_distance_from_K(1.0).unwrap(), 0.0);
        assert!((teich_distance_from_K(std::f64::consts::E.powi(2)).unwrap() - 1.0).abs() < 1e-15);
        assert!((teich_distance_from_K(ahlfors_weill_K(0.25).unwrap()).unwrap() - 0.5 * 3f64.ln()).abs() < 1e-15);
        assert!(teich_distance_from_K(0.9).is_err());
        let mut prev = -1.0;
        for i in 0..50 {
            let d = teich_distance_from_K(ahlfors_weill_K(i as f64 * 0.01).unwrap()).unwrap();
            assert!(d > prev);
            prev = d;
        }
    }
}
