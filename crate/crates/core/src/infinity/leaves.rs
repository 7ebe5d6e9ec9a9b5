use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::data::DataAtInfinity;
use super::InfinityError;

/// Forms of the leaf at signed distance `rho` above one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeafSample {
    pub z: Complex64,
    pub i_rho: Matrix2<f64>,
    pub ii_rho: Matrix2<f64>,
    pub b_rho: Matrix2<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeafForms {
    pub rho: f64,
    pub samples: Vec<LeafSample>,
}

/// `I_ρ = ½ I*(e^ρ E + e^{-ρ} B*)^2`, `II_ρ = ½ I*(e^ρ E + e^{-ρ} B*)(-e^ρ E + e^{-ρ} B*)`
/// and `B_ρ = (e^ρ E + e^{-ρ} B*)^{-1}(-e^ρ E + e^{-ρ} B*)` at every sample.
pub fn leaf_forms(data: &DataAtInfinity, rho: f64) -> Result<LeafForms, InfinityError> {
    let (ep, em) = (rho.exp(), (-rho).exp());
    let e = Matrix2::<f64>::identity();
    let mut samples = Vec::with_capacity(data.samples.len());
    for s in &data.samples {
        let b = s.b_star();
        let p = e * ep + b * em;
        let q = -e * ep + b * em;
        let scale = (ep + em).powi(2);
        if !(p.determinant().abs() > 1e-12 * scale) {
            return Err(InfinityError::LeafDegeneracy(rho));
        }
        let inv = p.try_inverse().ok_or(InfinityError::LeafDegeneracy(rho))?;
        let conf = 0.5 * (2.0 * s.eta).exp();
        samples.push(LeafSample {
            z: s.z,
            i_rho: p * p * conf,
            ii_rho: p * q * conf,
            b_rho: inv * q,
        });
    }
    Ok(LeafForms { rho, samples })
}

/// Eigenvalues of `B_ρ` over a point where `B*` has eigenvalues `1/2 ± a`.
pub fn leaf_eigenvalues(a: f64, rho: f64) -> Result<(f64, f64), InfinityError> {
    if !(a >= 0.0) || !rho.is_finite() {
        return Err(InfinityError::Hypothesis(a));
    }
    if a >= 0.5 {
        return Err(InfinityError::Hypothesis(a));
    }
    let e2 = 2.0 * (2.0 * rho).exp();
    let (p, m) = (2.0 * a + 1.0, 1.0 - 2.0 * a);
    assert!(e2 + p > 0.0 && e2 + m > 0.0);
    Ok(((p - e2) / (p + e2), (m - e2) / (m + e2)))
}

/// `ρ1`, `ρ2` bracket the leaves that are not locally convex in either
/// direction; `width = ρ1 - ρ2 = arctanh(2 sup a)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WidthReport {
    #[serde(rename = "supA")]
    pub sup_a: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub width: f64,
}

pub fn foliation_width(sup_a: f64) -> Result<WidthReport, InfinityError> {
    if !(sup_a >= 0.0) {
        return Err(InfinityError::Hypothesis(sup_a));
    }
    if sup_a >= 0.5 {
        return Err(InfinityError::OutOfRegime(sup_a));
    }
    Ok(WidthReport {
        sup_a,
        rho1: 0.5 * (sup_a + 0.5).ln(),
        rho2: 0.5 * (0.5 - sup_a).ln(),
        width: (2.0 * sup_a).atanh(),
    })
}

#[cfg(test)]
mod tests {
    use super::super::data::{forms_at_level, InfinitySample};
    use super::*;
    use crate::teich::LaurentMap;

    fn sym_eigs(m: &Matrix2<f64>) -> (f64, f64) {
        let (a, b, d) = (m[(0, 0)], 0.5 * (m[(0, 1)] + m[(1, 0)]), m[(1, 1)]);
        let mid = 0.5 * (a + d);
        let r = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        (mid + r, mid - r)
    }

    #[test]
    fn eigenvalue_examples() {
        let (l, lp) = leaf_eigenvalues(0.0, -0.5 * 2f64.ln()).unwrap();
        assert!(l.abs() < 1e-15 && lp.abs() < 1e-15);
        let (l, lp) = leaf_eigenvalues(0.3, 0.0).unwrap();
        assert!((l + 1.0 / 9.0).abs() < 1e-15 && (lp + 2.0 / 3.0).abs() < 1e-15);
        let (l, lp) = leaf_eigenvalues(0.2, 30.0).unwrap();
        assert!((l + 1.0).abs() < 1e-12 && (lp + 1.0).abs() < 1e-12);
        assert!(leaf_eigenvalues(0.5, 0.0).is_err());
    }

    #[test]
    fn round_circle_leaves_are_umbilic() {
        let d = forms_at_level(&LaurentMap::identity(), 0, 0.08).unwrap();
        for rho in [-1.0, -0.2, 0.0, 0.7] {
            let f = leaf_forms(&d, rho).unwrap();
            let (ep, em) = (f64::exp(rho), f64::exp(-rho));
            let k = (-ep + 0.5 * em) / (ep + 0.5 * em);
            for s in &f.samples {
                assert!((s.b_rho - Matrix2::identity() * k).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn leaf_forms_match_eigenvalues_and_derivative() {
        let d = forms_at_level(&LaurentMap::ellipse(0.2).unwrap(), 0, 0.08).unwrap();
        let sub: Vec<InfinitySample> = d.samples.iter().step_by(37).copied().collect();
        let d = DataAtInfinity { samples: sub, ..d };
        for rho in [-1.5, -0.4, 0.0, 0.9] {
            let f = leaf_forms(&d, rho).unwrap();
            let h = 1e-4;
            let fp = leaf_forms(&d, rho + h).unwrap();
            let fm = leaf_forms(&d, rho - h).unwrap();
            for (i, s) in f.samples.iter().enumerate() {
                let ii = s.i_rho * s.b_rho;
                assert!((ii - s.ii_rho).norm() <= 1e-9 * s.ii_rho.norm().max(1e-300));
                assert!((s.ii_rho - s.ii_rho.transpose()).norm() <= 1e-9 * s.ii_rho.norm());
                let di = (fp.samples[i].i_rho - fm.samples[i].i_rho) / (2.0 * h);
                assert!((s.ii_rho + 0.5 * di).norm() <= 1e-6 * s.i_rho.norm());
                let (l, lp) = leaf_eigenvalues(d.samples[i].a, rho).unwrap();
                let (e1, e2) = sym_eigs(&s.b_rho);
                assert!((e1 - l).abs() < 1e-9 && (e2 - lp).abs() < 1e-9);
            }
        }
        for rho in [-8.0, 8.0] {
            for s in leaf_forms(&d, rho).unwrap().samples {
                assert!((s.b_rho.determinant() - 1.0).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn width_examples() {
        let w = foliation_width(0.0).unwrap();
        assert_eq!(w.width, 0.0);
        assert!((w.rho1 + 0.5 * 2f64.ln()).abs() < 1e-15 && w.rho1 == w.rho2);
        let w = foliation_width(0.25).unwrap();
        assert!((w.width - 0.549306).abs() < 1e-6);
        assert!((w.rho1 - w.rho2 - w.width).abs() < 1e-10);
        for (rho, neg) in [(w.rho1 + 1e-3, true), (w.rho2 - 1e-3, false)] {
            let (l, lp) = leaf_eigenvalues(0.25, rho).unwrap();
            if neg {
                assert!(l < 0.0 && lp < 0.0);
            } else {
                assert!(l > 0.0 && lp > 0.0);
            }
        }
        assert!(foliation_width(0.5).is_err());
        let json = serde_json::to_string(&w).unwrap();
        assert!(json.starts_with("{\"supA\":"));
    }
}
