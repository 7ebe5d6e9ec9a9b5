//! Least-squares bivariate polynomial fits in local coordinates.

use nalgebra::{DMatrix, DVector, Matrix2};

/// Exponents `(p, q)` of `x^p y^q` up to total degree `deg`, by degree.
fn monomials(deg: usize) -> Vec<(i32, i32)> {
    let mut m = Vec::new();
    for d in 0..=deg as i32 {
        for q in 0..=d {
            m.push((d - q, q));
        }
    }
    m
}

/// A fitted polynomial `sum c_k x^p y^q`.
#[derive(Debug, Clone)]
pub struct PolyFit {
    terms: Vec<(i32, i32)>,
    coeffs: Vec<f64>,
}

impl PolyFit {
    /// Fits `values` at `pts`; `None` when the design matrix is rank deficient.
    pub fn fit(pts: &[[f64; 2]], values: &[f64], deg: usize) -> Option<Self> {
        let terms = monomials(deg);
        if pts.len() < terms.len() {
            return None;
        }
        let scale = pts
            .iter()
            .map(|p| p[0].abs().max(p[1].abs()))
            .fold(0.0f64, f64::max);
        if !(scale > 0.0) {
            return None;
        }
        let a = DMatrix::from_fn(pts.len(), terms.len(), |i, k| {
            let (p, q) = terms[k];
            (pts[i][0] / scale).powi(p) * (pts[i][1] / scale).powi(q)
        });
        let b = DVector::from_column_slice(values);
        let svd = a.svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if !(smin > 1e-8 * smax) {
            return None;
        }
        let x = svd.solve(&b, 1e-14 * smax).ok()?;
        let coeffs = terms
            .iter()
            .enumerate()
            .map(|(k, &(p, q))| x[k] / scale.powi(p + q))
            .collect();
        Some(PolyFit { terms, coeffs })
    }

    pub fn value(&self, x: f64, y: f64) -> f64 {
        self.terms
            .iter()
            .zip(&self.coeffs)
            .map(|(&(p, q), c)| c * x.powi(p) * y.powi(q))
            .sum()
    }

    pub fn gradient(&self, x: f64, y: f64) -> [f64; 2] {
        let mut g = [0.0; 2];
        for (&(p, q), c) in self.terms.iter().zip(&self.coeffs) {
            if p > 0 {
                g[0] += c * p as f64 * x.powi(p - 1) * y.powi(q);
            }
            if q > 0 {
                g[1] += c * q as f64 * x.powi(p) * y.powi(q - 1);
            }
        }
        g
    }

    pub fn hessian(&self, x: f64, y: f64) -> Matrix2<f64> {
        let (mut xx, mut xy, mut yy) = (0.0, 0.0, 0.0);
        for (&(p, q), c) in self.terms.iter().zip(&self.coeffs) {
            if p > 1 {
                xx += c * (p * (p - 1)) as f64 * x.powi(p - 2) * y.powi(q);
            }
            if q > 1 {
                yy += c * (q * (q - 1)) as f64 * x.powi(p) * y.powi(q - 2);
            }
            if p > 0 && q > 0 {
                xy += c * (p * q) as f64 * x.powi(p - 1) * y.powi(q - 1);
            }
        }
        Matrix2::new(xx, xy, xy, yy)
    }
}

/// Eigenvalues of a symmetric 2x2 matrix, larger first.
pub fn sym_eigenvalues(m: &Matrix2<f64>) -> (f64, f64) {
    let (a, b, d) = (m[(0, 0)], 0.5 * (m[(0, 1)] + m[(1, 0)]), m[(1, 1)]);
    let mid = 0.5 * (a + d);
    let r = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    (mid + r, mid - r)
}
