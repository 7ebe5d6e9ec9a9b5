//! Beltrami coefficients sampled on the disc and holomorphic quadratic
//! differentials sampled on a lattice.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::TeichError;

/// Cell-centred `n x n` lattice on `[-1,1]^2`, restricted to the open disc.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscGrid {
    pub n: usize,
}

impl DiscGrid {
    pub fn new(n: usize) -> Self {
        DiscGrid { n: n.max(2) }
    }

    /// Sample points in row-major order.
    pub fn points(&self) -> Vec<Complex64> {
        let h = 2.0 / self.n as f64;
        let mut out = Vec::new();
        for j in 0..self.n {
            for i in 0..self.n {
                let z = Complex64::new(-1.0 + (i as f64 + 0.5) * h, -1.0 + (j as f64 + 0.5) * h);
                if z.norm_sqr() < 1.0 {
                    out.push(z);
                }
            }
        }
        out
    }
}

/// `μ` sampled at [`DiscGrid::points`], with `sup |μ| < 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeltramiField {
    grid: DiscGrid,
    values: Vec<Complex64>,
}

impl BeltramiField {
    pub fn new(grid: DiscGrid, values: Vec<Complex64>) -> Result<Self, TeichError> {
        if values.len() != grid.points().len() {
            return Err(TeichError::GridMismatch);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(TeichError::NonFinite);
        }
        let k = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if k >= 1.0 {
            return Err(TeichError::NotContracting(k));
        }
        Ok(BeltramiField { grid, values })
    }

    pub fn from_fn(grid: DiscGrid, f: impl Fn(Complex64) -> Complex64) -> Result<Self, TeichError> {
        let values = grid.points().into_iter().map(f).collect();
        Self::new(grid, values)
    }

    pub fn zero(grid: DiscGrid) -> Self {
        let n = grid.points().len();
        BeltramiField {
            grid,
            values: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    pub fn grid(&self) -> DiscGrid {
        self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// `‖μ‖∞`.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Dilatation of `g ∘ f^{-1}` at the image points of `f`:
/// `(f_z / conj f_z) (μ_g - μ_f) / (1 - conj(μ_f) μ_g)`. `df` holds `f_z`
/// (only its phase matters).
pub fn compose_dilatation(
    mu_f: &BeltramiField,
    mu_g: &BeltramiField,
    df: &[Complex64],
) -> Result<BeltramiField, TeichError> {
    if mu_f.grid != mu_g.grid || df.len() != mu_f.values.len() {
        return Err(TeichError::GridMismatch);
    }
    let mut out = Vec::with_capacity(df.len());
    for ((f, g), d) in mu_f.values.iter().zip(&mu_g.values).zip(df) {
        let den = Complex64::new(1.0, 0.0) - f.conj() * g;
        if den.norm() < 1e-12 {
            return Err(TeichError::DegenerateComposition(den.norm()));
        }
        if d.norm() == 0.0 || !d.is_finite() {
            return Err(TeichError::DegenerateComposition(0.0));
        }
        let phase = d / d.norm();
        out.push(phase * phase * (g - f) / den);
    }
    BeltramiField::new(mu_f.grid, out)
}

/// `(1 + ‖μ‖∞) / (1 - ‖μ‖∞)`.
#[allow(non_snake_case)]
pub fn max_dilatation_K(mu: &BeltramiField) -> f64 {
    let k = mu.sup_norm();
    (1.0 + k) / (1.0 - k)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuadDiffDomain {
    Disc,
    ExteriorDisc,
}

/// `h` of a quadratic differential `h dz^2`, sampled on a square lattice
/// `origin + δ (i + j·i)`. Nodes outside the domain hold `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadDiffSample {
    pub domain: QuadDiffDomain,
    pub origin: Complex64,
    pub spacing: f64,
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<Option<Complex64>>,
}

const CR_TOL: f64 = 1e-6;

impl QuadDiffSample {
    /// Samples `h` and checks the discrete Cauchy-Riemann residual.
    pub fn sample(
        domain: QuadDiffDomain,
        origin: Complex64,
        spacing: f64,
        nx: usize,
        ny: usize,
        h: impl Fn(Complex64) -> Complex64,
    ) -> Result<Self, TeichError> {
        let mut values = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let z = origin + Complex64::new(i as f64, j as f64) * spacing;
                let r2 = z.norm_sqr();
                let inside = match domain {
                    QuadDiffDomain::Disc => r2 < 1.0,
                    QuadDiffDomain::ExteriorDisc => r2 > 1.0,
                };
                values.push(if inside { Some(h(z)) } else { None });
            }
        }
        let s = QuadDiffSample {
            domain,
            origin,
            spacing,
            nx,
            ny,
            values,
        };
        let res = s.cauchy_riemann_residual();
        if !(res < CR_TOL) {
            return Err(TeichError::NotHolomorphic(res));
        }
        Ok(s)
    }

    fn at(&self, i: isize, j: isize) -> Option<Complex64> {
        if i < 0 || j < 0 || i as usize >= self.nx || j as usize >= self.ny {
            return None;
        }
        self.values[j as usize * self.nx + i as usize]
    }

    /// Max over interior nodes of `δ |∂h/∂x + i ∂h/∂y| / max|h|`, with
    /// fourth-order central differences.
    pub fn cauchy_riemann_residual(&self) -> f64 {
        let scale = self
            .values
            .iter()
            .flatten()
            .map(|v| v.norm())
            .fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        let i_unit = Complex64::new(0.0, 1.0);
        let mut worst = 0.0f64;
        for j in 0..self.ny as isize {
            for i in 0..self.nx as isize {
                let get = |di: isize, dj: isize| self.at(i + di, j + dj);
                let (Some(xp1), Some(xm1), Some(xp2), Some(xm2)) =
                    (get(1, 0), get(-1, 0), get(2, 0), get(-2, 0))
                else {
                    continue;
                };
                let (Some(yp1), Some(ym1), Some(yp2), Some(ym2)) =
                    (get(0, 1), get(0, -1), get(0, 2), get(0, -2))
                else {
                    continue;
                };
                // δ·∂x and δ·∂y
                let dx = (8.0 * (xp1 - xm1) - (xp2 - xm2)) / 12.0;
                let dy = (8.0 * (yp1 - ym1) - (yp2 - ym2)) / 12.0;
                worst = worst.max((dx + i_unit * dy).norm() / scale);
            }
        }
        worst
    }

    /// `sup e^{-2η}|h|` with the hyperbolic density `e^η` of the domain.
    pub fn hyperbolic_sup(&self) -> f64 {
        let mut best = 0.0f64;
        for j in 0..self.ny {
            for i in 0..self.nx {
                if let Some(h) = self.values[j * self.nx + i] {
                    let z = self.origin + Complex64::new(i as f64, j as f64) * self.spacing;
                    let g = (1.0 - z.norm_sqr()).abs() / 2.0;
                    best = best.max(g * g * h.norm());
                }
            }
        }
        best
    }
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
    fn k_values() {
        let g = DiscGrid::new(16);
        assert_eq!(max_dilatation_K(&BeltramiField::zero(g)), 1.0);
        let third = BeltramiField::from_fn(g, |z| Complex64::from_polar(1.0 / 3.0, z.re)).unwrap();
        assert!((max_dilatation_K(&third) - 2.0).abs() < 1e-14);
        let half = BeltramiField::from_fn(g, |_| c(0.0, 0.5)).unwrap();
        assert!((max_dilatation_K(&half) - 3.0).abs() < 1e-14);
        assert!(BeltramiField::from_fn(g, |_| c(1.0, 0.0)).is_err());
    }

    #[test]
    fn composition_reductions() {
        let g = DiscGrid::new(20);
        let n = g.points().len();
        let mu = BeltramiField::from_fn(g, |z| 0.4 * z * z).unwrap();
        let df: Vec<Complex64> = g.points().iter().map(|z| c(1.0, 0.0) + 0.3 * z).collect();
        let same = compose_dilatation(&mu, &mu, &df).unwrap();
        assert_eq!(same.sup_norm(), 0.0);
        let zero = BeltramiField::zero(g);
        let red = compose_dilatation(&zero, &mu, &df).unwrap();
        for k in 0..n {
            let ph = df[k] / df[k].norm();
            assert!((red.values()[k] - mu.values()[k] * ph * ph).norm() < 1e-15);
        }
    }

    #[test]
    fn composition_k_is_submultiplicative() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g = DiscGrid::new(12);
        for _ in 0..20 {
            let (a, b) = (rng.gen_range(0.0..0.9), rng.gen_range(0.0..0.9));
            let (p, q) = (rng.gen_range(0.0..6.3), rng.gen_range(0.0..6.3));
            let mf = BeltramiField::from_fn(g, |z| Complex64::from_polar(a * (0.5 + 0.5 * z.re.abs()), p + z.im)).unwrap();
            let mg = BeltramiField::from_fn(g, |z| Complex64::from_polar(b * (0.5 + 0.5 * z.im.abs()), q - z.re)).unwrap();
            let df = vec![c(1.0, 0.2); g.points().len()];
            let r = compose_dilatation(&mf, &mg, &df).unwrap();
            assert!(max_dilatation_K(&r) <= max_dilatation_K(&mf) * max_dilatation_K(&mg) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn quadratic_differential_checks() {
        let s = QuadDiffSample::sample(QuadDiffDomain::Disc, c(-0.7, -0.7), 0.01, 141, 141, |z| {
            c(0.3, 0.0) + z * z * c(0.0, 0.2)
        })
        .unwrap();
        assert!(s.cauchy_riemann_residual() < 1e-12);
        assert!(s.hyperbolic_sup() > 0.0);
        let bad = QuadDiffSample::sample(QuadDiffDomain::Disc, c(-0.5, -0.5), 0.01, 101, 101, |z| z.conj());
        assert!(matches!(bad, Err(TeichError::NotHolomorphic(_))));
    }
}
