use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::TeichError;

/// A holomorphic function with exact derivatives up to third order.
pub trait Holomorphic {
    /// `[f, f', f'', f''']` at `z`.
    fn jet(&self, z: Complex64) -> [Complex64; 4];

    fn eval(&self, z: Complex64) -> Complex64 {
        self.jet(z)[0]
    }
}

/// `(az + b) / (cz + d)` with `ad - bc = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoebiusTransform {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl MoebiusTransform {
    /// Rescales the coefficients to unit determinant.
    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Result<Self, TeichError> {
        let det = a * d - b * c;
        if !(det.norm() > 1e-300) || !det.is_finite() {
            return Err(TeichError::DegenerateMoebius);
        }
        let s = det.sqrt().inv();
        let m = MoebiusTransform {
            a: a * s,
            b: b * s,
            c: c * s,
            d: d * s,
        };
        debug_assert!((m.determinant() - 1.0).norm() < 1e-12);
        Ok(m)
    }

    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        MoebiusTransform {
            a: one,
            b: zero,
            c: zero,
            d: one,
        }
    }

    pub fn determinant(&self) -> Complex64 {
        self.a * self.d - self.b * self.c
    }
}

impl Holomorphic for MoebiusTransform {
    fn jet(&self, z: Complex64) -> [Complex64; 4] {
        let den = self.c * z + self.d;
        let inv = den.inv();
        let inv2 = inv * inv;
        [
            (self.a * z + self.b) * inv,
            inv2,
            -2.0 * self.c * inv2 * inv,
            6.0 * self.c * self.c * inv2 * inv2,
        ]
    }
}

/// `outer ∘ inner`, differentiated by the chain rule.
#[derive(Debug, Clone, Copy)]
pub struct Composite<'a, F: ?Sized, G: ?Sized> {
    pub outer: &'a F,
    pub inner: &'a G,
}

impl<F: Holomorphic + ?Sized, G: Holomorphic + ?Sized> Holomorphic for Composite<'_, F, G> {
    fn jet(&self, z: Complex64) -> [Complex64; 4] {
        let [g, g1, g2, g3] = self.inner.jet(z);
        let [f, f1, f2, f3] = self.outer.jet(g);
        [
            f,
            f1 * g1,
            f2 * g1 * g1 + f1 * g2,
            f3 * g1 * g1 * g1 + 3.0 * f2 * g1 * g2 + f1 * g3,
        ]
    }
}

/// Schwarzian derivative `(f''/f')' - (f''/f')^2 / 2` from an exact jet.
pub fn schwarzian_from_jet(jet: [Complex64; 4], z: Complex64) -> Result<Complex64, TeichError> {
    let [_, d1, d2, d3] = jet;
    if !(d1.norm() > 1e-14) || !d1.is_finite() {
        return Err(TeichError::CriticalPoint(z));
    }
    let q = d2 / d1;
    Ok(d3 / d1 - 1.5 * q * q)
}

/// Exact Schwarzian of any [`Holomorphic`] map.
pub fn schwarzian<F: Holomorphic + ?Sized>(f: &F, z: Complex64) -> Result<Complex64, TeichError> {
    schwarzian_from_jet(f.jet(z), z)
}

/// Schwarzian of a Möbius transformation; zero everywhere including the pole,
/// where the Schwarzian extends by `S(1/f) = S(f)`.
pub fn moebius_schwarzian(m: &MoebiusTransform, z: Complex64) -> Complex64 {
    let den = m.c * z + m.d;
    if den.norm() == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let q = -2.0 * m.c / den;
    // (f''/f')' = 2c^2/den^2
    2.0 * m.c * m.c / (den * den) - 0.5 * q * q
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::teich::LaurentMap;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_moebius(rng: &mut ChaCha8Rng) -> MoebiusTransform {
        let mut r = || c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        MoebiusTransform::new(r(), r(), r(), r()).unwrap()
    }

    #[test]
    fn moebius_has_zero_schwarzian() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let m = random_moebius(&mut rng);
            assert!((m.determinant() - 1.0).norm() < 1e-12);
            let z = c(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            assert!(moebius_schwarzian(&m, z).norm() < 1e-12);
            if let Ok(s) = schwarzian(&m, z) {
                // generic jet path: cancellation relative to (f''/f')^2
                let [_, d1, d2, _] = m.jet(z);
                assert!(s.norm() < 1e-12 * (1.0 + (d2 / d1).norm_sqr()));
            }
        }
        assert!(MoebiusTransform::new(c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(4.0, 0.0)).is_err());
    }

    #[test]
    fn joukowski_value() {
        let j = LaurentMap::uncertified(vec![c(1.0, 0.0)]).unwrap();
        let s = schwarzian(&j, c(2.0, 0.0)).unwrap();
        assert!((s - c(-2.0 / 3.0, 0.0)).norm() < 1e-14);
        // eighth-order finite differences of f = z + 1/z along the real axis
        let f = |x: f64| x + 1.0 / x;
        let h = 1e-2;
        let w = [1.0 / 280.0, -4.0 / 105.0, 1.0 / 5.0, -4.0 / 5.0];
        let d = |g: &dyn Fn(f64) -> f64, x: f64| {
            let mut s = 0.0;
            for (k, wk) in w.iter().enumerate() {
                let o = (4 - k) as f64 * h;
                s += wk * (g(x - o) - g(x + o));
            }
            s / h
        };
        let d1 = |x: f64| d(&f, x);
        let d2 = |x: f64| d(&d1, x);
        let d3 = d(&d2, 2.0);
        let (a, b) = (d1(2.0), d2(2.0));
        let fd = d3 / a - 1.5 * (b / a).powi(2);
        assert!((fd + 2.0 / 3.0).abs() < 1e-8);
        assert!(matches!(schwarzian(&j, c(1.0, 0.0)), Err(TeichError::CriticalPoint(_))));
    }

    #[test]
    fn left_moebius_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let psi = LaurentMap::new(vec![c(0.1, -0.05), c(0.02, 0.0), c(0.0, 0.01)]).unwrap();
        for _ in 0..100 {
            let m = random_moebius(&mut rng);
            let z = Complex64::from_polar(rng.gen_range(1.01..4.0), rng.gen_range(0.0..6.3));
            let comp = Composite { outer: &m, inner: &psi };
            let (Ok(a), Ok(b)) = (schwarzian(&psi, z), schwarzian(&comp, z)) else {
                continue;
            };
            assert!((a - b).norm() < 1e-10 * (1.0 + a.norm()), "{a} {b}");
        }
    }
}
