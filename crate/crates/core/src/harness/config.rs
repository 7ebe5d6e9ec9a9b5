//! Sweep specifications and the `key = value` configuration format.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::disc::SolverConfig;
use crate::infinity::InfinityGrid;
use crate::teich::{BersGrid, LaurentMap, MAX_ORDER};

/// A one-parameter family `Ψ_t(z) = z + t Σ d_k z^{-k}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    /// `(k, d_k)` pairs.
    pub pattern: Vec<(usize, Complex64)>,
}

impl FamilySpec {
    /// The family `z + t/z^k`.
    pub fn single(k: usize) -> Self {
        FamilySpec {
            pattern: vec![(k, Complex64::new(1.0, 0.0))],
        }
    }

    pub fn coefficients(&self, t: f64) -> Vec<Complex64> {
        let order = self.pattern.iter().map(|p| p.0).max().unwrap_or(0);
        let mut c = vec![Complex64::new(0.0, 0.0); order];
        for &(k, d) in &self.pattern {
            c[k - 1] += d * t;
        }
        c
    }

    /// The certified map at parameter `t`.
    pub fn map(&self, t: f64) -> Result<LaurentMap, HarnessError> {
        Ok(LaurentMap::new(self.coefficients(t))?)
    }
}

impl FromStr for FamilySpec {
    type Err = HarnessError;

    /// Accepts `ck` (for instance `c1`) or a pattern of `k:re[,im]` terms
    /// separated by `;` or whitespace.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || HarnessError::Usage(format!("family `{s}`: expected `c<k>` or `k:re[,im];...`"));
        let s = s.trim();
        let check = |k: usize| {
            if k == 0 || k > MAX_ORDER {
                Err(bad())
            } else {
                Ok(k)
            }
        };
        if let Some(k) = s.strip_prefix('c') {
            return Ok(FamilySpec::single(check(k.parse().map_err(|_| bad())?)?));
        }
        let mut pattern = Vec::new();
        for term in s.split(|c: char| c == ';' || c.is_whitespace()).filter(|t| !t.is_empty()) {
            let (k, v) = term.split_once(':').ok_or_else(bad)?;
            let k = check(k.trim().parse().map_err(|_| bad())?)?;
            let mut parts = v.split(',');
            let re: f64 = parts.next().ok_or_else(bad)?.trim().parse().map_err(|_| bad())?;
            let im: f64 = match parts.next() {
                Some(p) => p.trim().parse().map_err(|_| bad())?,
                None => 0.0,
            };
            if parts.next().is_some() {
                return Err(bad());
            }
            pattern.push((k, Complex64::new(re, im)));
        }
        if pattern.is_empty() {
            return Err(bad());
        }
        Ok(FamilySpec { pattern })
    }
}

/// Everything a sweep needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub family: FamilySpec,
    pub t_values: Vec<f64>,
    pub solver: SolverConfig,
    pub bers_grid: BersGrid,
    pub infinity_grid: InfinityGrid,
    /// Support planes of the hull proxy.
    pub hull_planes: usize,
    /// Samples of the quasicircle used by the hull proxy.
    pub boundary_samples: usize,
    /// Height of the horizontal plane whose sinh-distance enters `Δu = 2u`.
    pub pde_plane_height: f64,
    /// Rows solved concurrently; results are assembled in parameter order.
    pub threads: usize,
    pub output_dir: Option<PathBuf>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            family: FamilySpec::single(1),
            t_values: vec![0.02, 0.04, 0.06, 0.08, 0.10],
            solver: SolverConfig::default(),
            bers_grid: BersGrid::default(),
            infinity_grid: InfinityGrid::default(),
            hull_planes: 128,
            boundary_samples: 1024,
            pde_plane_height: -1.0,
            threads: 1,
            output_dir: None,
        }
    }
}

impl SweepSpec {
    /// `steps` evenly spaced values from `t_min` to `t_max`.
    pub fn range(t_min: f64, t_max: f64, steps: usize) -> Result<Vec<f64>, HarnessError> {
        if steps == 0 || !(t_min.is_finite() && t_max.is_finite()) || t_max < t_min {
            return Err(HarnessError::Usage(format!("range {t_min}..{t_max} with {steps} steps")));
        }
        if steps == 1 {
            return Ok(vec![t_min]);
        }
        Ok((0..steps)
            .map(|i| t_min + (t_max - t_min) * i as f64 / (steps - 1) as f64)
            .collect())
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.t_values.is_empty() {
            return Err(HarnessError::Usage("empty parameter list".into()));
        }
        if self.t_values.iter().any(|t| !t.is_finite()) {
            return Err(HarnessError::Usage("non-finite parameter".into()));
        }
        if self.hull_planes < 2 || self.boundary_samples < 16 {
            return Err(HarnessError::Usage("need at least 2 hull planes and 16 boundary samples".into()));
        }
        self.solver.validate()?;
        Ok(())
    }
}

/// Parsed `key = value` lines. Keys are normalised to lower case with `_`
/// in place of `-`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigMap(pub BTreeMap<String, String>);

impl ConfigMap {
    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, HarnessError> {
        match self.0.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| HarnessError::Usage(format!("config key `{key}`: cannot parse `{v}`"))),
        }
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    /// Fails on keys outside `known`.
    pub fn check_keys(&self, known: &[&str]) -> Result<(), HarnessError> {
        match self.0.keys().find(|k| !known.contains(&k.as_str())) {
            Some(k) => Err(HarnessError::Usage(format!("unknown config key `{k}`"))),
            None => Ok(()),
        }
    }
}

pub fn parse_config(text: &str) -> Result<ConfigMap, HarnessError> {
    let mut map = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| HarnessError::Usage(format!("config line {}: expected `key = value`", n + 1)))?;
        let key = k.trim().to_ascii_lowercase().replace('-', "_");
        if key.is_empty() {
            return Err(HarnessError::Usage(format!("config line {}: empty key", n + 1)));
        }
        map.insert(key, v.trim().to_string());
    }
    Ok(ConfigMap(map))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_syntax() {
        assert_eq!("c1".parse::<FamilySpec>().unwrap(), FamilySpec::single(1));
        let f: FamilySpec = "1:1; 3:0,0.5".parse().unwrap();
        let c = f.coefficients(0.1);
        assert_eq!(c.len(), 3);
        assert_eq!(c[0], Complex64::new(0.1, 0.0));
        assert_eq!(c[2], Complex64::new(0.0, 0.05));
        assert!("c0".parse::<FamilySpec>().is_err());
        assert!("x".parse::<FamilySpec>().is_err());
    }

    #[test]
    fn config_lines() {
        let m = parse_config("# sweep\nvertices = 2500\nt-max=0.1 # upper\n\n").unwrap();
        assert_eq!(m.get::<usize>("vertices").unwrap(), Some(2500));
        assert_eq!(m.get::<f64>("t_max").unwrap(), Some(0.1));
        assert!(m.get::<usize>("t_max").is_err());
        assert!(m.check_keys(&["vertices"]).is_err());
        assert!(parse_config("novalue").is_err());
    }

    #[test]
    fn ranges() {
        assert_eq!(SweepSpec::range(0.0, 1.0, 3).unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(SweepSpec::range(0.0, 0.0, 1).unwrap(), vec![0.0]);
        assert!(SweepSpec::range(1.0, 0.0, 3).is_err());
    }
}
