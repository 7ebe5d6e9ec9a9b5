//! One row per family parameter: Bers norm, dilatation bound, foliation
//! width, the solved minimal disc and its residuals; then the fits.

use serde::{Deserialize, Serialize};

use super::{HarnessError, SweepSpec};
use crate::disc::{
    harmonic_residual, hull_containment, minimize_area, pde_residual, principal_curvatures, seed_mesh,
    ConformalChart, ProbeStrategy, TriMesh,
};
use crate::geom::SupportPlane;
use crate::infinity::{foliation_width, forms_at_infinity};
use crate::teich::{ahlfors_weill_K, bers_norm, sample_quasicircle, teich_distance_from_K};

/// Relative slack allowed by [`verify_bound`].
pub const BOUND_SLACK: f64 = 0.2;

/// One sweep row. Fields a failed stage could not produce are 0 and the row
/// is flagged non-converged with the error text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub t: f64,
    pub bers_norm: f64,
    pub k_upper: f64,
    pub teich_dist: f64,
    pub sup_lambda: f64,
    pub width: f64,
    pub pde_residual: f64,
    pub hull_violation: f64,
    pub harmonic_residual: f64,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

impl RunRecord {
    fn empty(t: f64) -> Self {
        RunRecord {
            t,
            bers_norm: 0.0,
            k_upper: 0.0,
            teich_dist: 0.0,
            sup_lambda: 0.0,
            width: 0.0,
            pde_residual: 0.0,
            hull_violation: 0.0,
            harmonic_residual: 0.0,
            converged: false,
            error: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub records: Vec<RunRecord>,
    /// Slope of `sup λ` against the Bers norm through the origin.
    pub c_fit: f64,
    /// Root-mean-square residual of that fit.
    pub c_fit_residual: f64,
    /// Slope of `sup λ` against `log K_upper` through the origin.
    pub c_log_fit: f64,
    pub c_log_fit_residual: f64,
    /// Number of converged rows entering the fits.
    pub fitted_rows: usize,
}

/// Least-squares slope of `y = c x` and the rms residual.
pub fn fit_through_origin(x: &[f64], y: &[f64]) -> (f64, f64) {
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    if sxx == 0.0 {
        return (0.0, 0.0);
    }
    let c = x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / sxx;
    let ss: f64 = x.iter().zip(y).map(|(a, b)| (b - c * a).powi(2)).sum();
    (c, (ss / x.len() as f64).sqrt())
}

fn fill_row(rec: &mut RunRecord, spec: &SweepSpec) -> Result<TriMesh, HarnessError> {
    let psi = spec.family.map(rec.t)?;
    rec.bers_norm = bers_norm(&psi, &spec.bers_grid)?.value;
    rec.k_upper = ahlfors_weill_K(rec.bers_norm)?;
    rec.teich_dist = teich_distance_from_K(rec.k_upper)?;
    let data = forms_at_infinity(&psi, &spec.infinity_grid)?;
    rec.width = foliation_width(data.sup_a)?.width;

    let gamma = sample_quasicircle(&psi, spec.boundary_samples)?;
    let solved = minimize_area(&seed_mesh(&gamma, &spec.solver)?, &spec.solver)?;
    let mesh = solved.mesh;
    rec.sup_lambda = principal_curvatures(&mesh, ProbeStrategy::TransportedFrame).sup_lambda;
    rec.pde_residual = pde_residual(&mesh, &SupportPlane::horizontal(spec.pde_plane_height));
    rec.hull_violation = hull_containment(&mesh, &gamma, spec.hull_planes)?.violation;
    rec.harmonic_residual = harmonic_residual(&ConformalChart::from_mesh(&mesh)?);
    rec.converged = solved.converged;
    if !solved.converged {
        rec.error = Some(format!("solver stopped at residual {:e} after {} iterations", solved.residual, solved.iterations));
    }
    Ok(mesh)
}

/// Runs every stage for parameter `t`; a failing stage ends the row and is
/// recorded in it. The solved mesh is returned when the solver ran.
pub fn run_row(t: f64, spec: &SweepSpec) -> (RunRecord, Option<TriMesh>) {
    let mut rec = RunRecord::empty(t);
    match fill_row(&mut rec, spec) {
        Ok(mesh) => (rec, Some(mesh)),
        Err(e) => {
            rec.converged = false;
            rec.error = Some(e.to_string());
            (rec, None)
        }
    }
}

impl VerificationReport {
    /// Fits over the converged rows of `records`.
    pub fn from_records(records: Vec<RunRecord>) -> Self {
        let ok: Vec<&RunRecord> = records.iter().filter(|r| r.converged).collect();
        let lam: Vec<f64> = ok.iter().map(|r| r.sup_lambda).collect();
        let b: Vec<f64> = ok.iter().map(|r| r.bers_norm).collect();
        let lk: Vec<f64> = ok.iter().map(|r| r.k_upper.ln()).collect();
        let (c_fit, c_fit_residual) = fit_through_origin(&b, &lam);
        let (c_log_fit, c_log_fit_residual) = fit_through_origin(&lk, &lam);
        VerificationReport {
            fitted_rows: ok.len(),
            records,
            c_fit,
            c_fit_residual,
            c_log_fit,
            c_log_fit_residual,
        }
    }
}

/// Solves every row of the sweep. Rows run on up to `spec.threads` threads
/// and are reported in parameter order, so the output does not depend on
/// scheduling.
pub fn run_sweep(spec: &SweepSpec) -> Result<VerificationReport, HarnessError> {
    spec.validate()?;
    let threads = spec.threads.max(1);
    let mut records: Vec<Option<RunRecord>> = vec![None; spec.t_values.len()];
    for chunk in spec.t_values.iter().enumerate().collect::<Vec<_>>().chunks(threads) {
        let done: Vec<(usize, RunRecord)> = std::thread::scope(|s| {
            let handles: Vec<_> = chunk
                .iter()
                .map(|&(i, &t)| s.spawn(move || (i, run_row(t, spec).0)))
                .collect();
            handles.into_iter().map(|h| h.join().expect("sweep row panicked")).collect()
        });
        for (i, r) in done {
            records[i] = Some(r);
        }
    }
    let records: Vec<RunRecord> = records.into_iter().map(|r| r.expect("row missing")).collect();
    let report = VerificationReport::from_records(records);
    if report.fitted_rows == 0 {
        return Err(HarnessError::EmptySweep);
    }
    Ok(report)
}

/// Per-row comparison against the fitted bounds. Margins are
/// `bound·(1 + slack) - sup λ`; negative means the row fails.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowMargin {
    pub t: f64,
    pub sup_lambda: f64,
    /// `C b / sqrt(1 - C b^2)`, infinite when the root is not real.
    pub bound: f64,
    pub margin: f64,
    /// `C' log K_upper`.
    pub log_bound: f64,
    pub log_margin: f64,
    /// `sup λ / b`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifySummary {
    pub pass: bool,
    /// True when no row has positive Bers norm, so there is nothing to bound.
    pub vacuous: bool,
    pub c_fit: f64,
    pub c_log_fit: f64,
    pub rows: Vec<RowMargin>,
    pub failures: Vec<String>,
}

/// Checks the converged rows against
/// (i) `sup λ ≤ C b / sqrt(1 - C b^2)`,
/// (ii) no growth of `sup λ / b` as `b → 0`,
/// (iii) `sup λ ≤ C' log K`, and
/// (iv) the row with the smallest `b` has `sup λ < 0.1`,
/// each bound with [`BOUND_SLACK`].
pub fn verify_bound(report: &VerificationReport) -> Result<VerifySummary, HarnessError> {
    let ok: Vec<&RunRecord> = report.records.iter().filter(|r| r.converged).collect();
    let positive: Vec<&RunRecord> = ok.iter().copied().filter(|r| r.bers_norm > 0.0).collect();
    let (c, cl) = (report.c_fit, report.c_log_fit);
    if positive.is_empty() && !ok.is_empty() {
        return Ok(VerifySummary {
            pass: true,
            vacuous: true,
            c_fit: c,
            c_log_fit: cl,
            rows: Vec::new(),
            failures: Vec::new(),
        });
    }
    if positive.len() < 3 {
        return Err(HarnessError::InsufficientRows(positive.len()));
    }
    let mut failures = Vec::new();
    let rows: Vec<RowMargin> = positive
        .iter()
        .map(|r| {
            let b = r.bers_norm;
            let q = 1.0 - c * b * b;
            let bound = if q > 0.0 { c * b / q.sqrt() } else { f64::INFINITY };
            let log_bound = cl * r.k_upper.ln();
            RowMargin {
                t: r.t,
                sup_lambda: r.sup_lambda,
                bound,
                margin: bound * (1.0 + BOUND_SLACK) - r.sup_lambda,
                log_bound,
                log_margin: log_bound * (1.0 + BOUND_SLACK) - r.sup_lambda,
                ratio: r.sup_lambda / b,
            }
        })
        .collect();
    for m in &rows {
        if m.margin < 0.0 {
            failures.push(format!("t={}: sup_lambda {} exceeds curvature bound {}", m.t, m.sup_lambda, m.bound));
        }
        if m.log_margin < 0.0 {
            failures.push(format!("t={}: sup_lambda {} exceeds log K bound {}", m.t, m.sup_lambda, m.log_bound));
        }
    }
    let smallest = positive
        .iter()
        .zip(&rows)
        .min_by(|a, b| a.0.bers_norm.total_cmp(&b.0.bers_norm))
        .expect("nonempty");
    let other_max = positive
        .iter()
        .zip(&rows)
        .filter(|(r, _)| r.t != smallest.0.t)
        .map(|(_, m)| m.ratio)
        .fold(0.0, f64::max);
    if smallest.1.ratio > (1.0 + BOUND_SLACK) * other_max {
        failures.push(format!(
            "sup_lambda/bers_norm grows as bers_norm -> 0: {} at t={} against {} elsewhere",
            smallest.1.ratio, smallest.0.t, other_max
        ));
    }
    if smallest.0.sup_lambda >= 0.1 {
        failures.push(format!("smallest row t={} has sup_lambda {} >= 0.1", smallest.0.t, smallest.0.sup_lambda));
    }
    Ok(VerifySummary {
        pass: failures.is_empty(),
        vacuous: false,
        c_fit: c,
        c_log_fit: cl,
        rows,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(t: f64, b: f64, lam: f64) -> RunRecord {
        RunRecord {
            bers_norm: b,
            k_upper: ahlfors_weill_K(b).unwrap(),
            sup_lambda: lam,
            converged: true,
            ..RunRecord::empty(t)
        }
    }

    fn synthetic() -> VerificationReport {
        VerificationReport::from_records(
            [0.02, 0.04, 0.06, 0.08, 0.1]
                .iter()
                .map(|&t| row(t, 1.5 * t, 1.04 * 1.5 * t))
                .collect(),
        )
    }

    #[test]
    fn fit_is_exact_on_a_line() {
        let (c, r) = fit_through_origin(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]);
        assert!((c - 2.0).abs() < 1e-15 && r < 1e-15);
        assert_eq!(fit_through_origin(&[], &[]), (0.0, 0.0));
    }

    #[test]
    fn linear_report_passes_and_doubled_fails() {
        let rep = synthetic();
        assert!((rep.c_fit - 1.04).abs() < 1e-12);
        let s = verify_bound(&rep).unwrap();
        assert!(s.pass, "{:?}", s.failures);
        assert_eq!(s.rows.len(), 5);

        let mut bad = rep.clone();
        for r in bad.records.iter_mut().skip(3) {
            r.sup_lambda *= 2.0;
        }
        let s = verify_bound(&bad).unwrap();
        assert!(!s.pass);
    }

    #[test]
    fn circle_only_is_vacuous_and_short_reports_error() {
        let rep = VerificationReport::from_records(vec![row(0.0, 0.0, 0.0)]);
        let s = verify_bound(&rep).unwrap();
        assert!(s.pass && s.vacuous);
        let rep = VerificationReport::from_records(vec![row(0.1, 0.15, 0.15), row(0.0, 0.0, 0.0)]);
        assert!(matches!(verify_bound(&rep), Err(HarnessError::InsufficientRows(1))));
    }

    #[test]
    fn non_converged_rows_are_not_fitted() {
        let mut recs = synthetic().records;
        recs.push(RunRecord {
            converged: false,
            ..row(0.12, 0.18, 5.0)
        });
        let rep = VerificationReport::from_records(recs);
        assert_eq!(rep.fitted_rows, 5);
        assert!((rep.c_fit - 1.04).abs() < 1e-12);
    }
}
