//! CSV, JSON and SVG renderings of a sweep.

use std::fmt::Write as _;
use std::path::Path;

use super::{HarnessError, RunRecord, VerificationReport};

const HEADER: [&str; 10] = [
    "t",
    "bers_norm",
    "k_upper",
    "teich_dist",
    "sup_lambda",
    "width",
    "pde_residual",
    "hull_violation",
    "harmonic_residual",
    "converged",
];

fn row_fields(r: &RunRecord) -> [String; 10] {
    [
        r.t.to_string(),
        r.bers_norm.to_string(),
        r.k_upper.to_string(),
        r.teich_dist.to_string(),
        r.sup_lambda.to_string(),
        r.width.to_string(),
        r.pde_residual.to_string(),
        r.hull_violation.to_string(),
        r.harmonic_residual.to_string(),
        r.converged.to_string(),
    ]
}

/// One line per row, in row order. Floats use the shortest representation
/// that round-trips, so equal reports give equal bytes.
pub fn report_csv(report: &VerificationReport) -> Result<String, HarnessError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| HarnessError::Io(e.to_string());
    w.write_record(HEADER).map_err(io)?;
    for r in &report.records {
        w.write_record(row_fields(r)).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| HarnessError::Io(e.to_string()))
}

pub fn report_json(report: &VerificationReport) -> Result<String, HarnessError> {
    serde_json::to_string_pretty(report).map_err(|e| HarnessError::Io(e.to_string()))
}

/// `sup λ` against the Bers norm: a marker per converged row, the linear fit
/// and the curvature bound `C b / sqrt(1 - C b^2)`.
pub fn report_svg(report: &VerificationReport) -> String {
    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const PAD: f64 = 48.0;
    let rows: Vec<&RunRecord> = report.records.iter().filter(|r| r.converged).collect();
    let c = report.c_fit;
    let bound = |b: f64| {
        let q = 1.0 - c * b * b;
        if q > 0.0 {
            c * b / q.sqrt()
        } else {
            f64::NAN
        }
    };
    let x_max = rows.iter().map(|r| r.bers_norm).fold(0.0, f64::max).max(1e-3) * 1.05;
    let y_max = rows
        .iter()
        .map(|r| r.sup_lambda)
        .chain([bound(x_max), c * x_max])
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max)
        .max(1e-3)
        * 1.05;
    let px = |x: f64| PAD + (W - 2.0 * PAD) * x / x_max;
    let py = |y: f64| H - PAD - (H - 2.0 * PAD) * y / y_max;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<path d="M{a},{b} L{a},{t} M{a},{b} L{r},{b}" stroke="black" fill="none"/>"#,
        a = PAD,
        b = H - PAD,
        t = PAD,
        r = W - PAD
    );
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="12">Bers norm (max {x_max:.4})</text>"#, W / 2.0 - 60.0, H - 12.0);
    let _ = writeln!(s, r#"<text x="8" y="{}" font-size="12">sup lambda (max {y_max:.4})</text>"#, PAD - 16.0);

    let curve = |f: &dyn Fn(f64) -> f64| {
        (0..=64)
            .map(|i| x_max * i as f64 / 64.0)
            .map(|x| (x, f(x)))
            .filter(|(_, y)| y.is_finite() && *y <= y_max)
            .map(|(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let _ = writeln!(
        s,
        r##"<polyline class="fit" points="{}" stroke="#1f77b4" fill="none"/>"##,
        curve(&|x| c * x)
    );
    let _ = writeln!(
        s,
        r##"<polyline class="bound" points="{}" stroke="#d62728" stroke-dasharray="4 3" fill="none"/>"##,
        curve(&bound)
    );
    for r in &rows {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="black"><title>t={} sup_lambda={}</title></circle>"#,
            px(r.bers_norm),
            py(r.sup_lambda),
            r.t,
            r.sup_lambda
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Writes `text` to `dir/name`, creating `dir` if needed.
pub fn write_text(dir: &Path, name: &str, text: &str) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(t: f64, converged: bool) -> RunRecord {
        RunRecord {
            t,
            bers_norm: 1.5 * t,
            k_upper: (1.0 + 3.0 * t) / (1.0 - 3.0 * t),
            teich_dist: 0.0,
            sup_lambda: 1.6 * t,
            width: 0.0,
            pde_residual: 0.01,
            hull_violation: 0.0,
            harmonic_residual: 0.02,
            converged,
            error: (!converged).then(|| "stalled".to_string()),
        }
    }

    #[test]
    fn csv_header_and_rows() {
        let empty = VerificationReport::from_records(Vec::new());
        assert_eq!(report_csv(&empty).unwrap(), format!("{}\n", HEADER.join(",")));
        let rep = VerificationReport::from_records(vec![rec(0.1, true), rec(0.2, false)]);
        let csv = report_csv(&rep).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("0.1,"));
        assert!(lines[2].ends_with(",false"));
        assert_eq!(csv, report_csv(&rep.clone()).unwrap());
    }

    #[test]
    fn json_round_trips() {
        let rep = VerificationReport::from_records(vec![rec(0.1, true), rec(0.2, false)]);
        let back: VerificationReport = serde_json::from_str(&report_json(&rep).unwrap()).unwrap();
        assert_eq!(back, rep);
    }

    #[test]
    fn svg_has_curves_and_markers() {
        let rep = VerificationReport::from_records(vec![rec(0.02, true), rec(0.06, true), rec(0.1, false)]);
        let svg = report_svg(&rep);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert_eq!(svg.matches("<circle").count(), 2);
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn writes_into_new_directory() {
        let dir = tempfile::tempdir().unwrap();
        let sub = dir.path().join("out");
        write_text(&sub, "a.txt", "x").unwrap();
        assert_eq!(std::fs::read_to_string(sub.join("a.txt")).unwrap(), "x");
    }
}
