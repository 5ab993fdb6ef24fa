//! CSV and JSON-lines emission for scan reports, bound tables, search
//! profiles and check suites. Floats serialize at 17 significant digits
//! so written values round-trip bit-exactly.

use std::io::{self, Write};

use crate::bounds::ComparisonTable;
use crate::certifier::{grid_dump, GridReport, GridSpec};
use crate::counterexample::CheckReport;
use crate::search::ProfileRow;

/// 17-significant-digit float formatting used by every emitter.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// One row per tilt value: the per-alpha minimum of the scan.
pub fn write_grid_csv(report: &GridReport, mut w: impl Write) -> io::Result<()> {
    writeln!(w, "alpha,a_index,b_index,a,b,lambda_min")?;
    for row in &report.per_alpha {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            fmt_float(row.alpha),
            row.a_index,
            row.b_index,
            fmt_float(row.a),
            fmt_float(row.b),
            fmt_float(row.lambda_min)
        )?;
    }
    Ok(())
}

/// Full per-cell dump of a scan; one row per grid cell in index order.
pub fn write_grid_cells_csv(spec: &GridSpec, mut w: impl Write) -> crate::Result<()> {
    writeln!(w, "alpha,a_index,b_index,a,b,lambda_min")?;
    let mut io_err: Option<io::Error> = None;
    grid_dump(spec, |cell, lambda| {
        if io_err.is_some() {
            return;
        }
        if let Err(e) = writeln!(
            w,
            "{},{},{},{},{},{}",
            fmt_float(cell.alpha),
            cell.a_index,
            cell.b_index,
            fmt_float(cell.a),
            fmt_float(cell.b),
            fmt_float(lambda)
        ) {
            io_err = Some(e);
        }
    })?;
    match io_err {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

/// Bound comparison table: `beta,f_nd,trivial,upper`.
pub fn write_comparison_csv(table: &ComparisonTable, mut w: impl Write) -> io::Result<()> {
    writeln!(w, "beta,f_nd,trivial,upper")?;
    for row in &table.rows {
        writeln!(
            w,
            "{},{},{},{}",
            fmt_float(row.beta),
            fmt_float(row.f_nd),
            fmt_float(row.trivial),
            fmt_float(row.upper)
        )?;
    }
    Ok(())
}

/// Externally supplied comparison points: `beta,value`.
pub fn write_points_csv(points: &[(f64, f64)], mut w: impl Write) -> io::Result<()> {
    writeln!(w, "beta,value")?;
    for (beta, value) in points {
        writeln!(w, "{},{}", fmt_float(*beta), fmt_float(*value))?;
    }
    Ok(())
}

/// Search profile: `beta,search_lb,cert_bound,upper_bound`.
pub fn write_profile_csv(rows: &[ProfileRow], mut w: impl Write) -> io::Result<()> {
    writeln!(w, "beta,search_lb,cert_bound,upper_bound")?;
    for row in rows {
        writeln!(
            w,
            "{},{},{},{}",
            fmt_float(row.beta),
            fmt_float(row.search_lb),
            fmt_float(row.cert_bound),
            fmt_float(row.upper_bound)
        )?;
    }
    Ok(())
}

/// Check suite reports as CSV.
pub fn write_checks_csv(reports: &[CheckReport], mut w: impl Write) -> io::Result<()> {
    writeln!(w, "check_name,samples,worst_slack,violations")?;
    for r in reports {
        writeln!(
            w,
            "{},{},{},{}",
            r.name,
            r.samples,
            fmt_float(r.worst_slack),
            r.violations
        )?;
    }
    Ok(())
}

/// Check suite reports as JSON lines.
pub fn write_checks_jsonl(reports: &[CheckReport], mut w: impl Write) -> io::Result<()> {
    for r in reports {
        writeln!(
            w,
            "{{\"check_name\":\"{}\",\"samples\":{},\"worst_slack\":{},\"violations\":{}}}",
            r.name,
            r.samples,
            fmt_float(r.worst_slack),
            r.violations
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_is_17_significant_digits_and_roundtrips() {
        for &x in &[
            1.998,
            -1.317e-9,
            std::f64::consts::PI,
            (16.0 + 14.0 * std::f64::consts::SQRT_2) / 17.0,
            0.0,
        ] {
            let s = fmt_float(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(fmt_float(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn profile_and_check_csv_headers() {
        let rows = vec![crate::search::ProfileRow {
            beta: 2.0,
            search_lb: 0.5,
            cert_bound: 0.4,
            upper_bound: 0.5,
        }];
        let mut out = Vec::new();
        write_profile_csv(&rows, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("beta,search_lb,cert_bound,upper_bound\n"));
        assert_eq!(text.lines().count(), 2);

        let reports = vec![crate::counterexample::CheckReport {
            name: "lemma_triangle",
            samples: 10,
            worst_slack: 0.25,
            worst_index: 3,
            violations: 0,
        }];
        let mut out = Vec::new();
        write_checks_csv(&reports, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("check_name,samples,worst_slack,violations\n"));
        let mut out = Vec::new();
        write_checks_jsonl(&reports, &mut out).unwrap();
        let line = String::from_utf8(out).unwrap();
        assert!(line.contains("\"check_name\":\"lemma_triangle\""));
    }

    #[test]
    fn grid_csv_shape() {
        let spec = GridSpec::single_alpha(0.5, 4, 6).unwrap();
        let report = crate::certifier::grid_scan(&spec).unwrap();
        let mut out = Vec::new();
        write_grid_csv(&report, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "alpha,a_index,b_index,a,b,lambda_min");
        assert_eq!(lines.len(), 2);

        let mut cells = Vec::new();
        write_grid_cells_csv(&spec, &mut cells).unwrap();
        let cell_lines = String::from_utf8(cells).unwrap().lines().count();
        assert_eq!(cell_lines, 1 + 24);
    }
}
