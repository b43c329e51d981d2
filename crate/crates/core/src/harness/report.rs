//! Long-format series and plain-text summaries of a finished run directory.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::diagnostics::{parse_csv, DiagnosticsRecord};
use crate::error::{Error, Result};

use super::run::{integral_or_zero, RunSummary, DIAGNOSTICS_FILE, SUMMARY_FILE};

pub const SERIES_FILE: &str = "series.csv";
pub const REPORT_FILE: &str = "report.txt";

/// Events that belong to the continuation monitors, as opposed to mesh quality.
pub const MONITORS: [&str; 2] = ["taylor_sign", "K_max"];

#[derive(Debug, Clone)]
pub struct RunReport {
    pub records: Vec<DiagnosticsRecord>,
    pub summary: Option<RunSummary>,
    pub breakdown_integral: f64,
    pub monitor_fired: Option<String>,
    pub series: String,
    pub text: String,
}

/// `t,metric,value` rows grouped by metric, in column order.
pub fn series_csv(records: &[DiagnosticsRecord]) -> String {
    let mut out = String::from("t,metric,value\n");
    let Some(first) = records.first() else { return out };
    let names: Vec<&str> = first.named_values().iter().skip(1).map(|(n, _)| *n).collect();
    for (k, name) in names.iter().enumerate() {
        for r in records {
            let v = r.named_values()[k + 1].1;
            let _ = writeln!(out, "{:.16e},{name},{v:.16e}", r.t);
        }
    }
    out
}

fn summary_text(name: &str, records: &[DiagnosticsRecord], summary: Option<&RunSummary>, integral: f64, fired: Option<&str>) -> String {
    let mut s = String::new();
    let first = records.first().copied().unwrap_or_default();
    let last = records.last().copied().unwrap_or_default();
    let _ = writeln!(s, "run: {name}");
    let _ = writeln!(s, "records: {} (t = {} .. {})", records.len(), first.t, last.t);
    match summary {
        Some(sum) => {
            let _ = writeln!(s, "termination: {}", sum.termination);
            if let Some(r) = &sum.reason {
                let _ = writeln!(s, "reason: {r}");
            }
        }
        None => {
            let _ = writeln!(s, "termination: unknown (no {SUMMARY_FILE})");
        }
    }
    match fired {
        Some(m) => {
            let _ = writeln!(s, "monitor fired: {m} at t = {}", last.t);
        }
        None => {
            let _ = writeln!(s, "monitor fired: none");
        }
    }
    let _ = writeln!(s, "taylor margin: {:.6} (initial {:.6})", last.taylor_margin, first.taylor_margin);
    let _ = writeln!(s, "breakdown integral: {integral:.10e}");
    let _ = writeln!(s, "final A = {:.6e}, K = {:.6e}, grad_N D_t p sup = {:.6e}", last.a, last.k, last.grad_n_dtp_sup);
    if let Some(sum) = summary {
        let _ = writeln!(
            s,
            "drift: volume {:.3e}, energy {:.3e}; vorticity consistency {:.3e}",
            sum.volume_drift, sum.energy_drift, sum.vorticity_consistency
        );
    }
    s
}

/// Reads a run directory without modifying it.
pub fn build_report(dir: &Path) -> Result<RunReport> {
    if !dir.is_dir() {
        return Err(Error::MissingRunDir(dir.display().to_string()));
    }
    let text = fs::read_to_string(dir.join(DIAGNOSTICS_FILE))?;
    let records = parse_csv(&text)?;
    if records.is_empty() {
        return Err(Error::Parse { line: 2, message: "no records".into() });
    }
    let summary_path = dir.join(SUMMARY_FILE);
    let summary: Option<RunSummary> = if summary_path.exists() {
        Some(serde_json::from_str(&fs::read_to_string(summary_path)?)?)
    } else {
        None
    };
    let breakdown_integral = integral_or_zero(&records)?;
    let monitor_fired = summary.as_ref().map(|s| s.termination.clone()).filter(|t| MONITORS.contains(&t.as_str()));
    let name = summary
        .as_ref()
        .map(|s| s.name.clone())
        .unwrap_or_else(|| dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default());
    let text = summary_text(&name, &records, summary.as_ref(), breakdown_integral, monitor_fired.as_deref());
    Ok(RunReport { series: series_csv(&records), records, summary, breakdown_integral, monitor_fired, text })
}

/// Builds the report and writes `series.csv` and `report.txt` next to the diagnostics.
pub fn write_report(dir: &Path) -> Result<RunReport> {
    let report = build_report(dir)?;
    fs::write(dir.join(SERIES_FILE), &report.series)?;
    fs::write(dir.join(REPORT_FILE), &report.text)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_is_grouped_by_metric() {
        let recs: Vec<DiagnosticsRecord> = (0..3).map(|i| DiagnosticsRecord { t: i as f64, a: 2.0, ..Default::default() }).collect();
        let csv = series_csv(&recs);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 1 + 19 * 3);
        assert!(lines[1].ends_with(",A,2.0000000000000000e0"));
        assert!(lines[4].contains(",K,"));
    }

    #[test]
    fn missing_directory_is_an_error() {
        let tmp = tempfile::tempdir().unwrap();
        assert!(matches!(build_report(&tmp.path().join("nope")), Err(Error::MissingRunDir(_))));
    }
}
