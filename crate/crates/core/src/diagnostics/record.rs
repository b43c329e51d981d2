use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "t,A,K,taylor_margin,grad_n_dtp_sup,E0,E1,E2,E3,K1,K2,K3,cE0,cE1,cE2,cE3,volume,split_residual,bkm_lhs,bkm_rhs";
const COLUMNS: usize = 20;

/// Monitors and energies at one time sample.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub a: f64,
    pub k: f64,
    pub taylor_margin: f64,
    pub grad_n_dtp_sup: f64,
    /// `E_r`, `r = 0..=3`.
    pub e: [f64; 4],
    /// `K_r`, `r = 1..=3`.
    pub k_r: [f64; 3],
    /// `𝓔_r`, `r = 0..=3`.
    pub total: [f64; 4],
    pub volume: f64,
    pub split_residual: f64,
    pub bkm_lhs: f64,
    pub bkm_rhs: f64,
}

impl DiagnosticsRecord {
    fn values(&self) -> [f64; COLUMNS] {
        let mut v = [0.0; COLUMNS];
        v[..5].copy_from_slice(&[self.t, self.a, self.k, self.taylor_margin, self.grad_n_dtp_sup]);
        v[5..9].copy_from_slice(&self.e);
        v[9..12].copy_from_slice(&self.k_r);
        v[12..16].copy_from_slice(&self.total);
        v[16..].copy_from_slice(&[self.volume, self.split_residual, self.bkm_lhs, self.bkm_rhs]);
        v
    }

    fn from_values(v: &[f64; COLUMNS]) -> Self {
        Self {
            t: v[0],
            a: v[1],
            k: v[2],
            taylor_margin: v[3],
            grad_n_dtp_sup: v[4],
            e: [v[5], v[6], v[7], v[8]],
            k_r: [v[9], v[10], v[11]],
            total: [v[12], v[13], v[14], v[15]],
            volume: v[16],
            split_residual: v[17],
            bkm_lhs: v[18],
            bkm_rhs: v[19],
        }
    }

    /// Column names paired with values, in CSV order.
    pub fn named_values(&self) -> Vec<(&'static str, f64)> {
        CSV_HEADER.split(',').zip(self.values()).collect()
    }
}

/// CSV text with the fixed header and 17 significant digits per value.
pub fn write_csv(records: &[DiagnosticsRecord]) -> String {
    let mut s = String::with_capacity(400 * (records.len() + 1));
    s.push_str(CSV_HEADER);
    s.push('\n');
    for r in records {
        let row: Vec<String> = r.values().iter().map(|v| format!("{v:.16e}")).collect();
        let _ = writeln!(s, "{}", row.join(","));
    }
    s
}

/// Parses CSV written by [`write_csv`]; errors carry the 1-based line number.
pub fn parse_csv(text: &str) -> Result<Vec<DiagnosticsRecord>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == CSV_HEADER => {}
        _ => return Err(Error::Parse { line: 1, message: "missing or unexpected header".into() }),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != COLUMNS {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("expected {COLUMNS} columns, found {}", fields.len()),
            });
        }
        let mut v = [0.0; COLUMNS];
        for (k, f) in fields.iter().enumerate() {
            v[k] = f.trim().parse().map_err(|_| Error::Parse {
                line: i + 1,
                message: format!("bad number {f:?} in column {}", k + 1),
            })?;
        }
        out.push(DiagnosticsRecord::from_values(&v));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn csv_round_trip_is_exact(vals in proptest::collection::vec(-1e6f64..1e6, COLUMNS)) {
            let mut v = [0.0; COLUMNS];
            v.copy_from_slice(&vals);
            let rec = DiagnosticsRecord::from_values(&v);
            let back = parse_csv(&write_csv(&[rec, rec])).unwrap();
            prop_assert_eq!(back, vec![rec, rec]);
        }
    }

    #[test]
    fn corrupt_row_reports_line() {
        let text = write_csv(&[DiagnosticsRecord::default(); 3]);
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        lines[2] = lines[2].replacen("0.0000000000000000e0", "zzz", 1);
        let text = lines.join("\n");
        match parse_csv(&text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_csv("a,b\n"), Err(Error::Parse { line: 1, .. })));
    }
}
