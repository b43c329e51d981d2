//! Subcommand bodies. Each returns the process exit code: 0 completed or
//! passed, 1 error, 2 monitored event.

use std::fs;
use std::path::Path;

use crate::error::Result;

use super::oracle::{inventory, run_oracles, OracleConfig};
use super::report::write_report;
use super::run::{execute_run, RunConfig};
use super::verify::{run_verify, VerifyConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_EVENT: i32 = 2;

pub const VERIFY_FILE: &str = "verify_report.json";
pub const ORACLE_FILE: &str = "oracle_report.json";
pub const GREEN_FILE: &str = "oracle_green.csv";
pub const DTN_FILE: &str = "oracle_dtn.csv";
pub const POISSON_FILE: &str = "oracle_poisson.csv";

fn fail(e: impl std::fmt::Display) -> i32 {
    eprintln!("error: {e}");
    EXIT_ERROR
}

pub fn cmd_run(config: &RunConfig) -> i32 {
    match execute_run(config) {
        Ok((dir, s)) => {
            println!(
                "{}: {} after {} steps (t = {}), breakdown integral {:.6e}, written to {}",
                s.name,
                s.termination,
                s.steps,
                s.final_time,
                s.breakdown_integral,
                dir.display()
            );
            if let Some(r) = &s.reason {
                eprintln!("run stopped: {r}");
            }
            s.exit_code
        }
        Err(e) => fail(e),
    }
}

fn write_json_and_tables(output: &Path, files: &[(&str, String)]) -> Result<()> {
    fs::create_dir_all(output)?;
    for (name, body) in files {
        fs::write(output.join(name), body)?;
    }
    Ok(())
}

pub fn cmd_verify(config: &VerifyConfig, output: &Path) -> i32 {
    let report = match run_verify(config) {
        Ok(r) => r,
        Err(e) => return fail(e),
    };
    let json = match serde_json::to_string_pretty(&report) {
        Ok(j) => j,
        Err(e) => return fail(e),
    };
    if let Err(e) = write_json_and_tables(output, &[(VERIFY_FILE, json)]) {
        return fail(e);
    }
    for f in &report.family {
        println!("family {} {}: spread {:.3} {}", f.name, f.field, f.spread, if f.stable { "stable" } else { "unstable" });
    }
    for n in &report.notes {
        println!("note: {n}");
    }
    for f in &report.failures {
        println!("FAIL {f}");
    }
    println!(
        "verify {:?}: {} entries, {} failures, report in {}",
        report.corpus,
        report.entries.len(),
        report.failures.len(),
        output.join(VERIFY_FILE).display()
    );
    if report.passed {
        EXIT_OK
    } else {
        EXIT_ERROR
    }
}

pub fn cmd_oracle(config: &OracleConfig, output: &Path, list: bool) -> i32 {
    if list {
        for (name, what) in inventory() {
            println!("{name:<26}{what}");
        }
        return EXIT_OK;
    }
    let report = match run_oracles(config) {
        Ok(r) => r,
        Err(e) => return fail(e),
    };
    let json = match serde_json::to_string_pretty(&report) {
        Ok(j) => j,
        Err(e) => return fail(e),
    };
    let files = [
        (ORACLE_FILE, json),
        (GREEN_FILE, report.green_csv()),
        (DTN_FILE, report.dtn_csv()),
        (POISSON_FILE, report.poisson_csv()),
    ];
    if let Err(e) = write_json_and_tables(output, &files) {
        return fail(e);
    }
    for e in &report.entries {
        let status = if e.passed { "pass" } else { "FAIL" };
        let note = e.note.as_deref().map(|n| format!(" ({n})")).unwrap_or_default();
        println!("{status} {:<24} {:>12.4e} in [{}, {}]{note}", e.name, e.value, e.accept.0, e.accept.1);
    }
    if report.all_passed() {
        EXIT_OK
    } else {
        EXIT_ERROR
    }
}

pub fn cmd_report(dir: &Path) -> i32 {
    match write_report(dir) {
        Ok(r) => {
            print!("{}", r.text);
            EXIT_OK
        }
        Err(e) => fail(e),
    }
}
