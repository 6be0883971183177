//! CSV and JSON encodings of an [`ExperimentReport`].
//!
//! Numbers are rounded to 12 significant digits in both encodings so that the
//! two carry identical values and the text is stable across platforms.

use std::io::{self, Write};

use crate::harness::{ExperimentReport, ReportRow};

pub const CSV_HEADER: &str = "T,trials,empirical_error,mean_regret,regret_stderr,bound_error,bound_regret,wall_time_ms";

const SIG_DIGITS: usize = 12;

/// Formats `v` with 12 significant digits, trailing zeros removed.
/// Plain notation is used for exponents in `[-5, 12)`, scientific otherwise.
pub fn format_number(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return if v.is_nan() { "NaN".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.*e}", SIG_DIGITS - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..SIG_DIGITS as i32).contains(&exp) {
        let decimals = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(format!("{v:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Rounds `v` to the value its 12-digit text encodes.
pub fn round_sig(v: f64) -> f64 {
    if v.is_finite() {
        format_number(v).parse().expect("formatted number parses")
    } else {
        v
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(format_number).unwrap_or_default()
}

fn csv_line(row: &ReportRow) -> String {
    format!(
        "{},{},{},{},{},{},{},{}",
        row.budget,
        row.trials,
        cell(row.empirical_error),
        cell(row.mean_regret),
        cell(row.regret_stderr),
        cell(row.bound_error),
        cell(row.bound_regret),
        row.wall_time_ms
    )
}

pub fn write_csv<W: Write>(report: &ExperimentReport, mut out: W) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for row in &report.rows {
        writeln!(out, "{}", csv_line(row))?;
    }
    Ok(())
}

pub fn to_csv(report: &ExperimentReport) -> String {
    let mut buf = Vec::new();
    write_csv(report, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("CSV is ASCII")
}

fn rounded(report: &ExperimentReport) -> ExperimentReport {
    let r = |v: Option<f64>| v.map(round_sig);
    let mut out = report.clone();
    for row in &mut out.rows {
        row.empirical_error = r(row.empirical_error);
        row.error_stderr = r(row.error_stderr);
        row.mean_regret = r(row.mean_regret);
        row.regret_stderr = r(row.regret_stderr);
        row.bound_error = r(row.bound_error);
        row.bound_regret = r(row.bound_regret);
        row.bound_error_raw = r(row.bound_error_raw);
    }
    out
}

pub fn to_json(report: &ExperimentReport) -> serde_json::Result<String> {
    serde_json::to_string_pretty(&rounded(report))
}
