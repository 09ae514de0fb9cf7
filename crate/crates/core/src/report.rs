//! CSV/JSON serialization of simulation reports.
//!
//! The CSV schema is fixed:
//! `encoder,K,T,p,M,criterion,snr_db,zeta_db,bits,errors,ber,avg_nodes,avg_mults,avg_adds,metric_mean,metric_std,seed`
//! with reals printed at 17 significant digits so reruns compare
//! byte-for-byte. Wall-clock time is deliberately absent from the CSV; the
//! JSON form carries it alongside a config echo.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::encoders::Criterion;
use crate::error::Error;
use crate::sim::SimReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::ConfigInvalid(format!("unknown format '{other}'"))),
        }
    }
}

pub const CSV_HEADER: &str = "encoder,K,T,p,M,criterion,snr_db,zeta_db,bits,errors,ber,avg_nodes,avg_mults,avg_adds,metric_mean,metric_std,seed";

/// 17 significant digits, bit-exact across runs.
fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt_real(x: Option<f64>) -> String {
    x.map(fmt_real).unwrap_or_default()
}

fn criterion_str(c: Criterion) -> &'static str {
    match c {
        Criterion::Zf => "zf",
        Criterion::Mmse => "mmse",
    }
}

pub fn to_csv(report: &SimReport) -> String {
    let mut out = String::with_capacity(128 * (report.rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in &report.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.encoder,
            r.k,
            r.t.map(|v| v.to_string()).unwrap_or_default(),
            r.p.map(|v| v.to_string()).unwrap_or_default(),
            r.m.map(|v| v.to_string()).unwrap_or_default(),
            criterion_str(r.criterion),
            fmt_real(r.snr_db),
            fmt_opt_real(r.zeta_db),
            r.bits,
            r.errors,
            fmt_real(r.ber),
            fmt_real(r.avg_nodes),
            fmt_real(r.avg_mults),
            fmt_real(r.avg_adds),
            fmt_opt_real(r.metric_mean),
            fmt_opt_real(r.metric_std),
            r.seed,
        );
    }
    out
}

pub fn to_json(report: &SimReport) -> Result<String, Error> {
    serde_json::to_string_pretty(report)
        .map_err(|e| Error::ConfigInvalid(format!("serialization failed: {e}")))
}

/// Writes the report to `path`, or to standard output when `path` is None.
pub fn emit_report(
    report: &SimReport,
    format: ReportFormat,
    path: Option<&Path>,
) -> Result<(), Error> {
    let body = match format {
        ReportFormat::Csv => to_csv(report),
        ReportFormat::Json => to_json(report)?,
    };
    match path {
        Some(p) => std::fs::write(p, body)?,
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(body.as_bytes())?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{EncoderSpec, SimConfig};

    fn tiny_report() -> SimReport {
        let cfg = SimConfig {
            n_antennas: 2,
            encoders: vec![EncoderSpec::Thp { t: 3 }],
            snr_db: vec![10.0],
            target_min_bit_errors: 10,
            max_vectors: 100,
            seed: 3,
            zeta_db: None,
            n_f: 1,
            criterion: Criterion::Mmse,
            p_total: None,
        };
        crate::sim::sweep(&cfg).unwrap()
    }

    #[test]
    fn empty_report_is_header_only() {
        let mut report = tiny_report();
        report.rows.clear();
        let csv = to_csv(&report);
        assert_eq!(csv.trim_end(), CSV_HEADER);
    }

    #[test]
    fn csv_row_count_and_columns() {
        let report = tiny_report();
        let csv = to_csv(&report);
        let lines: Vec<&str> = csv.trim_end().lines().collect();
        assert_eq!(lines.len(), report.rows.len() + 1);
        for line in &lines {
            assert_eq!(line.split(',').count(), 17, "line: {line}");
        }
    }

    #[test]
    fn json_roundtrip_preserves_fields() {
        let report = tiny_report();
        let json = to_json(&report).unwrap();
        let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
        let row = &parsed["rows"][0];
        assert_eq!(row["encoder"], "thp");
        assert_eq!(row["bits"].as_u64().unwrap(), report.rows[0].bits);
        assert_eq!(row["ber"].as_f64().unwrap(), report.rows[0].ber);
        assert_eq!(
            parsed["config"]["n_antennas"].as_u64().unwrap() as usize,
            report.config.n_antennas
        );
    }

    #[test]
    fn csv_is_deterministic_without_wall_time() {
        let a = to_csv(&tiny_report());
        let b = to_csv(&tiny_report());
        assert_eq!(a, b);
        assert!(!a.contains("wall"));
    }
}
