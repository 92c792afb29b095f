//! CSV and JSON serialization of sweep rows.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::harness::SweepRow;
use crate::model::Alpha;

pub const CSV_HEADER: &str = "gamma,n,r,k,alpha,windows,access_prob,ci95,mean_wr,mean_dec,mean_peak_storage,seed";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::Parse(format!("unknown format '{other}' (expected csv or json)"))),
        }
    }
}

/// Rounds to 6 significant digits.
pub fn round_sig6(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.5e}").parse().unwrap_or(x)
}

fn fmt_float(x: f64) -> String {
    format!("{}", round_sig6(x))
}

/// The row as it appears on disk.
pub fn rounded(row: &SweepRow) -> SweepRow {
    SweepRow {
        gamma: round_sig6(row.gamma),
        access_prob: round_sig6(row.access_prob),
        ci95: round_sig6(row.ci95),
        mean_wr: round_sig6(row.mean_wr),
        mean_dec: round_sig6(row.mean_dec),
        mean_peak_storage: round_sig6(row.mean_peak_storage),
        ..row.clone()
    }
}

pub fn to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            fmt_float(row.gamma),
            row.n,
            row.r,
            row.k,
            row.alpha,
            row.windows,
            fmt_float(row.access_prob),
            fmt_float(row.ci95),
            fmt_float(row.mean_wr),
            fmt_float(row.mean_dec),
            fmt_float(row.mean_peak_storage),
            row.seed
        );
    }
    out
}

fn field<T: FromStr>(value: &str, name: &str, line: usize) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Parse(format!("line {line}: bad {name} value '{value}'")))
}

pub fn parse_csv(text: &str) -> Result<Vec<SweepRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim_end() == CSV_HEADER => {}
        _ => return Err(Error::Parse("missing or unexpected CSV header".into())),
    }
    let mut rows = Vec::new();
    for (index, line) in lines {
        let line_no = index + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.trim_end().split(',').collect();
        if cols.len() != 12 {
            return Err(Error::Parse(format!("line {line_no}: expected 12 columns, found {}", cols.len())));
        }
        rows.push(SweepRow {
            gamma: field(cols[0], "gamma", line_no)?,
            n: field(cols[1], "n", line_no)?,
            r: field(cols[2], "r", line_no)?,
            k: field(cols[3], "k", line_no)?,
            alpha: field::<Alpha>(cols[4], "alpha", line_no)?,
            windows: field(cols[5], "windows", line_no)?,
            access_prob: field(cols[6], "access_prob", line_no)?,
            ci95: field(cols[7], "ci95", line_no)?,
            mean_wr: field(cols[8], "mean_wr", line_no)?,
            mean_dec: field(cols[9], "mean_dec", line_no)?,
            mean_peak_storage: field(cols[10], "mean_peak_storage", line_no)?,
            seed: field(cols[11], "seed", line_no)?,
        });
    }
    Ok(rows)
}

pub fn to_json(rows: &[SweepRow]) -> Result<String> {
    let rounded: Vec<SweepRow> = rows.iter().map(rounded).collect();
    let mut text = serde_json::to_string_pretty(&rounded)?;
    text.push('\n');
    Ok(text)
}

pub fn parse_json(text: &str) -> Result<Vec<SweepRow>> {
    Ok(serde_json::from_str(text)?)
}

pub fn render(rows: &[SweepRow], format: Format) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::invalid("rows", "nothing to write"));
    }
    match format {
        Format::Csv => Ok(to_csv(rows)),
        Format::Json => to_json(rows),
    }
}

pub fn write_results(rows: &[SweepRow], format: Format, path: &Path) -> Result<()> {
    let text = render(rows, format)?;
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(alpha: Alpha) -> SweepRow {
        SweepRow {
            gamma: 0.30000000000000004,
            n: 30,
            r: 100,
            k: 3,
            alpha,
            windows: 10_000,
            access_prob: 0.987654321,
            ci95: 0.00123456789,
            mean_wr: 1234567.891,
            mean_dec: 0.0,
            mean_peak_storage: 100.0,
            seed: u64::MAX,
        }
    }

    #[test]
    fn one_row_two_lines() {
        let csv = to_csv(&[row(Alpha::Finite(2))]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1], "0.3,30,100,3,2,10000,0.987654,0.00123457,1234570,0,100,18446744073709551615");
    }

    #[test]
    fn unbounded_alpha_prints_inf() {
        let csv = to_csv(&[row(Alpha::Unbounded)]);
        assert!(csv.lines().nth(1).unwrap().contains(",inf,"));
    }

    #[test]
    fn csv_round_trip() {
        let rows = vec![row(Alpha::Finite(1)), row(Alpha::Unbounded)];
        let csv = to_csv(&rows);
        let parsed = parse_csv(&csv).unwrap();
        let expected: Vec<SweepRow> = rows.iter().map(rounded).collect();
        assert_eq!(parsed, expected);
        assert_eq!(to_csv(&parsed), csv);
    }

    #[test]
    fn csv_and_json_agree() {
        let rows = vec![row(Alpha::Finite(4)), row(Alpha::Unbounded)];
        let from_csv = parse_csv(&to_csv(&rows)).unwrap();
        let from_json = parse_json(&to_json(&rows).unwrap()).unwrap();
        assert_eq!(from_csv, from_json);
        let value: serde_json::Value = serde_json::from_str(&to_json(&rows).unwrap()).unwrap();
        let keys: Vec<&str> = value[0].as_object().unwrap().keys().map(String::as_str).collect();
        let mut header: Vec<&str> = CSV_HEADER.split(',').collect();
        header.sort_unstable();
        let mut keys_sorted = keys.clone();
        keys_sorted.sort_unstable();
        assert_eq!(keys_sorted, header);
        assert_eq!(value[1]["alpha"], "inf");
    }

    #[test]
    fn sig6_rounding() {
        assert_eq!(round_sig6(0.1234564), 0.123456);
        assert_eq!(round_sig6(123456.7), 123457.0);
        assert_eq!(round_sig6(0.0), 0.0);
        assert_eq!(fmt_float(1.0), "1");
    }

    #[test]
    fn malformed_csv() {
        assert!(parse_csv("a,b\n").is_err());
        let bad = format!("{CSV_HEADER}\n0.3,30,100\n");
        assert!(parse_csv(&bad).is_err());
        let bad = format!("{CSV_HEADER}\n0.3,30,100,3,zero,1,1,0,0,0,0,0\n");
        assert!(matches!(parse_csv(&bad), Err(Error::Parse(msg)) if msg.contains("alpha")));
    }

    #[test]
    fn empty_rows_rejected() {
        assert!(render(&[], Format::Csv).is_err());
    }

    #[test]
    fn io_error_names_path() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("missing").join("out.csv");
        let err = write_results(&[row(Alpha::Finite(1))], Format::Csv, &path).unwrap_err();
        assert!(err.to_string().contains("out.csv"), "{err}");
    }
}
