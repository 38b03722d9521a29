use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::experiment::BerResult;
use crate::analysis::PdfRow;
use crate::error::{Error, Result};

pub const BER_HEADER: &str = "snr_db,W,trials,errors,ber_sim,ci95,ber_theory_approx,ber_theory_exact,threshold,dof_convention,threshold_mode,seed";
pub const PDF_HEADER: &str = "snr_db,W,x,f0,f1";
pub const BER_COLUMNS: usize = 12;

/// BER table as text. Floats use the shortest exact decimal form.
pub fn format_csv(results: &[BerResult]) -> String {
    let mut out = String::from(BER_HEADER);
    out.push('\n');
    for r in results {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.snr_db,
            r.w,
            r.trials,
            r.bit_errors,
            r.ber_sim,
            r.ci95_halfwidth,
            r.ber_theory_approx,
            r.ber_theory_exact,
            r.threshold_used,
            r.dof_convention,
            r.threshold_mode,
            r.seed
        );
    }
    out
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn emit_csv(results: &[BerResult], path: &Path) -> Result<()> {
    write_file(path, &format_csv(results))
}

/// Density table rows tagged with their sweep point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdfPoint {
    pub snr_db: f64,
    pub w: usize,
    pub row: PdfRow,
}

pub fn format_pdf_csv(rows: &[PdfPoint]) -> String {
    let mut out = String::from(PDF_HEADER);
    out.push('\n');
    for p in rows {
        let _ = writeln!(out, "{},{},{},{},{}", p.snr_db, p.w, p.row.x, p.row.f0, p.row.f1);
    }
    out
}

pub fn emit_pdf_csv(rows: &[PdfPoint], path: &Path) -> Result<()> {
    write_file(path, &format_pdf_csv(rows))
}

/// `results.csv` → `results.csv.meta`.
pub fn meta_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".meta");
    PathBuf::from(name)
}

pub fn emit_meta(path: &Path, text: &str) -> Result<()> {
    write_file(&meta_path(path), text)
}

fn field<T: std::str::FromStr>(line: usize, name: &str, cell: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    cell.parse().map_err(|e| Error::Parse {
        origin: format!("csv line {line}"),
        message: format!("{name} = `{cell}`: {e}"),
    })
}

/// Reads a table written by `format_csv`. `wall_ms` is not stored and reads as 0.
pub fn parse_csv(text: &str) -> Result<Vec<BerResult>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == BER_HEADER => {}
        other => {
            return Err(Error::Parse {
                origin: "csv line 1".into(),
                message: format!("unexpected header `{}`", other.map_or("", |(_, h)| h)),
            })
        }
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let no = i + 1;
        let c: Vec<&str> = line.split(',').collect();
        if c.len() != BER_COLUMNS {
            return Err(Error::Parse {
                origin: format!("csv line {no}"),
                message: format!("expected {BER_COLUMNS} columns, got {}", c.len()),
            });
        }
        out.push(BerResult {
            snr_db: field(no, "snr_db", c[0])?,
            w: field(no, "W", c[1])?,
            trials: field(no, "trials", c[2])?,
            bit_errors: field(no, "errors", c[3])?,
            ber_sim: field(no, "ber_sim", c[4])?,
            ci95_halfwidth: field(no, "ci95", c[5])?,
            ber_theory_approx: field(no, "ber_theory_approx", c[6])?,
            ber_theory_exact: field(no, "ber_theory_exact", c[7])?,
            threshold_used: field(no, "threshold", c[8])?,
            dof_convention: field(no, "dof_convention", c[9])?,
            threshold_mode: field(no, "threshold_mode", c[10])?,
            seed: field(no, "seed", c[11])?,
            wall_ms: 0,
        });
    }
    Ok(out)
}
