//! File formats: efficiency CSV, block-model JSON and the region CSV.
//!
//! Reals are written with the shortest decimal representation that parses
//! back to the same `f64`, so every format round-trips bit-exactly.

use std::fmt::Write as _;
use std::path::Path;

use demguard_core::channels::{BlockModel, ComplexMatrix, EfficiencyCurve, EfficiencySample};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const EFFICIENCY_HEADER: [&str; 5] = ["t", "eta_z0", "eta_z1", "eta_x0", "eta_x1"];
pub const REGION_HEADER: [&str; 5] = [
    "qber",
    "eta_combined",
    "eta_improved",
    "eta_bound_general",
    "eta_bound_single_photon",
];

#[derive(Debug, Deserialize, Serialize)]
struct EfficiencyRow {
    t: f64,
    eta_z0: f64,
    eta_z1: f64,
    eta_x0: f64,
    eta_x1: f64,
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn csv_error(e: csv::Error) -> CliError {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    CliError::Parse { line, message: e.to_string() }
}

fn check_header(reader: &mut csv::Reader<&[u8]>, expected: &[&str]) -> Result<(), CliError> {
    let header = reader.headers().map_err(csv_error)?.clone();
    let got: Vec<&str> = header.iter().collect();
    if got != expected {
        return Err(CliError::Parse {
            line: header.position().map(|p| p.line()).unwrap_or(1),
            message: format!("expected header `{}`, found `{}`", expected.join(","), got.join(",")),
        });
    }
    Ok(())
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

pub fn parse_efficiency_csv(text: &str) -> Result<EfficiencyCurve, CliError> {
    let mut rdr = reader(text);
    check_header(&mut rdr, &EFFICIENCY_HEADER)?;
    let mut samples = Vec::new();
    for row in rdr.deserialize::<EfficiencyRow>() {
        let r = row.map_err(csv_error)?;
        samples.push(EfficiencySample {
            t: r.t,
            eta_z0: r.eta_z0,
            eta_z1: r.eta_z1,
            eta_x0: r.eta_x0,
            eta_x1: r.eta_x1,
        });
    }
    Ok(EfficiencyCurve::new(samples)?)
}

pub fn load_efficiency_csv(path: &Path) -> Result<EfficiencyCurve, CliError> {
    parse_efficiency_csv(&read_file(path)?)
}

pub fn render_efficiency_csv(curve: &EfficiencyCurve) -> String {
    let mut out = EFFICIENCY_HEADER.join(",");
    out.push('\n');
    for s in curve.samples() {
        let _ = writeln!(out, "{},{},{},{},{}", s.t, s.eta_z0, s.eta_z1, s.eta_x0, s.eta_x1);
    }
    out
}

#[derive(Debug, Deserialize, Serialize)]
struct BlockModelDoc {
    n: usize,
    c0: Vec<Vec<[f64; 2]>>,
    c1: Vec<Vec<[f64; 2]>>,
}

fn to_matrix(name: &str, n: usize, rows: &[Vec<[f64; 2]>]) -> Result<ComplexMatrix, CliError> {
    if rows.len() != n {
        return Err(CliError::Usage(format!("{name} has {} rows, expected n = {n}", rows.len())));
    }
    if let Some(i) = rows.iter().position(|r| r.len() != n) {
        return Err(CliError::Usage(format!(
            "{name} row {i} has {} entries, expected n = {n}",
            rows[i].len()
        )));
    }
    let rows: Vec<Vec<Complex64>> = rows
        .iter()
        .map(|r| r.iter().map(|&[re, im]| Complex64::new(re, im)).collect())
        .collect();
    Ok(ComplexMatrix::from_rows(&rows)?)
}

pub fn parse_block_model(text: &str) -> Result<BlockModel, CliError> {
    let doc: BlockModelDoc = serde_json::from_str(text).map_err(|e| CliError::Parse {
        line: e.line() as u64,
        message: e.to_string(),
    })?;
    if doc.n == 0 {
        return Err(CliError::Usage("block model needs n >= 1".into()));
    }
    let c0 = to_matrix("c0", doc.n, &doc.c0)?;
    let c1 = to_matrix("c1", doc.n, &doc.c1)?;
    Ok(BlockModel::new(c0, c1)?)
}

pub fn load_block_model(path: &Path) -> Result<BlockModel, CliError> {
    parse_block_model(&read_file(path)?)
}

pub fn render_block_model(model: &BlockModel) -> String {
    let rows = |m: &ComplexMatrix| -> Vec<Vec<[f64; 2]>> {
        (0..m.rows())
            .map(|i| m.row(i).iter().map(|z| [z.re, z.im]).collect())
            .collect()
    };
    let doc = BlockModelDoc {
        n: model.dim(),
        c0: rows(&model.c0),
        c1: rows(&model.c1),
    };
    serde_json::to_string_pretty(&doc).expect("plain data serializes")
}

/// One QBER grid point of the region CSV; `None` marks "no boundary in (0, 1]".
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionRow {
    pub qber: f64,
    pub eta_combined: Option<f64>,
    pub eta_improved: Option<f64>,
    pub eta_bound_general: Option<f64>,
    pub eta_bound_single_photon: Option<f64>,
}

fn field(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn render_region_csv(rows: &[RegionRow]) -> String {
    let mut out = REGION_HEADER.join(",");
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.qber,
            field(r.eta_combined),
            field(r.eta_improved),
            field(r.eta_bound_general),
            field(r.eta_bound_single_photon)
        );
    }
    out
}

pub fn parse_region_csv(text: &str) -> Result<Vec<RegionRow>, CliError> {
    let mut rdr = reader(text);
    check_header(&mut rdr, &REGION_HEADER)?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let num = |i: usize| -> Result<Option<f64>, CliError> {
            let s = rec.get(i).unwrap_or("");
            if s.is_empty() {
                return Ok(None);
            }
            s.parse().map(Some).map_err(|_| CliError::Parse {
                line,
                message: format!("bad number `{s}`"),
            })
        };
        rows.push(RegionRow {
            qber: num(0)?.ok_or_else(|| CliError::Parse {
                line,
                message: "missing qber".into(),
            })?,
            eta_combined: num(1)?,
            eta_improved: num(2)?,
            eta_bound_general: num(3)?,
            eta_bound_single_photon: num(4)?,
        });
    }
    Ok(rows)
}
