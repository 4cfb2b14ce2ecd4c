//! CSV input and output.
//!
//! Every reader takes the whole file as text, expects a header row, skips
//! lines starting with `#` and reports failures as [`Error::Parse`] with a
//! 1-based line number.

use std::io::Write;

use crate::density::{DensityEstimate, SurvivalCurve};
use crate::error::{Error, Result};
use crate::lung::{LungRecord, ResidualModel};
use crate::sample::WeightedSample;

/// Columns read from a sample file with header `x[,delta][,w]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleCsv {
    pub x: Vec<f64>,
    pub delta: Option<Vec<bool>>,
    pub w: Option<Vec<f64>>,
}

impl SampleCsv {
    /// Missing weights become `1/n`, missing indicators mean every point is
    /// an event.
    pub fn into_sample(self) -> Result<WeightedSample> {
        let n = self.x.len();
        if n == 0 {
            return Err(Error::EmptySample);
        }
        let w = self.w.unwrap_or_else(|| vec![1.0 / n as f64; n]);
        match self.delta {
            Some(d) => WeightedSample::with_censoring(self.x, w, d),
            None => WeightedSample::new(self.x, w),
        }
    }
}

struct Table {
    columns: Vec<String>,
    /// (line number, fields)
    rows: Vec<(usize, Vec<String>)>,
}

impl Table {
    fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    fn require(&self, name: &str) -> Result<usize> {
        self.column(name)
            .ok_or_else(|| parse_err(1, format!("missing required column `{name}`")))
    }

    fn only_known(&self, known: &[&str]) -> Result<()> {
        match self.columns.iter().find(|c| !known.contains(&c.as_str())) {
            Some(c) => Err(parse_err(1, format!("unknown column `{c}`"))),
            None => Ok(()),
        }
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn read_table(text: &str) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header_line = |e: &csv::Error| e.position().map_or(1, |p| p.line() as usize);
    let columns: Vec<String> = rdr
        .headers()
        .map_err(|e| parse_err(header_line(&e), e.to_string()))?
        .iter()
        .map(|c| c.to_ascii_lowercase())
        .collect();
    if columns.iter().all(|c| c.is_empty()) {
        return Err(parse_err(1, "missing header row"));
    }
    for (k, c) in columns.iter().enumerate() {
        if columns[..k].contains(c) {
            return Err(parse_err(1, format!("duplicate column `{c}`")));
        }
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| parse_err(header_line(&e), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        rows.push((line, rec.iter().map(str::to_string).collect()));
    }
    Ok(Table { columns, rows })
}

fn parse_real(line: usize, column: &str, field: &str) -> Result<f64> {
    let v: f64 = field
        .parse()
        .map_err(|_| parse_err(line, format!("column `{column}`: `{field}` is not a number")))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("column `{column}`: value must be finite")));
    }
    Ok(v)
}

fn parse_flag(line: usize, column: &str, field: &str) -> Result<bool> {
    match field {
        "1" => Ok(true),
        "0" => Ok(false),
        _ => Err(parse_err(line, format!("column `{column}`: expected 0 or 1, got `{field}`"))),
    }
}

pub fn parse_sample_csv(text: &str) -> Result<SampleCsv> {
    let t = read_table(text)?;
    t.only_known(&["x", "delta", "w"])?;
    let xi = t.require("x")?;
    let di = t.column("delta");
    let wi = t.column("w");
    let mut x = Vec::with_capacity(t.rows.len());
    let mut delta = di.map(|_| Vec::with_capacity(t.rows.len()));
    let mut w = wi.map(|_| Vec::with_capacity(t.rows.len()));
    for (line, row) in &t.rows {
        x.push(parse_real(*line, "x", &row[xi])?);
        if let (Some(k), Some(d)) = (di, delta.as_mut()) {
            d.push(parse_flag(*line, "delta", &row[k])?);
        }
        if let (Some(k), Some(ws)) = (wi, w.as_mut()) {
            let v = parse_real(*line, "w", &row[k])?;
            if v < 0.0 {
                return Err(parse_err(*line, "column `w`: weights must be non-negative"));
            }
            ws.push(v);
        }
    }
    if x.is_empty() {
        return Err(parse_err(1, "no data rows"));
    }
    Ok(SampleCsv { x, delta, w })
}

/// Either a `r_hat` column with one residual per censored observation (in
/// increasing order of the censored times), or one row of `beta0,beta1`.
pub fn parse_residual_model(text: &str) -> Result<ResidualModel> {
    let t = read_table(text)?;
    if let Some(k) = t.column("r_hat") {
        t.only_known(&["r_hat"])?;
        let mut r = Vec::with_capacity(t.rows.len());
        for (line, row) in &t.rows {
            let v = parse_real(*line, "r_hat", &row[k])?;
            if v < 0.0 {
                return Err(parse_err(*line, "column `r_hat`: residuals must be non-negative"));
            }
            r.push(v);
        }
        return Ok(ResidualModel::PerPoint(r));
    }
    t.only_known(&["beta0", "beta1"])?;
    let b0 = t.require("beta0")?;
    let b1 = t.require("beta1")?;
    match t.rows.as_slice() {
        [(line, row)] => Ok(ResidualModel::Linear {
            beta0: parse_real(*line, "beta0", &row[b0])?,
            beta1: parse_real(*line, "beta1", &row[b1])?,
        }),
        [] => Err(parse_err(1, "no data rows")),
        [_, (line, _), ..] => Err(parse_err(*line, "expected a single row of coefficients")),
    }
}

/// Header `time,delta[,ultimate][,outlier]`. `ultimate` is the later
/// observed death time of a censored patient and may be empty.
pub fn parse_lung_csv(text: &str) -> Result<Vec<LungRecord>> {
    let t = read_table(text)?;
    t.only_known(&["time", "delta", "ultimate", "outlier"])?;
    let ti = t.require("time")?;
    let di = t.require("delta")?;
    let ui = t.column("ultimate");
    let oi = t.column("outlier");
    let mut out = Vec::with_capacity(t.rows.len());
    for (line, row) in &t.rows {
        let time = parse_real(*line, "time", &row[ti])?;
        if time < 0.0 {
            return Err(parse_err(*line, "column `time`: times must be non-negative"));
        }
        let delta = parse_flag(*line, "delta", &row[di])?;
        let ultimate = match ui.map(|k| row[k].as_str()) {
            None | Some("") => None,
            Some(f) => {
                let u = parse_real(*line, "ultimate", f)?;
                if delta {
                    return Err(parse_err(*line, "an observed death cannot have an ultimate time"));
                }
                if u < time {
                    return Err(parse_err(*line, "ultimate time precedes the censoring time"));
                }
                Some(u)
            }
        };
        let outlier = match oi.map(|k| row[k].as_str()) {
            None | Some("") => false,
            Some(f) => parse_flag(*line, "outlier", f)?,
        };
        out.push(LungRecord { time, delta, ultimate, outlier });
    }
    if out.is_empty() {
        return Err(parse_err(1, "no data rows"));
    }
    Ok(out)
}

/// Writes `grid,f` or `grid,f,S` rows.
pub fn write_density_csv<W: Write>(
    mut out: W,
    est: &DensityEstimate,
    survival: Option<&SurvivalCurve>,
) -> std::io::Result<()> {
    match survival {
        Some(s) => {
            writeln!(out, "grid,f,S")?;
            for ((g, f), sv) in est.grid.iter().zip(&est.f).zip(&s.s) {
                writeln!(out, "{g},{f},{sv}")?;
            }
        }
        None => {
            writeln!(out, "grid,f")?;
            for (g, f) in est.grid.iter().zip(&est.f) {
                writeln!(out, "{g},{f}")?;
            }
        }
    }
    out.flush()
}
