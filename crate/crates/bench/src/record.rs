//! The flat CSV row shared by both applications, and the seed average.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use crate::error::{BenchError, Result};

pub const COLUMNS: [&str; 17] = [
    "run_id",
    "method",
    "N",
    "seed",
    "k",
    "time_s",
    "mu_k",
    "delta_k",
    "outer_samples",
    "inner_samples",
    "dist_sq",
    "objective",
    "accuracy",
    "loss",
    "inner_iters",
    "certificate",
    "flag",
];

/// Flag value for an iterate whose inner solve missed its target.
pub const INNER_FAILURE: &str = "inner_failure";

/// One logged iterate. Counters are stored as `f64` so that a seed-averaged
/// row has the same shape as a per-seed one; `seed` is empty on averaged rows.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    pub run_id: String,
    pub method: String,
    pub batch_size: usize,
    pub seed: Option<u64>,
    pub k: usize,
    pub time_s: f64,
    pub mu_k: Option<f64>,
    pub delta_k: Option<f64>,
    pub outer_samples: f64,
    pub inner_samples: f64,
    pub dist_sq: Option<f64>,
    pub objective: Option<f64>,
    pub accuracy: Option<f64>,
    pub loss: Option<f64>,
    pub inner_iters: Option<f64>,
    pub certificate: Option<f64>,
    pub flag: String,
}

/// Shortest decimal form that parses back to the same bits, switching to
/// exponent notation for very large or very small magnitudes.
pub fn format_f64(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) || !a.is_finite() {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(format_f64).unwrap_or_default()
}

impl RunRow {
    fn fields(&self) -> [String; 17] {
        [
            self.run_id.clone(),
            self.method.clone(),
            self.batch_size.to_string(),
            self.seed.map(|s| s.to_string()).unwrap_or_default(),
            self.k.to_string(),
            format_f64(self.time_s),
            opt(self.mu_k),
            opt(self.delta_k),
            format_f64(self.outer_samples),
            format_f64(self.inner_samples),
            opt(self.dist_sq),
            opt(self.objective),
            opt(self.accuracy),
            opt(self.loss),
            opt(self.inner_iters),
            opt(self.certificate),
            self.flag.clone(),
        ]
    }
}

pub fn write_rows(out: impl Write, rows: &[RunRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COLUMNS)?;
    for r in rows {
        w.write_record(r.fields())?;
    }
    w.flush()?;
    Ok(())
}

fn parse_field<T: std::str::FromStr>(raw: &str, column: &str, row: usize) -> Result<T> {
    raw.parse().map_err(|_| BenchError::Row {
        row,
        message: format!("bad {column} value `{raw}`"),
    })
}

fn parse_opt<T: std::str::FromStr>(raw: &str, column: &str, row: usize) -> Result<Option<T>> {
    if raw.is_empty() {
        Ok(None)
    } else {
        parse_field(raw, column, row).map(Some)
    }
}

/// Reads rows written by [`write_rows`]. Columns are located by header name,
/// so their order may differ; every schema column must be present.
pub fn read_rows(input: impl Read) -> Result<Vec<RunRow>> {
    let mut reader = csv::Reader::from_reader(input);
    let headers = reader.headers()?.clone();
    let mut index = [0usize; 17];
    for (slot, name) in index.iter_mut().zip(COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| BenchError::MissingColumn(name.to_string()))?;
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = i + 1;
        let f = |c: usize| record.get(index[c]).unwrap_or("");
        rows.push(RunRow {
            run_id: f(0).to_string(),
            method: f(1).to_string(),
            batch_size: parse_field(f(2), COLUMNS[2], row)?,
            seed: parse_opt(f(3), COLUMNS[3], row)?,
            k: parse_field(f(4), COLUMNS[4], row)?,
            time_s: parse_field(f(5), COLUMNS[5], row)?,
            mu_k: parse_opt(f(6), COLUMNS[6], row)?,
            delta_k: parse_opt(f(7), COLUMNS[7], row)?,
            outer_samples: parse_field(f(8), COLUMNS[8], row)?,
            inner_samples: parse_field(f(9), COLUMNS[9], row)?,
            dist_sq: parse_opt(f(10), COLUMNS[10], row)?,
            objective: parse_opt(f(11), COLUMNS[11], row)?,
            accuracy: parse_opt(f(12), COLUMNS[12], row)?,
            loss: parse_opt(f(13), COLUMNS[13], row)?,
            inner_iters: parse_opt(f(14), COLUMNS[14], row)?,
            certificate: parse_opt(f(15), COLUMNS[15], row)?,
            flag: f(16).to_string(),
        });
    }
    Ok(rows)
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn mean_opt(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Option<Vec<f64>> = values.collect();
    v.filter(|v| !v.is_empty()).map(|v| mean(&v))
}

/// Seed average of the rows of one `(method, N)` cell.
///
/// Only iteration indices logged by every seed are kept. An optional metric
/// is averaged when every seed has it and left empty otherwise; the flag is
/// set when any seed flagged that iteration.
pub fn seed_average(run_id: &str, rows: &[RunRow]) -> Vec<RunRow> {
    let Some(first) = rows.first() else { return Vec::new() };
    let mut by_seed: BTreeMap<Option<u64>, BTreeMap<usize, &RunRow>> = BTreeMap::new();
    for r in rows {
        by_seed.entry(r.seed).or_default().insert(r.k, r);
    }
    let seeds: Vec<_> = by_seed.values().collect();
    let common = seeds[0].keys().filter(|k| seeds.iter().all(|s| s.contains_key(k)));
    common
        .map(|&k| {
            let at: Vec<&RunRow> = seeds.iter().map(|s| s[&k]).collect();
            let pick = |f: fn(&RunRow) -> Option<f64>| mean_opt(at.iter().map(|r| f(r)));
            let plain = |f: fn(&RunRow) -> f64| mean(&at.iter().map(|r| f(r)).collect::<Vec<_>>());
            RunRow {
                run_id: run_id.to_string(),
                method: first.method.clone(),
                batch_size: first.batch_size,
                seed: None,
                k,
                time_s: plain(|r| r.time_s),
                mu_k: pick(|r| r.mu_k),
                delta_k: pick(|r| r.delta_k),
                outer_samples: plain(|r| r.outer_samples),
                inner_samples: plain(|r| r.inner_samples),
                dist_sq: pick(|r| r.dist_sq),
                objective: pick(|r| r.objective),
                accuracy: pick(|r| r.accuracy),
                loss: pick(|r| r.loss),
                inner_iters: pick(|r| r.inner_iters),
                certificate: pick(|r| r.certificate),
                flag: if at.iter().any(|r| !r.flag.is_empty()) {
                    INNER_FAILURE.to_string()
                } else {
                    String::new()
                },
            }
        })
        .collect()
}
