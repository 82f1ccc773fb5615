use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::Result;

/// A record type with a fixed CSV header.
pub trait CsvRow: Serialize + DeserializeOwned {
    const HEADER: &'static [&'static str];
}

/// One point of a training reward curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub step: u64,
    pub window_avg_reward: f64,
    pub agent: String,
    pub seed: u64,
}

impl CsvRow for ConvergenceRow {
    const HEADER: &'static [&'static str] = &["step", "window_avg_reward", "agent", "seed"];
}

/// One aggregated sweep cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub param: String,
    pub value: f64,
    pub agent: String,
    pub metric: String,
    pub mean: f64,
    pub stddev: f64,
    pub n_seeds: usize,
}

impl CsvRow for SweepRow {
    const HEADER: &'static [&'static str] =
        &["param", "value", "agent", "metric", "mean", "stddev", "n_seeds"];
}

/// Evaluation metrics of one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub agent: String,
    pub seed: u64,
    pub slots: u64,
    pub arrived: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub throughput: f64,
    pub packet_loss_rate: f64,
    pub pdr: f64,
}

impl CsvRow for EvalRow {
    const HEADER: &'static [&'static str] = &[
        "agent",
        "seed",
        "slots",
        "arrived",
        "delivered",
        "dropped",
        "throughput",
        "packet_loss_rate",
        "pdr",
    ];
}

/// Writes the header and then every row. Floats are written in shortest
/// round-trip form, so reading the file back reproduces the rows exactly.
pub fn emit_csv<R: CsvRow>(rows: &[R], path: &Path) -> Result<()> {
    let mut w = ::csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(BufWriter::new(File::create(path)?));
    w.write_record(R::HEADER)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: CsvRow>(path: &Path) -> Result<Vec<R>> {
    let mut r = ::csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != R::HEADER {
        return Err(super::HarnessError::Domain(format!(
            "unexpected CSV header {header:?}"
        )));
    }
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}
