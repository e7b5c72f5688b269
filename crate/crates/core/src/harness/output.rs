//! Result files: the per-row CSV, a JSON-lines precoder sidecar and a run
//! manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::run::{ExperimentOutput, TrialRecord};
use crate::error::{invalid, Result};
use crate::rates::PrecoderSet;
use crate::streams::StreamId;

pub const CSV_HEADER: [&str; 13] = ["config_hash", "seed", "scheme", "P_dB", "sigma2", "metric", "utility", "rates_user", "rates_stream", "streams", "iters", "ms", "status"];

/// One CSV row as text fields.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub config_hash: String,
    pub seed: u64,
    pub scheme: String,
    #[serde(rename = "P_dB")]
    pub p_db: f64,
    pub sigma2: f64,
    pub metric: String,
    pub utility: f64,
    pub rates_user: String,
    pub rates_stream: String,
    pub streams: String,
    pub iters: usize,
    pub ms: u64,
    pub status: String,
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

/// Splits a semicolon list of numbers; the empty string is the empty list.
pub fn parse_numbers(field: &str) -> Result<Vec<f64>> {
    if field.is_empty() {
        return Ok(Vec::new());
    }
    field.split(';').map(|t| t.trim().parse::<f64>().map_err(|_| invalid(format!("bad number `{t}`")))).collect()
}

pub fn parse_streams(field: &str) -> Result<Vec<StreamId>> {
    if field.is_empty() {
        return Ok(Vec::new());
    }
    field.split(';').map(str::parse).collect()
}

impl From<&TrialRecord> for CsvRow {
    fn from(r: &TrialRecord) -> Self {
        Self {
            config_hash: r.config_hash.clone(),
            seed: r.seed,
            scheme: r.scheme.to_string(),
            p_db: r.p_db,
            sigma2: r.sigma2,
            metric: r.metric.to_string(),
            utility: r.utility,
            rates_user: join(&r.rates_user),
            rates_stream: join(&r.rates_stream),
            streams: join(&r.streams),
            iters: r.iters,
            ms: r.ms,
            status: r.status.to_string(),
        }
    }
}

pub fn write_csv<W: std::io::Write>(records: &[TrialRecord], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.serialize(CsvRow::from(r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<CsvRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(invalid(format!("unexpected CSV header {header:?}")));
    }
    Ok(r.deserialize().collect::<std::result::Result<Vec<CsvRow>, _>>()?)
}

/// Precoders behind one row; `order` lists each user's decoding sequence
/// and is absent under joint decoding.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PrecoderLine {
    pub trial: usize,
    pub seed: u64,
    pub scheme: String,
    #[serde(rename = "P_dB")]
    pub p_db: f64,
    pub sigma2: f64,
    pub order: Option<Vec<Vec<String>>>,
    pub precoders: PrecoderSet,
}

#[derive(Clone, Debug, Serialize)]
struct Manifest<'a> {
    name: &'a str,
    config_hash: &'a str,
    version: &'a str,
    config: &'a super::config::ExperimentConfig,
    rows: usize,
    ok_rows: usize,
    elapsed_s: f64,
    summary: &'a [super::run::SummaryRow],
}

#[derive(Clone, Debug)]
pub struct OutputPaths {
    pub csv: PathBuf,
    pub precoders: PathBuf,
    pub manifest: PathBuf,
}

/// Writes `{name}.csv`, `{name}.precoders.jsonl` and `{name}.manifest.json`
/// into `dir`, creating it if needed.
pub fn write_outputs(output: &ExperimentOutput, dir: &Path) -> Result<OutputPaths> {
    fs::create_dir_all(dir)?;
    let name = &output.config.name;
    let paths = OutputPaths {
        csv: dir.join(format!("{name}.csv")),
        precoders: dir.join(format!("{name}.precoders.jsonl")),
        manifest: dir.join(format!("{name}.manifest.json")),
    };
    write_csv(&output.records, fs::File::create(&paths.csv)?)?;

    let mut lines = String::new();
    for r in &output.records {
        let Some(q) = &r.precoders else { continue };
        let order = match &r.mode {
            Some(crate::rates::DecodingMode::Successive(o)) => Some((0..o.users()).map(|k| o.of(k).iter().map(|s| s.to_string()).collect()).collect()),
            _ => None,
        };
        let line = PrecoderLine { trial: r.trial, seed: r.seed, scheme: r.scheme.to_string(), p_db: r.p_db, sigma2: r.sigma2, order, precoders: q.clone() };
        lines.push_str(&serde_json::to_string(&line)?);
        lines.push('\n');
    }
    fs::write(&paths.precoders, lines)?;

    let manifest = Manifest {
        name,
        config_hash: &output.config_hash,
        version: env!("CARGO_PKG_VERSION"),
        config: &output.config,
        rows: output.records.len(),
        ok_rows: output.records.iter().filter(|r| r.status == super::run::RowStatus::Ok).count(),
        elapsed_s: output.elapsed.as_secs_f64(),
        summary: &output.summary,
    };
    fs::write(&paths.manifest, serde_json::to_string_pretty(&manifest)?)?;
    Ok(paths)
}
