//! Result files: per-round and summary CSVs and the run manifest.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so
//! reading a file back gives exactly the values that were written.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const ROUNDS_FILE: &str = "rounds.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Version recorded in manifests.
pub const VERSION: &str = concat!("v", env!("CARGO_PKG_VERSION"));

pub const ROUND_COLUMNS: [&str; 11] = [
    "run",
    "t",
    "policy",
    "action",
    "obs_set",
    "reward",
    "cost_paid",
    "gain",
    "expected_regret",
    "realized_regret",
    "cumulative_expected_regret",
];

/// One line of `rounds.csv`.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundRow {
    pub run: u64,
    pub t: u64,
    pub policy: String,
    pub action: usize,
    /// Observation set as a bit mask.
    pub obs_set: u32,
    pub reward: f64,
    pub cost_paid: f64,
    pub gain: f64,
    pub expected_regret: f64,
    pub realized_regret: f64,
    pub cumulative_expected_regret: f64,
}

/// One line of `summary.csv`.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub policy: String,
    pub run: u64,
    pub total_reward: f64,
    pub total_cost: f64,
    pub total_gain: f64,
    pub final_cumulative_regret: f64,
    /// `accuracy_at_k` for `k = 0..=D`; `None` when no round qualifies.
    pub accuracy: Vec<Option<f64>>,
}

pub fn summary_columns(feature_count: usize) -> Vec<String> {
    let mut cols: Vec<String> = [
        "policy",
        "run",
        "total_reward",
        "total_cost",
        "total_gain",
        "final_cumulative_regret",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    cols.extend((0..=feature_count).map(|k| format!("accuracy_at_{k}")));
    cols
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn write_rounds_csv(rows: &[RoundRow], out: impl Write) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ROUND_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.run.to_string(),
            r.t.to_string(),
            r.policy.clone(),
            r.action.to_string(),
            r.obs_set.to_string(),
            r.reward.to_string(),
            r.cost_paid.to_string(),
            r.gain.to_string(),
            r.expected_regret.to_string(),
            r.realized_regret.to_string(),
            r.cumulative_expected_regret.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary_csv(
    rows: &[SummaryRow],
    feature_count: usize,
    out: impl Write,
) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(summary_columns(feature_count))?;
    for r in rows {
        let mut record = vec![
            r.policy.clone(),
            r.run.to_string(),
            r.total_reward.to_string(),
            r.total_cost.to_string(),
            r.total_gain.to_string(),
            r.final_cumulative_regret.to_string(),
        ];
        for k in 0..=feature_count {
            record.push(r.accuracy.get(k).copied().flatten().map(|a| a.to_string()).unwrap_or_default());
        }
        w.write_record(record)?;
    }
    w.flush()?;
    Ok(())
}

fn field<T: std::str::FromStr>(record: &csv::StringRecord, i: usize, line: usize) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    let raw = record.get(i).ok_or_else(|| Error::Parse {
        line,
        message: format!("missing column {i}"),
    })?;
    raw.parse().map_err(|e| Error::Parse {
        line,
        message: format!("column {i} `{raw}`: {e}"),
    })
}

fn check_header(rdr: &mut csv::Reader<impl std::io::Read>, expected: &[String]) -> Result<()> {
    let header = rdr.headers().map_err(|e| Error::Parse {
        line: 1,
        message: e.to_string(),
    })?;
    if header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(Error::Parse {
            line: 1,
            message: format!("unexpected header {:?}", header.iter().collect::<Vec<_>>()),
        });
    }
    Ok(())
}

pub fn read_rounds_csv(input: impl std::io::Read) -> Result<Vec<RoundRow>> {
    let mut rdr = csv::Reader::from_reader(input);
    check_header(&mut rdr, &ROUND_COLUMNS.map(String::from))?;
    let mut rows = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let line = k + 2;
        let rec = rec.map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        rows.push(RoundRow {
            run: field(&rec, 0, line)?,
            t: field(&rec, 1, line)?,
            policy: field(&rec, 2, line)?,
            action: field(&rec, 3, line)?,
            obs_set: field(&rec, 4, line)?,
            reward: field(&rec, 5, line)?,
            cost_paid: field(&rec, 6, line)?,
            gain: field(&rec, 7, line)?,
            expected_regret: field(&rec, 8, line)?,
            realized_regret: field(&rec, 9, line)?,
            cumulative_expected_regret: field(&rec, 10, line)?,
        });
    }
    Ok(rows)
}

pub fn read_summary_csv(input: impl std::io::Read, feature_count: usize) -> Result<Vec<SummaryRow>> {
    let mut rdr = csv::Reader::from_reader(input);
    check_header(&mut rdr, &summary_columns(feature_count))?;
    let mut rows = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let line = k + 2;
        let rec = rec.map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        let accuracy = (0..=feature_count)
            .map(|j| match rec.get(6 + j) {
                Some("") | None => Ok(None),
                Some(_) => field(&rec, 6 + j, line).map(Some),
            })
            .collect::<Result<_>>()?;
        rows.push(SummaryRow {
            policy: field(&rec, 0, line)?,
            run: field(&rec, 1, line)?,
            total_reward: field(&rec, 2, line)?,
            total_cost: field(&rec, 3, line)?,
            total_gain: field(&rec, 4, line)?,
            final_cumulative_regret: field(&rec, 5, line)?,
            accuracy,
        });
    }
    Ok(rows)
}

/// What produced a result directory.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub config_sha256: String,
    /// Hash of the dataset file, when one was read.
    pub dataset_sha256: Option<String>,
    pub seed: u64,
    pub runs: u64,
    pub horizon: u64,
    pub policies: Vec<String>,
    /// Hash of the random draws of each repetition; every policy in a
    /// repetition saw exactly these draws.
    pub tape_sha256: Vec<String>,
    /// Hash of every other file written, by file name.
    pub files: std::collections::BTreeMap<String, String>,
}

impl Manifest {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })
    }
}

/// Writes `bytes` to `dir/name`, creating `dir` if needed.
pub fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

pub(crate) fn csv_bytes(
    path: &Path,
    write: impl FnOnce(&mut Vec<u8>) -> std::result::Result<(), csv::Error>,
) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write(&mut buf).map_err(|e| Error::csv(path, e))?;
    Ok(buf)
}

/// Writes `rounds.csv`, `summary.csv` and `manifest.json` into `dir`. The
/// manifest's file hashes are filled in here.
pub fn write_results(
    dir: &Path,
    rounds: &[RoundRow],
    summary: &[SummaryRow],
    feature_count: usize,
    mut manifest: Manifest,
) -> Result<Manifest> {
    let rounds_bytes = csv_bytes(&dir.join(ROUNDS_FILE), |b| write_rounds_csv(rounds, b))?;
    let summary_bytes = csv_bytes(&dir.join(SUMMARY_FILE), |b| write_summary_csv(summary, feature_count, b))?;
    write_file(dir, ROUNDS_FILE, &rounds_bytes)?;
    write_file(dir, SUMMARY_FILE, &summary_bytes)?;
    manifest.files.insert(ROUNDS_FILE.into(), sha256_hex(&rounds_bytes));
    manifest.files.insert(SUMMARY_FILE.into(), sha256_hex(&summary_bytes));
    write_file(dir, MANIFEST_FILE, manifest.to_json().as_bytes())?;
    Ok(manifest)
}
