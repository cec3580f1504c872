//! Plot-ready tables. Nothing is drawn; any plotting tool can read these.
//!
//! - `regret_curve.csv`: mean cumulative expected regret per round, one
//!   column per policy, with a `change_point` marker column.
//! - `realized_regret_curve.csv`: the same for realized regret.
//! - `totals.csv`: mean total reward, cost and gain per policy.
//! - `action_histogram.csv`, `observation_histogram.csv`: how often each
//!   action and observation set was chosen in each segment.
//! - `accuracy.csv`: reward rate by number of observed features.

use std::collections::BTreeMap;
use std::path::Path;

use super::{accuracy_by_observations, cumulative, RunResult};
use crate::dataio::results::{csv_bytes, sha256_hex, write_file};
use crate::error::Result;

pub const REGRET_FILE: &str = "regret_curve.csv";
pub const REALIZED_REGRET_FILE: &str = "realized_regret_curve.csv";
pub const TOTALS_FILE: &str = "totals.csv";
pub const ACTION_HISTOGRAM_FILE: &str = "action_histogram.csv";
pub const OBSERVATION_HISTOGRAM_FILE: &str = "observation_histogram.csv";
pub const ACCURACY_FILE: &str = "accuracy.csv";

type CsvResult = std::result::Result<(), csv::Error>;

/// Segments `(start, end)` between consecutive change points.
pub fn segments(result: &RunResult) -> Vec<(u64, u64)> {
    let mut starts = vec![1];
    starts.extend(result.change_points());
    starts
        .iter()
        .enumerate()
        .map(|(k, &s)| (s, starts.get(k + 1).map_or(result.horizon, |&n| n - 1)))
        .collect()
}

/// Mean over repetitions of a cumulative per-round series.
fn mean_curve(result: &RunResult, label: &str, value: impl Fn(&super::RoundOutcome) -> f64) -> Vec<f64> {
    let mut sum = vec![0.0; result.horizon as usize];
    let mut n = 0.0;
    for run in result.runs_of(label) {
        for (s, c) in sum.iter_mut().zip(cumulative(run.outcomes.iter().map(&value))) {
            *s += c;
        }
        n += 1.0;
    }
    sum.iter().map(|s| s / n).collect()
}

fn write_curve(result: &RunResult, out: &mut Vec<u8>, value: fn(&super::RoundOutcome) -> f64) -> CsvResult {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string(), "change_point".to_string()];
    header.extend(result.policies.iter().cloned());
    w.write_record(&header)?;
    let curves: Vec<Vec<f64>> = result.policies.iter().map(|l| mean_curve(result, l, value)).collect();
    let cps = result.change_points();
    for t in 1..=result.horizon {
        let mut row = vec![t.to_string(), (cps.contains(&t) as u8).to_string()];
        row.extend(curves.iter().map(|c| c[t as usize - 1].to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_regret_curve(result: &RunResult, out: &mut Vec<u8>) -> CsvResult {
    write_curve(result, out, |o| o.expected_regret)
}

pub fn write_realized_regret_curve(result: &RunResult, out: &mut Vec<u8>) -> CsvResult {
    write_curve(result, out, |o| o.realized_regret)
}

pub fn write_totals(result: &RunResult, out: &mut Vec<u8>) -> CsvResult {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["policy", "total_reward", "total_cost", "total_gain", "final_cumulative_regret"])?;
    for label in &result.policies {
        if let Some(t) = result.mean_totals(label) {
            w.write_record([
                label.clone(),
                t.reward.to_string(),
                t.cost.to_string(),
                t.gain.to_string(),
                t.expected_regret.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Counts per repetition, policy, segment and choice; `choice` maps an
/// outcome to a bucket in `0..buckets`.
fn write_histogram(
    result: &RunResult,
    out: &mut Vec<u8>,
    column: &str,
    buckets: usize,
    choice: impl Fn(&super::RoundOutcome) -> usize,
) -> CsvResult {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["run", "policy", "segment", "start", "end", column, "count"])?;
    let segs = segments(result);
    for run in &result.policy_runs {
        for (k, &(start, end)) in segs.iter().enumerate() {
            let mut counts = vec![0u64; buckets];
            for o in &run.outcomes[(start - 1) as usize..end as usize] {
                counts[choice(o)] += 1;
            }
            for (b, c) in counts.iter().enumerate() {
                w.write_record([
                    run.run.to_string(),
                    run.label.clone(),
                    k.to_string(),
                    start.to_string(),
                    end.to_string(),
                    b.to_string(),
                    c.to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_action_histogram(result: &RunResult, out: &mut Vec<u8>) -> CsvResult {
    write_histogram(result, out, "action", result.action_count, |o| o.action)
}

pub fn write_observation_histogram(result: &RunResult, out: &mut Vec<u8>) -> CsvResult {
    write_histogram(result, out, "obs_set", 1 << result.feature_count, |o| {
        o.observation_set.bits() as usize
    })
}

/// Accuracy pooled over repetitions; empty when no round qualifies.
pub fn write_accuracy(result: &RunResult, out: &mut Vec<u8>) -> CsvResult {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["policy", "k", "accuracy"])?;
    for label in &result.policies {
        for k in 0..=result.feature_count {
            let acc = accuracy_by_observations(result.runs_of(label).flat_map(|r| &r.outcomes), k);
            w.write_record([label.clone(), k.to_string(), acc.map(|a| a.to_string()).unwrap_or_default()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes every plot table into `dir` and returns their hashes by name.
pub fn emit_plot_data(result: &RunResult, dir: &Path) -> Result<BTreeMap<String, String>> {
    let writers: [(&str, fn(&RunResult, &mut Vec<u8>) -> CsvResult); 6] = [
        (REGRET_FILE, write_regret_curve),
        (REALIZED_REGRET_FILE, write_realized_regret_curve),
        (TOTALS_FILE, write_totals),
        (ACTION_HISTOGRAM_FILE, write_action_histogram),
        (OBSERVATION_HISTOGRAM_FILE, write_observation_histogram),
        (ACCURACY_FILE, write_accuracy),
    ];
    let mut hashes = BTreeMap::new();
    for (name, write) in writers {
        let bytes = csv_bytes(&dir.join(name), |b| write(result, b))?;
        write_file(dir, name, &bytes)?;
        hashes.insert(name.to_string(), sha256_hex(&bytes));
    }
    Ok(hashes)
}
