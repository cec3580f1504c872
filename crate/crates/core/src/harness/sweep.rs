//! Grid search over the parameters of one policy.
//!
//! A grid file names the policy and lists values per parameter:
//!
//! ```toml
//! policy = "ncc_ucrl2"          # a configured label or a policy kind
//! environment = "validation"    # or "experiment"
//!
//! [parameters]
//! window = [100, 250, 500, 1000, 1750]
//! delta = [0.04]
//! ```
//!
//! Every combination runs with the configured repetitions and seed, and
//! the one with the highest mean total gain is flagged.

use std::collections::BTreeMap;
use std::path::Path;

use toml::{Table, Value};

use super::{resolve_environment, resolve_validation_environment, run_policies, RunResult};
use crate::dataio::config::{override_policy, ConfigIssue, ExperimentConfig};
use crate::dataio::results::{csv_bytes, sha256_hex, write_file, Manifest, MANIFEST_FILE};
use crate::error::{Error, Result};
use crate::policies::{PolicyKind, PolicySpec};

pub const SWEEP_FILE: &str = "sweep.csv";
pub const SWEEP_RUNS_FILE: &str = "sweep_runs.csv";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepEnvironment {
    /// Held-out rows for dataset presets, the configured environment
    /// otherwise.
    Validation,
    Experiment,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    /// Label or kind of the policy being tuned.
    pub policy: String,
    pub environment: SweepEnvironment,
    /// Parameter name and candidate values, in name order.
    pub parameters: Vec<(String, Vec<Value>)>,
}

impl Grid {
    /// Every combination, the last parameter varying fastest.
    pub fn combinations(&self) -> Vec<Vec<(String, Value)>> {
        let mut combos = vec![Vec::new()];
        for (name, values) in &self.parameters {
            combos = combos
                .into_iter()
                .flat_map(|c| {
                    values.iter().map(move |v| {
                        let mut c = c.clone();
                        c.push((name.clone(), v.clone()));
                        c
                    })
                })
                .collect();
        }
        combos
    }
}

pub fn parse_grid(text: &str) -> Result<Grid> {
    let table: Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::Validation(vec![ConfigIssue::new("grid", e.message().to_string())]))?;
    let mut issues = Vec::new();
    for key in table.keys() {
        if !["policy", "environment", "parameters"].contains(&key.as_str()) {
            issues.push(ConfigIssue::new(key.clone(), "unknown key; expected policy, environment, parameters"));
        }
    }
    let policy = match table.get("policy") {
        None => PolicyKind::NccUcrl2.name().to_string(),
        Some(Value::String(s)) => s.clone(),
        Some(_) => {
            issues.push(ConfigIssue::new("policy", "expected a string"));
            String::new()
        }
    };
    let environment = match table.get("environment").map(Value::as_str) {
        None | Some(Some("validation")) => SweepEnvironment::Validation,
        Some(Some("experiment")) => SweepEnvironment::Experiment,
        Some(_) => {
            issues.push(ConfigIssue::new("environment", "expected \"validation\" or \"experiment\""));
            SweepEnvironment::Validation
        }
    };
    let mut parameters = Vec::new();
    match table.get("parameters") {
        None => {}
        Some(Value::Table(t)) => {
            for (name, values) in t {
                match values {
                    Value::Array(a) if !a.is_empty() => parameters.push((name.clone(), a.clone())),
                    _ => issues.push(ConfigIssue::new(format!("parameters.{name}"), "expected a non-empty list")),
                }
            }
        }
        Some(_) => issues.push(ConfigIssue::new("parameters", "expected a section")),
    }
    if issues.is_empty() {
        Ok(Grid {
            policy,
            environment,
            parameters,
        })
    } else {
        Err(Error::Validation(issues))
    }
}

/// One combination's outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub label: String,
    pub parameters: Vec<(String, String)>,
    pub mean_total_gain: f64,
    pub mean_final_cumulative_regret: f64,
    pub best: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub result: RunResult,
}

fn combination_label(combo: &[(String, Value)]) -> String {
    if combo.is_empty() {
        return "default".into();
    }
    combo.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(",")
}

/// Policy specs for every grid combination.
pub fn grid_policies(cfg: &ExperimentConfig, grid: &Grid) -> Result<Vec<(PolicySpec, Vec<(String, Value)>)>> {
    let base = match cfg.policies.iter().find(|p| p.label == grid.policy) {
        Some(p) => p.clone(),
        None => PolicyKind::from_name(&grid.policy)
            .map(PolicySpec::default_for)
            .ok_or_else(|| {
                Error::Validation(vec![ConfigIssue::new(
                    "policy",
                    format!("`{}` is neither a configured policy nor a policy kind", grid.policy),
                )])
            })?,
    };
    grid.combinations()
        .into_iter()
        .map(|combo| {
            let overrides: Table = combo.iter().cloned().collect();
            Ok((override_policy(&base, combination_label(&combo), &overrides)?, combo))
        })
        .collect()
}

pub fn sweep(cfg: &ExperimentConfig, grid: &Grid) -> Result<SweepResult> {
    let specs = grid_policies(cfg, grid)?;
    let env = match grid.environment {
        SweepEnvironment::Validation => resolve_validation_environment(cfg)?,
        SweepEnvironment::Experiment => resolve_environment(cfg)?,
    };
    let policies: Vec<PolicySpec> = specs.iter().map(|(s, _)| s.clone()).collect();
    let result = run_policies(&env, &policies, cfg.run.runs, cfg.run.seed)?;
    let mut rows: Vec<SweepRow> = specs
        .iter()
        .map(|(spec, combo)| {
            let m = result.mean_totals(&spec.label).expect("every combination ran");
            SweepRow {
                label: spec.label.clone(),
                parameters: combo.iter().map(|(k, v)| (k.clone(), v.to_string())).collect(),
                mean_total_gain: m.gain,
                mean_final_cumulative_regret: m.expected_regret,
                best: false,
            }
        })
        .collect();
    let best = crate::policies::argmax(rows.iter().map(|r| r.mean_total_gain));
    rows[best].best = true;
    Ok(SweepResult { rows, result })
}

pub fn write_sweep(out: &mut Vec<u8>, sweep: &SweepResult) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    let names: Vec<String> = sweep.rows.first().map_or(Vec::new(), |r| {
        r.parameters.iter().map(|(k, _)| k.clone()).collect()
    });
    let mut header = vec!["label".to_string()];
    header.extend(names);
    header.extend(["mean_total_gain", "mean_final_cumulative_regret", "best"].map(String::from));
    w.write_record(&header)?;
    for r in &sweep.rows {
        let mut row = vec![r.label.clone()];
        row.extend(r.parameters.iter().map(|(_, v)| v.clone()));
        row.push(r.mean_total_gain.to_string());
        row.push(r.mean_final_cumulative_regret.to_string());
        row.push((r.best as u8).to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sweep_runs(out: &mut Vec<u8>, sweep: &SweepResult) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["label", "run", "total_gain", "final_cumulative_regret"])?;
    for run in &sweep.result.policy_runs {
        let t = run.totals();
        w.write_record([
            run.label.clone(),
            run.run.to_string(),
            t.gain.to_string(),
            t.expected_regret.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `sweep.csv`, `sweep_runs.csv` and a manifest into `dir`.
pub fn write_sweep_outputs(sweep: &SweepResult, cfg: &ExperimentConfig, grid_text: &str, dir: &Path) -> Result<Manifest> {
    let config_hash = sha256_hex(format!("{}\n{}", cfg.canonical_json(), grid_text).as_bytes());
    let mut manifest = sweep.result.manifest(config_hash);
    let mut files = BTreeMap::new();
    for (name, write) in [
        (SWEEP_FILE, write_sweep as fn(&mut Vec<u8>, &SweepResult) -> _),
        (SWEEP_RUNS_FILE, write_sweep_runs),
    ] {
        let bytes = csv_bytes(&dir.join(name), |b| write(b, sweep))?;
        write_file(dir, name, &bytes)?;
        files.insert(name.to_string(), sha256_hex(&bytes));
    }
    manifest.files = files;
    write_file(dir, MANIFEST_FILE, manifest.to_json().as_bytes())?;
    Ok(manifest)
}
