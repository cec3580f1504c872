//! Running policies against environments and collecting what happened.
//!
//! Every repetition draws its rounds once; all policies of that repetition
//! replay the same draws. Repetitions and policies run in parallel, and
//! results come back in a fixed order, so output never depends on thread
//! scheduling.

pub mod metrics;
pub mod plots;
pub mod sweep;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::dataio::config::{ExperimentConfig, Preset, SyntheticTables};
use crate::dataio::nursery::{self, nursery_space};
use crate::dataio::results::{self, Manifest, RoundRow, SummaryRow};
use crate::environment::{
    dataset_environment, rng_stream, segment_starts, synthetic_stationary, synthetic_switching, DatasetSchedule,
    Environment, EnvironmentConfig, RewardModel, RoundDraw,
};
use crate::error::{Error, Result};
use crate::estimators::RoundRecord;
use crate::feature_space::{make_partial, FeatureSpace, PartialIndex};
use crate::policies::{
    build_policy, CostSegment, Oracle, PolicyContext, PolicyDecision, PolicyKind, PolicySpec, RewardSegment,
};

pub use metrics::{accuracy_by_observations, cumulative, RoundOutcome, Totals};

/// An environment ready to run, with the hash of the data behind it.
#[derive(Clone)]
pub struct ResolvedEnvironment {
    pub config: Arc<EnvironmentConfig>,
    pub dataset_sha256: Option<String>,
}

/// The environment described by `cfg`.
pub fn resolve_environment(cfg: &ExperimentConfig) -> Result<ResolvedEnvironment> {
    resolve(cfg, false)
}

/// The environment parameter sweeps run on: the held-out Nursery rows
/// for the Nursery preset, otherwise the configured environment.
pub fn resolve_validation_environment(cfg: &ExperimentConfig) -> Result<ResolvedEnvironment> {
    resolve(cfg, true)
}

fn resolve(cfg: &ExperimentConfig, for_tuning: bool) -> Result<ResolvedEnvironment> {
    let env = &cfg.environment;
    let horizon = cfg.horizon();
    let config = match env.preset {
        Preset::Nursery | Preset::NurseryValidation => {
            let validation = env.preset == Preset::NurseryValidation || for_tuning;
            let path = env
                .dataset
                .as_deref()
                .ok_or_else(|| Error::Config("the nursery presets need environment.dataset".into()))?;
            let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
            let records = nursery::parse_nursery(bytes.as_slice())?;
            let (train, held_out) = nursery::split_train_validation(&records, env.split_seed)?;
            let mut schedule = if validation {
                DatasetSchedule::validation()
            } else {
                DatasetSchedule::experiment()
            };
            // a tuning run on the main preset keeps the validation schedule
            if env.preset == Preset::NurseryValidation || !validation {
                schedule.horizon = horizon;
                if let Some(p) = &env.reward_change_points {
                    schedule.reward_change_points = p.clone();
                }
                if let Some(p) = &env.cost_change_points {
                    schedule.cost_change_points = p.clone();
                }
            }
            schedule.cost_min = env.cost_min.unwrap_or(schedule.cost_min);
            schedule.cost_max = env.cost_max.unwrap_or(schedule.cost_max);
            schedule.cost_sigma = env.cost_sigma.unwrap_or(schedule.cost_sigma);
            let rows = nursery::to_labeled_rows(if validation { &held_out } else { &train });
            let config = dataset_environment(nursery_space(), nursery::CLASSES.len(), rows, &schedule, cfg.run.seed)?;
            return Ok(ResolvedEnvironment {
                config: Arc::new(config),
                dataset_sha256: Some(results::sha256_hex(&bytes)),
            });
        }
        Preset::SyntheticStationary => synthetic_stationary(horizon),
        Preset::SyntheticSwitching => synthetic_switching(horizon),
        Preset::Synthetic => {
            let tables = env
                .synthetic
                .as_ref()
                .ok_or_else(|| Error::Config("the synthetic preset needs explicit tables".into()))?;
            explicit_synthetic(tables, horizon, &env.reward_change_points, &env.cost_change_points)?
        }
    };
    let mut config = config;
    if let Some(s) = env.cost_sigma {
        config.cost_sigma = s;
    }
    config.validate()?;
    Ok(ResolvedEnvironment {
        config: Arc::new(config),
        dataset_sha256: None,
    })
}

fn explicit_synthetic(
    t: &SyntheticTables,
    horizon: u64,
    reward_points: &Option<Vec<u64>>,
    cost_points: &Option<Vec<u64>>,
) -> Result<EnvironmentConfig> {
    let space = FeatureSpace::new(t.alphabet_sizes.clone())?;
    let states = space.state_count()? as usize;
    let reward_starts = segment_starts(reward_points.as_deref().unwrap_or(&[]));
    let cost_starts = segment_starts(cost_points.as_deref().unwrap_or(&[]));
    if reward_starts.len() != t.reward_tables.len() || cost_starts.len() != t.cost_means.len() {
        return Err(Error::Config("one table is needed per segment".into()));
    }
    Ok(EnvironmentConfig {
        space,
        action_count: t.action_count,
        horizon,
        rewards: RewardModel::Table {
            state_probabilities: t
                .state_probabilities
                .clone()
                .unwrap_or_else(|| vec![1.0 / states as f64; states]),
            segments: reward_starts
                .iter()
                .zip(&t.reward_tables)
                .map(|(&start, means)| RewardSegment {
                    start,
                    means: means.clone(),
                })
                .collect(),
        },
        cost_segments: cost_starts
            .iter()
            .zip(&t.cost_means)
            .map(|(&start, means)| CostSegment {
                start,
                means: means.clone(),
            })
            .collect(),
        cost_sigma: 0.001,
    })
}

/// One policy's rounds in one repetition.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyRun {
    pub label: String,
    pub kind: PolicyKind,
    pub run: u64,
    pub outcomes: Vec<RoundOutcome>,
}

impl PolicyRun {
    pub fn totals(&self) -> Totals {
        Totals::of(&self.outcomes)
    }

    pub fn cumulative_expected_regret(&self) -> Vec<f64> {
        cumulative(self.outcomes.iter().map(|o| o.expected_regret))
    }
}

/// Everything an experiment produced.
#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub horizon: u64,
    pub feature_count: usize,
    pub action_count: usize,
    pub seed: u64,
    pub runs: u64,
    /// Policy labels in run order.
    pub policies: Vec<String>,
    /// Ordered by repetition, then policy.
    pub policy_runs: Vec<PolicyRun>,
    /// Hash of each repetition's draws.
    pub tape_sha256: Vec<String>,
    pub reward_change_points: Vec<u64>,
    pub cost_change_points: Vec<u64>,
    pub dataset_sha256: Option<String>,
}

impl RunResult {
    /// The repetitions of the policy labelled `label`.
    pub fn runs_of<'a>(&'a self, label: &'a str) -> impl Iterator<Item = &'a PolicyRun> + 'a {
        self.policy_runs.iter().filter(move |r| r.label == label)
    }

    /// Totals averaged over repetitions.
    pub fn mean_totals(&self, label: &str) -> Option<Totals> {
        let all: Vec<Totals> = self.runs_of(label).map(PolicyRun::totals).collect();
        if all.is_empty() {
            return None;
        }
        let n = all.len() as f64;
        let mut m = Totals::default();
        for t in &all {
            m.reward += t.reward / n;
            m.cost += t.cost / n;
            m.gain += t.gain / n;
            m.expected_regret += t.expected_regret / n;
            m.realized_regret += t.realized_regret / n;
        }
        Some(m)
    }

    /// Change points of rewards and costs together, sorted, inside the
    /// horizon.
    pub fn change_points(&self) -> Vec<u64> {
        let mut all: Vec<u64> = self
            .reward_change_points
            .iter()
            .chain(&self.cost_change_points)
            .copied()
            .filter(|&c| c > 1 && c <= self.horizon)
            .collect();
        all.sort_unstable();
        all.dedup();
        all
    }

    pub fn round_rows(&self) -> Vec<RoundRow> {
        let mut rows = Vec::with_capacity(self.policy_runs.len() * self.horizon as usize);
        for r in &self.policy_runs {
            let mut cum = 0.0;
            for o in &r.outcomes {
                cum += o.expected_regret;
                rows.push(RoundRow {
                    run: r.run,
                    t: o.t,
                    policy: r.label.clone(),
                    action: o.action,
                    obs_set: o.observation_set.bits(),
                    reward: o.reward,
                    cost_paid: o.cost_paid,
                    gain: o.gain,
                    expected_regret: o.expected_regret,
                    realized_regret: o.realized_regret,
                    cumulative_expected_regret: cum,
                });
            }
        }
        rows
    }

    /// One row per policy and repetition, policies in run order.
    pub fn summary_rows(&self) -> Vec<SummaryRow> {
        let mut rows = Vec::new();
        for label in &self.policies {
            for r in self.runs_of(label) {
                let t = r.totals();
                rows.push(SummaryRow {
                    policy: label.clone(),
                    run: r.run,
                    total_reward: t.reward,
                    total_cost: t.cost,
                    total_gain: t.gain,
                    final_cumulative_regret: t.expected_regret,
                    accuracy: (0..=self.feature_count)
                        .map(|k| accuracy_by_observations(&r.outcomes, k))
                        .collect(),
                });
            }
        }
        rows
    }

    pub fn manifest(&self, config_sha256: String) -> Manifest {
        Manifest {
            version: results::VERSION.to_string(),
            config_sha256,
            dataset_sha256: self.dataset_sha256.clone(),
            seed: self.seed,
            runs: self.runs,
            horizon: self.horizon,
            policies: self.policies.clone(),
            tape_sha256: self.tape_sha256.clone(),
            files: BTreeMap::new(),
        }
    }
}

/// Hash of a repetition's draws.
pub fn tape_hash(tape: &[RoundDraw]) -> String {
    let mut h = Sha256::new();
    for d in tape {
        h.update(d.t.to_le_bytes());
        for &s in d.phi.states() {
            h.update((s as u64).to_le_bytes());
        }
        h.update(d.row.map_or(u64::MAX, |r| r as u64).to_le_bytes());
        for c in &d.costs {
            h.update(c.to_bits().to_le_bytes());
        }
        h.update(d.u.to_bits().to_le_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Plays `decision` in the round `draw`.
pub fn play_round(
    env: &Environment,
    oracle: &Oracle,
    draw: &RoundDraw,
    decision: &PolicyDecision,
) -> Result<(RoundOutcome, RoundRecord)> {
    let index = oracle.index();
    decision.validate(index, env.config().action_count)?;
    let t = draw.t;
    let obs = decision.observation_set;
    let action = decision.action_for(index, &draw.phi);
    let reward = env.realize_reward(draw, action);
    let paid_costs: Vec<(usize, f64)> = obs.members().map(|i| (i, draw.costs[i])).collect();
    let cost_paid: f64 = paid_costs.iter().map(|&(_, c)| c).sum();
    let gain = reward - cost_paid;

    let best = oracle.decide(t);
    let expected_regret = best.gain - oracle.expected_gain(t, decision);
    let oracle_action = best.decision.action_for(index, &draw.phi);
    let oracle_cost: f64 = best.decision.observation_set.members().map(|i| draw.costs[i]).sum();
    let oracle_gain = env.realize_reward(draw, oracle_action) - oracle_cost;

    let outcome = RoundOutcome {
        t,
        action,
        observation_set: obs,
        reward,
        cost_paid,
        gain,
        expected_regret,
        realized_regret: oracle_gain - gain,
    };
    let record = RoundRecord {
        time: t,
        action,
        partial: make_partial(&draw.phi, obs)?,
        observation_set: obs,
        reward,
        paid_costs,
    };
    Ok((outcome, record))
}

/// Cumulative expected and realized regret of a fixed decision sequence,
/// one decision per draw.
pub fn regret_series(
    env: &Environment,
    oracle: &Oracle,
    tape: &[RoundDraw],
    decisions: &[PolicyDecision],
) -> Result<(Vec<f64>, Vec<f64>)> {
    if tape.len() != decisions.len() {
        return Err(Error::Invalid(format!("{} decisions for {} rounds", decisions.len(), tape.len())));
    }
    let mut expected = Vec::with_capacity(tape.len());
    let mut realized = Vec::with_capacity(tape.len());
    for (draw, d) in tape.iter().zip(decisions) {
        let (o, _) = play_round(env, oracle, draw, d)?;
        expected.push(o.expected_regret);
        realized.push(o.realized_regret);
    }
    Ok((cumulative(expected), cumulative(realized)))
}

/// Runs `policies` for `runs` repetitions on `env`.
pub fn run_policies(env: &ResolvedEnvironment, policies: &[PolicySpec], runs: u64, seed: u64) -> Result<RunResult> {
    let cfg = env.config.clone();
    cfg.validate()?;
    if policies.is_empty() {
        return Err(Error::Invalid("no policies to run".into()));
    }
    let index = Arc::new(PartialIndex::new(&cfg.space)?);
    let truth = Arc::new(cfg.true_parameters()?);
    let oracle = Arc::new(Oracle::new(truth.clone(), index.clone())?);
    let ctx = PolicyContext {
        index: index.clone(),
        action_count: cfg.action_count,
        horizon: cfg.horizon,
        oracle: oracle.clone(),
    };

    let tapes: Vec<(Environment, Vec<RoundDraw>)> = (0..runs)
        .into_par_iter()
        .map(|rep| {
            let mut e = Environment::new(cfg.clone(), seed, rep)?;
            let tape = e.draw_all()?;
            Ok((e, tape))
        })
        .collect::<Result<_>>()?;

    let jobs: Vec<(u64, &PolicySpec)> = (0..runs).flat_map(|rep| policies.iter().map(move |p| (rep, p))).collect();
    let policy_runs: Vec<PolicyRun> = jobs
        .into_par_iter()
        .map(|(rep, spec)| {
            let (env, tape) = &tapes[rep as usize];
            let mut policy = build_policy(spec, &ctx, rng_stream(seed, rep, spec.kind().stream_code()))?;
            let mut outcomes = Vec::with_capacity(tape.len());
            for draw in tape {
                let decision = policy.decide(draw.t)?;
                let (outcome, record) = play_round(env, &oracle, draw, &decision)?;
                policy.observe(&record)?;
                outcomes.push(outcome);
            }
            Ok(PolicyRun {
                label: spec.label.clone(),
                kind: spec.kind(),
                run: rep,
                outcomes,
            })
        })
        .collect::<Result<_>>()?;

    Ok(RunResult {
        horizon: cfg.horizon,
        feature_count: cfg.space.feature_count(),
        action_count: cfg.action_count,
        seed,
        runs,
        policies: policies.iter().map(|p| p.label.clone()).collect(),
        policy_runs,
        tape_sha256: tapes.iter().map(|(_, t)| tape_hash(t)).collect(),
        reward_change_points: truth.reward_segments.iter().skip(1).map(|s| s.start).collect(),
        cost_change_points: truth.cost_segments.iter().skip(1).map(|s| s.start).collect(),
        dataset_sha256: env.dataset_sha256.clone(),
    })
}

/// Resolves the environment of `cfg` and runs its policies.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunResult> {
    let env = resolve_environment(cfg)?;
    run_policies(&env, &cfg.policies, cfg.run.runs, cfg.run.seed)
}

/// Writes the result tables, plot data and manifest into `dir`.
pub fn write_run_outputs(result: &RunResult, cfg: &ExperimentConfig, dir: &Path) -> Result<Manifest> {
    let mut manifest = result.manifest(results::sha256_hex(cfg.canonical_json().as_bytes()));
    manifest.files = plots::emit_plot_data(result, dir)?;
    results::write_results(dir, &result.round_rows(), &result.summary_rows(), result.feature_count, manifest)
}
