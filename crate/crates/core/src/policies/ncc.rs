use crate::error::Result;
use crate::estimators::{LearnerState, RoundRecord};
use crate::optimism::{radius_from_log, solve_optimistic_gain, ConfidenceConfig};

use super::{Policy, PolicyDecision};

/// How the learner charges itself for observing a feature.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CostMode {
    /// Lower confidence bound on the mean cost.
    Pessimistic,
    /// Plain empirical mean, no confidence term.
    Empirical,
}

struct Optimistic {
    /// `max_a r̃(a, ψ)` per dense partial index.
    best_reward: Vec<f64>,
    best_action: Vec<usize>,
    feature_costs: Vec<f64>,
}

fn optimistic_tables(state: &LearnerState, cfg: &ConfidenceConfig, mode: CostMode) -> Optimistic {
    let index = state.index();
    let psi_total = index.total();
    let log = cfg.reward_log();
    let mut best_reward = vec![f64::NEG_INFINITY; psi_total];
    let mut best_action = vec![0; psi_total];
    for a in 0..state.action_count() {
        for psi in 0..psi_total {
            let r = state.empirical_reward_at(a, psi)
                + radius_from_log(log, state.window_count_reward_at(a, psi));
            if r > best_reward[psi] {
                best_reward[psi] = r;
                best_action[psi] = a;
            }
        }
    }
    let feature_costs = (0..index.space().feature_count())
        .map(|i| {
            let mean = state.empirical_cost(i);
            match mode {
                CostMode::Pessimistic => cfg.pessimistic_cost(mean, state.window_count_cost(i)),
                CostMode::Empirical => mean,
            }
        })
        .collect();
    Optimistic {
        best_reward,
        best_action,
        feature_costs,
    }
}

/// `V̂(I)` for every observation set, in canonical order.
pub fn ncc_values(state: &LearnerState, cfg: &ConfidenceConfig, mode: CostMode) -> Result<Vec<f64>> {
    let tables = optimistic_tables(state, cfg, mode);
    values_from(state, cfg, &tables)
}

fn values_from(state: &LearnerState, cfg: &ConfidenceConfig, tables: &Optimistic) -> Result<Vec<f64>> {
    let index = state.index();
    let mut center = Vec::new();
    let mut rewards = Vec::new();
    index
        .observation_sets()
        .iter()
        .map(|&obs| {
            center.clear();
            rewards.clear();
            for &psi in index.partials(obs) {
                center.push(state.estimate_probability_at(psi));
                rewards.push(tables.best_reward[psi]);
            }
            let radius = cfg.probability_radius(state.history_count(obs));
            let cost: f64 = obs.members().map(|i| tables.feature_costs[i]).sum();
            Ok(solve_optimistic_gain(&center, &rewards, radius, cost)?.value)
        })
        .collect()
}

fn decide_with(state: &LearnerState, cfg: &ConfidenceConfig, mode: CostMode) -> Result<PolicyDecision> {
    let tables = optimistic_tables(state, cfg, mode);
    let values = values_from(state, cfg, &tables)?;
    // canonical order is by size first, so strict improvement keeps the
    // smaller set on ties
    let chosen = super::argmax(values.iter().copied());
    let index = state.index();
    let obs = index.observation_sets()[chosen];
    Ok(PolicyDecision {
        observation_set: obs,
        action_rule: index.partials(obs).iter().map(|&psi| tables.best_action[psi]).collect(),
    })
}

/// The optimistic decision: the observation set of largest optimistic
/// gain, acting greedily on optimistic rewards.
pub fn ncc_decide(state: &LearnerState, cfg: &ConfidenceConfig) -> Result<PolicyDecision> {
    decide_with(state, cfg, CostMode::Pessimistic)
}

/// As [`ncc_decide`] but charging plain empirical costs; pair it with an
/// unbounded learner to get the stationary fixed-cost variant.
pub fn simoos_decide(state: &LearnerState, cfg: &ConfidenceConfig) -> Result<PolicyDecision> {
    decide_with(state, cfg, CostMode::Empirical)
}

/// The optimistic learner as an online policy.
pub struct NccUcrl2 {
    state: LearnerState,
    cfg: ConfidenceConfig,
    mode: CostMode,
}

impl NccUcrl2 {
    pub fn new(state: LearnerState, cfg: ConfidenceConfig, mode: CostMode) -> Self {
        Self { state, cfg, mode }
    }

    pub fn state(&self) -> &LearnerState {
        &self.state
    }

    pub fn config(&self) -> &ConfidenceConfig {
        &self.cfg
    }
}

impl Policy for NccUcrl2 {
    fn decide(&mut self, _t: u64) -> Result<PolicyDecision> {
        decide_with(&self.state, &self.cfg, self.mode)
    }

    fn observe(&mut self, record: &RoundRecord) -> Result<()> {
        self.state.record_round(record.clone())
    }
}
