use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::RoundRecord;
use crate::feature_space::{FeatureSpace, PartialIndex};

use super::{Policy, PolicyDecision};

/// Mean rewards in force from round `start` on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardSegment {
    pub start: u64,
    /// `r̄(a, φ)` at `[state_index * A + a]`.
    pub means: Vec<f64>,
}

/// Mean feature costs in force from round `start` on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostSegment {
    pub start: u64,
    pub means: Vec<f64>,
}

/// The full piece-wise stationary law of an environment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrueParameters {
    pub space: FeatureSpace,
    pub action_count: usize,
    /// `p(φ)` by state index.
    pub state_probabilities: Vec<f64>,
    pub reward_segments: Vec<RewardSegment>,
    pub cost_segments: Vec<CostSegment>,
}

fn check_starts(starts: impl Iterator<Item = u64>, what: &str) -> Result<()> {
    let starts: Vec<u64> = starts.collect();
    if starts.first() != Some(&1) {
        return Err(Error::Invalid(format!("first {what} segment must start at round 1")));
    }
    if starts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Invalid(format!("{what} segment starts must increase strictly")));
    }
    Ok(())
}

fn in_unit(values: &[f64]) -> bool {
    values.iter().all(|v| (0.0..=1.0).contains(v))
}

/// Index of the segment in force at round `t`: the last start `≤ t`.
pub(crate) fn segment_at(starts: impl Iterator<Item = u64>, t: u64) -> usize {
    starts.take_while(|&s| s <= t).count().saturating_sub(1)
}

impl TrueParameters {
    pub fn validate(&self) -> Result<()> {
        let states = self.space.state_count()? as usize;
        if self.action_count == 0 {
            return Err(Error::Invalid("need at least one action".into()));
        }
        if self.state_probabilities.len() != states {
            return Err(Error::Invalid(format!(
                "{} state probabilities for {states} states",
                self.state_probabilities.len()
            )));
        }
        if self.state_probabilities.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::Invalid("negative state probability".into()));
        }
        let total: f64 = self.state_probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Invalid(format!("state probabilities sum to {total}")));
        }
        check_starts(self.reward_segments.iter().map(|s| s.start), "reward")?;
        check_starts(self.cost_segments.iter().map(|s| s.start), "cost")?;
        for s in &self.reward_segments {
            if s.means.len() != states * self.action_count || !in_unit(&s.means) {
                return Err(Error::Invalid(format!("bad reward table at segment {}", s.start)));
            }
        }
        for s in &self.cost_segments {
            if s.means.len() != self.space.feature_count() || !in_unit(&s.means) {
                return Err(Error::Invalid(format!("bad cost means at segment {}", s.start)));
            }
        }
        Ok(())
    }

    /// Rounds after 1 at which rewards or costs change, ascending.
    pub fn change_points(&self) -> Vec<u64> {
        let mut points: Vec<u64> = self
            .reward_segments
            .iter()
            .map(|s| s.start)
            .chain(self.cost_segments.iter().map(|s| s.start))
            .filter(|&s| s > 1)
            .collect();
        points.sort_unstable();
        points.dedup();
        points
    }

    pub fn reward_segment_index(&self, t: u64) -> usize {
        segment_at(self.reward_segments.iter().map(|s| s.start), t)
    }

    pub fn cost_segment_index(&self, t: u64) -> usize {
        segment_at(self.cost_segments.iter().map(|s| s.start), t)
    }

    pub fn mean_reward(&self, t: u64, action: usize, state: usize) -> f64 {
        self.reward_segments[self.reward_segment_index(t)].means[state * self.action_count + action]
    }

    pub fn mean_costs(&self, t: u64) -> &[f64] {
        &self.cost_segments[self.cost_segment_index(t)].means
    }
}

/// Marginal law of partial state vectors under one reward segment.
#[derive(Clone, Debug)]
struct Marginals {
    /// `p(ψ)` per dense partial index.
    prob: Vec<f64>,
    /// `r̄(a, ψ)` at `[a * Ψ_tot + ψ]`; 0 where `p(ψ) = 0`.
    reward: Vec<f64>,
}

/// The oracle's choice for one pair of reward and cost segments.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleChoice {
    pub decision: PolicyDecision,
    /// `ρ*`.
    pub gain: f64,
    /// `V(I)` for every observation set in canonical order.
    pub values: Vec<f64>,
}

/// Exact per-round optimum and expected gains under known parameters.
#[derive(Clone, Debug)]
pub struct Oracle {
    truth: Arc<TrueParameters>,
    index: Arc<PartialIndex>,
    marginals: Vec<Marginals>,
    /// Indexed by `reward_segment * cost_segments + cost_segment`.
    choices: Vec<OracleChoice>,
}

impl Oracle {
    pub fn new(truth: Arc<TrueParameters>, index: Arc<PartialIndex>) -> Result<Self> {
        truth.validate()?;
        if index.space() != &truth.space {
            return Err(Error::Invalid("index built for another feature space".into()));
        }
        let marginals: Vec<Marginals> = truth
            .reward_segments
            .iter()
            .map(|seg| marginals(&truth, &index, seg))
            .collect();
        let mut choices = Vec::new();
        for m in &marginals {
            for c in &truth.cost_segments {
                choices.push(choose(&truth, &index, m, &c.means));
            }
        }
        Ok(Self {
            truth,
            index,
            marginals,
            choices,
        })
    }

    pub fn truth(&self) -> &Arc<TrueParameters> {
        &self.truth
    }

    pub fn index(&self) -> &Arc<PartialIndex> {
        &self.index
    }

    /// The optimal policy and its expected gain at round `t`.
    pub fn decide(&self, t: u64) -> &OracleChoice {
        let r = self.truth.reward_segment_index(t);
        let c = self.truth.cost_segment_index(t);
        &self.choices[r * self.truth.cost_segments.len() + c]
    }

    /// Expected gain of `decision` at round `t`.
    pub fn expected_gain(&self, t: u64, decision: &PolicyDecision) -> f64 {
        let m = &self.marginals[self.truth.reward_segment_index(t)];
        let costs = self.truth.mean_costs(t);
        let total = self.index.total();
        let obs = decision.observation_set;
        let reward: f64 = self
            .index
            .partials(obs)
            .iter()
            .zip(&decision.action_rule)
            .map(|(&psi, &a)| m.prob[psi] * m.reward[a * total + psi])
            .sum();
        reward - obs.members().map(|i| costs[i]).sum::<f64>()
    }
}

fn marginals(truth: &TrueParameters, index: &PartialIndex, seg: &RewardSegment) -> Marginals {
    let total = index.total();
    let a_count = truth.action_count;
    let mut prob = vec![0.0; total];
    let mut weighted = vec![0.0; a_count * total];
    for (s, &p) in truth.state_probabilities.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let phi = truth.space.state_at(s);
        for &obs in index.observation_sets() {
            let psi = index.observe_index(&phi, obs);
            prob[psi] += p;
            for a in 0..a_count {
                weighted[a * total + psi] += p * seg.means[s * a_count + a];
            }
        }
    }
    let reward = weighted
        .iter()
        .enumerate()
        .map(|(k, &w)| {
            let p = prob[k % total];
            if p > 0.0 {
                w / p
            } else {
                0.0
            }
        })
        .collect();
    Marginals { prob, reward }
}

fn choose(truth: &TrueParameters, index: &PartialIndex, m: &Marginals, costs: &[f64]) -> OracleChoice {
    let total = index.total();
    let mut values = Vec::with_capacity(index.observation_sets().len());
    let mut rules = Vec::with_capacity(values.capacity());
    for &obs in index.observation_sets() {
        let rule: Vec<usize> = index
            .partials(obs)
            .iter()
            .map(|&psi| super::argmax((0..truth.action_count).map(|a| m.reward[a * total + psi])))
            .collect();
        let reward: f64 = index
            .partials(obs)
            .iter()
            .zip(&rule)
            .map(|(&psi, &a)| m.prob[psi] * m.reward[a * total + psi])
            .sum();
        values.push(reward - obs.members().map(|i| costs[i]).sum::<f64>());
        rules.push(rule);
    }
    let k = super::argmax(values.iter().copied());
    OracleChoice {
        decision: PolicyDecision {
            observation_set: index.observation_sets()[k],
            action_rule: rules.swap_remove(k),
        },
        gain: values[k],
        values,
    }
}

/// The oracle's decision and `ρ*` at round `t`, computed from scratch.
pub fn oracle_decide(truth: &TrueParameters, t: u64) -> Result<(PolicyDecision, f64)> {
    let index = Arc::new(PartialIndex::new(&truth.space)?);
    let oracle = Oracle::new(Arc::new(truth.clone()), index)?;
    let c = oracle.decide(t);
    Ok((c.decision.clone(), c.gain))
}

/// Expected gain of `decision` at round `t`, computed from scratch.
pub fn expected_gain_of(truth: &TrueParameters, t: u64, decision: &PolicyDecision) -> Result<f64> {
    let index = Arc::new(PartialIndex::new(&truth.space)?);
    decision.validate(&index, truth.action_count)?;
    let oracle = Oracle::new(Arc::new(truth.clone()), index)?;
    Ok(oracle.expected_gain(t, decision))
}

/// Plays the oracle's decision every round.
pub struct OraclePolicy {
    oracle: Arc<Oracle>,
}

impl OraclePolicy {
    pub fn new(oracle: Arc<Oracle>) -> Self {
        Self { oracle }
    }
}

impl Policy for OraclePolicy {
    fn decide(&mut self, t: u64) -> Result<PolicyDecision> {
        Ok(self.oracle.decide(t).decision.clone())
    }

    fn observe(&mut self, _record: &RoundRecord) -> Result<()> {
        Ok(())
    }
}
