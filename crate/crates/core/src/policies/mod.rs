//! Decision rules: the optimistic learner, the clairvoyant oracle and the
//! benchmark policies.

mod baselines;
mod linear;
mod ncc;
mod oracle;

use std::fmt;
use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{LearnerState, RoundRecord};
use crate::feature_space::{ObservationSet, PartialIndex, StateVector};
use crate::optimism::ConfidenceConfig;

pub use baselines::{eps_greedy_decide, random_decide, ucb1_decide, EpsGreedy, RandomPolicy, Ucb1};
pub use linear::{encode_context, linucb_decide, linucb_update, LinUcb, LinUcbModel, PsLinUcb};
pub use ncc::{ncc_decide, ncc_values, simoos_decide, CostMode, NccUcrl2};
pub(crate) use oracle::segment_at;
pub use oracle::{
    expected_gain_of, oracle_decide, CostSegment, Oracle, OracleChoice, OraclePolicy, RewardSegment,
    TrueParameters,
};

/// An observation set together with the action to play for every partial
/// state vector it can produce.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyDecision {
    pub observation_set: ObservationSet,
    /// One action per element of `Ψ⁺(observation_set)`, canonical order.
    pub action_rule: Vec<usize>,
}

impl PolicyDecision {
    /// A decision that observes nothing and always plays `action`.
    pub fn blind(action: usize) -> Self {
        Self {
            observation_set: ObservationSet::EMPTY,
            action_rule: vec![action],
        }
    }

    /// The action this decision plays when the environment draws `phi`.
    pub fn action_for(&self, index: &PartialIndex, phi: &StateVector) -> usize {
        let psi = index.observe_index(phi, self.observation_set);
        self.action_rule[index.rank_in_domain(psi)]
    }

    pub fn validate(&self, index: &PartialIndex, action_count: usize) -> Result<()> {
        index.space().check_set(self.observation_set)?;
        let expected = index.partials(self.observation_set).len();
        if self.action_rule.len() != expected {
            return Err(Error::Invalid(format!(
                "action rule has {} entries, {} needed for {}",
                self.action_rule.len(),
                expected,
                self.observation_set
            )));
        }
        if let Some(&a) = self.action_rule.iter().find(|&&a| a >= action_count) {
            return Err(Error::Invalid(format!("action {a} out of range")));
        }
        Ok(())
    }
}

/// An online decision maker.
pub trait Policy: Send {
    /// The decision for round `t` (1-based).
    fn decide(&mut self, t: u64) -> Result<PolicyDecision>;

    /// Feedback for the round just played.
    fn observe(&mut self, record: &RoundRecord) -> Result<()>;
}

/// The policy families the harness knows how to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    NccUcrl2,
    SimOos,
    PsLinucb,
    Linucb,
    Ucb1,
    EpsGreedy,
    Random,
    Oracle,
}

impl PolicyKind {
    /// Every kind in canonical order.
    pub const ALL: [PolicyKind; 8] = [
        PolicyKind::NccUcrl2,
        PolicyKind::SimOos,
        PolicyKind::PsLinucb,
        PolicyKind::Linucb,
        PolicyKind::Ucb1,
        PolicyKind::EpsGreedy,
        PolicyKind::Random,
        PolicyKind::Oracle,
    ];

    /// The seven learning policies, without the oracle.
    pub const BENCHMARK: [PolicyKind; 7] = [
        PolicyKind::NccUcrl2,
        PolicyKind::SimOos,
        PolicyKind::PsLinucb,
        PolicyKind::Linucb,
        PolicyKind::Ucb1,
        PolicyKind::EpsGreedy,
        PolicyKind::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::NccUcrl2 => "ncc_ucrl2",
            PolicyKind::SimOos => "sim_oos",
            PolicyKind::PsLinucb => "ps_linucb",
            PolicyKind::Linucb => "linucb",
            PolicyKind::Ucb1 => "ucb1",
            PolicyKind::EpsGreedy => "eps_greedy",
            PolicyKind::Random => "random",
            PolicyKind::Oracle => "oracle",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    /// Policies that never look at the context and so never pay.
    pub fn is_context_free(self) -> bool {
        matches!(self, PolicyKind::Ucb1 | PolicyKind::EpsGreedy | PolicyKind::Random)
    }

    /// Identifier of this kind's random stream.
    pub fn stream_code(self) -> u64 {
        100 + self as u64
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Tunable parameters, one variant per kind.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicyParams {
    NccUcrl2 { window: u64, delta: f64 },
    SimOos { delta: f64 },
    PsLinucb { alpha: f64, omega: usize, delta: f64 },
    Linucb { alpha: f64 },
    Ucb1 { alpha: f64 },
    EpsGreedy { epsilon: f64 },
    Random,
    Oracle,
}

impl PolicyParams {
    /// Default parameters for `kind`.
    pub fn defaults(kind: PolicyKind) -> Self {
        match kind {
            PolicyKind::NccUcrl2 => PolicyParams::NccUcrl2 {
                window: 250,
                delta: 0.04,
            },
            PolicyKind::SimOos => PolicyParams::SimOos { delta: 0.8 },
            PolicyKind::PsLinucb => PolicyParams::PsLinucb {
                alpha: 0.7,
                omega: 100,
                delta: 0.05,
            },
            PolicyKind::Linucb => PolicyParams::Linucb { alpha: 0.5 },
            PolicyKind::Ucb1 => PolicyParams::Ucb1 { alpha: 0.6 },
            PolicyKind::EpsGreedy => PolicyParams::EpsGreedy { epsilon: 0.03 },
            PolicyKind::Random => PolicyParams::Random,
            PolicyKind::Oracle => PolicyParams::Oracle,
        }
    }

    pub fn kind(&self) -> PolicyKind {
        match self {
            PolicyParams::NccUcrl2 { .. } => PolicyKind::NccUcrl2,
            PolicyParams::SimOos { .. } => PolicyKind::SimOos,
            PolicyParams::PsLinucb { .. } => PolicyKind::PsLinucb,
            PolicyParams::Linucb { .. } => PolicyKind::Linucb,
            PolicyParams::Ucb1 { .. } => PolicyKind::Ucb1,
            PolicyParams::EpsGreedy { .. } => PolicyKind::EpsGreedy,
            PolicyParams::Random => PolicyKind::Random,
            PolicyParams::Oracle => PolicyKind::Oracle,
        }
    }
}

/// A named, parameterized policy as it appears in a configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicySpec {
    pub label: String,
    pub params: PolicyParams,
}

impl PolicySpec {
    pub fn new(label: impl Into<String>, params: PolicyParams) -> Self {
        Self {
            label: label.into(),
            params,
        }
    }

    pub fn default_for(kind: PolicyKind) -> Self {
        Self::new(kind.name(), PolicyParams::defaults(kind))
    }

    pub fn kind(&self) -> PolicyKind {
        self.params.kind()
    }
}

/// What a policy needs to know about the problem it is dropped into.
#[derive(Clone)]
pub struct PolicyContext {
    pub index: Arc<PartialIndex>,
    pub action_count: usize,
    pub horizon: u64,
    pub oracle: Arc<Oracle>,
}

/// Instantiates `spec`. `rng` is the policy's private random stream.
pub fn build_policy(spec: &PolicySpec, ctx: &PolicyContext, rng: ChaCha8Rng) -> Result<Box<dyn Policy>> {
    let a = ctx.action_count;
    Ok(match spec.params {
        PolicyParams::NccUcrl2 { window, delta } => {
            let state = LearnerState::new(ctx.index.clone(), a, usize::try_from(window).unwrap_or(usize::MAX))?;
            let cfg = ConfidenceConfig::for_learner(&state, ctx.horizon, window, delta)?;
            Box::new(NccUcrl2::new(state, cfg, CostMode::Pessimistic))
        }
        PolicyParams::SimOos { delta } => {
            let state = LearnerState::unbounded(ctx.index.clone(), a)?;
            let cfg = ConfidenceConfig::for_learner(&state, ctx.horizon, ctx.horizon, delta)?;
            Box::new(NccUcrl2::new(state, cfg, CostMode::Empirical))
        }
        PolicyParams::PsLinucb { alpha, omega, delta } => {
            Box::new(PsLinUcb::new(ctx.index.clone(), a, alpha, omega, delta)?)
        }
        PolicyParams::Linucb { alpha } => Box::new(LinUcb::new(ctx.index.clone(), a, alpha)?),
        PolicyParams::Ucb1 { alpha } => Box::new(Ucb1::new(a, alpha)?),
        PolicyParams::EpsGreedy { epsilon } => Box::new(EpsGreedy::new(a, epsilon, rng)?),
        PolicyParams::Random => Box::new(RandomPolicy::new(a, rng)?),
        PolicyParams::Oracle => Box::new(OraclePolicy::new(ctx.oracle.clone())),
    })
}

/// Lowest index among the maxima of `values`.
pub(crate) fn argmax(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_value = f64::NEG_INFINITY;
    for (i, v) in values.into_iter().enumerate() {
        if v > best_value {
            best = i;
            best_value = v;
        }
    }
    best
}
