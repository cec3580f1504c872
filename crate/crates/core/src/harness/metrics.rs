//! Per-round outcomes and the quantities derived from them.

use crate::feature_space::ObservationSet;

/// What happened to one policy in one round.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundOutcome {
    pub t: u64,
    pub action: usize,
    pub observation_set: ObservationSet,
    pub reward: f64,
    pub cost_paid: f64,
    /// Reward minus cost paid.
    pub gain: f64,
    /// Oracle's expected gain minus the decision's expected gain.
    pub expected_regret: f64,
    /// Oracle's realized gain on the same draws minus `gain`.
    pub realized_regret: f64,
}

/// Reward rate over the rounds that observed at most `k` features, or
/// `None` when there are none.
pub fn accuracy_by_observations<'a>(outcomes: impl IntoIterator<Item = &'a RoundOutcome>, k: usize) -> Option<f64> {
    let (mut sum, mut count) = (0.0, 0u64);
    for o in outcomes {
        if o.observation_set.len() <= k {
            sum += o.reward;
            count += 1;
        }
    }
    (count > 0).then(|| sum / count as f64)
}

/// Running sums of `values`.
pub fn cumulative(values: impl IntoIterator<Item = f64>) -> Vec<f64> {
    values
        .into_iter()
        .scan(0.0, |acc, v| {
            *acc += v;
            Some(*acc)
        })
        .collect()
}

/// Totals of one policy over one repetition.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Totals {
    pub reward: f64,
    pub cost: f64,
    pub gain: f64,
    pub expected_regret: f64,
    pub realized_regret: f64,
}

impl Totals {
    pub fn of<'a>(outcomes: impl IntoIterator<Item = &'a RoundOutcome>) -> Self {
        let mut t = Totals::default();
        for o in outcomes {
            t.reward += o.reward;
            t.cost += o.cost_paid;
            t.gain += o.gain;
            t.expected_regret += o.expected_regret;
            t.realized_regret += o.realized_regret;
        }
        t
    }
}
