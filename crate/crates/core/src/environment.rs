//! Piece-wise stationary environments: a tabular synthetic one and one
//! replaying labeled rows with cyclically shifted labels. Both draw noisy
//! per-feature observation costs.

use std::sync::Arc;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feature_space::{FeatureSpace, StateVector};
use crate::policies::{CostSegment, RewardSegment, TrueParameters};

/// Purposes of the independent random streams of one repetition.
pub mod stream {
    /// Synthetic state draws, or the row order of a dataset.
    pub const STATES: u64 = 0;
    pub const COSTS: u64 = 1;
    pub const REWARDS: u64 = 2;
    /// Segment cost means, drawn once per experiment.
    pub const COST_MEANS: u64 = 3;
}

/// Independent generator for `(seed, repetition, purpose)`.
pub fn rng_stream(seed: u64, repetition: u64, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ repetition.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(purpose);
    rng
}

/// `(label + shift) mod A`.
pub fn cycle_labels(label: usize, shift: usize, action_count: usize) -> usize {
    (label + shift) % action_count
}

/// One labeled data point.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledRow {
    pub state: StateVector,
    pub label: usize,
}

/// Label shift in force from round `start` on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShiftSegment {
    pub start: u64,
    pub shift: usize,
}

/// Where rewards come from.
#[derive(Clone, Debug, PartialEq)]
pub enum RewardModel {
    /// States drawn i.i.d. from `state_probabilities`; Bernoulli rewards
    /// with the segment's mean.
    Table {
        state_probabilities: Vec<f64>,
        segments: Vec<RewardSegment>,
    },
    /// Rows replayed in a seeded shuffled order; reward 1 iff the action
    /// equals the row's shifted label.
    Labels {
        rows: Arc<Vec<LabeledRow>>,
        segments: Vec<ShiftSegment>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnvironmentConfig {
    pub space: FeatureSpace,
    pub action_count: usize,
    pub horizon: u64,
    pub rewards: RewardModel,
    pub cost_segments: Vec<CostSegment>,
    pub cost_sigma: f64,
}

fn check_starts(starts: &[u64], what: &str) -> Result<()> {
    if starts.first() != Some(&1) {
        return Err(Error::Invalid(format!("first {what} segment must start at round 1")));
    }
    if starts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Invalid(format!("{what} segment starts must increase strictly")));
    }
    Ok(())
}

impl EnvironmentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::Invalid("horizon must be positive".into()));
        }
        if !(self.cost_sigma >= 0.0 && self.cost_sigma.is_finite()) {
            return Err(Error::Invalid(format!("cost sigma {} must be non-negative", self.cost_sigma)));
        }
        let starts: Vec<u64> = self.cost_segments.iter().map(|s| s.start).collect();
        check_starts(&starts, "cost")?;
        match &self.rewards {
            RewardModel::Table { .. } => {}
            RewardModel::Labels { rows, segments } => {
                let starts: Vec<u64> = segments.iter().map(|s| s.start).collect();
                check_starts(&starts, "reward")?;
                for (k, row) in rows.iter().enumerate() {
                    self.space.check_state(&row.state)?;
                    if row.label >= self.action_count {
                        return Err(Error::Invalid(format!("row {k} label {} out of range", row.label)));
                    }
                }
                if (rows.len() as u64) < self.horizon {
                    return Err(Error::InsufficientRows {
                        needed: self.horizon as usize,
                        available: rows.len(),
                    });
                }
            }
        }
        // shared checks on tables, probabilities and cost means
        self.true_parameters_unchecked().validate()
    }

    /// The law the oracle optimizes against. A dataset's law is the
    /// empirical one over its rows.
    pub fn true_parameters(&self) -> Result<TrueParameters> {
        self.validate()?;
        Ok(self.true_parameters_unchecked())
    }

    fn true_parameters_unchecked(&self) -> TrueParameters {
        let a_count = self.action_count;
        let (state_probabilities, reward_segments) = match &self.rewards {
            RewardModel::Table {
                state_probabilities,
                segments,
            } => (state_probabilities.clone(), segments.clone()),
            RewardModel::Labels { rows, segments } => {
                let states = self.space.state_count().unwrap_or(0) as usize;
                let mut counts = vec![0usize; states];
                let mut label_counts = vec![0usize; states * a_count];
                for row in rows.iter() {
                    let s = self.space.state_index(&row.state);
                    counts[s] += 1;
                    label_counts[s * a_count + row.label] += 1;
                }
                let n = rows.len().max(1) as f64;
                let probs = counts.iter().map(|&c| c as f64 / n).collect();
                let segs = segments
                    .iter()
                    .map(|seg| {
                        let mut means = vec![0.0; states * a_count];
                        for s in 0..states {
                            if counts[s] == 0 {
                                continue;
                            }
                            for label in 0..a_count {
                                let a = cycle_labels(label, seg.shift, a_count);
                                means[s * a_count + a] =
                                    label_counts[s * a_count + label] as f64 / counts[s] as f64;
                            }
                        }
                        RewardSegment {
                            start: seg.start,
                            means,
                        }
                    })
                    .collect();
                (probs, segs)
            }
        };
        TrueParameters {
            space: self.space.clone(),
            action_count: a_count,
            state_probabilities,
            reward_segments,
            cost_segments: self.cost_segments.clone(),
        }
    }
}

/// Everything random about one round, shared by every policy.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundDraw {
    pub t: u64,
    pub phi: StateVector,
    /// Dataset row backing this round.
    pub row: Option<usize>,
    pub costs: Vec<f64>,
    /// Uniform variate deciding Bernoulli rewards.
    pub u: f64,
}

enum StateSource {
    Table(WeightedIndex<f64>),
    Rows(Vec<usize>),
}

/// One seeded realization of an environment.
pub struct Environment {
    cfg: Arc<EnvironmentConfig>,
    truth: TrueParameters,
    states: StateSource,
    state_rng: ChaCha8Rng,
    cost_rng: ChaCha8Rng,
    reward_rng: ChaCha8Rng,
    next: u64,
}

impl Environment {
    pub fn new(cfg: Arc<EnvironmentConfig>, seed: u64, repetition: u64) -> Result<Self> {
        let truth = cfg.true_parameters()?;
        let mut state_rng = rng_stream(seed, repetition, stream::STATES);
        let states = match &cfg.rewards {
            RewardModel::Table {
                state_probabilities, ..
            } => StateSource::Table(
                WeightedIndex::new(state_probabilities)
                    .map_err(|e| Error::Invalid(format!("state probabilities: {e}")))?,
            ),
            RewardModel::Labels { rows, .. } => {
                let mut order: Vec<usize> = (0..rows.len()).collect();
                order.shuffle(&mut state_rng);
                StateSource::Rows(order)
            }
        };
        Ok(Self {
            truth,
            states,
            state_rng,
            cost_rng: rng_stream(seed, repetition, stream::COSTS),
            reward_rng: rng_stream(seed, repetition, stream::REWARDS),
            next: 1,
            cfg,
        })
    }

    pub fn config(&self) -> &Arc<EnvironmentConfig> {
        &self.cfg
    }

    pub fn true_parameters(&self) -> &TrueParameters {
        &self.truth
    }

    /// Draws round `t`; rounds must be drawn in order starting at 1.
    pub fn sample_round(&mut self, t: u64) -> Result<RoundDraw> {
        if t != self.next {
            return Err(Error::Invalid(format!("round {t} drawn out of order, expected {}", self.next)));
        }
        if t > self.cfg.horizon {
            return Err(Error::Invalid(format!("round {t} beyond horizon {}", self.cfg.horizon)));
        }
        let (phi, row) = match &self.states {
            StateSource::Table(dist) => {
                let s = dist.sample(&mut self.state_rng);
                (self.cfg.space.state_at(s), None)
            }
            StateSource::Rows(order) => {
                let k = *order.get((t - 1) as usize).ok_or(Error::Exhausted {
                    round: t,
                    rows: order.len(),
                })?;
                let RewardModel::Labels { rows, .. } = &self.cfg.rewards else {
                    unreachable!("row order without rows")
                };
                (rows[k].state.clone(), Some(k))
            }
        };
        let means = self.truth.mean_costs(t);
        let costs = means
            .iter()
            .map(|&m| truncated_normal(&mut self.cost_rng, m, self.cfg.cost_sigma))
            .collect();
        let u = self.reward_rng.random::<f64>();
        self.next += 1;
        Ok(RoundDraw { t, phi, row, costs, u })
    }

    /// All rounds `1..=T`.
    pub fn draw_all(&mut self) -> Result<Vec<RoundDraw>> {
        (self.next..=self.cfg.horizon).map(|t| self.sample_round(t)).collect()
    }

    /// Reward of playing `action` in the round described by `draw`.
    pub fn realize_reward(&self, draw: &RoundDraw, action: usize) -> f64 {
        match (&self.cfg.rewards, draw.row) {
            (RewardModel::Labels { rows, segments }, Some(k)) => {
                let seg = crate::policies::segment_at(segments.iter().map(|s| s.start), draw.t);
                let label = cycle_labels(rows[k].label, segments[seg].shift, self.cfg.action_count);
                (action == label) as u8 as f64
            }
            _ => {
                let s = self.cfg.space.state_index(&draw.phi);
                let mean = self.truth.mean_reward(draw.t, action, s);
                (draw.u < mean) as u8 as f64
            }
        }
    }
}

/// Normal draw conditioned on `[0, 1]` by resampling. `sigma = 0` returns
/// the mean.
pub fn truncated_normal(rng: &mut ChaCha8Rng, mean: f64, sigma: f64) -> f64 {
    truncated_normal_counted(rng, mean, sigma).0
}

/// As [`truncated_normal`], also reporting how many draws were rejected.
pub fn truncated_normal_counted(rng: &mut ChaCha8Rng, mean: f64, sigma: f64) -> (f64, usize) {
    if sigma == 0.0 {
        return (mean.clamp(0.0, 1.0), 0);
    }
    let normal = Normal::new(mean, sigma).expect("sigma checked by validation");
    for rejected in 0..10_000 {
        let x = normal.sample(rng);
        if (0.0..=1.0).contains(&x) {
            return (x, rejected);
        }
    }
    (mean.clamp(0.0, 1.0), 10_000)
}

/// Uniform mean costs in `[low, high]`, one vector per segment start.
pub fn draw_cost_means(
    rng: &mut ChaCha8Rng,
    starts: &[u64],
    features: usize,
    low: f64,
    high: f64,
) -> Vec<CostSegment> {
    starts
        .iter()
        .map(|&start| CostSegment {
            start,
            means: (0..features).map(|_| rng.random_range(low..=high)).collect(),
        })
        .collect()
}

/// Segment starts for the given change points: round 1 plus every change
/// point above 1, sorted and deduplicated.
pub fn segment_starts(change_points: &[u64]) -> Vec<u64> {
    let mut starts: Vec<u64> = std::iter::once(1)
        .chain(change_points.iter().copied().filter(|&c| c > 1))
        .collect();
    starts.sort_unstable();
    starts.dedup();
    starts
}

/// Schedule of a dataset-backed experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSchedule {
    pub horizon: u64,
    pub reward_change_points: Vec<u64>,
    pub cost_change_points: Vec<u64>,
    pub cost_min: f64,
    pub cost_max: f64,
    pub cost_sigma: f64,
}

impl DatasetSchedule {
    /// Rounds, change points and cost model of the main experiment.
    pub fn experiment() -> Self {
        Self {
            horizon: 10_000,
            reward_change_points: vec![1000, 2000, 5000, 8000],
            cost_change_points: vec![3000, 5000, 7000, 9000],
            cost_min: 0.03,
            cost_max: 0.08,
            cost_sigma: 0.001,
        }
    }

    /// The held-out schedule used for parameter tuning.
    pub fn validation() -> Self {
        Self {
            horizon: 2630,
            reward_change_points: vec![1000, 2000],
            cost_change_points: vec![],
            ..Self::experiment()
        }
    }
}

/// Dataset environment over `rows`. Label shift `k mod A` holds in the
/// `k`-th reward segment; cost means are drawn from `seed`'s cost stream.
pub fn dataset_environment(
    space: FeatureSpace,
    action_count: usize,
    rows: Arc<Vec<LabeledRow>>,
    schedule: &DatasetSchedule,
    seed: u64,
) -> Result<EnvironmentConfig> {
    if !(0.0 <= schedule.cost_min && schedule.cost_min <= schedule.cost_max && schedule.cost_max <= 1.0) {
        return Err(Error::Invalid(format!(
            "cost range [{}, {}] is not inside [0,1]",
            schedule.cost_min, schedule.cost_max
        )));
    }
    let segments = segment_starts(&schedule.reward_change_points)
        .into_iter()
        .enumerate()
        .map(|(k, start)| ShiftSegment {
            start,
            shift: k % action_count.max(1),
        })
        .collect();
    let mut rng = rng_stream(seed, 0, stream::COST_MEANS);
    let cost_segments = draw_cost_means(
        &mut rng,
        &segment_starts(&schedule.cost_change_points),
        space.feature_count(),
        schedule.cost_min,
        schedule.cost_max,
    );
    let cfg = EnvironmentConfig {
        space,
        action_count,
        horizon: schedule.horizon,
        rewards: RewardModel::Labels { rows, segments },
        cost_segments,
        cost_sigma: schedule.cost_sigma,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Two binary features, two actions, uniform states. Action `φ_0` pays
/// 0.9, the other 0.1; costs 0.05 and 0.25. Observing feature 0 alone is
/// optimal with a gap of 0.25 to the next best set.
pub fn synthetic_stationary(horizon: u64) -> EnvironmentConfig {
    let table = binary_table(|a, phi| a == phi[0]);
    EnvironmentConfig {
        space: FeatureSpace::new(vec![2, 2]).expect("valid"),
        action_count: 2,
        horizon,
        rewards: RewardModel::Table {
            state_probabilities: vec![0.25; 4],
            segments: vec![RewardSegment { start: 1, means: table }],
        },
        cost_segments: vec![CostSegment {
            start: 1,
            means: vec![0.05, 0.25],
        }],
        cost_sigma: 0.001,
    }
}

/// As [`synthetic_stationary`] but the rewarding rule changes at each
/// quarter of the horizon: `a = φ_0`, `a = φ_1`, `a ≠ φ_0`, `a ≠ φ_1`.
/// Both costs are 0.05.
pub fn synthetic_switching(horizon: u64) -> EnvironmentConfig {
    let rules: [fn(usize, &[usize]) -> bool; 4] = [
        |a, phi| a == phi[0],
        |a, phi| a == phi[1],
        |a, phi| a != phi[0],
        |a, phi| a != phi[1],
    ];
    let quarter = (horizon / 4).max(1);
    let segments = rules
        .iter()
        .enumerate()
        .map(|(k, rule)| RewardSegment {
            start: 1 + k as u64 * quarter - (k > 0) as u64,
            means: binary_table(rule),
        })
        .collect();
    EnvironmentConfig {
        space: FeatureSpace::new(vec![2, 2]).expect("valid"),
        action_count: 2,
        horizon,
        rewards: RewardModel::Table {
            state_probabilities: vec![0.25; 4],
            segments,
        },
        cost_segments: vec![CostSegment {
            start: 1,
            means: vec![0.05, 0.05],
        }],
        cost_sigma: 0.001,
    }
}

fn binary_table(good: impl Fn(usize, &[usize]) -> bool) -> Vec<f64> {
    let space = FeatureSpace::new(vec![2, 2]).expect("valid");
    (0..4)
        .flat_map(|s| {
            let phi = space.state_at(s);
            (0..2)
                .map(|a| if good(a, phi.states()) { 0.9 } else { 0.1 })
                .collect::<Vec<_>>()
        })
        .collect()
}
