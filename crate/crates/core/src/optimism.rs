//! Confidence radii and the optimistic-gain problem over an L1 ball of
//! distributions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::LearnerState;
use crate::feature_space::PartialStateVector;

/// Constants entering every confidence radius.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceConfig {
    pub horizon: u64,
    pub action_count: u64,
    pub psi_total: u64,
    pub feature_count: u64,
    pub obs_set_count: u64,
    pub window: u64,
    pub delta: f64,
}

impl ConfidenceConfig {
    pub fn new(
        horizon: u64,
        action_count: u64,
        psi_total: u64,
        feature_count: u64,
        obs_set_count: u64,
        window: u64,
        delta: f64,
    ) -> Result<Self> {
        let cfg = Self {
            horizon,
            action_count,
            psi_total,
            feature_count,
            obs_set_count,
            window,
            delta,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Config for a learner over `state`'s feature space. `window` is the
    /// value used inside the logarithms, which may differ from the
    /// estimator window (an unbounded learner uses the horizon).
    pub fn for_learner(state: &LearnerState, horizon: u64, window: u64, delta: f64) -> Result<Self> {
        let index = state.index();
        Self::new(
            horizon,
            state.action_count() as u64,
            index.total() as u64,
            index.space().feature_count() as u64,
            index.observation_sets().len() as u64,
            window,
            delta,
        )
    }

    fn validate(&self) -> Result<()> {
        let named = [
            ("horizon", self.horizon),
            ("action_count", self.action_count),
            ("psi_total", self.psi_total),
            ("feature_count", self.feature_count),
            ("obs_set_count", self.obs_set_count),
            ("window", self.window),
        ];
        if let Some((name, _)) = named.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Invalid(format!("{name} must be positive")));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Invalid(format!("delta {} outside (0,1)", self.delta)));
        }
        Ok(())
    }

    fn ln(x: u64) -> f64 {
        (x as f64).ln()
    }

    pub(crate) fn reward_log(&self) -> f64 {
        Self::ln(self.horizon)
            + Self::ln(self.action_count)
            + Self::ln(self.psi_total)
            + Self::ln(self.window)
            - self.delta.ln()
    }

    fn cost_log(&self) -> f64 {
        Self::ln(self.horizon) + Self::ln(self.feature_count) + Self::ln(self.window) - self.delta.ln()
    }

    fn probability_log(&self) -> f64 {
        2f64.ln() + Self::ln(self.horizon) + Self::ln(self.obs_set_count) - self.delta.ln()
    }

    /// `min{1, sqrt(ln(T A Ψ_tot w / δ) / n)}`.
    pub fn reward_radius(&self, n: u64) -> f64 {
        radius_from_log(self.reward_log(), n)
    }

    /// `min{1, sqrt(2 ln(T D w / δ) / n)}`.
    pub fn cost_radius(&self, n: u64) -> f64 {
        radius_from_log(2.0 * self.cost_log(), n)
    }

    /// Lower confidence bound on a mean cost. Not clipped at zero.
    pub fn pessimistic_cost(&self, mean: f64, n: u64) -> f64 {
        mean - self.cost_radius(n)
    }

    /// `min{1, sqrt(2 Ψ_tot ln(2 T |P(D)| / δ) / n)}`.
    pub fn probability_radius(&self, n: u64) -> f64 {
        radius_from_log(2.0 * self.psi_total as f64 * self.probability_log(), n)
    }
}

/// `min{1, sqrt(numerator / max{1, n})}`.
pub(crate) fn radius_from_log(numerator: f64, n: u64) -> f64 {
    capped_sqrt(numerator / n.max(1) as f64)
}

fn capped_sqrt(x: f64) -> f64 {
    x.max(0.0).sqrt().min(1.0)
}

/// `r̂(a, ψ) + C(a, ψ; w)`.
pub fn optimistic_reward(
    state: &LearnerState,
    cfg: &ConfidenceConfig,
    action: usize,
    psi: &PartialStateVector,
) -> f64 {
    let i = state.index().index_of(psi);
    optimistic_reward_at(state, cfg, action, i)
}

pub(crate) fn optimistic_reward_at(
    state: &LearnerState,
    cfg: &ConfidenceConfig,
    action: usize,
    psi: usize,
) -> f64 {
    state.empirical_reward_at(action, psi) + cfg.reward_radius(state.window_count_reward_at(action, psi))
}

/// Maximizer of the optimistic-gain problem for one observation set.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimisticSolution {
    pub value: f64,
    /// Optimistic distribution, aligned with the inputs.
    pub distribution: Vec<f64>,
}

fn normalized(center: &[f64]) -> Result<Vec<f64>> {
    if center.is_empty() {
        return Err(Error::Invalid("empty set of partial states".into()));
    }
    if let Some(c) = center.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
        return Err(Error::Invalid(format!("center entry {c} is not a non-negative number")));
    }
    let total: f64 = center.iter().sum();
    Ok(if total > 0.0 {
        center.iter().map(|c| c / total).collect()
    } else {
        vec![1.0 / center.len() as f64; center.len()]
    })
}

/// Maximizes `Σ q·r − cost_total` over distributions `q` with
/// `‖q − p̄‖₁ ≤ radius`, where `p̄` is `center` normalized.
///
/// The optimum moves as much mass as the budget allows (half the radius)
/// onto the highest-reward state, taking it from the lowest-reward states
/// first. Ties in reward resolve to the earlier position.
pub fn solve_optimistic_gain(
    center: &[f64],
    optimistic_rewards: &[f64],
    radius: f64,
    cost_total: f64,
) -> Result<OptimisticSolution> {
    if center.len() != optimistic_rewards.len() {
        return Err(Error::Invalid(format!(
            "{} center entries but {} rewards",
            center.len(),
            optimistic_rewards.len()
        )));
    }
    let mut q = normalized(center)?;
    let mut order: Vec<usize> = (0..q.len()).collect();
    // stable sort keeps canonical order among equal rewards
    order.sort_by(|&a, &b| optimistic_rewards[b].total_cmp(&optimistic_rewards[a]));

    let best = order[0];
    let budget = (radius.max(0.0) / 2.0).min(1.0 - q[best]).max(0.0);
    q[best] += budget;
    let mut remaining = budget;
    for &k in order.iter().rev() {
        if remaining <= 0.0 || k == best {
            break;
        }
        let take = remaining.min(q[k]);
        q[k] -= take;
        remaining -= take;
    }
    let value = q
        .iter()
        .zip(optimistic_rewards)
        .map(|(p, r)| p * r)
        .sum::<f64>()
        - cost_total;
    Ok(OptimisticSolution {
        value,
        distribution: q,
    })
}

/// Largest state count accepted by [`brute_force_optimistic_gain`].
pub const BRUTE_FORCE_MAX_STATES: usize = 4;

/// Grid-search maximizer of the same problem as [`solve_optimistic_gain`],
/// intended for verification only.
///
/// Searches every point of the simplex lattice with spacing `grid_step`
/// that satisfies the L1 constraint, plus the normalized center itself.
pub fn brute_force_optimistic_gain(
    center: &[f64],
    optimistic_rewards: &[f64],
    radius: f64,
    cost_total: f64,
    grid_step: f64,
) -> Result<f64> {
    let k = center.len();
    if k != optimistic_rewards.len() {
        return Err(Error::Invalid("center and rewards differ in length".into()));
    }
    if k > BRUTE_FORCE_MAX_STATES {
        return Err(Error::Capacity {
            what: "states for grid search",
            requested: k as u128,
            limit: BRUTE_FORCE_MAX_STATES as u128,
        });
    }
    if !(grid_step > 0.0 && grid_step <= 0.1) {
        return Err(Error::Invalid(format!("grid step {grid_step} outside (0, 0.1]")));
    }
    let p = normalized(center)?;
    let units = (1.0 / grid_step).round() as i64;
    let h = 1.0 / units as f64;
    let slack = 1e-12;

    let objective = |q: &[f64]| q.iter().zip(optimistic_rewards).map(|(a, b)| a * b).sum::<f64>();
    let mut best = objective(&p);

    let mut q = vec![0.0; k];
    let mut search = Search {
        p: &p,
        rewards: optimistic_rewards,
        h,
        radius: radius + slack,
        best: &mut best,
    };
    search.descend(&mut q, 0, units, 0.0);
    Ok(best - cost_total)
}

struct Search<'a> {
    p: &'a [f64],
    rewards: &'a [f64],
    h: f64,
    radius: f64,
    best: &'a mut f64,
}

impl Search<'_> {
    fn consider(&mut self, q: &[f64]) {
        let v: f64 = q.iter().zip(self.rewards).map(|(a, b)| a * b).sum();
        if v > *self.best {
            *self.best = v;
        }
    }

    /// Fixes coordinate `pos` and recurses; `units` lattice units remain.
    fn descend(&mut self, q: &mut [f64], pos: usize, units: i64, used: f64) {
        let k = q.len();
        let budget = self.radius - used;
        if budget < 0.0 {
            return;
        }
        match k - pos {
            1 => {
                q[pos] = units as f64 * self.h;
                if used + (q[pos] - self.p[pos]).abs() <= self.radius {
                    self.consider(q);
                }
            }
            2 => self.line(q, pos, units, budget),
            _ => {
                let lo = (((self.p[pos] - budget) / self.h).ceil() as i64).max(0);
                let hi = (((self.p[pos] + budget) / self.h).floor() as i64).min(units);
                for j in lo..=hi {
                    q[pos] = j as f64 * self.h;
                    let d = (q[pos] - self.p[pos]).abs();
                    self.descend(q, pos + 1, units - j, used + d);
                }
            }
        }
    }

    /// Last two coordinates: lattice points on a segment. The feasible
    /// ones form a contiguous run and the objective is linear along it, so
    /// the run's two ends carry the maximum.
    fn line(&mut self, q: &mut [f64], pos: usize, units: i64, budget: f64) {
        let (pa, pb) = (self.p[pos], self.p[pos + 1]);
        let h = self.h;
        let dist = |j: i64| (j as f64 * h - pa).abs() + ((units - j) as f64 * h - pb).abs();

        let mut candidates = vec![0, units];
        for kink in [pa / h, units as f64 - pb / h] {
            let c = kink.clamp(0.0, units as f64);
            candidates.push(c.floor() as i64);
            candidates.push(c.ceil() as i64);
        }
        let Some(&mid) = candidates
            .iter()
            .filter(|&&j| dist(j) <= budget)
            .min_by(|&&a, &&b| dist(a).total_cmp(&dist(b)))
        else {
            return;
        };
        // dist is convex in j: binary search each edge of the feasible run
        let (mut lo, mut hi) = (0i64, mid);
        while lo < hi {
            let m = (lo + hi) / 2;
            if dist(m) <= budget {
                hi = m;
            } else {
                lo = m + 1;
            }
        }
        let left = lo;
        let (mut lo, mut hi) = (mid, units);
        while lo < hi {
            let m = (lo + hi + 1) / 2;
            if dist(m) <= budget {
                lo = m;
            } else {
                hi = m - 1;
            }
        }
        let right = lo;
        for j in [left, right] {
            q[pos] = j as f64 * h;
            q[pos + 1] = (units - j) as f64 * h;
            self.consider(q);
        }
    }
}
