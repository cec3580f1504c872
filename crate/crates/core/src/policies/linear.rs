//! Disjoint linear UCB models over one-hot encoded full state vectors.
//! Both policies always observe every feature.

use std::collections::VecDeque;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::estimators::RoundRecord;
use crate::feature_space::{FeatureSpace, ObservationSet, PartialIndex, StateVector};

use super::{argmax, Policy, PolicyDecision};

/// One-hot blocks for every feature followed by a constant 1.
pub fn encode_context(space: &FeatureSpace, phi: &StateVector) -> Vec<f64> {
    let d: usize = space.alphabet_sizes().iter().sum::<usize>() + 1;
    let mut x = vec![0.0; d];
    let mut offset = 0;
    for (&s, &n) in phi.states().iter().zip(space.alphabet_sizes()) {
        x[offset + s] = 1.0;
        offset += n;
    }
    x[d - 1] = 1.0;
    x
}

#[derive(Clone, Debug)]
struct Arm {
    /// Inverse of `I + Σ x xᵀ`, row-major.
    a_inv: Vec<f64>,
    b: Vec<f64>,
    theta: Vec<f64>,
}

impl Arm {
    fn new(d: usize) -> Self {
        let mut a_inv = vec![0.0; d * d];
        for i in 0..d {
            a_inv[i * d + i] = 1.0;
        }
        Self {
            a_inv,
            b: vec![0.0; d],
            theta: vec![0.0; d],
        }
    }
}

/// Per-arm ridge regressions with identity prior.
#[derive(Clone, Debug)]
pub struct LinUcbModel {
    dim: usize,
    arms: Vec<Arm>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl LinUcbModel {
    pub fn new(actions: usize, dim: usize) -> Self {
        Self {
            dim,
            arms: (0..actions).map(|_| Arm::new(dim)).collect(),
        }
    }

    pub fn action_count(&self) -> usize {
        self.arms.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `x'θ̂_a`.
    pub fn predict(&self, action: usize, x: &[f64]) -> f64 {
        dot(x, &self.arms[action].theta)
    }

    /// `x'θ̂_a + α sqrt(x'A_a⁻¹x)`.
    pub fn score(&self, action: usize, x: &[f64], alpha: f64) -> f64 {
        let arm = &self.arms[action];
        let d = self.dim;
        let quad: f64 = (0..d)
            .filter(|&i| x[i] != 0.0)
            .map(|i| x[i] * dot(&arm.a_inv[i * d..(i + 1) * d], x))
            .sum();
        dot(x, &arm.theta) + alpha * quad.max(0.0).sqrt()
    }

    /// Rank-one update of arm `action` with `(x, reward)`.
    pub fn update(&mut self, action: usize, x: &[f64], reward: f64) {
        let d = self.dim;
        let arm = &mut self.arms[action];
        let u: Vec<f64> = (0..d).map(|i| dot(&arm.a_inv[i * d..(i + 1) * d], x)).collect();
        let denom = 1.0 + dot(x, &u);
        for i in 0..d {
            for j in 0..d {
                arm.a_inv[i * d + j] -= u[i] * u[j] / denom;
            }
        }
        for (b, &xi) in arm.b.iter_mut().zip(x) {
            *b += reward * xi;
        }
        let theta: Vec<f64> = (0..d).map(|i| dot(&arm.a_inv[i * d..(i + 1) * d], &arm.b)).collect();
        arm.theta = theta;
    }
}

/// Arm with the highest upper confidence score; ties to the lowest index.
pub fn linucb_decide(model: &LinUcbModel, context: &[f64], alpha: f64) -> usize {
    argmax((0..model.action_count()).map(|a| model.score(a, context, alpha)))
}

pub fn linucb_update(model: &mut LinUcbModel, action: usize, context: &[f64], reward: f64) {
    model.update(action, context, reward);
}

/// LinUCB plus cached scores for every full state vector.
struct Scored {
    index: Arc<PartialIndex>,
    contexts: Vec<Vec<f64>>,
    model: LinUcbModel,
    alpha: f64,
    /// `[arm][state]`, recomputed only for arms whose model changed.
    scores: Vec<Vec<f64>>,
    stale: Vec<bool>,
}

impl Scored {
    fn new(index: Arc<PartialIndex>, actions: usize, alpha: f64) -> Result<Self> {
        if actions == 0 {
            return Err(Error::Invalid("need at least one action".into()));
        }
        if !(alpha >= 0.0) {
            return Err(Error::Invalid(format!("alpha {alpha} must be non-negative")));
        }
        let space = index.space();
        let contexts: Vec<Vec<f64>> = space
            .enumerate_states()?
            .iter()
            .map(|phi| encode_context(space, phi))
            .collect();
        let dim = contexts.first().map_or(1, Vec::len);
        Ok(Self {
            scores: vec![vec![0.0; contexts.len()]; actions],
            stale: vec![true; actions],
            model: LinUcbModel::new(actions, dim),
            contexts,
            index,
            alpha,
        })
    }

    fn decide(&mut self) -> PolicyDecision {
        for (a, stale) in self.stale.iter_mut().enumerate() {
            if *stale {
                for (s, x) in self.contexts.iter().enumerate() {
                    self.scores[a][s] = self.model.score(a, x, self.alpha);
                }
                *stale = false;
            }
        }
        let rule = (0..self.contexts.len())
            .map(|s| argmax(self.scores.iter().map(|row| row[s])))
            .collect();
        PolicyDecision {
            observation_set: ObservationSet::full(self.index.space().feature_count()),
            action_rule: rule,
        }
    }

    fn context_of(&self, record: &RoundRecord) -> Result<&[f64]> {
        let states: Option<Vec<usize>> = record.partial.entries().iter().copied().collect();
        let phi = states.ok_or_else(|| {
            Error::Invalid(format!("linear policies need the full state, got {}", record.partial))
        })?;
        let space = self.index.space();
        let phi = StateVector::new(phi);
        space.check_state(&phi)?;
        Ok(&self.contexts[space.state_index(&phi)])
    }

    fn learn(&mut self, action: usize, x: &[f64], reward: f64) {
        self.model.update(action, x, reward);
        self.stale[action] = true;
    }

    fn reset(&mut self) {
        self.model = LinUcbModel::new(self.model.action_count(), self.model.dim());
        self.stale.iter_mut().for_each(|s| *s = true);
    }
}

pub struct LinUcb {
    inner: Scored,
}

impl LinUcb {
    pub fn new(index: Arc<PartialIndex>, actions: usize, alpha: f64) -> Result<Self> {
        Ok(Self {
            inner: Scored::new(index, actions, alpha)?,
        })
    }
}

impl Policy for LinUcb {
    fn decide(&mut self, _t: u64) -> Result<PolicyDecision> {
        Ok(self.inner.decide())
    }

    fn observe(&mut self, record: &RoundRecord) -> Result<()> {
        let x = self.inner.context_of(record)?.to_vec();
        self.inner.learn(record.action, &x, record.reward);
        Ok(())
    }
}

/// LinUCB that restarts when recent prediction errors grow.
///
/// Keeps the last `2ω` absolute residuals `|r − x'θ̂_a|`. Once both halves
/// are full, a newest-half mean exceeding the oldest-half mean by more than
/// `threshold` resets every arm and clears the residuals.
pub struct PsLinUcb {
    inner: Scored,
    omega: usize,
    threshold: f64,
    residuals: VecDeque<f64>,
    resets: usize,
}

impl PsLinUcb {
    pub fn new(index: Arc<PartialIndex>, actions: usize, alpha: f64, omega: usize, threshold: f64) -> Result<Self> {
        if omega == 0 {
            return Err(Error::Invalid("omega must be positive".into()));
        }
        if !(threshold >= 0.0) {
            return Err(Error::Invalid(format!("threshold {threshold} must be non-negative")));
        }
        Ok(Self {
            inner: Scored::new(index, actions, alpha)?,
            omega,
            threshold,
            residuals: VecDeque::with_capacity(2 * omega + 1),
            resets: 0,
        })
    }

    /// Number of resets so far.
    pub fn resets(&self) -> usize {
        self.resets
    }

    fn change_detected(&self) -> bool {
        if self.residuals.len() < 2 * self.omega {
            return false;
        }
        let old: f64 = self.residuals.iter().take(self.omega).sum();
        let new: f64 = self.residuals.iter().skip(self.omega).sum();
        (new - old) / self.omega as f64 > self.threshold
    }
}

impl Policy for PsLinUcb {
    fn decide(&mut self, _t: u64) -> Result<PolicyDecision> {
        Ok(self.inner.decide())
    }

    fn observe(&mut self, record: &RoundRecord) -> Result<()> {
        let x = self.inner.context_of(record)?.to_vec();
        let residual = (record.reward - self.inner.model.predict(record.action, &x)).abs();
        self.residuals.push_back(residual);
        if self.residuals.len() > 2 * self.omega {
            self.residuals.pop_front();
        }
        if self.change_detected() {
            self.inner.reset();
            self.residuals.clear();
            self.resets += 1;
        }
        self.inner.learn(record.action, &x, record.reward);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feature_space::make_partial;

    fn space() -> FeatureSpace {
        FeatureSpace::new(vec![2, 3]).unwrap()
    }

    fn record(t: u64, phi: &[usize], a: usize, r: f64) -> RoundRecord {
        let obs = ObservationSet::full(phi.len());
        RoundRecord {
            time: t,
            action: a,
            partial: make_partial(&StateVector::new(phi.to_vec()), obs).unwrap(),
            observation_set: obs,
            reward: r,
            paid_costs: obs.members().map(|i| (i, 0.05)).collect(),
        }
    }

    #[test]
    fn encoding_is_one_hot_plus_intercept() {
        let x = encode_context(&space(), &StateVector::new(vec![1, 2]));
        assert_eq!(x, vec![0.0, 1.0, 0.0, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn fresh_model_ties_to_arm_zero() {
        let m = LinUcbModel::new(3, 6);
        let x = encode_context(&space(), &StateVector::new(vec![0, 1]));
        assert_eq!(linucb_decide(&m, &x, 0.5), 0);
        assert!((m.score(2, &x, 0.5) - 0.5 * dot(&x, &x).sqrt()).abs() < 1e-12);
        assert_eq!(linucb_decide(&m, &x, 0.0), 0);
    }

    #[test]
    fn sherman_morrison_matches_direct_solution() {
        // with a single repeated context, θ = n r x / (1 + n |x|²) by symmetry
        let mut m = LinUcbModel::new(1, 6);
        let x = encode_context(&space(), &StateVector::new(vec![1, 0]));
        for _ in 0..10 {
            linucb_update(&mut m, 0, &x, 1.0);
        }
        let norm2 = dot(&x, &x);
        let expected = 10.0 * norm2 / (1.0 + 10.0 * norm2);
        assert!((m.predict(0, &x) - expected).abs() < 1e-12);
    }

    #[test]
    fn learns_the_rewarding_arm() {
        let mut m = LinUcbModel::new(2, 6);
        let x = encode_context(&space(), &StateVector::new(vec![0, 2]));
        for _ in 0..200 {
            let a = linucb_decide(&m, &x, 0.5);
            linucb_update(&mut m, a, &x, (a == 1) as u8 as f64);
        }
        assert_eq!(linucb_decide(&m, &x, 0.5), 1);
    }

    #[test]
    fn policy_rule_covers_every_state() {
        let index = Arc::new(PartialIndex::new(&space()).unwrap());
        let mut p = LinUcb::new(index.clone(), 2, 0.5).unwrap();
        let d = p.decide(1).unwrap();
        assert!(d.validate(&index, 2).is_ok());
        assert_eq!(d.action_rule.len(), 6);
        // incomplete state is refused
        let mut partial = record(1, &[0, 1], 0, 1.0);
        partial.partial.0[0] = None;
        partial.observation_set = ObservationSet::from_members(&[1]).unwrap();
        partial.paid_costs = vec![(1, 0.05)];
        assert!(p.observe(&partial).is_err());
    }

    fn run_ps(rounds: u64, flip_at: Option<u64>) -> (PsLinUcb, Option<u64>) {
        let index = Arc::new(PartialIndex::new(&space()).unwrap());
        let mut p = PsLinUcb::new(index.clone(), 2, 0.7, 100, 0.05).unwrap();
        let mut first_reset = None;
        for t in 1..=rounds {
            let phi = StateVector::new(vec![(t % 2) as usize, (t % 3) as usize]);
            let d = p.decide(t).unwrap();
            let a = d.action_for(&index, &phi);
            let good = (phi.states()[0] == 0) as usize;
            let mut r = (a == good) as u8 as f64;
            if flip_at.is_some_and(|f| t >= f) {
                r = 1.0 - r;
            }
            let before = p.resets();
            p.observe(&record(t, phi.states(), a, r)).unwrap();
            if p.resets() > before && first_reset.is_none() && flip_at.is_some_and(|f| t >= f) {
                first_reset = Some(t);
            }
        }
        (p, first_reset)
    }

    #[test]
    fn stationary_stream_does_not_reset() {
        let (p, _) = run_ps(10_000, None);
        assert!(p.resets() <= 1, "{} resets", p.resets());
    }

    #[test]
    fn reward_flip_triggers_reset() {
        let (p, first) = run_ps(3000, Some(2000));
        assert!(p.resets() >= 1);
        let t = first.expect("no reset after the flip");
        assert!(t - 2000 <= 200, "reset at {t}");
    }

    #[test]
    fn detector_is_inert_before_two_windows() {
        let (p, _) = run_ps(150, Some(50));
        assert_eq!(p.resets(), 0);
    }
}
