//! Sliding-window reward and cost statistics plus full-history counters
//! for partial-state probabilities.
//!
//! Window statistics cover the last `w` recorded rounds. Sums are kept in
//! fixed point so that evicting a record exactly undoes its insertion.

use std::collections::VecDeque;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feature_space::{ObservationSet, PartialIndex, PartialStateVector};

const FIXED_ONE: f64 = (1u64 << 60) as f64;

fn to_fixed(x: f64) -> i128 {
    (x * FIXED_ONE).round() as i128
}

fn from_fixed(x: i128) -> f64 {
    x as f64 / FIXED_ONE
}

/// One round as seen by a learner.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub time: u64,
    pub action: usize,
    pub partial: PartialStateVector,
    pub observation_set: ObservationSet,
    pub reward: f64,
    /// `(feature, cost)` for every member of `observation_set`, ascending.
    pub paid_costs: Vec<(usize, f64)>,
}

impl RoundRecord {
    pub fn total_cost(&self) -> f64 {
        self.paid_costs.iter().map(|&(_, c)| c).sum()
    }

    fn validate(&self, action_count: usize) -> Result<()> {
        if self.action >= action_count {
            return Err(Error::Invalid(format!(
                "action {} out of range for {action_count} actions",
                self.action
            )));
        }
        if self.partial.domain_set() != self.observation_set {
            return Err(Error::Invalid(format!(
                "partial {} does not have domain {}",
                self.partial, self.observation_set
            )));
        }
        if !(0.0..=1.0).contains(&self.reward) {
            return Err(Error::Invalid(format!("reward {} outside [0,1]", self.reward)));
        }
        let keys: Vec<usize> = self.paid_costs.iter().map(|&(i, _)| i).collect();
        if !keys.iter().copied().eq(self.observation_set.members()) {
            return Err(Error::Invalid(format!(
                "paid costs for {keys:?} do not match observation set {}",
                self.observation_set
            )));
        }
        if let Some(&(i, c)) = self.paid_costs.iter().find(|(_, c)| !(0.0..=1.0).contains(c)) {
            return Err(Error::Invalid(format!("cost {c} of feature {i} outside [0,1]")));
        }
        Ok(())
    }
}

/// Window statistics in raw form; equality is exact.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WindowStats {
    pub reward_counts: Vec<u32>,
    pub reward_sums: Vec<i128>,
    pub cost_counts: Vec<u32>,
    pub cost_sums: Vec<i128>,
}

impl WindowStats {
    fn zeros(actions: usize, psi_total: usize, features: usize) -> Self {
        Self {
            reward_counts: vec![0; actions * psi_total],
            reward_sums: vec![0; actions * psi_total],
            cost_counts: vec![0; features],
            cost_sums: vec![0; features],
        }
    }

    fn apply(&mut self, psi_total: usize, psi: usize, rec: &RoundRecord, sign: i32) {
        let slot = rec.action * psi_total + psi;
        self.reward_counts[slot] = self.reward_counts[slot].wrapping_add_signed(sign);
        self.reward_sums[slot] += sign as i128 * to_fixed(rec.reward);
        for &(i, c) in &rec.paid_costs {
            self.cost_counts[i] = self.cost_counts[i].wrapping_add_signed(sign);
            self.cost_sums[i] += sign as i128 * to_fixed(c);
        }
    }
}

#[derive(Clone, Debug)]
struct Stored {
    record: RoundRecord,
    psi: usize,
}

/// Estimator state of the optimistic learner.
#[derive(Clone, Debug)]
pub struct LearnerState {
    index: Arc<PartialIndex>,
    action_count: usize,
    window: usize,
    ring: VecDeque<Stored>,
    stats: WindowStats,
    history_sets: Vec<u64>,
    history_partials: Vec<u64>,
    last_time: Option<u64>,
}

impl LearnerState {
    /// A learner whose reward and cost statistics cover the last `window`
    /// rounds.
    pub fn new(index: Arc<PartialIndex>, action_count: usize, window: usize) -> Result<Self> {
        if window == 0 {
            return Err(Error::Invalid("window size must be positive".into()));
        }
        if action_count == 0 {
            return Err(Error::Invalid("need at least one action".into()));
        }
        let psi_total = index.total();
        let features = index.space().feature_count();
        Ok(Self {
            action_count,
            window,
            ring: VecDeque::with_capacity(window.min(4096)),
            stats: WindowStats::zeros(action_count, psi_total, features),
            history_sets: vec![0; 1 << features],
            history_partials: vec![0; psi_total],
            last_time: None,
            index,
        })
    }

    /// A learner that never forgets.
    pub fn unbounded(index: Arc<PartialIndex>, action_count: usize) -> Result<Self> {
        Self::new(index, action_count, usize::MAX)
    }

    pub fn index(&self) -> &Arc<PartialIndex> {
        &self.index
    }

    pub fn action_count(&self) -> usize {
        self.action_count
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn records(&self) -> impl Iterator<Item = &RoundRecord> {
        self.ring.iter().map(|s| &s.record)
    }

    pub fn record_round(&mut self, rec: RoundRecord) -> Result<()> {
        if let Some(last) = self.last_time {
            if rec.time <= last {
                return Err(Error::NonMonotoneTime {
                    last,
                    got: rec.time,
                });
            }
        }
        self.index.space().check_partial(&rec.partial)?;
        rec.validate(self.action_count)?;
        let psi_total = self.index.total();
        let psi = self.index.index_of(&rec.partial);

        let Self {
            index,
            history_sets,
            history_partials,
            ..
        } = self;
        index.for_each_substate(psi, |sub| {
            history_partials[sub] += 1;
            history_sets[index.domain_of(sub).bits() as usize] += 1;
        });

        if self.ring.len() == self.window {
            if let Some(old) = self.ring.pop_front() {
                self.stats.apply(psi_total, old.psi, &old.record, -1);
            }
        }
        self.stats.apply(psi_total, psi, &rec, 1);
        self.last_time = Some(rec.time);
        self.ring.push_back(Stored { record: rec, psi });
        Ok(())
    }

    fn reward_slot(&self, action: usize, psi: usize) -> usize {
        action * self.index.total() + psi
    }

    /// Raw `|T(a, ψ; w)|` for a dense partial index.
    pub fn raw_reward_count_at(&self, action: usize, psi: usize) -> u32 {
        self.stats.reward_counts[self.reward_slot(action, psi)]
    }

    /// `r̂(a, ψ)` for a dense partial index; 0 when unobserved.
    pub fn empirical_reward_at(&self, action: usize, psi: usize) -> f64 {
        let slot = self.reward_slot(action, psi);
        let n = self.stats.reward_counts[slot].max(1);
        from_fixed(self.stats.reward_sums[slot]) / n as f64
    }

    pub fn empirical_reward(&self, action: usize, psi: &PartialStateVector) -> f64 {
        self.empirical_reward_at(action, self.index.index_of(psi))
    }

    /// `ĉ[i]`; 0 when the feature was not observed inside the window.
    pub fn empirical_cost(&self, feature: usize) -> f64 {
        let n = self.stats.cost_counts[feature].max(1);
        from_fixed(self.stats.cost_sums[feature]) / n as f64
    }

    /// `p̂(ψ) = max{1, N(D(ψ), ψ)} / max{1, N(D(ψ))}`.
    pub fn estimate_probability_at(&self, psi: usize) -> f64 {
        let domain = self.index.domain_of(psi);
        let num = self.history_partials[psi].max(1);
        let den = self.history_sets[domain.bits() as usize].max(1);
        num as f64 / den as f64
    }

    pub fn estimate_probability(&self, psi: &PartialStateVector) -> f64 {
        self.estimate_probability_at(self.index.index_of(psi))
    }

    /// `N(a, ψ; w)`, clamped at 1.
    pub fn window_count_reward_at(&self, action: usize, psi: usize) -> u64 {
        u64::from(self.raw_reward_count_at(action, psi)).max(1)
    }

    pub fn window_count_reward(&self, action: usize, psi: &PartialStateVector) -> u64 {
        self.window_count_reward_at(action, self.index.index_of(psi))
    }

    /// `N(i; w)`, clamped at 1.
    pub fn window_count_cost(&self, feature: usize) -> u64 {
        u64::from(self.stats.cost_counts[feature]).max(1)
    }

    /// `N(I)`, clamped at 1.
    pub fn history_count(&self, obs: ObservationSet) -> u64 {
        self.raw_history_count(obs).max(1)
    }

    pub fn raw_history_count(&self, obs: ObservationSet) -> u64 {
        self.history_sets[obs.bits() as usize]
    }

    /// Raw `N(D(ψ), ψ)`.
    pub fn raw_history_count_partial_at(&self, psi: usize) -> u64 {
        self.history_partials[psi]
    }

    pub fn raw_history_count_partial(&self, psi: &PartialStateVector) -> u64 {
        self.raw_history_count_partial_at(self.index.index_of(psi))
    }

    /// Incrementally maintained window statistics.
    pub fn window_stats(&self) -> &WindowStats {
        &self.stats
    }

    /// Window statistics recomputed from the stored records alone.
    pub fn rebuild_window_stats(&self) -> WindowStats {
        let psi_total = self.index.total();
        let mut stats = WindowStats::zeros(
            self.action_count,
            psi_total,
            self.index.space().feature_count(),
        );
        for s in &self.ring {
            stats.apply(psi_total, s.psi, &s.record, 1);
        }
        stats
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feature_space::{make_partial, FeatureSpace, StateVector};
    use proptest::prelude::*;

    fn learner(sizes: Vec<usize>, actions: usize, window: usize) -> LearnerState {
        let index = Arc::new(PartialIndex::new(&FeatureSpace::new(sizes).unwrap()).unwrap());
        LearnerState::new(index, actions, window).unwrap()
    }

    fn record(time: u64, action: usize, phi: &[usize], obs: &[usize], reward: f64, cost: f64) -> RoundRecord {
        let obs = ObservationSet::from_members(obs).unwrap();
        RoundRecord {
            time,
            action,
            partial: make_partial(&StateVector::new(phi.to_vec()), obs).unwrap(),
            observation_set: obs,
            reward,
            paid_costs: obs.members().map(|i| (i, cost)).collect(),
        }
    }

    #[test]
    fn history_counts_cover_every_substate() {
        let mut s = learner(vec![2, 2], 2, 10);
        s.record_round(record(1, 0, &[1, 0], &[0, 1], 1.0, 0.05)).unwrap();
        for m in [&[][..], &[0], &[1], &[0, 1]] {
            let obs = ObservationSet::from_members(m).unwrap();
            assert_eq!(s.raw_history_count(obs), 1, "set {obs}");
        }
    }

    #[test]
    fn window_of_one_evicts() {
        let mut s = learner(vec![2], 2, 1);
        s.record_round(record(1, 1, &[0], &[0], 1.0, 0.1)).unwrap();
        s.record_round(record(2, 1, &[0], &[0], 0.0, 0.1)).unwrap();
        let p = make_partial(&StateVector::new(vec![0]), ObservationSet::full(1)).unwrap();
        assert_eq!(s.raw_reward_count_at(1, s.index().index_of(&p)), 1);
        assert_eq!(s.empirical_reward(1, &p), 0.0);
    }

    #[test]
    fn empty_observations_leave_costs_untouched() {
        let mut s = learner(vec![2, 3], 2, 5);
        for t in 1..=3 {
            s.record_round(record(t, 0, &[0, 1], &[], 0.5, 0.0)).unwrap();
        }
        assert_eq!(s.raw_history_count(ObservationSet::EMPTY), 3);
        assert_eq!(s.window_stats().cost_counts, vec![0, 0]);
        assert_eq!(s.window_count_cost(0), 1);
    }

    #[test]
    fn empirical_means() {
        let mut s = learner(vec![2], 2, 10);
        let p = PartialStateVector(vec![Some(1)]);
        assert_eq!(s.empirical_reward(0, &p), 0.0);
        assert_eq!(s.empirical_cost(0), 0.0);
        s.record_round(record(1, 0, &[1], &[0], 1.0, 0.03)).unwrap();
        s.record_round(record(2, 0, &[1], &[0], 0.0, 0.05)).unwrap();
        s.record_round(record(3, 0, &[1], &[0], 1.0, 0.04)).unwrap();
        assert!((s.empirical_reward(0, &p) - 2.0 / 3.0).abs() < 1e-15);
        assert!((s.empirical_cost(0) - 0.04).abs() < 1e-15);

        let mut one = learner(vec![2], 2, 10);
        one.record_round(record(1, 1, &[0], &[0], 0.7, 0.08)).unwrap();
        assert_eq!(one.empirical_reward(1, &PartialStateVector(vec![Some(0)])), 0.7);
        assert_eq!(one.empirical_cost(0), 0.08);
    }

    #[test]
    fn probability_estimates() {
        let mut s = learner(vec![2], 1, 10);
        let p0 = PartialStateVector(vec![Some(0)]);
        let p1 = PartialStateVector(vec![Some(1)]);
        assert_eq!(s.estimate_probability(&p0), 1.0);
        s.record_round(record(1, 0, &[0], &[0], 0.0, 0.0)).unwrap();
        assert_eq!(s.estimate_probability(&p0), 1.0);
        assert_eq!(s.estimate_probability(&p1), 1.0);
        s.record_round(record(2, 0, &[0], &[0], 0.0, 0.0)).unwrap();
        s.record_round(record(3, 0, &[0], &[0], 0.0, 0.0)).unwrap();
        s.record_round(record(4, 0, &[1], &[0], 0.0, 0.0)).unwrap();
        assert_eq!(s.estimate_probability(&p0), 0.75);
        assert_eq!(s.estimate_probability(&p1), 0.25);
    }

    #[test]
    fn clamped_counts() {
        let mut s = learner(vec![2], 1, 7);
        let p = PartialStateVector(vec![Some(0)]);
        assert_eq!(s.window_count_reward(0, &p), 1);
        for t in 1..=7 {
            s.record_round(record(t, 0, &[0], &[0], 1.0, 0.0)).unwrap();
        }
        assert_eq!(s.window_count_reward(0, &p), 7);
        s.record_round(record(8, 0, &[0], &[0], 1.0, 0.0)).unwrap();
        assert_eq!(s.window_count_reward(0, &p), 7);
        assert_eq!(s.history_count(ObservationSet::full(1)), 8);
    }

    #[test]
    fn rejects_bad_records() {
        let mut s = learner(vec![2], 2, 3);
        s.record_round(record(5, 0, &[0], &[0], 1.0, 0.0)).unwrap();
        assert!(matches!(
            s.record_round(record(5, 0, &[0], &[0], 1.0, 0.0)),
            Err(Error::NonMonotoneTime { last: 5, got: 5 })
        ));
        assert!(s.record_round(record(6, 2, &[0], &[0], 1.0, 0.0)).is_err());
        assert!(s.record_round(record(7, 0, &[0], &[0], 1.5, 0.0)).is_err());
        let mut bad = record(8, 0, &[0], &[0], 1.0, 0.0);
        bad.paid_costs.clear();
        assert!(s.record_round(bad).is_err());
    }

    fn arb_records() -> impl Strategy<Value = (Vec<usize>, usize, usize, Vec<(usize, Vec<usize>, u32, f64, f64)>)> {
        (prop::collection::vec(1usize..4, 1..5), 1usize..4, 1usize..21).prop_flat_map(|(sizes, actions, w)| {
            let d = sizes.len();
            let phis: Vec<_> = sizes.iter().map(|&n| 0..n).collect();
            let rec = (0..actions, phis, any::<u32>(), 0.0f64..=1.0, 0.0f64..=1.0);
            (Just(sizes), Just(actions), Just(w), prop::collection::vec(rec, 0..60))
                .prop_map(move |(s, a, w, recs)| {
                    let recs = recs
                        .into_iter()
                        .map(|(act, phi, bits, r, c)| (act, phi, bits & ((1u32 << d) - 1), r, c))
                        .collect();
                    (s, a, w, recs)
                })
        })
    }

    proptest! {
        #[test]
        fn window_matches_rebuild_and_history_is_conserved((sizes, actions, w, recs) in arb_records()) {
            let mut s = learner(sizes.clone(), actions, w);
            let space = FeatureSpace::new(sizes).unwrap();
            let mut prev_hist = vec![0u64; 1 << space.feature_count()];
            for (t, (a, phi, bits, r, c)) in recs.into_iter().enumerate() {
                let obs = ObservationSet::from_bits(bits);
                let members: Vec<usize> = obs.members().collect();
                s.record_round(record(t as u64 + 1, a, &phi, &members, r, c)).unwrap();
                prop_assert_eq!(s.window_stats(), &s.rebuild_window_stats());
                prop_assert!(s.records().count() <= w);
                for &set in s.index().observation_sets() {
                    let n = s.raw_history_count(set);
                    prop_assert!(n >= prev_hist[set.bits() as usize]);
                    prev_hist[set.bits() as usize] = n;
                    if n > 0 {
                        let sum: u64 = s.index().partials(set).iter().map(|&p| s.raw_history_count_partial_at(p)).sum();
                        prop_assert_eq!(sum, n);
                    }
                }
            }
        }
    }
}
