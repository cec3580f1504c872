//! Features, state vectors, observation sets and partial state vectors.
//!
//! Features and their states are dense integer indices. A partial state
//! vector holds `None` for every feature that was not observed.
//!
//! Canonical orders used everywhere downstream:
//! - observation sets: by size, then lexicographically by member list;
//! - partial state vectors sharing a domain: lexicographically by the
//!   observed states, feature 0 most significant.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest feature count for which the power set is enumerated.
pub const MAX_FEATURES: usize = 20;

/// Default ceiling on the number of partial state vectors produced for one
/// observation set.
pub const DEFAULT_PARTIAL_LIMIT: u64 = 1_000_000;

/// Ceiling on the total number of partial state vectors that get a dense index.
pub const MAX_DENSE_PARTIALS: u64 = 1 << 24;

/// The features of a problem and the size of each feature's state alphabet.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureSpace {
    alphabet_sizes: Vec<usize>,
}

impl FeatureSpace {
    pub fn new(alphabet_sizes: Vec<usize>) -> Result<Self> {
        if let Some(i) = alphabet_sizes.iter().position(|&n| n == 0) {
            return Err(Error::Invalid(format!("feature {i} has an empty alphabet")));
        }
        Ok(Self { alphabet_sizes })
    }

    pub fn feature_count(&self) -> usize {
        self.alphabet_sizes.len()
    }

    pub fn alphabet_sizes(&self) -> &[usize] {
        &self.alphabet_sizes
    }

    pub fn alphabet_size(&self, feature: usize) -> usize {
        self.alphabet_sizes[feature]
    }

    /// Number of full state vectors, `Π |X_i|`.
    pub fn state_count(&self) -> Result<u64> {
        checked_product(self.alphabet_sizes.iter().map(|&n| n as u64), "state vectors")
    }

    /// Number of partial state vectors over all observation sets,
    /// `Π (|X_i| + 1)`.
    pub fn psi_total(&self) -> Result<u64> {
        checked_product(
            self.alphabet_sizes.iter().map(|&n| n as u64 + 1),
            "partial state vectors",
        )
    }

    /// `|P(D)|`.
    pub fn observation_set_count(&self) -> Result<u64> {
        self.check_power_set()?;
        Ok(1u64 << self.feature_count())
    }

    pub fn full_set(&self) -> ObservationSet {
        ObservationSet::full(self.feature_count())
    }

    fn check_power_set(&self) -> Result<()> {
        if self.feature_count() > MAX_FEATURES {
            return Err(Error::Capacity {
                what: "feature count for power-set enumeration",
                requested: self.feature_count() as u128,
                limit: MAX_FEATURES as u128,
            });
        }
        Ok(())
    }

    /// All `2^D` observation sets in canonical order.
    pub fn enumerate_observation_sets(&self) -> Result<Vec<ObservationSet>> {
        self.check_power_set()?;
        let d = self.feature_count();
        let mut out = Vec::with_capacity(1 << d);
        for size in 0..=d {
            let mut combo: Vec<usize> = (0..size).collect();
            loop {
                out.push(ObservationSet::from_sorted(&combo));
                // advance to the next combination in lexicographic order
                let mut i = size;
                while i > 0 && combo[i - 1] == d - size + i - 1 {
                    i -= 1;
                }
                if i == 0 {
                    break;
                }
                combo[i - 1] += 1;
                for j in i..size {
                    combo[j] = combo[j - 1] + 1;
                }
            }
        }
        Ok(out)
    }

    /// All partial state vectors whose domain equals `obs`, in canonical order.
    pub fn enumerate_partials(&self, obs: ObservationSet) -> Result<Vec<PartialStateVector>> {
        self.enumerate_partials_with_limit(obs, DEFAULT_PARTIAL_LIMIT)
    }

    pub fn enumerate_partials_with_limit(
        &self,
        obs: ObservationSet,
        limit: u64,
    ) -> Result<Vec<PartialStateVector>> {
        self.check_set(obs)?;
        let members: Vec<usize> = obs.members().collect();
        let count = checked_product(
            members.iter().map(|&i| self.alphabet_sizes[i] as u64),
            "partial state vectors for one observation set",
        )?;
        if count > limit {
            return Err(Error::Capacity {
                what: "partial state vectors for one observation set",
                requested: count as u128,
                limit: limit as u128,
            });
        }
        let mut out = Vec::with_capacity(count as usize);
        let mut digits = vec![0usize; members.len()];
        loop {
            let mut entries = vec![None; self.feature_count()];
            for (&feature, &state) in members.iter().zip(&digits) {
                entries[feature] = Some(state);
            }
            out.push(PartialStateVector(entries));
            // odometer, last member fastest
            let mut k = members.len();
            loop {
                if k == 0 {
                    return Ok(out);
                }
                k -= 1;
                digits[k] += 1;
                if digits[k] < self.alphabet_sizes[members[k]] {
                    break;
                }
                digits[k] = 0;
            }
        }
    }

    /// All full state vectors in lexicographic order (index order of
    /// [`FeatureSpace::state_index`]).
    pub fn enumerate_states(&self) -> Result<Vec<StateVector>> {
        let count = self.state_count()?;
        (0..count as usize).map(|i| Ok(self.state_at(i))).collect()
    }

    /// Dense mixed-radix index of a full state vector.
    pub fn state_index(&self, phi: &StateVector) -> usize {
        phi.0
            .iter()
            .zip(&self.alphabet_sizes)
            .fold(0, |acc, (&s, &n)| acc * n + s)
    }

    pub fn state_at(&self, mut index: usize) -> StateVector {
        let mut states = vec![0; self.feature_count()];
        for (slot, &n) in states.iter_mut().zip(&self.alphabet_sizes).rev() {
            *slot = index % n;
            index /= n;
        }
        StateVector(states)
    }

    pub fn check_set(&self, obs: ObservationSet) -> Result<()> {
        if let Some(i) = obs.members().find(|&i| i >= self.feature_count()) {
            return Err(Error::FeatureOutOfRange {
                index: i,
                feature_count: self.feature_count(),
            });
        }
        Ok(())
    }

    pub fn check_state(&self, phi: &StateVector) -> Result<()> {
        if phi.len() != self.feature_count() {
            return Err(Error::Invalid(format!(
                "state vector has {} entries, expected {}",
                phi.len(),
                self.feature_count()
            )));
        }
        for (i, (&s, &n)) in phi.0.iter().zip(&self.alphabet_sizes).enumerate() {
            if s >= n {
                return Err(Error::Invalid(format!(
                    "feature {i} state {s} outside alphabet of size {n}"
                )));
            }
        }
        Ok(())
    }

    pub fn check_partial(&self, psi: &PartialStateVector) -> Result<()> {
        if psi.len() != self.feature_count() {
            return Err(Error::Invalid(format!(
                "partial state vector has {} entries, expected {}",
                psi.len(),
                self.feature_count()
            )));
        }
        for (i, (entry, &n)) in psi.0.iter().zip(&self.alphabet_sizes).enumerate() {
            if let Some(s) = *entry {
                if s >= n {
                    return Err(Error::Invalid(format!(
                        "feature {i} state {s} outside alphabet of size {n}"
                    )));
                }
            }
        }
        Ok(())
    }
}

fn checked_product(mut factors: impl Iterator<Item = u64>, what: &'static str) -> Result<u64> {
    factors.try_fold(1u64, |acc, f| {
        acc.checked_mul(f).ok_or(Error::Capacity {
            what,
            requested: u128::from(u64::MAX) + 1,
            limit: u128::from(u64::MAX),
        })
    })
}

/// A subset of the features, stored as a bitmask (feature `i` is bit `i`).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ObservationSet(u32);

impl ObservationSet {
    pub const EMPTY: ObservationSet = ObservationSet(0);

    pub fn from_bits(bits: u32) -> Self {
        Self(bits)
    }

    pub fn full(feature_count: usize) -> Self {
        assert!(feature_count <= 32, "at most 32 features fit in an observation set");
        if feature_count == 32 {
            Self(u32::MAX)
        } else {
            Self((1u32 << feature_count) - 1)
        }
    }

    /// Builds a set from feature indices; fails on duplicates or indices
    /// that do not fit the bitmask.
    pub fn from_members(members: &[usize]) -> Result<Self> {
        let mut bits = 0u32;
        for &i in members {
            if i >= 32 {
                return Err(Error::FeatureOutOfRange {
                    index: i,
                    feature_count: 32,
                });
            }
            if bits & (1 << i) != 0 {
                return Err(Error::Invalid(format!("feature {i} listed twice")));
            }
            bits |= 1 << i;
        }
        Ok(Self(bits))
    }

    fn from_sorted(members: &[usize]) -> Self {
        Self(members.iter().fold(0, |acc, &i| acc | (1 << i)))
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, feature: usize) -> bool {
        feature < 32 && self.0 & (1 << feature) != 0
    }

    pub fn is_subset_of(self, other: ObservationSet) -> bool {
        self.0 & !other.0 == 0
    }

    /// Member features in ascending order.
    pub fn members(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                return None;
            }
            let i = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            Some(i)
        })
    }
}

impl fmt::Display for ObservationSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, i) in self.members().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{i}")?;
        }
        f.write_str("}")
    }
}

/// A realized state for every feature.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StateVector(pub Vec<usize>);

impl StateVector {
    pub fn new(states: Vec<usize>) -> Self {
        Self(states)
    }

    pub fn states(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// True iff `psi` agrees with this vector on every observed feature.
    pub fn is_consistent_with(&self, psi: &PartialStateVector) -> bool {
        psi.0
            .iter()
            .zip(&self.0)
            .all(|(entry, &s)| entry.is_none_or(|p| p == s))
    }
}

/// A state vector with unobserved features replaced by `None`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PartialStateVector(pub Vec<Option<usize>>);

impl PartialStateVector {
    pub fn missing(feature_count: usize) -> Self {
        Self(vec![None; feature_count])
    }

    pub fn entries(&self) -> &[Option<usize>] {
        &self.0
    }

    pub fn get(&self, feature: usize) -> Option<usize> {
        self.0[feature]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The features whose state is present.
    pub fn domain_set(&self) -> ObservationSet {
        ObservationSet(
            self.0
                .iter()
                .enumerate()
                .filter(|(_, e)| e.is_some())
                .fold(0, |acc, (i, _)| acc | (1 << i)),
        )
    }

    /// `self ⪯ other`: every observed entry of `self` is observed in
    /// `other` with the same state.
    pub fn is_substate_of(&self, other: &PartialStateVector) -> bool {
        self.0.len() == other.0.len()
            && self
                .0
                .iter()
                .zip(&other.0)
                .all(|(a, b)| a.is_none() || a == b)
    }
}

impl fmt::Display for PartialStateVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (k, e) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            match e {
                Some(s) => write!(f, "{s}")?,
                None => f.write_str("-")?,
            }
        }
        f.write_str(")")
    }
}

/// Reveals the features of `obs` from `phi`.
pub fn make_partial(phi: &StateVector, obs: ObservationSet) -> Result<PartialStateVector> {
    if let Some(i) = obs.members().find(|&i| i >= phi.len()) {
        return Err(Error::FeatureOutOfRange {
            index: i,
            feature_count: phi.len(),
        });
    }
    Ok(PartialStateVector(
        phi.0
            .iter()
            .enumerate()
            .map(|(i, &s)| obs.contains(i).then_some(s))
            .collect(),
    ))
}

/// Every substate of `psi`, including `psi` itself and the all-missing
/// vector, ordered by the canonical order of their domains.
pub fn substates_of(psi: &PartialStateVector) -> Result<Vec<PartialStateVector>> {
    let domain: Vec<usize> = psi
        .0
        .iter()
        .enumerate()
        .filter_map(|(i, e)| e.map(|_| i))
        .collect();
    if domain.len() > MAX_FEATURES {
        return Err(Error::Capacity {
            what: "substates of a partial state vector",
            requested: 1u128 << domain.len(),
            limit: 1u128 << MAX_FEATURES,
        });
    }
    let local = FeatureSpace::new(vec![1; domain.len()])?;
    Ok(local
        .enumerate_observation_sets()?
        .into_iter()
        .map(|sub| {
            let mut entries = vec![None; psi.len()];
            for k in sub.members() {
                entries[domain[k]] = psi.0[domain[k]];
            }
            PartialStateVector(entries)
        })
        .collect())
}

/// Dense indexing of every partial state vector of a feature space.
///
/// Each feature contributes a digit in radix `|X_i| + 1`: 0 for missing,
/// `s + 1` for state `s`, feature 0 most significant. Within one domain,
/// increasing index is the canonical lexicographic order.
#[derive(Clone, Debug)]
pub struct PartialIndex {
    space: FeatureSpace,
    strides: Vec<usize>,
    total: usize,
    sets: Vec<ObservationSet>,
    partials: Vec<Vec<usize>>,
}

impl PartialIndex {
    pub fn new(space: &FeatureSpace) -> Result<Self> {
        let total = space.psi_total()?;
        if total > MAX_DENSE_PARTIALS {
            return Err(Error::Capacity {
                what: "partial state vectors in a dense index",
                requested: total as u128,
                limit: MAX_DENSE_PARTIALS as u128,
            });
        }
        let sets = space.enumerate_observation_sets()?;
        let d = space.feature_count();
        let mut strides = vec![1usize; d];
        for i in (0..d.saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * (space.alphabet_size(i + 1) + 1);
        }
        let mut partials = vec![Vec::new(); 1 << d];
        for idx in 0..total as usize {
            let mut mask = 0u32;
            let mut rest = idx;
            for i in 0..d {
                if (rest / strides[i]) != 0 {
                    mask |= 1 << i;
                }
                rest %= strides[i];
            }
            partials[mask as usize].push(idx);
        }
        Ok(Self {
            space: space.clone(),
            strides,
            total: total as usize,
            sets,
            partials,
        })
    }

    pub fn space(&self) -> &FeatureSpace {
        &self.space
    }

    /// `Ψ_tot`.
    pub fn total(&self) -> usize {
        self.total
    }

    /// All observation sets in canonical order.
    pub fn observation_sets(&self) -> &[ObservationSet] {
        &self.sets
    }

    /// Dense indices of `Ψ⁺(obs)` in canonical order.
    pub fn partials(&self, obs: ObservationSet) -> &[usize] {
        &self.partials[obs.bits() as usize]
    }

    pub fn index_of(&self, psi: &PartialStateVector) -> usize {
        psi.0
            .iter()
            .zip(&self.strides)
            .map(|(e, &stride)| e.map_or(0, |s| (s + 1) * stride))
            .sum()
    }

    /// Index of `make_partial(phi, obs)` without building it.
    pub fn observe_index(&self, phi: &StateVector, obs: ObservationSet) -> usize {
        obs.members().map(|i| (phi.0[i] + 1) * self.strides[i]).sum()
    }

    pub fn partial_at(&self, index: usize) -> PartialStateVector {
        let mut rest = index;
        PartialStateVector(
            self.strides
                .iter()
                .map(|&stride| {
                    let digit = rest / stride;
                    rest %= stride;
                    digit.checked_sub(1)
                })
                .collect(),
        )
    }

    pub fn domain_of(&self, index: usize) -> ObservationSet {
        let mut rest = index;
        let mut bits = 0u32;
        for (i, &stride) in self.strides.iter().enumerate() {
            if rest / stride != 0 {
                bits |= 1 << i;
            }
            rest %= stride;
        }
        ObservationSet(bits)
    }

    /// Position of `index` within [`PartialIndex::partials`] of its domain.
    pub fn rank_in_domain(&self, index: usize) -> usize {
        let mut rest = index;
        let mut rank = 0;
        for (i, &stride) in self.strides.iter().enumerate() {
            let digit = rest / stride;
            rest %= stride;
            if digit != 0 {
                rank = rank * self.space.alphabet_size(i) + (digit - 1);
            }
        }
        rank
    }

    /// Calls `f` with the index of every substate of the partial at `index`.
    pub fn for_each_substate(&self, index: usize, mut f: impl FnMut(usize)) {
        let mut contrib = [0usize; MAX_FEATURES];
        let mut rest = index;
        let mut present = 0u32;
        let mut n = 0;
        for &stride in &self.strides {
            let digit = rest / stride;
            rest %= stride;
            if digit != 0 {
                contrib[n] = digit * stride;
                present |= 1 << n;
                n += 1;
            }
        }
        let mut sub = present;
        loop {
            let mut idx = 0;
            let mut bits = sub;
            while bits != 0 {
                idx += contrib[bits.trailing_zeros() as usize];
                bits &= bits - 1;
            }
            f(idx);
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & present;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn nursery() -> FeatureSpace {
        FeatureSpace::new(vec![4, 4, 2, 3, 3]).unwrap()
    }

    fn set(m: &[usize]) -> ObservationSet {
        ObservationSet::from_members(m).unwrap()
    }

    fn psi(e: &[Option<usize>]) -> PartialStateVector {
        PartialStateVector(e.to_vec())
    }

    #[test]
    fn make_partial_examples() {
        let phi = StateVector::new(vec![1, 0]);
        assert_eq!(make_partial(&phi, set(&[0])).unwrap(), psi(&[Some(1), None]));
        assert_eq!(make_partial(&phi, set(&[])).unwrap(), psi(&[None, None]));
        let phi3 = StateVector::new(vec![2, 1, 0]);
        assert_eq!(
            make_partial(&phi3, set(&[0, 1, 2])).unwrap(),
            psi(&[Some(2), Some(1), Some(0)])
        );
        assert!(matches!(
            make_partial(&phi, set(&[2])),
            Err(Error::FeatureOutOfRange { index: 2, .. })
        ));
    }

    #[test]
    fn domain_set_examples() {
        assert_eq!(psi(&[Some(1), None]).domain_set(), set(&[0]));
        assert_eq!(psi(&[None, None]).domain_set(), set(&[]));
        assert_eq!(psi(&[Some(2), Some(1), Some(0)]).domain_set(), set(&[0, 1, 2]));
    }

    #[test]
    fn consistency_and_substates() {
        let phi = StateVector::new(vec![1, 0]);
        assert!(phi.is_consistent_with(&psi(&[Some(1), None])));
        assert!(!phi.is_consistent_with(&psi(&[Some(0), None])));
        assert!(phi.is_consistent_with(&psi(&[None, None])));

        assert!(psi(&[Some(1), None]).is_substate_of(&psi(&[Some(1), Some(0)])));
        assert!(!psi(&[Some(1), None]).is_substate_of(&psi(&[Some(0), Some(0)])));
        assert!(psi(&[None, None]).is_substate_of(&psi(&[Some(0), Some(1)])));
    }

    #[test]
    fn observation_sets_in_canonical_order() {
        let two = FeatureSpace::new(vec![2, 2]).unwrap();
        assert_eq!(
            two.enumerate_observation_sets().unwrap(),
            vec![set(&[]), set(&[0]), set(&[1]), set(&[0, 1])]
        );
        let zero = FeatureSpace::new(vec![]).unwrap();
        assert_eq!(zero.enumerate_observation_sets().unwrap(), vec![set(&[])]);
        let five = FeatureSpace::new(vec![2; 5]).unwrap();
        assert_eq!(five.enumerate_observation_sets().unwrap().len(), 32);
        let three = FeatureSpace::new(vec![2; 3]).unwrap();
        let listed: Vec<String> = three
            .enumerate_observation_sets()
            .unwrap()
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert_eq!(
            listed,
            ["{}", "{0}", "{1}", "{2}", "{0,1}", "{0,2}", "{1,2}", "{0,1,2}"]
        );
    }

    #[test]
    fn power_set_refuses_large_feature_counts() {
        let big = FeatureSpace::new(vec![2; 21]).unwrap();
        assert!(matches!(
            big.enumerate_observation_sets(),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn partial_enumeration() {
        let space = FeatureSpace::new(vec![2, 3]).unwrap();
        assert_eq!(
            space.enumerate_partials(set(&[])).unwrap(),
            vec![psi(&[None, None])]
        );
        assert_eq!(
            space.enumerate_partials(set(&[0])).unwrap(),
            vec![psi(&[Some(0), None]), psi(&[Some(1), None])]
        );
        let full = space.enumerate_partials(set(&[0, 1])).unwrap();
        assert_eq!(full.len(), 6);
        assert_eq!(full[1], psi(&[Some(0), Some(1)]));
        assert!(matches!(
            space.enumerate_partials_with_limit(set(&[0, 1]), 5),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn nursery_partial_counts_by_enumeration() {
        let space = nursery();
        assert_eq!(space.enumerate_partials(space.full_set()).unwrap().len(), 288);
        let by_enumeration: usize = space
            .enumerate_observation_sets()
            .unwrap()
            .into_iter()
            .map(|obs| space.enumerate_partials(obs).unwrap().len())
            .sum();
        assert_eq!(by_enumeration, 1200);
        assert_eq!(space.psi_total().unwrap(), 1200);
    }

    #[test]
    fn psi_total_small_cases() {
        assert_eq!(FeatureSpace::new(vec![2]).unwrap().psi_total().unwrap(), 3);
        assert_eq!(FeatureSpace::new(vec![]).unwrap().psi_total().unwrap(), 1);
        let huge = FeatureSpace::new(vec![usize::MAX / 2; 3]).unwrap();
        assert!(huge.psi_total().is_err());
    }

    #[test]
    fn substates_examples() {
        let subs = substates_of(&psi(&[Some(1), Some(0)])).unwrap();
        assert_eq!(
            subs,
            vec![
                psi(&[None, None]),
                psi(&[Some(1), None]),
                psi(&[None, Some(0)]),
                psi(&[Some(1), Some(0)])
            ]
        );
        assert_eq!(substates_of(&psi(&[None, None])).unwrap(), vec![psi(&[None, None])]);
        assert_eq!(
            substates_of(&psi(&[Some(0), Some(1), Some(2), None])).unwrap().len(),
            8
        );
    }

    #[test]
    fn dense_index_matches_enumeration() {
        let space = nursery();
        let index = PartialIndex::new(&space).unwrap();
        assert_eq!(index.total(), 1200);
        for &obs in index.observation_sets() {
            let listed = space.enumerate_partials(obs).unwrap();
            let dense = index.partials(obs);
            assert_eq!(listed.len(), dense.len());
            for (rank, (p, &i)) in listed.iter().zip(dense).enumerate() {
                assert_eq!(index.index_of(p), i);
                assert_eq!(&index.partial_at(i), p);
                assert_eq!(index.domain_of(i), obs);
                assert_eq!(index.rank_in_domain(i), rank);
            }
        }
    }

    #[test]
    fn dense_substates_match_structural_ones() {
        let space = FeatureSpace::new(vec![2, 3, 2]).unwrap();
        let index = PartialIndex::new(&space).unwrap();
        for i in 0..index.total() {
            let p = index.partial_at(i);
            let mut dense = Vec::new();
            index.for_each_substate(i, |s| dense.push(s));
            dense.sort_unstable();
            let mut structural: Vec<usize> = substates_of(&p)
                .unwrap()
                .iter()
                .map(|s| index.index_of(s))
                .collect();
            structural.sort_unstable();
            assert_eq!(dense, structural);
        }
    }

    fn space_and_state() -> impl Strategy<Value = (FeatureSpace, StateVector)> {
        prop::collection::vec(1usize..4, 0..6).prop_flat_map(|sizes| {
            let states: Vec<_> = sizes.iter().map(|&n| 0..n).collect();
            (Just(FeatureSpace::new(sizes).unwrap()), states)
                .prop_map(|(s, v)| (s, StateVector::new(v)))
        })
    }

    proptest! {
        #[test]
        fn domain_of_observed_partial_is_the_observation_set(
            (space, phi) in space_and_state(), bits in any::<u32>()
        ) {
            let obs = ObservationSet::from_bits(bits & space.full_set().bits());
            let p = make_partial(&phi, obs).unwrap();
            prop_assert_eq!(p.domain_set(), obs);
            prop_assert!(phi.is_consistent_with(&p));
        }

        #[test]
        fn exactly_one_partial_per_set_is_consistent(
            (space, phi) in space_and_state(), bits in any::<u32>()
        ) {
            let obs = ObservationSet::from_bits(bits & space.full_set().bits());
            let consistent = space
                .enumerate_partials(obs)
                .unwrap()
                .iter()
                .filter(|p| phi.is_consistent_with(p))
                .count();
            prop_assert_eq!(consistent, 1);
        }

        #[test]
        fn substates_are_substates((space, phi) in space_and_state(), bits in any::<u32>()) {
            let obs = ObservationSet::from_bits(bits & space.full_set().bits());
            let p = make_partial(&phi, obs).unwrap();
            let subs = substates_of(&p).unwrap();
            prop_assert_eq!(subs.len(), 1usize << obs.len());
            prop_assert!(subs.iter().all(|s| s.is_substate_of(&p)));
        }

        #[test]
        fn psi_total_is_the_sum_over_sets((space, _) in space_and_state()) {
            let total: usize = space
                .enumerate_observation_sets()
                .unwrap()
                .into_iter()
                .map(|obs| space.enumerate_partials(obs).unwrap().len())
                .sum();
            prop_assert_eq!(total as u64, space.psi_total().unwrap());
        }
    }

    #[test]
    fn enumeration_is_stable() {
        let space = nursery();
        let render = || {
            space
                .enumerate_observation_sets()
                .unwrap()
                .into_iter()
                .flat_map(|obs| space.enumerate_partials(obs).unwrap())
                .map(|p| p.to_string())
                .collect::<Vec<_>>()
                .join(";")
        };
        assert_eq!(render(), render());
    }
}
