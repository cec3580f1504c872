//! Context-free benchmark policies. They never observe a feature and so
//! never pay a cost.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::estimators::RoundRecord;

use super::{argmax, Policy, PolicyDecision};

/// `argmax_a mean_a + α sqrt(2 ln t / max{1, n_a})`; unplayed arms first.
pub fn ucb1_decide(counts: &[u64], means: &[f64], t: u64, alpha: f64) -> usize {
    if let Some(a) = counts.iter().position(|&n| n == 0) {
        return a;
    }
    let log_t = (t.max(1) as f64).ln();
    argmax(
        counts
            .iter()
            .zip(means)
            .map(|(&n, &m)| m + alpha * (2.0 * log_t / n.max(1) as f64).sqrt()),
    )
}

/// Uniform arm with probability `epsilon`, else the best mean.
pub fn eps_greedy_decide(means: &[f64], rng: &mut ChaCha8Rng, epsilon: f64) -> usize {
    if rng.random::<f64>() < epsilon {
        rng.random_range(0..means.len())
    } else {
        argmax(means.iter().copied())
    }
}

pub fn random_decide(rng: &mut ChaCha8Rng, action_count: usize) -> usize {
    rng.random_range(0..action_count)
}

#[derive(Clone, Debug)]
struct ArmStats {
    counts: Vec<u64>,
    sums: Vec<f64>,
}

impl ArmStats {
    fn new(actions: usize) -> Result<Self> {
        if actions == 0 {
            return Err(Error::Invalid("need at least one action".into()));
        }
        Ok(Self {
            counts: vec![0; actions],
            sums: vec![0.0; actions],
        })
    }

    fn means(&self) -> Vec<f64> {
        self.counts
            .iter()
            .zip(&self.sums)
            .map(|(&n, &s)| s / n.max(1) as f64)
            .collect()
    }

    fn update(&mut self, rec: &RoundRecord) {
        self.counts[rec.action] += 1;
        self.sums[rec.action] += rec.reward;
    }
}

pub struct Ucb1 {
    stats: ArmStats,
    alpha: f64,
}

impl Ucb1 {
    pub fn new(actions: usize, alpha: f64) -> Result<Self> {
        if !(alpha >= 0.0) {
            return Err(Error::Invalid(format!("alpha {alpha} must be non-negative")));
        }
        Ok(Self {
            stats: ArmStats::new(actions)?,
            alpha,
        })
    }
}

impl Policy for Ucb1 {
    fn decide(&mut self, t: u64) -> Result<PolicyDecision> {
        let a = ucb1_decide(&self.stats.counts, &self.stats.means(), t, self.alpha);
        Ok(PolicyDecision::blind(a))
    }

    fn observe(&mut self, record: &RoundRecord) -> Result<()> {
        self.stats.update(record);
        Ok(())
    }
}

pub struct EpsGreedy {
    stats: ArmStats,
    epsilon: f64,
    rng: ChaCha8Rng,
}

impl EpsGreedy {
    pub fn new(actions: usize, epsilon: f64, rng: ChaCha8Rng) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::Invalid(format!("epsilon {epsilon} outside [0,1]")));
        }
        Ok(Self {
            stats: ArmStats::new(actions)?,
            epsilon,
            rng,
        })
    }
}

impl Policy for EpsGreedy {
    fn decide(&mut self, _t: u64) -> Result<PolicyDecision> {
        let a = eps_greedy_decide(&self.stats.means(), &mut self.rng, self.epsilon);
        Ok(PolicyDecision::blind(a))
    }

    fn observe(&mut self, record: &RoundRecord) -> Result<()> {
        self.stats.update(record);
        Ok(())
    }
}

pub struct RandomPolicy {
    actions: usize,
    rng: ChaCha8Rng,
}

impl RandomPolicy {
    pub fn new(actions: usize, rng: ChaCha8Rng) -> Result<Self> {
        if actions == 0 {
            return Err(Error::Invalid("need at least one action".into()));
        }
        Ok(Self { actions, rng })
    }
}

impl Policy for RandomPolicy {
    fn decide(&mut self, _t: u64) -> Result<PolicyDecision> {
        Ok(PolicyDecision::blind(random_decide(&mut self.rng, self.actions)))
    }

    fn observe(&mut self, _record: &RoundRecord) -> Result<()> {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;

    use super::*;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn ucb1_cases() {
        assert_eq!(ucb1_decide(&[3, 0, 0], &[0.9, 0.0, 0.0], 4, 0.6), 1);
        assert_eq!(ucb1_decide(&[10, 2], &[0.5, 0.5], 12, 0.6), 1);
        assert_eq!(ucb1_decide(&[10, 2], &[0.6, 0.5], 12, 0.0), 0);
    }

    #[test]
    fn eps_greedy_extremes() {
        let mut r = rng(1);
        for _ in 0..100 {
            assert_eq!(eps_greedy_decide(&[0.1, 0.8, 0.3], &mut r, 0.0), 1);
            assert_eq!(eps_greedy_decide(&[0.0, 0.0, 0.0], &mut r, 0.0), 0);
        }
        let mut counts = [0u32; 3];
        for _ in 0..30_000 {
            counts[eps_greedy_decide(&[0.1, 0.8, 0.3], &mut r, 1.0)] += 1;
        }
        assert!(counts.iter().all(|&c| (9_000..11_000).contains(&c)), "{counts:?}");
    }

    #[test]
    fn random_is_uniform() {
        assert!((0..50).all(|_| random_decide(&mut rng(3), 1) == 0));
        let n = 100_000;
        let mut counts = [0u64; 3];
        let mut r = rng(7);
        for _ in 0..n {
            counts[random_decide(&mut r, 3)] += 1;
        }
        let expected = n as f64 / 3.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // 2 degrees of freedom, 99.9% quantile
        assert!(chi2 < 13.82, "{chi2}");
        let sigma = (n as f64 * (1.0 / 3.0) * (2.0 / 3.0)).sqrt();
        assert!(counts.iter().all(|&c| (c as f64 - expected).abs() < 3.0 * sigma));
    }

    #[test]
    fn seeded_policies_repeat() {
        let draw = |seed| {
            let mut p = RandomPolicy::new(3, rng(seed)).unwrap();
            (1..=50).map(|t| p.decide(t).unwrap().action_rule[0]).collect::<Vec<_>>()
        };
        assert_eq!(draw(11), draw(11));
        assert_ne!(draw(11), draw(12));
    }

    #[test]
    fn constructors_validate() {
        assert!(Ucb1::new(0, 0.5).is_err());
        assert!(Ucb1::new(2, -1.0).is_err());
        assert!(EpsGreedy::new(2, 1.5, rng(0)).is_err());
        assert!(RandomPolicy::new(0, rng(0)).is_err());
    }
}
