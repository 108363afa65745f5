use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::EngineError;

/// Classic finite-armed UCB1 with the horizon-dependent bonus
/// `sqrt(2 ln T / n)`. Unplayed arms count as one pull with mean 1.
#[derive(Debug, Clone)]
pub struct Ucb1 {
    horizon: u64,
    counts: Vec<u64>,
    sums: Vec<f64>,
    rng: ChaCha8Rng,
}

impl Ucb1 {
    pub fn new(arms: usize, horizon: u64, seed: u64) -> Result<Self, EngineError> {
        if arms == 0 {
            return Err(EngineError::Config("UCB1 needs at least one arm".into()));
        }
        if horizon == 0 {
            return Err(EngineError::Config("horizon T must be at least 1".into()));
        }
        Ok(Self { horizon, counts: vec![0; arms], sums: vec![0.0; arms], rng: ChaCha8Rng::seed_from_u64(seed) })
    }

    pub fn arms(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn index(&self, arm: usize) -> f64 {
        let pulls = self.counts[arm];
        let mean = if pulls == 0 { 1.0 } else { self.sums[arm] / pulls as f64 };
        let n = pulls.max(1) as f64;
        mean + (2.0 * (self.horizon as f64).ln() / n).sqrt()
    }

    pub fn choose(&mut self) -> usize {
        let mut best = f64::NEG_INFINITY;
        let mut ties = Vec::new();
        for arm in 0..self.arms() {
            let value = self.index(arm);
            if value > best {
                best = value;
                ties.clear();
                ties.push(arm);
            } else if value == best {
                ties.push(arm);
            }
        }
        if ties.len() == 1 {
            ties[0]
        } else {
            ties[self.rng.random_range(0..ties.len())]
        }
    }

    pub fn update(&mut self, arm: usize, reward: f64) {
        self.counts[arm] += 1;
        self.sums[arm] += reward;
    }
}
