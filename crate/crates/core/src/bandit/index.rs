use std::collections::BTreeMap;

use rand::Rng;

use super::{EngineConfig, Exploration, RegionStats};
use crate::partition::{Metric, Region, RegionId};

/// Optimistic index of a region at round `t`.
///
/// `context` is only read by [`Exploration::ContextualSchedule`]. The
/// logarithmic bonus vanishes at `t = 1`.
pub fn ucb_index(stats: &RegionStats, diameter: f64, t: u64, config: &EngineConfig, context: Option<&[f64]>) -> f64 {
    let n = stats.corrected_count as f64;
    let ln_t = (t.max(1) as f64).ln();
    let bonus = match config.exploration {
        Exploration::Hoeffding => config.c * (4.0 * ln_t / n).sqrt(),
        Exploration::VSchedule { v } => v * ln_t.sqrt() / n.sqrt(),
        Exploration::ContextualSchedule { v1, v2, v3 } => {
            let norm = context.map_or(0.0, |z| z.iter().map(|x| x * x).sum::<f64>().sqrt());
            let beta = if v2 == 0.0 { v1 * ln_t.sqrt() } else { v1 * ln_t.sqrt() + v2 * norm.powf(v3) };
            beta / n.sqrt()
        }
        Exploration::HorizonUcb1 => {
            let horizon = config.horizon.expect("validated: the UCB1 bonus has a horizon");
            (2.0 * (horizon as f64).ln() / n).sqrt()
        }
    };
    stats.corrected_mean + bonus + config.m * diameter
}

/// Argmax over `indices`, scanning ids in ascending order. Values must be
/// bitwise equal to tie; ties are broken uniformly with one draw from `rng`.
pub fn select_region<R: Rng + ?Sized>(indices: &BTreeMap<RegionId, f64>, rng: &mut R) -> RegionId {
    assert!(!indices.is_empty(), "select_region needs at least one candidate");
    let mut best = f64::NEG_INFINITY;
    let mut ties: Vec<RegionId> = Vec::new();
    for (&id, &value) in indices {
        if value > best || ties.is_empty() {
            best = value;
            ties.clear();
            ties.push(id);
        } else if value == best {
            ties.push(id);
        }
    }
    if ties.len() == 1 {
        ties[0]
    } else {
        ties[rng.random_range(0..ties.len())]
    }
}

/// Uniform sample from the half-open box `[lo, hi)`.
pub fn sample_box<R: Rng + ?Sized>(lo: &[f64], hi: &[f64], rng: &mut R) -> Vec<f64> {
    lo.iter()
        .zip(hi)
        .map(|(&a, &b)| {
            if b <= a {
                return a;
            }
            let x = a + (b - a) * rng.random::<f64>();
            // Rounding can land exactly on the upper face.
            if x >= b { b.next_down().max(a) } else { x }
        })
        .collect()
}

/// Uniform arm from a region. Under the discrete metric every region is a
/// single arm, identified by its lower corner, and no randomness is used.
pub fn sample_arm<R: Rng + ?Sized>(region: &Region, metric: Metric, rng: &mut R) -> Vec<f64> {
    match metric {
        Metric::Discrete => region.lo.clone(),
        _ => sample_box(&region.lo, &region.hi, rng),
    }
}
