//! Greedy regression-tree refinement using the mean-absolute-error
//! reduction criterion.
//!
//! A node `N` is split into `N1`, `N2` along one coordinate so as to maximize
//!
//! ```text
//! MAE(N) - (|N1|/|N| MAE(N1) + |N2|/|N| MAE(N2)),   MAE(S) = mean |y - mean(S)|
//! ```
//!
//! and splitting stops once the best reduction falls below `eta`. Refitting
//! only ever refines the partition it is given, so successive partitions are
//! nested, and the result is a deterministic function of its inputs.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::observations::ObservationLog;
use crate::partition::{AppliedSplit, Binning, Metric, Partition, PartitionError, Region, RegionId};

/// Candidates whose reductions differ by less than this are treated as tied,
/// so the earlier one (lower dimension, then lower threshold) wins.
const TIE_TOLERANCE: f64 = 1e-13;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("invalid fit configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Partition(#[from] PartitionError),
}

/// Upper bound on the number of leaves, possibly growing with the number of
/// fitted observations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeafCap {
    Fixed(usize),
    /// `max(1, floor(n^exponent))` leaves after `n` observations.
    Power(f64),
}

impl LeafCap {
    pub fn at(&self, observations: usize) -> usize {
        match *self {
            LeafCap::Fixed(k) => k,
            LeafCap::Power(exponent) => ((observations as f64).powf(exponent).floor() as usize).max(1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeaturePolicy {
    /// Every coordinate is a split candidate.
    #[default]
    AllFeatures,
    /// A region at depth `k` may only split on coordinate `k mod d`.
    RoundRobin,
}

impl std::str::FromStr for FeaturePolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "all-features" | "all" => Ok(FeaturePolicy::AllFeatures),
            "round-robin" => Ok(FeaturePolicy::RoundRobin),
            other => Err(format!("unknown feature policy '{other}' (expected all-features or round-robin)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    /// Minimum MAE reduction required to split.
    pub eta: f64,
    pub max_leaves: LeafCap,
    pub max_depth: u32,
    /// Splits producing a child with a smaller diameter are not admissible.
    pub min_leaf_diameter: f64,
    pub feature_policy: FeaturePolicy,
    pub metric: Metric,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            eta: 1e-3,
            max_leaves: LeafCap::Power(0.75),
            max_depth: 48,
            min_leaf_diameter: 0.0,
            feature_policy: FeaturePolicy::AllFeatures,
            metric: Metric::Linf,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<(), FitError> {
        if !(self.eta > 0.0) {
            return Err(FitError::Config(format!("eta must be positive, got {}", self.eta)));
        }
        match self.max_leaves {
            LeafCap::Fixed(0) => return Err(FitError::Config("max_leaves must be at least 1".into())),
            LeafCap::Power(e) if !(e > 0.0 && e.is_finite()) => {
                return Err(FitError::Config(format!("leaf-cap exponent must be positive, got {e}")))
            }
            _ => {}
        }
        if self.max_depth == 0 {
            return Err(FitError::Config("max_depth must be at least 1".into()));
        }
        if !(self.min_leaf_diameter >= 0.0) {
            return Err(FitError::Config(format!(
                "min_leaf_diameter must be nonnegative, got {}",
                self.min_leaf_diameter
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitDecision {
    pub dim: usize,
    pub threshold: f64,
    pub reduction: f64,
}

/// Mean absolute deviation of `rewards` from their arithmetic mean.
///
/// Panics on an empty slice.
pub fn node_mae(rewards: &[f64]) -> f64 {
    assert!(!rewards.is_empty(), "node_mae of an empty node");
    let n = rewards.len() as f64;
    let mean = rewards.iter().sum::<f64>() / n;
    rewards.iter().map(|y| (y - mean).abs()).sum::<f64>() / n
}

/// Best MAE-reducing split of `samples` inside `region`, or `None` when no
/// admissible split reduces MAE by at least `config.eta`.
pub fn best_split(samples: &[(Vec<f64>, f64)], region: &Region, config: &FitConfig) -> Option<SplitDecision> {
    let points: Vec<&[f64]> = samples.iter().map(|(a, _)| a.as_slice()).collect();
    let rewards: Vec<f64> = samples.iter().map(|(_, y)| *y).collect();
    let members: Vec<usize> = (0..samples.len()).collect();
    best_split_among(&points, &rewards, &members, region, config)
}

fn best_split_among<P: AsRef<[f64]>>(
    points: &[P],
    rewards: &[f64],
    members: &[usize],
    region: &Region,
    config: &FitConfig,
) -> Option<SplitDecision> {
    let n = members.len();
    if n < 2 {
        return None;
    }
    let ys: Vec<f64> = members.iter().map(|&i| rewards[i]).collect();
    let parent_mae = node_mae(&ys);

    // Rank of each local sample in ascending reward order.
    let mut by_value: Vec<usize> = (0..n).collect();
    by_value.sort_by(|&a, &b| ys[a].total_cmp(&ys[b]).then(a.cmp(&b)));
    let sorted_values: Vec<f64> = by_value.iter().map(|&i| ys[i]).collect();
    let mut rank = vec![0usize; n];
    for (r, &i) in by_value.iter().enumerate() {
        rank[i] = r;
    }

    let dims: Vec<usize> = match config.feature_policy {
        FeaturePolicy::AllFeatures => (0..region.dims()).collect(),
        FeaturePolicy::RoundRobin => vec![region.depth as usize % region.dims()],
    };

    let mut best: Option<SplitDecision> = None;
    for dim in dims {
        let coord = |local: usize| points[members[local]].as_ref()[dim];
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| coord(a).total_cmp(&coord(b)).then(a.cmp(&b)));

        let mut left = RankTree::new(n);
        let mut right = RankTree::new(n);
        for i in 0..n {
            right.add(rank[i], ys[i]);
        }
        let mut left_sum = 0.0;

        for k in 0..n - 1 {
            let i = order[k];
            left.add(rank[i], ys[i]);
            right.remove(rank[i], ys[i]);
            left_sum += ys[i];

            let (a, b) = (coord(order[k]), coord(order[k + 1]));
            if a == b {
                continue;
            }
            let threshold = 0.5 * (a + b);
            if !(a < threshold && threshold < b) {
                continue;
            }
            if config.min_leaf_diameter > 0.0 && !children_admissible(region, dim, threshold, config) {
                continue;
            }
            let left_n = k + 1;
            let right_n = n - left_n;
            // Read the right sum from the tree rather than subtracting, which drifts.
            let right_sum = right.total_sum();
            let sad = left.abs_deviation(left_sum / left_n as f64, left_sum, &sorted_values)
                + right.abs_deviation(right_sum / right_n as f64, right_sum, &sorted_values);
            let reduction = parent_mae - sad / n as f64;

            let better = match best {
                None => true,
                Some(current) => reduction > current.reduction + TIE_TOLERANCE * current.reduction.abs().max(1.0),
            };
            if better {
                best = Some(SplitDecision { dim, threshold, reduction });
            }
        }
    }
    best.filter(|s| s.reduction >= config.eta)
}

fn children_admissible(region: &Region, dim: usize, threshold: f64, config: &FitConfig) -> bool {
    let mut lower = region.clone();
    lower.hi[dim] = threshold;
    let mut upper = region.clone();
    upper.lo[dim] = threshold;
    lower.diameter(config.metric) >= config.min_leaf_diameter
        && upper.diameter(config.metric) >= config.min_leaf_diameter
}

/// Fenwick tree over reward ranks holding (count, sum) so that
/// `sum |y - c|` over the stored rewards is available in `O(log n)`.
struct RankTree {
    count: Vec<i64>,
    sum: Vec<f64>,
}

impl RankTree {
    fn new(n: usize) -> Self {
        Self { count: vec![0; n + 1], sum: vec![0.0; n + 1] }
    }

    fn update(&mut self, rank: usize, dc: i64, ds: f64) {
        let mut i = rank + 1;
        while i < self.count.len() {
            self.count[i] += dc;
            self.sum[i] += ds;
            i += i & i.wrapping_neg();
        }
    }

    fn add(&mut self, rank: usize, y: f64) {
        self.update(rank, 1, y);
    }

    fn remove(&mut self, rank: usize, y: f64) {
        self.update(rank, -1, -y);
    }

    /// (count, sum) over ranks `< end`.
    fn prefix(&self, end: usize) -> (i64, f64) {
        let (mut c, mut s) = (0, 0.0);
        let mut i = end;
        while i > 0 {
            c += self.count[i];
            s += self.sum[i];
            i -= i & i.wrapping_neg();
        }
        (c, s)
    }

    fn total_sum(&self) -> f64 {
        self.prefix(self.count.len() - 1).1
    }

    /// `sum |y - center|` over stored rewards; `total` is their sum.
    fn abs_deviation(&self, center: f64, total: f64, sorted_values: &[f64]) -> f64 {
        let (n, _) = self.prefix(self.count.len() - 1);
        let below = sorted_values.partition_point(|&v| v < center);
        let (c_lo, s_lo) = self.prefix(below);
        let c_hi = n - c_lo;
        let s_hi = total - s_lo;
        (center * c_lo as f64 - s_lo) + (s_hi - center * c_hi as f64)
    }
}

/// Incremental refitter. Memoizes each leaf's best split by (region, sample
/// count); valid as long as a region's samples only ever grow by appending,
/// which holds when the fitter follows a single growing log.
#[derive(Debug, Clone)]
pub struct TreeFitter {
    config: FitConfig,
    memo: HashMap<RegionId, (usize, Option<SplitDecision>)>,
}

impl TreeFitter {
    pub fn new(config: FitConfig) -> Result<Self, FitError> {
        config.validate()?;
        Ok(Self { config, memo: HashMap::new() })
    }

    pub fn config(&self) -> &FitConfig {
        &self.config
    }

    /// Refines `partition` in place on the samples in `bins`, visiting leaves
    /// in ascending id order until no leaf has an admissible split or a cap
    /// is reached. Returns the splits applied.
    pub fn refine<P: AsRef<[f64]>>(
        &mut self,
        partition: &mut Partition,
        bins: &mut Binning,
        points: &[P],
        rewards: &[f64],
    ) -> Result<Vec<AppliedSplit>, FitError> {
        let cap = self.config.max_leaves.at(points.len());
        let mut applied = Vec::new();
        let mut queue: BTreeSet<RegionId> = partition.ids().collect();
        while let Some(id) = queue.pop_first() {
            if partition.len() >= cap {
                break;
            }
            let region = partition.get(id).expect("queued region exists");
            if region.depth >= self.config.max_depth {
                continue;
            }
            let members = bins.members(id);
            let decision = match self.memo.get(&id) {
                Some(&(count, decision)) if count == members.len() => decision,
                _ => {
                    let decision = best_split_among(points, rewards, members, region, &self.config);
                    self.memo.insert(id, (members.len(), decision));
                    decision
                }
            };
            if let Some(decision) = decision {
                let split = partition.split_in_place(id, decision.dim, decision.threshold)?;
                bins.apply_split(&split, points);
                self.memo.remove(&id);
                queue.insert(split.lower);
                queue.insert(split.upper);
                applied.push(split);
            }
        }
        Ok(applied)
    }
}

/// Refines `previous` on every observation in `log`.
pub fn refit(previous: &Partition, log: &ObservationLog, config: &FitConfig) -> Result<Partition, FitError> {
    let mut fitter = TreeFitter::new(config.clone())?;
    let mut partition = previous.clone();
    let mut bins = Binning::new(&partition, log.points())?;
    fitter.refine(&mut partition, &mut bins, log.points(), log.rewards())?;
    Ok(partition)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::{verify_nested, Domain};

    fn unit_region(d: usize) -> Region {
        Partition::trivial(Domain::unit(d)).regions()[0].clone()
    }

    fn four_samples() -> Vec<(Vec<f64>, f64)> {
        vec![(vec![0.1], 0.0), (vec![0.2], 0.0), (vec![0.8], 1.0), (vec![0.9], 1.0)]
    }

    #[test]
    fn node_mae_examples() {
        assert_eq!(node_mae(&[0.7]), 0.0);
        assert_eq!(node_mae(&[0.0, 1.0]), 0.5);
        assert_eq!(node_mae(&[0.0, 0.0, 1.0, 1.0]), 0.5);
    }

    #[test]
    #[should_panic]
    fn node_mae_rejects_empty() {
        node_mae(&[]);
    }

    #[test]
    fn step_data_splits_in_the_middle() {
        let s = best_split(&four_samples(), &unit_region(1), &FitConfig::default()).unwrap();
        assert_eq!(s.dim, 0);
        assert_eq!(s.threshold, 0.5);
        assert!((s.reduction - 0.5).abs() < 1e-15);
    }

    #[test]
    fn no_split_without_signal_or_candidates() {
        let cfg = FitConfig::default();
        let constant = vec![(vec![0.1], 0.4), (vec![0.9], 0.4)];
        assert_eq!(best_split(&constant, &unit_region(1), &cfg), None);
        let same_arm = vec![(vec![0.5], 0.0), (vec![0.5], 1.0)];
        assert_eq!(best_split(&same_arm, &unit_region(1), &cfg), None);
        assert_eq!(best_split(&[(vec![0.5], 0.0)], &unit_region(1), &cfg), None);
    }

    #[test]
    fn ties_prefer_lower_dimension() {
        // Identical structure along both coordinates.
        let samples = vec![(vec![0.1, 0.1], 0.0), (vec![0.9, 0.9], 1.0)];
        let s = best_split(&samples, &unit_region(2), &FitConfig::default()).unwrap();
        assert_eq!(s.dim, 0);
    }

    #[test]
    fn min_leaf_diameter_blocks_small_children() {
        let cfg = FitConfig { min_leaf_diameter: 0.6, ..FitConfig::default() };
        assert_eq!(best_split(&four_samples(), &unit_region(1), &cfg), None);
    }

    #[test]
    fn round_robin_uses_depth() {
        let cfg = FitConfig { feature_policy: FeaturePolicy::RoundRobin, ..FitConfig::default() };
        let samples = vec![(vec![0.5, 0.1], 0.0), (vec![0.5, 0.9], 1.0)];
        // Depth 0 may only split on dimension 0, where all samples coincide.
        assert_eq!(best_split(&samples, &unit_region(2), &cfg), None);
        let mut deeper = unit_region(2);
        deeper.depth = 1;
        assert_eq!(best_split(&samples, &deeper, &cfg).unwrap().dim, 1);
    }

    #[test]
    fn refit_examples() {
        let whole = Partition::trivial(Domain::unit(1));
        let cfg = FitConfig { max_leaves: LeafCap::Fixed(16), ..FitConfig::default() };
        assert_eq!(refit(&whole, &ObservationLog::new(), &cfg).unwrap(), whole);

        let log = ObservationLog::from_pairs(four_samples()).unwrap();
        let fitted = refit(&whole, &log, &cfg).unwrap();
        assert_eq!(fitted.len(), 2);
        assert_eq!(fitted.regions()[0].hi[0], 0.5);
        assert!(verify_nested(&whole, &fitted).unwrap().nested);
        assert_eq!(refit(&whole, &log, &cfg).unwrap().to_json(), fitted.to_json());
    }

    #[test]
    fn refit_respects_leaf_cap() {
        let pairs: Vec<(Vec<f64>, f64)> = (0..40).map(|i| (vec![i as f64 / 40.0], (i % 7) as f64 / 7.0)).collect();
        let log = ObservationLog::from_pairs(pairs).unwrap();
        let whole = Partition::trivial(Domain::unit(1));
        for cap in [1, 2, 5, 9] {
            let cfg = FitConfig { max_leaves: LeafCap::Fixed(cap), ..FitConfig::default() };
            assert!(refit(&whole, &log, &cfg).unwrap().len() <= cap);
        }
        let power = FitConfig::default();
        assert!(refit(&whole, &log, &power).unwrap().len() as f64 <= 40f64.powf(0.75));
    }

    #[test]
    fn refit_rejects_points_outside_domain() {
        let log = ObservationLog::from_pairs(vec![(vec![1.5], 0.0)]).unwrap();
        let err = refit(&Partition::trivial(Domain::unit(1)), &log, &FitConfig::default()).unwrap_err();
        assert!(matches!(err, FitError::Partition(PartitionError::OutsideDomain { dim: 0, .. })));
    }

    #[test]
    fn leaf_cap_schedule() {
        let cap = LeafCap::Power(0.75);
        assert_eq!(cap.at(0), 1);
        assert_eq!(cap.at(1), 1);
        assert_eq!(cap.at(2), 1);
        assert_eq!(cap.at(16), 8);
        for n in 1..5000 {
            assert!(cap.at(n) as f64 <= (n as f64).powf(0.75));
        }
    }

    #[test]
    fn invalid_configs() {
        assert!(FitConfig { eta: 0.0, ..FitConfig::default() }.validate().is_err());
        assert!(FitConfig { max_depth: 0, ..FitConfig::default() }.validate().is_err());
        assert!(FitConfig { max_leaves: LeafCap::Fixed(0), ..FitConfig::default() }.validate().is_err());
        assert!(FitConfig { min_leaf_diameter: -1.0, ..FitConfig::default() }.validate().is_err());
    }
}
