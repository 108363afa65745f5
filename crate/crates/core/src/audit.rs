//! Checks the point-scattering inequalities on a played sequence.
//!
//! For rounds `t = 1..T` with `n0` the number of earlier points sharing the
//! region of `a_t` in the partition used at round `t`, and `n = max(1, n0)`:
//!
//! ```text
//! sum 1/n              <= e P ln(1 + (e - 1) T / P)
//! sum 1/(1 + n0)       <= P (1 + ln(T / P))
//! sum (1/(1 + n0))^a   <= P^a T^(1 - a) / (1 - a),   0 < a < 1
//! ```
//!
//! where `P` is the size of the final partition. The second bound decreases
//! once `P > T` and then no longer holds in general (one point and a
//! four-cell partition already break it). Only nonempty cells enter the
//! argument, and there are at most `T` of them, so the auditor evaluates the
//! second bound at `min(P, T)`.

use std::collections::HashMap;
use std::f64::consts::E;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::observations::ObservationLog;
use crate::partition::{Partition, PartitionError, RegionId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AuditError {
    #[error("nothing to audit: the trace has no rounds")]
    Empty,
    #[error("round {t}: corrected count {n_pre} is not max(1, {n0_pre})")]
    InconsistentCounts { t: u64, n_pre: u64, n0_pre: u64 },
    #[error("expected round {expected}, found {got}")]
    RoundOrder { expected: u64, got: u64 },
    #[error("round {t}: partition size {size} is smaller than the {prev} regions before it")]
    Shrinking { t: u64, prev: usize, size: usize },
    #[error("round {t}: partition sizes do not chain ({prev} after {size} in the preceding round)")]
    Unchained { t: u64, prev: usize, size: usize },
    #[error("alpha must lie strictly between 0 and 1, got {0}")]
    Alpha(f64),
    #[error(transparent)]
    Partition(#[from] PartitionError),
}

/// The quantities of one round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub t: u64,
    /// Size of the partition the point was binned in.
    pub prev_partition_size: usize,
    /// Size of the partition after refining on this point.
    pub partition_size: usize,
    pub n_pre: u64,
    pub n0_pre: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaCheck {
    pub alpha: f64,
    pub sum: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub rounds: u64,
    pub final_partition_size: usize,
    pub sum1: f64,
    pub bound1: f64,
    pub sum2: f64,
    pub bound2: f64,
    pub alphas: Vec<AlphaCheck>,
    pub pass: bool,
}

impl std::fmt::Display for AuditReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mark = |ok: bool| if ok { "ok" } else { "VIOLATED" };
        writeln!(f, "rounds T = {}, final partition size |P_T| = {}", self.rounds, self.final_partition_size)?;
        writeln!(f, "sum 1/n            = {:.6} <= {:.6}  {}", self.sum1, self.bound1, mark(self.sum1 <= self.bound1))?;
        writeln!(f, "sum 1/(1+n0)       = {:.6} <= {:.6}  {}", self.sum2, self.bound2, mark(self.sum2 <= self.bound2))?;
        for a in &self.alphas {
            let label = format!("sum (1/(1+n0))^{}", a.alpha);
            writeln!(f, "{label:<18} = {:.6} <= {:.6}  {}", a.sum, a.bound, mark(a.sum <= a.bound))?;
        }
        write!(f, "{}", if self.pass { "PASS" } else { "FAIL" })
    }
}

pub fn bound1(rounds: u64, partition_size: usize) -> f64 {
    let (t, p) = (rounds as f64, partition_size as f64);
    E * p * (1.0 + (E - 1.0) * t / p).ln()
}

pub fn bound2(rounds: u64, partition_size: usize) -> f64 {
    let t = rounds as f64;
    let p = (partition_size as f64).min(t);
    p * (1.0 + (t / p).ln())
}

pub fn bound3(rounds: u64, partition_size: usize, alpha: f64) -> f64 {
    let (t, p) = (rounds as f64, partition_size as f64);
    p.powf(alpha) * t.powf(1.0 - alpha) / (1.0 - alpha)
}

/// Evaluates the three sums against their bounds, one third-inequality check
/// per entry of `alphas`.
pub fn audit(records: &[AuditRecord], alphas: &[f64]) -> Result<AuditReport, AuditError> {
    let last = records.last().ok_or(AuditError::Empty)?;
    if let Some(&bad) = alphas.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
        return Err(AuditError::Alpha(bad));
    }
    let mut previous: Option<&AuditRecord> = None;
    for (i, r) in records.iter().enumerate() {
        let expected = i as u64 + 1;
        if r.t != expected {
            return Err(AuditError::RoundOrder { expected, got: r.t });
        }
        if r.n_pre != r.n0_pre.max(1) {
            return Err(AuditError::InconsistentCounts { t: r.t, n_pre: r.n_pre, n0_pre: r.n0_pre });
        }
        if r.partition_size < r.prev_partition_size {
            return Err(AuditError::Shrinking { t: r.t, prev: r.prev_partition_size, size: r.partition_size });
        }
        if let Some(p) = previous {
            if p.partition_size != r.prev_partition_size {
                return Err(AuditError::Unchained { t: r.t, prev: r.prev_partition_size, size: p.partition_size });
            }
        }
        previous = Some(r);
    }

    let rounds = last.t;
    let size = last.partition_size;
    let sum1: f64 = records.iter().map(|r| 1.0 / r.n_pre as f64).sum();
    let sum2: f64 = records.iter().map(|r| 1.0 / (1.0 + r.n0_pre as f64)).sum();
    let (b1, b2) = (bound1(rounds, size), bound2(rounds, size));
    let alphas: Vec<AlphaCheck> = alphas
        .iter()
        .map(|&alpha| AlphaCheck {
            alpha,
            sum: records.iter().map(|r| (1.0 / (1.0 + r.n0_pre as f64)).powf(alpha)).sum(),
            bound: bound3(rounds, size, alpha),
        })
        .collect();
    let pass = sum1 <= b1 && sum2 <= b2 && alphas.iter().all(|a| a.sum <= a.bound);
    Ok(AuditReport { rounds, final_partition_size: size, sum1, bound1: b1, sum2, bound2: b2, alphas, pass })
}

/// The record for playing `point` next, counting by brute force the logged
/// points that share its region in `partition`. `partition_size` is set to
/// the current size; it must be raised if the partition is refined before the
/// following round.
pub fn record_from_engine(
    partition: &Partition,
    log: &ObservationLog,
    point: &[f64],
) -> Result<AuditRecord, PartitionError> {
    let region = partition.region_of(point)?;
    let domain_hi = partition.domain().hi();
    let n0_pre = log.points().iter().filter(|p| region.contains(p, domain_hi)).count() as u64;
    Ok(AuditRecord {
        t: log.len() as u64 + 1,
        prev_partition_size: partition.len(),
        partition_size: partition.len(),
        n_pre: n0_pre.max(1),
        n0_pre,
    })
}

/// One step of a played sequence: either a refinement or a point.
#[derive(Debug, Clone, PartialEq)]
pub enum ReplayEvent {
    Split { region: RegionId, dim: usize, threshold: f64 },
    Point(Vec<f64>),
}

/// Rebuilds the audit records of a trace from its initial partition and its
/// interleaved refinements and points.
///
/// Each point remembers the region it currently lies in; a split reassigns
/// the points of the split region. Splits after the last point count toward
/// the final partition size.
pub fn replay(initial: &Partition, events: &[ReplayEvent]) -> Result<Vec<AuditRecord>, AuditError> {
    let mut partition = initial.clone();
    let mut points: Vec<Vec<f64>> = Vec::new();
    let mut owner: Vec<RegionId> = Vec::new();
    let mut counts: HashMap<RegionId, u64> = HashMap::new();
    let mut records: Vec<AuditRecord> = Vec::new();
    for event in events {
        match event {
            ReplayEvent::Split { region, dim, threshold } => {
                let split = partition.split_in_place(*region, *dim, *threshold)?;
                counts.remove(&split.parent);
                for (p, o) in points.iter().zip(owner.iter_mut()) {
                    if *o == split.parent {
                        *o = if p[split.dim] < split.threshold { split.lower } else { split.upper };
                        *counts.entry(*o).or_default() += 1;
                    }
                }
                if let Some(last) = records.last_mut() {
                    last.partition_size = partition.len();
                }
            }
            ReplayEvent::Point(point) => {
                let region = partition.region_of(point)?.id;
                let n0_pre = counts.get(&region).copied().unwrap_or(0);
                records.push(AuditRecord {
                    t: records.len() as u64 + 1,
                    prev_partition_size: partition.len(),
                    partition_size: partition.len(),
                    n_pre: n0_pre.max(1),
                    n0_pre,
                });
                *counts.entry(region).or_default() += 1;
                points.push(point.clone());
                owner.push(region);
            }
        }
    }
    Ok(records)
}
