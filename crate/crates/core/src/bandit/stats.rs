use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::observations::ObservationLog;
use crate::partition::{Partition, PartitionError, RegionId};

/// Count, corrected count and corrected mean of one region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionStats {
    pub region_id: RegionId,
    /// Observations falling in the region.
    pub raw_count: u64,
    /// `max(1, raw_count)`.
    pub corrected_count: u64,
    /// Empirical mean reward, or 1 for an empty region.
    pub corrected_mean: f64,
}

impl RegionStats {
    pub fn from_sum(region_id: RegionId, raw_count: u64, reward_sum: f64) -> Self {
        let corrected_mean = if raw_count > 0 { reward_sum / raw_count as f64 } else { 1.0 };
        Self { region_id, raw_count, corrected_count: raw_count.max(1), corrected_mean }
    }

    pub fn empty(region_id: RegionId) -> Self {
        Self::from_sum(region_id, 0, 0.0)
    }
}

/// Statistics of every region of `partition` over the whole log, binning
/// each observation by the current partition.
pub fn corrected_stats(
    partition: &Partition,
    log: &ObservationLog,
) -> Result<BTreeMap<RegionId, RegionStats>, PartitionError> {
    let mut acc: BTreeMap<RegionId, (u64, f64)> = partition.ids().map(|id| (id, (0, 0.0))).collect();
    for (point, reward) in log.points().iter().zip(log.rewards()) {
        let region = partition.region_of(point)?;
        let entry = acc.get_mut(&region.id).expect("every region is registered");
        entry.0 += 1;
        entry.1 += reward;
    }
    Ok(acc.into_iter().map(|(id, (n0, sum))| (id, RegionStats::from_sum(id, n0, sum))).collect())
}
