use crate::observations::ObservationLog;
use crate::partition::{AppliedSplit, Binning, Metric, Partition, PartitionError, Region, RegionId};

/// Uniform-mesh refinement for round `t`: while the cells' edge exceeds
/// `t^(-1/(d+2))`, every cell is halved along every dimension.
pub fn mesh_refine(partition: &Partition, t: u64) -> Partition {
    let mut out = partition.clone();
    mesh_refine_in_place(&mut out, t);
    out
}

pub(crate) fn mesh_refine_in_place(partition: &mut Partition, t: u64) -> Vec<AppliedSplit> {
    let d = partition.dims();
    let threshold = (t.max(1) as f64).powf(-1.0 / (d as f64 + 2.0));
    let mut applied = Vec::new();
    while mesh_edge(partition) > threshold {
        let ids: Vec<RegionId> = partition.ids().collect();
        for id in ids {
            let mut pieces = vec![id];
            for dim in 0..d {
                let mut next = Vec::with_capacity(pieces.len() * 2);
                for piece in pieces {
                    let region = partition.get(piece).expect("piece exists");
                    let mid = 0.5 * (region.lo[dim] + region.hi[dim]);
                    let split = partition.split_in_place(piece, dim, mid).expect("midpoint split is interior");
                    next.extend([split.lower, split.upper]);
                    applied.push(split);
                }
                pieces = next;
            }
        }
    }
    applied
}

fn mesh_edge(partition: &Partition) -> f64 {
    partition.regions().iter().map(|r| r.diameter(Metric::Linf)).fold(0.0, f64::max)
}

/// Zooming refinement: bisects, along its longest edge, every region whose
/// diameter exceeds `sqrt(8 ln T / n)`, until no region does.
pub fn zooming_refine(
    partition: &Partition,
    log: &ObservationLog,
    horizon: u64,
    metric: Metric,
) -> Result<Partition, PartitionError> {
    let mut out = partition.clone();
    let mut bins = Binning::new(&out, log.points())?;
    zooming_refine_in_place(&mut out, &mut bins, log.points(), horizon, metric);
    Ok(out)
}

pub(crate) fn zooming_refine_in_place<P: AsRef<[f64]>>(
    partition: &mut Partition,
    bins: &mut Binning,
    points: &[P],
    horizon: u64,
    metric: Metric,
) -> Vec<AppliedSplit> {
    let ln_horizon = (horizon as f64).ln();
    let violates = |region: &Region, bins: &Binning| {
        let n = bins.count(region.id).max(1) as f64;
        region.diameter(metric) > (8.0 * ln_horizon / n).sqrt()
    };
    let mut applied = Vec::new();
    let mut queue: std::collections::BTreeSet<RegionId> = partition.ids().collect();
    while let Some(id) = queue.pop_first() {
        let region = partition.get(id).expect("queued region exists");
        if !violates(region, bins) {
            continue;
        }
        let dim = longest_edge(region);
        let mid = 0.5 * (region.lo[dim] + region.hi[dim]);
        if !(mid > region.lo[dim] && mid < region.hi[dim]) {
            // The box cannot be bisected any further in floating point.
            continue;
        }
        let split = partition.split_in_place(id, dim, mid).expect("midpoint split is interior");
        bins.apply_split(&split, points);
        queue.extend([split.lower, split.upper]);
        applied.push(split);
    }
    applied
}

fn longest_edge(region: &Region) -> usize {
    let mut best = 0;
    for dim in 1..region.dims() {
        if region.edge(dim) > region.edge(best) {
            best = dim;
        }
    }
    best
}
