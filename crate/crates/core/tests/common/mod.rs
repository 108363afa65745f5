#![allow(dead_code)]

use rand::Rng;
use treeucb_core::partition::{Domain, Partition, RegionId};

/// A partition of the unit cube built from `splits` random splits.
pub fn random_partition<R: Rng>(rng: &mut R, dims: usize, splits: usize) -> Partition {
    let mut p = Partition::trivial(Domain::unit(dims));
    for _ in 0..splits {
        random_split(rng, &mut p);
    }
    p
}

/// Splits a random region at a random interior threshold.
pub fn random_split<R: Rng>(rng: &mut R, p: &mut Partition) -> (RegionId, usize, f64) {
    loop {
        let region = p.regions()[rng.random_range(0..p.len())].clone();
        let dim = rng.random_range(0..p.dims());
        let (lo, hi) = (region.lo[dim], region.hi[dim]);
        let threshold = lo + (hi - lo) * rng.random_range(0.05..0.95);
        if threshold > lo && threshold < hi {
            p.split_in_place(region.id, dim, threshold).unwrap();
            return (region.id, dim, threshold);
        }
    }
}

pub fn random_point<R: Rng>(rng: &mut R, dims: usize) -> Vec<f64> {
    (0..dims).map(|_| rng.random::<f64>()).collect()
}
