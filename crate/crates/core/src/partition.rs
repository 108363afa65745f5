//! Axis-aligned box partitions of a bounded domain.
//!
//! Every region is a half-open box `[lo, hi)`, except that a region touching
//! the domain's upper face in some dimension is closed on that face. Under
//! this convention every domain point belongs to exactly one region, so the
//! region-selection map [`Partition::region_of`] is total and single-valued.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PartitionError {
    #[error("point has {got} coordinates but the domain has {expected} dimensions")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("coordinate {value} in dimension {dim} lies outside the domain interval [{lo}, {hi}]")]
    OutsideDomain { dim: usize, value: f64, lo: f64, hi: f64 },
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("unknown region {0}")]
    UnknownRegion(RegionId),
    #[error("threshold {threshold} is not strictly inside region {region} on dimension {dim} ({lo}, {hi})")]
    InvalidSplit { region: RegionId, dim: usize, threshold: f64, lo: f64, hi: f64 },
    #[error("partitions are defined over different domains")]
    DomainMismatch,
    #[error("invalid partition: {0}")]
    Invalid(String),
}

/// Stable region identifier. Ids are never reused within a refinement history.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RegionId(pub u32);

impl fmt::Display for RegionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Distance used for region diameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// Maximum edge length.
    #[default]
    Linf,
    /// Euclidean length of the box diagonal.
    L2,
    /// 0-1 metric over a discrete arm set: each region holds a single atom.
    Discrete,
}

impl std::str::FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "linf" => Ok(Metric::Linf),
            "l2" => Ok(Metric::L2),
            "discrete" => Ok(Metric::Discrete),
            other => Err(format!("unknown metric '{other}' (expected linf, l2 or discrete)")),
        }
    }
}

/// A closed box `[lo_1, hi_1] x ... x [lo_d, hi_d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Domain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, PartitionError> {
        if lo.is_empty() {
            return Err(PartitionError::InvalidDomain("at least one dimension is required".into()));
        }
        if lo.len() != hi.len() {
            return Err(PartitionError::InvalidDomain(format!(
                "{} lower bounds but {} upper bounds",
                lo.len(),
                hi.len()
            )));
        }
        for (i, (l, h)) in lo.iter().zip(&hi).enumerate() {
            if !(l.is_finite() && h.is_finite() && l < h) {
                return Err(PartitionError::InvalidDomain(format!(
                    "dimension {i}: need finite lo < hi, got [{l}, {h}]"
                )));
            }
        }
        Ok(Self { lo, hi })
    }

    /// The unit cube `[0, 1]^dims`.
    pub fn unit(dims: usize) -> Self {
        Self::cube(dims, 0.0, 1.0)
    }

    pub fn cube(dims: usize, lo: f64, hi: f64) -> Self {
        Self::new(vec![lo; dims], vec![hi; dims]).expect("valid cube")
    }

    /// Cartesian product `self x other`, with `self`'s coordinates first.
    pub fn product(&self, other: &Domain) -> Domain {
        let mut lo = self.lo.clone();
        lo.extend_from_slice(&other.lo);
        let mut hi = self.hi.clone();
        hi.extend_from_slice(&other.hi);
        Domain { lo, hi }
    }

    pub fn dims(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn check_point(&self, point: &[f64]) -> Result<(), PartitionError> {
        if point.len() != self.dims() {
            return Err(PartitionError::DimensionMismatch { expected: self.dims(), got: point.len() });
        }
        for (dim, &value) in point.iter().enumerate() {
            let (lo, hi) = (self.lo[dim], self.hi[dim]);
            if !(value >= lo && value <= hi) {
                return Err(PartitionError::OutsideDomain { dim, value, lo, hi });
            }
        }
        Ok(())
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        self.check_point(point).is_ok()
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(l, h)| h - l).product()
    }
}

/// One cell of a partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub id: RegionId,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    /// Number of splits separating this region from the whole domain.
    #[serde(default)]
    pub depth: u32,
}

impl Region {
    pub fn dims(&self) -> usize {
        self.lo.len()
    }

    pub fn edge(&self, dim: usize) -> f64 {
        self.hi[dim] - self.lo[dim]
    }

    pub fn diameter(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Linf => (0..self.dims()).map(|i| self.edge(i)).fold(0.0, f64::max),
            Metric::L2 => (0..self.dims()).map(|i| self.edge(i).powi(2)).sum::<f64>().sqrt(),
            Metric::Discrete => 0.0,
        }
    }

    /// Membership under the half-open convention; `domain_hi` closes the
    /// upper faces that coincide with the domain boundary.
    pub fn contains(&self, point: &[f64], domain_hi: &[f64]) -> bool {
        point.iter().enumerate().all(|(i, &x)| {
            x >= self.lo[i] && (x < self.hi[i] || (x == self.hi[i] && self.hi[i] == domain_hi[i]))
        })
    }

    /// Whether the closed box of this region contains `values` on the
    /// leading `values.len()` coordinates.
    pub fn slice_contains(&self, values: &[f64]) -> bool {
        values.iter().enumerate().all(|(i, &z)| z >= self.lo[i] && z <= self.hi[i])
    }

    pub fn is_subset_of(&self, other: &Region) -> bool {
        (0..self.dims()).all(|i| self.lo[i] >= other.lo[i] && self.hi[i] <= other.hi[i])
    }

    fn overlaps(&self, other: &Region) -> bool {
        (0..self.dims()).all(|i| self.lo[i] < other.hi[i] && other.lo[i] < self.hi[i])
    }

    fn volume(&self) -> f64 {
        (0..self.dims()).map(|i| self.edge(i)).product()
    }
}

/// A split that was applied to a partition: `parent` was replaced by
/// `lower = parent ∩ {x[dim] < threshold}` and `upper = parent ∩ {x[dim] >= threshold}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AppliedSplit {
    pub parent: RegionId,
    pub dim: usize,
    pub threshold: f64,
    pub lower: RegionId,
    pub upper: RegionId,
}

/// Result of [`verify_nested`].
#[derive(Debug, Clone, PartialEq)]
pub struct Nesting {
    pub nested: bool,
    /// On failure: a region of the fine partition together with a coarse
    /// region it overlaps without being contained in it.
    pub witness: Option<(Region, Region)>,
}

/// A finite set of disjoint boxes covering a [`Domain`].
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    domain: Domain,
    /// Sorted by ascending id.
    regions: Vec<Region>,
    generation: u64,
    history: Vec<AppliedSplit>,
}

impl Partition {
    /// The one-region partition `{domain}`.
    pub fn trivial(domain: Domain) -> Self {
        let region = Region { id: RegionId(0), lo: domain.lo.clone(), hi: domain.hi.clone(), depth: 0 };
        Self { domain, regions: vec![region], generation: 0, history: Vec::new() }
    }

    /// Builds a partition from explicit regions and validates that they form
    /// a disjoint cover of `domain`.
    pub fn from_regions(domain: Domain, mut regions: Vec<Region>) -> Result<Self, PartitionError> {
        regions.sort_by_key(|r| r.id);
        let partition = Self { domain, regions, generation: 0, history: Vec::new() };
        partition.validate()?;
        Ok(partition)
    }

    /// `k` unit cells `[0,1), [1,2), ..., [k-1,k]` with ids `0..k`, used for
    /// discrete arm sets.
    pub fn discrete_arms(k: usize) -> Result<Self, PartitionError> {
        if k == 0 {
            return Err(PartitionError::Invalid("at least one arm is required".into()));
        }
        let domain = Domain::new(vec![0.0], vec![k as f64])?;
        let regions = (0..k)
            .map(|i| Region { id: RegionId(i as u32), lo: vec![i as f64], hi: vec![(i + 1) as f64], depth: 0 })
            .collect();
        Self::from_regions(domain, regions)
    }

    pub fn validate(&self) -> Result<(), PartitionError> {
        let d = self.domain.dims();
        if self.regions.is_empty() {
            return Err(PartitionError::Invalid("a partition needs at least one region".into()));
        }
        let mut ids = BTreeSet::new();
        for r in &self.regions {
            if r.lo.len() != d || r.hi.len() != d {
                return Err(PartitionError::Invalid(format!("region {} has wrong dimensionality", r.id)));
            }
            if !ids.insert(r.id) {
                return Err(PartitionError::Invalid(format!("duplicate region id {}", r.id)));
            }
            for i in 0..d {
                if !(r.lo[i] < r.hi[i]) {
                    return Err(PartitionError::Invalid(format!("region {} is empty in dimension {i}", r.id)));
                }
                if r.lo[i] < self.domain.lo[i] || r.hi[i] > self.domain.hi[i] {
                    return Err(PartitionError::Invalid(format!("region {} leaves the domain", r.id)));
                }
            }
        }
        for (i, a) in self.regions.iter().enumerate() {
            for b in &self.regions[i + 1..] {
                if a.overlaps(b) {
                    return Err(PartitionError::Invalid(format!("regions {} and {} overlap", a.id, b.id)));
                }
            }
        }
        let covered: f64 = self.regions.iter().map(Region::volume).sum();
        let total = self.domain.volume();
        if (covered - total).abs() > 1e-9 * total {
            return Err(PartitionError::Invalid(format!(
                "regions cover volume {covered} of a domain with volume {total}"
            )));
        }
        Ok(())
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn dims(&self) -> usize {
        self.domain.dims()
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn set_generation(&mut self, generation: u64) {
        self.generation = generation;
    }

    pub fn ids(&self) -> impl Iterator<Item = RegionId> + '_ {
        self.regions.iter().map(|r| r.id)
    }

    pub fn get(&self, id: RegionId) -> Option<&Region> {
        self.regions.binary_search_by_key(&id, |r| r.id).ok().map(|i| &self.regions[i])
    }

    /// Splits applied to this value since construction, in order.
    pub fn history(&self) -> &[AppliedSplit] {
        &self.history
    }

    /// The region containing `point` (region selection function).
    pub fn region_of(&self, point: &[f64]) -> Result<&Region, PartitionError> {
        self.domain.check_point(point)?;
        self.locate(point).ok_or_else(|| {
            PartitionError::Invalid(format!("no region contains point {point:?}; partition is not a cover"))
        })
    }

    /// Like [`region_of`](Self::region_of) without the domain check.
    pub fn locate(&self, point: &[f64]) -> Option<&Region> {
        self.regions.iter().find(|r| r.contains(point, &self.domain.hi))
    }

    /// Returns a new partition with `region` replaced by its two children.
    pub fn split_region(&self, region: RegionId, dim: usize, threshold: f64) -> Result<Partition, PartitionError> {
        let mut next = self.clone();
        next.split_in_place(region, dim, threshold)?;
        Ok(next)
    }

    /// In-place variant of [`split_region`](Self::split_region). Children get
    /// ids `max + 1` (lower) and `max + 2` (upper), where `max` is the largest
    /// id currently present.
    pub fn split_in_place(&mut self, region: RegionId, dim: usize, threshold: f64) -> Result<AppliedSplit, PartitionError> {
        let pos = self
            .regions
            .binary_search_by_key(&region, |r| r.id)
            .map_err(|_| PartitionError::UnknownRegion(region))?;
        if dim >= self.dims() {
            return Err(PartitionError::DimensionMismatch { expected: self.dims(), got: dim + 1 });
        }
        let parent = &self.regions[pos];
        let (lo, hi) = (parent.lo[dim], parent.hi[dim]);
        if !(threshold > lo && threshold < hi) {
            return Err(PartitionError::InvalidSplit { region, dim, threshold, lo, hi });
        }
        let max_id = self.regions.last().map(|r| r.id.0).unwrap_or(0);
        let lower_id = RegionId(max_id + 1);
        let upper_id = RegionId(max_id + 2);

        let parent = self.regions.remove(pos);
        let mut lower = Region { id: lower_id, lo: parent.lo.clone(), hi: parent.hi.clone(), depth: parent.depth + 1 };
        lower.hi[dim] = threshold;
        let mut upper = Region { id: upper_id, lo: parent.lo, hi: parent.hi, depth: parent.depth + 1 };
        upper.lo[dim] = threshold;
        self.regions.push(lower);
        self.regions.push(upper);

        let split = AppliedSplit { parent: region, dim, threshold, lower: lower_id, upper: upper_id };
        self.history.push(split);
        Ok(split)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&PartitionRepr::from(self)).expect("partition serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, PartitionError> {
        let repr: PartitionRepr =
            serde_json::from_str(text).map_err(|e| PartitionError::Invalid(format!("malformed partition JSON: {e}")))?;
        repr.try_into()
    }
}

/// Checks that every region of `fine` lies inside some region of `coarse`.
pub fn verify_nested(coarse: &Partition, fine: &Partition) -> Result<Nesting, PartitionError> {
    if coarse.domain != fine.domain {
        return Err(PartitionError::DomainMismatch);
    }
    for f in &fine.regions {
        if coarse.regions.iter().any(|c| f.is_subset_of(c)) {
            continue;
        }
        let straddled = coarse
            .regions
            .iter()
            .find(|c| f.overlaps(c))
            .cloned()
            .expect("a cover always overlaps a nonempty region");
        return Ok(Nesting { nested: false, witness: Some((f.clone(), straddled)) });
    }
    Ok(Nesting { nested: true, witness: None })
}

/// Point indices grouped by the region that contains them.
///
/// Kept in ascending index order inside each region, so per-region sums
/// accumulated from a bin match a sequential pass over the log.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Binning {
    members: BTreeMap<RegionId, Vec<usize>>,
}

impl Binning {
    pub fn new<P: AsRef<[f64]>>(partition: &Partition, points: &[P]) -> Result<Self, PartitionError> {
        let mut members: BTreeMap<RegionId, Vec<usize>> = partition.ids().map(|id| (id, Vec::new())).collect();
        for (i, p) in points.iter().enumerate() {
            let region = partition.region_of(p.as_ref())?;
            members.get_mut(&region.id).expect("region registered").push(i);
        }
        Ok(Self { members })
    }

    pub fn members(&self, region: RegionId) -> &[usize] {
        self.members.get(&region).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn count(&self, region: RegionId) -> usize {
        self.members(region).len()
    }

    pub fn insert(&mut self, region: RegionId, index: usize) {
        self.members.entry(region).or_default().push(index);
    }

    /// Moves the parent's members into the two children of `split`.
    pub fn apply_split<P: AsRef<[f64]>>(&mut self, split: &AppliedSplit, points: &[P]) {
        let parent = self.members.remove(&split.parent).unwrap_or_default();
        let (lower, upper): (Vec<usize>, Vec<usize>) =
            parent.into_iter().partition(|&i| points[i].as_ref()[split.dim] < split.threshold);
        self.members.insert(split.lower, lower);
        self.members.insert(split.upper, upper);
    }
}

#[derive(Serialize, Deserialize)]
struct PartitionRepr {
    dims: usize,
    bounds: Vec<[f64; 2]>,
    regions: Vec<Region>,
}

impl From<&Partition> for PartitionRepr {
    fn from(p: &Partition) -> Self {
        Self {
            dims: p.dims(),
            bounds: p.domain.lo.iter().zip(&p.domain.hi).map(|(&l, &h)| [l, h]).collect(),
            regions: p.regions.clone(),
        }
    }
}

impl TryFrom<PartitionRepr> for Partition {
    type Error = PartitionError;

    fn try_from(repr: PartitionRepr) -> Result<Self, Self::Error> {
        if repr.bounds.len() != repr.dims {
            return Err(PartitionError::InvalidDomain(format!(
                "dims = {} but {} bounds given",
                repr.dims,
                repr.bounds.len()
            )));
        }
        let domain = Domain::new(
            repr.bounds.iter().map(|b| b[0]).collect(),
            repr.bounds.iter().map(|b| b[1]).collect(),
        )?;
        Partition::from_regions(domain, repr.regions)
    }
}

impl Serialize for Domain {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let bounds: Vec<[f64; 2]> = self.lo.iter().zip(&self.hi).map(|(&l, &h)| [l, h]).collect();
        bounds.serialize(serializer)
    }
}

/// Deserialized from a list of `[lo, hi]` pairs.
impl<'de> Deserialize<'de> for Domain {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let bounds = Vec::<[f64; 2]>::deserialize(deserializer)?;
        Domain::new(bounds.iter().map(|b| b[0]).collect(), bounds.iter().map(|b| b[1]).collect())
            .map_err(serde::de::Error::custom)
    }
}

impl Serialize for Partition {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        PartitionRepr::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Partition {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = PartitionRepr::deserialize(deserializer)?;
        Partition::try_from(repr).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn halves() -> Partition {
        Partition::trivial(Domain::unit(1)).split_region(RegionId(0), 0, 0.5).unwrap()
    }

    #[test]
    fn single_region_contains_everything() {
        let p = Partition::trivial(Domain::unit(2));
        assert_eq!(p.region_of(&[0.5, 0.5]).unwrap().id, RegionId(0));
        assert_eq!(p.region_of(&[1.0, 1.0]).unwrap().id, RegionId(0));
        assert_eq!(p.region_of(&[0.0, 1.0]).unwrap().id, RegionId(0));
    }

    #[test]
    fn boundary_point_goes_to_upper_child() {
        let p = halves();
        assert_eq!(p.region_of(&[0.5]).unwrap().id, RegionId(2));
        assert_eq!(p.region_of(&[0.49999]).unwrap().id, RegionId(1));
        assert_eq!(p.region_of(&[1.0]).unwrap().id, RegionId(2));
    }

    #[test]
    fn outside_point_names_dimension() {
        let p = Partition::trivial(Domain::unit(3));
        let err = p.region_of(&[0.2, 1.5, 0.1]).unwrap_err();
        assert!(matches!(err, PartitionError::OutsideDomain { dim: 1, .. }), "{err:?}");
        assert!(err.to_string().contains("dimension 1"));
    }

    #[test]
    fn diameters() {
        let unit = Partition::trivial(Domain::unit(2));
        let r = &unit.regions()[0];
        assert_eq!(r.diameter(Metric::Linf), 1.0);
        assert!((r.diameter(Metric::L2) - std::f64::consts::SQRT_2).abs() < 1e-15);
        let b = Region { id: RegionId(0), lo: vec![0.0, 0.0], hi: vec![0.5, 0.25], depth: 0 };
        assert_eq!(b.diameter(Metric::Linf), 0.5);
        assert_eq!(b.diameter(Metric::Discrete), 0.0);
    }

    #[test]
    fn nesting_examples() {
        let whole = Partition::trivial(Domain::unit(1));
        let h = halves();
        assert!(verify_nested(&h, &h).unwrap().nested);
        assert!(verify_nested(&whole, &h).unwrap().nested);

        let other = whole.split_region(RegionId(0), 0, 0.6).unwrap();
        let res = verify_nested(&h, &other).unwrap();
        assert!(!res.nested);
        let (fine, coarse) = res.witness.unwrap();
        assert_eq!((fine.lo[0], fine.hi[0]), (0.0, 0.6));
        assert_eq!((coarse.lo[0], coarse.hi[0]), (0.0, 0.5));
    }

    #[test]
    fn nesting_rejects_mismatched_domains() {
        let a = Partition::trivial(Domain::unit(1));
        let b = Partition::trivial(Domain::cube(1, 0.0, 2.0));
        assert_eq!(verify_nested(&a, &b), Err(PartitionError::DomainMismatch));
    }

    #[test]
    fn split_preserves_untouched_ids() {
        let p = halves();
        let q = p.split_region(RegionId(1), 0, 0.25).unwrap();
        assert_eq!(q.len(), 3);
        assert!(q.get(RegionId(2)).is_some());
        assert_eq!(q.ids().collect::<Vec<_>>(), vec![RegionId(2), RegionId(3), RegionId(4)]);
        assert!(verify_nested(&p, &q).unwrap().nested);
        assert_eq!(q.get(RegionId(3)).unwrap().depth, 2);
    }

    #[test]
    fn degenerate_split_is_rejected() {
        let p = halves();
        assert!(matches!(p.split_region(RegionId(1), 0, 0.0), Err(PartitionError::InvalidSplit { .. })));
        assert!(matches!(p.split_region(RegionId(1), 0, 0.5), Err(PartitionError::InvalidSplit { .. })));
        assert!(matches!(p.split_region(RegionId(9), 0, 0.2), Err(PartitionError::UnknownRegion(_))));
    }

    #[test]
    fn json_round_trip_and_validation() {
        let p = halves().split_region(RegionId(2), 0, 0.75).unwrap();
        let text = p.to_json();
        assert!(text.starts_with("{\"dims\":1,\"bounds\":[[0.0,1.0]]"));
        let back = Partition::from_json(&text).unwrap();
        assert_eq!(back.regions(), p.regions());

        let gap = r#"{"dims":1,"bounds":[[0,1]],"regions":[{"id":0,"lo":[0],"hi":[0.4]},{"id":1,"lo":[0.5],"hi":[1]}]}"#;
        assert!(Partition::from_json(gap).is_err());
        let overlap = r#"{"dims":1,"bounds":[[0,1]],"regions":[{"id":0,"lo":[0],"hi":[0.6]},{"id":1,"lo":[0.5],"hi":[1]}]}"#;
        assert!(Partition::from_json(overlap).is_err());
    }

    #[test]
    fn binning_follows_splits() {
        let points = vec![vec![0.1], vec![0.7], vec![0.4], vec![0.9]];
        let p = Partition::trivial(Domain::unit(1));
        let mut bins = Binning::new(&p, &points).unwrap();
        let mut q = p.clone();
        let split = q.split_in_place(RegionId(0), 0, 0.5).unwrap();
        bins.apply_split(&split, &points);
        assert_eq!(bins.members(RegionId(1)), &[0, 2]);
        assert_eq!(bins.members(RegionId(2)), &[1, 3]);
        assert_eq!(bins, Binning::new(&q, &points).unwrap());
    }
}
