use std::collections::BTreeMap;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::index::{sample_arm, sample_box, select_region, ucb_index};
use super::refine::{mesh_refine_in_place, zooming_refine_in_place};
use super::{Decision, EngineConfig, EngineError, Refinement, RegionStats, Variant};
use crate::observations::ObservationLog;
use crate::partition::{AppliedSplit, Binning, Domain, Metric, Partition, PartitionError, RegionId};
use crate::tree::TreeFitter;

/// What the engine wants evaluated in round `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Proposal {
    pub t: u64,
    pub arm: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<Vec<f64>>,
    pub region_id: RegionId,
    pub ucb: f64,
    pub stats: RegionStats,
    pub diameter: f64,
    /// Refinements applied at the start of this round, before selection.
    pub splits: Vec<AppliedSplit>,
    pub partition_size: usize,
}

#[derive(Debug, Error)]
pub enum StepError<E: fmt::Debug + fmt::Display> {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("objective failed: {0}")]
    Observe(E),
}

#[derive(Debug, Clone)]
struct Pending {
    proposal: Proposal,
    rng_before: ChaCha8Rng,
}

/// A bandit over a box partition, driven either round by round with
/// [`ask`](Self::ask) and [`tell`](Self::tell) or with [`step`](Self::step).
///
/// For contextual engines the partition lives on the joint space with the
/// context coordinates first.
#[derive(Debug, Clone)]
pub struct Engine {
    config: EngineConfig,
    context_dims: usize,
    partition: Partition,
    log: ObservationLog,
    bins: Binning,
    /// Reward sum per region, accumulated in round order.
    sums: BTreeMap<RegionId, f64>,
    fitter: Option<TreeFitter>,
    rng: ChaCha8Rng,
    pending: Option<Pending>,
    warned_range: bool,
}

impl Engine {
    /// Starts from the one-region partition of `context_domain × arm_domain`.
    pub fn new(config: EngineConfig, arm_domain: Domain, context_domain: Option<Domain>) -> Result<Self, EngineError> {
        let (domain, context_dims) = match context_domain {
            Some(z) => (z.product(&arm_domain), z.dims()),
            None => (arm_domain, 0),
        };
        Self::with_partition(config, Partition::trivial(domain), context_dims)
    }

    pub fn with_partition(config: EngineConfig, partition: Partition, context_dims: usize) -> Result<Self, EngineError> {
        config.validate()?;
        if config.variant == Variant::Ctucb && context_dims == 0 {
            return Err(EngineError::Config("ctucb needs a context domain".into()));
        }
        if context_dims >= partition.dims() {
            return Err(EngineError::Config(format!(
                "{context_dims} context coordinates leave no arm coordinates in a {}-dimensional partition",
                partition.dims()
            )));
        }
        let fitter = match &config.refinement {
            Refinement::Tree(fit) => Some(TreeFitter::new(fit.clone())?),
            _ => None,
        };
        let bins = Binning::new(&partition, &[] as &[Vec<f64>])?;
        let sums = partition.ids().map(|id| (id, 0.0)).collect();
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        Ok(Self {
            config,
            context_dims,
            partition,
            log: ObservationLog::new(),
            bins,
            sums,
            fitter,
            rng,
            pending: None,
            warned_range: false,
        })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn log(&self) -> &ObservationLog {
        &self.log
    }

    /// Rounds completed so far.
    pub fn rounds(&self) -> u64 {
        self.log.len() as u64
    }

    pub fn context_dims(&self) -> usize {
        self.context_dims
    }

    pub fn arm_dims(&self) -> usize {
        self.partition.dims() - self.context_dims
    }

    pub fn pending(&self) -> Option<&Proposal> {
        self.pending.as_ref().map(|p| &p.proposal)
    }

    /// Cached statistics of every region.
    pub fn region_stats(&self) -> BTreeMap<RegionId, RegionStats> {
        self.partition.ids().map(|id| (id, self.stats_of(id))).collect()
    }

    fn stats_of(&self, id: RegionId) -> RegionStats {
        RegionStats::from_sum(id, self.bins.count(id) as u64, self.sums[&id])
    }

    /// Refines the partition on the current log, then proposes the arm for
    /// the next round.
    pub fn ask(&mut self, context: Option<&[f64]>) -> Result<Proposal, EngineError> {
        if self.pending.is_some() {
            return Err(EngineError::ProposalPending);
        }
        self.check_context(context)?;
        let t = self.rounds() + 1;
        let rng_before = self.rng.clone();
        let splits = self.refine(t)?;

        let metric = self.config.metric;
        let mut indices = BTreeMap::new();
        for region in self.partition.regions() {
            if let Some(z) = context {
                if !region.slice_contains(z) {
                    continue;
                }
            }
            let stats = self.stats_of(region.id);
            indices.insert(region.id, ucb_index(&stats, region.diameter(metric), t, &self.config, context));
        }
        assert!(!indices.is_empty(), "a cover always meets the context slice");
        let region_id = select_region(&indices, &mut self.rng);
        let region = self.partition.get(region_id).expect("selected region exists");
        let arm = if self.context_dims == 0 {
            sample_arm(region, metric, &mut self.rng)
        } else if metric == Metric::Discrete {
            region.lo[self.context_dims..].to_vec()
        } else {
            sample_box(&region.lo[self.context_dims..], &region.hi[self.context_dims..], &mut self.rng)
        };
        let proposal = Proposal {
            t,
            arm,
            context: context.map(<[f64]>::to_vec),
            region_id,
            ucb: indices[&region_id],
            stats: self.stats_of(region_id),
            diameter: region.diameter(metric),
            splits,
            partition_size: self.partition.len(),
        };
        self.pending = Some(Pending { proposal: proposal.clone(), rng_before });
        Ok(proposal)
    }

    /// Records the reward for the pending proposal.
    pub fn tell(&mut self, reward: f64) -> Result<Decision, EngineError> {
        let Some(pending) = self.pending.as_ref() else {
            return Err(EngineError::NoProposal);
        };
        if !reward.is_finite() {
            return Err(EngineError::InvalidReward(reward));
        }
        if !(0.0..=1.0).contains(&reward) && !self.warned_range {
            log::warn!("reward {reward} lies outside [0, 1]; it is used as given");
            self.warned_range = true;
        }
        let p = pending.proposal.clone();
        self.pending = None;
        self.log.record(p.arm.clone(), p.context.clone(), reward)?;
        let index = self.log.len() - 1;
        let landed = self.partition.region_of(&self.log.points()[index])?.id;
        self.bins.insert(landed, index);
        *self.sums.get_mut(&landed).expect("region registered") += reward;
        Ok(Decision {
            t: p.t,
            region_id: p.region_id,
            arm: p.arm,
            context: p.context,
            reward,
            ucb: p.ucb,
            m: p.stats.corrected_mean,
            n: p.stats.corrected_count,
            n0: p.stats.raw_count,
            diameter: p.diameter,
            regret: None,
        })
    }

    /// Adds an observation the engine did not propose, such as an earlier
    /// evaluation used to warm-start a run.
    pub fn record(&mut self, arm: Vec<f64>, context: Option<Vec<f64>>, reward: f64) -> Result<(), EngineError> {
        if self.pending.is_some() {
            return Err(EngineError::ProposalPending);
        }
        if !reward.is_finite() {
            return Err(EngineError::InvalidReward(reward));
        }
        self.check_context(context.as_deref())?;
        let mut point = context.clone().unwrap_or_default();
        point.extend_from_slice(&arm);
        let landed = self.partition.region_of(&point)?.id;
        self.log.record(arm, context, reward)?;
        self.bins.insert(landed, self.log.len() - 1);
        *self.sums.get_mut(&landed).expect("region registered") += reward;
        Ok(())
    }

    /// Withdraws the pending proposal and rewinds the random stream, so the
    /// next [`ask`](Self::ask) proposes the same arm again. Refinements
    /// already applied are kept: they depend only on the log.
    pub fn cancel(&mut self) -> Option<Proposal> {
        let pending = self.pending.take()?;
        self.rng = pending.rng_before;
        Some(pending.proposal)
    }

    /// One full round. If `observe` fails the proposal is withdrawn.
    pub fn step<E, F>(&mut self, context: Option<&[f64]>, observe: F) -> Result<Decision, StepError<E>>
    where
        E: fmt::Debug + fmt::Display,
        F: FnOnce(&Proposal) -> Result<f64, E>,
    {
        let proposal = self.ask(context)?;
        match observe(&proposal) {
            Ok(reward) => self.tell(reward).map_err(|e| {
                self.cancel();
                StepError::Engine(e)
            }),
            Err(e) => {
                self.cancel();
                Err(StepError::Observe(e))
            }
        }
    }

    /// Refines on the full log as the next round would, without proposing.
    /// Returns the splits applied.
    pub fn finalize(&mut self) -> Result<Vec<AppliedSplit>, EngineError> {
        if self.pending.is_some() {
            return Err(EngineError::ProposalPending);
        }
        self.refine(self.rounds() + 1)
    }

    fn check_context(&self, context: Option<&[f64]>) -> Result<(), EngineError> {
        match (context, self.context_dims) {
            (None, 0) => Ok(()),
            (None, _) => Err(EngineError::MissingContext),
            (Some(_), 0) => Err(EngineError::UnexpectedContext),
            (Some(z), k) => {
                if z.len() != k {
                    return Err(PartitionError::DimensionMismatch { expected: k, got: z.len() }.into());
                }
                let domain = self.partition.domain();
                for (dim, &value) in z.iter().enumerate() {
                    let (lo, hi) = (domain.lo()[dim], domain.hi()[dim]);
                    if !(value >= lo && value <= hi) {
                        return Err(PartitionError::OutsideDomain { dim, value, lo, hi }.into());
                    }
                }
                Ok(())
            }
        }
    }

    fn refine(&mut self, t: u64) -> Result<Vec<AppliedSplit>, EngineError> {
        let splits = match &self.config.refinement {
            Refinement::Fixed => Vec::new(),
            Refinement::Tree(_) => {
                let fitter = self.fitter.as_mut().expect("tree refinement owns a fitter");
                fitter.refine(&mut self.partition, &mut self.bins, self.log.points(), self.log.rewards())?
            }
            Refinement::Mesh => {
                let splits = mesh_refine_in_place(&mut self.partition, t);
                for split in &splits {
                    self.bins.apply_split(split, self.log.points());
                }
                splits
            }
            Refinement::Zooming => {
                let horizon = self.config.horizon.expect("validated: zooming has a horizon");
                zooming_refine_in_place(&mut self.partition, &mut self.bins, self.log.points(), horizon, self.config.metric)
            }
        };
        for split in &splits {
            self.sums.remove(&split.parent);
            for child in [split.lower, split.upper] {
                let sum = self.bins.members(child).iter().fold(0.0, |acc, &i| acc + self.log.rewards()[i]);
                self.sums.insert(child, sum);
            }
        }
        self.partition.set_generation(t - 1);
        Ok(splits)
    }
}
