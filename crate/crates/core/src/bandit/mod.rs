//! The sequential decision loop over a partition: corrected statistics, the
//! optimistic index, region selection and the refinement rules.

mod engine;
mod index;
mod refine;
mod stats;
mod ucb1;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::observations::LogError;
use crate::partition::{Metric, PartitionError, RegionId};
use crate::tree::{FitConfig, FitError};

pub use engine::{Engine, Proposal, StepError};
pub use index::{sample_arm, sample_box, select_region, ucb_index};
pub use refine::{mesh_refine, zooming_refine};
pub use stats::{corrected_stats, RegionStats};
pub use ucb1::Ucb1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Log(#[from] LogError),
    #[error("this engine is contextual; a context vector is required every round")]
    MissingContext,
    #[error("this engine is not contextual but a context was supplied")]
    UnexpectedContext,
    #[error("a proposal is already awaiting its reward")]
    ProposalPending,
    #[error("no proposal is awaiting a reward")]
    NoProposal,
    #[error("reward must be a finite number, got {0}")]
    InvalidReward(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Tucb,
    Ctucb,
    UniformMesh,
    Ucb1,
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "tucb" => Ok(Variant::Tucb),
            "ctucb" => Ok(Variant::Ctucb),
            "uniformmesh" => Ok(Variant::UniformMesh),
            "ucb1" => Ok(Variant::Ucb1),
            other => Err(format!("unknown algorithm '{other}' (expected tucb, ctucb, uniformmesh or ucb1)")),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Variant::Tucb => "tucb",
            Variant::Ctucb => "ctucb",
            Variant::UniformMesh => "uniformmesh",
            Variant::Ucb1 => "ucb1",
        };
        f.write_str(name)
    }
}

/// Confidence bonus added to the corrected mean.
///
/// With `n` the corrected count, the bonus is
/// - `Hoeffding`: `C * sqrt(4 ln t / n)`
/// - `VSchedule`: `beta_t / sqrt(n)` with `beta_t = v sqrt(ln t)`
/// - `ContextualSchedule`: `beta_t / sqrt(n)` with
///   `beta_t = v1 sqrt(ln t) + v2 |z|^v3`, `|z|` the Euclidean norm of the context
/// - `HorizonUcb1`: `sqrt(2 ln T / n)` with `T` the horizon
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Exploration {
    Hoeffding,
    VSchedule { v: f64 },
    ContextualSchedule { v1: f64, v2: f64, v3: f64 },
    HorizonUcb1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Refinement {
    Tree(FitConfig),
    Mesh,
    Zooming,
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub variant: Variant,
    /// Concentration scale.
    pub c: f64,
    /// Lipschitz scale multiplying region diameters.
    pub m: f64,
    pub exploration: Exploration,
    pub horizon: Option<u64>,
    pub refinement: Refinement,
    pub metric: Metric,
    pub seed: u64,
}

impl EngineConfig {
    /// Defaults for each algorithm.
    pub fn for_variant(variant: Variant) -> Self {
        let refinement = match variant {
            Variant::Tucb | Variant::Ctucb => Refinement::Tree(FitConfig::default()),
            Variant::UniformMesh => Refinement::Mesh,
            Variant::Ucb1 => Refinement::Fixed,
        };
        let (exploration, metric) = match variant {
            Variant::Ucb1 => (Exploration::HorizonUcb1, Metric::Discrete),
            _ => (Exploration::Hoeffding, Metric::Linf),
        };
        // C matches the standard deviation of the default noise U[-0.05, 0.05].
        let (c, m) = match variant {
            Variant::Ucb1 => (1.0, 0.0),
            _ => (0.03, 0.05),
        };
        Self { variant, c, m, exploration, horizon: None, refinement, metric, seed: 0 }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if !(self.c >= 0.0 && self.c.is_finite()) {
            return Err(EngineError::Config(format!("C must be a nonnegative number, got {}", self.c)));
        }
        if !(self.m >= 0.0 && self.m.is_finite()) {
            return Err(EngineError::Config(format!("M must be a nonnegative number, got {}", self.m)));
        }
        if self.horizon == Some(0) {
            return Err(EngineError::Config("horizon T must be at least 1".into()));
        }
        if matches!(self.exploration, Exploration::HorizonUcb1) && self.horizon.is_none() {
            return Err(EngineError::Config("the UCB1 bonus needs a horizon T".into()));
        }
        match &self.refinement {
            Refinement::Zooming if self.horizon.is_none_or(|t| t < 2) => {
                return Err(EngineError::Config("zooming refinement needs a horizon T >= 2".into()))
            }
            Refinement::Tree(fit) => fit.validate()?,
            _ => {}
        }
        Ok(())
    }
}

/// One played round, as written to decision traces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub t: u64,
    pub region_id: RegionId,
    pub arm: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<Vec<f64>>,
    pub reward: f64,
    pub ucb: f64,
    pub m: f64,
    pub n: u64,
    pub n0: u64,
    pub diameter: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regret: Option<f64>,
}
