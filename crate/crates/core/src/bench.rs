//! Synthetic objectives, noise, and regret bookkeeping.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::partition::Domain;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BenchError {
    #[error("unknown objective '{0}' (expected himmelblau, goldstein or arms:<m1>,<m2>,...)")]
    UnknownObjective(String),
    #[error("grid resolution must be at least 256, got {0}")]
    Grid(usize),
    #[error("invalid noise spec '{0}' (expected none, uniform:<sigma> or truncated-gaussian:<sigma>[:<clip>])")]
    Noise(String),
    #[error("invalid arm means '{0}': {1}")]
    Arms(String, String),
}

/// Negated Himmelblau function; maximum 0 at four points of `[-5, 5]^2`.
pub fn himmelblau_raw(x1: f64, x2: f64) -> f64 {
    -((x1 * x1 + x2 - 11.0).powi(2) + (x1 + x2 * x2 - 7.0).powi(2))
}

/// Negated Goldstein-Price function; maximum -3 at `(0, -1)` on `[-2, 2]^2`.
pub fn goldstein_raw(x1: f64, x2: f64) -> f64 {
    let a = 1.0
        + (x1 + x2 + 1.0).powi(2)
            * (19.0 - 14.0 * x1 + 3.0 * x1 * x1 - 14.0 * x2 + 6.0 * x1 * x2 + 3.0 * x2 * x2);
    let b = 30.0
        + (2.0 * x1 - 3.0 * x2).powi(2)
            * (18.0 - 32.0 * x1 + 12.0 * x1 * x1 + 48.0 * x2 - 36.0 * x1 * x2 + 27.0 * x2 * x2);
    -(a * b)
}

/// Something the bandit can be evaluated against, with a known optimum.
pub trait Objective {
    fn arm_domain(&self) -> Domain;

    fn context_domain(&self) -> Option<Domain> {
        None
    }

    /// Noiseless payoff.
    fn value(&self, context: Option<&[f64]>, arm: &[f64]) -> f64;

    /// Best noiseless payoff for the context.
    fn optimum(&self, context: Option<&[f64]>) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Benchmark {
    Himmelblau,
    Goldstein,
}

impl Benchmark {
    pub fn raw(self, x1: f64, x2: f64) -> f64 {
        match self {
            Benchmark::Himmelblau => himmelblau_raw(x1, x2),
            Benchmark::Goldstein => goldstein_raw(x1, x2),
        }
    }

    /// Half-width of the native square domain.
    pub fn native_half_width(self) -> f64 {
        match self {
            Benchmark::Himmelblau => 5.0,
            Benchmark::Goldstein => 2.0,
        }
    }

    pub fn raw_max(self) -> f64 {
        match self {
            Benchmark::Himmelblau => 0.0,
            Benchmark::Goldstein => -3.0,
        }
    }
}

impl FromStr for Benchmark {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "himmelblau" => Ok(Benchmark::Himmelblau),
            "goldstein" => Ok(Benchmark::Goldstein),
            _ => Err(BenchError::UnknownObjective(s.to_string())),
        }
    }
}

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Benchmark::Himmelblau => "himmelblau",
            Benchmark::Goldstein => "goldstein",
        })
    }
}

pub const DEFAULT_GRID: usize = 1024;

/// A benchmark moved to `[-0.5, 0.5]^2` with values scaled into `[0, 1]`.
///
/// The upper constant is the analytic maximum; the lower one is the minimum
/// over a `grid_n x grid_n` scan of the native domain, endpoints included.
/// Values below the scanned minimum are clamped to 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RescaledObjective {
    pub benchmark: Benchmark,
    pub f_min: f64,
    pub f_max: f64,
}

impl RescaledObjective {
    pub fn make(benchmark: Benchmark, grid_n: usize) -> Result<Self, BenchError> {
        if grid_n < 256 {
            return Err(BenchError::Grid(grid_n));
        }
        let w = benchmark.native_half_width();
        let step = 2.0 * w / (grid_n - 1) as f64;
        let mut f_min = f64::INFINITY;
        for i in 0..grid_n {
            let x1 = -w + step * i as f64;
            for j in 0..grid_n {
                f_min = f_min.min(benchmark.raw(x1, -w + step * j as f64));
            }
        }
        Ok(Self { benchmark, f_min, f_max: benchmark.raw_max() })
    }

    pub fn native(&self, u: &[f64]) -> (f64, f64) {
        let s = 2.0 * self.benchmark.native_half_width();
        (s * u[0], s * u[1])
    }

    pub fn eval(&self, u: &[f64]) -> f64 {
        let (x1, x2) = self.native(u);
        ((self.benchmark.raw(x1, x2) - self.f_min) / (self.f_max - self.f_min)).clamp(0.0, 1.0)
    }
}

impl Objective for RescaledObjective {
    fn arm_domain(&self) -> Domain {
        Domain::cube(2, -0.5, 0.5)
    }

    fn value(&self, _context: Option<&[f64]>, arm: &[f64]) -> f64 {
        self.eval(arm)
    }

    fn optimum(&self, _context: Option<&[f64]>) -> f64 {
        1.0
    }
}

/// Grid points used per context when searching for the best arm.
pub const CONTEXT_ORACLE_GRID: usize = 4096;

/// A 2-D benchmark read as context `z = u[0]` and one-dimensional arm
/// `a = u[1]`, with contexts drawn uniformly from `[-0.5, 0.5]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContextualObjective {
    pub base: RescaledObjective,
}

impl ContextualObjective {
    pub fn new(base: RescaledObjective) -> Self {
        Self { base }
    }

    /// Best value for context `z`: the best of `grid` evenly spaced arms,
    /// polished by a golden-section search between its grid neighbours.
    pub fn best_arm(&self, z: f64, grid: usize) -> (f64, f64) {
        let f = |a: f64| self.base.eval(&[z, a]);
        let step = 1.0 / (grid - 1) as f64;
        let mut best = (-0.5, f(-0.5));
        for i in 1..grid {
            let a = -0.5 + step * i as f64;
            let v = f(a);
            if v > best.1 {
                best = (a, v);
            }
        }
        let (mut lo, mut hi) = ((best.0 - step).max(-0.5), (best.0 + step).min(0.5));
        let g = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..60 {
            let (c, d) = (hi - g * (hi - lo), lo + g * (hi - lo));
            if f(c) > f(d) {
                hi = d;
            } else {
                lo = c;
            }
        }
        let a = 0.5 * (lo + hi);
        let v = f(a);
        if v > best.1 { (a, v) } else { best }
    }
}

impl Objective for ContextualObjective {
    fn arm_domain(&self) -> Domain {
        Domain::cube(1, -0.5, 0.5)
    }

    fn context_domain(&self) -> Option<Domain> {
        Some(Domain::cube(1, -0.5, 0.5))
    }

    fn value(&self, context: Option<&[f64]>, arm: &[f64]) -> f64 {
        let z = context.expect("contextual objective needs a context")[0];
        self.base.eval(&[z, arm[0]])
    }

    fn optimum(&self, context: Option<&[f64]>) -> f64 {
        let z = context.expect("contextual objective needs a context")[0];
        self.best_arm(z, CONTEXT_ORACLE_GRID).1
    }
}

/// A finite arm set; arm `i` is the point `[i]` and pays `means[i]` on average.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmMeans {
    pub means: Vec<f64>,
}

impl ArmMeans {
    pub fn index(&self, arm: &[f64]) -> usize {
        (arm[0].floor().max(0.0) as usize).min(self.means.len() - 1)
    }
}

impl FromStr for ArmMeans {
    type Err = BenchError;

    /// Parses `arms:0.2,0.5,0.8`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let list = s.strip_prefix("arms:").ok_or_else(|| BenchError::UnknownObjective(s.to_string()))?;
        let means: Vec<f64> = list
            .split(',')
            .map(|m| m.trim().parse::<f64>().map_err(|e| BenchError::Arms(s.to_string(), e.to_string())))
            .collect::<Result<_, _>>()?;
        if means.is_empty() || means.iter().any(|m| !m.is_finite()) {
            return Err(BenchError::Arms(s.to_string(), "means must be finite numbers".into()));
        }
        Ok(Self { means })
    }
}

impl Objective for ArmMeans {
    fn arm_domain(&self) -> Domain {
        Domain::new(vec![0.0], vec![self.means.len() as f64]).expect("nonempty arm set")
    }

    fn value(&self, _context: Option<&[f64]>, arm: &[f64]) -> f64 {
        self.means[self.index(arm)]
    }

    fn optimum(&self, _context: Option<&[f64]>) -> f64 {
        self.means.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Additive observation noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Noise {
    None,
    Uniform { sigma: f64 },
    /// Gaussian with standard deviation `sigma`, redrawn until `|e| <= clip`.
    TruncatedGaussian { sigma: f64, clip: f64 },
}

impl Default for Noise {
    fn default() -> Self {
        Noise::Uniform { sigma: 0.05 }
    }
}

impl Noise {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Noise::None => 0.0,
            Noise::Uniform { sigma: 0.0 } => 0.0,
            Noise::Uniform { sigma } => rng.random_range(-sigma..=sigma),
            Noise::TruncatedGaussian { sigma: 0.0, .. } => 0.0,
            Noise::TruncatedGaussian { sigma, clip } => {
                let normal = Normal::new(0.0, sigma).expect("validated sigma");
                loop {
                    let e: f64 = normal.sample(rng);
                    if e.abs() <= clip {
                        return e;
                    }
                }
            }
        }
    }
}

impl FromStr for Noise {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || BenchError::Noise(s.to_string());
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |p: &str| -> Result<f64, BenchError> {
            p.trim().parse::<f64>().ok().filter(|v| *v >= 0.0 && v.is_finite()).ok_or_else(err)
        };
        match parts.as_slice() {
            ["none"] => Ok(Noise::None),
            ["uniform", sigma] => Ok(Noise::Uniform { sigma: num(sigma)? }),
            ["truncated-gaussian", sigma] => {
                let sigma = num(sigma)?;
                Ok(Noise::TruncatedGaussian { sigma, clip: 3.0 * sigma })
            }
            ["truncated-gaussian", sigma, clip] => {
                let (sigma, clip) = (num(sigma)?, num(clip)?);
                if sigma > 0.0 && clip == 0.0 {
                    return Err(err());
                }
                Ok(Noise::TruncatedGaussian { sigma, clip })
            }
            _ => Err(err()),
        }
    }
}

impl fmt::Display for Noise {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Noise::None => write!(f, "none"),
            Noise::Uniform { sigma } => write!(f, "uniform:{sigma}"),
            Noise::TruncatedGaussian { sigma, clip } => write!(f, "truncated-gaussian:{sigma}:{clip}"),
        }
    }
}

/// A seeded noise source, kept apart from the engine's random stream.
#[derive(Debug, Clone)]
pub struct NoiseStream {
    noise: Noise,
    rng: ChaCha8Rng,
}

impl NoiseStream {
    pub fn new(noise: Noise, seed: u64) -> Self {
        Self { noise, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn next_noise(&mut self) -> f64 {
        self.noise.sample(&mut self.rng)
    }
}

/// Seeded i.i.d. uniform contexts on a box.
#[derive(Debug, Clone)]
pub struct ContextStream {
    domain: Domain,
    rng: ChaCha8Rng,
}

impl ContextStream {
    pub fn new(domain: Domain, seed: u64) -> Self {
        Self { domain, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn next_context(&mut self) -> Vec<f64> {
        let (lo, hi) = (self.domain.lo().to_vec(), self.domain.hi().to_vec());
        lo.iter().zip(&hi).map(|(&a, &b)| a + (b - a) * self.rng.random::<f64>()).collect()
    }
}

/// Per-round regret series computed from noiseless payoffs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RegretTrace {
    pub inst: Vec<f64>,
    pub cum: Vec<f64>,
    pub avg: Vec<f64>,
    pub best_so_far: Vec<f64>,
}

impl RegretTrace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a round with noiseless payoff `value` against `optimum`;
    /// returns the instantaneous regret.
    pub fn push(&mut self, value: f64, optimum: f64) -> f64 {
        let inst = optimum - value;
        let cum = self.cum.last().copied().unwrap_or(0.0) + inst;
        let best = self.best_so_far.last().copied().unwrap_or(f64::NEG_INFINITY).max(value);
        self.inst.push(inst);
        self.cum.push(cum);
        self.avg.push(cum / self.cum.len() as f64);
        self.best_so_far.push(best);
        inst
    }

    pub fn from_regrets(regrets: &[f64]) -> Self {
        let mut trace = Self::new();
        for &r in regrets {
            trace.push(1.0 - r, 1.0);
        }
        trace
    }

    pub fn len(&self) -> usize {
        self.inst.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inst.is_empty()
    }

    /// Average regret after `t` rounds (1-based).
    pub fn avg_at(&self, t: usize) -> f64 {
        self.avg[t - 1]
    }

    /// CSV with header `t,inst_regret,cum_regret,avg_regret,best_so_far`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,inst_regret,cum_regret,avg_regret,best_so_far\n");
        for i in 0..self.len() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                i + 1,
                self.inst[i],
                self.cum[i],
                self.avg[i],
                self.best_so_far[i]
            ));
        }
        out
    }
}

/// Regret of playing uniformly random arms for `rounds` rounds.
pub fn uniform_baseline<O: Objective + ?Sized>(objective: &O, rounds: usize, seed: u64, context_seed: u64) -> RegretTrace {
    let domain = objective.arm_domain();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut contexts = objective.context_domain().map(|d| ContextStream::new(d, context_seed));
    let mut trace = RegretTrace::new();
    for _ in 0..rounds {
        let z = contexts.as_mut().map(ContextStream::next_context);
        let arm: Vec<f64> = domain
            .lo()
            .iter()
            .zip(domain.hi())
            .map(|(&a, &b)| a + (b - a) * rng.random::<f64>())
            .collect();
        trace.push(objective.value(z.as_deref(), &arm), objective.optimum(z.as_deref()));
    }
    trace
}
