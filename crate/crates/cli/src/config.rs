//! Run configuration, resolved from four layers: command-line flags, then
//! `TREEUCB_*` environment variables, then a flat `key = value` file, then
//! built-in defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use serde::{Deserialize, Serialize};
use treeucb_core::bandit::{EngineConfig, Exploration, Refinement, Variant};
use treeucb_core::bench::{ArmMeans, Benchmark, Noise, DEFAULT_GRID};
use treeucb_core::partition::{Domain, Metric};
use treeucb_core::tree::{FeaturePolicy, FitConfig, LeafCap};

use crate::CliError;

pub const ENV_PREFIX: &str = "TREEUCB_";
pub const DEFAULT_HORIZON: u64 = 1000;

/// Flags shared by `run`, `serve` and `sweep`. Every flag can also be set
/// through `TREEUCB_<NAME>` (upper case, dashes as underscores) or as
/// `name = value` in the file given by `--config`.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Flat `key = value` file with defaults for any flag below.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// tucb, ctucb, uniformmesh or ucb1 [default: tucb]
    #[arg(long, value_name = "ALGO")]
    pub algo: Option<String>,
    /// himmelblau, goldstein, contextual:himmelblau, contextual:goldstein,
    /// arms:<m1>,<m2>,... or external [default: himmelblau]
    #[arg(long, value_name = "NAME")]
    pub objective: Option<String>,
    /// Number of rounds [default: 1000; required for ucb1 and zooming]
    #[arg(long = "T", value_name = "ROUNDS")]
    pub horizon: Option<String>,
    /// Engine seed [default: 0]
    #[arg(long, value_name = "N")]
    pub seed: Option<String>,
    /// Noise seed [default: seed + 1]
    #[arg(long, value_name = "N")]
    pub noise_seed: Option<String>,
    /// Context seed [default: seed + 2]
    #[arg(long, value_name = "N")]
    pub context_seed: Option<String>,
    /// none, uniform:<sigma> or truncated-gaussian:<sigma>[:<clip>] [default: uniform:0.05]
    #[arg(long, value_name = "SPEC")]
    pub noise: Option<String>,
    /// Concentration scale C [default: 0.03; 1 for ucb1]
    #[arg(long = "C", value_name = "X")]
    pub c: Option<String>,
    /// Lipschitz scale M [default: 0.05; 0 for ucb1]
    #[arg(long = "M", value_name = "X")]
    pub m: Option<String>,
    /// hoeffding, v:<v> or contextual:<v1>,<v2>,<v3> [default: hoeffding; horizon-ucb1 for ucb1]
    #[arg(long, value_name = "SPEC")]
    pub exploration: Option<String>,
    /// tree, mesh, zooming or fixed [default: by algorithm]
    #[arg(long, value_name = "RULE")]
    pub refinement: Option<String>,
    /// Minimum MAE reduction for a tree split [default: 0.001]
    #[arg(long, value_name = "X")]
    pub eta: Option<String>,
    /// Leaf cap: an integer, or pow:<e> for floor(n^e) [default: pow:0.75]
    #[arg(long, value_name = "CAP")]
    pub max_leaves: Option<String>,
    /// [default: 48]
    #[arg(long, value_name = "N")]
    pub max_depth: Option<String>,
    /// [default: 0]
    #[arg(long, value_name = "X")]
    pub min_leaf_diameter: Option<String>,
    /// all-features or round-robin [default: all-features]
    #[arg(long, value_name = "POLICY")]
    pub feature_policy: Option<String>,
    /// linf, l2 or discrete [default: linf; discrete for ucb1]
    #[arg(long, value_name = "METRIC")]
    pub metric: Option<String>,
    /// Grid resolution of the range-scaling scan [default: 1024]
    #[arg(long, value_name = "N")]
    pub grid: Option<String>,
    /// Arm box for external objectives, as lo:hi per dimension [default: -0.5:0.5,-0.5:0.5]
    #[arg(long, value_name = "BOX")]
    pub bounds: Option<String>,
    /// Context box for external contextual runs, as lo:hi per dimension
    #[arg(long, value_name = "BOX")]
    pub context_bounds: Option<String>,
    /// Exponents for the third scattering inequality [default: 0.3,0.5,0.9]
    #[arg(long, value_name = "LIST")]
    pub alpha: Option<String>,
    /// Output directory [default: treeucb-out]
    #[arg(long, value_name = "DIR")]
    pub out: Option<String>,
}

impl RunArgs {
    fn flags(&self) -> Vec<(&'static str, Option<&String>)> {
        vec![
            ("algo", self.algo.as_ref()),
            ("objective", self.objective.as_ref()),
            ("t", self.horizon.as_ref()),
            ("seed", self.seed.as_ref()),
            ("noise_seed", self.noise_seed.as_ref()),
            ("context_seed", self.context_seed.as_ref()),
            ("noise", self.noise.as_ref()),
            ("c", self.c.as_ref()),
            ("m", self.m.as_ref()),
            ("exploration", self.exploration.as_ref()),
            ("refinement", self.refinement.as_ref()),
            ("eta", self.eta.as_ref()),
            ("max_leaves", self.max_leaves.as_ref()),
            ("max_depth", self.max_depth.as_ref()),
            ("min_leaf_diameter", self.min_leaf_diameter.as_ref()),
            ("feature_policy", self.feature_policy.as_ref()),
            ("metric", self.metric.as_ref()),
            ("grid", self.grid.as_ref()),
            ("bounds", self.bounds.as_ref()),
            ("context_bounds", self.context_bounds.as_ref()),
            ("alpha", self.alpha.as_ref()),
            ("out", self.out.as_ref()),
        ]
    }
}

fn normalize_key(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('-', "_")
}

/// Parses a flat `key = value` file. Blank lines and `#` comments are skipped.
pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("config line {}: expected key = value", no + 1)))?;
        out.insert(normalize_key(key), value.trim().to_string());
    }
    Ok(out)
}

/// Looks keys up through the layers.
pub struct Layers {
    flags: BTreeMap<&'static str, String>,
    env: BTreeMap<String, String>,
    file: BTreeMap<String, String>,
}

impl Layers {
    pub fn new(args: &RunArgs, env: impl IntoIterator<Item = (String, String)>) -> Result<Self, CliError> {
        let flags = args.flags().into_iter().filter_map(|(k, v)| v.map(|v| (k, v.clone()))).collect();
        let env: BTreeMap<String, String> = env
            .into_iter()
            .filter_map(|(k, v)| k.strip_prefix(ENV_PREFIX).map(|k| (normalize_key(k), v)))
            .collect();
        let file_path = args.config.clone().or_else(|| env.get("config").map(PathBuf::from));
        let file = match file_path {
            Some(path) => {
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| CliError::Config(format!("cannot read config file {}: {e}", path.display())))?;
                parse_config_file(&text)?
            }
            None => BTreeMap::new(),
        };
        let known: Vec<&str> = args.flags().iter().map(|(k, _)| *k).collect();
        if let Some(unknown) = file.keys().find(|k| !known.contains(&k.as_str())) {
            return Err(CliError::Config(format!("unknown config key '{unknown}'")));
        }
        Ok(Self { flags, env, file })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.flags
            .get(key)
            .or_else(|| self.env.get(key))
            .or_else(|| self.file.get(key))
            .map(String::as_str)
    }

    fn parse<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|e| CliError::Config(format!("invalid value '{v}' for {key}: {e}"))))
            .transpose()
    }
}

/// Which function the run is evaluated on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ObjectiveSpec {
    Bench { benchmark: Benchmark },
    Contextual { benchmark: Benchmark },
    Arms { means: Vec<f64> },
    External,
}

impl FromStr for ObjectiveSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "external" {
            return Ok(ObjectiveSpec::External);
        }
        if s.starts_with("arms:") {
            let arms: ArmMeans = s.parse().map_err(|e| format!("{e}"))?;
            return Ok(ObjectiveSpec::Arms { means: arms.means });
        }
        if let Some(name) = s.strip_prefix("contextual:") {
            let benchmark = name.parse().map_err(|e| format!("{e}"))?;
            return Ok(ObjectiveSpec::Contextual { benchmark });
        }
        let benchmark = s.parse().map_err(|e| format!("{e}"))?;
        Ok(ObjectiveSpec::Bench { benchmark })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RefinementKind {
    Tree,
    Mesh,
    Zooming,
    Fixed,
}

impl FromStr for RefinementKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tree" => Ok(RefinementKind::Tree),
            "mesh" => Ok(RefinementKind::Mesh),
            "zooming" => Ok(RefinementKind::Zooming),
            "fixed" => Ok(RefinementKind::Fixed),
            _ => Err("expected tree, mesh, zooming or fixed".into()),
        }
    }
}

fn parse_exploration(s: &str) -> Result<Exploration, String> {
    let num = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("{e}"));
    match s.split_once(':') {
        None if s == "hoeffding" => Ok(Exploration::Hoeffding),
        None if s == "horizon-ucb1" => Ok(Exploration::HorizonUcb1),
        Some(("v", v)) => Ok(Exploration::VSchedule { v: num(v)? }),
        Some(("contextual", vs)) => {
            let parts: Vec<&str> = vs.split(',').collect();
            if parts.len() != 3 {
                return Err("contextual schedule takes three numbers v1,v2,v3".into());
            }
            Ok(Exploration::ContextualSchedule { v1: num(parts[0])?, v2: num(parts[1])?, v3: num(parts[2])? })
        }
        _ => Err("expected hoeffding, horizon-ucb1, v:<v> or contextual:<v1>,<v2>,<v3>".into()),
    }
}

fn parse_leaf_cap(s: &str) -> Result<LeafCap, String> {
    match s.strip_prefix("pow:") {
        Some(e) => e.parse().map(LeafCap::Power).map_err(|e| format!("{e}")),
        None => s.parse().map(LeafCap::Fixed).map_err(|e| format!("{e}")),
    }
}

/// Parses `lo:hi,lo:hi,...`.
pub fn parse_box(s: &str) -> Result<Domain, String> {
    let (mut lo, mut hi) = (Vec::new(), Vec::new());
    for part in s.split(',') {
        let (a, b) = part.split_once(':').ok_or_else(|| format!("'{part}' is not lo:hi"))?;
        lo.push(a.trim().parse::<f64>().map_err(|e| format!("{e}"))?);
        hi.push(b.trim().parse::<f64>().map_err(|e| format!("{e}"))?);
    }
    Domain::new(lo, hi).map_err(|e| e.to_string())
}

fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(|v| v.trim().parse::<f64>().map_err(|e| format!("{e}"))).collect()
}

/// A fully resolved run, echoed into the trace header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub algo: Variant,
    pub objective: ObjectiveSpec,
    #[serde(rename = "T")]
    pub horizon: u64,
    pub seed: u64,
    pub noise_seed: u64,
    pub context_seed: u64,
    pub noise: Noise,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "M")]
    pub m: f64,
    pub exploration: Exploration,
    pub refinement: RefinementKind,
    pub fit: FitConfig,
    pub metric: Metric,
    pub grid: usize,
    pub bounds: Option<Domain>,
    pub context_bounds: Option<Domain>,
    pub alphas: Vec<f64>,
    #[serde(skip)]
    pub out: PathBuf,
}

impl RunConfig {
    pub fn from_args(args: &RunArgs) -> Result<Self, CliError> {
        Self::resolve(&Layers::new(args, std::env::vars())?)
    }

    pub fn resolve(layers: &Layers) -> Result<Self, CliError> {
        let cfg = |e: String| CliError::Config(e);
        let algo: Variant = layers.parse("algo")?.unwrap_or(Variant::Tucb);
        let mut objective: ObjectiveSpec = match layers.get("objective") {
            Some(v) => v.parse().map_err(|e| cfg(format!("invalid objective '{v}': {e}")))?,
            None => ObjectiveSpec::Bench { benchmark: Benchmark::Himmelblau },
        };
        // A contextual engine on a plain benchmark runs on its contextual reading.
        if let (Variant::Ctucb, ObjectiveSpec::Bench { benchmark }) = (algo, &objective) {
            objective = ObjectiveSpec::Contextual { benchmark: *benchmark };
        }
        let horizon_given: Option<u64> = layers.parse("t")?;
        let refinement: RefinementKind = layers.parse("refinement")?.unwrap_or(match algo {
            Variant::Tucb | Variant::Ctucb => RefinementKind::Tree,
            Variant::UniformMesh => RefinementKind::Mesh,
            Variant::Ucb1 => RefinementKind::Fixed,
        });

        if algo == Variant::Ucb1 {
            let discrete = matches!(objective, ObjectiveSpec::Arms { .. });
            let mut missing = Vec::new();
            if !discrete {
                missing.push("a discrete arm set (--objective arms:<m1>,<m2>,...)");
            }
            if horizon_given.is_none() {
                missing.push("a horizon (--T)");
            }
            if !missing.is_empty() {
                return Err(cfg(format!("ucb1 needs {}", missing.join(" and "))));
            }
        }
        if refinement == RefinementKind::Zooming && horizon_given.is_none() {
            return Err(cfg("zooming refinement needs a horizon (--T)".into()));
        }
        if matches!(objective, ObjectiveSpec::Arms { .. }) && refinement != RefinementKind::Fixed {
            return Err(cfg("a discrete arm set only supports --refinement fixed".into()));
        }
        let horizon = horizon_given.unwrap_or(DEFAULT_HORIZON);
        if horizon == 0 {
            return Err(cfg("--T must be at least 1".into()));
        }

        let defaults = EngineConfig::for_variant(algo);
        let seed: u64 = layers.parse("seed")?.unwrap_or(0);
        let exploration = match layers.get("exploration") {
            Some(v) => parse_exploration(v).map_err(|e| cfg(format!("invalid exploration '{v}': {e}")))?,
            None => defaults.exploration,
        };
        let metric = match layers.get("metric") {
            Some(v) => v.parse().map_err(|e| cfg(format!("invalid metric '{v}': {e}")))?,
            None => defaults.metric,
        };
        let mut fit = FitConfig { metric, ..FitConfig::default() };
        if let Some(eta) = layers.parse("eta")? {
            fit.eta = eta;
        }
        if let Some(v) = layers.get("max_leaves") {
            fit.max_leaves = parse_leaf_cap(v).map_err(|e| cfg(format!("invalid max-leaves '{v}': {e}")))?;
        }
        if let Some(d) = layers.parse("max_depth")? {
            fit.max_depth = d;
        }
        if let Some(d) = layers.parse("min_leaf_diameter")? {
            fit.min_leaf_diameter = d;
        }
        if let Some(p) = layers.parse::<FeaturePolicy>("feature_policy")? {
            fit.feature_policy = p;
        }
        let noise = match layers.get("noise") {
            Some(v) => v.parse().map_err(|e| cfg(format!("{e}")))?,
            None => Noise::default(),
        };
        let grid = layers.parse("grid")?.unwrap_or(DEFAULT_GRID);
        let bounds = layers.get("bounds").map(parse_box).transpose().map_err(|e| cfg(format!("invalid bounds: {e}")))?;
        let context_bounds = layers
            .get("context_bounds")
            .map(parse_box)
            .transpose()
            .map_err(|e| cfg(format!("invalid context bounds: {e}")))?;
        let alphas = match layers.get("alpha") {
            Some(v) => parse_list(v).map_err(|e| cfg(format!("invalid alpha list '{v}': {e}")))?,
            None => vec![0.3, 0.5, 0.9],
        };
        if let Some(a) = alphas.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
            return Err(cfg(format!("alpha values must lie in (0, 1), got {a}")));
        }

        let config = RunConfig {
            algo,
            objective,
            horizon,
            seed,
            noise_seed: layers.parse("noise_seed")?.unwrap_or(seed.wrapping_add(1)),
            context_seed: layers.parse("context_seed")?.unwrap_or(seed.wrapping_add(2)),
            noise,
            c: layers.parse("c")?.unwrap_or(defaults.c),
            m: layers.parse("m")?.unwrap_or(defaults.m),
            exploration,
            refinement,
            fit,
            metric,
            grid,
            bounds,
            context_bounds,
            alphas,
            out: PathBuf::from(layers.get("out").unwrap_or("treeucb-out")),
        };
        config.engine_config().validate().map_err(|e| cfg(e.to_string()))?;
        if config.grid < 256 {
            return Err(cfg(format!("--grid must be at least 256, got {}", config.grid)));
        }
        if algo == Variant::Ctucb && !config.is_contextual() {
            return Err(cfg("ctucb needs a contextual objective (a benchmark, or external with --context-bounds)".into()));
        }
        Ok(config)
    }

    pub fn engine_config(&self) -> EngineConfig {
        let refinement = match self.refinement {
            RefinementKind::Tree => Refinement::Tree(self.fit.clone()),
            RefinementKind::Mesh => Refinement::Mesh,
            RefinementKind::Zooming => Refinement::Zooming,
            RefinementKind::Fixed => Refinement::Fixed,
        };
        EngineConfig {
            variant: self.algo,
            c: self.c,
            m: self.m,
            exploration: self.exploration,
            horizon: Some(self.horizon),
            refinement,
            metric: self.metric,
            seed: self.seed,
        }
    }

    /// Whether the objective reveals a context each round.
    pub fn is_contextual(&self) -> bool {
        match self.objective {
            ObjectiveSpec::Contextual { .. } => true,
            ObjectiveSpec::External => self.context_bounds.is_some(),
            _ => false,
        }
    }

    /// Whether the engine itself conditions on the context.
    pub fn uses_context(&self) -> bool {
        self.algo == Variant::Ctucb
    }

    pub fn out_dir(&self) -> &Path {
        &self.out
    }
}
