//! One run of the engine, writing its trace as it goes.

use std::fs;
use std::path::PathBuf;

use treeucb_core::bandit::{Decision, Engine, Proposal};
use treeucb_core::bench::{
    ArmMeans, ContextStream, ContextualObjective, NoiseStream, Objective, RegretTrace, RescaledObjective,
};
use treeucb_core::partition::{Domain, Partition};

use crate::config::{ObjectiveSpec, RunConfig};
use crate::trace::{EndLine, EndStatus, Header, SplitLine, TraceLine, TraceWriter, FORMAT_VERSION};
use crate::CliError;

pub const TRACE_FILE: &str = "trace.jsonl";
pub const REGRET_FILE: &str = "regret.csv";
pub const AUDIT_FILE: &str = "audit.txt";

/// Builds the objective named by the config; `None` for external ones.
pub fn make_objective(config: &RunConfig) -> Result<Option<Box<dyn Objective + Send + Sync>>, CliError> {
    let rescaled = |b| RescaledObjective::make(b, config.grid).map_err(|e| CliError::Config(e.to_string()));
    Ok(match &config.objective {
        ObjectiveSpec::Bench { benchmark } => Some(Box::new(rescaled(*benchmark)?)),
        ObjectiveSpec::Contextual { benchmark } => Some(Box::new(ContextualObjective::new(rescaled(*benchmark)?))),
        ObjectiveSpec::Arms { means } => Some(Box::new(ArmMeans { means: means.clone() })),
        ObjectiveSpec::External => None,
    })
}

pub struct Session {
    pub config: RunConfig,
    engine: Engine,
    objective: Option<Box<dyn Objective + Send + Sync>>,
    noise: NoiseStream,
    contexts: Option<ContextStream>,
    writer: TraceWriter,
    pub regret: RegretTrace,
    /// Context of the pending round, as revealed to the caller.
    context: Option<Vec<f64>>,
    finished: bool,
}

impl Session {
    pub fn new(config: RunConfig) -> Result<Self, CliError> {
        let objective = make_objective(&config)?;
        let (arm_domain, context_domain) = match &objective {
            Some(o) => (o.arm_domain(), o.context_domain()),
            None => (
                config.bounds.clone().unwrap_or_else(|| Domain::cube(2, -0.5, 0.5)),
                config.context_bounds.clone(),
            ),
        };
        let engine_config = config.engine_config();
        let engine_context = if config.uses_context() { context_domain.clone() } else { None };
        let engine = match &config.objective {
            ObjectiveSpec::Arms { means } => {
                let partition = Partition::discrete_arms(means.len()).map_err(|e| CliError::Config(e.to_string()))?;
                Engine::with_partition(engine_config, partition, 0)
            }
            _ => Engine::new(engine_config, arm_domain, engine_context),
        }
        .map_err(|e| CliError::Config(e.to_string()))?;

        fs::create_dir_all(&config.out).map_err(|e| CliError::io(&config.out, e))?;
        let mut writer = TraceWriter::create(&config.out.join(TRACE_FILE))?;
        writer.write(&TraceLine::Header(Box::new(Header {
            format_version: FORMAT_VERSION,
            config: config.clone(),
            context_dims: engine.context_dims(),
            partition: engine.partition().clone(),
        })))?;
        Ok(Self {
            noise: NoiseStream::new(config.noise, config.noise_seed),
            contexts: context_domain.map(|d| ContextStream::new(d, config.context_seed)),
            config,
            engine,
            objective,
            writer,
            regret: RegretTrace::new(),
            context: None,
            finished: false,
        })
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    pub fn out_path(&self, name: &str) -> PathBuf {
        self.config.out.join(name)
    }

    pub fn rounds_left(&self) -> u64 {
        self.config.horizon - self.engine.rounds()
    }

    /// Draws the next context and proposes an arm.
    pub fn ask(&mut self) -> Result<Proposal, CliError> {
        let context = self.contexts.as_mut().map(ContextStream::next_context);
        let engine_context = if self.config.uses_context() { context.as_deref() } else { None };
        let proposal = self.engine.ask(engine_context).map_err(|e| CliError::Protocol(e.to_string()))?;
        for split in &proposal.splits {
            self.writer.write(&TraceLine::Split(SplitLine::new(proposal.t, split)))?;
        }
        self.context = context;
        Ok(proposal)
    }

    /// The context revealed with the pending proposal.
    pub fn context(&self) -> Option<&[f64]> {
        self.context.as_deref()
    }

    /// Reward of the pending arm from the built-in objective, with noise.
    pub fn evaluate(&mut self, proposal: &Proposal) -> Result<f64, CliError> {
        let objective = self
            .objective
            .as_ref()
            .ok_or_else(|| CliError::Objective("an external objective cannot be evaluated in process".into()))?;
        let value = objective.value(self.context.as_deref(), &proposal.arm);
        if !value.is_finite() {
            return Err(CliError::Objective(format!("objective returned {value} at {:?}", proposal.arm)));
        }
        Ok(value + self.noise.next_noise())
    }

    pub fn tell(&mut self, reward: f64) -> Result<Decision, CliError> {
        let mut decision = self.engine.tell(reward).map_err(|e| CliError::Protocol(e.to_string()))?;
        let context = self.context.take();
        if let Some(objective) = &self.objective {
            let z = context.as_deref();
            decision.regret = Some(self.regret.push(objective.value(z, &decision.arm), objective.optimum(z)));
        }
        if decision.context.is_none() {
            decision.context = context;
        }
        self.writer.write(&TraceLine::Decision(decision.clone()))?;
        Ok(decision)
    }

    /// Plays every remaining round against the built-in objective.
    pub fn run_in_process(&mut self) -> Result<(), CliError> {
        while self.rounds_left() > 0 {
            let proposal = self.ask()?;
            let reward = self.evaluate(&proposal)?;
            self.tell(reward)?;
        }
        Ok(())
    }

    /// Applies the refinement round `T + 1` would make, then writes the end
    /// marker, the regret series and the audit summary. Returns whether the
    /// audit passed.
    pub fn finish(&mut self) -> Result<bool, CliError> {
        let t = self.engine.rounds() + 1;
        let splits = self.engine.finalize().map_err(|e| CliError::Protocol(e.to_string()))?;
        for split in &splits {
            self.writer.write(&TraceLine::Split(SplitLine::new(t, split)))?;
        }
        self.write_end(EndStatus::Complete)?;
        if self.objective.is_some() {
            let path = self.out_path(REGRET_FILE);
            fs::write(&path, self.regret.to_csv()).map_err(|e| CliError::io(&path, e))?;
        }
        let trace = crate::trace::Trace::read(&self.out_path(TRACE_FILE))?;
        let report = trace.audit(&self.config.alphas)?;
        let path = self.out_path(AUDIT_FILE);
        fs::write(&path, format!("{report}\n")).map_err(|e| CliError::io(&path, e))?;
        Ok(report.pass)
    }

    /// Ends the trace early, keeping what was recorded.
    pub fn abort(&mut self) -> Result<(), CliError> {
        if self.finished {
            return Ok(());
        }
        self.engine.cancel();
        self.write_end(EndStatus::Aborted)
    }

    fn write_end(&mut self, status: EndStatus) -> Result<(), CliError> {
        self.writer.write(&TraceLine::End(EndLine {
            rounds: self.engine.rounds(),
            partition_size: self.engine.partition().len(),
            status,
        }))?;
        self.writer.flush()?;
        self.finished = true;
        Ok(())
    }
}
