//! JSONL run traces: a header, then splits and decisions in the order they
//! happened, then an end marker.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use treeucb_core::audit::{self, AuditRecord, AuditReport, ReplayEvent};
use treeucb_core::bandit::Decision;
use treeucb_core::partition::{AppliedSplit, Partition, RegionId};

use crate::config::RunConfig;
use crate::CliError;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub format_version: u32,
    pub config: RunConfig,
    /// Leading coordinates of each partition point that are context.
    pub context_dims: usize,
    pub partition: Partition,
}

/// A refinement applied before round `t` was chosen. Refinements made after
/// the last round carry `t = T + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitLine {
    pub t: u64,
    pub parent: RegionId,
    pub dim: usize,
    pub threshold: f64,
    pub lower: RegionId,
    pub upper: RegionId,
}

impl SplitLine {
    pub fn new(t: u64, s: &AppliedSplit) -> Self {
        Self { t, parent: s.parent, dim: s.dim, threshold: s.threshold, lower: s.lower, upper: s.upper }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EndStatus {
    Complete,
    Aborted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndLine {
    pub rounds: u64,
    pub partition_size: usize,
    pub status: EndStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum TraceLine {
    Header(Box<Header>),
    Split(SplitLine),
    Decision(Decision),
    End(EndLine),
}

pub struct TraceWriter {
    out: BufWriter<File>,
}

impl TraceWriter {
    pub fn create(path: &Path) -> Result<Self, CliError> {
        let file = File::create(path).map_err(|e| CliError::io(path, e))?;
        Ok(Self { out: BufWriter::new(file) })
    }

    pub fn write(&mut self, line: &TraceLine) -> Result<(), CliError> {
        serde_json::to_writer(&mut self.out, line).map_err(|e| CliError::Io(e.to_string()))?;
        self.out.write_all(b"\n").map_err(|e| CliError::Io(e.to_string()))
    }

    pub fn flush(&mut self) -> Result<(), CliError> {
        self.out.flush().map_err(|e| CliError::Io(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub header: Header,
    pub splits: Vec<SplitLine>,
    pub decisions: Vec<Decision>,
    pub end: Option<EndLine>,
    /// Splits and decisions in file order.
    events: Vec<TraceLine>,
}

impl Trace {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let file = File::open(path).map_err(|e| CliError::Trace(format!("cannot open {}: {e}", path.display())))?;
        let mut header = None;
        let (mut splits, mut decisions, mut events, mut end) = (Vec::new(), Vec::new(), Vec::new(), None);
        for (no, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| CliError::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let bad = |msg: String| CliError::Trace(format!("{} line {}: {msg}", path.display(), no + 1));
            let parsed: TraceLine = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
            match (&parsed, header.is_some()) {
                (TraceLine::Header(h), false) => {
                    if h.format_version != FORMAT_VERSION {
                        return Err(bad(format!("unsupported format version {}", h.format_version)));
                    }
                    header = Some(h.clone());
                    continue;
                }
                (TraceLine::Header(_), true) => return Err(bad("second header".into())),
                (_, false) => return Err(bad("the first line must be the header".into())),
                _ => {}
            }
            if end.is_some() {
                return Err(bad("content after the end marker".into()));
            }
            match &parsed {
                TraceLine::Split(s) => splits.push(*s),
                TraceLine::Decision(d) => decisions.push(d.clone()),
                TraceLine::End(e) => end = Some(e.clone()),
                TraceLine::Header(_) => unreachable!(),
            }
            if !matches!(parsed, TraceLine::End(_)) {
                events.push(parsed);
            }
        }
        let header = header.ok_or_else(|| CliError::Trace(format!("{} is empty", path.display())))?;
        Ok(Self { header: *header, splits, decisions, end, events })
    }

    /// Largest number of regions the run ever held.
    pub fn max_partition_size(&self) -> usize {
        self.header.partition.len() + self.splits.len()
    }

    /// Recounts the per-round quantities from the splits and the played
    /// points, independently of the counts the engine wrote, and checks the
    /// two agree wherever the point landed in the region that was chosen.
    pub fn audit_records(&self) -> Result<Vec<AuditRecord>, CliError> {
        let k = self.header.context_dims;
        let bad = |e: &dyn std::fmt::Display| CliError::Trace(e.to_string());
        let mut partition = self.header.partition.clone();
        let mut events = Vec::with_capacity(self.events.len());
        let mut landed_in_choice = Vec::with_capacity(self.decisions.len());
        for line in &self.events {
            match line {
                TraceLine::Split(s) => {
                    partition.split_in_place(s.parent, s.dim, s.threshold).map_err(|e| bad(&e))?;
                    events.push(ReplayEvent::Split { region: s.parent, dim: s.dim, threshold: s.threshold });
                }
                TraceLine::Decision(d) => {
                    let mut point = if k > 0 { d.context.clone().unwrap_or_default() } else { Vec::new() };
                    point.extend_from_slice(&d.arm);
                    landed_in_choice.push(partition.region_of(&point).map_err(|e| bad(&e))?.id == d.region_id);
                    events.push(ReplayEvent::Point(point));
                }
                _ => unreachable!("only splits and decisions are kept"),
            }
        }
        let records = audit::replay(&self.header.partition, &events).map_err(|e| bad(&e))?;
        for ((r, d), same) in records.iter().zip(&self.decisions).zip(landed_in_choice) {
            if r.t != d.t {
                return Err(CliError::Trace(format!("decision {} is out of order (expected round {})", d.t, r.t)));
            }
            if same && r.n0_pre != d.n0 {
                return Err(CliError::Trace(format!(
                    "round {}: the trace reports n0 = {} but recounting gives {}",
                    d.t, d.n0, r.n0_pre
                )));
            }
        }
        Ok(records)
    }

    pub fn audit(&self, alphas: &[f64]) -> Result<AuditReport, CliError> {
        audit::audit(&self.audit_records()?, alphas).map_err(|e| CliError::Trace(e.to_string()))
    }
}
