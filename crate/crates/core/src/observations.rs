//! The ordered record of played (context, arm, reward) triples.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LogError {
    #[error("expected round {expected}, got {got}")]
    RoundGap { expected: u64, got: u64 },
    #[error("observation has {got} {what} coordinates, log expects {expected}")]
    Shape { what: &'static str, expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub round: u64,
    pub arm: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<Vec<f64>>,
    pub reward: f64,
}

/// Observations in round order `1, 2, ..., t`.
///
/// Statistics and tree fitting operate on the joint point
/// `context ++ arm` (just `arm` when there is no context), which is cached
/// alongside each entry.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ObservationLog {
    entries: Vec<Observation>,
    points: Vec<Vec<f64>>,
    rewards: Vec<f64>,
}

impl ObservationLog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a context-free log from `(arm, reward)` pairs, numbering rounds from 1.
    pub fn from_pairs<I: IntoIterator<Item = (Vec<f64>, f64)>>(pairs: I) -> Result<Self, LogError> {
        let mut log = Self::new();
        for (arm, reward) in pairs {
            log.record(arm, None, reward)?;
        }
        Ok(log)
    }

    /// Appends the next round.
    pub fn record(&mut self, arm: Vec<f64>, context: Option<Vec<f64>>, reward: f64) -> Result<u64, LogError> {
        let round = self.entries.len() as u64 + 1;
        self.push(Observation { round, arm, context, reward })?;
        Ok(round)
    }

    pub fn push(&mut self, obs: Observation) -> Result<(), LogError> {
        let expected = self.entries.len() as u64 + 1;
        if obs.round != expected {
            return Err(LogError::RoundGap { expected, got: obs.round });
        }
        if let Some(first) = self.entries.first() {
            if first.arm.len() != obs.arm.len() {
                return Err(LogError::Shape { what: "arm", expected: first.arm.len(), got: obs.arm.len() });
            }
            let (a, b) = (first.context.as_ref().map_or(0, Vec::len), obs.context.as_ref().map_or(0, Vec::len));
            if a != b {
                return Err(LogError::Shape { what: "context", expected: a, got: b });
            }
        }
        let mut point = obs.context.clone().unwrap_or_default();
        point.extend_from_slice(&obs.arm);
        self.points.push(point);
        self.rewards.push(obs.reward);
        self.entries.push(obs);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Observation] {
        &self.entries
    }

    /// Joint points `context ++ arm`, one per round.
    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    /// Drops every observation after round `rounds`.
    pub fn truncate(&mut self, rounds: usize) {
        self.entries.truncate(rounds);
        self.points.truncate(rounds);
        self.rewards.truncate(rounds);
    }
}
