//! The ask/tell protocol: one JSON object per line on stdin and stdout.
//!
//! ```text
//! > {"type":"ask","t":1,"arm":[0.12,-0.3]}
//! < {"type":"tell","t":1,"reward":0.71}
//! ...
//! > {"type":"done","t":200}
//! ```
//!
//! Any malformed or out-of-order line is answered with
//! `{"type":"error","reason":...}` and ends the session.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::session::Session;
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Message {
    Ask {
        t: u64,
        arm: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        context: Option<Vec<f64>>,
    },
    Tell {
        t: u64,
        reward: f64,
    },
    Done {
        t: u64,
    },
    Error {
        reason: String,
    },
}

fn send<W: Write>(out: &mut W, message: &Message) -> Result<(), CliError> {
    let line = serde_json::to_string(message).expect("messages serialize");
    writeln!(out, "{line}").and_then(|_| out.flush()).map_err(|e| CliError::Io(e.to_string()))
}

fn next_reward<R: BufRead>(input: &mut R, t: u64) -> Result<f64, CliError> {
    let mut line = String::new();
    loop {
        line.clear();
        let read = input.read_line(&mut line).map_err(|e| CliError::Io(e.to_string()))?;
        if read == 0 {
            return Err(CliError::Protocol(format!("input closed while waiting for the tell of round {t}")));
        }
        if !line.trim().is_empty() {
            break;
        }
    }
    match serde_json::from_str::<Message>(line.trim()) {
        Ok(Message::Tell { t: got, reward }) if got == t => Ok(reward),
        Ok(Message::Tell { t: got, .. }) => {
            Err(CliError::Protocol(format!("expected a tell for t = {t}, got t = {got}")))
        }
        Ok(other) => Err(CliError::Protocol(format!("expected a tell for t = {t}, got {other:?}"))),
        Err(e) => Err(CliError::Protocol(format!("malformed line while waiting for the tell of t = {t}: {e}"))),
    }
}

/// Runs a session against a remote evaluator. Protocol errors are reported
/// on `output` before being returned.
pub fn serve<R: BufRead, W: Write>(session: &mut Session, input: &mut R, output: &mut W) -> Result<bool, CliError> {
    let result = (|| {
        while session.rounds_left() > 0 {
            let proposal = session.ask()?;
            let context = session.context().map(<[f64]>::to_vec);
            send(output, &Message::Ask { t: proposal.t, arm: proposal.arm.clone(), context })?;
            let reward = next_reward(input, proposal.t)?;
            session.tell(reward)?;
        }
        let pass = session.finish()?;
        send(output, &Message::Done { t: session.engine().rounds() })?;
        Ok(pass)
    })();
    if let Err(e) = &result {
        if !matches!(e, CliError::Io(_)) {
            let _ = send(output, &Message::Error { reason: e.to_string() });
        }
        let _ = session.abort();
    }
    result
}
