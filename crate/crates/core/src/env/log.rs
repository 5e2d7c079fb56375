use std::collections::BTreeMap;
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

use super::Scenario;
use crate::metrics::{RewardBreakdown, RewardWeights};
use crate::scalar::Scalar;
use crate::tissue::{LifecycleEvents, PhenotypeKind, TissueState, VoltageMesh};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct LogHeader<S> {
    pub artifact_version: String,
    pub scenario: String,
    pub config_digest: String,
    pub seed: u64,
    pub episode: usize,
    pub policy: String,
    pub weights: RewardWeights<S>,
    pub environment: BTreeMap<String, S>,
}

impl<S: Scalar> LogHeader<S> {
    pub fn new(scenario: &Scenario<S>, seed: u64, episode: usize, policy: &str) -> Self {
        LogHeader {
            artifact_version: ARTIFACT_VERSION.to_string(),
            scenario: scenario.name.clone(),
            config_digest: scenario.digest(),
            seed,
            episode,
            policy: policy.to_string(),
            weights: scenario.weights,
            environment: scenario.environment.clone(),
        }
    }
}

/// Tissue-level summaries used as causal variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct Observables<S> {
    pub mean_v: S,
    pub mean_ca: S,
    pub mean_calcineurin: S,
    pub mean_akt: S,
    /// Mean clamp target of the action; absent when nothing is clamped.
    pub action_mean: Option<S>,
    pub progenitors: usize,
    pub differentiated: usize,
    pub apoptotic: usize,
    pub divisions: usize,
    pub differentiations: usize,
    pub apoptosis_onsets: usize,
    pub deaths: usize,
}

impl<S: Scalar> Observables<S> {
    pub fn collect(tissue: &TissueState<S>, events: &LifecycleEvents, action: &VoltageMesh<S>) -> Self {
        let live: Vec<_> = tissue.live_cells().collect();
        let mean = |f: &dyn Fn(&crate::tissue::TissueCell<S>) -> S| {
            if live.is_empty() {
                S::zero()
            } else {
                live.iter().map(|c| f(c)).sum::<S>() / S::from_usize_lossy(live.len())
            }
        };
        let targets = action.targets();
        let action_mean =
            (!targets.is_empty()).then(|| targets.iter().copied().sum::<S>() / S::from_usize_lossy(targets.len()));
        Observables {
            mean_v: mean(&|c| c.cell.v_mem),
            mean_ca: mean(&|c| c.cell.conc_in.ca),
            mean_calcineurin: mean(&|c| c.cell.signaling.calcineurin_active),
            mean_akt: mean(&|c| c.cell.signaling.akt_active),
            action_mean,
            progenitors: tissue.count_kind(PhenotypeKind::Progenitor),
            differentiated: tissue.count_kind(PhenotypeKind::Differentiated),
            apoptotic: tissue.count_kind(PhenotypeKind::Apoptotic),
            divisions: events.divisions.len(),
            differentiations: events.differentiations.len(),
            apoptosis_onsets: events.apoptosis_onsets.len(),
            deaths: events.deaths.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct StepRecord<S> {
    /// 0-based index of the step that produced this record.
    pub step: usize,
    pub action: VoltageMesh<S>,
    pub reward: S,
    pub terminal_penalty: S,
    pub reward_breakdown: RewardBreakdown<S>,
    pub live_count: usize,
    pub tissue_digest: String,
    pub done: bool,
    pub observables: Observables<S>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", bound = "S: Scalar")]
pub enum LogRecord<S> {
    Header(LogHeader<S>),
    Step(StepRecord<S>),
    /// Full tissue state after `step` (or the initial state when `step` is
    /// absent).
    Snapshot {
        step: Option<usize>,
        tissue: Box<TissueState<S>>,
    },
}

/// Writes one JSON record per line.
pub struct EpisodeLogger<W: Write> {
    out: W,
    snapshot_every: Option<usize>,
}

impl<W: Write> EpisodeLogger<W> {
    /// Snapshots are written for the initial state and after every
    /// `snapshot_every`-th step (and never when it is `None` or 0).
    pub fn new(out: W, snapshot_every: Option<usize>) -> Self {
        EpisodeLogger {
            out,
            snapshot_every: snapshot_every.filter(|&k| k > 0),
        }
    }

    pub fn write<S: Scalar>(&mut self, record: &LogRecord<S>) -> io::Result<()> {
        serde_json::to_writer(&mut self.out, record)?;
        self.out.write_all(b"\n")
    }

    pub fn snapshot_due(&self, step: Option<usize>) -> bool {
        match (self.snapshot_every, step) {
            (None, _) => false,
            (Some(_), None) => true,
            (Some(k), Some(s)) => (s + 1) % k == 0,
        }
    }

    pub fn flush(&mut self) -> io::Result<()> {
        self.out.flush()
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

/// Parses a JSONL episode log; blank lines are skipped.
pub fn read_log<S: Scalar, R: BufRead>(input: R) -> io::Result<Vec<LogRecord<S>>> {
    let mut records = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line)
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, format!("line {}: {e}", n + 1)))?;
        records.push(record);
    }
    Ok(records)
}
