use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::nn::Mlp;
use super::td3::TrainConfig;
use super::train::Trainer;
use super::LearnerError;
use crate::env::Scenario;
use crate::util::digest_json;

const MAGIC: &[u8; 8] = b"BIOVOLT\x01";
pub const CHECKPOINT_VERSION: u32 = 1;
const DIGEST_LEN: usize = 64;

/// A trained (or freshly initialized) actor with the configuration that
/// produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyCheckpoint {
    pub scenario: Scenario<f64>,
    pub config: TrainConfig,
    pub actor: Mlp,
    /// Environment step at which the actor was captured.
    pub step: usize,
    pub eval_return: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Checkpoint {
    Policy(PolicyCheckpoint),
    /// Full trainer state; training resumes exactly where it stopped.
    Trainer(Box<Trainer>),
}

impl Checkpoint {
    pub fn scenario(&self) -> &Scenario<f64> {
        match self {
            Checkpoint::Policy(p) => &p.scenario,
            Checkpoint::Trainer(t) => t.scenario(),
        }
    }

    pub fn config(&self) -> &TrainConfig {
        match self {
            Checkpoint::Policy(p) => &p.config,
            Checkpoint::Trainer(t) => t.config(),
        }
    }

    /// Digest of the scenario and training configuration.
    pub fn config_digest(&self) -> String {
        digest_json(&(self.scenario().digest(), self.config()))
    }
}

/// Layout: 8-byte magic, little-endian `u32` version, 64-byte hex config
/// digest, then the CBOR payload.
pub fn save_checkpoint<W: Write>(checkpoint: &Checkpoint, mut out: W) -> Result<(), LearnerError> {
    out.write_all(MAGIC)?;
    out.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    out.write_all(checkpoint.config_digest().as_bytes())?;
    ciborium::into_writer(checkpoint, &mut out).map_err(|e| LearnerError::Checkpoint(e.to_string()))?;
    out.flush()?;
    Ok(())
}

pub fn load_checkpoint<R: Read>(mut input: R) -> Result<Checkpoint, LearnerError> {
    let mut magic = [0u8; 8];
    input
        .read_exact(&mut magic)
        .map_err(|_| LearnerError::Checkpoint("file too short".into()))?;
    if &magic != MAGIC {
        return Err(LearnerError::Checkpoint("not a checkpoint file".into()));
    }
    let mut version = [0u8; 4];
    input.read_exact(&mut version)?;
    let version = u32::from_le_bytes(version);
    if version != CHECKPOINT_VERSION {
        return Err(LearnerError::Checkpoint(format!(
            "unsupported version {version} (expected {CHECKPOINT_VERSION})"
        )));
    }
    let mut digest = [0u8; DIGEST_LEN];
    input.read_exact(&mut digest)?;
    let checkpoint: Checkpoint =
        ciborium::from_reader(&mut input).map_err(|e| LearnerError::Checkpoint(e.to_string()))?;
    if checkpoint.config_digest().as_bytes() != digest {
        return Err(LearnerError::Checkpoint("config digest does not match payload".into()));
    }
    Ok(checkpoint)
}
