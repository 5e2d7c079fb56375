//! Deterministic actor-critic learning (TD3, with a DDPG ablation mode).
//!
//! Everything here runs in `f64` so seeded runs reproduce bit for bit.

mod checkpoint;
mod nn;
mod replay;
mod td3;
mod train;

use thiserror::Error;

use crate::env::EnvError;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, PolicyCheckpoint, CHECKPOINT_VERSION};
pub use nn::{Activation, Adam, Mlp, Trace};
pub use replay::{ReplayBuffer, Transition};
pub use td3::{critic_loss_and_grad, Algorithm, Critic, Losses, Td3Agent, TrainConfig};
pub use train::{
    actor_policy, constant_policy, evaluate, grid_search_oracle, random_policy, write_curve_csv, zero_policy,
    BestPolicy, CurvePoint, Evaluation, OracleResult, Trainer,
};

#[derive(Debug, Error)]
pub enum LearnerError {
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("numerical divergence in {0} update")]
    NumericalDivergence(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),
}

impl LearnerError {
    pub fn is_numerical(&self) -> bool {
        match self {
            LearnerError::NumericalDivergence(_) => true,
            LearnerError::Env(e) => e.is_numerical(),
            _ => false,
        }
    }
}
