//! Bioelectric tissue simulation with a reinforcement-learning environment,
//! a TD3 learner and causal-analysis tools.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix it to `f64`, which the learner and the logs use.

pub mod causal;
pub mod env;
pub mod learner;
pub mod membrane;
pub mod metrics;
pub mod scalar;
pub mod tissue;
pub mod util;

pub use scalar::Scalar;

pub type Cell = membrane::CellState<f64>;
pub type CellParams = membrane::CellParams<f64>;
pub type Tissue = tissue::TissueState<f64>;
pub type TissueConfig = tissue::TissueConfig<f64>;
pub type VoltageMesh = tissue::VoltageMesh<f64>;
pub type TargetSpec = metrics::TargetSpec<f64>;
pub type RewardWeights = metrics::RewardWeights<f64>;
pub type RewardBreakdown = metrics::RewardBreakdown<f64>;
pub type Scenario = env::Scenario<f64>;
pub type Env = env::Env<f64>;
