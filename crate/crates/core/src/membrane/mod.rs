//! Single-cell electrophysiology: GHK voltage and currents, gating kinetics,
//! ion bookkeeping and calcium signaling.

mod cascade;
mod cell;
mod gating;
mod ghk;
mod ion;

use thiserror::Error;

pub use cascade::{
    cascade_rates, rebalance_pools, step_calcium_cascade, CascadeParams, CascadeRates, Relaxation, SignalingState,
};
pub use cell::{integrate_cell, step_cell, step_ion_concentrations, CellParams, CellState, Scheme};
pub use gating::{step_gating, GatingParams};
pub use ghk::{
    ghk_flux, ghk_voltage, membrane_current, membrane_currents, nernst_potential, thermal_voltage, DEFAULT_GHK_IONS,
    SERIES_THRESHOLD,
};
pub use ion::{Ion, IonMap};

/// J/(mol·K)
pub const GAS_CONSTANT: f64 = 8.314;
/// C/mol
pub const FARADAY: f64 = 96485.0;

#[derive(Debug, Error)]
pub enum MembraneError {
    #[error("GHK log argument not positive (numerator {numerator}, denominator {denominator})")]
    NonPositiveLogArgument { numerator: f64, denominator: f64 },
    #[error("explicit gating step unstable: dt*(alpha+beta) = {product}")]
    UnstableStep { product: f64 },
    #[error("time step must be positive, got {0}")]
    InvalidTimestep(f64),
    #[error("at least one integration step is required")]
    InvalidSteps,
    #[error("invalid cell parameter: {0}")]
    InvalidParameter(String),
    #[error("step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<MembraneError>,
    },
}
