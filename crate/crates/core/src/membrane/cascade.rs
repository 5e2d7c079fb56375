//! Calcium -> calmodulin -> calcineurin signaling and the slow
//! exogenous signals (Akt, serotonin, butyrate).

use serde::{Deserialize, Serialize};

use super::{MembraneError, FARADAY};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SignalingState<S> {
    pub ca_cam: S,
    pub cam_free: S,
    pub calcineurin_free: S,
    pub calcineurin_active: S,
    pub akt_active: S,
    pub serotonin: S,
    pub butyrate: S,
}

/// Mass-action constants and the conserved pool sizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CascadeParams<S> {
    /// m³/(mol·s)
    pub k_on: S,
    /// 1/s
    pub k_off: S,
    /// 1/s
    pub k_pump: S,
    pub cam_total: S,
    pub calcineurin_total: S,
}

impl<S: Scalar> CascadeParams<S> {
    pub fn validate(&self) -> Result<(), MembraneError> {
        let nonneg = [
            self.k_on,
            self.k_off,
            self.k_pump,
            self.cam_total,
            self.calcineurin_total,
        ];
        if nonneg.iter().all(|x| *x >= S::zero()) {
            Ok(())
        } else {
            Err(MembraneError::InvalidParameter(
                "cascade constants must be non-negative".into(),
            ))
        }
    }
}

/// First-order relaxation toward `target + coupling * (v - v_ref)`.
///
/// With `coupling = 0` the signal is an exogenous constant once relaxed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Relaxation<S> {
    pub rate: S,
    pub target: S,
    pub coupling: S,
    pub v_ref: S,
}

impl<S: Scalar> Relaxation<S> {
    pub fn constant(target: S) -> Self {
        Relaxation {
            rate: S::one(),
            target,
            coupling: S::zero(),
            v_ref: S::zero(),
        }
    }

    pub fn setpoint(&self, v: S) -> S {
        (self.target + self.coupling * (v - self.v_ref)).max(S::zero())
    }

    pub fn rate_of_change(&self, x: S, v: S) -> S {
        self.rate * (self.setpoint(v) - x)
    }
}

/// Time derivatives of the calcium subsystem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CascadeRates<S> {
    pub ca_in: S,
    pub ca_cam: S,
    pub calcineurin_active: S,
}

/// `i_ca` is the total outward calcium current (A) including any junctional share.
pub fn cascade_rates<S: Scalar>(
    sig: &SignalingState<S>,
    ca_in: S,
    i_ca: S,
    volume: S,
    params: &CascadeParams<S>,
) -> CascadeRates<S> {
    let two_f = S::lit(2.0 * FARADAY);
    CascadeRates {
        ca_in: -i_ca / (two_f * volume) - params.k_pump * ca_in,
        ca_cam: params.k_on * ca_in * sig.cam_free - params.k_off * sig.ca_cam,
        calcineurin_active: params.k_on * sig.ca_cam * sig.calcineurin_free - params.k_off * sig.calcineurin_active,
    }
}

/// Re-derives the free pools from the conserved totals after the bound
/// species changed, keeping each bound amount within `[0, total]`.
pub fn rebalance_pools<S: Scalar>(sig: &mut SignalingState<S>, params: &CascadeParams<S>) {
    sig.ca_cam = sig.ca_cam.max(S::zero()).min(params.cam_total);
    sig.cam_free = params.cam_total - sig.ca_cam;
    sig.calcineurin_active = sig.calcineurin_active.max(S::zero()).min(params.calcineurin_total);
    sig.calcineurin_free = params.calcineurin_total - sig.calcineurin_active;
}

/// One explicit Euler step of the calcium cascade. Returns the new signaling
/// state and the new intracellular calcium concentration.
pub fn step_calcium_cascade<S: Scalar>(
    sig: &SignalingState<S>,
    ca_in: S,
    i_ca: S,
    volume: S,
    params: &CascadeParams<S>,
    dt: S,
) -> Result<(SignalingState<S>, S), MembraneError> {
    if !(dt > S::zero()) {
        return Err(MembraneError::InvalidTimestep(dt.as_f64()));
    }
    let r = cascade_rates(sig, ca_in, i_ca, volume, params);
    let mut next = *sig;
    next.ca_cam = sig.ca_cam + dt * r.ca_cam;
    next.calcineurin_active = sig.calcineurin_active + dt * r.calcineurin_active;
    rebalance_pools(&mut next, params);
    Ok((next, (ca_in + dt * r.ca_in).max(S::zero())))
}
