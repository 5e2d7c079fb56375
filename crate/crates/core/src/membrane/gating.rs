use serde::{Deserialize, Serialize};

use super::MembraneError;
use crate::scalar::Scalar;

/// Voltage-dependent opening/closing rates of one channel population.
///
/// Both rates are Boltzmann sigmoids `r0 / (1 + exp(-(V - V_half) / k))`;
/// a negative slope makes the rate fall with depolarization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GatingParams<S> {
    pub alpha0: S,
    pub v_half_alpha: S,
    pub k_alpha: S,
    pub beta0: S,
    pub v_half_beta: S,
    pub k_beta: S,
    pub p_max: S,
}

#[inline]
fn boltzmann<S: Scalar>(r0: S, v_half: S, slope: S, v: S) -> S {
    r0 / (S::one() + (-(v - v_half) / slope).exp())
}

impl<S: Scalar> GatingParams<S> {
    pub fn validate(&self) -> Result<(), MembraneError> {
        let ok = self.alpha0 > S::zero()
            && self.beta0 > S::zero()
            && self.k_alpha != S::zero()
            && self.k_beta != S::zero()
            && self.p_max > S::zero();
        if ok {
            Ok(())
        } else {
            Err(MembraneError::InvalidParameter(
                "gating requires alpha0, beta0, p_max > 0 and nonzero slopes".into(),
            ))
        }
    }

    pub fn alpha(&self, v: S) -> S {
        boltzmann(self.alpha0, self.v_half_alpha, self.k_alpha, v)
    }

    pub fn beta(&self, v: S) -> S {
        boltzmann(self.beta0, self.v_half_beta, self.k_beta, v)
    }

    /// Permeability the channel relaxes to when held at `v`.
    pub fn steady_state(&self, v: S) -> S {
        let (a, b) = (self.alpha(v), self.beta(v));
        a * self.p_max / (a + b)
    }

    /// dP/dt at voltage `v`.
    pub fn rate(&self, p: S, v: S) -> S {
        self.alpha(v) * (self.p_max - p) - self.beta(v) * p
    }

    /// Rejects steps for which explicit Euler would overshoot the fixed point.
    pub fn check_step(&self, v: S, dt: S) -> Result<(), MembraneError> {
        let product = dt * (self.alpha(v) + self.beta(v));
        if product >= S::one() {
            Err(MembraneError::UnstableStep {
                product: product.as_f64(),
            })
        } else {
            Ok(())
        }
    }
}

/// One explicit Euler step of first-order gating kinetics.
pub fn step_gating<S: Scalar>(p: S, params: &GatingParams<S>, v: S, dt: S) -> Result<S, MembraneError> {
    if !(dt > S::zero()) {
        return Err(MembraneError::InvalidTimestep(dt.as_f64()));
    }
    params.check_step(v, dt)?;
    Ok((p + dt * params.rate(p, v)).max(S::zero()).min(params.p_max))
}
