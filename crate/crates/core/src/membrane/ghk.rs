//! Goldman-Hodgkin-Katz voltage and current relations.

use super::cell::CellState;
use super::ion::{Ion, IonMap};
use super::{MembraneError, FARADAY, GAS_CONSTANT};
use crate::scalar::Scalar;

/// Below this |zFV/RT| the flux switches to its series expansion.
pub const SERIES_THRESHOLD: f64 = 1e-4;

/// Species that enter the voltage equation unless configured otherwise.
pub const DEFAULT_GHK_IONS: IonMap<bool> = IonMap {
    na: true,
    k: true,
    cl: true,
    ca: false,
    h: false,
};

/// RT/F in volts.
#[inline]
pub fn thermal_voltage<S: Scalar>(temperature: S) -> S {
    S::lit(GAS_CONSTANT) * temperature / S::lit(FARADAY)
}

/// Reversal potential of a single species.
pub fn nernst_potential<S: Scalar>(ion: Ion, c_in: S, c_out: S, temperature: S) -> S {
    let z = S::lit(ion.valence() as f64);
    thermal_voltage(temperature) / z * (c_out / c_in).ln()
}

/// Resting potential from permeability-weighted concentrations.
///
/// Cations contribute their outside concentration to the numerator and
/// anions their inside concentration, so the result is the zero-net-current
/// potential of the monovalent species.
pub fn ghk_voltage<S: Scalar>(cell: &CellState<S>, ions: &IonMap<bool>) -> Result<S, MembraneError> {
    let mut num = S::zero();
    let mut den = S::zero();
    for ion in Ion::ALL {
        if !ions[ion] {
            continue;
        }
        let p = cell.perms[ion];
        if ion.valence() > 0 {
            num = num + p * cell.conc_out[ion];
            den = den + p * cell.conc_in[ion];
        } else {
            num = num + p * cell.conc_in[ion];
            den = den + p * cell.conc_out[ion];
        }
    }
    if !(num > S::zero() && den > S::zero()) {
        return Err(MembraneError::NonPositiveLogArgument {
            numerator: num.as_f64(),
            denominator: den.as_f64(),
        });
    }
    Ok(thermal_voltage(cell.temperature) * (num / den).ln())
}

/// `u / (1 - exp(-u))`, with the removable singularity at zero handled.
#[inline]
fn bernoulli_factor<S: Scalar>(u: S) -> S {
    if u.abs() < S::lit(SERIES_THRESHOLD) {
        let u2 = u * u;
        S::one() + u / S::lit(2.0) + u2 / S::lit(12.0) - u2 * u2 / S::lit(720.0)
    } else {
        -u / (-u).exp_m1()
    }
}

/// Current density (A/m², outward positive) carried by `ion` at the cell's
/// present `v_mem` through permeability `p`.
pub fn ghk_flux<S: Scalar>(ion: Ion, p: S, cell: &CellState<S>) -> S {
    let c_in = cell.conc_in[ion];
    let c_out = cell.conc_out[ion];
    if p == S::zero() || (c_in == S::zero() && c_out == S::zero()) {
        return S::zero();
    }
    let z = S::lit(ion.valence() as f64);
    let u = z * cell.v_mem / thermal_voltage(cell.temperature);
    p * z * S::lit(FARADAY) * bernoulli_factor(u) * (c_in - c_out * (-u).exp())
}

/// Whole-cell membrane current (A) for one species.
pub fn membrane_current<S: Scalar>(ion: Ion, cell: &CellState<S>) -> S {
    cell.area * ghk_flux(ion, cell.perms[ion], cell)
}

/// Whole-cell membrane currents for every species.
pub fn membrane_currents<S: Scalar>(cell: &CellState<S>) -> IonMap<S> {
    IonMap::from_fn(|ion| membrane_current(ion, cell))
}
