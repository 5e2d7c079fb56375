use serde::{Deserialize, Serialize};

use super::cascade::{cascade_rates, rebalance_pools, CascadeParams, Relaxation, SignalingState};
use super::gating::GatingParams;
use super::ghk::{ghk_flux, ghk_voltage, DEFAULT_GHK_IONS};
use super::ion::{Ion, IonMap};
use super::{MembraneError, FARADAY};
use crate::scalar::Scalar;

/// Electrochemical state of a single cell, SI units throughout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellState<S> {
    /// mol/m³
    pub conc_in: IonMap<S>,
    /// mol/m³; held fixed by the surrounding bath.
    pub conc_out: IonMap<S>,
    /// m/s
    pub perms: IonMap<S>,
    /// V
    pub v_mem: S,
    /// m³
    pub volume: S,
    /// m²; converts flux densities into whole-cell currents.
    pub area: S,
    /// K
    pub temperature: S,
    pub signaling: SignalingState<S>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clamp: Option<S>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Euler,
    #[default]
    Rk4,
}

/// Everything about a cell that does not change during an episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellParams<S> {
    #[serde(default = "default_ghk_ions")]
    pub ghk_ions: IonMap<bool>,
    pub gating: IonMap<Option<GatingParams<S>>>,
    pub cascade: CascadeParams<S>,
    pub akt: Relaxation<S>,
    pub serotonin: Relaxation<S>,
    pub butyrate: Relaxation<S>,
    #[serde(default)]
    pub scheme: Scheme,
}

fn default_ghk_ions() -> IonMap<bool> {
    DEFAULT_GHK_IONS
}

impl<S: Scalar> CellState<S> {
    /// A resting mammalian-like cell near -65 mV at 37 °C.
    pub fn default_mammalian() -> Self {
        let l = S::lit;
        let params = CellParams::<S>::default_mammalian();
        let mut signaling = SignalingState {
            ca_cam: l(9.090909e-4),
            calcineurin_active: l(4.7619e-4),
            akt_active: params.akt.target,
            serotonin: params.serotonin.target,
            butyrate: params.butyrate.target,
            ..Default::default()
        };
        rebalance_pools(&mut signaling, &params.cascade);
        let mut cell = CellState {
            conc_in: IonMap {
                na: l(12.0),
                k: l(140.0),
                cl: l(10.0),
                ca: l(1e-4),
                h: l(6.31e-5),
            },
            conc_out: IonMap {
                na: l(145.0),
                k: l(5.0),
                cl: l(110.0),
                ca: l(2.0),
                h: l(3.98e-5),
            },
            perms: IonMap {
                na: l(5e-10),
                k: l(1e-8),
                cl: l(4.5e-9),
                ca: l(1e-10),
                h: S::zero(),
            },
            v_mem: S::zero(),
            volume: l(1e-15),
            area: l(6e-10),
            temperature: l(310.0),
            signaling,
            clamp: None,
        };
        cell.v_mem = ghk_voltage(&cell, &DEFAULT_GHK_IONS).expect("default cell is non-degenerate");
        cell
    }

    /// Intracellular pH from the tracked proton concentration.
    pub fn ph(&self) -> S {
        // mol/m³ -> mol/L
        -(self.conc_in.h / S::lit(1000.0)).log10()
    }

    pub fn validate(&self, params: &CellParams<S>) -> Result<(), MembraneError> {
        let bad = |m: &str| Err(MembraneError::InvalidParameter(m.to_string()));
        if !(self.volume > S::zero()) {
            return bad("cell volume must be positive");
        }
        if !(self.area > S::zero()) {
            return bad("membrane area must be positive");
        }
        if !(self.temperature > S::zero()) {
            return bad("temperature must be positive");
        }
        for ion in Ion::ALL {
            if self.conc_in[ion] < S::zero() || self.conc_out[ion] < S::zero() {
                return bad("concentrations must be non-negative");
            }
            if self.perms[ion] < S::zero() {
                return bad("permeabilities must be non-negative");
            }
            if let Some(g) = &params.gating[ion] {
                g.validate()?;
                if self.perms[ion] > g.p_max {
                    return bad("permeability exceeds its gating maximum");
                }
            }
        }
        params.cascade.validate()
    }

    /// Potential the membrane sits at: the clamp if present, else the GHK value.
    pub fn resolve_voltage(&self, params: &CellParams<S>) -> Result<S, MembraneError> {
        match self.clamp {
            Some(v) => Ok(v),
            None => ghk_voltage(self, &params.ghk_ions),
        }
    }

    /// Total membrane current per species (A, outward positive) at `v_mem`.
    pub fn currents(&self) -> IonMap<S> {
        IonMap::from_fn(|ion| self.area * ghk_flux(ion, self.perms[ion], self))
    }
}

impl<S: Scalar> CellParams<S> {
    pub fn default_mammalian() -> Self {
        let l = S::lit;
        let k_channel = GatingParams {
            alpha0: l(5.0),
            v_half_alpha: l(-0.065),
            k_alpha: l(0.015),
            beta0: l(5.0),
            v_half_beta: l(-0.065),
            k_beta: l(-0.015),
            p_max: l(2e-8),
        };
        CellParams {
            ghk_ions: DEFAULT_GHK_IONS,
            gating: IonMap {
                na: None,
                k: Some(k_channel),
                cl: None,
                ca: None,
                h: None,
            },
            cascade: CascadeParams {
                k_on: l(1e4),
                k_off: l(10.0),
                k_pump: l(6.0),
                cam_total: l(0.01),
                calcineurin_total: l(1e-3),
            },
            akt: Relaxation::constant(l(1e-3)),
            serotonin: Relaxation::constant(l(1e-3)),
            butyrate: Relaxation::constant(l(1e-3)),
            scheme: Scheme::Rk4,
        }
    }
}

/// Advances intracellular concentrations by one explicit Euler step of
/// `d[ion]/dt = -(I_membrane + I_junction) / (z F V_cell)`, flooring at zero.
///
/// Membrane currents are evaluated at the cell's present `v_mem`.
pub fn step_ion_concentrations<S: Scalar>(
    cell: &CellState<S>,
    junctional: &IonMap<S>,
    dt: S,
) -> Result<CellState<S>, MembraneError> {
    if !(dt > S::zero()) {
        return Err(MembraneError::InvalidTimestep(dt.as_f64()));
    }
    let currents = cell.currents();
    let mut next = cell.clone();
    for ion in Ion::ALL {
        let z = S::lit(ion.valence() as f64);
        let rate = -(currents[ion] + junctional[ion]) / (z * S::lit(FARADAY) * cell.volume);
        next.conc_in[ion] = (cell.conc_in[ion] + dt * rate).max(S::zero());
    }
    Ok(next)
}

const DIM: usize = 15;
type StateVec<S> = [S; DIM];

fn pack<S: Scalar>(cell: &CellState<S>) -> StateVec<S> {
    let mut y = [S::zero(); DIM];
    for ion in Ion::ALL {
        y[ion.index()] = cell.conc_in[ion];
        y[5 + ion.index()] = cell.perms[ion];
    }
    let s = &cell.signaling;
    y[10] = s.ca_cam;
    y[11] = s.calcineurin_active;
    y[12] = s.akt_active;
    y[13] = s.serotonin;
    y[14] = s.butyrate;
    y
}

fn unpack<S: Scalar>(cell: &mut CellState<S>, y: &StateVec<S>, cascade: &CascadeParams<S>) {
    for ion in Ion::ALL {
        cell.conc_in[ion] = y[ion.index()];
        cell.perms[ion] = y[5 + ion.index()];
    }
    let s = &mut cell.signaling;
    s.ca_cam = y[10];
    s.calcineurin_active = y[11];
    s.akt_active = y[12];
    s.serotonin = y[13];
    s.butyrate = y[14];
    rebalance_pools(s, cascade);
}

/// Joint right-hand side. The cell's voltage is resolved first, then
/// gating, fluxes, concentrations and the cascade are evaluated from it.
fn derivative<S: Scalar>(
    cell: &mut CellState<S>,
    params: &CellParams<S>,
    junctional: &IonMap<S>,
) -> Result<StateVec<S>, MembraneError> {
    let v = cell.resolve_voltage(params)?;
    cell.v_mem = v;
    let mut dy = [S::zero(); DIM];

    for ion in Ion::ALL {
        if let Some(g) = &params.gating[ion] {
            dy[5 + ion.index()] = g.rate(cell.perms[ion], v);
        }
    }

    let currents = cell.currents();
    for ion in Ion::ALL {
        if ion == Ion::Ca {
            continue;
        }
        let z = S::lit(ion.valence() as f64);
        dy[ion.index()] = -(currents[ion] + junctional[ion]) / (z * S::lit(FARADAY) * cell.volume);
    }

    let casc = cascade_rates(
        &cell.signaling,
        cell.conc_in.ca,
        currents.ca + junctional.ca,
        cell.volume,
        &params.cascade,
    );
    dy[Ion::Ca.index()] = casc.ca_in;
    dy[10] = casc.ca_cam;
    dy[11] = casc.calcineurin_active;

    let s = &cell.signaling;
    dy[12] = params.akt.rate_of_change(s.akt_active, v);
    dy[13] = params.serotonin.rate_of_change(s.serotonin, v);
    dy[14] = params.butyrate.rate_of_change(s.butyrate, v);
    Ok(dy)
}

fn axpy<S: Scalar>(y: &StateVec<S>, h: S, k: &StateVec<S>) -> StateVec<S> {
    let mut out = *y;
    for i in 0..DIM {
        out[i] = y[i] + h * k[i];
    }
    out
}

/// Advances one cell by `dt` with constant junctional currents.
pub fn step_cell<S: Scalar>(
    cell: &CellState<S>,
    params: &CellParams<S>,
    junctional: &IonMap<S>,
    dt: S,
) -> Result<CellState<S>, MembraneError> {
    if !(dt > S::zero()) {
        return Err(MembraneError::InvalidTimestep(dt.as_f64()));
    }
    let mut work = cell.clone();
    let v0 = work.resolve_voltage(params)?;
    for ion in Ion::ALL {
        if let Some(g) = &params.gating[ion] {
            g.check_step(v0, dt)?;
        }
    }

    let y0 = pack(cell);
    let y1 = match params.scheme {
        Scheme::Euler => {
            let k1 = derivative(&mut work, params, junctional)?;
            axpy(&y0, dt, &k1)
        }
        Scheme::Rk4 => {
            let half = dt / S::lit(2.0);
            let k1 = derivative(&mut work, params, junctional)?;
            unpack(&mut work, &axpy(&y0, half, &k1), &params.cascade);
            let k2 = derivative(&mut work, params, junctional)?;
            unpack(&mut work, &axpy(&y0, half, &k2), &params.cascade);
            let k3 = derivative(&mut work, params, junctional)?;
            unpack(&mut work, &axpy(&y0, dt, &k3), &params.cascade);
            let k4 = derivative(&mut work, params, junctional)?;
            let mut y = y0;
            let sixth = dt / S::lit(6.0);
            let two = S::lit(2.0);
            for i in 0..DIM {
                y[i] = y0[i] + sixth * (k1[i] + two * k2[i] + two * k3[i] + k4[i]);
            }
            y
        }
    };

    let mut next = cell.clone();
    unpack(&mut next, &y1, &params.cascade);
    for ion in Ion::ALL {
        next.conc_in[ion] = next.conc_in[ion].max(S::zero());
        let cap = params.gating[ion].map(|g| g.p_max);
        let p = next.perms[ion].max(S::zero());
        next.perms[ion] = cap.map_or(p, |c| p.min(c));
    }
    let s = &mut next.signaling;
    s.akt_active = s.akt_active.max(S::zero());
    s.serotonin = s.serotonin.max(S::zero());
    s.butyrate = s.butyrate.max(S::zero());
    next.v_mem = next.resolve_voltage(params)?;
    Ok(next)
}

/// Integrates an isolated cell for `n_steps`, returning `n_steps + 1` states.
///
/// `clamp`, when given, overrides whatever clamp the cell carries.
pub fn integrate_cell<S: Scalar>(
    cell: &CellState<S>,
    params: &CellParams<S>,
    dt: S,
    n_steps: usize,
    clamp: Option<S>,
) -> Result<Vec<CellState<S>>, MembraneError> {
    if n_steps == 0 {
        return Err(MembraneError::InvalidSteps);
    }
    cell.validate(params)?;
    let mut state = cell.clone();
    if clamp.is_some() {
        state.clamp = clamp;
    }
    state.v_mem = state.resolve_voltage(params)?;
    let none = IonMap::splat(S::zero());
    let mut out = Vec::with_capacity(n_steps + 1);
    out.push(state.clone());
    for step in 0..n_steps {
        state = step_cell(&state, params, &none, dt).map_err(|e| MembraneError::AtStep {
            step,
            source: Box::new(e),
        })?;
        out.push(state.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_currents_leave_state_unchanged() {
        let mut cell = CellState::<f64>::default_mammalian();
        cell.perms = IonMap::splat(0.0);
        let next = step_ion_concentrations(&cell, &IonMap::splat(0.0), 0.01).unwrap();
        assert_eq!(next, cell);
    }

    #[test]
    fn outward_potassium_current_depletes() {
        let mut cell = CellState::<f64>::default_mammalian();
        cell.v_mem = 0.0;
        assert!(cell.currents().k > 0.0);
        let next = step_ion_concentrations(&cell, &IonMap::splat(0.0), 0.01).unwrap();
        assert!(next.conc_in.k < cell.conc_in.k);
    }

    #[test]
    fn exact_depletion_floors_at_zero() {
        let mut cell = CellState::<f64>::default_mammalian();
        cell.perms = IonMap::splat(0.0);
        let dt = 0.01;
        let mut j = IonMap::splat(0.0);
        // z F V c / dt drains the whole pool in one step
        j.k = 96485.0 * cell.volume * cell.conc_in.k / dt;
        j.cl = -96485.0 * cell.volume * cell.conc_in.cl / dt * 1.5;
        let next = step_ion_concentrations(&cell, &j, dt).unwrap();
        assert_eq!(next.conc_in.k, 0.0);
        assert_eq!(next.conc_in.cl, 0.0);
    }

    #[test]
    fn trajectory_length_contract() {
        let cell = CellState::<f64>::default_mammalian();
        let params = CellParams::default_mammalian();
        assert!(matches!(
            integrate_cell(&cell, &params, 1e-3, 0, None),
            Err(MembraneError::InvalidSteps)
        ));
        let traj = integrate_cell(&cell, &params, 1e-3, 1, None).unwrap();
        assert_eq!(traj.len(), 2);
        assert_eq!(traj[0], cell);
    }

    #[test]
    fn clamped_voltage_is_held() {
        let cell = CellState::<f64>::default_mammalian();
        let params = CellParams::default_mammalian();
        let traj = integrate_cell(&cell, &params, 1e-3, 50, Some(-0.02)).unwrap();
        assert!(traj.iter().all(|c| c.v_mem == -0.02));
        // depolarization opens the potassium channel
        assert!(traj.last().unwrap().perms.k > cell.perms.k);
    }

    #[test]
    fn euler_step_matches_component_ops() {
        let cell = CellState::<f64>::default_mammalian();
        let mut params = CellParams::default_mammalian();
        params.scheme = Scheme::Euler;
        let dt = 1e-3;
        let next = step_cell(&cell, &params, &IonMap::splat(0.0), dt).unwrap();
        let g = params.gating.k.unwrap();
        let pk = super::super::gating::step_gating(cell.perms.k, &g, cell.v_mem, dt).unwrap();
        assert!((next.perms.k - pk).abs() < 1e-24);
        let conc = step_ion_concentrations(&cell, &IonMap::splat(0.0), dt).unwrap();
        assert!((next.conc_in.na - conc.conc_in.na).abs() < 1e-13);
        let (sig, ca) = super::super::cascade::step_calcium_cascade(
            &cell.signaling,
            cell.conc_in.ca,
            cell.currents().ca,
            cell.volume,
            &params.cascade,
            dt,
        )
        .unwrap();
        assert!((next.conc_in.ca - ca).abs() < 1e-18);
        assert!((next.signaling.ca_cam - sig.ca_cam).abs() < 1e-18);
    }

    #[test]
    fn ph_from_protons() {
        let mut cell = CellState::<f64>::default_mammalian();
        cell.conc_in.h = 1e-4; // 1e-7 mol/L
        assert!((cell.ph() - 7.0).abs() < 1e-12);
    }

    #[test]
    fn generic_over_f32() {
        let cell = CellState::<f32>::default_mammalian();
        let params = CellParams::<f32>::default_mammalian();
        let traj = integrate_cell(&cell, &params, 1e-3, 10, None).unwrap();
        assert!(traj.last().unwrap().v_mem.is_finite());
        assert!((traj[0].v_mem - -0.0649).abs() < 1e-3);
    }
}
