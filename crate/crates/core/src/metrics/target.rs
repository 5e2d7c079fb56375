use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::membrane::IonMap;
use crate::scalar::Scalar;
use crate::tissue::{CellId, TissueIdentity, TopologyGraph};

/// A desired level and the deviation that counts as one unit of error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Setpoint<S> {
    pub desired: S,
    pub scale: S,
}

impl<S: Scalar> Setpoint<S> {
    pub fn new(desired: S, scale: S) -> Self {
        Setpoint { desired, scale }
    }

    /// `((actual - desired) / scale)²`
    pub fn deviation(&self, actual: S) -> S {
        let z = (actual - self.desired) / self.scale;
        z * z
    }
}

/// What the controller is steering toward. Concentrations in mM, voltages in
/// V, currents in A, positions in m.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct TargetSpec<S> {
    #[serde(default)]
    pub positions: Vec<[S; 2]>,
    #[serde(default)]
    pub topology: TopologyGraph<S>,
    /// Membrane potential per lattice site.
    #[serde(default, with = "crate::util::pairs")]
    pub vfield: BTreeMap<usize, S>,
    /// Ions entering the homeostasis term; H⁺ is scored through `ph`.
    #[serde(default)]
    pub concentrations: IonMap<Option<Setpoint<S>>>,
    #[serde(default)]
    pub ph: Option<Setpoint<S>>,
    #[serde(default)]
    pub akt: Option<Setpoint<S>>,
    #[serde(default)]
    pub calcineurin: Option<Setpoint<S>>,
    #[serde(default)]
    pub genes: BTreeMap<String, Setpoint<S>>,
    #[serde(default)]
    pub n_target: usize,
    #[serde(default)]
    pub identity: TissueIdentity,
    #[serde(default, with = "crate::util::pairs")]
    pub migration_targets: BTreeMap<CellId, [S; 2]>,
    pub i_max: S,
    pub v_min: S,
    pub v_max: S,
    /// Morphology error reported when no live cell remains (m).
    pub max_morphology_error: S,
}

impl<S: Scalar> TargetSpec<S> {
    /// Targets only the action bounds and current budget; every other term
    /// is empty.
    pub fn bare(i_max: S, v_min: S, v_max: S, max_morphology_error: S) -> Self {
        TargetSpec {
            positions: Vec::new(),
            topology: TopologyGraph::default(),
            vfield: BTreeMap::new(),
            concentrations: IonMap::splat(None),
            ph: None,
            akt: None,
            calcineurin: None,
            genes: BTreeMap::new(),
            n_target: 0,
            identity: TissueIdentity::default(),
            migration_targets: BTreeMap::new(),
            i_max,
            v_min,
            v_max,
            max_morphology_error,
        }
    }

    pub fn validate(&self) -> Result<(), MetricsError> {
        let bad = |m: &str| Err(MetricsError::InvalidTarget(m.into()));
        let scales = self
            .concentrations
            .iter()
            .filter_map(|(_, s)| s.as_ref())
            .chain(self.ph.iter())
            .chain(self.akt.iter())
            .chain(self.calcineurin.iter())
            .chain(self.genes.values());
        for s in scales {
            if !(s.scale > S::zero()) {
                return bad("normalization scales must be positive");
            }
        }
        if !(self.i_max > S::zero()) {
            return bad("i_max must be positive");
        }
        if !(self.v_min < self.v_max) {
            return bad("v_min must be below v_max");
        }
        if !(self.max_morphology_error >= S::zero()) {
            return bad("max_morphology_error must be non-negative");
        }
        Ok(())
    }
}

/// Non-negative term weights. Cell-level: homeostasis, signalling,
/// efficiency. Organ-level: the `*_` fields named after each term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, bound = "S: Scalar")]
pub struct RewardWeights<S> {
    pub homeostasis: S,
    pub signalling: S,
    pub efficiency: S,
    pub morph: S,
    pub topo: S,
    pub bioelec: S,
    pub diff: S,
    pub prolif: S,
    pub apop: S,
    pub gene: S,
    pub mig: S,
    pub eff: S,
}

impl<S: Scalar> Default for RewardWeights<S> {
    fn default() -> Self {
        RewardWeights::splat(S::one())
    }
}

impl<S: Scalar> RewardWeights<S> {
    pub fn splat(w: S) -> Self {
        RewardWeights {
            homeostasis: w,
            signalling: w,
            efficiency: w,
            morph: w,
            topo: w,
            bioelec: w,
            diff: w,
            prolif: w,
            apop: w,
            gene: w,
            mig: w,
            eff: w,
        }
    }

    pub fn as_array(&self) -> [S; 12] {
        [
            self.homeostasis,
            self.signalling,
            self.efficiency,
            self.morph,
            self.topo,
            self.bioelec,
            self.diff,
            self.prolif,
            self.apop,
            self.gene,
            self.mig,
            self.eff,
        ]
    }

    pub fn validate(&self) -> Result<(), MetricsError> {
        if self.as_array().iter().all(|w| *w >= S::zero() && w.is_finite()) {
            Ok(())
        } else {
            Err(MetricsError::InvalidTarget(
                "reward weights must be finite and non-negative".into(),
            ))
        }
    }
}
