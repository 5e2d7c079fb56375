use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::EnvError;
use crate::membrane::{CellParams, CellState, Ion, IonMap, Relaxation};
use crate::metrics::{RewardWeights, Setpoint, TargetSpec};
use crate::scalar::Scalar;
use crate::tissue::{
    ActionBounds, Grid, InjuryMode, InjurySpec, LifecycleParams, Neighborhood, Region, SiteShape, TissueConfig,
    TissueIdentity, TissueState,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RewardKind {
    /// Homeostasis, signalling and squared efficiency of the first live cell.
    Cell,
    /// The compound tissue reward.
    Organ,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum ActionMode<S> {
    /// One clamp target for the whole tissue.
    Global,
    /// One target per electrode; each covers a square of side `footprint`.
    Mesh { footprint: S, electrodes: Vec<[S; 2]> },
}

/// Per-cell features included in the observation, besides voltage,
/// phenotype and position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationSpec {
    #[serde(default)]
    pub ions: Vec<Ion>,
    /// Active Akt and calcineurin.
    #[serde(default)]
    pub signaling: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct Scenario<S> {
    pub name: String,
    pub tissue: TissueConfig<S>,
    #[serde(default)]
    pub injury: Option<InjurySpec<S>>,
    pub target: TargetSpec<S>,
    #[serde(default)]
    pub weights: RewardWeights<S>,
    pub reward: RewardKind,
    /// Steps per episode.
    pub horizon: usize,
    /// Simulated seconds per environment step.
    pub dt: S,
    /// Integrator substeps per environment step.
    pub substeps: usize,
    pub gamma: S,
    pub action: ActionMode<S>,
    pub observation: ObservationSpec,
    /// Constant environmental factors, logged for causal analysis.
    #[serde(default)]
    pub environment: BTreeMap<String, S>,
}

pub const SCENARIO_NAMES: [&str; 3] = ["cell-homeostasis", "tissue-pattern", "heart-recovery"];

impl<S: Scalar> Scenario<S> {
    pub fn bounds(&self) -> ActionBounds<S> {
        ActionBounds::new(self.target.v_min, self.target.v_max)
    }

    pub fn action_dim(&self) -> usize {
        match &self.action {
            ActionMode::Global => 1,
            ActionMode::Mesh { electrodes, .. } => electrodes.len(),
        }
    }

    /// Hex SHA-256 of the scenario's JSON form.
    pub fn digest(&self) -> String {
        crate::util::digest_json(self)
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        let bad = |m: String| Err(EnvError::Config(m));
        if self.horizon == 0 {
            return bad("horizon must be at least 1".into());
        }
        if !(self.gamma >= S::zero() && self.gamma < S::one()) {
            return bad(format!("discount must lie in [0, 1), got {}", self.gamma));
        }
        if !(self.dt > S::zero()) || self.substeps == 0 {
            return bad("dt must be positive and substeps at least 1".into());
        }
        self.tissue.validate().map_err(|e| EnvError::Config(e.to_string()))?;
        self.target.validate().map_err(|e| EnvError::Config(e.to_string()))?;
        self.weights.validate().map_err(|e| EnvError::Config(e.to_string()))?;
        if let ActionMode::Mesh { footprint, electrodes } = &self.action {
            if electrodes.is_empty() || !(*footprint > S::zero()) {
                return bad("mesh mode needs electrodes and a positive footprint".into());
            }
            if let Some(p) = electrodes.iter().find(|p| !self.tissue.grid.contains(**p)) {
                return bad(format!("electrode at ({}, {}) lies outside the domain", p[0], p[1]));
            }
        }
        Ok(())
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "cell-homeostasis" => Some(Self::cell_homeostasis()),
            "tissue-pattern" => Some(Self::tissue_pattern(4)),
            "heart-recovery" => Some(Self::heart_recovery()),
            _ => None,
        }
    }

    /// A single cell under a global clamp. Depolarization raises Akt toward
    /// its target but cuts the calcium influx that keeps calcineurin active,
    /// and every clamp away from rest costs current.
    pub fn cell_homeostasis() -> Self {
        let l = S::lit;
        let mut params = CellParams::default_mammalian();
        params.akt = Relaxation {
            rate: l(4.0),
            target: l(1e-3),
            coupling: l(0.02),
            v_ref: l(-0.065),
        };
        let cell = CellState::default_mammalian();
        let tissue = TissueConfig {
            grid: Grid {
                nx: 1,
                ny: 1,
                spacing: l(2e-5),
            },
            neighborhood: Neighborhood::Four,
            shape: SiteShape::Full,
            conductance: S::zero(),
            cell: cell.clone(),
            params,
            lifecycle: LifecycleParams::inert(),
            identity: TissueIdentity::Cardiac,
            jitter: l(0.02),
        };
        let mut target = TargetSpec::bare(l(4e-11), l(-0.1), l(0.05), S::zero());
        target.concentrations = IonMap::from_fn(|ion| match ion {
            Ion::Na | Ion::K | Ion::Cl => Some(Setpoint::new(cell.conc_in[ion], l(1.0))),
            _ => None,
        });
        target.ph = Some(Setpoint::new(cell.ph(), l(0.1)));
        target.akt = Some(Setpoint::new(l(1.4e-3), l(2e-4)));
        target.calcineurin = Some(Setpoint::new(l(5.5e-4), l(5e-5)));
        Scenario {
            name: "cell-homeostasis".into(),
            tissue,
            injury: None,
            target,
            weights: RewardWeights::splat(S::one()),
            reward: RewardKind::Cell,
            horizon: 50,
            dt: l(0.01),
            substeps: 10,
            gamma: l(0.98),
            action: ActionMode::Global,
            observation: ObservationSpec {
                ions: vec![Ion::Na, Ion::K, Ion::Ca],
                signaling: true,
            },
            environment: environment(&cell),
        }
    }

    /// An `n x n` sheet that should settle into a left/right voltage
    /// gradient, scored by the bioelectric error alone. One electrode per
    /// 2 x 2 block of cells.
    pub fn tissue_pattern(n: usize) -> Self {
        let l = S::lit;
        let h = l(2e-5);
        let cell = CellState::default_mammalian();
        let tissue = TissueConfig {
            grid: Grid {
                nx: n,
                ny: n,
                spacing: h,
            },
            neighborhood: Neighborhood::Four,
            shape: SiteShape::Full,
            conductance: l(2e-9),
            cell: cell.clone(),
            params: CellParams::default_mammalian(),
            lifecycle: LifecycleParams::inert(),
            identity: TissueIdentity::Epithelial,
            jitter: l(0.02),
        };
        let grid = tissue.grid;
        let mut target = TargetSpec::bare(l(1e-9), l(-0.1), l(0.05), grid.diameter());
        target.vfield = (0..grid.len())
            .map(|s| {
                let (i, _) = grid.coords(s);
                let frac = if n > 1 {
                    S::from_usize_lossy(i) / S::from_usize_lossy(n - 1)
                } else {
                    S::zero()
                };
                (s, l(-0.08) + frac * l(0.04))
            })
            .collect();
        let blocks = n.div_ceil(2);
        let electrodes = (0..blocks * blocks)
            .map(|k| {
                let (bi, bj) = (k % blocks, k / blocks);
                [
                    (S::from_usize_lossy(2 * bi) + S::one()) * h,
                    (S::from_usize_lossy(2 * bj) + S::one()) * h,
                ]
            })
            .map(|p| [p[0].min(grid.extent()[0]), p[1].min(grid.extent()[1])])
            .collect();
        let n_cells = S::from_usize_lossy(grid.len());
        let dv = l(0.01);
        let weights = RewardWeights {
            bioelec: S::one() / (dv * dv * cell.volume * n_cells),
            ..RewardWeights::splat(S::zero())
        };
        Scenario {
            name: "tissue-pattern".into(),
            tissue,
            injury: None,
            target,
            weights,
            reward: RewardKind::Organ,
            horizon: 40,
            dt: l(0.01),
            substeps: 10,
            gamma: l(0.95),
            action: ActionMode::Mesh {
                footprint: l(2.0) * h,
                electrodes,
            },
            observation: ObservationSpec {
                ions: vec![Ion::K],
                signaling: false,
            },
            environment: environment(&cell),
        }
    }

    /// A ring of progenitors (the dorsal-vessel analogue) with an ablated
    /// arc. Hyperpolarization below `v_hyper` matures cells into
    /// cardiomyocytes; depolarization above `v_depol` makes them divide;
    /// leaving the survival band for too long triggers apoptosis.
    pub fn heart_recovery() -> Self {
        let l = S::lit;
        let h = l(2e-5);
        let n = 7;
        let cell = CellState::default_mammalian();
        let mut differentiated_genes = BTreeMap::new();
        differentiated_genes.insert("nkx2-5".to_string(), l(1.0));
        differentiated_genes.insert("tnnt2".to_string(), l(1.0));
        let mut progenitor_genes = BTreeMap::new();
        progenitor_genes.insert("nkx2-5".to_string(), l(0.5));
        progenitor_genes.insert("tnnt2".to_string(), S::zero());
        let lifecycle = LifecycleParams {
            v_depol: l(-0.04),
            division_rate: l(4.0),
            v_hyper: l(-0.075),
            differentiation_rate: l(3.0),
            v_apop_lo: l(-0.095),
            v_apop_hi: l(0.0),
            tau_apop: l(0.05),
            apoptosis_duration: l(0.05),
            tau_clear: l(0.05),
            migration_rate: S::zero(),
            k_gene: l(5.0),
            progenitor_genes,
            differentiated_genes,
        };
        let tissue = TissueConfig {
            grid: Grid {
                nx: n,
                ny: n,
                spacing: h,
            },
            neighborhood: Neighborhood::Four,
            shape: SiteShape::Ring {
                inner: l(1.6),
                outer: l(3.2),
            },
            conductance: l(2e-9),
            cell: cell.clone(),
            params: CellParams::default_mammalian(),
            lifecycle,
            identity: TissueIdentity::Cardiac,
            jitter: l(0.02),
        };
        let reference = TissueState::build(&tissue, 0).expect("built-in tissue is valid");
        let grid = tissue.grid;
        let mut target = TargetSpec::bare(l(4e-10), l(-0.09), l(0.05), grid.diameter());
        target.positions = reference.positions();
        target.topology = reference.extract_topology();
        target.vfield = reference.live_cells().map(|c| (c.site, l(-0.085))).collect();
        target.n_target = reference.live_count();
        target.identity = TissueIdentity::Cardiac;
        target.genes.insert("nkx2-5".into(), Setpoint::new(l(1.0), l(0.5)));
        target.genes.insert("tnnt2".into(), Setpoint::new(l(1.0), l(0.5)));
        target.migration_targets = reference.live_cells().map(|c| (c.id, c.position)).collect();
        let n_cells = S::from_usize_lossy(reference.live_count());
        let dv = l(0.02);
        let weights = RewardWeights {
            morph: S::one() / h,
            topo: S::one(),
            bioelec: S::one() / (dv * dv * cell.volume * n_cells),
            diff: S::one(),
            prolif: S::one(),
            apop: S::one(),
            gene: S::one(),
            mig: S::one(),
            eff: l(0.5),
            ..RewardWeights::splat(S::zero())
        };
        // arc in the upper-right quadrant of the ring
        let injury = InjurySpec {
            region: Region::Disk {
                center: [l(5.5) * h, l(5.5) * h],
                radius: l(1.2) * h,
            },
            mode: InjuryMode::Ablate,
        };
        let [w, _] = grid.extent();
        let q = w / l(4.0);
        let electrodes = vec![[q, q], [l(3.0) * q, q], [q, l(3.0) * q], [l(3.0) * q, l(3.0) * q]];
        Scenario {
            name: "heart-recovery".into(),
            tissue,
            injury: Some(injury),
            target,
            weights,
            reward: RewardKind::Organ,
            horizon: 50,
            dt: l(0.01),
            substeps: 10,
            gamma: l(0.97),
            action: ActionMode::Mesh {
                footprint: w / l(2.0),
                electrodes,
            },
            observation: ObservationSpec {
                ions: Vec::new(),
                signaling: false,
            },
            environment: environment(&cell),
        }
    }
}

fn environment<S: Scalar>(cell: &CellState<S>) -> BTreeMap<String, S> {
    let mut env = BTreeMap::new();
    env.insert("temperature".into(), cell.temperature);
    env.insert("k_out".into(), cell.conc_out.k);
    env.insert("ca_out".into(), cell.conc_out.ca);
    env
}

/// The three built-in scenarios in their packaged form.
pub fn scenario_library<S: Scalar>() -> Vec<Scenario<S>> {
    SCENARIO_NAMES
        .iter()
        .map(|n| Scenario::by_name(n).expect("library names resolve"))
        .collect()
}
