use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{bioelectric_error, morphology_error, topology_error, MetricsError, RewardWeights, TargetSpec};
use crate::membrane::{CellState, Ion};
use crate::scalar::Scalar;
use crate::tissue::{PhenotypeKind, TissueState};

pub const TERM_NAMES: [&str; 12] = [
    "homeostasis",
    "signalling",
    "efficiency",
    "morph",
    "topo",
    "bioelec",
    "diff",
    "prolif",
    "apop",
    "gene",
    "mig",
    "eff",
];

/// Pre-weight reward terms. Penalties are reported already negated (so
/// `morph` is minus the morphology error); bonuses are positive. Terms that
/// do not belong to the active reward are zero.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct RewardTerms<S> {
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

impl<S: Scalar> RewardTerms<S> {
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

    fn from_array(a: [S; 12]) -> Self {
        let [homeostasis, signalling, efficiency, morph, topo, bioelec, diff, prolif, apop, gene, mig, eff] = a;
        RewardTerms {
            homeostasis,
            signalling,
            efficiency,
            morph,
            topo,
            bioelec,
            diff,
            prolif,
            apop,
            gene,
            mig,
            eff,
        }
    }

    pub fn named(&self) -> impl Iterator<Item = (&'static str, S)> {
        TERM_NAMES.into_iter().zip(self.as_array())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct RewardBreakdown<S> {
    pub terms: RewardTerms<S>,
    pub weights: RewardWeights<S>,
    /// `weights[k] * terms[k]`
    pub weighted: RewardTerms<S>,
    pub total: S,
}

impl<S: Scalar> RewardBreakdown<S> {
    pub fn new(terms: RewardTerms<S>, weights: RewardWeights<S>) -> Self {
        let t = terms.as_array();
        let w = weights.as_array();
        let weighted = RewardTerms::from_array(std::array::from_fn(|k| w[k] * t[k]));
        let total = weighted.as_array().into_iter().sum();
        RewardBreakdown {
            terms,
            weights,
            weighted,
            total,
        }
    }
}

/// `-Σ ((c_in - c_desired)/Δc)² - ((pH - pH_desired)/ΔpH)²` over the
/// species the target names.
pub fn homeostasis_reward<S: Scalar>(cell: &CellState<S>, target: &TargetSpec<S>) -> S {
    let ions: S = Ion::ALL
        .into_iter()
        .filter_map(|ion| target.concentrations[ion].map(|sp| sp.deviation(cell.conc_in[ion])))
        .sum();
    let ph = target.ph.map_or(S::zero(), |sp| sp.deviation(cell.ph()));
    -(ions + ph)
}

pub fn signalling_reward<S: Scalar>(cell: &CellState<S>, target: &TargetSpec<S>) -> S {
    let akt = target
        .akt
        .map_or(S::zero(), |sp| sp.deviation(cell.signaling.akt_active));
    let cn = target
        .calcineurin
        .map_or(S::zero(), |sp| sp.deviation(cell.signaling.calcineurin_active));
    -(akt + cn)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EfficiencyForm {
    /// `-(Σ|I| / I_max)²`, the single-cell form.
    Squared,
    /// `-Σ I_T / I_max`, the organ form.
    Linear,
}

/// Sum of absolute per-species membrane currents of one cell (A).
pub fn total_current<S: Scalar>(cell: &CellState<S>) -> S {
    cell.currents().iter().map(|(_, i)| i.abs()).sum()
}

/// `totals` are per-cell sums of absolute species currents.
pub fn efficiency_reward<S: Scalar>(totals: impl IntoIterator<Item = S>, i_max: S, form: EfficiencyForm) -> S {
    let ratio = totals.into_iter().fold(S::zero(), |a, b| a + b) / i_max;
    match form {
        EfficiencyForm::Squared => -(ratio * ratio),
        EfficiencyForm::Linear => -ratio,
    }
}

pub fn cell_reward<S: Scalar>(
    cell: &CellState<S>,
    target: &TargetSpec<S>,
    weights: &RewardWeights<S>,
) -> RewardBreakdown<S> {
    let terms = RewardTerms {
        homeostasis: homeostasis_reward(cell, target),
        signalling: signalling_reward(cell, target),
        efficiency: efficiency_reward([total_current(cell)], target.i_max, EfficiencyForm::Squared),
        ..RewardTerms::default()
    };
    RewardBreakdown::new(terms, *weights)
}

fn live_total<S: Scalar>(tissue: &TissueState<S>) -> S {
    S::from_usize_lossy(tissue.live_count())
}

/// Share of live cells differentiated into the target identity.
pub fn differentiation_reward<S: Scalar>(tissue: &TissueState<S>, target: &TargetSpec<S>) -> S {
    let n = tissue.live_count();
    if n == 0 {
        return S::zero();
    }
    let good = tissue
        .live_cells()
        .filter(|c| {
            c.phenotype.kind == PhenotypeKind::Differentiated && c.phenotype.differentiation_target == target.identity
        })
        .count();
    S::from_usize_lossy(good) / live_total(tissue)
}

/// `(N_T - |N_T - N_Target|) / N_T`. Negative once `N_Target > 2 N_T`.
pub fn proliferation_reward<S: Scalar>(tissue: &TissueState<S>, target: &TargetSpec<S>) -> S {
    let n = tissue.live_count();
    if n == 0 {
        return S::zero();
    }
    let nt = live_total(tissue);
    let gap = S::from_usize_lossy(n.abs_diff(target.n_target));
    (nt - gap) / nt
}

/// Minus the share of live cells undergoing apoptosis.
pub fn apoptosis_reward<S: Scalar>(tissue: &TissueState<S>) -> S {
    if tissue.live_count() == 0 {
        return -S::one();
    }
    -S::from_usize_lossy(tissue.count_kind(PhenotypeKind::Apoptotic)) / live_total(tissue)
}

/// Minus the normalized squared gene-expression deviation, averaged over
/// live cells. A gene missing from a cell counts as zero expression.
pub fn gene_reward<S: Scalar>(tissue: &TissueState<S>, target: &TargetSpec<S>) -> S {
    if target.genes.is_empty() {
        return S::zero();
    }
    if tissue.live_count() == 0 {
        return -S::one();
    }
    let total: S = tissue
        .live_cells()
        .map(|c| {
            target
                .genes
                .iter()
                .map(|(name, sp)| {
                    let level = c.phenotype.gene_expr.get(name).copied().unwrap_or(S::zero());
                    sp.deviation(level)
                })
                .sum::<S>()
        })
        .sum();
    -total / live_total(tissue)
}

/// Minus the summed distance of assigned cells from their destinations, over
/// `N_assigned * diam(Ω)`. An assigned cell that is dead or cleared counts
/// as a full diameter off.
pub fn migration_reward<S: Scalar>(tissue: &TissueState<S>, target: &TargetSpec<S>) -> S {
    if target.migration_targets.is_empty() {
        return S::zero();
    }
    let diam = tissue.config.grid.diameter();
    let total: S = target
        .migration_targets
        .iter()
        .map(|(&id, dest)| match tissue.cell(id).filter(|c| c.is_live()) {
            Some(c) => {
                let (dx, dy) = (c.position[0] - dest[0], c.position[1] - dest[1]);
                (dx * dx + dy * dy).sqrt().min(diam)
            }
            None => diam,
        })
        .sum();
    -total / (S::from_usize_lossy(target.migration_targets.len()) * diam)
}

/// Target field and live field extended by zero over the union of their
/// sites, so that missing or surplus cells count as a full-amplitude error.
fn extended_bioelectric_error<S: Scalar>(tissue: &TissueState<S>, target: &TargetSpec<S>) -> Result<S, MetricsError> {
    let live = tissue.voltage_field();
    let mut model = BTreeMap::new();
    let mut goal = BTreeMap::new();
    let mut volumes = BTreeMap::new();
    let default_volume = tissue.config.cell.volume;
    for &site in live.keys().chain(target.vfield.keys()) {
        model.insert(site, live.get(&site).copied().unwrap_or(S::zero()));
        goal.insert(site, target.vfield.get(&site).copied().unwrap_or(S::zero()));
        let vol = tissue
            .sites
            .get(site)
            .copied()
            .flatten()
            .and_then(|id| tissue.cell(id))
            .filter(|c| c.is_live())
            .map_or(default_volume, |c| c.cell.volume);
        volumes.insert(site, vol);
    }
    bioelectric_error(&model, &goal, &volumes)
}

/// Pre-weight organ terms. Targets left empty (no positions, no graph, no
/// field) contribute zero.
pub fn organ_terms<S: Scalar>(tissue: &TissueState<S>, target: &TargetSpec<S>) -> Result<RewardTerms<S>, MetricsError> {
    let morph = if target.positions.is_empty() {
        S::zero()
    } else {
        -morphology_error(tissue, target)?
    };
    let topo = if target.topology.is_empty() {
        S::zero()
    } else {
        -topology_error(&tissue.extract_topology(), &target.topology)?
    };
    let bioelec = if target.vfield.is_empty() {
        S::zero()
    } else {
        -extended_bioelectric_error(tissue, target)?
    };
    let currents = tissue.live_cells().map(|c| total_current(&c.cell));
    Ok(RewardTerms {
        morph,
        topo,
        bioelec,
        diff: differentiation_reward(tissue, target),
        prolif: proliferation_reward(tissue, target),
        apop: apoptosis_reward(tissue),
        gene: gene_reward(tissue, target),
        mig: migration_reward(tissue, target),
        eff: efficiency_reward(currents, target.i_max, EfficiencyForm::Linear),
        ..RewardTerms::default()
    })
}

pub fn organ_reward<S: Scalar>(
    tissue: &TissueState<S>,
    target: &TargetSpec<S>,
    weights: &RewardWeights<S>,
) -> Result<RewardBreakdown<S>, MetricsError> {
    Ok(RewardBreakdown::new(organ_terms(tissue, target)?, *weights))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::membrane::IonMap;
    use crate::metrics::Setpoint;
    use crate::tissue::tests::config;

    fn cell_target() -> TargetSpec<f64> {
        let cell = CellState::<f64>::default_mammalian();
        let mut t = TargetSpec::bare(1e-9, -0.1, 0.05, 0.0);
        t.concentrations = IonMap::from_fn(|ion| match ion {
            Ion::Na | Ion::K | Ion::Cl => Some(Setpoint::new(cell.conc_in[ion], 2.0)),
            _ => None,
        });
        t.ph = Some(Setpoint::new(cell.ph(), 0.1));
        t.akt = Some(Setpoint::new(cell.signaling.akt_active, 1e-4));
        t.calcineurin = Some(Setpoint::new(cell.signaling.calcineurin_active, 1e-4));
        t
    }

    #[test]
    fn homeostasis_examples() {
        let t = cell_target();
        let mut cell = CellState::default_mammalian();
        assert_eq!(homeostasis_reward(&cell, &t), 0.0);
        cell.conc_in.na += 2.0;
        assert!((homeostasis_reward(&cell, &t) + 1.0).abs() < 1e-12);
        cell.conc_in.k -= 2.0;
        assert!((homeostasis_reward(&cell, &t) + 2.0).abs() < 1e-12);
    }

    #[test]
    fn signalling_examples() {
        let t = cell_target();
        let mut cell = CellState::default_mammalian();
        assert_eq!(signalling_reward(&cell, &t), 0.0);
        cell.signaling.akt_active += 1e-4;
        assert!((signalling_reward(&cell, &t) + 1.0).abs() < 1e-12);
        cell.signaling.calcineurin_active -= 1e-4;
        assert!((signalling_reward(&cell, &t) + 2.0).abs() < 1e-12);
    }

    #[test]
    fn efficiency_examples() {
        use EfficiencyForm::*;
        assert_eq!(efficiency_reward([0.0, 0.0], 1e-9, Squared), 0.0);
        assert_eq!(efficiency_reward([1e-9], 1e-9, Squared), -1.0);
        assert_eq!(efficiency_reward([1e-9, 1e-9], 1e-9, Squared), -4.0);
        assert_eq!(efficiency_reward([1e-9, 1e-9], 1e-9, Linear), -2.0);
    }

    #[test]
    fn proliferation_examples() {
        let tissue = TissueState::build(&config(5, 2), 0).unwrap();
        let mut t = TargetSpec::bare(1.0, -0.1, 0.05, 0.0);
        t.n_target = 10;
        assert_eq!(proliferation_reward(&tissue, &t), 1.0);
        t.n_target = 5;
        assert_eq!(proliferation_reward(&tissue, &t), 0.5);
        t.n_target = 25;
        assert_eq!(proliferation_reward(&tissue, &t), -0.5);
    }

    #[test]
    fn breakdown_total_is_weighted_sum() {
        let cell = CellState::default_mammalian();
        let mut t = cell_target();
        t.ph = Some(Setpoint::new(7.0, 0.1));
        let w = RewardWeights {
            homeostasis: 0.3,
            signalling: 2.0,
            efficiency: 0.7,
            ..RewardWeights::splat(0.0)
        };
        let b = cell_reward(&cell, &t, &w);
        let expect =
            0.3 * homeostasis_reward(&cell, &t) + 2.0 * signalling_reward(&cell, &t) + 0.7 * b.terms.efficiency;
        assert!((b.total - expect).abs() <= 1e-12 * expect.abs());
        assert_eq!(cell_reward(&cell, &t, &RewardWeights::splat(0.0)).total, 0.0);
    }

    #[test]
    fn all_dead_tissue_terms() {
        let mut tissue = TissueState::build(&config(3, 3), 0).unwrap();
        let mut t = TargetSpec::bare(1e-9, -0.1, 0.05, 7.0);
        t.positions = tissue.positions();
        t.topology = tissue.extract_topology();
        t.vfield = tissue.voltage_field();
        t.n_target = 9;
        t.genes.insert("nkx2-5".into(), Setpoint::new(1.0, 0.5));
        t.migration_targets.insert(0, [0.0, 0.0]);
        for c in tissue.cells.iter_mut() {
            c.phenotype.kind = PhenotypeKind::Dead;
        }
        let terms = organ_terms(&tissue, &t).unwrap();
        assert_eq!(terms.morph, -7.0);
        assert_eq!(terms.topo, -1.0);
        assert_eq!((terms.diff, terms.prolif), (0.0, 0.0));
        assert_eq!((terms.apop, terms.gene, terms.mig), (-1.0, -1.0, -1.0));
        assert_eq!(terms.eff, 0.0);
        assert!(terms.bioelec < 0.0);
    }
}
