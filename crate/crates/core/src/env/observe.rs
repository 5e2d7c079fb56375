use super::Scenario;
use crate::membrane::Ion;
use crate::scalar::Scalar;
use crate::tissue::{PhenotypeKind, TissueCell, TissueState};

const GLOBAL_FEATURES: usize = 2;

fn slot_features<S: Scalar>(scenario: &Scenario<S>) -> usize {
    let o = &scenario.observation;
    1 + o.ions.len() + if o.signaling { 2 } else { 0 } + 3 + 2
}

/// One slot per lattice site plus the global features.
pub fn observation_len<S: Scalar>(scenario: &Scenario<S>) -> usize {
    scenario.tissue.grid.len() * slot_features(scenario) + GLOBAL_FEATURES
}

fn positive_or<S: Scalar>(x: S, fallback: S) -> S {
    if x > S::zero() {
        x
    } else {
        fallback
    }
}

fn conc_scale<S: Scalar>(scenario: &Scenario<S>, ion: Ion) -> S {
    let fallback = positive_or(scenario.tissue.cell.conc_in[ion], S::one());
    scenario.target.concentrations[ion].map_or(fallback, |sp| positive_or(sp.desired, fallback))
}

fn write_cell<S: Scalar>(scenario: &Scenario<S>, c: &TissueCell<S>, out: &mut Vec<S>) {
    let v_scale = scenario.bounds().scale();
    out.push(c.cell.v_mem / v_scale);
    for &ion in &scenario.observation.ions {
        out.push(c.cell.conc_in[ion] / conc_scale(scenario, ion));
    }
    if scenario.observation.signaling {
        let params = &scenario.tissue.params;
        let akt_scale = scenario.target.akt.map_or(params.akt.target, |sp| sp.desired);
        out.push(c.cell.signaling.akt_active / positive_or(akt_scale, S::one()));
        let cn_scale = positive_or(params.cascade.calcineurin_total, S::one());
        out.push(c.cell.signaling.calcineurin_active / cn_scale);
    }
    let one_hot = |k: PhenotypeKind| if c.phenotype.kind == k { S::one() } else { S::zero() };
    out.push(one_hot(PhenotypeKind::Progenitor));
    out.push(one_hot(PhenotypeKind::Differentiated));
    out.push(one_hot(PhenotypeKind::Apoptotic));
    let [w, h] = scenario.tissue.grid.extent();
    out.push(c.position[0] / w);
    out.push(c.position[1] / h);
}

/// Site-ordered per-cell features, zero-padded where a site is empty or its
/// occupant is dead, followed by live fraction and episode progress.
pub(super) fn observe<S: Scalar>(scenario: &Scenario<S>, tissue: &TissueState<S>, step: usize) -> Vec<S> {
    let per_slot = slot_features(scenario);
    let mut out = Vec::with_capacity(observation_len(scenario));
    for site in 0..tissue.config.grid.len() {
        let occupant = tissue.sites[site]
            .and_then(|id| tissue.cell(id))
            .filter(|c| c.is_live());
        match occupant {
            Some(c) => write_cell(scenario, c, &mut out),
            None => out.extend(std::iter::repeat_n(S::zero(), per_slot)),
        }
    }
    let capacity = S::from_usize_lossy(tissue.config.grid.len());
    out.push(S::from_usize_lossy(tissue.live_count()) / capacity);
    out.push(S::from_usize_lossy(step) / S::from_usize_lossy(scenario.horizon));
    out
}
