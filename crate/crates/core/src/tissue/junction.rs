use super::{CellId, TissueState};
use crate::membrane::{Ion, IonMap};
use crate::scalar::{exact_sum, Scalar};

/// Gap-junction currents for one tissue snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct JunctionalCurrents<S> {
    /// Outward current per species, aligned with `TissueState::cells`.
    pub per_cell: Vec<IonMap<S>>,
    /// Total current leaving `a` toward `b` for each junction `(a, b)`.
    pub per_edge: Vec<((CellId, CellId), S)>,
    /// Every signed per-species term added to a cell, as `(cell index, ion, current)`.
    pub contributions: Vec<(usize, Ion, S)>,
}

impl<S: Scalar> JunctionalCurrents<S> {
    /// Exactly rounded sum of every current delivered to any cell.
    pub fn net_total(&self) -> S {
        exact_sum(self.contributions.iter().map(|&(_, _, i)| i))
    }

    pub fn cell_total(&self, index: usize) -> S {
        let m = &self.per_cell[index];
        Ion::ALL.into_iter().map(|ion| m[ion]).sum()
    }
}

impl<S: Scalar> TissueState<S> {
    /// Ohmic coupling `g (V_a - V_b)` through every junction, split across
    /// species by the pair's mean permeability fractions. Each edge adds the
    /// same per-species values with opposite signs to its two cells.
    pub fn junctional_currents(&self) -> JunctionalCurrents<S> {
        let mut per_cell = vec![IonMap::splat(S::zero()); self.cells.len()];
        let mut per_edge = Vec::with_capacity(self.edges.len());
        let mut contributions = Vec::new();
        for (&(a, b), &g) in &self.edges {
            let (Some(ia), Some(ib)) = (self.index_of(a), self.index_of(b)) else {
                continue;
            };
            let (ca, cb) = (&self.cells[ia].cell, &self.cells[ib].cell);
            let current = g * (ca.v_mem - cb.v_mem);
            per_edge.push(((a, b), current));
            if current == S::zero() {
                continue;
            }
            let shares = IonMap::from_fn(|ion| ca.perms[ion] + cb.perms[ion]);
            let total: S = Ion::ALL.into_iter().map(|ion| shares[ion]).sum();
            for ion in Ion::ALL {
                let part = if total > S::zero() {
                    current * shares[ion] / total
                } else if ion == Ion::K {
                    current
                } else {
                    S::zero()
                };
                if part == S::zero() {
                    continue;
                }
                per_cell[ia][ion] = per_cell[ia][ion] + part;
                per_cell[ib][ion] = per_cell[ib][ion] - part;
                contributions.push((ia, ion, part));
                contributions.push((ib, ion, -part));
            }
        }
        JunctionalCurrents {
            per_cell,
            per_edge,
            contributions,
        }
    }
}
