use serde::{Deserialize, Serialize};

use super::{TissueError, TissueState};
use crate::scalar::Scalar;

/// Admissible clamp targets `[v_min, v_max]` (V).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionBounds<S> {
    pub v_min: S,
    pub v_max: S,
}

impl<S: Scalar> ActionBounds<S> {
    pub fn new(v_min: S, v_max: S) -> Self {
        ActionBounds { v_min, v_max }
    }

    pub fn check(&self, v: S) -> Result<(), TissueError> {
        if v >= self.v_min && v <= self.v_max {
            Ok(())
        } else {
            Err(TissueError::ActionOutOfRange {
                value: v.as_f64(),
                min: self.v_min.as_f64(),
                max: self.v_max.as_f64(),
            })
        }
    }

    pub fn clip(&self, v: S) -> S {
        v.max(self.v_min).min(self.v_max)
    }

    /// Largest magnitude reachable, used to normalize voltages.
    pub fn scale(&self) -> S {
        self.v_min.abs().max(self.v_max.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Electrode<S> {
    /// m, within the tissue domain
    pub position: [S; 2],
    /// V
    pub v_set: S,
}

/// Spatial clamp pattern applied by the controller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VoltageMesh<S> {
    /// One target for every live cell.
    Global(S),
    /// Square footprints of side `footprint` centered on each electrode.
    Electrodes { footprint: S, entries: Vec<Electrode<S>> },
}

impl<S: Scalar> VoltageMesh<S> {
    /// No electrodes: every cell is left unclamped.
    pub fn empty() -> Self {
        VoltageMesh::Electrodes {
            footprint: S::zero(),
            entries: Vec::new(),
        }
    }

    pub fn targets(&self) -> Vec<S> {
        match self {
            VoltageMesh::Global(v) => vec![*v],
            VoltageMesh::Electrodes { entries, .. } => entries.iter().map(|e| e.v_set).collect(),
        }
    }

    pub fn validate(&self, bounds: &ActionBounds<S>) -> Result<(), TissueError> {
        for v in self.targets() {
            bounds.check(v)?;
        }
        Ok(())
    }

    /// Clamp target for a cell at `p`, if any electrode covers it. On overlap
    /// the nearest electrode wins, ties going to the lowest index.
    pub fn target_at(&self, p: [S; 2]) -> Option<S> {
        match self {
            VoltageMesh::Global(v) => Some(*v),
            VoltageMesh::Electrodes { footprint, entries } => {
                let half = *footprint / S::lit(2.0);
                let mut best: Option<(S, S)> = None;
                for e in entries {
                    let dx = p[0] - e.position[0];
                    let dy = p[1] - e.position[1];
                    if dx.abs() > half || dy.abs() > half {
                        continue;
                    }
                    let d2 = dx * dx + dy * dy;
                    if best.is_none_or(|(bd, _)| d2 < bd) {
                        best = Some((d2, e.v_set));
                    }
                }
                best.map(|(_, v)| v)
            }
        }
    }
}

impl<S: Scalar> TissueState<S> {
    /// Sets each live cell's clamp from the mesh. Lesioned cells keep their
    /// lesion potential. Validation happens before any cell is touched.
    pub fn apply_voltage_mesh(&mut self, mesh: &VoltageMesh<S>, bounds: &ActionBounds<S>) -> Result<(), TissueError> {
        mesh.validate(bounds)?;
        if let VoltageMesh::Electrodes { entries, .. } = mesh {
            for e in entries {
                if !self.config.grid.contains(e.position) {
                    return Err(TissueError::ElectrodeOutsideDomain {
                        x: e.position[0].as_f64(),
                        y: e.position[1].as_f64(),
                    });
                }
            }
        }
        for c in self.cells.iter_mut().filter(|c| c.is_live()) {
            c.cell.clamp = c.lesion.or_else(|| mesh.target_at(c.position));
        }
        Ok(())
    }
}
