use serde::{Deserialize, Serialize};

use super::{CellId, TissueError, TissueState};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Region<S> {
    Rect { min: [S; 2], max: [S; 2] },
    Disk { center: [S; 2], radius: S },
}

impl<S: Scalar> Region<S> {
    /// Closed-set membership of a cell center.
    pub fn contains(&self, p: [S; 2]) -> bool {
        match self {
            Region::Rect { min, max } => p[0] >= min[0] && p[0] <= max[0] && p[1] >= min[1] && p[1] <= max[1],
            Region::Disk { center, radius } => {
                let (dx, dy) = (p[0] - center[0], p[1] - center[1]);
                dx * dx + dy * dy <= *radius * *radius
            }
        }
    }

    fn bounding_box(&self) -> ([S; 2], [S; 2]) {
        match *self {
            Region::Rect { min, max } => (min, max),
            Region::Disk { center, radius } => (
                [center[0] - radius, center[1] - radius],
                [center[0] + radius, center[1] + radius],
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum InjuryMode<S> {
    /// Kill every cell in the region.
    Ablate,
    /// Hold every cell in the region at `magnitude` volts indefinitely.
    DepolarizeLesion { magnitude: S },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InjurySpec<S> {
    pub region: Region<S>,
    pub mode: InjuryMode<S>,
}

impl<S: Scalar> TissueState<S> {
    /// Applies an injury and returns the affected cell ids.
    pub fn induce_injury(&mut self, spec: &InjurySpec<S>) -> Result<Vec<CellId>, TissueError> {
        let [w, h] = self.config.grid.extent();
        let (lo, hi) = spec.region.bounding_box();
        let valid = match spec.region {
            Region::Disk { radius, .. } => radius >= S::zero(),
            Region::Rect { min, max } => min[0] <= max[0] && min[1] <= max[1],
        };
        if !valid || hi[0] < S::zero() || hi[1] < S::zero() || lo[0] > w || lo[1] > h {
            return Err(TissueError::RegionOutsideDomain);
        }
        let hit: Vec<CellId> = self
            .live_cells()
            .filter(|c| spec.region.contains(c.position))
            .map(|c| c.id)
            .collect();
        if hit.is_empty() {
            return Err(TissueError::EmptyRegion);
        }
        for &id in &hit {
            match spec.mode {
                InjuryMode::Ablate => self.kill(id),
                InjuryMode::DepolarizeLesion { magnitude } => {
                    if let Some(c) = self.cell_mut(id) {
                        c.lesion = Some(magnitude);
                        c.cell.clamp = Some(magnitude);
                    }
                }
            }
        }
        Ok(hit)
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::config;
    use super::super::*;

    #[test]
    fn ablating_everything_leaves_no_edges() {
        let mut t = TissueState::build(&config(3, 3), 0).unwrap();
        let spec = InjurySpec {
            region: Region::Rect {
                min: [0.0, 0.0],
                max: [3e-5, 3e-5],
            },
            mode: InjuryMode::Ablate,
        };
        assert_eq!(t.induce_injury(&spec).unwrap().len(), 9);
        assert_eq!(t.live_count(), 0);
        assert!(t.edges.is_empty());
        assert_eq!(t.extract_topology().nodes.len(), 0);
    }

    #[test]
    fn zero_radius_disk_hits_one_cell() {
        let mut t = TissueState::build(&config(3, 3), 0).unwrap();
        let spec = InjurySpec {
            region: Region::Disk {
                center: t.config.grid.center(4),
                radius: 0.0,
            },
            mode: InjuryMode::Ablate,
        };
        assert_eq!(t.induce_injury(&spec).unwrap(), vec![4]);
        assert_eq!(t.live_count(), 8);
        // centre cell had 4 junctions
        assert_eq!(t.edges.len(), 8);
    }

    #[test]
    fn disk_ablation_count_matches_lattice_enumeration() {
        let mut t = TissueState::build(&config(7, 7), 0).unwrap();
        let center = [3.5e-5, 3.5e-5];
        let radius = 1.5e-5;
        // independent count over integer lattice offsets: i^2 + j^2 <= 1.5^2
        let mut expected = 0;
        for i in -3i32..=3 {
            for j in -3i32..=3 {
                if (i * i + j * j) as f64 <= 2.25 {
                    expected += 1;
                }
            }
        }
        assert_eq!(expected, 9);
        let spec = InjurySpec {
            region: Region::Disk { center, radius },
            mode: InjuryMode::Ablate,
        };
        t.induce_injury(&spec).unwrap();
        assert_eq!(t.live_count(), 49 - expected);
    }

    #[test]
    fn ablation_is_idempotent() {
        let mut t = TissueState::build(&config(4, 4), 0).unwrap();
        let spec = InjurySpec {
            region: Region::Disk {
                center: [1e-5, 1e-5],
                radius: 1e-5,
            },
            mode: InjuryMode::Ablate,
        };
        t.induce_injury(&spec).unwrap();
        let once = t.clone();
        assert!(matches!(t.induce_injury(&spec), Err(TissueError::EmptyRegion)));
        assert_eq!(t, once);
    }

    #[test]
    fn lesion_clamps_persistently() {
        let mut t = TissueState::build(&config(3, 1), 0).unwrap();
        let spec = InjurySpec {
            region: Region::Rect {
                min: [0.0, 0.0],
                max: [1e-5, 1e-5],
            },
            mode: InjuryMode::DepolarizeLesion { magnitude: -0.01 },
        };
        assert_eq!(t.induce_injury(&spec).unwrap(), vec![0]);
        let bounds = ActionBounds::new(-0.1, 0.05);
        t.step(&VoltageMesh::empty(), &bounds, 1e-3).unwrap();
        assert_eq!(t.cells[0].cell.v_mem, -0.01);
        assert!(t.cells[1].cell.clamp.is_none());
    }

    #[test]
    fn region_outside_domain_rejected() {
        let mut t = TissueState::build(&config(2, 2), 0).unwrap();
        let spec = InjurySpec {
            region: Region::Disk {
                center: [1.0, 1.0],
                radius: 1e-6,
            },
            mode: InjuryMode::Ablate,
        };
        assert!(matches!(t.induce_injury(&spec), Err(TissueError::RegionOutsideDomain)));
    }
}
