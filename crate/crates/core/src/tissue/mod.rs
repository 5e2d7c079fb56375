//! Cells on a 2D lattice, coupled by gap junctions, with stochastic
//! lifecycle behavior driven by membrane potential.

mod injury;
mod junction;
mod lifecycle;
mod mesh;
mod topology;

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::membrane::{step_cell, CellParams, CellState, Ion, IonMap, MembraneError};
use crate::scalar::Scalar;

pub use injury::{InjuryMode, InjurySpec, Region};
pub use junction::JunctionalCurrents;
pub use lifecycle::{LifecycleEvents, LifecycleParams};
pub use mesh::{ActionBounds, Electrode, VoltageMesh};
pub use topology::{parse_edge_list, TopologyGraph, TopologyNode};

pub type CellId = u64;

#[derive(Debug, Error)]
pub enum TissueError {
    #[error("invalid tissue configuration: {0}")]
    Config(String),
    #[error("action target {value} V outside [{min}, {max}] V")]
    ActionOutOfRange { value: f64, min: f64, max: f64 },
    #[error("electrode at ({x}, {y}) lies outside the tissue domain")]
    ElectrodeOutsideDomain { x: f64, y: f64 },
    #[error("injury region does not intersect any live cell")]
    EmptyRegion,
    #[error("injury region does not intersect the tissue domain")]
    RegionOutsideDomain,
    #[error("cell {id}: {source}")]
    Membrane {
        id: CellId,
        #[source]
        source: MembraneError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Neighborhood {
    #[default]
    Four,
    Eight,
}

impl Neighborhood {
    fn offsets(self) -> &'static [(i64, i64)] {
        match self {
            Neighborhood::Four => &[(0, -1), (-1, 0), (1, 0), (0, 1)],
            Neighborhood::Eight => &[(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)],
        }
    }
}

/// Which lattice sites start occupied.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum SiteShape<S> {
    #[default]
    Full,
    /// Sites whose center lies within `[inner, outer]` grid spacings of the
    /// domain center.
    Ring { inner: S, outer: S },
}

/// Axis-aligned lattice `[0, nx*h] x [0, ny*h]`; site `(i, j)` is centered at
/// `((i + 0.5) h, (j + 0.5) h)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid<S> {
    pub nx: usize,
    pub ny: usize,
    /// m
    pub spacing: S,
}

impl<S: Scalar> Grid<S> {
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn coords(&self, site: usize) -> (usize, usize) {
        (site % self.nx, site / self.nx)
    }

    pub fn site(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn center(&self, site: usize) -> [S; 2] {
        let (i, j) = self.coords(site);
        let half = S::lit(0.5);
        [
            (S::from_usize_lossy(i) + half) * self.spacing,
            (S::from_usize_lossy(j) + half) * self.spacing,
        ]
    }

    pub fn extent(&self) -> [S; 2] {
        [
            S::from_usize_lossy(self.nx) * self.spacing,
            S::from_usize_lossy(self.ny) * self.spacing,
        ]
    }

    /// Length of the domain diagonal.
    pub fn diameter(&self) -> S {
        let [w, h] = self.extent();
        (w * w + h * h).sqrt()
    }

    pub fn contains(&self, p: [S; 2]) -> bool {
        let [w, h] = self.extent();
        p[0] >= S::zero() && p[0] <= w && p[1] >= S::zero() && p[1] <= h
    }

    /// Sites adjacent to `site` in the given neighborhood, ascending.
    pub fn neighbors(&self, site: usize, hood: Neighborhood) -> Vec<usize> {
        let (i, j) = self.coords(site);
        let mut out: Vec<usize> = hood
            .offsets()
            .iter()
            .filter_map(|&(di, dj)| {
                let (ni, nj) = (i as i64 + di, j as i64 + dj);
                (ni >= 0 && nj >= 0 && (ni as usize) < self.nx && (nj as usize) < self.ny)
                    .then(|| self.site(ni as usize, nj as usize))
            })
            .collect();
        out.sort_unstable();
        out
    }

    pub fn shape_sites(&self, shape: &SiteShape<S>) -> Vec<usize> {
        match shape {
            SiteShape::Full => (0..self.len()).collect(),
            SiteShape::Ring { inner, outer } => {
                let cx = S::from_usize_lossy(self.nx) / S::lit(2.0);
                let cy = S::from_usize_lossy(self.ny) / S::lit(2.0);
                (0..self.len())
                    .filter(|&s| {
                        let (i, j) = self.coords(s);
                        let dx = S::from_usize_lossy(i) + S::lit(0.5) - cx;
                        let dy = S::from_usize_lossy(j) + S::lit(0.5) - cy;
                        let r = (dx * dx + dy * dy).sqrt();
                        r >= *inner && r <= *outer
                    })
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhenotypeKind {
    Progenitor,
    Differentiated,
    Apoptotic,
    Dead,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TissueIdentity {
    #[default]
    Cardiac,
    Epithelial,
    Neural,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phenotype<S> {
    pub kind: PhenotypeKind,
    pub differentiation_target: TissueIdentity,
    pub gene_expr: BTreeMap<String, S>,
    /// s
    pub age: S,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct TissueCell<S> {
    pub id: CellId,
    pub site: usize,
    pub position: [S; 2],
    pub cell: CellState<S>,
    pub phenotype: Phenotype<S>,
    /// Continuous time spent outside the survival band.
    pub stress_time: S,
    /// Time since apoptosis onset.
    pub apoptotic_time: S,
    /// Persistent clamp imposed by a lesion; overrides electrodes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lesion: Option<S>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub migration_target: Option<[S; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dead_since: Option<S>,
}

impl<S> TissueCell<S> {
    pub fn is_live(&self) -> bool {
        self.phenotype.kind != PhenotypeKind::Dead
    }
}

/// Static description of a tissue. Lengths in m, conductance in S.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct TissueConfig<S> {
    pub grid: Grid<S>,
    #[serde(default)]
    pub neighborhood: Neighborhood,
    #[serde(default)]
    pub shape: SiteShape<S>,
    pub conductance: S,
    pub cell: CellState<S>,
    pub params: CellParams<S>,
    pub lifecycle: LifecycleParams<S>,
    #[serde(default)]
    pub identity: TissueIdentity,
    /// Relative uniform jitter applied to the initial Na/K/Cl pools per cell.
    #[serde(default)]
    pub jitter: S,
}

impl<S: Scalar> TissueConfig<S> {
    pub fn validate(&self) -> Result<(), TissueError> {
        let cfg = |m: &str| Err(TissueError::Config(m.to_string()));
        if self.grid.nx == 0 || self.grid.ny == 0 {
            return cfg("grid dimensions must be at least 1x1");
        }
        if !(self.grid.spacing > S::zero()) {
            return cfg("grid spacing must be positive");
        }
        if !(self.conductance >= S::zero()) {
            return cfg("gap-junction conductance must be non-negative");
        }
        if !(self.jitter >= S::zero() && self.jitter < S::one()) {
            return cfg("jitter must lie in [0, 1)");
        }
        self.cell
            .validate(&self.params)
            .map_err(|e| TissueError::Config(e.to_string()))?;
        self.lifecycle.validate()
    }
}

// JSON maps need string keys, so junctions are stored as `[a, b, g]` triples.
mod edge_list {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::CellId;
    use crate::scalar::Scalar;

    pub fn serialize<S: Scalar, Z: Serializer>(
        edges: &BTreeMap<(CellId, CellId), S>,
        ser: Z,
    ) -> Result<Z::Ok, Z::Error> {
        let rows: Vec<(CellId, CellId, S)> = edges.iter().map(|(&(a, b), &g)| (a, b, g)).collect();
        rows.serialize(ser)
    }

    pub fn deserialize<'de, S: Scalar, D: Deserializer<'de>>(de: D) -> Result<BTreeMap<(CellId, CellId), S>, D::Error> {
        let rows: Vec<(CellId, CellId, S)> = Vec::deserialize(de)?;
        Ok(rows.into_iter().map(|(a, b, g)| ((a, b), g)).collect())
    }
}

/// Electrophysiological and morphological state of the whole tissue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct TissueState<S> {
    pub config: TissueConfig<S>,
    /// Sorted by id; includes dead cells until their site is cleared.
    pub cells: Vec<TissueCell<S>>,
    /// Occupant of each lattice site (dead cells keep their site).
    pub sites: Vec<Option<CellId>>,
    /// Undirected gap junctions keyed `(lo, hi)`.
    #[serde(with = "edge_list")]
    pub edges: BTreeMap<(CellId, CellId), S>,
    /// s
    pub t: S,
    pub next_id: CellId,
    #[serde(with = "crate::util::chacha_state")]
    pub rng: ChaCha8Rng,
}

fn edge_key(a: CellId, b: CellId) -> (CellId, CellId) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl<S: Scalar> TissueState<S> {
    /// Builds the initial tissue. Deterministic in `(config, seed)`.
    pub fn build(config: &TissueConfig<S>, seed: u64) -> Result<Self, TissueError> {
        config.validate()?;
        let grid = config.grid;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut tissue = TissueState {
            config: config.clone(),
            cells: Vec::new(),
            sites: vec![None; grid.len()],
            edges: BTreeMap::new(),
            t: S::zero(),
            next_id: 0,
            rng: ChaCha8Rng::seed_from_u64(0),
        };
        let genes = config.lifecycle.progenitor_genes.clone();
        for site in grid.shape_sites(&config.shape) {
            let mut cell = config.cell.clone();
            if config.jitter > S::zero() {
                for ion in [Ion::Na, Ion::K, Ion::Cl] {
                    let u = S::lit(rng.random::<f64>() * 2.0 - 1.0);
                    cell.conc_in[ion] = cell.conc_in[ion] * (S::one() + config.jitter * u);
                }
            }
            cell.clamp = None;
            cell.v_mem = cell
                .resolve_voltage(&config.params)
                .map_err(|e| TissueError::Config(e.to_string()))?;
            let phenotype = Phenotype {
                kind: PhenotypeKind::Progenitor,
                differentiation_target: config.identity,
                gene_expr: genes.clone(),
                age: S::zero(),
            };
            tissue.insert_cell(site, cell, phenotype);
        }
        tissue.rng = rng;
        Ok(tissue)
    }

    /// Places a new cell and connects it to its live neighbors.
    fn insert_cell(&mut self, site: usize, cell: CellState<S>, phenotype: Phenotype<S>) -> CellId {
        let id = self.next_id;
        self.next_id += 1;
        self.cells.push(TissueCell {
            id,
            site,
            position: self.config.grid.center(site),
            cell,
            phenotype,
            stress_time: S::zero(),
            apoptotic_time: S::zero(),
            lesion: None,
            migration_target: None,
            dead_since: None,
        });
        self.sites[site] = Some(id);
        self.connect(id, site);
        id
    }

    fn connect(&mut self, id: CellId, site: usize) {
        let g = self.config.conductance;
        for n in self.config.grid.neighbors(site, self.config.neighborhood) {
            if let Some(other) = self.sites[n] {
                if other != id && self.cell(other).is_some_and(|c| c.is_live()) {
                    self.edges.insert(edge_key(id, other), g);
                }
            }
        }
    }

    fn disconnect(&mut self, id: CellId) {
        self.edges.retain(|&(a, b), _| a != id && b != id);
    }

    pub fn index_of(&self, id: CellId) -> Option<usize> {
        self.cells.binary_search_by_key(&id, |c| c.id).ok()
    }

    pub fn cell(&self, id: CellId) -> Option<&TissueCell<S>> {
        self.index_of(id).map(|i| &self.cells[i])
    }

    pub fn cell_mut(&mut self, id: CellId) -> Option<&mut TissueCell<S>> {
        self.index_of(id).map(move |i| &mut self.cells[i])
    }

    pub fn live_cells(&self) -> impl Iterator<Item = &TissueCell<S>> {
        self.cells.iter().filter(|c| c.is_live())
    }

    pub fn live_count(&self) -> usize {
        self.live_cells().count()
    }

    pub fn count_kind(&self, kind: PhenotypeKind) -> usize {
        self.cells.iter().filter(|c| c.phenotype.kind == kind).count()
    }

    /// Occupied positions of live cells (the tissue morphology).
    pub fn positions(&self) -> Vec<[S; 2]> {
        self.live_cells().map(|c| c.position).collect()
    }

    /// Membrane potential per occupied site (the bioelectric field).
    pub fn voltage_field(&self) -> BTreeMap<usize, S> {
        self.live_cells().map(|c| (c.site, c.cell.v_mem)).collect()
    }

    pub fn is_free(&self, site: usize) -> bool {
        self.sites[site].is_none()
    }

    /// Marks a cell dead, severs its junctions and drops any clamp.
    fn kill(&mut self, id: CellId) {
        let t = self.t;
        if let Some(c) = self.cell_mut(id) {
            c.phenotype.kind = PhenotypeKind::Dead;
            c.cell.clamp = None;
            c.lesion = None;
            c.dead_since = Some(t);
        }
        self.disconnect(id);
    }

    /// Moves a live cell to a free site, rewiring its junctions.
    fn relocate(&mut self, id: CellId, site: usize) {
        let grid = self.config.grid;
        let old = match self.cell(id) {
            Some(c) => c.site,
            None => return,
        };
        self.sites[old] = None;
        self.sites[site] = Some(id);
        if let Some(c) = self.cell_mut(id) {
            c.site = site;
            c.position = grid.center(site);
        }
        self.disconnect(id);
        self.connect(id, site);
    }

    /// One environment tick: clamp from the mesh, electro-diffusion with
    /// junctional currents frozen at the pre-step snapshot, then lifecycle.
    pub fn step(
        &mut self,
        mesh: &VoltageMesh<S>,
        bounds: &ActionBounds<S>,
        dt: S,
    ) -> Result<LifecycleEvents, TissueError> {
        if !(dt > S::zero()) {
            return Err(TissueError::Config(format!("time step must be positive, got {dt}")));
        }
        self.apply_voltage_mesh(mesh, bounds)?;
        let junctional = self.junctional_currents();
        let params = &self.config.params;
        let zero = IonMap::splat(S::zero());
        let mut next: Vec<Option<CellState<S>>> = Vec::with_capacity(self.cells.len());
        for (k, c) in self.cells.iter().enumerate() {
            if !c.is_live() {
                next.push(None);
                continue;
            }
            let j = junctional.per_cell.get(k).unwrap_or(&zero);
            let stepped =
                step_cell(&c.cell, params, j, dt).map_err(|source| TissueError::Membrane { id: c.id, source })?;
            next.push(Some(stepped));
        }
        for (c, n) in self.cells.iter_mut().zip(next) {
            if let Some(n) = n {
                c.cell = n;
            }
        }
        let events = self.step_lifecycle(dt);
        self.t = self.t + dt;
        Ok(events)
    }

    /// Content digest of the full state (hex SHA-256 of its JSON encoding).
    pub fn digest(&self) -> String {
        crate::util::digest_json(self)
    }

    /// Ids of live cells adjacent to `id`.
    pub fn neighbors_of(&self, id: CellId) -> BTreeSet<CellId> {
        self.edges
            .keys()
            .filter_map(|&(a, b)| {
                if a == id {
                    Some(b)
                } else if b == id {
                    Some(a)
                } else {
                    None
                }
            })
            .collect()
    }
}
