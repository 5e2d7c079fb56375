//! Episodic control environment over a simulated tissue.

mod log;
mod observe;
mod scenario;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{cell_reward, organ_reward, MetricsError, RewardBreakdown};
use crate::scalar::Scalar;
use crate::tissue::{Electrode, LifecycleEvents, TissueError, TissueState, VoltageMesh};

pub use log::{read_log, EpisodeLogger, LogHeader, LogRecord, Observables, StepRecord, ARTIFACT_VERSION};
pub use observe::observation_len;
pub use scenario::{scenario_library, ActionMode, ObservationSpec, RewardKind, Scenario, SCENARIO_NAMES};

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("invalid scenario: {0}")]
    Config(String),
    #[error("action target {value} V outside [{min}, {max}] V")]
    ActionOutOfRange { value: f64, min: f64, max: f64 },
    #[error("episode is over; call reset before stepping again")]
    SteppedAfterDone,
    #[error("environment has not been reset")]
    NotReset,
    #[error("action vector has {got} components, expected {expected}")]
    ActionDimension { got: usize, expected: usize },
    #[error(transparent)]
    Tissue(TissueError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("log I/O: {0}")]
    Io(#[from] std::io::Error),
}

impl From<TissueError> for EnvError {
    fn from(e: TissueError) -> Self {
        match e {
            TissueError::ActionOutOfRange { value, min, max } => EnvError::ActionOutOfRange { value, min, max },
            other => EnvError::Tissue(other),
        }
    }
}

impl EnvError {
    /// Whether the failure came from the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(self, EnvError::Tissue(TissueError::Membrane { .. }))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome<S> {
    pub observation: Vec<S>,
    /// `info.total + terminal_penalty`
    pub reward: S,
    /// Discounted value of the all-dead reward over the steps an early
    /// extinction cut from the horizon; zero otherwise.
    pub terminal_penalty: S,
    pub done: bool,
    pub info: RewardBreakdown<S>,
    pub events: LifecycleEvents,
}

/// `Σ_t γ^t R_t`
pub fn discounted_return<S: Scalar>(rewards: &[S], gamma: S) -> S {
    let mut factor = S::one();
    let mut total = S::zero();
    for &r in rewards {
        total = total + factor * r;
        factor = factor * gamma;
    }
    total
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct Env<S: Scalar> {
    scenario: Scenario<S>,
    tissue: Option<TissueState<S>>,
    step: usize,
    done: bool,
}

impl<S: Scalar> Env<S> {
    pub fn new(scenario: Scenario<S>) -> Result<Self, EnvError> {
        scenario.validate()?;
        Ok(Env {
            scenario,
            tissue: None,
            step: 0,
            done: false,
        })
    }

    pub fn scenario(&self) -> &Scenario<S> {
        &self.scenario
    }

    pub fn tissue(&self) -> Option<&TissueState<S>> {
        self.tissue.as_ref()
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn action_dim(&self) -> usize {
        self.scenario.action_dim()
    }

    pub fn observation_len(&self) -> usize {
        observation_len(&self.scenario)
    }

    /// Builds the tissue for `seed`, applies the scenario's injury, and
    /// returns the initial observation.
    pub fn reset(&mut self, seed: u64) -> Result<Vec<S>, EnvError> {
        let mut tissue = TissueState::build(&self.scenario.tissue, seed)?;
        if let Some(injury) = &self.scenario.injury {
            tissue.induce_injury(injury)?;
        }
        self.tissue = Some(tissue);
        self.step = 0;
        self.done = false;
        self.observe()
    }

    pub fn observe(&self) -> Result<Vec<S>, EnvError> {
        let tissue = self.tissue.as_ref().ok_or(EnvError::NotReset)?;
        Ok(observe::observe(&self.scenario, tissue, self.step))
    }

    /// Reward of the current state without advancing it.
    pub fn evaluate(&self) -> Result<RewardBreakdown<S>, EnvError> {
        let tissue = self.tissue.as_ref().ok_or(EnvError::NotReset)?;
        reward_of(&self.scenario, tissue)
    }

    /// Maps a vector in `[-1, 1]^d` onto clamp targets in `[V_min, V_max]`.
    /// Components outside the unit box are clipped.
    pub fn mesh_from_unit(&self, unit: &[S]) -> Result<VoltageMesh<S>, EnvError> {
        let expected = self.action_dim();
        if unit.len() != expected {
            return Err(EnvError::ActionDimension {
                got: unit.len(),
                expected,
            });
        }
        let b = self.scenario.bounds();
        let half = S::lit(0.5);
        let to_volts = |u: S| {
            let u = u.max(-S::one()).min(S::one());
            b.clip(b.v_min + (u + S::one()) * half * (b.v_max - b.v_min))
        };
        Ok(match &self.scenario.action {
            ActionMode::Global => VoltageMesh::Global(to_volts(unit[0])),
            ActionMode::Mesh { footprint, electrodes } => VoltageMesh::Electrodes {
                footprint: *footprint,
                entries: electrodes
                    .iter()
                    .zip(unit)
                    .map(|(&position, &u)| Electrode {
                        position,
                        v_set: to_volts(u),
                    })
                    .collect(),
            },
        })
    }

    /// A clamp of `v` volts in the scenario's action layout.
    pub fn uniform_mesh(&self, v: S) -> VoltageMesh<S> {
        match &self.scenario.action {
            ActionMode::Global => VoltageMesh::Global(v),
            ActionMode::Mesh { footprint, electrodes } => VoltageMesh::Electrodes {
                footprint: *footprint,
                entries: electrodes
                    .iter()
                    .map(|&position| Electrode { position, v_set: v })
                    .collect(),
            },
        }
    }

    /// Advances one environment step under `action`. Invalid actions are
    /// rejected before the state is touched.
    pub fn step(&mut self, action: &VoltageMesh<S>) -> Result<StepOutcome<S>, EnvError> {
        if self.done {
            return Err(EnvError::SteppedAfterDone);
        }
        let tissue = self.tissue.as_mut().ok_or(EnvError::NotReset)?;
        let bounds = self.scenario.bounds();
        action.validate(&bounds)?;
        let sub = self.scenario.dt / S::from_usize_lossy(self.scenario.substeps);
        let mut events = LifecycleEvents::default();
        for _ in 0..self.scenario.substeps {
            events.merge(tissue.step(action, &bounds, sub)?);
        }
        self.step += 1;
        let info = reward_of(&self.scenario, tissue)?;
        let extinct = tissue.live_count() == 0;
        self.done = self.step >= self.scenario.horizon || extinct;
        let mut terminal_penalty = S::zero();
        if extinct {
            let gamma = self.scenario.gamma;
            let mut factor = S::one();
            for _ in self.step..self.scenario.horizon {
                factor = factor * gamma;
                terminal_penalty = terminal_penalty + factor * info.total;
            }
        }
        Ok(StepOutcome {
            observation: observe::observe(&self.scenario, tissue, self.step),
            reward: info.total + terminal_penalty,
            terminal_penalty,
            done: self.done,
            info,
            events,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeSummary<S> {
    pub rewards: Vec<S>,
    pub breakdowns: Vec<RewardBreakdown<S>>,
    pub discounted_return: S,
}

/// Runs one episode from `reset(seed)` until done. When a logger is given,
/// writes a header, one record per step and any due snapshots.
pub fn run_episode<S, W, P>(
    env: &mut Env<S>,
    seed: u64,
    mut policy: P,
    mut logger: Option<(&mut EpisodeLogger<W>, usize, &str)>,
) -> Result<EpisodeSummary<S>, EnvError>
where
    S: Scalar,
    W: std::io::Write,
    P: FnMut(&Env<S>, &[S]) -> Result<VoltageMesh<S>, EnvError>,
{
    let mut obs = env.reset(seed)?;
    if let Some((log, episode, name)) = logger.as_mut() {
        log.write(&LogRecord::Header(LogHeader::new(env.scenario(), seed, *episode, name)))?;
        if log.snapshot_due(None) {
            let tissue = Box::new(env.tissue().ok_or(EnvError::NotReset)?.clone());
            log.write(&LogRecord::Snapshot { step: None, tissue })?;
        }
    }
    let mut rewards = Vec::with_capacity(env.scenario().horizon);
    let mut breakdowns = Vec::with_capacity(env.scenario().horizon);
    loop {
        let step = env.step_index();
        let action = policy(env, &obs)?;
        let out = env.step(&action)?;
        if let Some((log, _, _)) = logger.as_mut() {
            let tissue = env.tissue().ok_or(EnvError::NotReset)?;
            let record = StepRecord {
                step,
                observables: Observables::collect(tissue, &out.events, &action),
                action,
                reward: out.reward,
                terminal_penalty: out.terminal_penalty,
                reward_breakdown: out.info,
                live_count: tissue.live_count(),
                tissue_digest: tissue.digest(),
                done: out.done,
            };
            log.write(&LogRecord::Step(record))?;
            if log.snapshot_due(Some(step)) {
                log.write(&LogRecord::Snapshot {
                    step: Some(step),
                    tissue: Box::new(tissue.clone()),
                })?;
            }
        }
        rewards.push(out.reward);
        breakdowns.push(out.info);
        obs = out.observation;
        if out.done {
            break;
        }
    }
    if let Some((log, _, _)) = logger.as_mut() {
        log.flush()?;
    }
    let discounted_return = discounted_return(&rewards, env.scenario().gamma);
    Ok(EpisodeSummary {
        rewards,
        breakdowns,
        discounted_return,
    })
}

/// [`run_episode`] without logging.
pub fn rollout<S, P>(env: &mut Env<S>, seed: u64, policy: P) -> Result<EpisodeSummary<S>, EnvError>
where
    S: Scalar,
    P: FnMut(&Env<S>, &[S]) -> Result<VoltageMesh<S>, EnvError>,
{
    run_episode::<S, std::io::Sink, P>(env, seed, policy, None)
}

/// The scenario's reward for a tissue state.
pub fn reward_of<S: Scalar>(scenario: &Scenario<S>, tissue: &TissueState<S>) -> Result<RewardBreakdown<S>, EnvError> {
    match scenario.reward {
        RewardKind::Organ => Ok(organ_reward(tissue, &scenario.target, &scenario.weights)?),
        RewardKind::Cell => {
            let cell = tissue.live_cells().next().ok_or(MetricsError::EmptySet)?;
            Ok(cell_reward(&cell.cell, &scenario.target, &scenario.weights))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn discounted_return_examples() {
        assert_eq!(discounted_return(&[4.0, 5.0], 0.0), 4.0);
        assert_eq!(discounted_return(&[1.0, 2.0, 3.0], 0.5), 2.75);
        let g: f64 = 0.9;
        let r = discounted_return(&[2.0; 20], g);
        assert!((r - 2.0 * (1.0 - g.powi(20)) / (1.0 - g)).abs() < 1e-12);
    }

    #[test]
    fn library_scenarios_validate() {
        for s in scenario_library::<f64>() {
            s.validate().unwrap();
            let env = Env::new(s).unwrap();
            assert!(env.action_dim() >= 1);
        }
    }

    #[test]
    fn reset_is_deterministic_and_counts_cells() {
        let mut env = Env::new(Scenario::<f64>::tissue_pattern(4)).unwrap();
        let a = env.reset(7).unwrap();
        assert_eq!(env.tissue().unwrap().live_count(), 16);
        let b = env.reset(7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), env.observation_len());
    }

    #[test]
    fn ablation_removes_intersected_cells() {
        let s = Scenario::<f64>::heart_recovery();
        let intact = TissueState::build(&s.tissue, 0).unwrap();
        let injury = s.injury.unwrap();
        let hit = intact
            .live_cells()
            .filter(|c| injury.region.contains(c.position))
            .count();
        assert!(
            hit > 0 && 5 * hit <= intact.live_count(),
            "{hit} of {}",
            intact.live_count()
        );
        let mut env = Env::new(s).unwrap();
        env.reset(3).unwrap();
        assert_eq!(env.tissue().unwrap().live_count(), intact.live_count() - hit);
    }

    #[test]
    fn out_of_range_action_is_rejected() {
        let mut env = Env::new(Scenario::<f64>::cell_homeostasis()).unwrap();
        env.reset(0).unwrap();
        let err = env.step(&VoltageMesh::Global(0.2));
        assert!(matches!(err, Err(EnvError::ActionOutOfRange { .. })));
        assert_eq!(env.step_index(), 0);
    }

    #[test]
    fn horizon_one_and_absorbing_done() {
        let mut s = Scenario::<f64>::cell_homeostasis();
        s.horizon = 1;
        let mut env = Env::new(s).unwrap();
        env.reset(0).unwrap();
        let out = env.step(&VoltageMesh::Global(-0.07)).unwrap();
        assert!(out.done);
        assert!(matches!(
            env.step(&VoltageMesh::Global(-0.07)),
            Err(EnvError::SteppedAfterDone)
        ));
    }

    #[test]
    fn extinction_charges_the_rest_of_the_horizon() {
        let mut s = Scenario::<f64>::heart_recovery();
        s.horizon = 30;
        s.target.v_min = -0.1;
        let gamma = s.gamma;
        let mut env = Env::new(s).unwrap();
        env.reset(0).unwrap();
        let mut out = env.step(&env.uniform_mesh(-0.1)).unwrap();
        while !out.done {
            assert_eq!(out.terminal_penalty, 0.0);
            out = env.step(&env.uniform_mesh(-0.1)).unwrap();
        }
        let t = env.step_index();
        assert!(t < 30, "tissue should die before the horizon");
        let expect: f64 = (1..=30 - t).map(|k| gamma.powi(k as i32) * out.info.total).sum();
        assert!((out.terminal_penalty - expect).abs() < 1e-9 * expect.abs());
        assert_eq!(out.reward, out.info.total + out.terminal_penalty);
    }

    #[test]
    fn step_before_reset_fails() {
        let mut env = Env::new(Scenario::<f64>::cell_homeostasis()).unwrap();
        assert!(matches!(env.step(&VoltageMesh::Global(-0.07)), Err(EnvError::NotReset)));
    }

    #[test]
    fn pattern_target_equal_to_initial_field_scores_zero() {
        let mut s = Scenario::<f64>::tissue_pattern(4);
        let t = TissueState::build(&s.tissue, 11).unwrap();
        s.target.vfield = t.voltage_field();
        let mut env = Env::new(s).unwrap();
        env.reset(11).unwrap();
        assert_eq!(env.evaluate().unwrap().terms.bioelec, 0.0);
    }

    #[test]
    fn injury_lowers_heart_reward() {
        let s = Scenario::<f64>::heart_recovery();
        let intact = TissueState::build(&s.tissue, 5).unwrap();
        let reference = reward_of(&s, &intact).unwrap().total;
        let mut env = Env::new(s).unwrap();
        env.reset(5).unwrap();
        assert!(env.evaluate().unwrap().total < reference);
    }

    #[test]
    fn unit_actions_map_onto_bounds() {
        let env = Env::new(Scenario::<f64>::heart_recovery()).unwrap();
        let m = env.mesh_from_unit(&[-1.0, 1.0, 0.0, 7.0]).unwrap();
        let v = m.targets();
        assert_eq!((v[0], v[1], v[3]), (-0.09, 0.05, 0.05));
        assert!((v[2] + 0.02).abs() < 1e-15);
        assert!(matches!(
            env.mesh_from_unit(&[0.0]),
            Err(EnvError::ActionDimension { .. })
        ));
    }
}
