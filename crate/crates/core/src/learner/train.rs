use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::checkpoint::PolicyCheckpoint;
use super::nn::Mlp;
use super::replay::{ReplayBuffer, Transition};
use super::td3::{Losses, Td3Agent, TrainConfig};
use super::LearnerError;
use crate::env::{rollout, Env, EnvError, EpisodeSummary, Scenario};
use crate::metrics::TERM_NAMES;
use crate::tissue::VoltageMesh;

/// Noise-free actor: observation to clamp targets.
pub fn actor_policy(actor: &Mlp) -> impl FnMut(&Env<f64>, &[f64]) -> Result<VoltageMesh<f64>, EnvError> + '_ {
    move |env, obs| {
        let a: Vec<f64> = actor
            .forward(obs)
            .into_iter()
            .map(|x| if x.is_finite() { x.clamp(-1.0, 1.0) } else { 0.0 })
            .collect();
        env.mesh_from_unit(&a)
    }
}

/// Uniform draws over the action box.
pub fn random_policy(seed: u64) -> impl FnMut(&Env<f64>, &[f64]) -> Result<VoltageMesh<f64>, EnvError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    move |env, _| {
        let a: Vec<f64> = (0..env.action_dim()).map(|_| rng.random_range(-1.0..=1.0)).collect();
        env.mesh_from_unit(&a)
    }
}

/// Leaves every cell unclamped.
pub fn zero_policy(_: &Env<f64>, _: &[f64]) -> Result<VoltageMesh<f64>, EnvError> {
    Ok(VoltageMesh::empty())
}

pub fn constant_policy(v: f64) -> impl FnMut(&Env<f64>, &[f64]) -> Result<VoltageMesh<f64>, EnvError> {
    move |env, _| Ok(env.uniform_mesh(v))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub seeds: Vec<u64>,
    pub returns: Vec<f64>,
    pub mean_return: f64,
    /// Discounted sum of each weighted reward term, averaged over episodes,
    /// in [`TERM_NAMES`] order.
    pub term_means: Vec<f64>,
    pub episodes: Vec<EpisodeSummary<f64>>,
}

/// One episode per seed, in order.
pub fn evaluate<P>(scenario: &Scenario<f64>, seeds: &[u64], mut policy: P) -> Result<Evaluation, LearnerError>
where
    P: FnMut(&Env<f64>, &[f64]) -> Result<VoltageMesh<f64>, EnvError>,
{
    if seeds.is_empty() {
        return Err(LearnerError::Config("evaluation needs at least one seed".into()));
    }
    let mut env = Env::new(scenario.clone())?;
    let gamma = scenario.gamma;
    let mut episodes = Vec::with_capacity(seeds.len());
    let mut term_means = vec![0.0; TERM_NAMES.len()];
    for &seed in seeds {
        let ep = rollout(&mut env, seed, &mut policy)?;
        let mut factor = 1.0;
        for b in &ep.breakdowns {
            for (m, w) in term_means.iter_mut().zip(b.weighted.as_array()) {
                *m += factor * w;
            }
            factor *= gamma;
        }
        episodes.push(ep);
    }
    let n = seeds.len() as f64;
    term_means.iter_mut().for_each(|m| *m /= n);
    let returns: Vec<f64> = episodes.iter().map(|e| e.discounted_return).collect();
    Ok(Evaluation {
        seeds: seeds.to_vec(),
        mean_return: returns.iter().sum::<f64>() / n,
        returns,
        term_means,
        episodes,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub v_best: f64,
    pub mean_return: f64,
    /// `(v, mean return)` for every clamp tried.
    pub scan: Vec<(f64, f64)>,
}

/// Best constant clamp on a grid over `[V_min, V_max]` with the given spacing.
pub fn grid_search_oracle(
    scenario: &Scenario<f64>,
    seeds: &[u64],
    resolution: f64,
) -> Result<OracleResult, LearnerError> {
    if !(resolution > 0.0) {
        return Err(LearnerError::Config("grid resolution must be positive".into()));
    }
    let b = scenario.bounds();
    let n = ((b.v_max - b.v_min) / resolution).round() as usize;
    let mut scan = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let v = (b.v_min + k as f64 * resolution).min(b.v_max);
        let ev = evaluate(scenario, seeds, constant_policy(v))?;
        scan.push((v, ev.mean_return));
    }
    let &(v_best, mean_return) = scan
        .iter()
        .fold(None, |best: Option<&(f64, f64)>, x| match best {
            Some(b) if b.1 >= x.1 => Some(b),
            _ => Some(x),
        })
        .expect("grid is non-empty");
    Ok(OracleResult {
        v_best,
        mean_return,
        scan,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub step: usize,
    pub eval_return: f64,
    pub term_means: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestPolicy {
    pub step: usize,
    pub eval_return: f64,
    pub actor: Mlp,
}

/// Warmup with uniform random actions, then one environment step followed by
/// `updates_per_step` gradient updates, with a noise-free evaluation every
/// `eval_every` steps. The whole state serializes, so a run can be stopped
/// and resumed without changing its outcome.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trainer {
    config: TrainConfig,
    env: Env<f64>,
    agent: Td3Agent,
    buffer: ReplayBuffer,
    #[serde(with = "crate::util::chacha_state")]
    rng: ChaCha8Rng,
    step: usize,
    episodes: usize,
    obs: Option<Vec<f64>>,
    curve: Vec<CurvePoint>,
    best: Option<BestPolicy>,
    last_losses: Option<Losses>,
}

impl Trainer {
    pub fn new(scenario: Scenario<f64>, config: TrainConfig) -> Result<Self, LearnerError> {
        config.validate()?;
        let env = Env::new(scenario)?;
        let gamma = env.scenario().gamma;
        let agent = Td3Agent::new(env.observation_len(), env.action_dim(), gamma, &config);
        Ok(Trainer {
            buffer: ReplayBuffer::new(config.buffer_capacity),
            rng: ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed_cafe),
            env,
            agent,
            config,
            step: 0,
            episodes: 0,
            obs: None,
            curve: Vec::new(),
            best: None,
            last_losses: None,
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn scenario(&self) -> &Scenario<f64> {
        self.env.scenario()
    }

    pub fn agent(&self) -> &Td3Agent {
        &self.agent
    }

    pub fn steps_done(&self) -> usize {
        self.step
    }

    pub fn episodes_done(&self) -> usize {
        self.episodes
    }

    pub fn is_finished(&self) -> bool {
        self.step >= self.config.steps
    }

    pub fn curve(&self) -> &[CurvePoint] {
        &self.curve
    }

    pub fn best(&self) -> Option<&BestPolicy> {
        self.best.as_ref()
    }

    pub fn last_losses(&self) -> Option<Losses> {
        self.last_losses
    }

    /// Best evaluated actor, or the current one before any evaluation.
    pub fn best_checkpoint(&self) -> PolicyCheckpoint {
        let (actor, step, eval_return) = match &self.best {
            Some(b) => (b.actor.clone(), b.step, Some(b.eval_return)),
            None => (self.agent.actor.clone(), self.step, None),
        };
        PolicyCheckpoint {
            scenario: self.scenario().clone(),
            config: self.config.clone(),
            actor,
            step,
            eval_return,
        }
    }

    /// One environment step plus its updates. Returns the evaluation point
    /// when one was due.
    pub fn step(&mut self) -> Result<Option<CurvePoint>, LearnerError> {
        let obs = match self.obs.take() {
            Some(o) => o,
            None => {
                let seed = self.rng.random::<u64>();
                self.env.reset(seed)?
            }
        };
        let action: Vec<f64> = if self.step < self.config.warmup {
            (0..self.env.action_dim())
                .map(|_| self.rng.random_range(-1.0..=1.0))
                .collect()
        } else {
            self.agent.select_action(&obs, true)
        };
        let mesh = self.env.mesh_from_unit(&action)?;
        let out = self.env.step(&mesh)?;
        self.buffer.push(Transition {
            obs,
            action,
            reward: out.reward,
            next_obs: out.observation.clone(),
            done: out.done,
        });
        if out.done {
            self.episodes += 1;
        } else {
            self.obs = Some(out.observation);
        }
        self.step += 1;
        if self.step >= self.config.warmup {
            for _ in 0..self.config.updates_per_step {
                let Some(batch) = self.buffer.sample(self.config.batch_size, &mut self.rng) else {
                    break;
                };
                self.last_losses = Some(self.agent.update(&batch)?);
            }
        }
        if self.step.is_multiple_of(self.config.eval_every) || self.step == self.config.steps {
            return self.evaluate_now().map(Some);
        }
        Ok(None)
    }

    fn evaluate_now(&mut self) -> Result<CurvePoint, LearnerError> {
        let ev = evaluate(
            self.scenario(),
            &self.config.eval_seeds,
            actor_policy(&self.agent.actor),
        )?;
        let point = CurvePoint {
            step: self.step,
            eval_return: ev.mean_return,
            term_means: ev.term_means,
        };
        if self.best.as_ref().is_none_or(|b| point.eval_return > b.eval_return) {
            self.best = Some(BestPolicy {
                step: self.step,
                eval_return: point.eval_return,
                actor: self.agent.actor.clone(),
            });
        }
        self.curve.push(point.clone());
        Ok(point)
    }

    /// Runs at most `n` more steps, stopping at the configured total.
    pub fn run_for(&mut self, n: usize) -> Result<(), LearnerError> {
        for _ in 0..n {
            if self.is_finished() {
                break;
            }
            self.step()?;
        }
        Ok(())
    }

    pub fn run(&mut self) -> Result<(), LearnerError> {
        self.run_for(usize::MAX)
    }
}

/// `step,eval_return,<term>...` with one row per evaluation.
pub fn write_curve_csv<W: Write>(curve: &[CurvePoint], mut out: W) -> std::io::Result<()> {
    write!(out, "step,eval_return")?;
    for name in TERM_NAMES {
        write!(out, ",{name}")?;
    }
    writeln!(out)?;
    for p in curve {
        write!(out, "{},{}", p.step, p.eval_return)?;
        for m in &p.term_means {
            write!(out, ",{m}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}
