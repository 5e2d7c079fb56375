use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::nn::{Activation, Adam, Mlp};
use super::replay::Transition;
use super::LearnerError;
use crate::env::{Env, EnvError};
use crate::tissue::VoltageMesh;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// Twin critics, target-policy smoothing, delayed actor updates.
    #[default]
    Td3,
    /// One critic, no smoothing, actor updated every step.
    Ddpg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub algorithm: Algorithm,
    /// Environment steps, warmup included.
    pub steps: usize,
    /// Uniform-random steps before the policy acts.
    pub warmup: usize,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub hidden: Vec<usize>,
    pub actor_lr: f64,
    pub critic_lr: f64,
    /// Soft target update rate.
    pub tau: f64,
    /// Critic updates per actor update.
    pub policy_delay: usize,
    /// Exploration noise, in unit-action space.
    pub explore_noise: f64,
    /// Target smoothing noise and its clip.
    pub target_noise: f64,
    pub target_noise_clip: f64,
    /// Rewards are multiplied by this before entering the critic targets.
    pub reward_scale: f64,
    /// Gradient updates per environment step once training starts.
    pub updates_per_step: usize,
    pub eval_every: usize,
    pub eval_seeds: Vec<u64>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            algorithm: Algorithm::Td3,
            steps: 20_000,
            warmup: 1_000,
            batch_size: 128,
            buffer_capacity: 50_000,
            hidden: vec![64, 64],
            actor_lr: 1e-4,
            critic_lr: 3e-4,
            tau: 0.005,
            policy_delay: 2,
            explore_noise: 0.1,
            target_noise: 0.2,
            target_noise_clip: 0.5,
            reward_scale: 0.01,
            updates_per_step: 1,
            eval_every: 2_000,
            eval_seeds: (1000..1010).collect(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), LearnerError> {
        let bad = |m: &str| Err(LearnerError::Config(m.into()));
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return bad("tau must lie in (0, 1]");
        }
        if self.policy_delay == 0 {
            return bad("policy_delay must be at least 1");
        }
        if !(self.explore_noise >= 0.0 && self.target_noise >= 0.0 && self.target_noise_clip >= 0.0) {
            return bad("noise scales must be non-negative");
        }
        if self.batch_size == 0 || self.buffer_capacity < self.batch_size {
            return bad("batch size must be positive and fit in the buffer");
        }
        if self.hidden.contains(&0) {
            return bad("hidden layers must be non-empty");
        }
        if !(self.actor_lr > 0.0 && self.critic_lr > 0.0 && self.reward_scale.is_finite()) {
            return bad("learning rates must be positive");
        }
        if self.eval_every == 0 || self.eval_seeds.is_empty() {
            return bad("evaluation needs a positive interval and at least one seed");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Losses {
    pub critic: f64,
    /// Present on steps where the actor was updated.
    pub actor: Option<f64>,
}

/// Critic `(obs, action) -> value` with its optimizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Critic {
    pub net: Mlp,
    pub target: Mlp,
    pub opt: Adam,
}

/// Deterministic actor-critic agent. Actions live in `[-1, 1]^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Td3Agent {
    pub algorithm: Algorithm,
    pub actor: Mlp,
    pub actor_target: Mlp,
    pub actor_opt: Adam,
    pub critics: Vec<Critic>,
    pub gamma: f64,
    pub tau: f64,
    pub policy_delay: usize,
    pub explore_noise: f64,
    pub target_noise: f64,
    pub target_noise_clip: f64,
    pub reward_scale: f64,
    pub updates: u64,
    #[serde(with = "crate::util::chacha_state")]
    pub rng: ChaCha8Rng,
}

fn concat(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut v = Vec::with_capacity(a.len() + b.len());
    v.extend_from_slice(a);
    v.extend_from_slice(b);
    v
}

fn clip_unit(x: f64) -> f64 {
    x.clamp(-1.0, 1.0)
}

/// Mean squared error of `net` against fixed `targets` over a batch, and its
/// gradient with respect to the network parameters.
pub fn critic_loss_and_grad(net: &Mlp, inputs: &[Vec<f64>], targets: &[f64]) -> (f64, Vec<f64>) {
    let n = inputs.len() as f64;
    let mut grad = vec![0.0; net.params.len()];
    let mut loss = 0.0;
    for (x, &y) in inputs.iter().zip(targets) {
        let trace = net.forward_trace(x);
        let err = trace.output()[0] - y;
        loss += err * err / n;
        net.backward(&trace, &[2.0 * err / n], &mut grad);
    }
    (loss, grad)
}

impl Td3Agent {
    pub fn new(obs_dim: usize, act_dim: usize, gamma: f64, config: &TrainConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut sizes = vec![obs_dim];
        sizes.extend(&config.hidden);
        sizes.push(act_dim);
        let actor = Mlp::new(&sizes, Activation::Relu, Activation::Tanh, 3e-3, &mut rng);
        let n_critics = match config.algorithm {
            Algorithm::Td3 => 2,
            Algorithm::Ddpg => 1,
        };
        let mut csizes = vec![obs_dim + act_dim];
        csizes.extend(&config.hidden);
        csizes.push(1);
        let critics = (0..n_critics)
            .map(|_| {
                let net = Mlp::new(&csizes, Activation::Relu, Activation::Identity, 3e-3, &mut rng);
                Critic {
                    target: net.clone(),
                    opt: Adam::new(net.params.len(), config.critic_lr),
                    net,
                }
            })
            .collect();
        let policy_delay = match config.algorithm {
            Algorithm::Td3 => config.policy_delay,
            Algorithm::Ddpg => 1,
        };
        Td3Agent {
            algorithm: config.algorithm,
            actor_target: actor.clone(),
            actor_opt: Adam::new(actor.params.len(), config.actor_lr),
            actor,
            critics,
            gamma,
            tau: config.tau,
            policy_delay,
            explore_noise: config.explore_noise,
            target_noise: config.target_noise,
            target_noise_clip: config.target_noise_clip,
            reward_scale: config.reward_scale,
            updates: 0,
            rng,
        }
    }

    pub fn act_dim(&self) -> usize {
        self.actor.output_len()
    }

    /// Deterministic action, plus clipped Gaussian noise when exploring.
    /// Always inside `[-1, 1]^d`; non-finite inputs yield a zero action.
    pub fn select_action(&mut self, obs: &[f64], explore: bool) -> Vec<f64> {
        let mut a = self.actor.forward(obs);
        if explore && self.explore_noise > 0.0 {
            for x in a.iter_mut() {
                let e: f64 = self.rng.sample(StandardNormal);
                *x += self.explore_noise * e;
            }
        }
        a.into_iter()
            .map(|x| if x.is_finite() { clip_unit(x) } else { 0.0 })
            .collect()
    }

    /// [`select_action`](Self::select_action) laid out as the environment's clamp
    /// targets, inside `[V_min, V_max]`.
    pub fn act(&mut self, env: &Env<f64>, obs: &[f64], explore: bool) -> Result<VoltageMesh<f64>, EnvError> {
        let a = self.select_action(obs, explore);
        env.mesh_from_unit(&a)
    }

    /// `r + γ (1 - done) min_i Q_i'(s', π'(s') + ε)`
    pub fn critic_targets(&mut self, batch: &[&Transition]) -> Vec<f64> {
        let smooth = self.algorithm == Algorithm::Td3;
        let mut out = Vec::with_capacity(batch.len());
        for t in batch {
            let mut a = self.actor_target.forward(&t.next_obs);
            if smooth && self.target_noise > 0.0 {
                for x in a.iter_mut() {
                    let e: f64 = self.rng.sample(StandardNormal);
                    let e = (self.target_noise * e).clamp(-self.target_noise_clip, self.target_noise_clip);
                    *x = clip_unit(*x + e);
                }
            }
            let input = concat(&t.next_obs, &a);
            let q = self
                .critics
                .iter()
                .map(|c| c.target.forward(&input)[0])
                .fold(f64::INFINITY, f64::min);
            let cont = if t.done { 0.0 } else { 1.0 };
            out.push(self.reward_scale * t.reward + self.gamma * cont * q);
        }
        out
    }

    pub fn update(&mut self, batch: &[&Transition]) -> Result<Losses, LearnerError> {
        if batch.is_empty() {
            return Err(LearnerError::Config("update needs a non-empty batch".into()));
        }
        let targets = self.critic_targets(batch);
        let inputs: Vec<Vec<f64>> = batch.iter().map(|t| concat(&t.obs, &t.action)).collect();
        let mut critic_loss = 0.0;
        for c in self.critics.iter_mut() {
            let (loss, grad) = critic_loss_and_grad(&c.net, &inputs, &targets);
            critic_loss += loss;
            c.opt.step(&mut c.net.params, &grad);
        }
        if !critic_loss.is_finite() || self.critics.iter().any(|c| !c.net.is_finite()) {
            return Err(LearnerError::NumericalDivergence("critic".into()));
        }
        self.updates += 1;
        let mut actor_loss = None;
        if self.updates.is_multiple_of(self.policy_delay as u64) {
            actor_loss = Some(self.update_actor(batch)?);
            for c in self.critics.iter_mut() {
                c.target.soft_update(&c.net, self.tau);
            }
            self.actor_target.soft_update(&self.actor, self.tau);
        }
        Ok(Losses {
            critic: critic_loss,
            actor: actor_loss,
        })
    }

    /// Ascends the first critic's value at the actor's own actions.
    fn update_actor(&mut self, batch: &[&Transition]) -> Result<f64, LearnerError> {
        let n = batch.len() as f64;
        let obs_dim = self.actor.input_len();
        let critic = &self.critics[0].net;
        let mut grad = vec![0.0; self.actor.params.len()];
        let mut loss = 0.0;
        let mut scratch = vec![0.0; critic.params.len()];
        for t in batch {
            let trace = self.actor.forward_trace(&t.obs);
            let q_trace = critic.forward_trace(&concat(&t.obs, trace.output()));
            loss -= q_trace.output()[0] / n;
            let d_input = critic.backward(&q_trace, &[-1.0 / n], &mut scratch);
            self.actor.backward(&trace, &d_input[obs_dim..], &mut grad);
        }
        self.actor_opt.step(&mut self.actor.params, &grad);
        if !loss.is_finite() || !self.actor.is_finite() {
            return Err(LearnerError::NumericalDivergence("actor".into()));
        }
        Ok(loss)
    }
}
