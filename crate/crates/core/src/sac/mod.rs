//! Soft actor-critic: twin critics, a tanh-squashed Gaussian policy and
//! Polyak-averaged target critics, trained on [`crate::env`] episodes.
//!
//! Minibatch gradients are computed in fixed chunks of rows and summed in
//! chunk order, so sequential and parallel execution produce the same bits.

mod buffer;

use std::fmt::Write as _;
use std::fs;
use std::ops::Range;
use std::path::Path as FsPath;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub use buffer::{ReplayBuffer, Transition};

use crate::env::{Env, EnvConfig, Event};
use crate::error::{Error, Result};
use crate::nn::{Adam, Mlp};
use crate::par::Exec;

pub const LOG_STD_MIN: f64 = -20.0;
pub const LOG_STD_MAX: f64 = 2.0;
pub const ACTION_DIM: usize = 2;
const SQUASH_EPS: f64 = 1e-6;
const COLLISION_REWARD: f64 = -20.0;
const GOAL_REWARD: f64 = 25.0;
/// Minibatch rows per gradient chunk.
const CHUNK: usize = 32;

/// Progress toward the goal plus the terminal bonus of `event`.
pub fn reward(prev_goal_dist: f64, goal_dist: f64, event: Event, scale: f64) -> f64 {
    let terminal = match event {
        Event::Collision => COLLISION_REWARD,
        Event::GoalReached => GOAL_REWARD,
        Event::Running | Event::Timeout => 0.0,
    };
    scale * (prev_goal_dist - goal_dist) + terminal
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SacHyper {
    pub gamma: f64,
    pub tau: f64,
    pub alpha: f64,
    pub lr: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub warmup_steps: usize,
    pub updates_per_step: usize,
    pub step_reward_scale: f64,
    pub n_rollout_workers: usize,
    /// Width of both hidden layers of every network.
    pub hidden_units: usize,
}

impl Default for SacHyper {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            tau: 0.005,
            alpha: 0.2,
            lr: 3e-4,
            batch_size: 256,
            buffer_capacity: 100_000,
            warmup_steps: 1000,
            updates_per_step: 1,
            step_reward_scale: 1.0,
            n_rollout_workers: 1,
            hidden_units: 64,
        }
    }
}

impl SacHyper {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidInput(format!("sac hyperparameters: {m}")));
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad("gamma must be in (0, 1)");
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return bad("tau must be in (0, 1]");
        }
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return bad("alpha must be positive");
        }
        if !(self.lr >= 0.0) || !self.lr.is_finite() {
            return bad("lr must be non-negative");
        }
        if self.batch_size == 0 || self.buffer_capacity < self.batch_size {
            return bad("need 0 < batch_size <= buffer_capacity");
        }
        if self.updates_per_step == 0 || self.n_rollout_workers == 0 || self.hidden_units == 0 {
            return bad("updates_per_step, n_rollout_workers and hidden_units must be positive");
        }
        if !self.step_reward_scale.is_finite() {
            return bad("step_reward_scale must be finite");
        }
        Ok(())
    }

    /// `key = value` lines, one per field.
    pub fn to_kv(&self) -> String {
        format!(
            "gamma = {}\ntau = {}\nalpha = {}\nlr = {}\nbatch_size = {}\nbuffer_capacity = {}\n\
             warmup_steps = {}\nupdates_per_step = {}\nstep_reward_scale = {}\n\
             n_rollout_workers = {}\nhidden_units = {}\n",
            self.gamma,
            self.tau,
            self.alpha,
            self.lr,
            self.batch_size,
            self.buffer_capacity,
            self.warmup_steps,
            self.updates_per_step,
            self.step_reward_scale,
            self.n_rollout_workers,
            self.hidden_units
        )
    }
}

/// The actor maps an observation to `[mu_0, mu_1, log_std_0, log_std_1]`;
/// each critic maps `observation ++ action` to a scalar.
#[derive(Debug, Clone, PartialEq)]
pub struct SacNets {
    pub actor: Mlp,
    pub q1: Mlp,
    pub q2: Mlp,
    pub q1_target: Mlp,
    pub q2_target: Mlp,
}

const NET_FILES: [&str; 5] = ["actor", "q1", "q2", "q1_target", "q2_target"];

impl SacNets {
    pub fn new(obs_dim: usize, hidden: usize, seed: u64) -> Result<Self> {
        let mut seeds = ChaCha8Rng::seed_from_u64(seed);
        let actor = Mlp::init(&[obs_dim, hidden, hidden, 2 * ACTION_DIM], seeds.random())?;
        let critic = [obs_dim + ACTION_DIM, hidden, hidden, 1];
        let q1 = Mlp::init(&critic, seeds.random())?;
        let q2 = Mlp::init(&critic, seeds.random())?;
        Self::from_parts(actor, q1.clone(), q2.clone(), q1, q2)
    }

    pub fn from_parts(actor: Mlp, q1: Mlp, q2: Mlp, q1_target: Mlp, q2_target: Mlp) -> Result<Self> {
        let obs_dim = actor.input_size();
        let mismatch = |expected: usize, got: usize| Err(Error::ShapeMismatch { expected, got });
        if actor.output_size() != 2 * ACTION_DIM {
            return mismatch(2 * ACTION_DIM, actor.output_size());
        }
        for q in [&q1, &q2, &q1_target, &q2_target] {
            if q.input_size() != obs_dim + ACTION_DIM {
                return mismatch(obs_dim + ACTION_DIM, q.input_size());
            }
            if q.output_size() != 1 {
                return mismatch(1, q.output_size());
            }
        }
        if !q1.same_shape(&q1_target) || !q2.same_shape(&q2_target) {
            return mismatch(q1.params().len(), q1_target.params().len());
        }
        Ok(Self {
            actor,
            q1,
            q2,
            q1_target,
            q2_target,
        })
    }

    pub fn obs_dim(&self) -> usize {
        self.actor.input_size()
    }

    fn nets(&self) -> [&Mlp; 5] {
        [&self.actor, &self.q1, &self.q2, &self.q1_target, &self.q2_target]
    }

    /// Writes one `<name>.mlp` file per network into `dir`.
    pub fn save(&self, dir: &FsPath) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
        for (name, net) in NET_FILES.iter().zip(self.nets()) {
            net.save(&dir.join(format!("{name}.mlp")))?;
        }
        Ok(())
    }

    pub fn load(dir: &FsPath) -> Result<Self> {
        let load = |name: &str| Mlp::load(&dir.join(format!("{name}.mlp")));
        Self::from_parts(load("actor")?, load("q1")?, load("q2")?, load("q1_target")?, load("q2_target")?)
    }
}

/// Networks plus the optimizer state the learner carries between updates.
#[derive(Debug, Clone)]
pub struct SacAgent {
    pub nets: SacNets,
    pub actor_opt: Adam,
    pub q1_opt: Adam,
    pub q2_opt: Adam,
}

impl SacAgent {
    pub fn new(nets: SacNets, lr: f64) -> Self {
        Self {
            actor_opt: Adam::new(&nets.actor, lr),
            q1_opt: Adam::new(&nets.q1, lr),
            q2_opt: Adam::new(&nets.q2, lr),
            nets,
        }
    }
}

/// A squashed sample and the pieces its gradients need.
#[derive(Debug, Clone, Copy)]
struct Squashed {
    action: [f64; ACTION_DIM],
    log_prob: f64,
    /// `sigma * xi` per dimension.
    noise: [f64; ACTION_DIM],
    /// d log_prob / d mu.
    dlogp_dmu: [f64; ACTION_DIM],
    /// False where the raw log-std was clamped.
    std_free: [bool; ACTION_DIM],
}

fn squash(out: &[f64], xi: &[f64; ACTION_DIM]) -> Squashed {
    let mut s = Squashed {
        action: [0.0; ACTION_DIM],
        log_prob: 0.0,
        noise: [0.0; ACTION_DIM],
        dlogp_dmu: [0.0; ACTION_DIM],
        std_free: [true; ACTION_DIM],
    };
    let half_ln_tau = 0.5 * std::f64::consts::TAU.ln();
    for i in 0..ACTION_DIM {
        let raw = out[ACTION_DIM + i];
        let log_std = raw.clamp(LOG_STD_MIN, LOG_STD_MAX);
        s.std_free[i] = raw == log_std;
        let noise = log_std.exp() * xi[i];
        let a = (out[i] + noise).tanh();
        let one_minus = 1.0 - a * a;
        s.action[i] = a;
        s.noise[i] = noise;
        s.log_prob += -0.5 * xi[i] * xi[i] - log_std - half_ln_tau - (one_minus + SQUASH_EPS).ln();
        s.dlogp_dmu[i] = 2.0 * a * one_minus / (one_minus + SQUASH_EPS);
    }
    s
}

fn normal_pair<R: Rng>(rng: &mut R) -> [f64; ACTION_DIM] {
    [rng.sample(StandardNormal), rng.sample(StandardNormal)]
}

fn check_actor(actor: &Mlp, obs: &[f64]) -> Result<()> {
    if actor.output_size() != 2 * ACTION_DIM {
        return Err(Error::ShapeMismatch {
            expected: 2 * ACTION_DIM,
            got: actor.output_size(),
        });
    }
    if obs.len() != actor.input_size() {
        return Err(Error::ShapeMismatch {
            expected: actor.input_size(),
            got: obs.len(),
        });
    }
    Ok(())
}

/// Stochastic mode returns `tanh(mu + sigma * xi)` with its log density;
/// deterministic mode returns `tanh(mu)` and no density.
pub fn sample_action<R: Rng>(
    actor: &Mlp,
    obs: &[f64],
    rng: &mut R,
    deterministic: bool,
) -> Result<([f64; ACTION_DIM], Option<f64>)> {
    check_actor(actor, obs)?;
    let out = actor.predict(obs)?;
    if deterministic {
        return Ok(([out[0].tanh(), out[1].tanh()], None));
    }
    let s = squash(&out, &normal_pair(rng));
    Ok((s.action, Some(s.log_prob)))
}

fn critic_input(obs: &[f64], action: &[f64; ACTION_DIM]) -> Vec<f64> {
    let mut v = Vec::with_capacity(obs.len() + ACTION_DIM);
    v.extend_from_slice(obs);
    v.extend_from_slice(action);
    v
}

fn check_batch(nets: &SacNets, batch: &[&Transition]) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::InvalidInput("empty batch".into()));
    }
    let n = nets.obs_dim();
    for t in batch {
        for len in [t.obs.len(), t.next_obs.len()] {
            if len != n {
                return Err(Error::ShapeMismatch { expected: n, got: len });
            }
        }
    }
    Ok(())
}

fn targets_with_noise(
    batch: &[&Transition],
    nets: &SacNets,
    hyper: &SacHyper,
    xi: &[[f64; ACTION_DIM]],
    exec: Exec,
) -> Result<Vec<f64>> {
    exec.map(batch.len(), |i| {
        let t = batch[i];
        if t.done {
            return Ok(t.reward);
        }
        let s = squash(&nets.actor.predict(&t.next_obs)?, &xi[i]);
        let input = critic_input(&t.next_obs, &s.action);
        let q = nets.q1_target.predict(&input)?[0].min(nets.q2_target.predict(&input)?[0]);
        Ok(t.reward + hyper.gamma * (q - hyper.alpha * s.log_prob))
    })
    .into_iter()
    .collect()
}

/// Soft Bellman targets `r + gamma (1 - done) (min Q_target(s', a') - alpha log pi(a'|s'))`
/// with `a'` freshly sampled at `s'`.
pub fn soft_target<R: Rng>(batch: &[&Transition], nets: &SacNets, hyper: &SacHyper, rng: &mut R) -> Result<Vec<f64>> {
    check_batch(nets, batch)?;
    let xi: Vec<_> = batch.iter().map(|_| normal_pair(rng)).collect();
    targets_with_noise(batch, nets, hyper, &xi, Exec::default())
}

/// Runs `f` over fixed row chunks, each accumulating into its own gradient
/// buffer, and sums buffers and scalars in chunk order.
fn chunked<F>(exec: Exec, rows: usize, n_params: usize, f: F) -> Result<(Vec<f64>, [f64; 2])>
where
    F: Fn(Range<usize>, &mut [f64]) -> Result<[f64; 2]> + Sync + Send,
{
    let n_chunks = rows.div_ceil(CHUNK);
    let parts = exec.map(n_chunks, |c| {
        let mut g = vec![0.0; n_params];
        let s = f(c * CHUNK..((c + 1) * CHUNK).min(rows), &mut g)?;
        Ok::<_, Error>((g, s))
    });
    let mut grad = vec![0.0; n_params];
    let mut scalars = [0.0; 2];
    for part in parts {
        let (g, s) = part?;
        for (a, b) in grad.iter_mut().zip(&g) {
            *a += b;
        }
        scalars[0] += s[0];
        scalars[1] += s[1];
    }
    Ok((grad, scalars))
}

/// Mean squared error of `q` against `y` and its parameter gradient.
fn critic_gradient(q: &Mlp, batch: &[&Transition], y: &[f64], exec: Exec) -> Result<(f64, Vec<f64>)> {
    let b = batch.len() as f64;
    let (grad, [loss, _]) = chunked(exec, batch.len(), q.params().len(), |rows, g| {
        let mut loss = 0.0;
        for i in rows {
            let t = batch[i];
            let (out, tape) = q.forward(&critic_input(&t.obs, &t.action))?;
            let err = out[0] - y[i];
            loss += err * err / b;
            q.backward_into(&tape, &[2.0 * err / b], g)?;
        }
        Ok([loss, 0.0])
    })?;
    Ok((loss, grad))
}

/// Actor loss `mean(alpha log pi(a|s) - min(q1, q2)(s, a))` with
/// reparameterized `a`, its parameter gradient, and the mean of `-log pi`.
/// The minimum passes its gradient through the smaller critic, `q1` on ties.
fn actor_gradient(
    nets: &SacNets,
    batch: &[&Transition],
    xi: &[[f64; ACTION_DIM]],
    alpha: f64,
    exec: Exec,
) -> Result<(f64, f64, Vec<f64>)> {
    let b = batch.len() as f64;
    let obs_dim = nets.obs_dim();
    let actor = &nets.actor;
    let (grad, [loss, entropy]) = chunked(exec, batch.len(), actor.params().len(), |rows, g| {
        let (mut loss, mut entropy) = (0.0, 0.0);
        for i in rows {
            let obs = &batch[i].obs;
            let (out, tape) = actor.forward(obs)?;
            let s = squash(&out, &xi[i]);
            let input = critic_input(obs, &s.action);
            let (v1, t1) = nets.q1.forward(&input)?;
            let (v2, t2) = nets.q2.forward(&input)?;
            let (q, dq) = if v1[0] <= v2[0] {
                (v1[0], nets.q1.input_gradient(&t1, &[1.0])?)
            } else {
                (v2[0], nets.q2.input_gradient(&t2, &[1.0])?)
            };
            loss += (alpha * s.log_prob - q) / b;
            entropy -= s.log_prob / b;
            let mut go = [0.0; 2 * ACTION_DIM];
            for k in 0..ACTION_DIM {
                let a = s.action[k];
                let dq_du = dq[obs_dim + k] * (1.0 - a * a);
                go[k] = (alpha * s.dlogp_dmu[k] - dq_du) / b;
                if s.std_free[k] {
                    go[ACTION_DIM + k] = (alpha * (s.dlogp_dmu[k] * s.noise[k] - 1.0) - dq_du * s.noise[k]) / b;
                }
            }
            actor.backward_into(&tape, &go, g)?;
        }
        Ok([loss, entropy])
    })?;
    Ok((loss, entropy, grad))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Losses {
    pub q1_loss: f64,
    pub q2_loss: f64,
    pub actor_loss: f64,
    pub mean_entropy: f64,
}

/// One learner step with the default executor. See [`update_with`].
pub fn update<R: Rng>(agent: &mut SacAgent, buffer: &ReplayBuffer, hyper: &SacHyper, rng: &mut R) -> Result<Losses> {
    update_with(agent, buffer, hyper, rng, Exec::default())
}

/// Samples a batch, regresses both critics onto the soft targets, then
/// updates the actor against the updated critics and moves the targets
/// toward the critics by `tau`. Losses are measured before the step.
pub fn update_with<R: Rng>(
    agent: &mut SacAgent,
    buffer: &ReplayBuffer,
    hyper: &SacHyper,
    rng: &mut R,
    exec: Exec,
) -> Result<Losses> {
    let idx = buffer.sample_indices(hyper.batch_size, rng)?;
    let batch: Vec<&Transition> = idx.iter().map(|&i| buffer.get(i)).collect();
    check_batch(&agent.nets, &batch)?;
    let xi_next: Vec<_> = batch.iter().map(|_| normal_pair(rng)).collect();
    let xi_now: Vec<_> = batch.iter().map(|_| normal_pair(rng)).collect();
    for opt in [&mut agent.actor_opt, &mut agent.q1_opt, &mut agent.q2_opt] {
        opt.lr = hyper.lr;
    }

    let y = targets_with_noise(&batch, &agent.nets, hyper, &xi_next, exec)?;
    let (q1_loss, g1) = critic_gradient(&agent.nets.q1, &batch, &y, exec)?;
    let (q2_loss, g2) = critic_gradient(&agent.nets.q2, &batch, &y, exec)?;
    agent.q1_opt.step(&mut agent.nets.q1, &g1)?;
    agent.q2_opt.step(&mut agent.nets.q2, &g2)?;

    let (actor_loss, mean_entropy, ga) = actor_gradient(&agent.nets, &batch, &xi_now, hyper.alpha, exec)?;
    agent.actor_opt.step(&mut agent.nets.actor, &ga)?;

    let nets = &mut agent.nets;
    nets.q1_target.polyak_from(&nets.q1, hyper.tau)?;
    nets.q2_target.polyak_from(&nets.q2, hyper.tau)?;
    Ok(Losses {
        q1_loss,
        q2_loss,
        actor_loss,
        mean_entropy,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub steps: usize,
    #[serde(rename = "return")]
    pub ret: f64,
    pub event: Event,
}

/// CSV with header `episode,steps,return,event`.
pub fn metrics_to_csv(episodes: &[EpisodeRecord]) -> String {
    let mut s = String::from("episode,steps,return,event\n");
    for e in episodes {
        let _ = writeln!(s, "{},{},{},{}", e.episode, e.steps, e.ret, e.event.name());
    }
    s
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub agent: SacAgent,
    pub episodes: Vec<EpisodeRecord>,
    pub env_steps: usize,
    pub updates: usize,
}

impl TrainReport {
    /// Fraction of the last `n` finished episodes that reached the goal.
    pub fn recent_success_rate(&self, n: usize) -> f64 {
        let tail = &self.episodes[self.episodes.len().saturating_sub(n)..];
        if tail.is_empty() {
            return 0.0;
        }
        tail.iter().filter(|e| e.event == Event::GoalReached).count() as f64 / tail.len() as f64
    }
}

struct Worker<'a> {
    env: Env<'a>,
    obs: Vec<f64>,
    rng: ChaCha8Rng,
    ret: f64,
}

impl<'a> Worker<'a> {
    fn new(config: &'a EnvConfig, scale: f64, rng: ChaCha8Rng) -> Result<Self> {
        let mut w = Self {
            env: Env::reset(config, 0)?.0,
            obs: Vec::new(),
            rng,
            ret: 0.0,
        };
        w.restart(scale)?;
        Ok(w)
    }

    fn restart(&mut self, scale: f64) -> Result<()> {
        let (env, obs) = Env::reset(self.env.config(), self.rng.random())?;
        self.env = env.with_reward_scale(scale);
        self.obs = obs.to_vec();
        self.ret = 0.0;
        Ok(())
    }
}

/// What one worker produced in one synchronous round.
struct RoundOutput {
    transition: Transition,
    finished: Option<(usize, f64, Event)>,
}

/// Trains with the default executor. See [`train_with`].
pub fn train(env_config: &EnvConfig, hyper: &SacHyper, total_steps: usize, seed: u64) -> Result<TrainReport> {
    train_with(env_config, hyper, total_steps, seed, Exec::default(), |_| {})
}

/// Synchronous rounds: every worker takes one environment step with the
/// current actor, transitions join the buffer in worker order, then the
/// learner runs `updates_per_step` updates for each of those steps that
/// comes after warmup. Warmup steps use uniform random actions.
/// `on_episode` sees each finished episode as it is logged.
pub fn train_with<F: FnMut(&EpisodeRecord)>(
    env_config: &EnvConfig,
    hyper: &SacHyper,
    total_steps: usize,
    seed: u64,
    exec: Exec,
    mut on_episode: F,
) -> Result<TrainReport> {
    hyper.validate()?;
    env_config.validate()?;
    if total_steps <= hyper.warmup_steps {
        return Err(Error::InvalidInput(format!(
            "total_steps ({total_steps}) must exceed warmup_steps ({})",
            hyper.warmup_steps
        )));
    }
    let mut learner_rng = ChaCha8Rng::seed_from_u64(seed);
    let nets = SacNets::new(env_config.obs_dim(), hyper.hidden_units, learner_rng.random())?;
    let mut agent = SacAgent::new(nets, hyper.lr);
    let mut buffer = ReplayBuffer::new(hyper.buffer_capacity)?;
    let mut workers = (0..hyper.n_rollout_workers)
        .map(|w| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(1 + w as u64);
            Worker::new(env_config, hyper.step_reward_scale, rng)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut episodes = Vec::new();
    let (mut steps, mut updates) = (0, 0);
    while steps < total_steps {
        let active = hyper.n_rollout_workers.min(total_steps - steps);
        let actor = &agent.nets.actor;
        let mut outputs: Vec<Option<Result<RoundOutput>>> = (0..active).map(|_| None).collect();
        let mut slots: Vec<(&mut Worker, &mut Option<Result<RoundOutput>>)> =
            workers.iter_mut().zip(outputs.iter_mut()).collect();
        exec.for_each_mut(&mut slots, |k, (w, out)| {
            let random = steps + k < hyper.warmup_steps;
            **out = Some(worker_step(w, actor, random, hyper.step_reward_scale));
        });
        for out in outputs {
            let out = out.expect("every active worker ran")?;
            buffer.push(out.transition);
            if let Some((len, ret, event)) = out.finished {
                let rec = EpisodeRecord {
                    episode: episodes.len(),
                    steps: len,
                    ret,
                    event,
                };
                on_episode(&rec);
                episodes.push(rec);
            }
        }
        for k in 0..active {
            if steps + k + 1 > hyper.warmup_steps && buffer.len() >= hyper.batch_size {
                for _ in 0..hyper.updates_per_step {
                    update_with(&mut agent, &buffer, hyper, &mut learner_rng, exec)?;
                    updates += 1;
                }
            }
        }
        steps += active;
    }
    Ok(TrainReport {
        agent,
        episodes,
        env_steps: steps,
        updates,
    })
}

fn worker_step(w: &mut Worker, actor: &Mlp, random: bool, scale: f64) -> Result<RoundOutput> {
    let action = if random {
        [w.rng.random_range(-1.0..=1.0), w.rng.random_range(-1.0..=1.0)]
    } else {
        sample_action(actor, &w.obs, &mut w.rng, false)?.0
    };
    let out = w.env.step(&action)?;
    w.ret += out.reward;
    let next_obs = out.observation.to_vec();
    let transition = Transition {
        obs: std::mem::replace(&mut w.obs, next_obs.clone()),
        action,
        reward: out.reward,
        next_obs,
        done: matches!(out.event, Event::Collision | Event::GoalReached),
    };
    let finished = if out.done {
        let rec = (w.env.steps(), w.ret, out.event);
        w.restart(scale)?;
        Some(rec)
    } else {
        None
    };
    Ok(RoundOutput { transition, finished })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalStats {
    pub success_rate: f64,
    pub collision_rate: f64,
    pub timeout_rate: f64,
    pub mean_return: f64,
    pub mean_steps: f64,
}

pub fn evaluate(nets: &SacNets, env_config: &EnvConfig, n_episodes: usize, seed: u64) -> Result<EvalStats> {
    evaluate_with(nets, env_config, n_episodes, seed, Exec::default())
}

/// Runs `n_episodes` deterministic-policy episodes; episode `i` resets with
/// seed `seed + i`.
pub fn evaluate_with(
    nets: &SacNets,
    env_config: &EnvConfig,
    n_episodes: usize,
    seed: u64,
    exec: Exec,
) -> Result<EvalStats> {
    if n_episodes == 0 {
        return Err(Error::InvalidInput("n_episodes must be at least 1".into()));
    }
    let runs = exec.map(n_episodes, |i| -> Result<(Event, f64, usize)> {
        let (mut env, obs) = Env::reset(env_config, seed.wrapping_add(i as u64))?;
        let mut obs = obs.to_vec();
        let mut ret = 0.0;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        loop {
            let (action, _) = sample_action(&nets.actor, &obs, &mut rng, true)?;
            let out = env.step(&action)?;
            ret += out.reward;
            if out.done {
                return Ok((out.event, ret, env.steps()));
            }
            obs = out.observation.to_vec();
        }
    });
    let n = n_episodes as f64;
    let (mut goal, mut hit, mut ret, mut steps) = (0usize, 0usize, 0.0, 0.0);
    for r in runs {
        let (event, r_ret, r_steps) = r?;
        match event {
            Event::GoalReached => goal += 1,
            Event::Collision => hit += 1,
            _ => {}
        }
        ret += r_ret;
        steps += r_steps as f64;
    }
    Ok(EvalStats {
        success_rate: goal as f64 / n,
        collision_rate: hit as f64 / n,
        timeout_rate: (n_episodes - goal - hit) as f64 / n,
        mean_return: ret / n,
        mean_steps: steps / n,
    })
}

/// Saves the networks plus `manifest.txt` holding the hyperparameters, seed
/// and observation size.
pub fn save_checkpoint(dir: &FsPath, nets: &SacNets, hyper: &SacHyper, seed: u64) -> Result<()> {
    nets.save(dir)?;
    let manifest = format!(
        "{}seed = {seed}\nobs_dim = {}\nnetworks = {}\n",
        hyper.to_kv(),
        nets.obs_dim(),
        NET_FILES.map(|n| format!("{n}.mlp")).join(" ")
    );
    fs::write(dir.join("manifest.txt"), manifest).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))
}

pub fn load_checkpoint(dir: &FsPath) -> Result<SacNets> {
    SacNets::load(dir)
}
