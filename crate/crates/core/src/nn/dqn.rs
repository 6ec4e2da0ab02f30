use std::sync::Arc;
use std::time::Instant;

use ndarray::Array2;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::mlp::{argmax, huber_loss, Mlp};
use super::optim::{AdamW, AdamWConfig};
use super::replay::{ReplayBuffer, Transition};
use crate::agents::{run_episode, Interface, Policy, RunOptions};
use crate::env::{Env, EnvConfig, ObsConfig, ResetError};
use crate::error::{Error, Result};
use crate::model::{AssignmentKind, Decision, Instance, QuantityMode, Scenario};
use crate::rng::{derive_seed, derived_rng, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DqnConfig {
    pub gamma: f64,
    pub epsilon_limit: f64,
    /// Episodes until epsilon reaches its limit.
    pub epsilon_decay_period: f64,
    pub hard_update_interval: u64,
    pub soft_update_eta: f64,
    pub optimizer: AdamWConfig,
    pub minibatch: usize,
    pub replay_capacity: usize,
    pub warmup_transitions: usize,
    pub train_scenarios: usize,
    pub validation_scenarios: usize,
    pub episodes: usize,
    /// Validation every this many episodes.
    pub eval_every: usize,
    /// One gradient step every this many environment steps.
    pub train_every: usize,
    pub huber_delta: f64,
    /// Hidden widths; defaults to 3 x 512 for up to two vehicles, 3 x 1024 otherwise.
    pub hidden: Option<Vec<usize>>,
    /// Divide observation features by fixed instance-derived scales.
    pub normalize_inputs: bool,
    /// Stop training after this many seconds.
    pub time_budget_secs: Option<f64>,
}

impl Default for DqnConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            epsilon_limit: 0.05,
            epsilon_decay_period: 1000.0,
            hard_update_interval: 100,
            soft_update_eta: 0.01,
            optimizer: AdamWConfig::default(),
            minibatch: 128,
            replay_capacity: 100_000,
            warmup_transitions: 1_000,
            train_scenarios: 500,
            validation_scenarios: 50,
            episodes: 5_000,
            eval_every: 100,
            train_every: 1,
            huber_delta: 1.0,
            hidden: None,
            normalize_inputs: true,
            time_budget_secs: None,
        }
    }
}

impl DqnConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if !(self.soft_update_eta > 0.0 && self.soft_update_eta <= 1.0) {
            return bad("soft_update_eta must lie in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.epsilon_limit) {
            return bad("epsilon_limit must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad("gamma must lie in [0, 1]");
        }
        if self.minibatch == 0 || self.replay_capacity == 0 || self.train_every == 0 || self.eval_every == 0 {
            return bad("minibatch, replay_capacity, train_every and eval_every must be positive");
        }
        if self.hard_update_interval == 0 || !(self.epsilon_decay_period > 0.0) {
            return bad("hard_update_interval and epsilon_decay_period must be positive");
        }
        if self.hidden.as_ref().is_some_and(|h| h.is_empty() || h.contains(&0)) {
            return bad("hidden widths must be positive");
        }
        Ok(())
    }

    pub fn hidden_for(&self, num_vehicles: usize) -> Vec<usize> {
        self.hidden.clone().unwrap_or_else(|| if num_vehicles <= 2 { vec![512; 3] } else { vec![1024; 3] })
    }
}

/// Exploration rate at `episode`: starts at 1, decays geometrically and
/// reaches `epsilon_limit` at the decay period.
pub fn epsilon(episode: usize, cfg: &DqnConfig) -> f64 {
    if episode == 0 {
        return 1.0;
    }
    let lim = cfg.epsilon_limit;
    if lim <= 0.0 {
        return 0.0;
    }
    lim.max((-(episode as f64) * (1.0 / lim).ln() / cfg.epsilon_decay_period).exp())
}

/// `r + gamma * Q_target(s', argmax_a Q_policy(s', a))`, or `r` when terminal.
pub fn double_dqn_target(policy: &Mlp, target: &Mlp, t: &Transition, gamma: f64) -> Result<f64> {
    match &t.next_obs {
        None => Ok(t.reward),
        Some(next) => {
            let a = argmax(&policy.forward(next)?);
            Ok(t.reward + gamma * target.forward(next)?[a])
        }
    }
}

/// Hard copy when `step` is a multiple of `interval`, otherwise
/// `target <- (1 - eta) target + eta policy`.
pub fn update_target(policy: &Mlp, target: &mut Mlp, step: u64, interval: u64, eta: f64) -> Result<()> {
    if !policy.same_shape(target) {
        return Err(Error::Usage("policy and target networks differ in shape".into()));
    }
    if step % interval == 0 {
        target.clone_from(policy);
        return Ok(());
    }
    for (t, p) in target.layers_mut().iter_mut().zip(policy.layers()) {
        t.w.zip_mut_with(&p.w, |a, &b| *a = (1.0 - eta) * *a + eta * b);
        t.b.zip_mut_with(&p.b, |a, &b| *a = (1.0 - eta) * *a + eta * b);
    }
    Ok(())
}

/// Fixed per-feature divisors derived from the instance.
pub fn input_scale(instance: &Instance, obs: &ObsConfig) -> Vec<f64> {
    let n = instance.num_destinations() + 1;
    let max_dist = (0..n).flat_map(|i| instance.distances().row(i).iter().copied()).fold(0.0, f64::max);
    let max_prob = instance.probs().iter().copied().fold(0.0, f64::max);
    let positive = |x: f64| if x > 0.0 && x.is_finite() { x } else { 1.0 };
    let mut s = Vec::new();
    if !obs.horizon_hidden {
        s.push(positive(instance.horizon as f64));
    }
    s.extend(instance.vehicles.iter().map(|v| positive(v.capacity as f64)));
    s.push(positive(instance.quota));
    s.extend(instance.vehicles.iter().map(|v| positive(v.emission_factor * max_dist)));
    s.push(positive(max_prob * max_dist));
    if instance.quantity_mode == QuantityMode::Heterogeneous {
        s.push(positive(instance.vehicles.iter().map(|v| v.capacity).max().unwrap_or(1) as f64));
    }
    s
}

/// A Q-network together with what it needs to read observations.
#[derive(Debug, Clone, PartialEq)]
pub struct DqnModel {
    pub net: Mlp,
    pub obs: ObsConfig,
    pub num_vehicles: usize,
    pub quantity_mode: QuantityMode,
    pub input_scale: Vec<f64>,
    pub config_hash: String,
}

impl DqnModel {
    pub fn scaled(&self, obs: &[f64]) -> Vec<f64> {
        obs.iter().zip(&self.input_scale).map(|(x, s)| x / s).collect()
    }

    pub fn q_values(&self, obs: &[f64]) -> Result<Vec<f64>> {
        if obs.len() != self.input_scale.len() {
            return Err(Error::Usage(format!("observation has {} features, model expects {}", obs.len(), self.input_scale.len())));
        }
        self.net.forward(&self.scaled(obs))
    }

    /// Refuse to run on an instance or observation setup the model was not built for.
    pub fn check_compatible(&self, instance: &Instance, obs: &ObsConfig) -> Result<()> {
        if instance.num_vehicles() != self.num_vehicles {
            return Err(Error::Checkpoint(format!(
                "model was trained for {} vehicles, instance has {}",
                self.num_vehicles,
                instance.num_vehicles()
            )));
        }
        if instance.quantity_mode != self.quantity_mode {
            return Err(Error::Checkpoint("quantity mode differs from training".into()));
        }
        if obs.horizon_hidden != self.obs.horizon_hidden || obs.k_ad != self.obs.k_ad || obs.k_fd != self.obs.k_fd {
            return Err(Error::Checkpoint("observation layout differs from training".into()));
        }
        Ok(())
    }
}

/// Vehicle-assignment decision: index 0 rejects, index `v` assigns to vehicle `v - 1`.
pub fn dqn_va_action(q: &[f64], must_accept: bool) -> Decision {
    if must_accept {
        return Decision::AcceptToVehicle(argmax(&q[1..]));
    }
    match argmax(q) {
        0 => Decision::Reject,
        a => Decision::AcceptToVehicle(a - 1),
    }
}

/// Omission-assignment reading of the same network: any non-zero argmax accepts.
pub fn dqn_va_as_oa_action(q: &[f64], must_accept: bool) -> Decision {
    if must_accept || argmax(q) != 0 {
        Decision::Accept
    } else {
        Decision::Reject
    }
}

fn action_index(d: Decision) -> usize {
    match d {
        Decision::Reject | Decision::Accept => 0,
        Decision::AcceptToVehicle(v) => v + 1,
    }
}

/// Greedy DQN-VA policy.
#[derive(Debug, Clone)]
pub struct DqnVa {
    pub model: Arc<DqnModel>,
}

impl Policy for DqnVa {
    fn name(&self) -> String {
        "DQN-VA".into()
    }

    fn kind(&self) -> AssignmentKind {
        AssignmentKind::Vehicle
    }

    fn interface(&self) -> Interface {
        Interface::Observation
    }

    fn act(&mut self, env: &Env<'_>) -> Result<Decision> {
        let obs = env.observe().ok_or_else(|| Error::Usage("act called on a terminal episode".into()))?;
        Ok(dqn_va_action(&self.model.q_values(obs.as_slice())?, env.must_accept()))
    }
}

/// DQN-VA network used for accept/reject only; placement is left to the routing layer.
#[derive(Debug, Clone)]
pub struct DqnVaAsOa {
    pub model: Arc<DqnModel>,
}

impl Policy for DqnVaAsOa {
    fn name(&self) -> String {
        "DQN-VAasOA".into()
    }

    fn kind(&self) -> AssignmentKind {
        AssignmentKind::Omission
    }

    fn interface(&self) -> Interface {
        Interface::Observation
    }

    fn act(&mut self, env: &Env<'_>) -> Result<Decision> {
        let obs = env.observe().ok_or_else(|| Error::Usage("act called on a terminal episode".into()))?;
        Ok(dqn_va_as_oa_action(&self.model.q_values(obs.as_slice())?, env.must_accept()))
    }
}

#[derive(Debug, Clone)]
pub struct TrainInput<'a> {
    pub instance: &'a Instance,
    pub env: EnvConfig,
    pub dqn: DqnConfig,
    pub seed: u64,
    pub train: &'a [Scenario],
    pub validation: &'a [Scenario],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub episode: usize,
    pub epsilon: f64,
    /// Greedy mean accepted over the validation scenarios.
    pub validation_mean: f64,
    /// Mean episode return since the previous point.
    pub train_return_mean: f64,
    pub mean_loss: Option<f64>,
    pub elapsed_secs: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters with the best validation score.
    pub model: DqnModel,
    pub final_model: DqnModel,
    pub curve: Vec<CurvePoint>,
    pub episodes_run: usize,
    pub skipped_episodes: usize,
    pub gradient_steps: u64,
    pub elapsed_secs: f64,
    pub best_validation: f64,
}

/// Digest of everything that shapes a trained model.
pub fn config_hash(dqn: &DqnConfig, env: &EnvConfig, sizes: &[usize]) -> String {
    use sha2::{Digest, Sha256};
    let doc = serde_json::json!({ "dqn": dqn, "env": env, "sizes": sizes });
    let digest = Sha256::digest(doc.to_string().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

struct Learner {
    policy: Mlp,
    target: Mlp,
    opt: AdamW,
    steps: u64,
}

impl Learner {
    fn gradient_step(&mut self, batch: &[&Transition], cfg: &DqnConfig) -> Result<f64> {
        let n = batch.len();
        let d = self.policy.input_dim();
        let mut x = Array2::zeros((n, d));
        for (i, t) in batch.iter().enumerate() {
            x.row_mut(i).assign(&ndarray::ArrayView1::from(&t.obs[..]));
        }
        let live: Vec<usize> = (0..n).filter(|&i| !batch[i].is_terminal()).collect();
        let mut targets: Vec<f64> = batch.iter().map(|t| t.reward).collect();
        if !live.is_empty() {
            let mut xn = Array2::zeros((live.len(), d));
            for (r, &i) in live.iter().enumerate() {
                xn.row_mut(r).assign(&ndarray::ArrayView1::from(&batch[i].next_obs.as_ref().expect("live")[..]));
            }
            let qp = self.policy.forward_batch(xn.view());
            let qt = self.target.forward_batch(xn.view());
            for (r, &i) in live.iter().enumerate() {
                let a = argmax(qp.row(r).as_slice().expect("standard layout"));
                targets[i] += cfg.gamma * qt[[r, a]];
            }
        }
        let actions: Vec<usize> = batch.iter().map(|t| t.action).collect();
        let (inputs, q) = self.policy.forward_cached(x.view());
        let (loss, d_out) = huber_loss(&q, &actions, &targets, cfg.huber_delta);
        if !loss.is_finite() {
            let max_target = targets.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            return Err(Error::Training(format!(
                "non-finite loss at gradient step {} (batch {n}, max target {max_target}, max |q| {})",
                self.steps,
                q.iter().fold(0.0f64, |m, v| m.max(v.abs()))
            )));
        }
        let grads = self.policy.backward(&inputs, d_out);
        self.opt.step(&mut self.policy, &grads);
        self.steps += 1;
        update_target(&self.policy, &mut self.target, self.steps, cfg.hard_update_interval, cfg.soft_update_eta)?;
        Ok(loss)
    }
}

/// Mean greedy accepted amount of `model` over `scenarios`.
pub fn validate_model(
    model: &Arc<DqnModel>,
    instance: &Instance,
    env: &EnvConfig,
    scenarios: &[Scenario],
    seed: u64,
) -> Result<f64> {
    if scenarios.is_empty() {
        return Ok(0.0);
    }
    let mut policy = DqnVa { model: Arc::clone(model) };
    let mut total = 0.0;
    for (i, s) in scenarios.iter().enumerate() {
        let episode_seed = derive_seed(seed, Stream::ValidationScenario, i as u64);
        total += run_episode(instance, s, &mut policy, env, episode_seed, RunOptions::default())?.accepted as f64;
    }
    Ok(total / scenarios.len() as f64)
}

/// Double-DQN training of a DQN-VA model. Episodes whose known prefix cannot be
/// routed are skipped and counted. `progress` sees every learning-curve point.
pub fn train(input: &TrainInput<'_>, progress: &mut dyn FnMut(&CurvePoint)) -> Result<TrainOutcome> {
    let cfg = &input.dqn;
    cfg.validate()?;
    input.env.obs.validate()?;
    if input.train.is_empty() {
        return Err(Error::Config("no training scenarios".into()));
    }
    let inst = input.instance;
    let m = inst.num_vehicles();
    let obs_len = input.env.obs.len(m, inst.quantity_mode);
    let mut sizes = vec![obs_len];
    sizes.extend(cfg.hidden_for(m));
    sizes.push(m + 1);
    let scale = if cfg.normalize_inputs { input_scale(inst, &input.env.obs) } else { vec![1.0; obs_len] };
    let hash = config_hash(cfg, &input.env, &sizes);
    let wrap = |net: Mlp| DqnModel {
        net,
        obs: input.env.obs,
        num_vehicles: m,
        quantity_mode: inst.quantity_mode,
        input_scale: scale.clone(),
        config_hash: hash.clone(),
    };

    let policy = Mlp::new(&sizes, &mut derived_rng(input.seed, Stream::Network, 0));
    let mut learner = Learner { target: policy.clone(), opt: AdamW::new(&policy, cfg.optimizer), policy, steps: 0 };
    let mut replay = ReplayBuffer::new(cfg.replay_capacity);
    let mut replay_rng = derived_rng(input.seed, Stream::Replay, 0);
    let mut explore_rng = derived_rng(input.seed, Stream::Exploration, 0);
    let mut pick_rng = derived_rng(input.seed, Stream::Agent, 0);

    let start = Instant::now();
    let mut curve = Vec::new();
    let mut best: Option<(f64, Mlp)> = None;
    let mut skipped = 0;
    let mut env_steps = 0usize;
    let mut returns = Vec::new();
    let mut losses = Vec::new();
    let mut episodes_run = 0;

    let mut evaluate = |episode: usize, learner: &Learner, returns: &mut Vec<f64>, losses: &mut Vec<f64>, best: &mut Option<(f64, Mlp)>| -> Result<CurvePoint> {
        let model = Arc::new(wrap(learner.policy.clone()));
        let v = validate_model(&model, inst, &input.env, input.validation, input.seed)?;
        if best.as_ref().is_none_or(|(b, _)| v >= *b) {
            *best = Some((v, learner.policy.clone()));
        }
        let mean = |xs: &[f64]| if xs.is_empty() { None } else { Some(xs.iter().sum::<f64>() / xs.len() as f64) };
        let point = CurvePoint {
            episode,
            epsilon: epsilon(episode, cfg),
            validation_mean: v,
            train_return_mean: mean(returns).unwrap_or(0.0),
            mean_loss: mean(losses),
            elapsed_secs: start.elapsed().as_secs_f64(),
        };
        returns.clear();
        losses.clear();
        progress(&point);
        Ok(point)
    };

    for e in 0..cfg.episodes {
        if cfg.time_budget_secs.is_some_and(|b| start.elapsed().as_secs_f64() >= b) {
            log::info!("training stopped by time budget after {e} episodes");
            break;
        }
        let eps = epsilon(e, cfg);
        let scenario = &input.train[pick_rng.random_range(0..input.train.len())];
        let episode_seed = derive_seed(input.seed, Stream::Episode, e as u64);
        let mut env = match Env::reset(inst, scenario.clone(), input.env, AssignmentKind::Vehicle, episode_seed) {
            Ok(env) => env,
            Err(ResetError::Offline(_)) => {
                skipped += 1;
                continue;
            }
            Err(ResetError::Invalid(msg)) => return Err(Error::Usage(msg)),
        };
        let mut ret = 0.0;
        let mut obs = env.observe().map(|o| scaled(&scale, o.as_slice()));
        while let Some(x) = obs {
            let forced = env.must_accept();
            let action = if explore_rng.random::<f64>() < eps {
                explore_rng.random_range(usize::from(forced)..=m)
            } else {
                let q = learner.policy.forward(&x)?;
                action_index(dqn_va_action(&q, forced))
            };
            let decision = if action == 0 { Decision::Reject } else { Decision::AcceptToVehicle(action - 1) };
            let r = env.step(decision)?.reward as f64;
            ret += r;
            let next = env.observe().map(|o| scaled(&scale, o.as_slice()));
            replay.push(Transition { obs: x, action, reward: r, next_obs: next.clone() });
            env_steps += 1;
            if replay.len() >= cfg.warmup_transitions.max(1) && env_steps % cfg.train_every == 0 {
                let batch = replay.sample(cfg.minibatch, &mut replay_rng);
                losses.push(learner.gradient_step(&batch, cfg)?);
            }
            obs = next;
        }
        returns.push(ret + env.initial_reward() as f64);
        episodes_run = e + 1;
        if episodes_run % cfg.eval_every == 0 {
            curve.push(evaluate(episodes_run, &learner, &mut returns, &mut losses, &mut best)?);
        }
    }
    if curve.last().is_none_or(|p| p.episode != episodes_run) {
        curve.push(evaluate(episodes_run, &learner, &mut returns, &mut losses, &mut best)?);
    }
    let (best_validation, best_net) = best.expect("evaluated at least once");
    Ok(TrainOutcome {
        model: wrap(best_net),
        final_model: wrap(learner.policy),
        curve,
        episodes_run,
        skipped_episodes: skipped,
        gradient_steps: learner.steps,
        elapsed_secs: start.elapsed().as_secs_f64(),
        best_validation,
    })
}

fn scaled(scale: &[f64], obs: &[f64]) -> Vec<f64> {
    obs.iter().zip(scale).map(|(x, s)| x / s).collect()
}
