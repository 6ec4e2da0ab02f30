use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::spec::{episode_seed, Agent, ExperimentSpec, TrainSpec};
use super::stats::{paired_differences, Estimate};
use crate::agents::{offline_solve, run_episode, RunOptions};
use crate::env::EnvConfig;
use crate::error::{Error, Result};
use crate::agents::OfflineConfig;
use crate::model::{Instance, Scenario};
use crate::nn::{checkpoint, train, CurvePoint, TrainInput, TrainOutcome};
use crate::rng::{derived_rng, Stream};

/// One agent on one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub agent: String,
    pub scenario: usize,
    /// Degree of dynamism the scenario was played at.
    pub dod: f64,
    /// Relative horizon noise of the agent's observations.
    pub horizon_noise: f64,
    pub accepted: u64,
    pub emission: f64,
    pub rejections: usize,
    pub offline_failure: bool,
    /// Decision plus routing time for the whole scenario.
    pub scenario_secs: f64,
    /// `scenario_secs` per decision.
    pub step_secs: f64,
}

/// Play `scenario` (index `index`) with `agent`.
pub fn run_agent(
    agent: &Agent,
    instance: &Instance,
    scenario: &Scenario,
    index: usize,
    base_seed: u64,
    env: &EnvConfig,
    offline: &OfflineConfig,
    check_every_step: bool,
) -> Result<RunRecord> {
    let seed = episode_seed(base_seed, index);
    let env = agent.env_config(env, instance);
    let mut record = RunRecord {
        agent: agent.label(),
        scenario: index,
        dod: instance.dod,
        horizon_noise: env.obs.horizon_noise_std_frac,
        accepted: 0,
        emission: 0.0,
        rejections: 0,
        offline_failure: false,
        scenario_secs: 0.0,
        step_secs: 0.0,
    };
    match agent.policy() {
        None => {
            let start = Instant::now();
            let sol = offline_solve(instance, scenario, offline, &mut derived_rng(seed, Stream::Offline, 0));
            record.scenario_secs = start.elapsed().as_secs_f64();
            record.step_secs = record.scenario_secs / scenario.len().max(1) as f64;
            record.accepted = sol.accepted;
            record.emission = sol.emission;
            record.rejections = sol.assignment.rejections();
        }
        Some(mut policy) => {
            let out = run_episode(instance, scenario, policy.as_mut(), &env, seed, RunOptions { check_every_step })?;
            record.accepted = out.accepted;
            record.emission = out.emission;
            record.offline_failure = out.offline_failure;
            record.rejections = out.assignment.as_ref().map_or(0, |a| a.rejections());
            record.scenario_secs = out.decision_time.as_secs_f64();
            record.step_secs = record.scenario_secs / out.decisions.max(1) as f64;
        }
    }
    Ok(record)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSummary {
    pub agent: String,
    pub accepted: Estimate,
    pub emission: Estimate,
    pub step_secs: Estimate,
    pub scenario_secs: Estimate,
    pub offline_failures: usize,
    /// Paired per-scenario `Ad(agent) - Ad(FAFS)`, when FAFS was evaluated.
    pub improvement_over_fafs: Option<Estimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    /// Sorted by agent order, then scenario.
    pub records: Vec<RunRecord>,
    pub summaries: Vec<AgentSummary>,
}

impl Evaluation {
    pub fn summary(&self, agent: &str) -> Option<&AgentSummary> {
        self.summaries.iter().find(|s| s.agent == agent)
    }

    /// Per-scenario accepted counts of `agent`, by scenario id.
    pub fn accepted(&self, agent: &str) -> Vec<f64> {
        self.records.iter().filter(|r| r.agent == agent).map(|r| r.accepted as f64).collect()
    }

    /// Paired per-scenario differences `a - b`.
    pub fn paired(&self, a: &str, b: &str) -> Vec<f64> {
        paired_differences(&self.accepted(a), &self.accepted(b))
    }

    /// More than half of the runs could not serve their known prefix.
    pub fn offline_failure_dominated(&self) -> bool {
        2 * self.records.iter().filter(|r| r.offline_failure).count() > self.records.len()
    }
}

/// Aggregate per-scenario records, keeping agents in first-seen order.
pub fn summarize(records: &[RunRecord]) -> Vec<AgentSummary> {
    let mut agents: Vec<&str> = Vec::new();
    for r in records {
        if !agents.contains(&r.agent.as_str()) {
            agents.push(&r.agent);
        }
    }
    let column = |agent: &str, f: &dyn Fn(&RunRecord) -> f64| -> Vec<f64> {
        records.iter().filter(|r| r.agent == agent).map(f).collect()
    };
    let fafs = column("FAFS", &|r| r.accepted as f64);
    agents
        .iter()
        .map(|&a| {
            let accepted = column(a, &|r| r.accepted as f64);
            AgentSummary {
                agent: a.to_string(),
                accepted: Estimate::of(&accepted),
                emission: Estimate::of(&column(a, &|r| r.emission)),
                step_secs: Estimate::of(&column(a, &|r| r.step_secs)),
                scenario_secs: Estimate::of(&column(a, &|r| r.scenario_secs)),
                offline_failures: records.iter().filter(|r| r.agent == a && r.offline_failure).count(),
                improvement_over_fafs: (!fafs.is_empty() && fafs.len() == accepted.len())
                    .then(|| Estimate::of(&paired_differences(&accepted, &fafs))),
            }
        })
        .collect()
}

/// Run every agent on `scenarios` of `instance`. All agents see the same
/// scenarios with the same episode seeds.
pub fn evaluate_on(
    spec: &ExperimentSpec,
    instance: &Instance,
    agents: &[Agent],
    scenarios: &[Scenario],
    check_every_step: bool,
) -> Result<Evaluation> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let mut records = Vec::with_capacity(agents.len() * scenarios.len());
    for agent in agents {
        if let Some(m) = agent.model() {
            m.check_compatible(instance, &agent.env_config(&spec.env, instance).obs)?;
        }
        let mut batch: Vec<RunRecord> = pool.install(|| {
            scenarios
                .par_iter()
                .enumerate()
                .map(|(i, s)| run_agent(agent, instance, s, i, spec.base_seed, &spec.env, &spec.offline, check_every_step))
                .collect::<Result<_>>()
        })?;
        batch.sort_by_key(|r| r.scenario);
        records.extend(batch);
    }
    let summaries = summarize(&records);
    Ok(Evaluation { records, summaries })
}

/// Build every agent of `spec` (loading checkpoints) and evaluate it.
pub fn evaluate(spec: &ExperimentSpec) -> Result<Evaluation> {
    spec.validate()?;
    let agents = spec.agents.iter().map(Agent::from_spec).collect::<Result<Vec<_>>>()?;
    let instance = spec.instance.load()?;
    let scenarios = spec.test_scenarios(&instance)?;
    evaluate_on(spec, &instance, &agents, &scenarios, false)
}

/// One evaluation per DoD value over the same scenarios. Agents are FAFS,
/// Offline, DQN-VA, and DQN-VA deciding the known prefix when DoD > 0.6.
pub fn sweep_dod(spec: &ExperimentSpec, model: &Agent) -> Result<Vec<(f64, Evaluation)>> {
    spec.validate_settings()?;
    let Some(m) = model.model() else {
        return Err(Error::Config("the DoD sweep needs a DQN model".into()));
    };
    let agents = [Agent::Fafs, Agent::Offline, Agent::DqnVa(m.clone()), Agent::DqnVaForcedDynamic(m.clone())];
    let base = spec.instance.load()?;
    let scenarios = spec.test_scenarios(&base)?;
    let dods = if spec.dod.is_empty() { vec![base.dod] } else { spec.dod.clone() };
    dods.iter().map(|&d| Ok((d, evaluate_on(spec, &base.with_dod(d), &agents, &scenarios, false)?))).collect()
}

/// A trained model and the observation noise setting it was trained for.
#[derive(Debug, Clone)]
pub struct NoiseModel {
    pub label: String,
    pub agent: Agent,
}

/// Evaluate FAFS once and each model under its own observation settings, all
/// on the same scenarios. Records of model `i` carry agent name
/// `DQN-VA[label]`.
pub fn sweep_horizon_noise(spec: &ExperimentSpec, models: &[NoiseModel]) -> Result<Evaluation> {
    spec.validate_settings()?;
    let instance = spec.instance.load()?;
    let scenarios = spec.test_scenarios(&instance)?;
    let mut records = evaluate_on(spec, &instance, &[Agent::Fafs], &scenarios, false)?.records;
    for m in models {
        let Some(model) = m.agent.model() else {
            return Err(Error::Config(format!("{}: not a DQN model", m.label)));
        };
        if model.num_vehicles != instance.num_vehicles() {
            return Err(Error::Config(format!("{}: model is for {} vehicles", m.label, model.num_vehicles)));
        }
        let eval = evaluate_on(spec, &instance, std::slice::from_ref(&m.agent), &scenarios, false)?;
        records.extend(eval.records.into_iter().map(|r| RunRecord { agent: format!("DQN-VA[{}]", m.label), ..r }));
    }
    let summaries = summarize(&records);
    Ok(Evaluation { records, summaries })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub agent: String,
    /// Wall-clock per scenario, first scenario excluded as warm-up.
    pub scenario_secs: Estimate,
}

/// Sequential per-scenario timing of every agent of `spec`.
pub fn time_agents(spec: &ExperimentSpec) -> Result<Vec<Timing>> {
    spec.validate()?;
    let agents = spec.agents.iter().map(Agent::from_spec).collect::<Result<Vec<_>>>()?;
    let instance = spec.instance.load()?;
    let scenarios = spec.test_scenarios(&instance)?;
    time_on(spec, &instance, &agents, &scenarios)
}

pub fn time_on(spec: &ExperimentSpec, instance: &Instance, agents: &[Agent], scenarios: &[Scenario]) -> Result<Vec<Timing>> {
    agents
        .iter()
        .map(|agent| {
            let mut secs = Vec::with_capacity(scenarios.len());
            for (i, s) in scenarios.iter().enumerate() {
                let r = run_agent(agent, instance, s, i, spec.base_seed, &spec.env, &spec.offline, false)?;
                if i > 0 || scenarios.len() == 1 {
                    secs.push(r.scenario_secs);
                }
            }
            Ok(Timing { agent: agent.label(), scenario_secs: Estimate::of(&secs) })
        })
        .collect()
}

/// Train a DQN-VA model as described by `spec`, saving it when an output path is set.
pub fn train_model(spec: &TrainSpec, progress: &mut dyn FnMut(&CurvePoint)) -> Result<TrainOutcome> {
    spec.dqn.validate()?;
    spec.env.obs.validate()?;
    let instance = spec.instance.load()?;
    let (train_set, validation) = spec.scenarios(&instance)?;
    let input = TrainInput { instance: &instance, env: spec.env, dqn: spec.dqn.clone(), seed: spec.seed, train: &train_set, validation: &validation };
    let out = train(&input, progress)?;
    if let Some(path) = &spec.output {
        checkpoint::save(&out.model, path)?;
    }
    Ok(out)
}
