//! Acceptance policies and the episode driver.

mod msa;
mod offline;
pub mod oracle;

use std::time::{Duration, Instant};

use rand::Rng as _;
use serde::{Deserialize, Serialize};

pub use msa::{msa_vote, Msa, MsaConfig};
pub use offline::{greedy_split, offline_solve, tie_break_scale, OfflineConfig, OfflineSolution, SplitResult};

use crate::env::{Env, EnvConfig, ResetError};
use crate::error::{Error, Result};
use crate::model::{check_feasible, Assignment, AssignmentKind, Decision, Instance, Routing, Scenario};
use crate::rng::{derived_rng, Stream};
use crate::routing::OfflineFailure;

/// What a policy looks at when deciding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interface {
    /// Inspects the environment state (routing, future destinations).
    State,
    /// Sees only the observation vector.
    Observation,
}

pub trait Policy {
    fn name(&self) -> String;

    fn kind(&self) -> AssignmentKind;

    fn interface(&self) -> Interface {
        Interface::State
    }

    /// Decide on the current demand of `env`. Must not be called on a terminal episode.
    fn act(&mut self, env: &Env<'_>) -> Result<Decision>;
}

/// First-Arrived-First-Served: accepts everything and lets the routing layer refuse.
#[derive(Debug, Clone, Copy, Default)]
pub struct Fafs;

impl Policy for Fafs {
    fn name(&self) -> String {
        "FAFS".into()
    }

    fn kind(&self) -> AssignmentKind {
        AssignmentKind::Omission
    }

    fn act(&mut self, _env: &Env<'_>) -> Result<Decision> {
        Ok(Decision::Accept)
    }
}

/// Uniform random decisions, seeded from the episode and the time step.
#[derive(Debug, Clone, Copy)]
pub struct RandomPolicy {
    pub kind: AssignmentKind,
}

impl Policy for RandomPolicy {
    fn name(&self) -> String {
        match self.kind {
            AssignmentKind::Omission => "Random-OA".into(),
            AssignmentKind::Vehicle => "Random-VA".into(),
        }
    }

    fn kind(&self) -> AssignmentKind {
        self.kind
    }

    fn act(&mut self, env: &Env<'_>) -> Result<Decision> {
        let mut rng = derived_rng(env.episode_seed(), Stream::Agent, env.t() as u64);
        let forced = env.must_accept();
        Ok(match self.kind {
            AssignmentKind::Omission if forced || rng.random_bool(0.5) => Decision::Accept,
            AssignmentKind::Omission => Decision::Reject,
            AssignmentKind::Vehicle => {
                let m = env.instance().num_vehicles();
                let a = rng.random_range(usize::from(forced)..=m);
                if a == 0 {
                    Decision::Reject
                } else {
                    Decision::AcceptToVehicle(a - 1)
                }
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeOutcome {
    /// Accepted demand (count, or total quantity in heterogeneous mode); 0 on failure.
    pub accepted: u64,
    pub emission: f64,
    /// The known prefix could not be served.
    pub offline_failure: bool,
    pub decisions: usize,
    /// Wall time spent deciding and integrating dynamic demands.
    #[serde(with = "duration_secs")]
    pub decision_time: Duration,
    #[serde(skip)]
    pub assignment: Option<Assignment>,
    #[serde(skip)]
    pub routing: Option<Routing>,
}

mod duration_secs {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_secs_f64(f64::deserialize(d)?))
    }
}

impl EpisodeOutcome {
    fn failure(failure: &OfflineFailure) -> Self {
        log::debug!("episode failed: {failure}");
        Self {
            accepted: 0,
            emission: 0.0,
            offline_failure: true,
            decisions: 0,
            decision_time: Duration::ZERO,
            assignment: None,
            routing: None,
        }
    }
}

/// Options for [`run_episode`].
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Run `check_feasible` after every step and fail on a violation.
    pub check_every_step: bool,
}

/// Play one episode of `scenario` with `policy`.
pub fn run_episode(
    instance: &Instance,
    scenario: &Scenario,
    policy: &mut dyn Policy,
    env_cfg: &EnvConfig,
    episode_seed: u64,
    opts: RunOptions,
) -> Result<EpisodeOutcome> {
    let mut env = match Env::reset(instance, scenario.clone(), *env_cfg, policy.kind(), episode_seed) {
        Ok(env) => env,
        Err(ResetError::Offline(f)) => return Ok(EpisodeOutcome::failure(&f)),
        Err(ResetError::Invalid(msg)) => return Err(Error::Usage(msg)),
    };
    let start = Instant::now();
    let mut total = env.initial_reward();
    let mut decisions = 0;
    while !env.is_done() {
        let action = policy.act(&env)?;
        total += env.step(action)?.reward;
        decisions += 1;
        if opts.check_every_step {
            check_feasible(env.routing_state().routing(), instance, env.quantities())
                .map_err(|v| Error::Usage(format!("{} produced an infeasible routing: {v}", policy.name())))?;
        }
    }
    let decision_time = start.elapsed();
    if env.failed() {
        return Ok(EpisodeOutcome::failure(&OfflineFailure::Capacity));
    }
    debug_assert_eq!(total, env.total_reward());
    Ok(EpisodeOutcome {
        accepted: total,
        emission: env.routing_state().emission(),
        offline_failure: false,
        decisions,
        decision_time,
        assignment: Some(env.assignment().clone()),
        routing: Some(env.routing_state().routing().clone()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate, presets, sample_scenario, GeneratorConfig};
    use crate::model::accepted_count;
    use crate::routing::SaConfig;

    fn fast_env() -> EnvConfig {
        EnvConfig { offline_sa: SaConfig::with_iterations(2_000), dynamic_sa: SaConfig::with_iterations(300), ..EnvConfig::default() }
    }

    fn instance(quota: f64) -> Instance {
        let cfg = GeneratorConfig { num_destinations: 30, horizon: 20, quota, ..presets::clustered(9) };
        generate(&cfg).unwrap()
    }

    #[test]
    fn fafs_serves_everything_when_unconstrained() {
        let inst = instance(1e6);
        let s = sample_scenario(&inst, &mut derived_rng(0, Stream::TestScenario, 0));
        let out = run_episode(&inst, &s, &mut Fafs, &fast_env(), 0, RunOptions { check_every_step: true }).unwrap();
        assert_eq!(out.accepted, 20);
    }

    #[test]
    fn fafs_rejections_come_from_routing_layer() {
        let inst = instance(20.0);
        let s = sample_scenario(&inst, &mut derived_rng(1, Stream::TestScenario, 0));
        let mut env = Env::reset(&inst, s.clone(), fast_env(), AssignmentKind::Omission, 1).unwrap();
        let mut rejected = 0;
        while !env.is_done() {
            let a = Fafs.act(&env).unwrap();
            assert_eq!(a, Decision::Accept);
            if !env.step(a).unwrap().info.inserted {
                rejected += 1;
            }
        }
        assert!(rejected > 0);
        assert_eq!(env.assignment().rejections(), rejected);
        assert_eq!(env.total_reward(), accepted_count(env.assignment(), &s));
    }

    #[test]
    fn random_policy_is_reproducible_and_valid() {
        let inst = instance(60.0);
        let s = sample_scenario(&inst, &mut derived_rng(2, Stream::TestScenario, 0));
        for kind in [AssignmentKind::Omission, AssignmentKind::Vehicle] {
            let opts = RunOptions { check_every_step: true };
            let a = run_episode(&inst, &s, &mut RandomPolicy { kind }, &fast_env(), 5, opts).unwrap();
            let b = run_episode(&inst, &s, &mut RandomPolicy { kind }, &fast_env(), 5, opts).unwrap();
            assert_eq!(a.assignment, b.assignment);
            assert_eq!(a.accepted, accepted_count(a.assignment.as_ref().unwrap(), &s));
        }
    }

    #[test]
    fn infeasible_prefix_scores_zero() {
        let inst = instance(0.0).with_dod(0.5);
        let s = sample_scenario(&inst, &mut derived_rng(3, Stream::TestScenario, 0));
        let out = run_episode(&inst, &s, &mut Fafs, &fast_env(), 3, RunOptions::default()).unwrap();
        assert!(out.offline_failure);
        assert_eq!(out.accepted, 0);
    }
}
