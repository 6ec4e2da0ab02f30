use serde::{Deserialize, Serialize};

use super::Policy;
use crate::env::Env;
use crate::error::{Error, Result};
use crate::generate::{sample_quantities, weighted_pick};
use crate::model::{AssignmentKind, Decision, Instance, QuantityMode, QUOTA_EPS};
use crate::rng::{derive_seed, rng_from_seed, Rng, Stream};
use crate::routing::{best_position, RoutingState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MsaConfig {
    pub num_scenarios: usize,
}

impl Default for MsaConfig {
    fn default() -> Self {
        Self { num_scenarios: 101 }
    }
}

impl MsaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_scenarios % 2 == 0 {
            return Err(Error::Config(format!("MSA needs an odd number of scenarios, got {}", self.num_scenarios)));
        }
        Ok(())
    }
}

/// Multiple Scenario Approach: samples completions of the episode and
/// accepts when a strict majority of them would serve the current demand.
#[derive(Debug, Clone)]
pub struct Msa {
    cfg: MsaConfig,
}

impl Msa {
    pub fn new(cfg: MsaConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { cfg })
    }
}

impl Policy for Msa {
    fn name(&self) -> String {
        "MSA".into()
    }

    fn kind(&self) -> AssignmentKind {
        AssignmentKind::Omission
    }

    fn act(&mut self, env: &Env<'_>) -> Result<Decision> {
        if env.must_accept() {
            return Ok(Decision::Accept);
        }
        let votes = msa_vote(env, &self.cfg);
        Ok(if 2 * votes > self.cfg.num_scenarios { Decision::Accept } else { Decision::Reject })
    }
}

/// Number of sampled completions in which the current demand gets served.
pub fn msa_vote(env: &Env<'_>, cfg: &MsaConfig) -> usize {
    let d = env.current_demand().expect("episode not finished");
    let instance = env.instance();
    let remaining = instance.horizon - env.t();
    let unseen = env.unseen();
    let step_seed = derive_seed(env.episode_seed(), Stream::Msa, env.t() as u64);
    let mut accepted = 0;
    let mut pending = Vec::with_capacity(remaining + 1);
    for i in 0..cfg.num_scenarios {
        let mut rng = rng_from_seed(derive_seed(step_seed, Stream::Msa, i as u64));
        pending.clear();
        pending.push((d, env.current_quantity()));
        complete(instance, &unseen, remaining, &mut rng, &mut pending);
        if serves_first(env.routing_state(), instance, &pending) {
            accepted += 1;
        }
    }
    accepted
}

/// Append `count` future demands drawn without replacement from `unseen`.
fn complete(instance: &Instance, unseen: &[usize], count: usize, rng: &mut Rng, out: &mut Vec<(usize, u32)>) {
    let mut weights: Vec<f64> = unseen.iter().map(|&u| instance.prob(u)).collect();
    let mut total: f64 = weights.iter().sum();
    let quantities = match instance.quantity_mode {
        QuantityMode::Unit => None,
        QuantityMode::Heterogeneous => sample_quantities(instance, rng).ok(),
    };
    for j in 0..count.min(unseen.len()) {
        let Some(i) = weighted_pick(&weights, total, rng).or_else(|| weights.iter().rposition(|&w| w > 0.0)) else {
            break;
        };
        total -= weights[i];
        weights[i] = 0.0;
        let q = quantities.as_ref().map_or(1, |q| q[instance.horizon - count + j]);
        out.push((unseen[i], q));
    }
}

/// Cheapest-insertion completion from `state`: repeatedly insert the pending
/// demand with the smallest emission increase among vehicles with room, until
/// the next insertion would break the quota. Reports whether `pending[0]` made it.
fn serves_first(state: &RoutingState, instance: &Instance, pending: &[(usize, u32)]) -> bool {
    let m = instance.num_vehicles();
    let mut routes: Vec<Vec<usize>> = state.routing().routes.iter().map(|r| r.stops.clone()).collect();
    let mut loads = state.loads().to_vec();
    let mut emission = state.emission();
    let mut live: Vec<bool> = vec![true; pending.len()];
    let mut cache: Vec<Vec<(f64, usize)>> = pending
        .iter()
        .map(|&(d, _)| (0..m).map(|v| best_position(&routes[v], d, instance.distances())).collect())
        .collect();
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for (i, &(_, q)) in pending.iter().enumerate() {
            if !live[i] {
                continue;
            }
            for v in 0..m {
                if loads[v] + q > instance.vehicles[v].capacity {
                    continue;
                }
                let cost = instance.vehicles[v].emission_factor * cache[i][v].0;
                if best.is_none_or(|b| cost < b.0) {
                    best = Some((cost, i, v));
                }
            }
        }
        let Some((cost, i, v)) = best else { return false };
        if emission + cost > instance.quota + QUOTA_EPS {
            return false;
        }
        if i == 0 {
            return true;
        }
        let (d, q) = pending[i];
        routes[v].insert(cache[i][v].1, d);
        loads[v] += q;
        emission += cost;
        live[i] = false;
        for (j, &(other, _)) in pending.iter().enumerate() {
            if live[j] {
                cache[j][v] = best_position(&routes[v], other, instance.distances());
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::EnvConfig;
    use crate::generate::{generate, presets, sample_scenario, GeneratorConfig};
    use crate::model::{Route, Routing, Scenario};
    use crate::rng::derived_rng;
    use crate::routing::{cheapest_insertion, SaConfig};

    fn env_cfg() -> EnvConfig {
        EnvConfig { offline_sa: SaConfig::with_iterations(1_000), dynamic_sa: SaConfig::with_iterations(200), ..EnvConfig::default() }
    }

    #[test]
    fn even_scenario_count_is_rejected() {
        assert!(Msa::new(MsaConfig { num_scenarios: 100 }).is_err());
        assert!(Msa::new(MsaConfig::default()).is_ok());
    }

    #[test]
    fn votes_are_reproducible() {
        let inst = generate(&GeneratorConfig { num_destinations: 30, horizon: 20, quota: 40.0, ..presets::clustered(1) }).unwrap();
        let s = sample_scenario(&inst, &mut derived_rng(1, Stream::TestScenario, 0));
        let mut env = Env::reset(&inst, s, env_cfg(), AssignmentKind::Omission, 11).unwrap();
        let cfg = MsaConfig { num_scenarios: 21 };
        while !env.is_done() {
            let v = msa_vote(&env, &cfg);
            assert!(v <= 21);
            assert_eq!(v, msa_vote(&env, &cfg));
            let a = if 2 * v > 21 { Decision::Accept } else { Decision::Reject };
            env.step(a).unwrap();
        }
    }

    #[test]
    fn last_step_vote_is_single_feasibility_check() {
        let inst = generate(&GeneratorConfig { num_destinations: 10, horizon: 3, quota: 30.0, ..presets::clustered(2) }).unwrap();
        let s = Scenario::new(vec![1, 2, 3]);
        let mut env = Env::reset(&inst, s, env_cfg(), AssignmentKind::Omission, 2).unwrap();
        env.step(Decision::Accept).unwrap();
        env.step(Decision::Accept).unwrap();
        let state = env.routing_state();
        let feasible = cheapest_insertion(state.routing(), state.loads(), 3, &inst, env.quantities(), None)
            .is_some_and(|ins| state.emission() + ins.cost <= inst.quota + QUOTA_EPS);
        let v = msa_vote(&env, &MsaConfig::default());
        assert!(v == 0 || v == 101);
        assert_eq!(v == 101, feasible);
    }

    #[test]
    fn completion_can_displace_current_demand() {
        // Current demand far away; plenty of close future demands fill the quota first.
        let pts = vec![(0.0, 0.0), (50.0, 0.0), (1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)];
        let inst = Instance::new(
            crate::model::DistanceMatrix::euclidean(&pts),
            vec![0.01, 0.99 / 4.0, 0.99 / 4.0, 0.99 / 4.0, 0.99 / 4.0],
            vec![crate::model::Vehicle { id: 0, emission_factor: 0.1, capacity: 10 }],
            10.2,
            5,
            1.0,
        )
        .unwrap();
        let state = RoutingState::new(Routing { routes: vec![Route::new(0, vec![])] }, &inst, &crate::model::Quantities::unit(5));
        // Alone, destination 1 costs 0.1 * 100 = 10 <= 10.2.
        assert!(serves_first(&state, &inst, &[(1, 1)]));
        assert!(!serves_first(&state, &inst, &[(1, 1), (2, 1), (3, 1), (4, 1), (5, 1)]));
    }
}
