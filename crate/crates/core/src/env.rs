//! Episode environment: offline phase for the known prefix, then one step per
//! revealed demand, with the engineered observation vector.
//!
//! Observation layout, for a fleet of `M` vehicles:
//!
//! | slot | content |
//! |------|---------|
//! | 0 | remaining steps `H - t` (noisy estimate, or absent when hidden) |
//! | 1..=M | residual capacity of each vehicle |
//! | M+1 | quota slack `Q - emission` |
//! | M+2..=2M+1 | DAD of the incoming demand for each vehicle |
//! | 2M+2 | DFD of the incoming demand |
//! | 2M+3 | demanded quantity (heterogeneous mode only) |

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    AssignmentKind, Assignment, Decision, DistanceMatrix, Instance, QuantityMode, Quantities, Route, Scenario, Vehicle, HUB,
};
use crate::rng::{derive_seed, rng_from_seed, Rng, Stream};
use crate::routing::{insert_omission, insert_vehicle, route_offline, InsertOutcome, OfflineFailure, RoutingState, SaConfig};

/// Which destinations count as "future" for the DFD feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FutureSet {
    /// Destinations not revealed so far in the episode.
    #[default]
    Unseen,
    /// Destinations that do not occur anywhere in the scenario.
    NotInScenario,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObsConfig {
    pub k_ad: usize,
    pub k_fd: usize,
    /// Relative standard deviation of the horizon estimate; 0 gives the exact horizon.
    pub horizon_noise_std_frac: f64,
    /// Drop the remaining-steps slot altogether.
    pub horizon_hidden: bool,
    #[serde(default)]
    pub future_set: FutureSet,
}

impl Default for ObsConfig {
    fn default() -> Self {
        Self { k_ad: 3, k_fd: 7, horizon_noise_std_frac: 0.0, horizon_hidden: false, future_set: FutureSet::Unseen }
    }
}

impl ObsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_ad == 0 || self.k_fd == 0 {
            return Err(Error::Config("k_ad and k_fd must be at least 1".into()));
        }
        if !(self.horizon_noise_std_frac >= 0.0) {
            return Err(Error::Config("horizon noise must be non-negative".into()));
        }
        Ok(())
    }

    /// Length of the observation vector for a fleet of `num_vehicles`.
    pub fn len(&self, num_vehicles: usize, mode: QuantityMode) -> usize {
        2 * num_vehicles + 3 - usize::from(self.horizon_hidden) + usize::from(mode == QuantityMode::Heterogeneous)
    }
}

/// Fixed-length feature vector fed to learning agents.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation(pub Vec<f64>);

impl Observation {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Emission-scaled mean distance from `d` to its `k_ad` nearest stops of the
/// route (divided by `k_ad` even when the route has fewer stops). An empty
/// route uses the hub: `Ef * D[0][d]`.
pub fn dad(k_ad: usize, d: usize, route: &Route, vehicle: &Vehicle, distances: &DistanceMatrix) -> f64 {
    if route.stops.is_empty() {
        return vehicle.emission_factor * distances.get(HUB, d);
    }
    let mut dists: Vec<f64> = route.stops.iter().map(|&s| distances.get(s, d)).collect();
    let k = k_ad.min(dists.len());
    if k < dists.len() {
        dists.select_nth_unstable_by(k - 1, f64::total_cmp);
    }
    let sum: f64 = dists[..k].iter().sum();
    vehicle.emission_factor * sum / k_ad as f64
}

/// Median of `p_u * D[u][d]` over the `k_fd` destinations `u` of `future`
/// nearest to `d`; 0 when `future` is empty.
pub fn dfd(k_fd: usize, d: usize, future: &[usize], instance: &Instance) -> f64 {
    if future.is_empty() {
        return 0.0;
    }
    let mut near: Vec<(f64, usize)> = future.iter().map(|&u| (instance.dist(u, d), u)).collect();
    let k = k_fd.min(near.len());
    if k < near.len() {
        near.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    }
    let mut weighted: Vec<f64> = near[..k].iter().map(|&(dist, u)| instance.prob(u) * dist).collect();
    median(&mut weighted)
}

pub(crate) fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub obs: ObsConfig,
    /// Annealing budget for the offline phase.
    pub offline_sa: SaConfig,
    /// Annealing budget for each dynamic insertion.
    pub dynamic_sa: SaConfig,
    /// Feed known-prefix demands through the agent one by one instead of
    /// routing them offline. They still have to be accepted.
    #[serde(default)]
    pub prefix_as_dynamic: bool,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self { obs: ObsConfig::default(), offline_sa: SaConfig::default(), dynamic_sa: SaConfig::default(), prefix_as_dynamic: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ResetError {
    /// The known prefix cannot be routed within capacity and quota.
    Offline(OfflineFailure),
    Invalid(String),
}

impl std::fmt::Display for ResetError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ResetError::Offline(e) => write!(f, "offline phase failed: {e}"),
            ResetError::Invalid(e) => write!(f, "invalid episode: {e}"),
        }
    }
}

impl std::error::Error for ResetError {}

/// Audit record of one dynamic step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// 1-based time step.
    pub t: usize,
    pub demand: usize,
    pub action: Decision,
    pub inserted: bool,
    pub reward: u64,
    pub emission: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepInfo {
    pub inserted: bool,
    pub emission: f64,
    pub loads: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub reward: u64,
    pub done: bool,
    pub info: StepInfo,
}

pub struct Env<'a> {
    instance: &'a Instance,
    scenario: Scenario,
    quantities: Quantities,
    cfg: EnvConfig,
    kind: AssignmentKind,
    rng: Rng,
    episode_seed: u64,
    /// 0-based index of the demand awaiting a decision.
    cursor: usize,
    state: RoutingState,
    assignment: Assignment,
    seen: Vec<bool>,
    horizon_estimate: f64,
    must_accept_until: usize,
    total_reward: u64,
    initial_reward: u64,
    failed: bool,
    trace: Vec<StepRecord>,
}

impl<'a> Env<'a> {
    /// Start an episode. Routes the known prefix offline (unless
    /// `prefix_as_dynamic`) and positions the episode at the first dynamic
    /// demand.
    pub fn reset(
        instance: &'a Instance,
        scenario: Scenario,
        cfg: EnvConfig,
        kind: AssignmentKind,
        episode_seed: u64,
    ) -> Result<Self, ResetError> {
        scenario.validate(instance).map_err(|e| ResetError::Invalid(e.to_string()))?;
        cfg.obs.validate().map_err(|e| ResetError::Invalid(e.to_string()))?;
        let quantities = Quantities::for_scenario(instance.num_destinations(), &scenario);
        let mut rng = rng_from_seed(derive_seed(episode_seed, Stream::Episode, 0));
        let prefix = instance.known_prefix_len();

        let horizon = instance.horizon as f64;
        let horizon_estimate = if cfg.obs.horizon_noise_std_frac > 0.0 {
            let mut noise_rng = rng_from_seed(derive_seed(episode_seed, Stream::HorizonNoise, 0));
            let n = Normal::new(0.0, cfg.obs.horizon_noise_std_frac).expect("finite std");
            horizon * (1.0 + n.sample(&mut noise_rng))
        } else {
            horizon
        };

        let mut env = Self {
            instance,
            quantities,
            cfg,
            kind,
            episode_seed,
            cursor: 0,
            state: RoutingState::empty(instance),
            assignment: Assignment::new(kind),
            seen: vec![false; instance.num_destinations() + 1],
            horizon_estimate,
            must_accept_until: 0,
            total_reward: 0,
            initial_reward: 0,
            failed: false,
            trace: Vec::new(),
            scenario,
            rng: rng.clone(),
        };

        if cfg.prefix_as_dynamic {
            env.must_accept_until = prefix;
        } else if prefix > 0 {
            let known = &env.scenario.demands[..prefix];
            let routing = route_offline(instance, known, &env.quantities, &cfg.offline_sa, &mut rng).map_err(ResetError::Offline)?;
            env.state = RoutingState::new(routing, instance, &env.quantities);
            for (i, &d) in known.iter().enumerate() {
                let decision = match kind {
                    AssignmentKind::Omission => Decision::Accept,
                    AssignmentKind::Vehicle => {
                        Decision::AcceptToVehicle(env.state.routing().vehicle_of(d).expect("prefix destination routed"))
                    }
                };
                env.assignment.decisions.push(decision);
                env.seen[d] = true;
                env.initial_reward += env.scenario.quantity_at(i) as u64;
            }
            env.cursor = prefix;
            env.total_reward = env.initial_reward;
        }
        env.rng = rng;
        if let Some(&d) = env.scenario.demands.get(env.cursor) {
            env.seen[d] = true;
        }
        Ok(env)
    }

    pub fn instance(&self) -> &'a Instance {
        self.instance
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn quantities(&self) -> &Quantities {
        &self.quantities
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn kind(&self) -> AssignmentKind {
        self.kind
    }

    pub fn episode_seed(&self) -> u64 {
        self.episode_seed
    }

    pub fn is_done(&self) -> bool {
        self.failed || self.cursor >= self.scenario.len()
    }

    /// The episode aborted because a demand of the known prefix could not be served.
    pub fn failed(&self) -> bool {
        self.failed
    }

    /// 1-based time step of the demand awaiting a decision.
    pub fn t(&self) -> usize {
        self.cursor + 1
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn current_demand(&self) -> Option<usize> {
        if self.is_done() {
            None
        } else {
            Some(self.scenario.demands[self.cursor])
        }
    }

    pub fn current_quantity(&self) -> u32 {
        self.scenario.quantity_at(self.cursor.min(self.scenario.len().saturating_sub(1)))
    }

    /// The current demand belongs to the known prefix and must be accepted.
    pub fn must_accept(&self) -> bool {
        self.cursor < self.must_accept_until
    }

    pub fn routing_state(&self) -> &RoutingState {
        &self.state
    }

    pub fn assignment(&self) -> &Assignment {
        &self.assignment
    }

    pub fn total_reward(&self) -> u64 {
        self.total_reward
    }

    /// Reward collected by the offline phase.
    pub fn initial_reward(&self) -> u64 {
        self.initial_reward
    }

    pub fn trace(&self) -> &[StepRecord] {
        &self.trace
    }

    pub fn horizon_estimate(&self) -> f64 {
        self.horizon_estimate
    }

    pub fn is_seen(&self, d: usize) -> bool {
        self.seen[d]
    }

    /// Destinations not revealed so far.
    pub fn unseen(&self) -> Vec<usize> {
        (1..=self.instance.num_destinations()).filter(|&d| !self.seen[d]).collect()
    }

    fn future_set(&self) -> Vec<usize> {
        match self.cfg.obs.future_set {
            FutureSet::Unseen => self.unseen(),
            FutureSet::NotInScenario => {
                let mut in_scenario = vec![false; self.instance.num_destinations() + 1];
                for &d in &self.scenario.demands {
                    in_scenario[d] = true;
                }
                (1..=self.instance.num_destinations()).filter(|&d| !in_scenario[d]).collect()
            }
        }
    }

    /// Observation for the demand awaiting a decision; `None` once terminal.
    pub fn observe(&self) -> Option<Observation> {
        let d = self.current_demand()?;
        let inst = self.instance;
        let obs = &self.cfg.obs;
        let mut x = Vec::with_capacity(obs.len(inst.num_vehicles(), inst.quantity_mode));
        if !obs.horizon_hidden {
            x.push((self.horizon_estimate - self.t() as f64).max(0.0));
        }
        for (v, load) in self.state.loads().iter().enumerate() {
            x.push(inst.vehicles[v].capacity as f64 - *load as f64);
        }
        x.push(inst.quota - self.state.emission());
        for (v, route) in self.state.routing().routes.iter().enumerate() {
            x.push(dad(obs.k_ad, d, route, &inst.vehicles[v], inst.distances()));
        }
        x.push(dfd(obs.k_fd, d, &self.future_set(), inst));
        if inst.quantity_mode == QuantityMode::Heterogeneous {
            x.push(self.current_quantity() as f64);
        }
        Some(Observation(x))
    }

    /// Apply a decision to the current demand and reveal the next one.
    pub fn step(&mut self, action: Decision) -> Result<StepResult> {
        if self.is_done() {
            return Err(Error::Usage("step called on a terminal episode".into()));
        }
        if !self.kind.admits(action) {
            return Err(Error::Usage(format!("{action:?} is not a {:?} decision", self.kind)));
        }
        if let Decision::AcceptToVehicle(v) = action {
            if v >= self.instance.num_vehicles() {
                return Err(Error::Usage(format!("vehicle index {v} out of range")));
            }
        }
        if self.must_accept() && action == Decision::Reject {
            return Err(Error::Usage("demands of the known prefix must be accepted".into()));
        }
        let d = self.scenario.demands[self.cursor];
        let q = self.scenario.quantity_at(self.cursor) as u64;
        let inst = self.instance;
        let outcome = match action {
            Decision::Reject => None,
            Decision::Accept => {
                Some(insert_omission(&self.state, d, inst, &self.quantities, &self.cfg.dynamic_sa, &mut self.rng))
            }
            Decision::AcceptToVehicle(v) => {
                let first = insert_vehicle(&self.state, d, v, inst, &self.quantities, &self.cfg.dynamic_sa, &mut self.rng);
                if self.must_accept() && !matches!(first, InsertOutcome::Inserted(_)) {
                    Some(insert_omission(&self.state, d, inst, &self.quantities, &self.cfg.dynamic_sa, &mut self.rng))
                } else {
                    Some(first)
                }
            }
        };
        let (recorded, inserted) = match outcome {
            Some(InsertOutcome::Inserted(state)) => {
                let recorded = match self.kind {
                    AssignmentKind::Omission => Decision::Accept,
                    AssignmentKind::Vehicle => Decision::AcceptToVehicle(state.routing().vehicle_of(d).expect("inserted")),
                };
                self.state = state;
                (recorded, true)
            }
            _ => (Decision::Reject, false),
        };
        if self.must_accept() && !inserted {
            self.failed = true;
        }
        let reward = if inserted { q } else { 0 };
        self.total_reward += reward;
        self.assignment.decisions.push(recorded);
        self.trace.push(StepRecord { t: self.t(), demand: d, action, inserted, reward, emission: self.state.emission() });
        self.cursor += 1;
        if let Some(&next) = self.scenario.demands.get(self.cursor) {
            self.seen[next] = true;
        }
        Ok(StepResult {
            reward,
            done: self.is_done(),
            info: StepInfo { inserted, emission: self.state.emission(), loads: self.state.loads().to_vec() },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate, presets, sample_scenario};
    use crate::model::{accepted_count, check_feasible, fixtures::triangle, Routing};
    use crate::rng::derived_rng;

    fn fast_cfg() -> EnvConfig {
        EnvConfig { offline_sa: SaConfig::with_iterations(2_000), dynamic_sa: SaConfig::with_iterations(500), ..EnvConfig::default() }
    }

    fn small_instance(dod: f64) -> Instance {
        let cfg = crate::generate::GeneratorConfig { num_destinations: 30, horizon: 20, dod, ..presets::clustered(5) };
        generate(&cfg).unwrap()
    }

    #[test]
    fn dad_cases() {
        let inst = triangle();
        let v = Vehicle { id: 0, emission_factor: 0.3, capacity: 20 };
        let d = inst.distances();
        assert!((dad(1, 2, &Route::new(0, vec![1]), &v, d) - 0.3 * 4.0).abs() < 1e-12);
        assert_eq!(dad(1, 1, &Route::new(0, vec![1, 2]), &v, d), 0.0);
        let hybrid = Vehicle { id: 1, emission_factor: 0.15, capacity: 20 };
        assert!((dad(3, 2, &Route::new(1, vec![]), &hybrid, d) - 0.15 * 5.0).abs() < 1e-12);
        // Fewer stops than k: sum over what exists, still divided by k.
        assert!((dad(3, 2, &Route::new(0, vec![1]), &v, d) - 0.3 * 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn dad_ignores_stop_order() {
        let inst = small_instance(1.0);
        let v = inst.vehicles[0];
        let a = dad(3, 5, &Route::new(0, vec![1, 2, 3, 4]), &v, inst.distances());
        let b = dad(3, 5, &Route::new(0, vec![4, 2, 1, 3]), &v, inst.distances());
        assert_eq!(a, b);
    }

    #[test]
    fn dfd_cases() {
        let inst = small_instance(1.0);
        assert_eq!(dfd(7, 3, &[], &inst), 0.0);
        let nearest = (1..=30).filter(|&u| u != 3).min_by(|&a, &b| inst.dist(a, 3).total_cmp(&inst.dist(b, 3))).unwrap();
        let all: Vec<usize> = (1..=30).filter(|&u| u != 3).collect();
        assert!((dfd(1, 3, &all, &inst) - inst.prob(nearest) * inst.dist(nearest, 3)).abs() < 1e-15);
        let mut rev = all.clone();
        rev.reverse();
        assert_eq!(dfd(7, 3, &all, &inst), dfd(7, 3, &rev, &inst));
    }

    #[test]
    fn median_of_three() {
        assert_eq!(median(&mut [0.9, 0.2, 0.5]), 0.5);
        assert_eq!(median(&mut [0.4, 0.2]), 0.30000000000000004);
    }

    #[test]
    fn fully_dynamic_reset_starts_empty() {
        let inst = small_instance(1.0);
        let s = sample_scenario(&inst, &mut derived_rng(1, Stream::TestScenario, 0));
        let env = Env::reset(&inst, s.clone(), fast_cfg(), AssignmentKind::Omission, 1).unwrap();
        assert_eq!(env.t(), 1);
        assert_eq!(env.routing_state().routing(), &Routing::empty(2));
        let obs = env.observe().unwrap();
        assert_eq!(obs.len(), 2 * 2 + 3);
        assert_eq!(obs.0[0], 19.0);
        assert_eq!(&obs.0[1..3], &[20.0, 20.0]);
        assert_eq!(obs.0[3], inst.quota);
        assert_eq!(env.current_demand(), Some(s.demands[0]));
    }

    #[test]
    fn fully_offline_episode_is_done_after_reset() {
        let inst = small_instance(0.0).with_quota(1e6);
        let s = sample_scenario(&inst, &mut derived_rng(2, Stream::TestScenario, 0));
        let env = Env::reset(&inst, s, fast_cfg(), AssignmentKind::Omission, 2).unwrap();
        assert!(env.is_done());
        assert_eq!(env.total_reward(), 20);
        assert!(env.observe().is_none());
    }

    #[test]
    fn infeasible_prefix_fails_reset() {
        let inst = small_instance(0.5).with_quota(0.0);
        let s = sample_scenario(&inst, &mut derived_rng(3, Stream::TestScenario, 0));
        assert!(matches!(Env::reset(&inst, s, fast_cfg(), AssignmentKind::Omission, 3), Err(ResetError::Offline(_))));
    }

    #[test]
    fn reject_keeps_routing_and_step_after_end_errors() {
        let inst = small_instance(1.0);
        let s = sample_scenario(&inst, &mut derived_rng(4, Stream::TestScenario, 0));
        let mut env = Env::reset(&inst, s, fast_cfg(), AssignmentKind::Omission, 4).unwrap();
        let before = env.routing_state().clone();
        let r = env.step(Decision::Reject).unwrap();
        assert_eq!(r.reward, 0);
        assert_eq!(env.routing_state(), &before);
        while !env.is_done() {
            env.step(Decision::Accept).unwrap();
        }
        assert!(matches!(env.step(Decision::Accept), Err(Error::Usage(_))));
    }

    #[test]
    fn full_vehicle_invalidates_acceptance() {
        let mut inst = small_instance(1.0).with_quota(1e6);
        inst.vehicles[0].capacity = 1;
        let s = sample_scenario(&inst, &mut derived_rng(5, Stream::TestScenario, 0));
        let mut env = Env::reset(&inst, s, fast_cfg(), AssignmentKind::Vehicle, 5).unwrap();
        assert_eq!(env.step(Decision::AcceptToVehicle(0)).unwrap().reward, 1);
        let r = env.step(Decision::AcceptToVehicle(0)).unwrap();
        assert_eq!(r.reward, 0);
        assert!(!r.info.inserted);
        assert_eq!(env.assignment().decisions[1], Decision::Reject);
        assert!(matches!(env.step(Decision::Accept), Err(Error::Usage(_))));
    }

    #[test]
    fn rewards_add_up_and_routing_stays_feasible() {
        let inst = small_instance(0.5);
        for seed in 0..5 {
            let s = sample_scenario(&inst, &mut derived_rng(seed, Stream::TestScenario, 0));
            let mut env = match Env::reset(&inst, s.clone(), fast_cfg(), AssignmentKind::Omission, seed) {
                Ok(env) => env,
                Err(_) => continue,
            };
            let mut total = env.initial_reward();
            let mut t = env.t();
            while !env.is_done() {
                assert_eq!(env.current_demand(), Some(s.demands[t - 1]));
                total += env.step(Decision::Accept).unwrap().reward;
                check_feasible(env.routing_state().routing(), &inst, env.quantities()).unwrap();
                t += 1;
            }
            assert_eq!(total, accepted_count(env.assignment(), &s));
            assert_eq!(env.assignment().len(), s.len());
        }
    }

    #[test]
    fn zero_noise_matches_exact_horizon_and_hidden_drops_slot() {
        let inst = small_instance(1.0);
        let s = sample_scenario(&inst, &mut derived_rng(6, Stream::TestScenario, 0));
        let exact = Env::reset(&inst, s.clone(), fast_cfg(), AssignmentKind::Vehicle, 6).unwrap().observe().unwrap();
        let mut cfg = fast_cfg();
        cfg.obs.horizon_noise_std_frac = 0.0;
        assert_eq!(Env::reset(&inst, s.clone(), cfg, AssignmentKind::Vehicle, 6).unwrap().observe().unwrap(), exact);
        cfg.obs.horizon_hidden = true;
        let hidden = Env::reset(&inst, s.clone(), cfg, AssignmentKind::Vehicle, 6).unwrap().observe().unwrap();
        assert_eq!(hidden.as_slice(), &exact.as_slice()[1..]);
        cfg.obs.horizon_hidden = false;
        cfg.obs.horizon_noise_std_frac = 0.3;
        let env = Env::reset(&inst, s, cfg, AssignmentKind::Vehicle, 6).unwrap();
        let noisy = env.observe().unwrap();
        assert_eq!(noisy.0[0], (env.horizon_estimate() - 1.0).max(0.0));
        assert_ne!(env.horizon_estimate(), 20.0);
    }

    #[test]
    fn last_step_has_zero_remaining() {
        let inst = small_instance(1.0);
        let s = sample_scenario(&inst, &mut derived_rng(7, Stream::TestScenario, 0));
        let mut env = Env::reset(&inst, s, fast_cfg(), AssignmentKind::Omission, 7).unwrap();
        while env.t() < inst.horizon {
            env.step(Decision::Reject).unwrap();
        }
        assert_eq!(env.observe().unwrap().0[0], 0.0);
    }

    #[test]
    fn prefix_as_dynamic_forces_acceptance() {
        let inst = small_instance(0.5).with_quota(1e6);
        let s = sample_scenario(&inst, &mut derived_rng(8, Stream::TestScenario, 0));
        let cfg = EnvConfig { prefix_as_dynamic: true, ..fast_cfg() };
        let mut env = Env::reset(&inst, s, cfg, AssignmentKind::Vehicle, 8).unwrap();
        assert_eq!(env.t(), 1);
        assert!(env.must_accept());
        assert!(env.step(Decision::Reject).is_err());
        for _ in 0..10 {
            assert_eq!(env.step(Decision::AcceptToVehicle(1)).unwrap().reward, 1);
        }
        assert!(!env.must_accept());
    }
}
