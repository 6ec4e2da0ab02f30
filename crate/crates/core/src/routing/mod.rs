//! Routing layer: builds and incrementally maintains low-emission routings
//! under either an omission assignment or a vehicle assignment.

mod anneal;
mod construct;
mod insert;

pub use anneal::{anneal, anneal_traced, AnnealTrace};
pub use construct::{best_position, cheapest_insertion, construct_initial, Insertion};
pub use insert::{insert_omission, insert_vehicle, route_offline, InsertOutcome, OfflineFailure, Rejection};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{routing_emission, Instance, Quantities, Routing};

/// Neighborhood operator mix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpProbs {
    pub insertion: f64,
    pub swap: f64,
    pub two_opt: f64,
}

impl Default for OpProbs {
    fn default() -> Self {
        Self { insertion: 0.30, swap: 0.60, two_opt: 0.10 }
    }
}

/// Simulated annealing schedule. The temperature is multiplied by
/// `cooling_rate` every iteration until it reaches `tau_limit`, then held
/// there until `max_iterations`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaConfig {
    pub tau_init: f64,
    pub tau_limit: f64,
    pub cooling_rate: f64,
    pub max_iterations: usize,
    pub op_probs: OpProbs,
}

impl Default for SaConfig {
    fn default() -> Self {
        Self {
            tau_init: 1000.0,
            tau_limit: 1.0,
            cooling_rate: 0.995,
            max_iterations: 50_000,
            op_probs: OpProbs::default(),
        }
    }
}

impl SaConfig {
    pub fn with_iterations(max_iterations: usize) -> Self {
        Self { max_iterations, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.op_probs;
        if [p.insertion, p.swap, p.two_opt].iter().any(|&x| x < 0.0) || (p.insertion + p.swap + p.two_opt - 1.0).abs() > 1e-9 {
            return Err(Error::Config("operator probabilities must be non-negative and sum to 1".into()));
        }
        if !(self.tau_init > self.tau_limit && self.tau_limit > 0.0) {
            return Err(Error::Config("need tau_init > tau_limit > 0".into()));
        }
        if !(self.cooling_rate > 0.0 && self.cooling_rate < 1.0) {
            return Err(Error::Config("cooling rate must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Which routes the annealer may touch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    /// Cross-route insertion and swap, 2-opt within a route.
    Global,
    /// Every operator restricted to the route of this fleet index.
    SingleRoute(usize),
}

/// A routing with its emission and per-vehicle loads cached.
#[derive(Debug, Clone, PartialEq)]
pub struct RoutingState {
    routing: Routing,
    emission: f64,
    loads: Vec<u32>,
}

impl RoutingState {
    pub fn new(routing: Routing, instance: &Instance, quantities: &Quantities) -> Self {
        let emission = routing_emission(&routing, instance);
        let loads = routing.routes.iter().map(|r| quantities.load(r)).collect();
        Self { routing, emission, loads }
    }

    pub fn empty(instance: &Instance) -> Self {
        Self {
            routing: Routing::empty(instance.num_vehicles()),
            emission: 0.0,
            loads: vec![0; instance.num_vehicles()],
        }
    }

    pub fn routing(&self) -> &Routing {
        &self.routing
    }

    pub fn emission(&self) -> f64 {
        self.emission
    }

    pub fn loads(&self) -> &[u32] {
        &self.loads
    }

    pub fn into_routing(self) -> Routing {
        self.routing
    }

    /// True when the caches equal freshly recomputed values.
    pub fn is_consistent(&self, instance: &Instance, quantities: &Quantities) -> bool {
        let fresh = Self::new(self.routing.clone(), instance, quantities);
        (fresh.emission - self.emission).abs() <= 1e-9 * self.emission.max(1.0) && fresh.loads == self.loads
    }
}
