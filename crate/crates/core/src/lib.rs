//! Dynamic and stochastic vehicle routing with an emission quota and random
//! requests.
//!
//! The crate is organised around the two-layer decomposition of the problem:
//! an assignment layer decides which incoming demands to accept (and possibly
//! on which vehicle), a routing layer maintains a low-emission routing that
//! respects the decisions, the fleet capacities, and the emission quota.

pub mod error;
pub mod agents;
pub mod env;
pub mod generate;
pub mod harness;
pub mod io;
pub mod model;
pub mod nn;
pub mod rng;
pub mod routing;

pub use error::{Error, Result};
pub use model::{
    accepted_count, check_feasible, route_emission, route_length, routing_emission, Assignment, AssignmentKind,
    Decision, DistanceMatrix, Instance, QuantityMode, Quantities, Route, Routing, Scenario, Vehicle, Violation, HUB,
};
pub use rng::Rng;
