use super::{anneal, cheapest_insertion, construct_initial, RoutingState, SaConfig, Scope};
use crate::model::{routing_emission, Instance, Quantities, Routing, QUOTA_EPS};
use crate::rng::Rng;

/// Why a routing could not be produced for the known prefix.
#[derive(Debug, Clone, PartialEq)]
pub enum OfflineFailure {
    /// The prefix demands more than the fleet can carry.
    Capacity,
    /// The best routing found still exceeds the quota.
    Quota { emission: f64 },
}

impl std::fmt::Display for OfflineFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OfflineFailure::Capacity => write!(f, "known demands exceed fleet capacity"),
            OfflineFailure::Quota { emission } => write!(f, "best offline routing emits {emission:.3} above quota"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rejection {
    NoCapacity,
    Quota { emission: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum InsertOutcome {
    Inserted(RoutingState),
    Rejected(Rejection),
}

/// Offline phase: greedy construction, then global annealing. Fails when the
/// result does not meet the quota.
pub fn route_offline(
    instance: &Instance,
    accepted: &[usize],
    quantities: &Quantities,
    cfg: &SaConfig,
    rng: &mut Rng,
) -> Result<Routing, OfflineFailure> {
    let initial = construct_initial(instance, accepted, quantities).ok_or(OfflineFailure::Capacity)?;
    let routing = anneal(&initial, instance, quantities, Scope::Global, cfg, rng);
    let emission = routing_emission(&routing, instance);
    if emission <= instance.quota + QUOTA_EPS {
        Ok(routing)
    } else {
        Err(OfflineFailure::Quota { emission })
    }
}

/// Omission-assignment update: cheapest feasible-capacity insertion of `d`
/// anywhere, then global annealing; accepted iff the quota holds afterwards.
pub fn insert_omission(
    prev: &RoutingState,
    d: usize,
    instance: &Instance,
    quantities: &Quantities,
    cfg: &SaConfig,
    rng: &mut Rng,
) -> InsertOutcome {
    insert_with(prev, d, None, instance, quantities, cfg, rng)
}

/// Vehicle-assignment update: best position of `d` in the route of `vehicle`
/// only, then annealing restricted to that route.
pub fn insert_vehicle(
    prev: &RoutingState,
    d: usize,
    vehicle: usize,
    instance: &Instance,
    quantities: &Quantities,
    cfg: &SaConfig,
    rng: &mut Rng,
) -> InsertOutcome {
    insert_with(prev, d, Some(vehicle), instance, quantities, cfg, rng)
}

fn insert_with(
    prev: &RoutingState,
    d: usize,
    vehicle: Option<usize>,
    instance: &Instance,
    quantities: &Quantities,
    cfg: &SaConfig,
    rng: &mut Rng,
) -> InsertOutcome {
    debug_assert!(!prev.routing().contains(d), "destination {d} already routed");
    let Some(ins) = cheapest_insertion(prev.routing(), prev.loads(), d, instance, quantities, vehicle) else {
        return InsertOutcome::Rejected(Rejection::NoCapacity);
    };
    let mut routing = prev.routing().clone();
    routing.routes[ins.vehicle].stops.insert(ins.position, d);
    let scope = match vehicle {
        Some(v) => Scope::SingleRoute(v),
        None => Scope::Global,
    };
    let improved = anneal(&routing, instance, quantities, scope, cfg, rng);
    let state = RoutingState::new(improved, instance, quantities);
    if state.emission() <= instance.quota + QUOTA_EPS {
        InsertOutcome::Inserted(state)
    } else {
        InsertOutcome::Rejected(Rejection::Quota { emission: state.emission() })
    }
}
