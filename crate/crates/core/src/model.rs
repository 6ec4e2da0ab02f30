//! Domain vocabulary: instances, routes, routings, scenarios, assignments,
//! and the emission and feasibility arithmetic shared by every layer.
//!
//! Destinations are numbered `1..=K`; the hub is `0`. Routes only store their
//! interior stops, the hub endpoints are implicit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hub vertex id.
pub const HUB: usize = 0;

/// Slack used when comparing emissions against the quota, so that summation
/// order never flips a feasibility verdict.
pub const QUOTA_EPS: f64 = 1e-9;

/// Symmetric matrix over the hub and the `K` destinations.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Config(format!("distance row {i} has {} entries, expected {n}", row.len())));
            }
            data.extend_from_slice(row);
        }
        let m = Self { n, data };
        m.validate()?;
        Ok(m)
    }

    /// Euclidean distances between points; index 0 is the hub.
    pub fn euclidean(points: &[(f64, f64)]) -> Self {
        let n = points.len();
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let (dx, dy) = (points[i].0 - points[j].0, points[i].1 - points[j].1);
                let d = (dx * dx + dy * dy).sqrt();
                data[i * n + j] = d;
                data[j * n + i] = d;
            }
        }
        Self { n, data }
    }

    fn validate(&self) -> Result<()> {
        for i in 0..self.n {
            if self.get(i, i) != 0.0 {
                return Err(Error::Config(format!("distance diagonal entry {i} is not zero")));
            }
            for j in 0..self.n {
                let d = self.get(i, j);
                if !d.is_finite() || d < 0.0 {
                    return Err(Error::Config(format!("distance ({i},{j}) = {d} is not a non-negative real")));
                }
                if d != self.get(j, i) {
                    return Err(Error::Config(format!("distance matrix is not symmetric at ({i},{j})")));
                }
            }
        }
        Ok(())
    }

    #[inline(always)]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Number of vertices, hub included.
    pub fn size(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vehicle {
    pub id: usize,
    /// Emission per unit of distance.
    pub emission_factor: f64,
    pub capacity: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantityMode {
    #[default]
    Unit,
    Heterogeneous,
}

/// Static problem description.
#[derive(Debug, Clone)]
pub struct Instance {
    distances: DistanceMatrix,
    probs: Vec<f64>,
    /// Hub first, then destinations `1..=K`, when the instance is geometric.
    pub coords: Option<Vec<(f64, f64)>>,
    pub vehicles: Vec<Vehicle>,
    pub quota: f64,
    pub horizon: usize,
    pub dod: f64,
    pub quantity_mode: QuantityMode,
}

impl Instance {
    /// Build and validate an instance. `probs[i]` is the request
    /// probability of destination `i + 1`.
    pub fn new(
        distances: DistanceMatrix,
        probs: Vec<f64>,
        vehicles: Vec<Vehicle>,
        quota: f64,
        horizon: usize,
        dod: f64,
    ) -> Result<Self> {
        let k = probs.len();
        if k == 0 {
            return Err(Error::Config("instance has no destinations".into()));
        }
        if distances.size() != k + 1 {
            return Err(Error::Config(format!(
                "distance matrix has size {}, expected {} (hub + {k} destinations)",
                distances.size(),
                k + 1
            )));
        }
        if let Some(i) = probs.iter().position(|&p| !(p > 0.0) || !p.is_finite()) {
            return Err(Error::Config(format!("request probability of destination {} is not positive", i + 1)));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("request probabilities sum to {total}, expected 1")));
        }
        if vehicles.is_empty() {
            return Err(Error::Config("fleet is empty".into()));
        }
        for v in &vehicles {
            if !(v.emission_factor > 0.0) || !v.emission_factor.is_finite() {
                return Err(Error::Config(format!("vehicle {} has non-positive emission factor", v.id)));
            }
            if v.capacity < 1 {
                return Err(Error::Config(format!("vehicle {} has zero capacity", v.id)));
            }
        }
        if !(quota >= 0.0) || !quota.is_finite() {
            return Err(Error::Config(format!("quota {quota} must be a non-negative real")));
        }
        if horizon == 0 || horizon > k {
            return Err(Error::Config(format!("horizon {horizon} must be in 1..={k}")));
        }
        if !(0.0..=1.0).contains(&dod) {
            return Err(Error::Config(format!("degree of dynamism {dod} outside [0, 1]")));
        }
        Ok(Self {
            distances,
            probs,
            coords: None,
            vehicles,
            quota,
            horizon,
            dod,
            quantity_mode: QuantityMode::Unit,
        })
    }

    pub fn with_coords(mut self, coords: Vec<(f64, f64)>) -> Self {
        self.coords = Some(coords);
        self
    }

    pub fn with_quantity_mode(mut self, mode: QuantityMode) -> Self {
        self.quantity_mode = mode;
        self
    }

    pub fn num_destinations(&self) -> usize {
        self.probs.len()
    }

    pub fn num_vehicles(&self) -> usize {
        self.vehicles.len()
    }

    pub fn distances(&self) -> &DistanceMatrix {
        &self.distances
    }

    #[inline(always)]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.distances.get(i, j)
    }

    /// Request probability of destination `d` (1-based).
    pub fn prob(&self, d: usize) -> f64 {
        self.probs[d - 1]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn total_capacity(&self) -> u64 {
        self.vehicles.iter().map(|v| v.capacity as u64).sum()
    }

    /// Number of leading demands known in advance: `ceil((1 - dod) * H)`.
    pub fn known_prefix_len(&self) -> usize {
        known_prefix_len(self.dod, self.horizon)
    }

    /// Copy of the instance with another quota, horizon or dod.
    pub fn with_quota(&self, quota: f64) -> Self {
        Self { quota, ..self.clone() }
    }

    pub fn with_dod(&self, dod: f64) -> Self {
        Self { dod, ..self.clone() }
    }

    /// Fleet indices sorted by increasing emission factor (stable).
    pub fn vehicles_by_emission(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.vehicles.len()).collect();
        order.sort_by(|&a, &b| self.vehicles[a].emission_factor.total_cmp(&self.vehicles[b].emission_factor));
        order
    }
}

pub fn known_prefix_len(dod: f64, horizon: usize) -> usize {
    // Guard against 0.3 * 10 = 3.0000000000000004 style rounding.
    let raw = (1.0 - dod) * horizon as f64;
    let rounded = raw.round();
    let len = if (raw - rounded).abs() < 1e-9 { rounded } else { raw.ceil() };
    (len.max(0.0) as usize).min(horizon)
}

/// Interior stops of one vehicle's tour.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Route {
    pub vehicle: usize,
    pub stops: Vec<usize>,
}

impl Route {
    pub fn new(vehicle: usize, stops: Vec<usize>) -> Self {
        Self { vehicle, stops }
    }

    pub fn is_empty(&self) -> bool {
        self.stops.is_empty()
    }

    pub fn contains(&self, d: usize) -> bool {
        self.stops.contains(&d)
    }
}

/// One route per vehicle, in fleet order.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Routing {
    pub routes: Vec<Route>,
}

impl Routing {
    pub fn empty(num_vehicles: usize) -> Self {
        Self {
            routes: (0..num_vehicles).map(|v| Route::new(v, Vec::new())).collect(),
        }
    }

    pub fn num_stops(&self) -> usize {
        self.routes.iter().map(|r| r.stops.len()).sum()
    }

    pub fn destinations(&self) -> impl Iterator<Item = usize> + '_ {
        self.routes.iter().flat_map(|r| r.stops.iter().copied())
    }

    /// Sorted destination set.
    pub fn destination_set(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self.destinations().collect();
        all.sort_unstable();
        all
    }

    pub fn contains(&self, d: usize) -> bool {
        self.routes.iter().any(|r| r.contains(d))
    }

    pub fn vehicle_of(&self, d: usize) -> Option<usize> {
        self.routes.iter().position(|r| r.contains(d))
    }
}

/// Quantity demanded by each destination, indexed by destination id (index 0
/// is the hub and always 0).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Quantities(Vec<u32>);

impl Quantities {
    pub fn unit(num_destinations: usize) -> Self {
        let mut q = vec![1; num_destinations + 1];
        q[HUB] = 0;
        Self(q)
    }

    /// Quantities for the destinations of a scenario; destinations outside
    /// the scenario keep quantity 1.
    pub fn for_scenario(num_destinations: usize, scenario: &Scenario) -> Self {
        let mut q = Self::unit(num_destinations);
        if let Some(quantities) = &scenario.quantities {
            for (&d, &amount) in scenario.demands.iter().zip(quantities) {
                q.0[d] = amount;
            }
        }
        q
    }

    #[inline(always)]
    pub fn of(&self, d: usize) -> u32 {
        self.0[d]
    }

    pub fn load(&self, route: &Route) -> u32 {
        route.stops.iter().map(|&d| self.0[d]).sum()
    }
}

/// Ordered requested destinations, optionally with quantities.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub demands: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quantities: Option<Vec<u32>>,
}

impl Scenario {
    pub fn new(demands: Vec<usize>) -> Self {
        Self { demands, quantities: None }
    }

    pub fn with_quantities(demands: Vec<usize>, quantities: Vec<u32>) -> Self {
        Self { demands, quantities: Some(quantities) }
    }

    pub fn len(&self) -> usize {
        self.demands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.demands.is_empty()
    }

    /// Quantity of the demand at 0-based position `i`.
    pub fn quantity_at(&self, i: usize) -> u32 {
        self.quantities.as_ref().map_or(1, |q| q[i])
    }

    /// Check distinctness, id range, and quantity shape against an instance.
    pub fn validate(&self, instance: &Instance) -> Result<()> {
        if self.demands.len() != instance.horizon {
            return Err(Error::Usage(format!(
                "scenario has {} demands, horizon is {}",
                self.demands.len(),
                instance.horizon
            )));
        }
        let k = instance.num_destinations();
        let mut seen = vec![false; k + 1];
        for &d in &self.demands {
            if d == HUB || d > k {
                return Err(Error::Usage(format!("scenario destination {d} outside 1..={k}")));
            }
            if std::mem::replace(&mut seen[d], true) {
                return Err(Error::Usage(format!("destination {d} appears twice in scenario")));
            }
        }
        if let Some(q) = &self.quantities {
            if q.len() != self.demands.len() || q.contains(&0) {
                return Err(Error::Usage("scenario quantities must be positive, one per demand".into()));
            }
        }
        Ok(())
    }
}

/// Decision taken on one demand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Decision {
    Reject,
    Accept,
    /// Accept and bind to the vehicle at this fleet index.
    AcceptToVehicle(usize),
}

impl Decision {
    pub fn is_accept(self) -> bool {
        !matches!(self, Decision::Reject)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssignmentKind {
    /// Accept/reject only; the routing layer chooses vehicles.
    Omission,
    /// Every accepted demand is bound to a vehicle.
    Vehicle,
}

impl AssignmentKind {
    pub fn admits(self, decision: Decision) -> bool {
        match (self, decision) {
            (_, Decision::Reject) => true,
            (AssignmentKind::Omission, Decision::Accept) => true,
            (AssignmentKind::Vehicle, Decision::AcceptToVehicle(_)) => true,
            _ => false,
        }
    }
}

/// Per-timestep decision record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub kind: AssignmentKind,
    pub decisions: Vec<Decision>,
}

impl Assignment {
    pub fn new(kind: AssignmentKind) -> Self {
        Self { kind, decisions: Vec::new() }
    }

    pub fn from_decisions(kind: AssignmentKind, decisions: Vec<Decision>) -> Result<Self> {
        if let Some(bad) = decisions.iter().find(|&&d| !kind.admits(d)) {
            return Err(Error::Usage(format!("{bad:?} is not allowed in a {kind:?} assignment")));
        }
        Ok(Self { kind, decisions })
    }

    pub fn push(&mut self, decision: Decision) -> Result<()> {
        if !self.kind.admits(decision) {
            return Err(Error::Usage(format!("{decision:?} is not allowed in a {:?} assignment", self.kind)));
        }
        self.decisions.push(decision);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.decisions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.decisions.is_empty()
    }

    pub fn rejections(&self) -> usize {
        self.decisions.iter().filter(|d| !d.is_accept()).count()
    }
}

pub fn route_length(route: &Route, distances: &DistanceMatrix) -> f64 {
    stops_length(&route.stops, distances)
}

pub(crate) fn stops_length(stops: &[usize], distances: &DistanceMatrix) -> f64 {
    let mut prev = HUB;
    let mut total = 0.0;
    for &d in stops {
        total += distances.get(prev, d);
        prev = d;
    }
    total + distances.get(prev, HUB)
}

pub fn route_emission(vehicle: &Vehicle, route: &Route, distances: &DistanceMatrix) -> f64 {
    vehicle.emission_factor * route_length(route, distances)
}

pub fn routing_emission(routing: &Routing, instance: &Instance) -> f64 {
    routing
        .routes
        .iter()
        .map(|r| route_emission(&instance.vehicles[r.vehicle], r, instance.distances()))
        .sum()
}

/// Number of accepted demands, or total accepted quantity when the scenario
/// carries quantities.
pub fn accepted_count(assignment: &Assignment, scenario: &Scenario) -> u64 {
    assignment
        .decisions
        .iter()
        .enumerate()
        .filter(|(_, d)| d.is_accept())
        .map(|(i, _)| scenario.quantity_at(i) as u64)
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Capacity { vehicle: usize, load: u32, capacity: u32 },
    Quota { emission: f64, quota: f64 },
    Duplicate { destination: usize },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::Capacity { vehicle, load, capacity } => {
                write!(f, "vehicle {vehicle} carries {load} > capacity {capacity}")
            }
            Violation::Quota { emission, quota } => write!(f, "emission {emission} exceeds quota {quota}"),
            Violation::Duplicate { destination } => write!(f, "destination {destination} is served twice"),
        }
    }
}

/// Checks capacity, then quota, then destination uniqueness, and reports the
/// first failure.
pub fn check_feasible(routing: &Routing, instance: &Instance, quantities: &Quantities) -> Result<(), Violation> {
    for route in &routing.routes {
        let capacity = instance.vehicles[route.vehicle].capacity;
        let load = quantities.load(route);
        if load > capacity {
            return Err(Violation::Capacity { vehicle: route.vehicle, load, capacity });
        }
    }
    let emission = routing_emission(routing, instance);
    if emission > instance.quota + QUOTA_EPS {
        return Err(Violation::Quota { emission, quota: instance.quota });
    }
    let mut seen = vec![false; instance.num_destinations() + 1];
    for d in routing.destinations() {
        if std::mem::replace(&mut seen[d], true) {
            return Err(Violation::Duplicate { destination: d });
        }
    }
    Ok(())
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// Hub at the origin, destination 1 at (3,0), destination 2 at (3,4).
    pub fn triangle() -> Instance {
        let pts = vec![(0.0, 0.0), (3.0, 0.0), (3.0, 4.0)];
        Instance::new(
            DistanceMatrix::euclidean(&pts),
            vec![0.5, 0.5],
            vec![
                Vehicle { id: 0, emission_factor: 0.3, capacity: 20 },
                Vehicle { id: 1, emission_factor: 0.15, capacity: 20 },
            ],
            5.0,
            2,
            1.0,
        )
        .unwrap()
        .with_coords(pts)
    }
}
