//! JSON documents for instances, scenario sets, and routings.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{routing_emission, DistanceMatrix, Instance, QuantityMode, Routing, Scenario, Vehicle};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DestinationRecord {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    /// Request probability or raw request frequency; normalized on load.
    pub prob: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct VehicleRecord {
    pub id: usize,
    pub ef: f64,
    pub capacity: u32,
}

/// On-disk instance document.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    #[serde(default = "origin")]
    pub hub: Point,
    pub destinations: Vec<DestinationRecord>,
    pub vehicles: Vec<VehicleRecord>,
    pub quota: f64,
    pub horizon: usize,
    pub dod: f64,
    #[serde(default)]
    pub quantity_mode: QuantityMode,
    /// Explicit (K+1)x(K+1) matrix, hub first. Derived from coordinates
    /// (Euclidean) when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distances: Option<Vec<Vec<f64>>>,
}

fn origin() -> Point {
    Point { x: 0.0, y: 0.0 }
}

impl InstanceFile {
    pub fn from_instance(instance: &Instance) -> Self {
        let coords = instance.coords.clone();
        let point = |i: usize| coords.as_ref().map_or((0.0, 0.0), |c| c[i]);
        let (hx, hy) = point(0);
        let explicit = coords.is_none().then(|| {
            let n = instance.distances().size();
            (0..n).map(|i| instance.distances().row(i).to_vec()).collect()
        });
        Self {
            hub: Point { x: hx, y: hy },
            destinations: (1..=instance.num_destinations())
                .map(|d| {
                    let (x, y) = point(d);
                    DestinationRecord { id: d, x, y, prob: instance.prob(d) }
                })
                .collect(),
            vehicles: instance
                .vehicles
                .iter()
                .map(|v| VehicleRecord { id: v.id, ef: v.emission_factor, capacity: v.capacity })
                .collect(),
            quota: instance.quota,
            horizon: instance.horizon,
            dod: instance.dod,
            quantity_mode: instance.quantity_mode,
            distances: explicit,
        }
    }

    /// Validate field by field and build the instance. Probabilities are
    /// normalized to sum to one.
    pub fn into_instance(self) -> Result<Instance> {
        let k = self.destinations.len();
        if k == 0 {
            return Err(Error::load("destinations", "at least one destination is required"));
        }
        let mut ordered = self.destinations;
        ordered.sort_by_key(|d| d.id);
        for (i, d) in ordered.iter().enumerate() {
            if d.id != i + 1 {
                return Err(Error::load(
                    format!("destinations[{i}].id"),
                    format!("destination ids must be exactly 1..={k}, found {}", d.id),
                ));
            }
            if !(d.prob > 0.0) || !d.prob.is_finite() {
                return Err(Error::load(format!("destinations[id={}].prob", d.id), format!("frequency {} must be positive", d.prob)));
            }
            if !d.x.is_finite() || !d.y.is_finite() {
                return Err(Error::load(format!("destinations[id={}]", d.id), "coordinates must be finite"));
            }
        }
        let total: f64 = ordered.iter().map(|d| d.prob).sum();
        let probs: Vec<f64> = ordered.iter().map(|d| d.prob / total).collect();

        let mut coords = vec![(self.hub.x, self.hub.y)];
        coords.extend(ordered.iter().map(|d| (d.x, d.y)));
        let distances = match &self.distances {
            Some(rows) => DistanceMatrix::from_rows(rows).map_err(|e| Error::load("distances", e.to_string()))?,
            None => DistanceMatrix::euclidean(&coords),
        };
        if self.horizon > k {
            return Err(Error::load("horizon", format!("horizon {} exceeds the {k} destinations", self.horizon)));
        }
        for (i, v) in self.vehicles.iter().enumerate() {
            if !(v.ef > 0.0) {
                return Err(Error::load(format!("vehicles[{i}].ef"), "emission factor must be positive"));
            }
            if v.capacity == 0 {
                return Err(Error::load(format!("vehicles[{i}].capacity"), "capacity must be at least 1"));
            }
        }
        let vehicles = self
            .vehicles
            .iter()
            .map(|v| Vehicle { id: v.id, emission_factor: v.ef, capacity: v.capacity })
            .collect();
        let instance = Instance::new(distances, probs, vehicles, self.quota, self.horizon, self.dod)
            .map_err(|e| Error::load("instance", e.to_string()))?
            .with_quantity_mode(self.quantity_mode);
        Ok(if self.distances.is_none() { instance.with_coords(coords) } else { instance })
    }
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    let file: InstanceFile = serde_json::from_str(text)
        .map_err(|e| Error::load(format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
    file.into_instance()
}

pub fn read_instance(path: &Path) -> Result<Instance> {
    let text = std::fs::read_to_string(path)?;
    parse_instance(&text).map_err(|e| match e {
        Error::Load { location, message } => Error::load(format!("{}: {location}", path.display()), message),
        other => other,
    })
}

pub fn write_instance(path: &Path, instance: &Instance) -> Result<()> {
    let text = serde_json::to_string_pretty(&InstanceFile::from_instance(instance))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

/// Scenario set with the seed it was drawn from.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ScenarioFile {
    pub seed: Option<u64>,
    pub scenarios: Vec<Scenario>,
}

impl ScenarioFile {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| Error::load(format!("{}: line {} column {}", path.display(), e.line(), e.column()), e.to_string()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RouteRecord {
    pub vehicle: usize,
    pub stops: Vec<usize>,
}

/// Per-vehicle stop lists plus total emission.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RoutingRecord {
    pub routes: Vec<RouteRecord>,
    pub emission: f64,
}

impl RoutingRecord {
    pub fn new(routing: &Routing, instance: &Instance) -> Self {
        Self {
            routes: routing
                .routes
                .iter()
                .map(|r| RouteRecord { vehicle: r.vehicle, stops: r.stops.clone() })
                .collect(),
            emission: routing_emission(routing, instance),
        }
    }
}
