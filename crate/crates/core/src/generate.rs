//! Instance generators, scenario sampling, and reference presets.

use std::path::Path;

use rand::Rng as _;
use rand_distr::{Distribution, Exp1, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;
use crate::model::{DistanceMatrix, Instance, QuantityMode, Scenario, Vehicle};
use crate::rng::{rng_from_seed, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    Uniform,
    Clustered,
    RealisticFile,
}

/// `count` identical vehicles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FleetSpec {
    pub emission_factor: f64,
    pub capacity: u32,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub kind: GeneratorKind,
    pub num_destinations: usize,
    #[serde(default = "default_clusters")]
    pub cluster_count: usize,
    #[serde(default = "default_cluster_std")]
    pub cluster_std: f64,
    #[serde(default = "default_extent")]
    pub plane_extent: f64,
    pub seed: u64,
    pub fleet: Vec<FleetSpec>,
    pub quota: f64,
    pub horizon: usize,
    #[serde(default = "default_dod")]
    pub dod: f64,
    #[serde(default)]
    pub quantity_mode: QuantityMode,
    /// Source document for `realistic_file`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

fn default_clusters() -> usize {
    4
}
fn default_cluster_std() -> f64 {
    5.0
}
fn default_extent() -> f64 {
    100.0
}
fn default_dod() -> f64 {
    1.0
}

impl GeneratorConfig {
    fn validate(&self) -> Result<()> {
        if self.num_destinations == 0 {
            return Err(Error::Config("num_destinations must be positive".into()));
        }
        if self.horizon > self.num_destinations {
            return Err(Error::Config(format!(
                "horizon {} exceeds the {} destinations (scenarios sample without replacement)",
                self.horizon, self.num_destinations
            )));
        }
        if self.cluster_count == 0 {
            return Err(Error::Config("cluster_count must be at least 1".into()));
        }
        if !(self.cluster_std >= 0.0) || !(self.plane_extent > 0.0) {
            return Err(Error::Config("cluster_std must be >= 0 and plane_extent > 0".into()));
        }
        if self.fleet.iter().all(|f| f.count == 0) {
            return Err(Error::Config("fleet is empty".into()));
        }
        Ok(())
    }

    fn vehicles(&self) -> Vec<Vehicle> {
        self.fleet
            .iter()
            .flat_map(|f| std::iter::repeat_n((f.emission_factor, f.capacity), f.count))
            .enumerate()
            .map(|(id, (emission_factor, capacity))| Vehicle { id, emission_factor, capacity })
            .collect()
    }

    fn hub(&self) -> (f64, f64) {
        (self.plane_extent / 2.0, self.plane_extent / 2.0)
    }

    fn assemble(&self, points: Vec<(f64, f64)>) -> Result<Instance> {
        let mut coords = vec![self.hub()];
        coords.extend(points);
        let k = self.num_destinations;
        Ok(Instance::new(
            DistanceMatrix::euclidean(&coords),
            vec![1.0 / k as f64; k],
            self.vehicles(),
            self.quota,
            self.horizon,
            self.dod,
        )?
        .with_coords(coords)
        .with_quantity_mode(self.quantity_mode))
    }
}

/// Build the instance described by `cfg`.
pub fn generate(cfg: &GeneratorConfig) -> Result<Instance> {
    match cfg.kind {
        GeneratorKind::Uniform => generate_uniform(cfg),
        GeneratorKind::Clustered => generate_clustered(cfg),
        GeneratorKind::RealisticFile => {
            let path = cfg
                .path
                .as_deref()
                .ok_or_else(|| Error::Config("realistic_file generator needs a path".into()))?;
            load_realistic(Path::new(path))
        }
    }
}

/// Destinations i.i.d. uniform on the square, equal request probabilities.
pub fn generate_uniform(cfg: &GeneratorConfig) -> Result<Instance> {
    cfg.validate()?;
    let mut rng = rng_from_seed(cfg.seed);
    let points = (0..cfg.num_destinations)
        .map(|_| (rng.random::<f64>() * cfg.plane_extent, rng.random::<f64>() * cfg.plane_extent))
        .collect();
    cfg.assemble(points)
}

/// Cluster centers uniform on the square; destinations are dealt round-robin
/// to centers and drawn from an isotropic normal around their center.
pub fn generate_clustered(cfg: &GeneratorConfig) -> Result<Instance> {
    cfg.validate()?;
    let mut rng = rng_from_seed(cfg.seed);
    let centers = cluster_centers(cfg, &mut rng);
    let noise = Normal::new(0.0, cfg.cluster_std).map_err(|e| Error::Config(e.to_string()))?;
    let points = (0..cfg.num_destinations)
        .map(|i| {
            let (cx, cy) = centers[i % centers.len()];
            (cx + noise.sample(&mut rng), cy + noise.sample(&mut rng))
        })
        .collect();
    cfg.assemble(points)
}

fn cluster_centers(cfg: &GeneratorConfig, rng: &mut Rng) -> Vec<(f64, f64)> {
    (0..cfg.cluster_count)
        .map(|_| (rng.random::<f64>() * cfg.plane_extent, rng.random::<f64>() * cfg.plane_extent))
        .collect()
}

/// Centers the clustered generator uses for `cfg` (same rng prefix).
pub fn clustered_centers(cfg: &GeneratorConfig) -> Vec<(f64, f64)> {
    cluster_centers(cfg, &mut rng_from_seed(cfg.seed))
}

/// Ingest an instance document whose `prob` fields may be raw frequencies.
pub fn load_realistic(path: &Path) -> Result<Instance> {
    io::read_instance(path)
}

/// Draw `H` distinct destinations, each draw proportional to the request
/// probabilities of the destinations not drawn yet.
pub fn sample_scenario(instance: &Instance, rng: &mut Rng) -> Scenario {
    let k = instance.num_destinations();
    let mut weights: Vec<f64> = instance.probs().to_vec();
    let mut remaining: f64 = weights.iter().sum();
    let mut demands = Vec::with_capacity(instance.horizon);
    for _ in 0..instance.horizon {
        let d = weighted_pick(&weights, remaining, rng).unwrap_or_else(|| {
            // Rounding left `remaining` above the true mass; fall back on the last live entry.
            (0..k).rev().find(|&i| weights[i] > 0.0).expect("horizon <= K")
        });
        remaining -= weights[d];
        weights[d] = 0.0;
        demands.push(d + 1);
    }
    Scenario::new(demands)
}

/// Index drawn proportionally to `weights` (zero entries never drawn).
pub(crate) fn weighted_pick(weights: &[f64], total: f64, rng: &mut Rng) -> Option<usize> {
    let mut u = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        if u < w {
            return Some(i);
        }
        u -= w;
    }
    None
}

/// Scenario plus quantities when the instance is in heterogeneous mode.
pub fn sample_full_scenario(instance: &Instance, rng: &mut Rng) -> Result<Scenario> {
    let scenario = sample_scenario(instance, rng);
    match instance.quantity_mode {
        QuantityMode::Unit => Ok(scenario),
        QuantityMode::Heterogeneous => {
            let q = sample_quantities(instance, rng)?;
            Ok(Scenario::with_quantities(scenario.demands, q))
        }
    }
}

/// `q_i = 1 + floor(scale * X_i)` with `X ~ Dirichlet(1_H)` and
/// `scale = (C - 1) * M - H / 2`, redrawn until the total fits in the fleet.
pub fn sample_quantities(instance: &Instance, rng: &mut Rng) -> Result<Vec<u32>> {
    let capacity = instance.vehicles[0].capacity;
    if instance.vehicles.iter().any(|v| v.capacity != capacity) {
        return Err(Error::Config("heterogeneous quantities need a uniform fleet capacity".into()));
    }
    let m = instance.num_vehicles();
    let h = instance.horizon;
    let scale = quantity_scale(capacity, m, h);
    if !(scale > 0.0) {
        return Err(Error::Config(format!("quantity scale (C-1)*M - H/2 = {scale} is not positive")));
    }
    let fleet_capacity = capacity as u64 * m as u64;
    for _ in 0..100_000 {
        let draws: Vec<f64> = (0..h).map(|_| Exp1.sample(rng)).collect();
        let total: f64 = draws.iter().sum();
        let q: Vec<u32> = draws.iter().map(|x| 1 + (scale * x / total).floor() as u32).collect();
        if q.iter().map(|&x| x as u64).sum::<u64>() <= fleet_capacity {
            return Ok(q);
        }
    }
    Err(Error::Config("could not draw quantities fitting the fleet capacity".into()))
}

pub fn quantity_scale(capacity: u32, num_vehicles: usize, horizon: usize) -> f64 {
    (capacity as f64 - 1.0) * num_vehicles as f64 - horizon as f64 / 2.0
}

/// Reference configurations.
pub mod presets {
    use super::*;

    pub const HYBRID_EF: f64 = 0.15;
    pub const DIESEL_EF: f64 = 0.3;
    pub const CAPACITY: u32 = 20;

    /// Half hybrid, half diesel.
    pub fn mixed_fleet(vehicles: usize) -> Vec<FleetSpec> {
        let hybrids = vehicles.div_ceil(2);
        vec![
            FleetSpec { emission_factor: HYBRID_EF, capacity: CAPACITY, count: hybrids },
            FleetSpec { emission_factor: DIESEL_EF, capacity: CAPACITY, count: vehicles - hybrids },
        ]
    }

    /// Uniform synthetic instance: 2 vehicles, quota 100, H = 100.
    pub fn uniform(seed: u64) -> GeneratorConfig {
        GeneratorConfig {
            kind: GeneratorKind::Uniform,
            num_destinations: 150,
            cluster_count: 4,
            cluster_std: 5.0,
            plane_extent: 100.0,
            seed,
            fleet: mixed_fleet(2),
            quota: 100.0,
            horizon: 100,
            dod: 1.0,
            quantity_mode: QuantityMode::Unit,
            path: None,
        }
    }

    /// Clustered synthetic instance: 4 centers, 2 vehicles, quota 100, H = 50.
    pub fn clustered(seed: u64) -> GeneratorConfig {
        GeneratorConfig {
            kind: GeneratorKind::Clustered,
            num_destinations: 60,
            horizon: 50,
            ..uniform(seed)
        }
    }

    /// Desk-scale clustered instance used for the learning experiments.
    pub fn scaled_clustered(seed: u64) -> GeneratorConfig {
        GeneratorConfig { quota: SCALED_QUOTA, ..clustered(seed) }
    }

    /// Quota of [`scaled_clustered`], set so FAFS serves 60-80% of demands.
    pub const SCALED_QUOTA: f64 = 70.0;

    /// [`scaled_clustered`] with the smallest quota under which every known
    /// prefix down to DoD 0.2 can be routed, for DoD sweeps.
    pub fn scaled_clustered_dod(seed: u64) -> GeneratorConfig {
        GeneratorConfig { quota: DOD_SWEEP_QUOTA, ..clustered(seed) }
    }

    pub const DOD_SWEEP_QUOTA: f64 = 125.0;

    /// Seed of the reference scaled instance.
    pub const SCALED_SEED: u64 = 2024;

    /// Synthetic stand-in for a proprietary delivery dataset: 4 vehicles,
    /// quota 50, H = 100, clustered plus scattered clients with skewed
    /// request frequencies.
    pub fn realistic_standin(seed: u64) -> Result<Instance> {
        let k = 150;
        let cfg = GeneratorConfig {
            kind: GeneratorKind::Clustered,
            num_destinations: k,
            cluster_count: 6,
            cluster_std: 6.0,
            fleet: mixed_fleet(4),
            quota: 50.0,
            horizon: 100,
            ..uniform(seed)
        };
        let mut rng = rng_from_seed(seed ^ 0x5EED);
        let clustered = generate_clustered(&cfg)?;
        let mut coords = clustered.coords.clone().expect("generated instances carry coordinates");
        // A third of the clients are scattered over the whole plane.
        for c in coords.iter_mut().skip(1).step_by(3) {
            *c = (rng.random::<f64>() * cfg.plane_extent, rng.random::<f64>() * cfg.plane_extent);
        }
        let lognormal = Normal::<f64>::new(0.0, 1.0).expect("valid normal");
        let freqs: Vec<f64> = (0..k).map(|_| lognormal.sample(&mut rng).exp()).collect();
        let total: f64 = freqs.iter().sum();
        Ok(Instance::new(
            DistanceMatrix::euclidean(&coords),
            freqs.iter().map(|f| f / total).collect(),
            clustered.vehicles.clone(),
            cfg.quota,
            cfg.horizon,
            cfg.dod,
        )?
        .with_coords(coords))
    }

    /// Random tiny instance (K <= 7, H <= 6, two vehicles) with skewed
    /// probabilities and a binding quota, small enough for exhaustive search.
    pub fn tiny(seed: u64) -> Instance {
        small(seed, 4..=7, 6, &[1.0])
    }

    /// Random micro instance (K <= 6, H <= 5, two vehicles), sometimes with a
    /// known prefix, for exact policy evaluation.
    pub fn micro(seed: u64) -> Instance {
        small(seed, 4..=6, 5, &[1.0, 0.6])
    }

    fn small(seed: u64, k_range: std::ops::RangeInclusive<usize>, max_h: usize, dods: &[f64]) -> Instance {
        let mut rng = rng_from_seed(seed);
        let k = rng.random_range(k_range);
        let h = rng.random_range(3..=max_h.min(k));
        let extent = 20.0;
        let mut coords = vec![(extent / 2.0, extent / 2.0)];
        coords.extend((0..k).map(|_| (rng.random::<f64>() * extent, rng.random::<f64>() * extent)));
        let w: Vec<f64> = (0..k).map(|_| rng.random_range(0.2..1.0)).collect();
        let total: f64 = w.iter().sum();
        let vehicles = vec![
            Vehicle { id: 0, emission_factor: HYBRID_EF, capacity: rng.random_range(1..=3) },
            Vehicle { id: 1, emission_factor: DIESEL_EF, capacity: rng.random_range(1..=3) },
        ];
        let quota = rng.random_range(1.5..6.0);
        let dod = dods[rng.random_range(0..dods.len())];
        Instance::new(DistanceMatrix::euclidean(&coords), w.iter().map(|x| x / total).collect(), vehicles, quota, h, dod)
            .expect("valid small instance")
            .with_coords(coords)
    }

    pub fn by_name(name: &str, seed: u64) -> Result<Instance> {
        match name {
            "uniform" => generate(&uniform(seed)),
            "clustered" => generate(&clustered(seed)),
            "scaled-clustered" => generate(&scaled_clustered(seed)),
            "scaled-clustered-dod" => generate(&scaled_clustered_dod(seed)),
            "realistic" => realistic_standin(seed),
            other => Err(Error::Config(format!(
                "unknown preset `{other}` (expected one of {})", NAMES.join(", ")
            ))),
        }
    }

    pub const NAMES: [&str; 5] = ["uniform", "clustered", "scaled-clustered", "scaled-clustered-dod", "realistic"];
}
