//! Exact-oracle comparisons shared by the command line and the test suites.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::agents::oracle::{brute_force_offline, held_karp};
use crate::agents::{offline_solve, OfflineConfig};
use crate::error::Result;
use crate::generate::{presets, sample_scenario};
use crate::model::{route_length, DistanceMatrix, Instance, Quantities, Route, Routing, Vehicle};
use crate::rng::{derived_rng, rng_from_seed, Stream};
use crate::routing::{anneal_traced, SaConfig, Scope};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OfflineCheck {
    pub instances: usize,
    /// Offline agent reached the exhaustive optimum.
    pub matched: usize,
    /// Offline agent reported more than the optimum (must be 0).
    pub exceeded: usize,
    /// `(seed, offline, optimum)` of every mismatch.
    pub mismatches: Vec<(u64, u64, u64)>,
}

/// Offline agent against exhaustive search on `n` tiny instances.
pub fn offline_oracle_check(n: usize, base_seed: u64, cfg: &OfflineConfig) -> Result<OfflineCheck> {
    let mut out = OfflineCheck { instances: n, matched: 0, exceeded: 0, mismatches: Vec::new() };
    for i in 0..n as u64 {
        let seed = base_seed.wrapping_add(i);
        let instance = presets::tiny(seed);
        let scenario = sample_scenario(&instance, &mut derived_rng(seed, Stream::TestScenario, 0));
        let optimum = brute_force_offline(&instance, &scenario)?.accepted;
        let got = offline_solve(&instance, &scenario, cfg, &mut derived_rng(seed, Stream::Offline, 0)).accepted;
        if got == optimum {
            out.matched += 1;
        } else {
            out.exceeded += usize::from(got > optimum);
            out.mismatches.push((seed, got, optimum));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TspCheck {
    pub instances: usize,
    /// Annealed emission within 1e-9 (relative) of the exact tour.
    pub matched: usize,
    /// Runs whose best-so-far trace ever increased.
    pub non_monotone: usize,
    pub worst_gap: f64,
}

/// Random single vehicle instance with `stops` uniform destinations.
pub fn tsp_instance(seed: u64, stops: usize) -> Instance {
    let mut rng = rng_from_seed(seed);
    let pts: Vec<(f64, f64)> = (0..=stops).map(|_| (rng.random::<f64>() * 100.0, rng.random::<f64>() * 100.0)).collect();
    let vehicle = Vehicle { id: 0, emission_factor: presets::HYBRID_EF, capacity: stops as u32 };
    Instance::new(DistanceMatrix::euclidean(&pts), vec![1.0 / stops as f64; stops], vec![vehicle], f64::MAX, stops, 1.0)
        .expect("valid TSP instance")
        .with_coords(pts)
}

/// Single-route annealing against Held-Karp on `n` random `stops`-stop tours.
pub fn tsp_oracle_check(n: usize, stops: usize, base_seed: u64, sa: &SaConfig) -> TspCheck {
    let mut out = TspCheck { instances: n, matched: 0, non_monotone: 0, worst_gap: 0.0 };
    for i in 0..n as u64 {
        let seed = base_seed.wrapping_add(i);
        let instance = tsp_instance(seed, stops);
        let all: Vec<usize> = (1..=stops).collect();
        let start = Routing { routes: vec![Route::new(0, all.clone())] };
        let quantities = Quantities::unit(stops);
        let (best, trace) =
            anneal_traced(&start, &instance, &quantities, Scope::SingleRoute(0), sa, &mut derived_rng(seed, Stream::Agent, 0));
        let ef = instance.vehicles[0].emission_factor;
        let annealed = ef * route_length(&best.routes[0], instance.distances());
        let exact = ef * held_karp(&all, instance.distances()).0;
        let gap = (annealed - exact) / exact;
        out.worst_gap = out.worst_gap.max(gap);
        out.matched += usize::from(gap <= 1e-9);
        out.non_monotone += usize::from(trace.best.windows(2).any(|w| w[1] > w[0]));
    }
    out
}
