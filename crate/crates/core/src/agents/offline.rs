use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::model::{Assignment, AssignmentKind, Decision, Instance, Quantities, Routing, Scenario, HUB, QUOTA_EPS};
use crate::rng::Rng;
use crate::routing::SaConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OfflineConfig {
    pub sa: SaConfig,
    /// Maximize `L * Ad + emission` as literally written instead of `L * Ad - emission`.
    #[serde(default)]
    pub literal_objective: bool,
}

impl Default for OfflineConfig {
    fn default() -> Self {
        Self { sa: SaConfig::default(), literal_objective: false }
    }
}

/// Scale that makes one more accepted unit outweigh any emission difference:
/// twice the larger of the quota and the largest single-edge emission.
pub fn tie_break_scale(instance: &Instance) -> f64 {
    let n = instance.num_destinations() + 1;
    let max_ef = instance.vehicles.iter().map(|v| v.emission_factor).fold(0.0, f64::max);
    let mut max_edge = 0.0f64;
    for i in 0..n {
        for &x in instance.distances().row(i) {
            max_edge = max_edge.max(x);
        }
    }
    2.0 * (max_ef * max_edge).max(instance.quota)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitResult {
    pub routing: Routing,
    /// Served flag per permutation entry.
    pub served: Vec<bool>,
    pub accepted: u64,
    pub emission: f64,
}

/// Decode a permutation: fill vehicles in increasing emission-factor order,
/// appending to the current route. A demand that does not fit the current
/// vehicle moves the fill to the next one; a demand that would break the
/// quota is dropped.
pub fn greedy_split(permutation: &[usize], instance: &Instance, quantities: &Quantities) -> SplitResult {
    let order = instance.vehicles_by_emission();
    let mut routing = Routing::empty(instance.num_vehicles());
    let mut served = vec![false; permutation.len()];
    let (accepted, emission) = split_into(permutation, instance, quantities, &order, Some((&mut routing, &mut served)));
    SplitResult { routing, served, accepted, emission }
}

/// Shared decoder; only tallies when `out` is `None`.
fn split_into(
    permutation: &[usize],
    instance: &Instance,
    quantities: &Quantities,
    order: &[usize],
    mut out: Option<(&mut Routing, &mut Vec<bool>)>,
) -> (u64, f64) {
    let d = instance.distances();
    let mut slot = 0;
    let mut load = 0u32;
    let mut last = HUB;
    let mut emission = 0.0;
    let mut accepted = 0u64;
    for (i, &dest) in permutation.iter().enumerate() {
        let q = quantities.of(dest);
        while slot < order.len() && load + q > instance.vehicles[order[slot]].capacity {
            slot += 1;
            load = 0;
            last = HUB;
        }
        if slot == order.len() {
            break;
        }
        let v = order[slot];
        let added = instance.vehicles[v].emission_factor * (d.get(last, dest) + d.get(dest, HUB) - d.get(last, HUB));
        if emission + added > instance.quota + QUOTA_EPS {
            continue;
        }
        emission += added;
        load += q;
        last = dest;
        accepted += q as u64;
        if let Some((routing, served)) = out.as_mut() {
            routing.routes[v].stops.push(dest);
            served[i] = true;
        }
    }
    (accepted, emission)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OfflineSolution {
    pub assignment: Assignment,
    pub routing: Routing,
    pub accepted: u64,
    pub emission: f64,
}

/// Simulated annealing over permutations of the scenario, each decoded by
/// [`greedy_split`].
pub fn offline_solve(instance: &Instance, scenario: &Scenario, cfg: &OfflineConfig, rng: &mut Rng) -> OfflineSolution {
    let quantities = Quantities::for_scenario(instance.num_destinations(), scenario);
    let order = instance.vehicles_by_emission();
    let l = tie_break_scale(instance);
    let sign = if cfg.literal_objective { 1.0 } else { -1.0 };
    let score = |perm: &[usize]| {
        let (ad, emis) = split_into(perm, instance, &quantities, &order, None);
        l * ad as f64 + sign * emis
    };

    let n = scenario.len();
    let mut current = nearest_neighbor_order(instance, &scenario.demands);
    let mut current_score = score(&current);
    let arrival = score(&scenario.demands);
    if arrival > current_score {
        current.copy_from_slice(&scenario.demands);
        current_score = arrival;
    }
    let mut best = current.clone();
    let mut best_score = current_score;
    let mut candidate = current.clone();
    let sa = &cfg.sa;
    let mut tau = sa.tau_init;
    if n >= 2 {
        for _ in 0..sa.max_iterations {
            candidate.copy_from_slice(&current);
            let i = rng.random_range(0..n);
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            let u: f64 = rng.random();
            if u < sa.op_probs.insertion {
                let x = candidate.remove(i);
                candidate.insert(j, x);
            } else if u < sa.op_probs.insertion + sa.op_probs.swap {
                candidate.swap(i, j);
            } else {
                candidate[i.min(j)..=i.max(j)].reverse();
            }
            let s = score(&candidate);
            let gain = s - current_score;
            if gain >= 0.0 || rng.random::<f64>() < (gain / tau).exp() {
                std::mem::swap(&mut current, &mut candidate);
                current_score = s;
                if s > best_score {
                    best_score = s;
                    best.copy_from_slice(&current);
                }
            }
            tau = (tau * sa.cooling_rate).max(sa.tau_limit);
        }
    }

    let split = greedy_split(&best, instance, &quantities);
    let served: std::collections::HashSet<usize> =
        best.iter().zip(&split.served).filter(|(_, &s)| s).map(|(&d, _)| d).collect();
    let decisions = scenario.demands.iter().map(|d| if served.contains(d) { Decision::Accept } else { Decision::Reject }).collect();
    OfflineSolution {
        assignment: Assignment { kind: AssignmentKind::Omission, decisions },
        routing: split.routing,
        accepted: split.accepted,
        emission: split.emission,
    }
}

/// Tour order built by always moving to the closest unvisited destination,
/// starting from the hub.
fn nearest_neighbor_order(instance: &Instance, destinations: &[usize]) -> Vec<usize> {
    let mut left = destinations.to_vec();
    let mut order = Vec::with_capacity(left.len());
    let mut at = HUB;
    while !left.is_empty() {
        let (i, _) = left
            .iter()
            .enumerate()
            .min_by(|a, b| instance.dist(at, *a.1).total_cmp(&instance.dist(at, *b.1)))
            .expect("non-empty");
        at = left.swap_remove(i);
        order.push(at);
    }
    order
}
