//! Exact solvers for tiny instances, used to check the heuristics.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::model::{DistanceMatrix, Instance, QuantityMode, Quantities, Route, Routing, Scenario, HUB, QUOTA_EPS};

/// Shortest closed tour from the hub through `stops`, as `(length, order)`.
pub fn held_karp(stops: &[usize], distances: &DistanceMatrix) -> (f64, Vec<usize>) {
    let table = TourTable::new(stops, distances);
    let full = (1usize << stops.len()) - 1;
    (table.length[full], table.order(full))
}

/// Optimal open-path DP shared by every subset of a destination list.
struct TourTable<'a> {
    stops: &'a [usize],
    /// `length[mask]`: shortest hub-to-hub tour through the stops in `mask`.
    length: Vec<f64>,
    /// Predecessor in the path DP, indexed `mask * n + last`.
    pred: Vec<u8>,
    /// Final stop of the optimal tour of each mask.
    last: Vec<u8>,
}

impl<'a> TourTable<'a> {
    fn new(stops: &'a [usize], d: &DistanceMatrix) -> Self {
        let n = stops.len();
        assert!(n <= 16, "held_karp is limited to 16 stops");
        let size = 1usize << n;
        let mut path = vec![f64::INFINITY; size * n];
        let mut pred = vec![u8::MAX; size * n];
        for (i, &s) in stops.iter().enumerate() {
            path[(1 << i) * n + i] = d.get(HUB, s);
        }
        for mask in 1..size {
            for last in 0..n {
                let cur = path[mask * n + last];
                if mask & (1 << last) == 0 || !cur.is_finite() {
                    continue;
                }
                for next in 0..n {
                    if mask & (1 << next) != 0 {
                        continue;
                    }
                    let m2 = mask | (1 << next);
                    let cand = cur + d.get(stops[last], stops[next]);
                    if cand < path[m2 * n + next] {
                        path[m2 * n + next] = cand;
                        pred[m2 * n + next] = last as u8;
                    }
                }
            }
        }
        let mut length = vec![0.0; size];
        let mut last = vec![0u8; size];
        for mask in 1..size {
            length[mask] = f64::INFINITY;
            for l in (0..n).filter(|&l| mask & (1 << l) != 0) {
                let total = path[mask * n + l] + d.get(stops[l], HUB);
                if total < length[mask] {
                    length[mask] = total;
                    last[mask] = l as u8;
                }
            }
        }
        Self { stops, length, pred, last }
    }

    fn order(&self, mask: usize) -> Vec<usize> {
        let n = self.stops.len();
        let mut order = Vec::new();
        if mask == 0 {
            return order;
        }
        let mut last = self.last[mask] as usize;
        let mut m = mask;
        loop {
            order.push(self.stops[last]);
            let p = self.pred[m * n + last];
            m &= !(1 << last);
            if p == u8::MAX {
                break;
            }
            last = p as usize;
        }
        order.reverse();
        order
    }
}

/// Minimum fleet emission for every subset of a destination list.
struct FleetTable<'a> {
    tours: TourTable<'a>,
    /// `best[v][mask]`: cheapest service of `mask` using the first `v + 1` vehicles.
    best: Vec<Vec<f64>>,
    /// Subset given to vehicle `v` in that optimum.
    choice: Vec<Vec<usize>>,
}

impl<'a> FleetTable<'a> {
    fn new(stops: &'a [usize], instance: &Instance, quantities: &Quantities) -> Self {
        let tours = TourTable::new(stops, instance.distances());
        let n = stops.len();
        let size = 1usize << n;
        let load: Vec<u64> = (0..size)
            .map(|mask| (0..n).filter(|&i| mask & (1 << i) != 0).map(|i| quantities.of(stops[i]) as u64).sum())
            .collect();
        let mut best: Vec<Vec<f64>> = Vec::new();
        let mut choice: Vec<Vec<usize>> = Vec::new();
        for (v, vehicle) in instance.vehicles.iter().enumerate() {
            let mut b = vec![f64::INFINITY; size];
            let mut c = vec![0usize; size];
            for mask in 0..size {
                let mut sub = mask;
                loop {
                    if load[sub] <= vehicle.capacity as u64 {
                        let rest = mask & !sub;
                        let prev = if v == 0 { if rest == 0 { 0.0 } else { f64::INFINITY } } else { best[v - 1][rest] };
                        let cost = prev + vehicle.emission_factor * tours.length[sub];
                        if cost < b[mask] {
                            b[mask] = cost;
                            c[mask] = sub;
                        }
                    }
                    if sub == 0 {
                        break;
                    }
                    sub = (sub - 1) & mask;
                }
            }
            best.push(b);
            choice.push(c);
        }
        Self { tours, best, choice }
    }

    fn min_emission(&self, mask: usize) -> f64 {
        self.best.last().map_or(if mask == 0 { 0.0 } else { f64::INFINITY }, |b| b[mask])
    }

    fn routing(&self, mask: usize) -> Routing {
        let m = self.best.len();
        let mut routing = Routing::empty(m);
        let mut rest = mask;
        for v in (0..m).rev() {
            let sub = self.choice[v][rest];
            routing.routes[v] = Route::new(v, self.tours.order(sub));
            rest &= !sub;
        }
        routing
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub accepted: u64,
    pub emission: f64,
    pub routing: Routing,
}

/// Exhaustive offline optimum: the subset of scenario demands with the largest
/// accepted amount that some routing serves within capacity and quota, ties
/// broken by lower emission.
pub fn brute_force_offline(instance: &Instance, scenario: &Scenario) -> Result<OracleSolution> {
    if scenario.len() > 7 || instance.num_vehicles() > 2 {
        return Err(Error::Usage("brute_force_offline needs H <= 7 and at most 2 vehicles".into()));
    }
    scenario.validate(instance)?;
    let quantities = Quantities::for_scenario(instance.num_destinations(), scenario);
    let table = FleetTable::new(&scenario.demands, instance, &quantities);
    let mut best: Option<(u64, f64, usize)> = None;
    for mask in 0..(1usize << scenario.len()) {
        let e = table.min_emission(mask);
        if e > instance.quota + QUOTA_EPS {
            continue;
        }
        let ad: u64 = (0..scenario.len()).filter(|&i| mask & (1 << i) != 0).map(|i| scenario.quantity_at(i) as u64).sum();
        if best.is_none_or(|(bad, be, _)| ad > bad || (ad == bad && e < be)) {
            best = Some((ad, e, mask));
        }
    }
    let (accepted, emission, mask) = best.expect("the empty set is always feasible");
    Ok(OracleSolution { accepted, emission, routing: table.routing(mask) })
}

/// Expected accepted count of the optimal online policy with exact routing,
/// by backward induction over (revealed set, accepted set). Known-prefix
/// demands must be accepted; an infeasible prefix scores 0.
pub fn brute_force_policy_value(instance: &Instance) -> Result<f64> {
    let k = instance.num_destinations();
    if k > 6 || instance.horizon > 5 || instance.num_vehicles() > 2 {
        return Err(Error::Usage("brute_force_policy_value needs K <= 6, H <= 5 and at most 2 vehicles".into()));
    }
    if instance.quantity_mode != QuantityMode::Unit {
        return Err(Error::Usage("brute_force_policy_value supports unit quantities only".into()));
    }
    let stops: Vec<usize> = (1..=k).collect();
    let quantities = Quantities::unit(k);
    let table = FleetTable::new(&stops, instance, &quantities);
    let feasible: Vec<bool> = (0..1usize << k).map(|m| table.min_emission(m) <= instance.quota + QUOTA_EPS).collect();
    let mut search = PolicySearch { instance, feasible, prefix: instance.known_prefix_len(), memo: HashMap::new() };
    Ok(search.value(0, 0))
}

struct PolicySearch<'a> {
    instance: &'a Instance,
    feasible: Vec<bool>,
    prefix: usize,
    memo: HashMap<(usize, usize), f64>,
}

impl PolicySearch<'_> {
    fn value(&mut self, seen: usize, accepted: usize) -> f64 {
        let step = seen.count_ones() as usize;
        if step == self.instance.horizon {
            return accepted.count_ones() as f64;
        }
        if let Some(&v) = self.memo.get(&(seen, accepted)) {
            return v;
        }
        let k = self.instance.num_destinations();
        let mass: f64 = (0..k).filter(|&i| seen & (1 << i) == 0).map(|i| self.instance.prob(i + 1)).sum();
        let mut total = 0.0;
        for i in 0..k {
            if seen & (1 << i) != 0 || self.instance.prob(i + 1) == 0.0 {
                continue;
            }
            let p = self.instance.prob(i + 1) / mass;
            let next_seen = seen | (1 << i);
            let with = accepted | (1 << i);
            let v = if step < self.prefix {
                if self.feasible[with] {
                    self.value(next_seen, with)
                } else {
                    0.0
                }
            } else {
                let skip = self.value(next_seen, accepted);
                if self.feasible[with] {
                    skip.max(self.value(next_seen, with))
                } else {
                    skip
                }
            };
            total += p * v;
        }
        self.memo.insert((seen, accepted), total);
        total
    }
}
