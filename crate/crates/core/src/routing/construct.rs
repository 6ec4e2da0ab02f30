use crate::model::{DistanceMatrix, Instance, Quantities, Routing, HUB};

/// Where and at what cost a destination would be inserted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Insertion {
    pub vehicle: usize,
    pub position: usize,
    /// Increase of the total emission.
    pub cost: f64,
}

/// Cheapest position for `d` in `stops` as `(length increase, position)`.
/// Ties keep the earliest position.
pub fn best_position(stops: &[usize], d: usize, distances: &DistanceMatrix) -> (f64, usize) {
    let mut best = (f64::INFINITY, 0);
    let mut prev = HUB;
    for pos in 0..=stops.len() {
        let next = stops.get(pos).copied().unwrap_or(HUB);
        let delta = distances.get(prev, d) + distances.get(d, next) - distances.get(prev, next);
        if delta < best.0 {
            best = (delta, pos);
        }
        prev = next;
    }
    best
}

/// Cheapest (vehicle, position) for `d` over vehicles that still have room
/// for its quantity, restricted to `allowed` when given. Ties go to the lower
/// vehicle index, then the earlier position.
pub fn cheapest_insertion(
    routing: &Routing,
    loads: &[u32],
    d: usize,
    instance: &Instance,
    quantities: &Quantities,
    allowed: Option<usize>,
) -> Option<Insertion> {
    let q = quantities.of(d);
    let mut best: Option<Insertion> = None;
    for (v, route) in routing.routes.iter().enumerate() {
        if allowed.is_some_and(|a| a != v) || loads[v] + q > instance.vehicles[v].capacity {
            continue;
        }
        let (delta, position) = best_position(&route.stops, d, instance.distances());
        let cost = instance.vehicles[v].emission_factor * delta;
        if best.is_none_or(|b| cost < b.cost) {
            best = Some(Insertion { vehicle: v, position, cost });
        }
    }
    best
}

/// Greedy construction: repeatedly commit the globally cheapest
/// (destination, vehicle, position) insertion among vehicles with residual
/// capacity. Capacity is respected; the quota is not looked at.
///
/// Returns `None` when capacity runs out before every destination is placed.
pub fn construct_initial(instance: &Instance, destinations: &[usize], quantities: &Quantities) -> Option<Routing> {
    let m = instance.num_vehicles();
    let mut routing = Routing::empty(m);
    let demand: u64 = destinations.iter().map(|&d| quantities.of(d) as u64).sum();
    if demand > instance.total_capacity() {
        return None;
    }
    let mut loads = vec![0u32; m];
    let mut remaining: Vec<usize> = destinations.to_vec();
    // cache[i][v]: (length increase, position) of remaining[i] in route v.
    let mut cache: Vec<Vec<(f64, usize)>> = remaining
        .iter()
        .map(|&d| (0..m).map(|v| best_position(&routing.routes[v].stops, d, instance.distances())).collect())
        .collect();

    while !remaining.is_empty() {
        let mut best: Option<(usize, Insertion)> = None;
        for (i, &d) in remaining.iter().enumerate() {
            let q = quantities.of(d);
            for v in 0..m {
                if loads[v] + q > instance.vehicles[v].capacity {
                    continue;
                }
                let cost = instance.vehicles[v].emission_factor * cache[i][v].0;
                if best.is_none_or(|(_, b)| cost < b.cost) {
                    best = Some((i, Insertion { vehicle: v, position: cache[i][v].1, cost }));
                }
            }
        }
        let (i, ins) = best?;
        let d = remaining.remove(i);
        cache.remove(i);
        routing.routes[ins.vehicle].stops.insert(ins.position, d);
        loads[ins.vehicle] += quantities.of(d);
        let stops = &routing.routes[ins.vehicle].stops;
        for (j, &other) in remaining.iter().enumerate() {
            cache[j][ins.vehicle] = best_position(stops, other, instance.distances());
        }
    }
    Some(routing)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{routing_emission, DistanceMatrix, Vehicle};

    fn line_instance(capacity: u32) -> Instance {
        // Hub at 0, destinations on both sides of the x axis.
        let pts = vec![(0.0, 0.0), (10.0, 0.0), (-10.0, 0.0), (5.0, 0.0), (-5.0, 0.0)];
        Instance::new(
            DistanceMatrix::euclidean(&pts),
            vec![0.25; 4],
            vec![
                Vehicle { id: 0, emission_factor: 0.3, capacity },
                Vehicle { id: 1, emission_factor: 0.15, capacity },
            ],
            100.0,
            4,
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn empty_set_gives_empty_routing() {
        let inst = line_instance(2);
        let r = construct_initial(&inst, &[], &Quantities::unit(4)).unwrap();
        assert_eq!(r, Routing::empty(2));
        assert_eq!(routing_emission(&r, &inst), 0.0);
    }

    #[test]
    fn single_destination_goes_to_cleanest_vehicle() {
        let inst = line_instance(2);
        let r = construct_initial(&inst, &[1], &Quantities::unit(4)).unwrap();
        assert_eq!(r.routes[1].stops, vec![1]);
        assert!(r.routes[0].is_empty());
    }

    #[test]
    fn over_capacity_is_infeasible() {
        let inst = line_instance(2);
        assert!(construct_initial(&inst, &[1, 2, 3, 4], &Quantities::unit(4)).is_some());
        let tight = line_instance(1);
        assert!(construct_initial(&tight, &[1, 2, 3], &Quantities::unit(4)).is_none());
    }

    #[test]
    fn capacity_is_respected() {
        let inst = line_instance(2);
        let r = construct_initial(&inst, &[1, 2, 3, 4], &Quantities::unit(4)).unwrap();
        assert!(r.routes.iter().all(|route| route.stops.len() <= 2));
        assert_eq!(r.destination_set(), vec![1, 2, 3, 4]);
    }

    #[test]
    fn collinear_insertion_is_free() {
        let inst = line_instance(4);
        let (delta, pos) = best_position(&[1], 3, inst.distances());
        assert!(delta.abs() < 1e-12);
        assert_eq!(pos, 0);
    }
}
