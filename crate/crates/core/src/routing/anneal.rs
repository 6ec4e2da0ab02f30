use rand::Rng as _;

use super::{SaConfig, Scope};
use crate::model::{routing_emission, stops_length, DistanceMatrix, Instance, Quantities, Route, Routing, HUB};
use crate::rng::Rng;

/// Best-so-far emission after every iteration of one annealing run.
#[derive(Debug, Clone, Default)]
pub struct AnnealTrace {
    pub best: Vec<f64>,
    pub accepted_moves: usize,
}

/// Metropolis simulated annealing minimizing total emission. Returns the best
/// routing visited, which never emits more than the input. Moves that would
/// break a vehicle capacity are discarded.
pub fn anneal(
    routing: &Routing,
    instance: &Instance,
    quantities: &Quantities,
    scope: Scope,
    cfg: &SaConfig,
    rng: &mut Rng,
) -> Routing {
    run(routing, instance, quantities, scope, cfg, rng, None)
}

/// [`anneal`] that also records the best-so-far emission per iteration.
pub fn anneal_traced(
    routing: &Routing,
    instance: &Instance,
    quantities: &Quantities,
    scope: Scope,
    cfg: &SaConfig,
    rng: &mut Rng,
) -> (Routing, AnnealTrace) {
    let mut trace = AnnealTrace::default();
    let out = run(routing, instance, quantities, scope, cfg, rng, Some(&mut trace));
    (out, trace)
}

struct Work<'a> {
    routes: Vec<Vec<usize>>,
    lengths: Vec<f64>,
    loads: Vec<u32>,
    d: &'a DistanceMatrix,
}

impl Work<'_> {
    /// Element `i` of route `r`, with the hub at both ends (`i = -1` and `i = len`).
    #[inline(always)]
    fn at(&self, r: usize, i: isize) -> usize {
        let route = &self.routes[r];
        if i < 0 || i as usize >= route.len() {
            HUB
        } else {
            route[i as usize]
        }
    }

    /// Same as [`Self::at`] on route `r` with position `skip` removed.
    #[inline(always)]
    fn at_without(&self, r: usize, skip: usize, i: isize) -> usize {
        if i >= skip as isize {
            self.at(r, i + 1)
        } else {
            self.at(r, i)
        }
    }
}

enum Move {
    Relocate { from: (usize, usize), to: (usize, usize), delta_len: (f64, f64) },
    Swap { a: (usize, usize), b: (usize, usize), delta_len: (f64, f64) },
    Reverse { route: usize, i: usize, j: usize, delta_len: f64 },
}

fn run(
    input: &Routing,
    instance: &Instance,
    quantities: &Quantities,
    scope: Scope,
    cfg: &SaConfig,
    rng: &mut Rng,
    mut trace: Option<&mut AnnealTrace>,
) -> Routing {
    let d = instance.distances();
    let mut work = Work {
        routes: input.routes.iter().map(|r| r.stops.clone()).collect(),
        lengths: input.routes.iter().map(|r| stops_length(&r.stops, d)).collect(),
        loads: input.routes.iter().map(|r| quantities.load(r)).collect(),
        d,
    };
    let ef: Vec<f64> = instance.vehicles.iter().map(|v| v.emission_factor).collect();
    let caps: Vec<u32> = instance.vehicles.iter().map(|v| v.capacity).collect();
    let in_scope: Vec<usize> = match scope {
        Scope::Global => (0..work.routes.len()).collect(),
        Scope::SingleRoute(v) => vec![v],
    };
    let scoped_stops = |w: &Work| in_scope.iter().map(|&r| w.routes[r].len()).sum::<usize>();
    let trivial = match scope {
        Scope::Global => scoped_stops(&work) == 0 || (scoped_stops(&work) == 1 && work.routes.len() == 1),
        Scope::SingleRoute(_) => scoped_stops(&work) < 2,
    };
    if trivial {
        return input.clone();
    }

    let emission_of = |w: &Work| w.lengths.iter().zip(&ef).map(|(l, e)| l * e).sum::<f64>();
    let mut current = emission_of(&work);
    let mut best = current;
    let mut best_routes = work.routes.clone();
    let mut tau = cfg.tau_init;
    let p_insert = cfg.op_probs.insertion;
    let p_swap = p_insert + cfg.op_probs.swap;

    for _ in 0..cfg.max_iterations {
        let n = scoped_stops(&work);
        let pick = |rng: &mut Rng, w: &Work| -> (usize, usize) {
            let mut k = rng.random_range(0..n);
            for &r in &in_scope {
                if k < w.routes[r].len() {
                    return (r, k);
                }
                k -= w.routes[r].len();
            }
            unreachable!("stop index within scoped stop count")
        };
        let u = rng.random::<f64>();
        let mv = if u < p_insert {
            propose_relocate(&work, &in_scope, &caps, quantities, rng, pick)
        } else if u < p_swap {
            propose_swap(&work, n, &caps, quantities, rng, pick)
        } else {
            propose_reverse(&work, rng, pick)
        };

        if let Some(mv) = mv {
            let delta = match &mv {
                Move::Relocate { from, to, delta_len } | Move::Swap { a: from, b: to, delta_len } => {
                    ef[from.0] * delta_len.0 + ef[to.0] * delta_len.1
                }
                Move::Reverse { route, delta_len, .. } => ef[*route] * delta_len,
            };
            if delta <= 0.0 || rng.random::<f64>() < (-delta / tau).exp() {
                apply(&mut work, mv, quantities);
                current += delta;
                if let Some(t) = trace.as_deref_mut() {
                    t.accepted_moves += 1;
                }
                if current < best - 1e-12 {
                    best = current;
                    for (dst, src) in best_routes.iter_mut().zip(&work.routes) {
                        dst.clone_from(src);
                    }
                }
            }
        }
        if let Some(t) = trace.as_deref_mut() {
            t.best.push(best);
        }
        tau = (tau * cfg.cooling_rate).max(cfg.tau_limit);
    }

    let out = Routing {
        routes: best_routes
            .into_iter()
            .zip(&input.routes)
            .map(|(stops, r)| Route::new(r.vehicle, stops))
            .collect(),
    };
    // Tracked deltas drift by rounding; never hand back something worse than the input.
    if routing_emission(&out, instance) <= routing_emission(input, instance) {
        out
    } else {
        input.clone()
    }
}

fn propose_relocate(
    w: &Work,
    in_scope: &[usize],
    caps: &[u32],
    quantities: &Quantities,
    rng: &mut Rng,
    pick: impl Fn(&mut Rng, &Work) -> (usize, usize),
) -> Option<Move> {
    let (r1, p1) = pick(rng, w);
    let x = w.routes[r1][p1];
    let r2 = in_scope[rng.random_range(0..in_scope.len())];
    let d = w.d;
    let (a, c) = (w.at(r1, p1 as isize - 1), w.at(r1, p1 as isize + 1));
    let removal = d.get(a, c) - d.get(a, x) - d.get(x, c);
    if r1 == r2 {
        let reduced = w.routes[r1].len() - 1;
        let p2 = rng.random_range(0..=reduced);
        if p2 == p1 {
            return None;
        }
        let (u, v) = (w.at_without(r1, p1, p2 as isize - 1), w.at_without(r1, p1, p2 as isize));
        let insertion = d.get(u, x) + d.get(x, v) - d.get(u, v);
        Some(Move::Relocate { from: (r1, p1), to: (r2, p2), delta_len: (removal + insertion, 0.0) })
    } else {
        if w.loads[r2] + quantities.of(x) > caps[r2] {
            return None;
        }
        let p2 = rng.random_range(0..=w.routes[r2].len());
        let (u, v) = (w.at(r2, p2 as isize - 1), w.at(r2, p2 as isize));
        let insertion = d.get(u, x) + d.get(x, v) - d.get(u, v);
        Some(Move::Relocate { from: (r1, p1), to: (r2, p2), delta_len: (removal, insertion) })
    }
}

fn propose_swap(
    w: &Work,
    n: usize,
    caps: &[u32],
    quantities: &Quantities,
    rng: &mut Rng,
    pick: impl Fn(&mut Rng, &Work) -> (usize, usize),
) -> Option<Move> {
    if n < 2 {
        return None;
    }
    let (mut a, mut b) = (pick(rng, w), pick(rng, w));
    if a == b {
        return None;
    }
    let d = w.d;
    let (x, y) = (w.routes[a.0][a.1], w.routes[b.0][b.1]);
    if a.0 != b.0 {
        let (qx, qy) = (quantities.of(x), quantities.of(y));
        if w.loads[a.0] - qx + qy > caps[a.0] || w.loads[b.0] - qy + qx > caps[b.0] {
            return None;
        }
        let replace = |r: usize, p: usize, old: usize, new: usize| {
            let (u, v) = (w.at(r, p as isize - 1), w.at(r, p as isize + 1));
            d.get(u, new) + d.get(new, v) - d.get(u, old) - d.get(old, v)
        };
        return Some(Move::Swap { a, b, delta_len: (replace(a.0, a.1, x, y), replace(b.0, b.1, y, x)) });
    }
    if a.1 > b.1 {
        std::mem::swap(&mut a, &mut b);
    }
    let (x, y) = (w.routes[a.0][a.1], w.routes[b.0][b.1]);
    let r = a.0;
    let delta = if b.1 == a.1 + 1 {
        let (u, v) = (w.at(r, a.1 as isize - 1), w.at(r, b.1 as isize + 1));
        d.get(u, y) + d.get(y, x) + d.get(x, v) - d.get(u, x) - d.get(x, y) - d.get(y, v)
    } else {
        let (u1, v1) = (w.at(r, a.1 as isize - 1), w.at(r, a.1 as isize + 1));
        let (u2, v2) = (w.at(r, b.1 as isize - 1), w.at(r, b.1 as isize + 1));
        d.get(u1, y) + d.get(y, v1) - d.get(u1, x) - d.get(x, v1) + d.get(u2, x) + d.get(x, v2)
            - d.get(u2, y)
            - d.get(y, v2)
    };
    Some(Move::Swap { a, b, delta_len: (delta, 0.0) })
}

fn propose_reverse(w: &Work, rng: &mut Rng, pick: impl Fn(&mut Rng, &Work) -> (usize, usize)) -> Option<Move> {
    let (r, i) = pick(rng, w);
    let len = w.routes[r].len();
    if len < 2 {
        return None;
    }
    let mut j = rng.random_range(0..len - 1);
    if j >= i {
        j += 1;
    }
    let (i, j) = (i.min(j), i.max(j));
    let d = w.d;
    let (u, v) = (w.at(r, i as isize - 1), w.at(r, j as isize + 1));
    let (first, last) = (w.routes[r][i], w.routes[r][j]);
    let delta = d.get(u, last) + d.get(first, v) - d.get(u, first) - d.get(last, v);
    Some(Move::Reverse { route: r, i, j, delta_len: delta })
}

fn apply(w: &mut Work, mv: Move, quantities: &Quantities) {
    match mv {
        Move::Relocate { from, to, delta_len } => {
            let x = w.routes[from.0].remove(from.1);
            w.routes[to.0].insert(to.1, x);
            w.lengths[from.0] += delta_len.0;
            w.lengths[to.0] += delta_len.1;
            if from.0 != to.0 {
                w.loads[from.0] -= quantities.of(x);
                w.loads[to.0] += quantities.of(x);
            }
        }
        Move::Swap { a, b, delta_len } => {
            let (x, y) = (w.routes[a.0][a.1], w.routes[b.0][b.1]);
            w.routes[a.0][a.1] = y;
            w.routes[b.0][b.1] = x;
            w.lengths[a.0] += delta_len.0;
            w.lengths[b.0] += delta_len.1;
            if a.0 != b.0 {
                w.loads[a.0] = w.loads[a.0] - quantities.of(x) + quantities.of(y);
                w.loads[b.0] = w.loads[b.0] - quantities.of(y) + quantities.of(x);
            }
        }
        Move::Reverse { route, i, j, delta_len } => {
            w.routes[route][i..=j].reverse();
            w.lengths[route] += delta_len;
        }
    }
}
