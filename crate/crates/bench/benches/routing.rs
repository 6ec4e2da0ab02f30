use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use dqvrp::generate::{presets, sample_scenario};
use dqvrp::model::{Quantities, Route, Routing};
use dqvrp::rng::{derived_rng, rng_from_seed, Stream};
use dqvrp::routing::{anneal, cheapest_insertion, construct_initial, insert_omission, RoutingState, SaConfig, Scope};

fn bench_anneal(c: &mut Criterion) {
    let inst = presets::by_name("scaled-clustered", presets::SCALED_SEED).unwrap();
    let scenario = sample_scenario(&inst, &mut derived_rng(0, Stream::TestScenario, 0));
    let q = Quantities::unit(inst.num_destinations());
    let start = construct_initial(&inst, &scenario.demands[..30], &q).expect("30 stops fit the fleet");
    let mut g = c.benchmark_group("anneal");
    g.sample_size(10);
    for iters in [5_000, 50_000] {
        let cfg = SaConfig::with_iterations(iters);
        g.bench_function(format!("global_30_stops_{iters}"), |b| {
            b.iter(|| anneal(&start, &inst, &q, Scope::Global, &cfg, &mut rng_from_seed(1)))
        });
    }
    let tsp = dqvrp::harness::tsp_instance(3, 8);
    let tour = Routing { routes: vec![Route::new(0, (1..=8).collect())] };
    let q8 = Quantities::unit(8);
    g.bench_function("single_route_8_stops_50000", |b| {
        b.iter(|| anneal(&tour, &tsp, &q8, Scope::SingleRoute(0), &SaConfig::default(), &mut rng_from_seed(1)))
    });
    g.finish();
}

fn bench_insertion(c: &mut Criterion) {
    let inst = presets::by_name("scaled-clustered", presets::SCALED_SEED).unwrap();
    let scenario = sample_scenario(&inst, &mut derived_rng(0, Stream::TestScenario, 0));
    let q = Quantities::unit(inst.num_destinations());
    let routing = construct_initial(&inst, &scenario.demands[..25], &q).unwrap();
    let state = RoutingState::new(routing.clone(), &inst, &q);
    let next = scenario.demands[25];
    c.bench_function("cheapest_insertion_25_stops", |b| {
        b.iter(|| cheapest_insertion(&routing, state.loads(), next, &inst, &q, None))
    });
    let cfg = SaConfig::with_iterations(5_000);
    c.bench_function("insert_omission_sa_5000", |b| {
        b.iter_batched(|| rng_from_seed(2), |mut rng| insert_omission(&state, next, &inst, &q, &cfg, &mut rng), BatchSize::SmallInput)
    });
}

criterion_group!(benches, bench_anneal, bench_insertion);
criterion_main!(benches);
