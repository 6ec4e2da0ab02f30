//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! `DQVRP_ACCEPTANCE=1,5,7` runs a subset. `DQVRP_ACCEPTANCE_STRICT=1` turns
//! failures into a non-zero exit status. Trained models are cached under the
//! cargo target directory, keyed by their training configuration; set
//! `DQVRP_ACCEPTANCE_RETRAIN=1` to ignore the cache.

use std::path::PathBuf;
use std::sync::{Arc, OnceLock};
use std::time::Instant;

use dqvrp::agents::oracle::brute_force_policy_value;
use dqvrp::agents::{run_episode, EpisodeOutcome, MsaConfig, OfflineConfig, RunOptions};
use dqvrp::env::{EnvConfig, ObsConfig};
use dqvrp::generate::{presets, sample_scenario};
use dqvrp::harness::{
    self, offline_oracle_check, run_agent, tsp_oracle_check, Agent, Estimate, ExperimentSpec, InstanceSource, NoiseModel,
    TrainSpec,
};
use dqvrp::model::{accepted_count, check_feasible, AssignmentKind, Decision, Instance, Quantities};
use dqvrp::nn::{
    checkpoint, double_dqn_target, epsilon, gradcheck, input_scale, Dense, DqnConfig, DqnModel, Mlp, Transition,
};
use dqvrp::rng::{derive_seed, derived_rng, rng_from_seed, Stream};
use dqvrp::routing::SaConfig;
use rand::Rng as _;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

type Check = fn() -> Outcome;

const CRITERIA: [(u32, &str, Check); 12] = [
    (1, "feasibility invariant", feasibility),
    (2, "reward identity", reward_identity),
    (3, "offline oracle equivalence", offline_oracle),
    (4, "online dominance bound", online_bound),
    (5, "routing annealer quality", annealer_quality),
    (6, "gradient correctness", gradients),
    (7, "double DQN unit semantics", dqn_semantics),
    (8, "scaled learning result", learning_result),
    (9, "MSA behavior", msa_behavior),
    (10, "timing ordering", timing_ordering),
    (11, "DoD sweep shape", dod_sweep),
    (12, "horizon-noise degradation", noise_degradation),
];

fn main() {
    let selected: Option<Vec<u32>> =
        std::env::var("DQVRP_ACCEPTANCE").ok().map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let strict = std::env::var("DQVRP_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let (mut passed, mut failed) = (0, 0);
    for (id, name, check) in CRITERIA {
        if selected.as_ref().is_some_and(|s| !s.contains(&id)) {
            continue;
        }
        let start = Instant::now();
        let out = std::panic::catch_unwind(check).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            outcome(false, format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = start.elapsed().as_secs_f64();
        println!("{} {id:>2} {name}: {} [{secs:.1}s]", if out.pass { "PASS" } else { "FAIL" }, out.detail);
        if out.pass {
            passed += 1;
        } else {
            failed += 1;
        }
    }
    println!("acceptance: {passed} passed, {failed} failed");
    if strict && failed > 0 {
        std::process::exit(1);
    }
}

// ---------------------------------------------------------------------------
// 1 and 2: feasibility and reward identity over a shared batch of episodes.

struct BatchStats {
    episodes: usize,
    violations: Vec<String>,
    identity_mismatches: usize,
    identity_checked: usize,
    prefix_failures: usize,
    secs: f64,
}

fn random_model(instance: &Instance, obs: ObsConfig, seed: u64) -> Arc<DqnModel> {
    let m = instance.num_vehicles();
    let sizes: Vec<usize> = std::iter::once(obs.len(m, instance.quantity_mode))
        .chain(DqnConfig::default().hidden_for(m))
        .chain(std::iter::once(m + 1))
        .collect();
    Arc::new(DqnModel {
        net: Mlp::new(&sizes, &mut rng_from_seed(seed)),
        obs,
        num_vehicles: m,
        quantity_mode: instance.quantity_mode,
        input_scale: input_scale(instance, &obs),
        config_hash: String::new(),
    })
}

fn episode_batch() -> &'static BatchStats {
    static STATS: OnceLock<BatchStats> = OnceLock::new();
    STATS.get_or_init(|| {
        let start = Instant::now();
        let env = EnvConfig {
            dynamic_sa: SaConfig::with_iterations(300),
            offline_sa: SaConfig::with_iterations(3_000),
            ..EnvConfig::default()
        };
        let offline = OfflineConfig::default();
        let mut stats =
            BatchStats { episodes: 0, violations: Vec::new(), identity_mismatches: 0, identity_checked: 0, prefix_failures: 0, secs: 0.0 };
        for (p, preset) in ["uniform", "clustered"].into_iter().enumerate() {
            for (d, dod) in [1.0, 0.8].into_iter().enumerate() {
                let instance = presets::by_name(preset, 100 + p as u64).unwrap().with_dod(dod);
                let model = random_model(&instance, ObsConfig::default(), 7);
                let agents: Vec<(Agent, usize)> = vec![
                    (Agent::Fafs, 600),
                    (Agent::Random(AssignmentKind::Omission), 600),
                    (Agent::Random(AssignmentKind::Vehicle), 600),
                    (Agent::DqnVa(model.clone()), 350),
                    (Agent::DqnVaAsOa(model.clone()), 250),
                    (Agent::DqnVaForcedDynamic(model), 100),
                    (Agent::Msa(MsaConfig::default()), 10),
                    (Agent::Offline, 90),
                ];
                for (a, (agent, count)) in agents.iter().enumerate() {
                    for i in 0..*count {
                        let seed = derive_seed(1_000 * (p * 2 + d) as u64 + a as u64, Stream::TestScenario, i as u64);
                        let scenario = sample_scenario(&instance, &mut rng_from_seed(seed));
                        stats.episodes += 1;
                        let label = format!("{} on {preset} (DoD {dod}, scenario seed {seed})", agent.label());
                        match agent.policy() {
                            None => {
                                let r = run_agent(agent, &instance, &scenario, i, seed, &env, &offline, false).unwrap();
                                // Re-solve to inspect the routing itself.
                                let sol = dqvrp::agents::offline_solve(
                                    &instance,
                                    &scenario,
                                    &offline,
                                    &mut derived_rng(harness::episode_seed(seed, i), Stream::Offline, 0),
                                );
                                let q = Quantities::for_scenario(instance.num_destinations(), &scenario);
                                if let Err(v) = check_feasible(&sol.routing, &instance, &q) {
                                    stats.violations.push(format!("{label}: {v}"));
                                }
                                stats.identity_checked += 1;
                                if sol.accepted != accepted_count(&sol.assignment, &scenario) || r.accepted != sol.accepted {
                                    stats.identity_mismatches += 1;
                                }
                            }
                            Some(mut policy) => {
                                let env = agent.env_config(&env, &instance);
                                match run_episode(&instance, &scenario, policy.as_mut(), &env, seed, RunOptions { check_every_step: true }) {
                                    Err(e) => stats.violations.push(format!("{label}: {e}")),
                                    Ok(out) => check_identity(&out, &scenario, &mut stats),
                                }
                            }
                        }
                    }
                }
            }
        }
        stats.secs = start.elapsed().as_secs_f64();
        stats
    })
}

fn check_identity(out: &EpisodeOutcome, scenario: &dqvrp::model::Scenario, stats: &mut BatchStats) {
    stats.identity_checked += 1;
    match &out.assignment {
        Some(a) => {
            if out.accepted != accepted_count(a, scenario) {
                stats.identity_mismatches += 1;
            }
        }
        None => {
            stats.prefix_failures += 1;
            if out.accepted != 0 {
                stats.identity_mismatches += 1;
            }
        }
    }
}

fn feasibility() -> Outcome {
    let s = episode_batch();
    let mut detail = format!(
        "{} episodes over uniform and clustered presets at DoD 1 and 0.8, {} violations, {:.0}s (limit 600s)",
        s.episodes,
        s.violations.len(),
        s.secs
    );
    if let Some(v) = s.violations.first() {
        detail += &format!("; first: {v}");
    }
    outcome(s.episodes >= 10_000 && s.violations.is_empty() && s.secs <= 600.0, detail)
}

fn reward_identity() -> Outcome {
    let s = episode_batch();
    outcome(
        s.identity_mismatches == 0 && s.identity_checked > 0,
        format!(
            "{} episodes checked ({} with unservable prefixes), {} mismatches between cumulative reward and accepted count",
            s.identity_checked, s.prefix_failures, s.identity_mismatches
        ),
    )
}

// ---------------------------------------------------------------------------

fn offline_oracle() -> Outcome {
    let start = Instant::now();
    let c = offline_oracle_check(100, 30_000, &OfflineConfig::default()).unwrap();
    let secs = start.elapsed().as_secs_f64();
    outcome(
        c.matched >= 90 && c.exceeded == 0 && secs <= 300.0,
        format!("{}/100 optimal (need 90), {} above the optimum, {secs:.1}s (limit 300s)", c.matched, c.exceeded),
    )
}

fn micro_model(instance: &Instance, env: &EnvConfig, seed: u64) -> Arc<DqnModel> {
    let dqn = DqnConfig {
        hidden: Some(vec![32, 32]),
        episodes: 300,
        epsilon_decay_period: 150.0,
        minibatch: 32,
        warmup_transitions: 200,
        train_scenarios: 100,
        validation_scenarios: 10,
        eval_every: 50,
        ..DqnConfig::default()
    };
    let train = harness::scenarios(instance, seed, Stream::TrainScenario, dqn.train_scenarios).unwrap();
    let validation = harness::scenarios(instance, seed, Stream::ValidationScenario, dqn.validation_scenarios).unwrap();
    let input = dqvrp::nn::TrainInput { instance, env: *env, dqn, seed, train: &train, validation: &validation };
    Arc::new(dqvrp::nn::train(&input, &mut |_| {}).unwrap().model)
}

fn online_bound() -> Outcome {
    const EPISODES: usize = 10_000;
    let env = EnvConfig {
        dynamic_sa: SaConfig::with_iterations(200),
        offline_sa: SaConfig::with_iterations(500),
        ..EnvConfig::default()
    };
    let mut worst_z = f64::NEG_INFINITY;
    let mut worst = String::new();
    let mut violations = 0;
    let mut checks = 0;
    for k in 0..20u64 {
        let instance = presets::micro(500 + k);
        let bound = brute_force_policy_value(&instance).unwrap();
        let model = micro_model(&instance, &env, k);
        let agents = [
            Agent::Fafs,
            Agent::Random(AssignmentKind::Omission),
            Agent::Random(AssignmentKind::Vehicle),
            Agent::Msa(MsaConfig::default()),
            Agent::DqnVa(model.clone()),
            Agent::DqnVaAsOa(model),
        ];
        for agent in &agents {
            let values: Vec<f64> = (0..EPISODES)
                .map(|e| {
                    let scenario = sample_scenario(&instance, &mut derived_rng(k, Stream::TestScenario, e as u64));
                    let mut policy = agent.policy().unwrap();
                    run_episode(&instance, &scenario, policy.as_mut(), &env, derive_seed(k, Stream::Episode, e as u64), RunOptions::default())
                        .unwrap()
                        .accepted as f64
                })
                .collect();
            let est = Estimate::of(&values);
            let sigma = est.std_dev / (EPISODES as f64).sqrt();
            // Absolute slack for rounding in the backward induction; matters when sigma is 0.
            let slack = 1e-9;
            let z = if sigma > 0.0 { (est.mean - bound) / sigma } else if est.mean > bound + slack { f64::INFINITY } else { f64::NEG_INFINITY };
            checks += 1;
            if est.mean > bound + 3.0 * sigma + slack {
                violations += 1;
            }
            if z > worst_z {
                worst_z = z;
                worst = format!("{} on micro instance {k}: {:.4} vs optimum {bound:.4}", agent.label(), est.mean);
            }
        }
    }
    outcome(
        violations == 0,
        format!("{checks} agent/instance pairs, {violations} above optimum + 3 sigma; closest: {worst} (z = {worst_z:.2})"),
    )
}

fn annealer_quality() -> Outcome {
    let c = tsp_oracle_check(100, 8, 40_000, &SaConfig::default());
    outcome(
        c.matched >= 95 && c.non_monotone == 0,
        format!(
            "{}/100 tours match Held-Karp (need 95), {} runs with a rising best-so-far trace, worst gap {:.2e}",
            c.matched, c.non_monotone, c.worst_gap
        ),
    )
}

fn gradients() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..100u64 {
        let mut rng = rng_from_seed(seed);
        let mut sizes = vec![rng.random_range(2..=6)];
        for _ in 0..rng.random_range(1..=3) {
            sizes.push(rng.random_range(3..=10));
        }
        sizes.push(rng.random_range(2..=4));
        worst = worst.max(gradcheck::max_relative_error(&sizes, seed));
    }
    outcome(worst < 1e-4, format!("max relative error {worst:.2e} over 100 random networks (limit 1e-4)"))
}

fn dqn_semantics() -> Outcome {
    let single = |w: [f64; 2]| Mlp::from_layers(vec![Dense { w: ndarray::array![[w[0], w[1]]], b: ndarray::array![0.0, 0.0] }]).unwrap();
    let policy = single([0.2, 0.7]);
    let target = single([0.5, 0.4]);
    let t = Transition { obs: vec![1.0], action: 0, reward: 0.0, next_obs: Some(vec![1.0]) };
    let y = double_dqn_target(&policy, &target, &t, 0.99).unwrap();
    let expected = 0.99 * 0.4;
    let terminal = Transition { next_obs: None, reward: 2.5, ..t.clone() };
    let y_terminal = double_dqn_target(&policy, &target, &terminal, 0.99).unwrap();
    let rewarded = Transition { reward: 1.0, ..t };
    let y_rewarded = double_dqn_target(&policy, &target, &rewarded, 0.5).unwrap();

    let cfg = DqnConfig::default();
    let e0 = epsilon(0, &cfg);
    let e_end = epsilon(1000, &cfg);
    let other = DqnConfig { epsilon_limit: 0.1, epsilon_decay_period: 250.0, ..DqnConfig::default() };
    let e_other = epsilon(250, &other);
    let pass = y == expected
        && (y - 0.396).abs() <= 1e-15
        && y_terminal == 2.5
        && y_rewarded == 1.0 + 0.5 * 0.4
        && e0 == 1.0
        && (e_end - 0.05).abs() <= 1e-12
        && (e_other - 0.1).abs() <= 1e-12;
    outcome(
        pass,
        format!(
            "target {y} (expected 0.99 * 0.4), terminal {y_terminal}, rewarded {y_rewarded}; epsilon(0) = {e0}, epsilon(1000) = {e_end}, epsilon(250; 0.1, 250) = {e_other}"
        ),
    )
}

// ---------------------------------------------------------------------------
// Learning experiments on the scaled clustered preset.

/// Training budget shared by every scaled-preset model.
const TRAIN_EPISODES: usize = 600;
const TRAIN_EVERY: usize = 2;
const TRAIN_SEED: u64 = 11;

fn scaled_source() -> InstanceSource {
    InstanceSource::Preset { name: "scaled-clustered".into(), seed: presets::SCALED_SEED }
}

fn train_spec(obs: ObsConfig) -> TrainSpec {
    TrainSpec {
        instance: scaled_source(),
        dqn: DqnConfig {
            episodes: TRAIN_EPISODES,
            train_every: TRAIN_EVERY,
            epsilon_decay_period: TRAIN_EPISODES as f64 / 3.0,
            validation_scenarios: 20,
            ..DqnConfig::default()
        },
        env: EnvConfig { obs, ..EnvConfig::default() },
        seed: TRAIN_SEED,
        output: None,
    }
}

struct Trained {
    model: Arc<DqnModel>,
    /// Training wall-clock; `None` when loaded from the cache.
    secs: Option<f64>,
}

fn cache_path(spec: &TrainSpec) -> PathBuf {
    use sha2::{Digest, Sha256};
    let key = serde_json::to_string(spec).unwrap() + &presets::SCALED_QUOTA.to_string();
    let digest: String = Sha256::digest(key.as_bytes()).iter().take(8).map(|b| format!("{b:02x}")).collect();
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance-models").join(format!("{digest}.json"))
}

fn train_or_load(spec: TrainSpec) -> Trained {
    let path = cache_path(&spec);
    let retrain = std::env::var("DQVRP_ACCEPTANCE_RETRAIN").is_ok_and(|v| v == "1");
    if !retrain {
        if let Ok(model) = checkpoint::load(&path) {
            return Trained { model: Arc::new(model), secs: None };
        }
    }
    let start = Instant::now();
    let out = harness::train_model(&spec, &mut |_| {}).unwrap();
    let secs = start.elapsed().as_secs_f64();
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    checkpoint::save(&out.model, &path).unwrap();
    std::fs::write(path.with_extension("secs"), secs.to_string()).unwrap();
    Trained { model: Arc::new(out.model), secs: Some(secs) }
}

fn training_secs(t: &Trained, spec: &TrainSpec) -> Option<f64> {
    t.secs.or_else(|| std::fs::read_to_string(cache_path(spec).with_extension("secs")).ok()?.trim().parse().ok())
}

fn noise_settings() -> [(&'static str, ObsConfig); 5] {
    let obs = |s: f64, hidden: bool| ObsConfig { horizon_noise_std_frac: s, horizon_hidden: hidden, ..ObsConfig::default() };
    [("0", obs(0.0, false)), ("0.1", obs(0.1, false)), ("0.2", obs(0.2, false)), ("0.3", obs(0.3, false)), ("hidden", obs(0.0, true))]
}

fn models() -> &'static [(String, Trained, TrainSpec)] {
    static MODELS: OnceLock<Vec<(String, Trained, TrainSpec)>> = OnceLock::new();
    MODELS.get_or_init(|| {
        let mut out = Vec::new();
        for (label, obs) in noise_settings() {
            let spec = train_spec(obs);
            out.push((label.to_string(), train_or_load(spec.clone()), spec));
            if label == "0" && std::env::var("DQVRP_ACCEPTANCE").is_ok_and(|s| !s.split(',').any(|x| x.trim() == "12")) {
                break;
            }
        }
        out
    })
}

fn base_model() -> &'static (String, Trained, TrainSpec) {
    &models()[0]
}

fn scaled_spec() -> ExperimentSpec {
    ExperimentSpec::new(scaled_source(), vec![])
}

fn learning_result() -> Outcome {
    let (_, trained, tspec) = base_model();
    let spec = scaled_spec();
    let instance = spec.instance.load().unwrap();
    let scenarios = spec.test_scenarios(&instance).unwrap();
    let agents = [Agent::Fafs, Agent::DqnVa(trained.model.clone()), Agent::Msa(MsaConfig::default())];
    let eval = harness::evaluate_on(&spec, &instance, &agents, &scenarios, false).unwrap();
    let fafs = eval.summary("FAFS").unwrap().accepted.mean;
    let dqn = eval.summary("DQN-VA").unwrap().accepted.mean;
    let msa = eval.summary("MSA").unwrap().accepted.mean;
    let diff = Estimate::of(&eval.paired("DQN-VA", "FAFS"));
    let served = fafs / instance.horizon as f64;
    let secs = training_secs(trained, tspec);
    let margin = 0.05 * fafs;
    let pass = diff.lower() >= margin && (0.6..=0.8).contains(&served) && secs.is_some_and(|s| s <= 3600.0);
    outcome(
        pass,
        format!(
            "FAFS {fafs:.2} ({:.0}% served), DQN-VA {dqn:.2}, MSA {msa:.2}; paired DQN-VA - FAFS {:+.2} +- {:.2} (need lower bound >= {margin:.2}); training {}",
            100.0 * served,
            diff.mean,
            diff.ci95.unwrap_or(f64::NAN),
            secs.map_or_else(|| "time unknown".into(), |s| format!("{s:.0}s of 3600s")),
        ),
    )
}

fn msa_behavior() -> Outcome {
    let instance = presets::by_name("scaled-clustered", presets::SCALED_SEED).unwrap();
    let env = EnvConfig::default();
    let mut problems = Vec::new();
    let mut total = 0.0;
    for i in 0..5u64 {
        let scenario = sample_scenario(&instance, &mut derived_rng(77, Stream::TestScenario, i));
        let run = || {
            let mut policy = dqvrp::agents::Msa::new(MsaConfig::default()).unwrap();
            run_episode(&instance, &scenario, &mut policy, &env, i, RunOptions { check_every_step: true })
        };
        match (run(), run()) {
            (Ok(a), Ok(b)) => {
                if a.accepted != b.accepted || a.assignment != b.assignment || a.routing != b.routing {
                    problems.push(format!("scenario {i}: runs differ"));
                }
                if let Some(asg) = &a.assignment {
                    if asg.decisions.iter().any(|d| !matches!(d, Decision::Accept | Decision::Reject)) {
                        problems.push(format!("scenario {i}: invalid vote"));
                    }
                }
                total += a.accepted as f64;
            }
            (Err(e), _) | (_, Err(e)) => problems.push(format!("scenario {i}: {e}")),
        }
    }
    outcome(
        problems.is_empty(),
        if problems.is_empty() {
            format!("5 scenarios replayed identically with valid votes, mean Ad {:.1}", total / 5.0)
        } else {
            problems.join("; ")
        },
    )
}

fn timing_ordering() -> Outcome {
    let mut lines = Vec::new();
    let mut pass = true;
    for (preset, n) in [("uniform", 6), ("clustered", 11), ("scaled-clustered", 11), ("realistic", 4)] {
        let mut spec = ExperimentSpec::new(InstanceSource::Preset { name: preset.into(), seed: presets::SCALED_SEED }, vec![]);
        spec.num_test_scenarios = n;
        let instance = spec.instance.load().unwrap();
        let scenarios = spec.test_scenarios(&instance).unwrap();
        let model = if preset == "scaled-clustered" {
            base_model().1.model.clone()
        } else {
            random_model(&instance, ObsConfig::default(), 3)
        };
        let agents = [Agent::DqnVa(model), Agent::Fafs, Agent::Msa(MsaConfig::default())];
        let t = harness::time_on(&spec, &instance, &agents, &scenarios).unwrap();
        let (dqn, fafs, msa) = (t[0].scenario_secs.mean, t[1].scenario_secs.mean, t[2].scenario_secs.mean);
        let ok = dqn < fafs && fafs < msa;
        pass &= ok;
        lines.push(format!("{preset}: DQN-VA {dqn:.3}s, FAFS {fafs:.3}s, MSA {msa:.3}s{}", if ok { "" } else { " (out of order)" }));
    }
    outcome(pass, lines.join("; "))
}

fn dod_sweep() -> Outcome {
    let (_, trained, _) = base_model();
    let mut spec = ExperimentSpec::new(
        InstanceSource::Preset { name: "scaled-clustered-dod".into(), seed: presets::SCALED_SEED },
        vec![],
    );
    spec.dod = vec![0.2, 0.4, 0.6, 0.8, 1.0];
    let sweep = harness::sweep_dod(&spec, &Agent::DqnVa(trained.model.clone())).unwrap();
    let offline: Vec<Vec<f64>> = sweep.iter().map(|(_, e)| e.accepted("Offline")).collect();
    let offline_constant = offline.windows(2).all(|w| w[0] == w[1]);
    let fafs_at = |d: f64| sweep.iter().find(|(x, _)| *x == d).unwrap().1.accepted("FAFS");
    let diff = Estimate::of(&dqvrp::harness::stats::paired_differences(&fafs_at(1.0), &fafs_at(0.2)));
    let failures: usize = sweep.iter().map(|(_, e)| e.records.iter().filter(|r| r.offline_failure).count()).sum();
    let curve: Vec<String> = sweep
        .iter()
        .map(|(d, e)| {
            let m = |a: &str| e.summary(a).map_or(f64::NAN, |s| s.accepted.mean);
            format!("{d}: FAFS {:.2} Offline {:.2} DQN-VA {:.2} forced {:.2}", m("FAFS"), m("Offline"), m("DQN-VA"), m("DQN-VA-forced-dynamic"))
        })
        .collect();
    outcome(
        offline_constant && diff.upper() <= 0.0,
        format!(
            "Offline constant across DoD: {offline_constant}; FAFS(1) - FAFS(0.2) = {:+.2} +- {:.2}; {failures} unservable prefixes; {}",
            diff.mean,
            diff.ci95.unwrap_or(f64::NAN),
            curve.join(" | ")
        ),
    )
}

fn noise_degradation() -> Outcome {
    let trained = models();
    let spec = scaled_spec();
    let noise_models: Vec<NoiseModel> =
        trained.iter().map(|(label, t, _)| NoiseModel { label: label.clone(), agent: Agent::DqnVa(t.model.clone()) }).collect();
    let eval = harness::sweep_horizon_noise(&spec, &noise_models).unwrap();
    let means: Vec<String> = noise_models
        .iter()
        .map(|m| format!("{} {:.2}", m.label, eval.summary(&format!("DQN-VA[{}]", m.label)).unwrap().accepted.mean))
        .collect();
    let diff = Estimate::of(&eval.paired("DQN-VA[0]", "DQN-VA[hidden]"));
    outcome(
        diff.lower() >= 0.0,
        format!(
            "mean Ad by horizon noise: {}; FAFS {:.2}; paired sigma 0 - hidden {:+.2} +- {:.2} (need lower bound >= 0)",
            means.join(", "),
            eval.summary("FAFS").unwrap().accepted.mean,
            diff.mean,
            diff.ci95.unwrap_or(f64::NAN)
        ),
    )
}
