mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgMatches, Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use dqvrp::agents::OfflineConfig;
use dqvrp::env::{EnvConfig, ObsConfig};
use dqvrp::generate::{generate, presets, GeneratorConfig};
use dqvrp::harness::report::{self, write_curve, write_run};
use dqvrp::harness::{
    self, offline_oracle_check, tsp_oracle_check, Agent, AgentSpec, Evaluation, ExperimentSpec, InstanceSource, NoiseModel,
    TrainSpec,
};
use dqvrp::io::{write_instance, ScenarioFile};
use dqvrp::nn::DqnConfig;
use dqvrp::routing::SaConfig;
use dqvrp::{Error, Result};

/// Exit code for an invalid configuration.
const EXIT_CONFIG: u8 = 2;
/// Exit code when most runs could not serve their known prefix.
const EXIT_OFFLINE_FAILURE: u8 = 3;

#[derive(Parser)]
#[command(name = "dqvrp", version, about = "Dynamic vehicle routing with an emission quota: agents, training and experiments")]
struct Cli {
    /// Log level filter (error, warn, info, debug, trace).
    #[arg(long, global = true, default_value = "info")]
    log: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a generated instance (and optionally sampled scenarios) to JSON.
    Generate(GenerateArgs),
    /// Train a DQN-VA model.
    Train(TrainArgs),
    /// Evaluate agents on paired test scenarios.
    Evaluate(EvaluateArgs),
    /// Evaluate FAFS, Offline and a DQN-VA model across degrees of dynamism.
    SweepDod(SweepDodArgs),
    /// Compare models trained under different horizon-noise settings.
    SweepNoise(SweepNoiseArgs),
    /// Time agents per scenario.
    Time(TimeArgs),
    /// Compare the offline agent and the routing annealer against exact oracles.
    OracleCheck(OracleArgs),
    /// Recompute summaries, plot tables and SVGs for a run directory.
    Report(ReportArgs),
}

#[derive(Args, Clone)]
struct InstanceArgs {
    /// Preset name: uniform, clustered, scaled-clustered, scaled-clustered-dod, realistic.
    #[arg(long, default_value = "scaled-clustered", conflicts_with = "instance")]
    preset: String,
    /// Seed of the preset generator.
    #[arg(long, default_value_t = presets::SCALED_SEED)]
    instance_seed: u64,
    /// Instance JSON file instead of a preset.
    #[arg(long)]
    instance: Option<PathBuf>,
}

impl InstanceArgs {
    fn source(&self) -> InstanceSource {
        match &self.instance {
            Some(path) => InstanceSource::File { path: path.clone() },
            None => InstanceSource::Preset { name: self.preset.clone(), seed: self.instance_seed },
        }
    }
}

const INSTANCE_FLAGS: [(&str, &str); 3] = [("preset", "instance"), ("instance_seed", "instance"), ("instance", "instance")];

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, default_value = "scaled-clustered")]
    preset: String,
    #[arg(long, default_value_t = presets::SCALED_SEED)]
    seed: u64,
    /// Generator configuration file (JSON or TOML); wins over flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Instance output path.
    #[arg(long)]
    out: PathBuf,
    /// Also sample this many test scenarios.
    #[arg(long, default_value_t = 0)]
    scenarios: usize,
    #[arg(long, default_value_t = 0)]
    scenario_seed: u64,
    #[arg(long)]
    scenarios_out: Option<PathBuf>,
}

#[derive(Args)]
struct EnvArgs {
    /// Annealing iterations per dynamic insertion.
    #[arg(long)]
    dynamic_sa_iterations: Option<usize>,
    /// Annealing iterations for routing the known prefix.
    #[arg(long)]
    offline_sa_iterations: Option<usize>,
}

impl EnvArgs {
    fn apply(&self, env: &mut EnvConfig) {
        if let Some(n) = self.dynamic_sa_iterations {
            env.dynamic_sa = SaConfig::with_iterations(n);
        }
        if let Some(n) = self.offline_sa_iterations {
            env.offline_sa = SaConfig::with_iterations(n);
        }
    }
}

const ENV_FLAGS: [(&str, &str); 2] =
    [("dynamic_sa_iterations", "env.dynamic_sa.max_iterations"), ("offline_sa_iterations", "env.offline_sa.max_iterations")];

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[command(flatten)]
    env: EnvArgs,
    /// Training configuration file (JSON or TOML); wins over flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    episodes: Option<usize>,
    /// Comma-separated hidden widths, e.g. 512,512,512.
    #[arg(long, value_delimiter = ',')]
    hidden: Option<Vec<usize>>,
    #[arg(long)]
    train_every: Option<usize>,
    /// Episodes for epsilon to reach its limit.
    #[arg(long)]
    decay_period: Option<f64>,
    /// Relative standard deviation of the horizon estimate.
    #[arg(long, default_value_t = 0.0)]
    horizon_noise: f64,
    /// Remove the remaining-steps feature.
    #[arg(long)]
    horizon_hidden: bool,
    /// Stop after this many seconds.
    #[arg(long)]
    time_budget: Option<f64>,
    /// Checkpoint output path.
    #[arg(long, default_value = "model.json")]
    out: PathBuf,
    /// Directory for the learning curve.
    #[arg(long)]
    run_dir: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct EvalCommon {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Experiment configuration file (JSON or TOML); wins over flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of paired test scenarios.
    #[arg(long, default_value_t = 100)]
    scenarios: usize,
    /// Base seed of the test scenarios.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Scenarios evaluated concurrently.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Run directory for CSV/JSON outputs.
    #[arg(long)]
    out: Option<PathBuf>,
}

const COMMON_FLAGS: [(&str, &str); 4] =
    [("scenarios", "num_test_scenarios"), ("seed", "base_seed"), ("workers", "workers"), ("out", "output_dir")];

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    common: EvalCommon,
    #[command(flatten)]
    env: EnvArgs,
    /// Agents: fafs, random-oa, random-va, msa[:N], offline, dqn-va:PATH,
    /// dqn-va-as-oa:PATH, dqn-va-forced-dynamic:PATH.
    #[arg(long = "agent", value_delimiter = ',', default_values = ["fafs", "offline"])]
    agents: Vec<AgentSpec>,
}

#[derive(Args)]
struct SweepDodArgs {
    #[command(flatten)]
    common: EvalCommon,
    #[command(flatten)]
    env: EnvArgs,
    /// Model trained at DoD 1.
    #[arg(long)]
    model: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = [0.2, 0.4, 0.6, 0.8, 1.0])]
    dod: Vec<f64>,
}

#[derive(Args)]
struct SweepNoiseArgs {
    #[command(flatten)]
    common: EvalCommon,
    #[command(flatten)]
    env: EnvArgs,
    /// LABEL=PATH of a model; repeat for each noise setting.
    #[arg(long = "model", required = true)]
    models: Vec<String>,
}

#[derive(Args)]
struct TimeArgs {
    #[command(flatten)]
    common: EvalCommon,
    #[command(flatten)]
    env: EnvArgs,
    #[arg(long = "agent", value_delimiter = ',', default_values = ["fafs", "msa"])]
    agents: Vec<AgentSpec>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, default_value_t = 100)]
    instances: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ReportArgs {
    /// Run directory written by evaluate or a sweep.
    dir: PathBuf,
    /// Skip SVG rendering.
    #[arg(long)]
    no_svg: bool,
}

/// A failed command and the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if matches!(e, Error::Config(_) | Error::Checkpoint(_)) { EXIT_CONFIG } else { 1 };
        Self { code, message: e.to_string() }
    }
}

type CmdResult = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    let matches = Cli::command().get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    env_logger::Builder::new().parse_filters(&cli.log).format_timestamp(None).init();
    let (_, sub) = matches.subcommand().expect("a subcommand is required");
    let result = match &cli.command {
        Command::Generate(a) => cmd_generate(a, sub),
        Command::Train(a) => cmd_train(a, sub),
        Command::Evaluate(a) => cmd_evaluate(a, sub),
        Command::SweepDod(a) => cmd_sweep_dod(a, sub),
        Command::SweepNoise(a) => cmd_sweep_noise(a, sub),
        Command::Time(a) => cmd_time(a, sub),
        Command::OracleCheck(a) => cmd_oracle(a),
        Command::Report(a) => cmd_report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn cmd_generate(a: &GenerateArgs, m: &ArgMatches) -> CmdResult {
    let instance = match &a.config {
        Some(path) => {
            for id in ["preset", "seed"] {
                if m.value_source(id) == Some(clap::parser::ValueSource::CommandLine) {
                    log::warn!("--{id} is ignored; the generator configuration comes from {}", path.display());
                }
            }
            let cfg: GeneratorConfig = serde_json::from_value(config::load(path)?)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            generate(&cfg)?
        }
        None => presets::by_name(&a.preset, a.seed)?,
    };
    write_instance(&a.out, &instance)?;
    println!("wrote {} ({} destinations, {} vehicles, H = {})", a.out.display(), instance.num_destinations(), instance.num_vehicles(), instance.horizon);
    if a.scenarios > 0 {
        let out = a.scenarios_out.clone().unwrap_or_else(|| a.out.with_extension("scenarios.json"));
        let scenarios = harness::test_scenarios(&instance, a.scenario_seed, a.scenarios)?;
        ScenarioFile { seed: Some(a.scenario_seed), scenarios }.write(&out)?;
        println!("wrote {} ({} scenarios)", out.display(), a.scenarios);
    }
    Ok(())
}

fn cmd_train(a: &TrainArgs, m: &ArgMatches) -> CmdResult {
    let mut dqn = DqnConfig::default();
    if let Some(e) = a.episodes {
        dqn.episodes = e;
    }
    if a.hidden.is_some() {
        dqn.hidden = a.hidden.clone();
    }
    if let Some(t) = a.train_every {
        dqn.train_every = t;
    }
    if let Some(d) = a.decay_period {
        dqn.epsilon_decay_period = d;
    }
    dqn.time_budget_secs = a.time_budget;
    let mut env = EnvConfig {
        obs: ObsConfig { horizon_noise_std_frac: a.horizon_noise, horizon_hidden: a.horizon_hidden, ..ObsConfig::default() },
        ..EnvConfig::default()
    };
    a.env.apply(&mut env);
    let spec = TrainSpec { instance: a.instance.source(), dqn, env, seed: a.seed, output: Some(a.out.clone()) };
    let mut flags = vec![
        ("seed", "seed"),
        ("episodes", "dqn.episodes"),
        ("hidden", "dqn.hidden"),
        ("train_every", "dqn.train_every"),
        ("decay_period", "dqn.epsilon_decay_period"),
        ("horizon_noise", "env.obs.horizon_noise_std_frac"),
        ("horizon_hidden", "env.obs.horizon_hidden"),
        ("time_budget", "dqn.time_budget_secs"),
        ("out", "output"),
    ];
    flags.extend(INSTANCE_FLAGS);
    flags.extend(ENV_FLAGS);
    let spec: TrainSpec = config::merge(spec, a.config.as_deref(), m, &flags)?;
    log::info!("training for up to {} episodes", spec.dqn.episodes);
    let out = harness::train_model(&spec, &mut |p| {
        log::info!(
            "episode {:>5}  epsilon {:.3}  validation {:.2}  train return {:.2}  loss {}  {:.0}s",
            p.episode,
            p.epsilon,
            p.validation_mean,
            p.train_return_mean,
            p.mean_loss.map_or_else(|| "-".into(), |l| format!("{l:.4}")),
            p.elapsed_secs
        );
    })?;
    if let Some(dir) = &a.run_dir {
        std::fs::create_dir_all(dir).map_err(Error::from)?;
        write_curve(&dir.join(report::CURVE), &out.curve)?;
        std::fs::write(dir.join("train_spec.json"), serde_json::to_string_pretty(&spec).map_err(Error::from)?).map_err(Error::from)?;
    }
    println!(
        "trained {} episodes ({} gradient steps, {:.0}s); best validation {:.2}; saved {}",
        out.episodes_run,
        out.gradient_steps,
        out.elapsed_secs,
        out.best_validation,
        spec.output.as_deref().unwrap_or(Path::new("-")).display()
    );
    Ok(())
}

fn experiment(common: &EvalCommon, env: &EnvArgs, agents: Vec<AgentSpec>, dod: &[f64], m: &ArgMatches, extra: &[(&str, &str)]) -> Result<ExperimentSpec> {
    let mut spec = ExperimentSpec::new(common.instance.source(), agents);
    spec.dod = dod.to_vec();
    spec.num_test_scenarios = common.scenarios;
    spec.base_seed = common.seed;
    spec.workers = common.workers;
    spec.output_dir = common.out.clone();
    env.apply(&mut spec.env);
    let mut flags: Vec<(&str, &str)> = COMMON_FLAGS.to_vec();
    flags.extend(INSTANCE_FLAGS);
    flags.extend(ENV_FLAGS);
    flags.extend(extra);
    let spec: ExperimentSpec = config::merge(spec, common.config.as_deref(), m, &flags)?;
    spec.validate()?;
    Ok(spec)
}

fn print_evaluation(title: &str, eval: &Evaluation) {
    println!("{title}");
    println!("{:<26} {:>9} {:>9} {:>11} {:>13} {:>9}", "agent", "mean Ad", "ci95", "vs FAFS", "step time", "failures");
    for s in &eval.summaries {
        let ci = s.accepted.ci95.map_or_else(|| "n/a".into(), |c| format!("{c:.2}"));
        let imp = s.improvement_over_fafs.map_or_else(|| "-".into(), |e| format!("{:+.2}", e.mean));
        println!(
            "{:<26} {:>9.2} {:>9} {:>11} {:>12.4}s {:>9}",
            s.agent, s.accepted.mean, ci, imp, s.step_secs.mean, s.offline_failures
        );
    }
}

fn finish_run(spec: &ExperimentSpec, evals: &[&Evaluation]) -> CmdResult {
    let dir = report::run_dir(spec);
    write_run(&dir, spec, evals)?;
    report::report(&dir, true)?;
    println!("run directory: {}", dir.display());
    if evals.iter().any(|e| e.offline_failure_dominated()) {
        return Err(Failure {
            code: EXIT_OFFLINE_FAILURE,
            message: "most runs could not serve their known prefix; results are dominated by offline failures".into(),
        });
    }
    Ok(())
}

fn cmd_evaluate(a: &EvaluateArgs, m: &ArgMatches) -> CmdResult {
    let spec = experiment(&a.common, &a.env, a.agents.clone(), &[], m, &[("agents", "agents")])?;
    let eval = harness::evaluate(&spec)?;
    print_evaluation(&format!("{} scenarios", spec.num_test_scenarios), &eval);
    finish_run(&spec, &[&eval])
}

fn cmd_sweep_dod(a: &SweepDodArgs, m: &ArgMatches) -> CmdResult {
    let agent = AgentSpec::DqnVa { model: a.model.clone() };
    let spec = experiment(&a.common, &a.env, vec![agent.clone()], &a.dod, m, &[("dod", "dod")])?;
    let model = Agent::from_spec(&agent)?;
    let sweep = harness::sweep_dod(&spec, &model)?;
    for (dod, eval) in &sweep {
        print_evaluation(&format!("DoD {dod}"), eval);
    }
    let evals: Vec<&Evaluation> = sweep.iter().map(|(_, e)| e).collect();
    finish_run(&spec, &evals)
}

fn cmd_sweep_noise(a: &SweepNoiseArgs, m: &ArgMatches) -> CmdResult {
    let mut models = Vec::new();
    let mut specs = Vec::new();
    for entry in &a.models {
        let (label, path) = entry
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--model expects LABEL=PATH, got `{entry}`")))?;
        let spec = AgentSpec::DqnVa { model: path.into() };
        models.push(NoiseModel { label: label.to_string(), agent: Agent::from_spec(&spec)? });
        specs.push(spec);
    }
    let spec = experiment(&a.common, &a.env, specs, &[], m, &[])?;
    let eval = harness::sweep_horizon_noise(&spec, &models)?;
    print_evaluation("horizon-noise sweep", &eval);
    finish_run(&spec, &[&eval])
}

fn cpu_model() -> String {
    std::fs::read_to_string("/proc/cpuinfo")
        .ok()
        .and_then(|t| t.lines().find(|l| l.starts_with("model name")).and_then(|l| l.split(':').nth(1)).map(|s| s.trim().to_string()))
        .unwrap_or_else(|| std::env::consts::ARCH.to_string())
}

fn cmd_time(a: &TimeArgs, m: &ArgMatches) -> CmdResult {
    let spec = experiment(&a.common, &a.env, a.agents.clone(), &[], m, &[("agents", "agents")])?;
    let timings = harness::time_agents(&spec)?;
    println!("CPU: {} ({} threads available)", cpu_model(), std::thread::available_parallelism().map_or(1, |n| n.get()));
    println!("{:<26} {:>14} {:>12}", "agent", "secs/scenario", "ci95");
    for t in &timings {
        let ci = t.scenario_secs.ci95.map_or_else(|| "n/a".into(), |c| format!("{c:.4}"));
        println!("{:<26} {:>14.4} {:>12}", t.agent, t.scenario_secs.mean, ci);
    }
    Ok(())
}

fn cmd_oracle(a: &OracleArgs) -> CmdResult {
    let off = offline_oracle_check(a.instances, a.seed, &OfflineConfig::default())?;
    println!("offline agent vs exhaustive search: {}/{} optimal, {} above the optimum", off.matched, off.instances, off.exceeded);
    for (seed, got, opt) in &off.mismatches {
        println!("  instance seed {seed}: offline {got}, optimum {opt}");
    }
    let tsp = tsp_oracle_check(a.instances, 8, a.seed, &SaConfig::default());
    println!(
        "single-route annealing vs Held-Karp (8 stops): {}/{} exact, {} non-monotone traces, worst gap {:.2e}",
        tsp.matched, tsp.instances, tsp.non_monotone, tsp.worst_gap
    );
    if off.exceeded > 0 || tsp.non_monotone > 0 {
        return Err(Failure { code: 1, message: "oracle invariants violated".into() });
    }
    Ok(())
}

fn cmd_report(a: &ReportArgs) -> CmdResult {
    let summary = report::report(&a.dir, !a.no_svg)?;
    for s in &summary.slices {
        println!("DoD {} horizon noise {}", s.dod, s.horizon_noise);
        for ag in &s.agents {
            let ci = ag.accepted.ci95.map_or_else(|| "n/a".into(), |c| format!("{c:.2}"));
            println!("  {:<26} {:>8.2} +- {}", ag.agent, ag.accepted.mean, ci);
        }
    }
    println!("wrote {}", summary.files.join(", "));
    Ok(())
}
