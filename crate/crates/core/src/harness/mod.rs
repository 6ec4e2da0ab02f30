//! Experiment pipelines: paired evaluation, sweeps, timing and reports.

mod checks;
mod eval;
pub mod report;
mod spec;
pub mod stats;

pub use eval::{
    evaluate, evaluate_on, run_agent, summarize, sweep_dod, sweep_horizon_noise, time_agents, time_on, train_model, AgentSummary, Evaluation,
    NoiseModel, RunRecord, Timing,
};
pub use spec::{episode_seed, scenarios, test_scenarios, TrainSpec, Agent, AgentSpec, ExperimentSpec, InstanceSource, FORCED_DYNAMIC_DOD};
pub use checks::{offline_oracle_check, tsp_instance, tsp_oracle_check, OfflineCheck, TspCheck};
pub use stats::Estimate;
