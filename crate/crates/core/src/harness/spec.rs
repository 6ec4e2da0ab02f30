use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::agents::{Fafs, Msa, MsaConfig, OfflineConfig, Policy, RandomPolicy};
use crate::env::EnvConfig;
use crate::error::{Error, Result};
use crate::generate::{generate, presets, sample_full_scenario, GeneratorConfig};
use crate::io::read_instance;
use crate::model::{AssignmentKind, Instance, Scenario};
use crate::nn::{checkpoint, DqnConfig, DqnModel, DqnVa, DqnVaAsOa};
use crate::rng::{derive_seed, derived_rng, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "source")]
pub enum InstanceSource {
    Preset { name: String, seed: u64 },
    File { path: PathBuf },
    Generator { config: GeneratorConfig },
}

impl InstanceSource {
    pub fn load(&self) -> Result<Instance> {
        match self {
            Self::Preset { name, seed } => presets::by_name(name, *seed),
            Self::File { path } => read_instance(path),
            Self::Generator { config } => generate(config),
        }
    }
}

/// An agent as named on the command line or in a config file.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "agent")]
pub enum AgentSpec {
    Fafs,
    RandomOa,
    RandomVa,
    Msa {
        #[serde(default = "default_msa_scenarios")]
        num_scenarios: usize,
    },
    Offline,
    DqnVa { model: PathBuf },
    DqnVaAsOa { model: PathBuf },
    /// DQN-VA that also decides the known prefix when DoD > 0.6.
    DqnVaForcedDynamic { model: PathBuf },
}

fn default_msa_scenarios() -> usize {
    MsaConfig::default().num_scenarios
}

impl AgentSpec {
    pub fn label(&self) -> String {
        match self {
            Self::Fafs => "FAFS".into(),
            Self::RandomOa => "Random-OA".into(),
            Self::RandomVa => "Random-VA".into(),
            Self::Msa { .. } => "MSA".into(),
            Self::Offline => "Offline".into(),
            Self::DqnVa { .. } => "DQN-VA".into(),
            Self::DqnVaAsOa { .. } => "DQN-VAasOA".into(),
            Self::DqnVaForcedDynamic { .. } => "DQN-VA-forced-dynamic".into(),
        }
    }

    pub fn model_path(&self) -> Option<&Path> {
        match self {
            Self::DqnVa { model } | Self::DqnVaAsOa { model } | Self::DqnVaForcedDynamic { model } => Some(model),
            _ => None,
        }
    }
}

/// `fafs`, `random-oa`, `random-va`, `msa[:N]`, `offline`, `dqn-va:PATH`,
/// `dqn-va-as-oa:PATH`, `dqn-va-forced-dynamic:PATH`.
impl FromStr for AgentSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let model = || {
            arg.map(PathBuf::from).ok_or_else(|| Error::Config(format!("agent `{name}` needs a model path (`{name}:PATH`)")))
        };
        Ok(match name.to_ascii_lowercase().as_str() {
            "fafs" => Self::Fafs,
            "random-oa" => Self::RandomOa,
            "random-va" => Self::RandomVa,
            "msa" => Self::Msa {
                num_scenarios: match arg {
                    Some(n) => n.parse().map_err(|_| Error::Config(format!("bad MSA scenario count `{n}`")))?,
                    None => default_msa_scenarios(),
                },
            },
            "offline" => Self::Offline,
            "dqn-va" => Self::DqnVa { model: model()? },
            "dqn-va-as-oa" => Self::DqnVaAsOa { model: model()? },
            "dqn-va-forced-dynamic" => Self::DqnVaForcedDynamic { model: model()? },
            _ => return Err(Error::Config(format!("unknown agent `{s}`"))),
        })
    }
}

/// A constructed agent, with models loaded.
#[derive(Debug, Clone)]
pub enum Agent {
    Fafs,
    Random(AssignmentKind),
    Msa(MsaConfig),
    Offline,
    DqnVa(Arc<DqnModel>),
    DqnVaAsOa(Arc<DqnModel>),
    DqnVaForcedDynamic(Arc<DqnModel>),
}

impl Agent {
    pub fn from_spec(spec: &AgentSpec) -> Result<Self> {
        let load = |p: &Path| -> Result<Arc<DqnModel>> {
            if !p.exists() {
                return Err(Error::Config(format!("model checkpoint {} does not exist", p.display())));
            }
            checkpoint::load(p).map(Arc::new)
        };
        Ok(match spec {
            AgentSpec::Fafs => Self::Fafs,
            AgentSpec::RandomOa => Self::Random(AssignmentKind::Omission),
            AgentSpec::RandomVa => Self::Random(AssignmentKind::Vehicle),
            AgentSpec::Msa { num_scenarios } => {
                let cfg = MsaConfig { num_scenarios: *num_scenarios };
                Msa::new(cfg)?;
                Self::Msa(cfg)
            }
            AgentSpec::Offline => Self::Offline,
            AgentSpec::DqnVa { model } => Self::DqnVa(load(model)?),
            AgentSpec::DqnVaAsOa { model } => Self::DqnVaAsOa(load(model)?),
            AgentSpec::DqnVaForcedDynamic { model } => Self::DqnVaForcedDynamic(load(model)?),
        })
    }

    pub fn label(&self) -> String {
        match self {
            Self::Fafs => "FAFS".into(),
            Self::Random(AssignmentKind::Omission) => "Random-OA".into(),
            Self::Random(AssignmentKind::Vehicle) => "Random-VA".into(),
            Self::Msa(_) => "MSA".into(),
            Self::Offline => "Offline".into(),
            Self::DqnVa(_) => "DQN-VA".into(),
            Self::DqnVaAsOa(_) => "DQN-VAasOA".into(),
            Self::DqnVaForcedDynamic(_) => "DQN-VA-forced-dynamic".into(),
        }
    }

    pub fn model(&self) -> Option<&Arc<DqnModel>> {
        match self {
            Self::DqnVa(m) | Self::DqnVaAsOa(m) | Self::DqnVaForcedDynamic(m) => Some(m),
            _ => None,
        }
    }

    /// A fresh online policy; `None` for the offline agent.
    pub fn policy(&self) -> Option<Box<dyn Policy>> {
        Some(match self {
            Self::Fafs => Box::new(Fafs),
            Self::Random(kind) => Box::new(RandomPolicy { kind: *kind }),
            Self::Msa(cfg) => Box::new(Msa::new(*cfg).expect("validated at construction")),
            Self::Offline => return None,
            Self::DqnVa(m) | Self::DqnVaForcedDynamic(m) => Box::new(DqnVa { model: m.clone() }),
            Self::DqnVaAsOa(m) => Box::new(DqnVaAsOa { model: m.clone() }),
        })
    }

    /// Environment settings this agent runs under for `instance`.
    pub fn env_config(&self, base: &EnvConfig, instance: &Instance) -> EnvConfig {
        let mut cfg = *base;
        if let Some(m) = self.model() {
            cfg.obs = m.obs;
        }
        if matches!(self, Self::DqnVaForcedDynamic(_)) {
            cfg.prefix_as_dynamic = instance.dod > FORCED_DYNAMIC_DOD;
        }
        cfg
    }
}

/// DoD above which the forced-dynamic DQN variant decides the known prefix itself.
pub const FORCED_DYNAMIC_DOD: f64 = 0.6;

fn default_scenarios() -> usize {
    100
}

fn default_workers() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub instance: InstanceSource,
    pub agents: Vec<AgentSpec>,
    #[serde(default = "default_scenarios")]
    pub num_test_scenarios: usize,
    /// Scenario `i` is drawn from `(base_seed, test stream, i)`; training
    /// scenarios come from a different stream, so the sets never share seeds.
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub dod: Vec<f64>,
    #[serde(default)]
    pub horizon_noise: Vec<f64>,
    #[serde(default)]
    pub env: EnvConfig,
    #[serde(default)]
    pub offline: OfflineConfig,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Scenarios evaluated concurrently.
    #[serde(default = "default_workers")]
    pub workers: usize,
}

impl ExperimentSpec {
    pub fn new(instance: InstanceSource, agents: Vec<AgentSpec>) -> Self {
        Self {
            instance,
            agents,
            num_test_scenarios: default_scenarios(),
            base_seed: 0,
            dod: Vec::new(),
            horizon_noise: Vec::new(),
            env: EnvConfig::default(),
            offline: OfflineConfig::default(),
            output_dir: None,
            workers: default_workers(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.agents.is_empty() {
            return Err(Error::Config("no agents to evaluate".into()));
        }
        self.validate_settings()
    }

    /// Everything [`Self::validate`] checks except the agent list, for sweeps
    /// that choose their own agents.
    pub fn validate_settings(&self) -> Result<()> {
        if self.num_test_scenarios == 0 {
            return Err(Error::Config("num_test_scenarios must be positive".into()));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be positive".into()));
        }
        if let Some(d) = self.dod.iter().find(|d| !(0.0..=1.0).contains(*d)) {
            return Err(Error::Config(format!("DoD {d} outside [0, 1]")));
        }
        if let Some(s) = self.horizon_noise.iter().find(|s| !(**s >= 0.0)) {
            return Err(Error::Config(format!("horizon noise {s} must be non-negative")));
        }
        self.env.obs.validate()?;
        self.env.offline_sa.validate()?;
        self.env.dynamic_sa.validate()?;
        self.offline.sa.validate()?;
        // Missing checkpoints are configuration errors, reported before any run.
        for a in &self.agents {
            if let Some(p) = a.model_path() {
                if !p.exists() {
                    return Err(Error::Config(format!("{}: model checkpoint {} does not exist", a.label(), p.display())));
                }
            }
        }
        Ok(())
    }

    pub fn test_scenarios(&self, instance: &Instance) -> Result<Vec<Scenario>> {
        test_scenarios(instance, self.base_seed, self.num_test_scenarios)
    }

    /// Hash over every parameter that changes results; output location and
    /// worker count are excluded.
    pub fn config_hash(&self) -> String {
        let mut v = serde_json::to_value(self).expect("spec serializes");
        let obj = v.as_object_mut().expect("spec is an object");
        obj.remove("output_dir");
        obj.remove("workers");
        hex_sha256(v.to_string().as_bytes())
    }
}

pub fn test_scenarios(instance: &Instance, base_seed: u64, n: usize) -> Result<Vec<Scenario>> {
    scenarios(instance, base_seed, Stream::TestScenario, n)
}

/// `n` scenarios of `stream`, drawn with their quantities in heterogeneous mode.
pub fn scenarios(instance: &Instance, base_seed: u64, stream: Stream, n: usize) -> Result<Vec<Scenario>> {
    (0..n as u64).map(|i| sample_full_scenario(instance, &mut derived_rng(base_seed, stream, i))).collect()
}

/// Everything needed to train one DQN-VA model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSpec {
    pub instance: InstanceSource,
    #[serde(default)]
    pub dqn: DqnConfig,
    #[serde(default)]
    pub env: EnvConfig,
    #[serde(default)]
    pub seed: u64,
    /// Checkpoint destination.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl TrainSpec {
    /// Training and validation scenarios; both streams differ from the test stream.
    pub fn scenarios(&self, instance: &Instance) -> Result<(Vec<Scenario>, Vec<Scenario>)> {
        Ok((
            scenarios(instance, self.seed, Stream::TrainScenario, self.dqn.train_scenarios)?,
            scenarios(instance, self.seed, Stream::ValidationScenario, self.dqn.validation_scenarios)?,
        ))
    }
}

/// Episode seed of test scenario `i`.
pub fn episode_seed(base_seed: u64, i: usize) -> u64 {
    derive_seed(base_seed, Stream::Episode, i as u64)
}

pub(crate) fn hex_sha256(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
