//! Run configuration: TOML config files, flag overrides, validation, and run
//! manifests.
//!
//! Configs are TOML with sections `[scenario]`, `[nsl]`, `[classical]`, and
//! `[output]`. Every effective value is written back into the run manifest,
//! so `nsl run --config <out>/manifest.toml` reproduces the run.

use std::path::{Path, PathBuf};

use nsl_core::driver::NslConfig;
use nsl_core::network::{ActivationKind, NetworkSpec};
use nsl_core::sampling::AdaptiveConfig;
use nsl_core::scenarios::{self, Scenario, ScenarioOptions};
use serde::{Deserialize, Serialize};

#[derive(Debug)]
pub enum ConfigError {
    Missing(String),
    Invalid(String),
    Io(String),
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigError::Missing(key) => write!(f, "missing required key: {key}"),
            ConfigError::Invalid(msg) => write!(f, "invalid config: {msg}"),
            ConfigError::Io(msg) => write!(f, "config i/o: {msg}"),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub scenario: ScenarioSection,
    #[serde(default)]
    pub nsl: NslSection,
    #[serde(default)]
    pub classical: ClassicalSection,
    #[serde(default)]
    pub output: OutputSection,
    /// Written by the runner; ignored on load.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<ManifestSection>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub name: Option<String>,
    pub dim: Option<usize>,
    pub sigma: Option<f64>,
    pub t_final: Option<f64>,
    pub nu: Option<f64>,
    pub advection: Option<f64>,
    /// "nsl" (default) or "classical".
    pub solver: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NslSection {
    pub seed: Option<u64>,
    pub n_t: Option<usize>,
    pub layers: Option<Vec<usize>>,
    pub activation: Option<String>,
    pub learning_rate: Option<f64>,
    pub epochs_init: Option<usize>,
    pub epochs_iter: Option<usize>,
    pub collocation: Option<usize>,
    pub natural_gradient: Option<bool>,
    pub adaptive: Option<bool>,
    pub adaptive_sigmas: Option<[f64; 3]>,
    pub resample_each_epoch: Option<bool>,
    pub n_tau: Option<usize>,
    pub stop_loss: Option<f64>,
    pub error_probes: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalSection {
    pub n_x: Option<usize>,
    pub mem_cap: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<String>,
    pub threads: Option<usize>,
    pub checkpoints: Option<bool>,
    /// Write timing columns as zero so reruns are byte-identical.
    pub deterministic_timing: Option<bool>,
    /// Evaluate errors at every step time instead of only the final time.
    pub eval_each_step: Option<bool>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestSection {
    pub command: String,
    pub scenario_hash: String,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| ConfigError::Invalid(e.to_string()))
    }
}

/// Flag-level overrides shared by the subcommands.
#[derive(Debug, Clone, Default)]
pub struct FlagOverrides {
    pub scenario: Option<String>,
    pub dim: Option<usize>,
    pub n_t: Option<usize>,
    pub n_x: Option<usize>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
}

/// Which solver a run drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Nsl,
    Classical,
}

/// Fully resolved run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub file: FileConfig,
    pub scenario_name: String,
    pub dim: usize,
    pub seed: u64,
    pub solver: SolverKind,
    pub n_x: usize,
    pub mem_cap: usize,
    pub out_dir: PathBuf,
    pub threads: usize,
    pub checkpoints: bool,
    pub deterministic_timing: bool,
    pub eval_each_step: bool,
    pub error_probes: usize,
}

impl RunConfig {
    /// Merges config file and flags, validates, and resolves defaults.
    pub fn resolve(mut file: FileConfig, flags: &FlagOverrides) -> Result<Self, ConfigError> {
        if let Some(s) = &flags.scenario {
            file.scenario.name = Some(s.clone());
        }
        if let Some(d) = flags.dim {
            file.scenario.dim = Some(d);
        }
        if let Some(n) = flags.n_t {
            file.nsl.n_t = Some(n);
        }
        if let Some(n) = flags.n_x {
            file.classical.n_x = Some(n);
        }
        if let Some(s) = flags.seed {
            file.nsl.seed = Some(s);
        }
        if let Some(t) = flags.threads {
            file.output.threads = Some(t);
        }
        if let Some(o) = &flags.out {
            file.output.dir = Some(o.display().to_string());
        }

        let scenario_name = file
            .scenario
            .name
            .clone()
            .ok_or_else(|| ConfigError::Missing("scenario.name".into()))?;
        let seed = file.nsl.seed.ok_or_else(|| ConfigError::Missing("nsl.seed".into()))?;
        let solver = match file.scenario.solver.as_deref().unwrap_or("nsl") {
            "nsl" => SolverKind::Nsl,
            "classical" => SolverKind::Classical,
            other => return Err(ConfigError::Invalid(format!("scenario.solver '{other}' (use \"nsl\" or \"classical\")"))),
        };
        let out_dir = file
            .output
            .dir
            .clone()
            .map(PathBuf::from)
            .or_else(|| std::env::var_os("NSL_OUT_DIR").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"));
        let collocation = file.nsl.collocation;
        Ok(Self {
            scenario_name,
            dim: file.scenario.dim.unwrap_or(0),
            seed,
            solver,
            n_x: file.classical.n_x.unwrap_or(64),
            mem_cap: file.classical.mem_cap.unwrap_or(nsl_core::classical::DEFAULT_MEM_CAP),
            out_dir,
            threads: file.output.threads.unwrap_or(0),
            checkpoints: file.output.checkpoints.unwrap_or(true),
            deterministic_timing: file.output.deterministic_timing.unwrap_or(false),
            eval_each_step: file.output.eval_each_step.unwrap_or(false),
            error_probes: file.nsl.error_probes.unwrap_or_else(|| 10 * collocation.unwrap_or(2000)),
            file,
        })
    }

    /// Builds the scenario and the solver configuration, applying overrides
    /// on top of the scenario's defaults.
    pub fn build(&self) -> Result<(Scenario, NslConfig), ConfigError> {
        let opts = ScenarioOptions {
            t_final: self.file.scenario.t_final,
            sigma: self.file.scenario.sigma,
            nu: self.file.scenario.nu,
            advection: self.file.scenario.advection,
        };
        let scenario = scenarios::make_scenario(&self.scenario_name, self.dim, &opts)
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let mut cfg = scenario
            .defaults
            .clone()
            .ok_or_else(|| ConfigError::Invalid("scenario carries no defaults".into()))?;

        let nsl = &self.file.nsl;
        if let Some(n) = nsl.n_t {
            if n == 0 {
                return Err(ConfigError::Invalid("nsl.n_t must be at least 1".into()));
            }
            cfg.n_t = n;
        }
        if let Some(layers) = &nsl.layers {
            let act = cfg.network.activation;
            cfg.network = NetworkSpec::new(cfg.network.input_dim, layers.clone(), act)
                .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        if let Some(act) = &nsl.activation {
            cfg.network.activation =
                ActivationKind::parse(act).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        if let Some(lr) = nsl.learning_rate {
            if !(lr > 0.0) {
                return Err(ConfigError::Invalid(format!("nsl.learning_rate {lr} must be positive")));
            }
            cfg.init.learning_rate = lr;
            cfg.iter.learning_rate = lr;
        }
        if let Some(n) = nsl.epochs_init {
            cfg.init.n_epochs = n;
        }
        if let Some(n) = nsl.epochs_iter {
            cfg.iter.n_epochs = n;
        }
        if let Some(n) = nsl.collocation {
            cfg.init.n_collocation = n;
            cfg.iter.n_collocation = n;
        }
        if let Some(ng) = nsl.natural_gradient {
            cfg.init.natural_gradient = ng;
            cfg.iter.natural_gradient = ng;
        }
        if let Some(r) = nsl.resample_each_epoch {
            cfg.init.resample_each_epoch = r;
            cfg.iter.resample_each_epoch = r;
        }
        if let Some(stop) = nsl.stop_loss {
            cfg.init.stop_loss = Some(stop);
            cfg.iter.stop_loss = Some(stop);
        }
        if let Some(n) = nsl.n_tau {
            if n == 0 {
                return Err(ConfigError::Invalid("nsl.n_tau must be at least 1".into()));
            }
            cfg.flow = nsl_core::characteristics::FlowConfig::new(n);
        }
        if let Some(sig) = self.file.scenario.sigma {
            cfg.sigma = sig;
        }
        if let Some(t) = self.file.scenario.t_final {
            cfg.t_final = t;
        }
        match nsl.adaptive {
            Some(false) => cfg.adaptive = None,
            Some(true) => {
                let [s1, s2, s3] = nsl
                    .adaptive_sigmas
                    .or_else(|| cfg.adaptive.as_ref().map(|a| a.sigmas()))
                    .ok_or_else(|| ConfigError::Missing("nsl.adaptive_sigmas".into()))?;
                if !(s1 > 0.0 && s1 <= s2 && s2 <= s3) {
                    return Err(ConfigError::Invalid(format!("adaptive_sigmas [{s1}, {s2}, {s3}] must satisfy 0 < σ₁ ≤ σ₂ ≤ σ₃")));
                }
                cfg.adaptive = Some(AdaptiveConfig::new(s1, s2, s3));
            }
            None => {
                if let Some([s1, s2, s3]) = nsl.adaptive_sigmas {
                    if !(s1 > 0.0 && s1 <= s2 && s2 <= s3) {
                        return Err(ConfigError::Invalid(format!("adaptive_sigmas [{s1}, {s2}, {s3}] must satisfy 0 < σ₁ ≤ σ₂ ≤ σ₃")));
                    }
                    if cfg.adaptive.is_some() {
                        cfg.adaptive = Some(AdaptiveConfig::new(s1, s2, s3));
                    }
                }
            }
        }
        if self.checkpoints {
            cfg.checkpoint_dir = Some(self.out_dir.join("checkpoints"));
        } else {
            cfg.checkpoint_dir = None;
        }
        Ok((scenario, cfg))
    }

    /// Serializes the fully resolved configuration (every effective value
    /// pinned) plus the manifest section.
    pub fn manifest(&self, command: &str, scenario: &Scenario, cfg: &NslConfig) -> FileConfig {
        let mut file = self.file.clone();
        file.scenario.name = Some(self.scenario_name.clone());
        file.scenario.dim = Some(scenario.dim());
        file.scenario.sigma = Some(cfg.sigma);
        file.scenario.t_final = Some(cfg.t_final);
        file.scenario.solver = Some(
            match self.solver {
                SolverKind::Nsl => "nsl",
                SolverKind::Classical => "classical",
            }
            .into(),
        );
        file.nsl.seed = Some(self.seed);
        file.nsl.n_t = Some(cfg.n_t);
        file.nsl.layers = Some(cfg.network.layer_sizes.clone());
        file.nsl.activation = Some(cfg.network.activation.name().into());
        file.nsl.learning_rate = Some(cfg.iter.learning_rate);
        file.nsl.epochs_init = Some(cfg.init.n_epochs);
        file.nsl.epochs_iter = Some(cfg.iter.n_epochs);
        file.nsl.collocation = Some(cfg.iter.n_collocation);
        file.nsl.natural_gradient = Some(cfg.iter.natural_gradient);
        file.nsl.adaptive = Some(cfg.adaptive.is_some());
        if let Some(a) = &cfg.adaptive {
            file.nsl.adaptive_sigmas = Some(a.sigmas());
        }
        file.nsl.resample_each_epoch = Some(cfg.iter.resample_each_epoch);
        file.nsl.n_tau = Some(cfg.flow.n_tau);
        file.nsl.error_probes = Some(self.error_probes);
        file.classical.n_x = Some(self.n_x);
        file.classical.mem_cap = Some(self.mem_cap);
        file.output.dir = Some(self.out_dir.display().to_string());
        file.output.threads = Some(self.threads);
        file.output.checkpoints = Some(self.checkpoints);
        file.output.deterministic_timing = Some(self.deterministic_timing);
        file.output.eval_each_step = Some(self.eval_each_step);
        file.manifest = Some(ManifestSection {
            command: command.into(),
            scenario_hash: scenario_hash(scenario),
        });
        file
    }
}

/// Content hash of the scenario's canonical description.
pub fn scenario_hash(scenario: &Scenario) -> String {
    use sha2::Digest;
    let mut hasher = sha2::Sha256::new();
    hasher.update(scenario.describe().as_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn write_manifest(path: &Path, file: &FileConfig) -> Result<(), ConfigError> {
    let text = toml::to_string_pretty(file).map_err(|e| ConfigError::Invalid(e.to_string()))?;
    std::fs::write(path, text).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))
}
