//! Shared CLI plumbing: error classification, config-file merging, presets
//! and small file helpers.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::de::DeserializeOwned;
use serde_json::Value;

use ssplain_core::ssplain::{InitMode, SparsityNorm, SsplainConfig, TopKRule};

/// Errors split by exit code: usage/input problems exit 2, runtime
/// failures exit 1.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Runtime(err) => write!(f, "{err:#}"),
        }
    }
}

impl<E: Into<anyhow::Error>> From<E> for CliError {
    fn from(err: E) -> Self {
        CliError::Runtime(err.into())
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Optional JSON config file whose keys mirror the long flag names.
/// Explicit flags always win over file values.
pub struct FileConfig(serde_json::Map<String, Value>);

impl FileConfig {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(FileConfig(serde_json::Map::new()));
        };
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        let value: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::usage(format!("bad config {}: {e}", path.display())))?;
        match value {
            Value::Object(map) => Ok(FileConfig(map)),
            _ => Err(CliError::usage(format!(
                "config {} must hold a JSON object",
                path.display()
            ))),
        }
    }

    pub fn get<T: DeserializeOwned>(&self, key: &str) -> CliResult<Option<T>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(value) => serde_json::from_value(value.clone())
                .map(Some)
                .map_err(|e| CliError::usage(format!("config key {key:?}: {e}"))),
        }
    }
}

/// flag > config file > default.
pub fn resolve<T: DeserializeOwned>(
    flag: Option<T>,
    file: &FileConfig,
    key: &str,
    default: T,
) -> CliResult<T> {
    Ok(match flag {
        Some(v) => v,
        None => file.get(key)?.unwrap_or(default),
    })
}

/// Hyperparameter presets keyed by dataset family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// 50 ADMM iterations, lr 0.01, λ=1e-5, α=50%; balanced accuracy.
    Default,
    /// 20 ADMM iterations, lr 0.1, λ=1e-3, α=25%; plain accuracy.
    Mnist,
    /// Like mnist with λ=1e-4.
    Fmnist,
}

impl Preset {
    pub fn ssplain_config(&self) -> SsplainConfig {
        match self {
            Preset::Default => SsplainConfig::default(),
            Preset::Mnist => SsplainConfig::mnist(),
            Preset::Fmnist => SsplainConfig::fmnist(),
        }
    }

    pub fn balanced_accuracy(&self) -> bool {
        matches!(self, Preset::Default)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormFlag {
    L0,
    L1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitFlag {
    /// Mask starts at X / max(X).
    Intensity,
    /// Mask starts at 1 on the image support.
    Ones,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TopKFlag {
    Magnitude,
    Value,
}

/// Solver hyperparameter flags shared by explain, evaluate, sanity and
/// sweep. Unset flags fall back to the config file, then to the preset.
#[derive(Debug, Clone, Args)]
pub struct SsplainFlags {
    /// Sparsity budget as a fraction of the image's nonzero pixels
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Total-variation weight
    #[arg(long)]
    pub lambda: Option<f64>,
    /// ADMM penalty
    #[arg(long)]
    pub rho: Option<f64>,
    /// Outer ADMM iterations
    #[arg(long)]
    pub iters: Option<usize>,
    /// Adam learning rate of the inner solver
    #[arg(long)]
    pub inner_lr: Option<f64>,
    /// Adam steps per ADMM iteration
    #[arg(long)]
    pub inner_steps: Option<usize>,
    /// Sparsity norm
    #[arg(long, value_enum)]
    pub norm: Option<NormFlag>,
    /// Mask initialization
    #[arg(long, value_enum)]
    pub init: Option<InitFlag>,
    /// Top-k selection rule of the sparsity projection
    #[arg(long, value_enum)]
    pub topk: Option<TopKFlag>,
    /// Clamp the emitted mask into [0,1] on the support
    #[arg(long)]
    pub box_output: bool,
}

impl SsplainFlags {
    pub fn build(&self, preset: Preset, file: &FileConfig, seed: u64) -> CliResult<SsplainConfig> {
        let mut config = preset.ssplain_config();
        config.alpha_fraction = resolve(self.alpha, file, "alpha", config.alpha_fraction)?;
        config.lambda = resolve(self.lambda, file, "lambda", config.lambda)?;
        config.rho = resolve(self.rho, file, "rho", config.rho)?;
        config.admm_iters = resolve(self.iters, file, "iters", config.admm_iters)?;
        config.inner_lr = resolve(self.inner_lr, file, "inner-lr", config.inner_lr)?;
        config.inner_steps = resolve(self.inner_steps, file, "inner-steps", config.inner_steps)?;
        let norm = match self.norm {
            Some(NormFlag::L0) => SparsityNorm::L0,
            Some(NormFlag::L1) => SparsityNorm::L1,
            None => match file.get::<String>("norm")?.as_deref() {
                Some("l0") => SparsityNorm::L0,
                Some("l1") => SparsityNorm::L1,
                Some(other) => {
                    return Err(CliError::usage(format!("config key \"norm\": unknown value {other:?}")))
                }
                None => config.sparsity_norm,
            },
        };
        config.sparsity_norm = norm;
        config.init_mode = match self.init {
            Some(InitFlag::Intensity) => InitMode::IntensityProportional,
            Some(InitFlag::Ones) => InitMode::OnesOnSupport,
            None => config.init_mode,
        };
        config.topk_rule = match self.topk {
            Some(TopKFlag::Magnitude) => TopKRule::Magnitude,
            Some(TopKFlag::Value) => TopKRule::Value,
            None => config.topk_rule,
        };
        config.box_output = self.box_output || file.get("box-output")?.unwrap_or(false);
        config.seed = seed;
        config
            .validate()
            .map_err(|e| CliError::usage(e.to_string()))?;
        Ok(config)
    }
}

pub fn require_file(path: &Path, what: &str) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::usage(format!(
            "{what} not found: {}",
            path.display()
        )))
    }
}

pub fn require_dir(path: &Path, what: &str) -> CliResult<()> {
    if path.is_dir() {
        Ok(())
    } else {
        Err(CliError::usage(format!(
            "{what} not found: {}",
            path.display()
        )))
    }
}

pub fn create_out_dir(path: &Path) -> CliResult<()> {
    fs::create_dir_all(path)
        .map_err(|e| CliError::Runtime(anyhow::anyhow!("cannot create {}: {e}", path.display())))
}

/// Write a two-column curve CSV with the standard `s,value` header.
pub fn write_curve_csv(path: &Path, points: &[(f64, f64)]) -> CliResult<()> {
    let mut text = String::from("s,value\n");
    for (s, v) in points {
        text.push_str(&format!("{s},{v}\n"));
    }
    fs::write(path, text)?;
    Ok(())
}

/// Standard IDX file names inside a dataset directory.
pub struct IdxPaths {
    pub train_images: PathBuf,
    pub train_labels: PathBuf,
    pub test_images: PathBuf,
    pub test_labels: PathBuf,
}

impl IdxPaths {
    pub fn locate(dir: &Path) -> Self {
        IdxPaths {
            train_images: dir.join("train-images-idx3-ubyte"),
            train_labels: dir.join("train-labels-idx1-ubyte"),
            test_images: dir.join("t10k-images-idx3-ubyte"),
            test_labels: dir.join("t10k-labels-idx1-ubyte"),
        }
    }
}
