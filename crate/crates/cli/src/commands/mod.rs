pub mod evaluate;
pub mod explain;
pub mod sanity;
pub mod sweep;
pub mod train;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use ssplain_core::baselines::{GradientSource, OcclusionConfig, OcclusionMetric};
use ssplain_core::error::Error as CoreError;
use ssplain_core::eval::MethodSpec;

use crate::common::{CliError, CliResult, FileConfig, Preset, SsplainFlags};

/// Map library errors onto exit-code classes: malformed inputs and
/// impossible requests are usage errors (exit 2); numeric failures and I/O
/// are runtime errors (exit 1).
pub fn core_err(err: CoreError) -> CliError {
    match err {
        CoreError::EmptySupport
        | CoreError::InvalidLabel { .. }
        | CoreError::ShapeMismatch { .. }
        | CoreError::EmptyDataset
        | CoreError::ArchMismatch(_)
        | CoreError::InvalidModel(_)
        | CoreError::InvalidConfig(_)
        | CoreError::InvalidTrace(_)
        | CoreError::DegeneratePolyline
        | CoreError::EmptyGraph
        | CoreError::ZeroNorm { .. }
        | CoreError::Format { .. } => CliError::Usage(err.to_string()),
        CoreError::NonFinite { .. } | CoreError::Io { .. } => {
            CliError::Runtime(anyhow::anyhow!(err))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodFlag {
    Ssplain,
    Saliency,
    InputXGradient,
    IntegratedGradients,
    Occlusion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GradSourceFlag {
    Logit,
    Probability,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OccMetricFlag {
    Probability,
    Logit,
}

/// Baseline hyperparameter flags shared by explain and evaluate.
#[derive(Debug, Clone, clap::Args)]
pub struct BaselineFlags {
    /// Riemann steps for integrated gradients
    #[arg(long)]
    pub ig_steps: Option<usize>,
    /// Occlusion window as `rows,cols`
    #[arg(long)]
    pub occ_window: Option<String>,
    /// Occlusion stride as `rows,cols`
    #[arg(long)]
    pub occ_stride: Option<String>,
    /// Occlusion fill value
    #[arg(long)]
    pub occ_fill: Option<f64>,
    /// Which output the gradient methods differentiate
    #[arg(long, value_enum)]
    pub grad_source: Option<GradSourceFlag>,
    /// What occlusion measures
    #[arg(long, value_enum)]
    pub occ_metric: Option<OccMetricFlag>,
}

fn parse_pair(text: &str, what: &str) -> CliResult<(usize, usize)> {
    let mut it = text.split(',');
    let parse = |tok: Option<&str>| -> CliResult<usize> {
        tok.and_then(|t| t.trim().parse().ok())
            .ok_or_else(|| CliError::usage(format!("{what} must be `rows,cols`, got {text:?}")))
    };
    let pair = (parse(it.next())?, parse(it.next())?);
    if it.next().is_some() {
        return Err(CliError::usage(format!(
            "{what} must be `rows,cols`, got {text:?}"
        )));
    }
    Ok(pair)
}

impl BaselineFlags {
    pub fn gradient_source(&self, file: &FileConfig) -> CliResult<GradientSource> {
        Ok(match self.grad_source {
            Some(GradSourceFlag::Logit) => GradientSource::Logit,
            Some(GradSourceFlag::Probability) => GradientSource::Probability,
            None => file
                .get("grad-source")?
                .unwrap_or(GradientSource::Logit),
        })
    }

    pub fn ig_steps(&self, file: &FileConfig) -> CliResult<usize> {
        crate::common::resolve(self.ig_steps, file, "ig-steps", 64)
    }

    pub fn occlusion_config(
        &self,
        preset: Preset,
        file: &FileConfig,
    ) -> CliResult<OcclusionConfig> {
        // Large sliding windows suit large vessel images; digit-sized inputs
        // default to exhaustive single-pixel occlusion.
        let (window, stride) = match preset {
            Preset::Default => ((16, 16), (4, 4)),
            Preset::Mnist | Preset::Fmnist => ((1, 1), (1, 1)),
        };
        let window = match &self.occ_window {
            Some(text) => parse_pair(text, "--occ-window")?,
            None => match file.get::<String>("occ-window")? {
                Some(text) => parse_pair(&text, "config occ-window")?,
                None => window,
            },
        };
        let stride = match &self.occ_stride {
            Some(text) => parse_pair(text, "--occ-stride")?,
            None => match file.get::<String>("occ-stride")? {
                Some(text) => parse_pair(&text, "config occ-stride")?,
                None => stride,
            },
        };
        let fill = crate::common::resolve(self.occ_fill, file, "occ-fill", 0.0)?;
        let metric = match self.occ_metric {
            Some(OccMetricFlag::Probability) => OcclusionMetric::ProbabilityDrop,
            Some(OccMetricFlag::Logit) => OcclusionMetric::LogitDrop,
            None => OcclusionMetric::ProbabilityDrop,
        };
        Ok(OcclusionConfig {
            window,
            stride,
            fill,
            metric,
        })
    }
}

/// Assemble a fully configured method from flags, config file and preset.
pub fn build_method_spec(
    method: MethodFlag,
    preset: Preset,
    ssplain_flags: &SsplainFlags,
    baseline_flags: &BaselineFlags,
    file: &FileConfig,
    seed: u64,
) -> CliResult<MethodSpec> {
    Ok(match method {
        MethodFlag::Ssplain => MethodSpec::Ssplain(ssplain_flags.build(preset, file, seed)?),
        MethodFlag::Saliency => MethodSpec::Saliency {
            source: baseline_flags.gradient_source(file)?,
        },
        MethodFlag::InputXGradient => MethodSpec::InputXGradient {
            source: baseline_flags.gradient_source(file)?,
        },
        MethodFlag::IntegratedGradients => MethodSpec::IntegratedGradients {
            steps: baseline_flags.ig_steps(file)?,
            source: baseline_flags.gradient_source(file)?,
        },
        MethodFlag::Occlusion => {
            MethodSpec::Occlusion(baseline_flags.occlusion_config(preset, file)?)
        }
    })
}
