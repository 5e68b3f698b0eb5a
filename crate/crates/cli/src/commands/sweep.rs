use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::Serialize;

use ssplain_core::eval::{self, MethodSpec, SweepMode, TargetPolicy};
use ssplain_core::model::load_weights;
use ssplain_core::ssplain::SsplainConfig;

use super::core_err;
use super::evaluate::{evaluate_methods, load_test_subset, s_grid_with, SummaryEntry};
use crate::common::{
    create_out_dir, require_dir, require_file, resolve, CliResult, FileConfig, Preset,
    SsplainFlags,
};
use crate::manifest::ManifestBuilder;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    /// Sparsity budgets: 75%, 50%, 25%, 12.5% and 10% of the nonzero count
    Alpha,
    /// Constraint ablations: full, no-tv, no-sparsity, loss-only
    /// (support and box constraints always stay on)
    Ablation,
}

#[derive(Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    axis: SweepAxis,
    /// Weight file produced by `train`
    #[arg(long)]
    weights: PathBuf,
    /// Dataset directory; the sweep runs over its t10k test pair
    #[arg(long)]
    data: PathBuf,
    /// Number of test images per sweep point
    #[arg(long)]
    n_images: Option<usize>,
    /// Number of sweep levels between 0 and 1 inclusive
    #[arg(long)]
    s_points: Option<usize>,
    #[arg(long, value_enum, default_value = "mnist")]
    preset: Preset,
    #[command(flatten)]
    ssplain: SsplainFlags,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// JSON config file; explicit flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
}

pub const ALPHA_LEVELS: [f64; 5] = [0.75, 0.5, 0.25, 0.125, 0.10];

/// The ablation grid over (sparsity constraint, smoothness term).
pub fn ablation_points(base: &SsplainConfig) -> Vec<(String, SsplainConfig)> {
    let mut no_tv = base.clone();
    no_tv.lambda = 0.0;
    let mut no_sparsity = base.clone();
    no_sparsity.use_sparsity = false;
    let mut loss_only = base.clone();
    loss_only.lambda = 0.0;
    loss_only.use_sparsity = false;
    vec![
        ("full".to_string(), base.clone()),
        ("no-tv".to_string(), no_tv),
        ("no-sparsity".to_string(), no_sparsity),
        ("loss-only".to_string(), loss_only),
    ]
}

pub fn alpha_points(base: &SsplainConfig) -> Vec<(String, SsplainConfig)> {
    ALPHA_LEVELS
        .iter()
        .map(|&alpha| {
            let mut config = base.clone();
            config.alpha_fraction = alpha;
            (format!("alpha-{alpha}"), config)
        })
        .collect()
}

pub fn run(args: SweepArgs) -> CliResult<()> {
    let file = FileConfig::load(args.config.as_deref())?;
    require_file(&args.weights, "weight file")?;
    require_dir(&args.data, "dataset directory")?;

    let n_images = resolve(args.n_images, &file, "n-images", 100)?;
    let s_points = resolve(args.s_points, &file, "s-points", 21)?;
    let classes = resolve(None, &file, "classes", 10)?;
    let s_grid = s_grid_with(s_points)?;

    let base = args.ssplain.build(args.preset, &file, args.seed)?;
    let points = match args.axis {
        SweepAxis::Alpha => alpha_points(&base),
        SweepAxis::Ablation => ablation_points(&base),
    };

    let model = load_weights(&args.weights).map_err(core_err)?;
    let subset = load_test_subset(&args.data, n_images, classes)?;
    let images = subset.images();
    let labels = subset.labels();

    #[derive(Serialize)]
    struct EffectiveConfig<'a> {
        axis: SweepAxis,
        points: &'a [(String, SsplainConfig)],
        n_images: usize,
        s_points: usize,
        seed: u64,
    }
    let effective = EffectiveConfig {
        axis: args.axis,
        points: &points,
        n_images,
        s_points,
        seed: args.seed,
    };

    create_out_dir(&args.out)?;
    let mut manifest = ManifestBuilder::new(&args.out, args.seed, &effective);
    manifest.record_input(&args.weights)?;

    let targets =
        eval::resolve_targets(&model, images, labels, TargetPolicy::TrueLabel).map_err(core_err)?;
    let modes = [SweepMode::Insertion, SweepMode::Deletion];

    let mut comparison: Vec<(String, SummaryEntry)> = Vec::new();
    for (label, config) in &points {
        let dir = args.out.join(label);
        create_out_dir(&dir)?;
        let methods = vec![("ssplain".to_string(), MethodSpec::Ssplain(config.clone()))];
        let summary = evaluate_methods(
            &model,
            images,
            labels,
            &targets,
            &methods,
            &modes,
            &s_grid,
            args.preset.balanced_accuracy(),
            eval::EdgeRule::ValueDiffers,
            None,
            None,
            &dir,
            &mut manifest,
        )?;
        let summary_path = dir.join("summary.json");
        std::fs::write(&summary_path, serde_json::to_string_pretty(&summary)?)?;
        manifest.record_output(&summary_path);
        for entry in summary {
            comparison.push((label.clone(), entry));
        }
    }

    let comparison_path = manifest.out_file("comparison.csv");
    let mut csv = String::from("config,metric,mode,auc\n");
    for (label, entry) in &comparison {
        csv.push_str(&format!(
            "{label},{},{},{}\n",
            entry.metric, entry.mode, entry.auc
        ));
    }
    std::fs::write(&comparison_path, csv)?;
    manifest.finish()?;

    for (label, entry) in &comparison {
        println!(
            "{:<12} {:<11} {:<9} auc {:.4}",
            label, entry.metric, entry.mode, entry.auc
        );
    }
    Ok(())
}
