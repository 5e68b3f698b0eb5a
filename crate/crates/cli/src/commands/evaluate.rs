use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::Serialize;

use ssplain_core::eval::{
    self, BranchTrace, EdgeRule, MethodSpec, SweepMode, TargetPolicy,
};
use ssplain_core::grid::Grid;
use ssplain_core::model::{load_weights, Classifier, Dataset};
use ssplain_core::io;

use super::{build_method_spec, core_err, BaselineFlags, MethodFlag};
use crate::common::{
    create_out_dir, require_dir, require_file, resolve, write_curve_csv, CliError, CliResult,
    FileConfig, IdxPaths, Preset, SsplainFlags,
};
use crate::manifest::ManifestBuilder;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeFlag {
    Insertion,
    Deletion,
}

impl From<ModeFlag> for SweepMode {
    fn from(flag: ModeFlag) -> SweepMode {
        match flag {
            ModeFlag::Insertion => SweepMode::Insertion,
            ModeFlag::Deletion => SweepMode::Deletion,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TargetFlag {
    /// Ground-truth labels
    TrueLabel,
    /// The model's own predictions
    Prediction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AccuracyFlag {
    Balanced,
    Plain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EdgeRuleFlag {
    /// Join 4-neighbors whose values differ
    ValueDiffers,
    /// Join 4-neighbors that are both nonzero
    BothNonzero,
}

impl From<EdgeRuleFlag> for EdgeRule {
    fn from(flag: EdgeRuleFlag) -> EdgeRule {
        match flag {
            EdgeRuleFlag::ValueDiffers => EdgeRule::ValueDiffers,
            EdgeRuleFlag::BothNonzero => EdgeRule::BothNonzero,
        }
    }
}

#[derive(Args)]
pub struct EvaluateArgs {
    /// Weight file produced by `train`
    #[arg(long)]
    weights: PathBuf,
    /// Dataset directory; the sweep runs over its t10k test pair
    #[arg(long)]
    data: PathBuf,
    /// Methods to evaluate
    #[arg(long, value_enum, value_delimiter = ',',
          default_values_t = [MethodFlag::Ssplain, MethodFlag::Saliency,
                              MethodFlag::InputXGradient, MethodFlag::IntegratedGradients,
                              MethodFlag::Occlusion])]
    methods: Vec<MethodFlag>,
    /// Number of test images
    #[arg(long)]
    n_images: Option<usize>,
    #[arg(long, value_enum, value_delimiter = ',',
          default_values_t = [ModeFlag::Insertion, ModeFlag::Deletion])]
    modes: Vec<ModeFlag>,
    /// Number of sweep levels between 0 and 1 inclusive
    #[arg(long)]
    s_points: Option<usize>,
    #[arg(long, value_enum, default_value = "true-label")]
    targets: TargetFlag,
    #[arg(long, value_enum, default_value = "mnist")]
    preset: Preset,
    /// Accuracy flavor; defaults to the preset's convention
    #[arg(long, value_enum)]
    accuracy: Option<AccuracyFlag>,
    /// Directory of per-image curvature maps `<index:05>.fgrid`
    #[arg(long)]
    curvature_dir: Option<PathBuf>,
    /// Directory of per-image traces `<index:05>_polyline.csv` +
    /// `<index:05>_pixels.csv`
    #[arg(long)]
    trace_dir: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "value-differs")]
    edge_rule: EdgeRuleFlag,
    #[command(flatten)]
    ssplain: SsplainFlags,
    #[command(flatten)]
    baselines: BaselineFlags,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// JSON config file; explicit flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
}

#[derive(Serialize, Clone)]
pub struct SummaryEntry {
    pub method: String,
    pub mode: String,
    pub metric: String,
    pub auc: f64,
}

fn mode_name(mode: SweepMode) -> &'static str {
    match mode {
        SweepMode::Insertion => "insertion",
        SweepMode::Deletion => "deletion",
    }
}

/// Evaluate a set of methods over one image batch, writing one curve CSV
/// per (method, metric, mode) into `dir` and returning the AUC summary.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_methods(
    model: &Classifier,
    images: &[Grid],
    labels: &[usize],
    targets: &[usize],
    methods: &[(String, MethodSpec)],
    modes: &[SweepMode],
    s_grid: &[f64],
    balanced: bool,
    edge_rule: EdgeRule,
    curvature: Option<&[Grid]>,
    traces: Option<&[Vec<BranchTrace>]>,
    dir: &Path,
    manifest: &mut ManifestBuilder,
) -> CliResult<Vec<SummaryEntry>> {
    let mut summary = Vec::new();
    let mut write = |name: &str,
                     metric: &str,
                     mode: SweepMode,
                     curve: &eval::EvalCurve,
                     manifest: &mut ManifestBuilder|
     -> CliResult<()> {
        let path = dir.join(format!("{name}_{metric}_{}.csv", mode_name(mode)));
        write_curve_csv(&path, &curve.points)?;
        manifest.record_output(&path);
        summary.push(SummaryEntry {
            method: name.to_string(),
            mode: mode_name(mode).to_string(),
            metric: metric.to_string(),
            auc: curve.auc,
        });
        Ok(())
    };

    for (name, spec) in methods {
        let maps = eval::compute_maps(model, images, targets, spec).map_err(core_err)?;
        for &mode in modes {
            let curve = eval::accuracy_curve(
                model, images, labels, &maps, mode, s_grid, balanced,
            )
            .map_err(core_err)?;
            write(name, "accuracy", mode, &curve, manifest)?;
        }
        // The structural metrics follow the insertion process.
        let kappa =
            eval::kappa_curve(images, &maps, s_grid, SweepMode::Insertion).map_err(core_err)?;
        write(name, "kappa", SweepMode::Insertion, &kappa, manifest)?;
        let cc = eval::largest_cc_curve(images, &maps, s_grid, SweepMode::Insertion, edge_rule)
            .map_err(core_err)?;
        write(name, "largest_cc", SweepMode::Insertion, &cc, manifest)?;
        if let Some(curvature) = curvature {
            let curve =
                eval::curvature_curve(images, &maps, curvature, s_grid, SweepMode::Insertion)
                    .map_err(core_err)?;
            write(name, "curvature", SweepMode::Insertion, &curve, manifest)?;
        }
        if let Some(traces) = traces {
            let curve = eval::dilation_curve(images, &maps, traces, s_grid, SweepMode::Insertion)
                .map_err(core_err)?;
            write(name, "dilation", SweepMode::Insertion, &curve, manifest)?;
        }
    }
    Ok(summary)
}

pub fn s_grid_with(points: usize) -> CliResult<Vec<f64>> {
    if points < 2 {
        return Err(CliError::usage("--s-points must be at least 2"));
    }
    Ok((0..points)
        .map(|i| i as f64 / (points - 1) as f64)
        .collect())
}

pub fn load_test_subset(
    data_dir: &Path,
    n_images: usize,
    classes: usize,
) -> CliResult<Dataset> {
    let paths = IdxPaths::locate(data_dir);
    require_file(&paths.test_images, "test image file")?;
    require_file(&paths.test_labels, "test label file")?;
    let full = Dataset::from_idx(&paths.test_images, &paths.test_labels, classes)
        .map_err(core_err)?;
    full.take(n_images).map_err(core_err)
}

fn load_curvature_maps(dir: &Path, n: usize) -> CliResult<Vec<Grid>> {
    require_dir(dir, "curvature directory")?;
    let mut maps = Vec::with_capacity(n);
    for i in 0..n {
        let path = dir.join(format!("{i:05}.fgrid"));
        require_file(&path, "curvature map")?;
        maps.push(io::load_fgrid(&path).map_err(core_err)?);
    }
    Ok(maps)
}

fn load_trace_sets(dir: &Path, n: usize, h: usize, w: usize) -> CliResult<Vec<Vec<BranchTrace>>> {
    require_dir(dir, "trace directory")?;
    let mut sets = Vec::with_capacity(n);
    for i in 0..n {
        let poly = dir.join(format!("{i:05}_polyline.csv"));
        let pix = dir.join(format!("{i:05}_pixels.csv"));
        require_file(&poly, "trace polyline CSV")?;
        require_file(&pix, "trace pixels CSV")?;
        sets.push(eval::load_traces(&poly, &pix, h, w).map_err(core_err)?);
    }
    Ok(sets)
}

pub fn run(args: EvaluateArgs) -> CliResult<()> {
    let file = FileConfig::load(args.config.as_deref())?;
    require_file(&args.weights, "weight file")?;
    require_dir(&args.data, "dataset directory")?;
    if args.methods.is_empty() {
        return Err(CliError::usage("no methods selected"));
    }

    let n_images = resolve(args.n_images, &file, "n-images", 500)?;
    let s_points = resolve(args.s_points, &file, "s-points", 21)?;
    let classes = resolve(None, &file, "classes", 10)?;
    let s_grid = s_grid_with(s_points)?;
    let balanced = match args.accuracy {
        Some(AccuracyFlag::Balanced) => true,
        Some(AccuracyFlag::Plain) => false,
        None => args.preset.balanced_accuracy(),
    };

    let model = load_weights(&args.weights).map_err(core_err)?;
    let subset = load_test_subset(&args.data, n_images, classes)?;
    let images = subset.images();
    let labels = subset.labels();
    let (h, w) = (images[0].height(), images[0].width());

    // Optional reference inputs are validated in full before any compute.
    let curvature = match &args.curvature_dir {
        Some(dir) => Some(load_curvature_maps(dir, images.len())?),
        None => None,
    };
    let traces = match &args.trace_dir {
        Some(dir) => Some(load_trace_sets(dir, images.len(), h, w)?),
        None => None,
    };

    let mut methods = Vec::new();
    for &flag in &args.methods {
        let spec = build_method_spec(
            flag,
            args.preset,
            &args.ssplain,
            &args.baselines,
            &file,
            args.seed,
        )?;
        methods.push((spec.name().to_string(), spec));
    }

    #[derive(Serialize)]
    struct EffectiveConfig<'a> {
        methods: &'a [(String, MethodSpec)],
        n_images: usize,
        s_points: usize,
        balanced: bool,
        targets: &'a str,
        seed: u64,
    }
    let effective = EffectiveConfig {
        methods: &methods,
        n_images,
        s_points,
        balanced,
        targets: match args.targets {
            TargetFlag::TrueLabel => "true_label",
            TargetFlag::Prediction => "prediction",
        },
        seed: args.seed,
    };

    create_out_dir(&args.out)?;
    let mut manifest = ManifestBuilder::new(&args.out, args.seed, &effective);
    manifest.record_input(&args.weights)?;
    let paths = IdxPaths::locate(&args.data);
    manifest.record_input(&paths.test_images)?;
    manifest.record_input(&paths.test_labels)?;

    let policy = match args.targets {
        TargetFlag::TrueLabel => TargetPolicy::TrueLabel,
        TargetFlag::Prediction => TargetPolicy::Prediction,
    };
    let targets = eval::resolve_targets(&model, images, labels, policy).map_err(core_err)?;

    let modes: Vec<SweepMode> = args.modes.iter().map(|&m| m.into()).collect();
    let summary = evaluate_methods(
        &model,
        images,
        labels,
        &targets,
        &methods,
        &modes,
        &s_grid,
        balanced,
        args.edge_rule.into(),
        curvature.as_deref(),
        traces.as_deref(),
        &args.out,
        &mut manifest,
    )?;

    let summary_path = manifest.out_file("summary.json");
    std::fs::write(&summary_path, serde_json::to_string_pretty(&summary)?)?;
    manifest.finish()?;

    for entry in &summary {
        println!(
            "{:<22} {:<9} {:<11} auc {:.4}",
            entry.method, entry.mode, entry.metric, entry.auc
        );
    }
    Ok(())
}
