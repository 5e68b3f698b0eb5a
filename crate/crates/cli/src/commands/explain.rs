use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use ssplain_core::eval::MethodSpec;
use ssplain_core::model::{argmax, load_weights};
use ssplain_core::ssplain::{self, TargetMode};
use ssplain_core::{eval, io};

use super::{build_method_spec, core_err, BaselineFlags, MethodFlag};
use crate::common::{
    create_out_dir, require_file, CliResult, FileConfig, Preset, SsplainFlags,
};
use crate::manifest::ManifestBuilder;

#[derive(Args)]
pub struct ExplainArgs {
    /// Weight file produced by `train`
    #[arg(long)]
    weights: PathBuf,
    /// Grayscale PGM image (P2 or P5)
    #[arg(long)]
    image: PathBuf,
    #[arg(long, value_enum)]
    method: MethodFlag,
    /// Target class; the model's own prediction when omitted
    #[arg(long)]
    label: Option<usize>,
    #[arg(long, value_enum, default_value = "default")]
    preset: Preset,
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

#[derive(Serialize)]
struct Sidecar<'a> {
    method: &'a MethodSpec,
    target: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    final_objective: Option<ssplain::ObjectiveBreakdown>,
}

pub fn run(args: ExplainArgs) -> CliResult<()> {
    let file = FileConfig::load(args.config.as_deref())?;
    require_file(&args.weights, "weight file")?;
    require_file(&args.image, "image file")?;

    let model = load_weights(&args.weights).map_err(core_err)?;
    let image = io::load_pgm(&args.image).map_err(core_err)?;
    let target = match args.label {
        Some(label) => label,
        None => argmax(&model.forward(&image).map_err(core_err)?),
    };
    let spec = build_method_spec(
        args.method,
        args.preset,
        &args.ssplain,
        &args.baselines,
        &file,
        args.seed,
    )?;

    create_out_dir(&args.out)?;
    let mut manifest = ManifestBuilder::new(&args.out, args.seed, &spec);
    manifest.record_input(&args.weights)?;
    manifest.record_input(&args.image)?;

    // The solver path keeps its run record for the sidecar; baselines only
    // produce the map.
    let (mask, final_objective, iterations) = match &spec {
        MethodSpec::Ssplain(config) => {
            let mut config = config.clone();
            config.target_mode = TargetMode::Supervised(target);
            let map = ssplain::explain(&model, &image, &config).map_err(core_err)?;
            (
                map.mask,
                Some(map.meta.final_objective),
                Some(map.meta.iterations),
            )
        }
        other => (
            eval::compute_map(&model, &image, target, other).map_err(core_err)?,
            None,
            None,
        ),
    };

    let name = spec.name();
    let mask_path = manifest.out_file(&format!("{name}.fgrid"));
    io::save_fgrid(&mask_path, &mask).map_err(core_err)?;

    let sidecar_path = manifest.out_file(&format!("{name}_sidecar.json"));
    let sidecar = Sidecar {
        method: &spec,
        target,
        final_objective,
    };
    std::fs::write(&sidecar_path, serde_json::to_string_pretty(&sidecar)?)?;

    if let Some(iterations) = iterations {
        let iter_path = manifest.out_file(&format!("{name}_iterations.csv"));
        let mut csv = String::from("k,loss,tv,residual1,residual2,lagrangian\n");
        for row in &iterations {
            csv.push_str(&format!(
                "{},{},{},{},{},{}\n",
                row.k, row.loss, row.tv, row.residual1, row.residual2, row.lagrangian
            ));
        }
        std::fs::write(&iter_path, csv)?;
    }

    manifest.finish()?;
    println!("{name} map for class {target} written to {}", args.out.display());
    Ok(())
}
