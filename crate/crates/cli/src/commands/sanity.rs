use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use ssplain_core::eval::sanity_check;
use ssplain_core::io;
use ssplain_core::model::load_weights;
use ssplain_core::ssplain::SsplainConfig;

use super::core_err;
use crate::common::{
    create_out_dir, require_file, CliError, CliResult, FileConfig, Preset, SsplainFlags,
};
use crate::manifest::ManifestBuilder;

#[derive(Args)]
pub struct SanityArgs {
    /// Weight file produced by `train`
    #[arg(long)]
    weights: PathBuf,
    /// Grayscale PGM image (P2 or P5)
    #[arg(long)]
    image: PathBuf,
    /// Randomization cursors (layers re-initialized, from the output
    /// backwards); defaults to 0..=<weight layer count>
    #[arg(long, value_delimiter = ',')]
    schedule: Option<Vec<usize>>,
    #[arg(long, value_enum, default_value = "default")]
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

#[derive(Serialize)]
struct EffectiveConfig<'a> {
    schedule: &'a [usize],
    ssplain: &'a SsplainConfig,
    seed: u64,
}

pub fn run(args: SanityArgs) -> CliResult<()> {
    let file = FileConfig::load(args.config.as_deref())?;
    require_file(&args.weights, "weight file")?;
    require_file(&args.image, "image file")?;

    let model = load_weights(&args.weights).map_err(core_err)?;
    let image = io::load_pgm(&args.image).map_err(core_err)?;
    let config = args.ssplain.build(args.preset, &file, args.seed)?;

    let schedule: Vec<usize> = match args.schedule {
        Some(schedule) if !schedule.is_empty() => schedule,
        Some(_) => return Err(CliError::usage("--schedule must not be empty")),
        None => (0..=model.weight_layer_count()).collect(),
    };

    create_out_dir(&args.out)?;
    let effective = EffectiveConfig {
        schedule: &schedule,
        ssplain: &config,
        seed: args.seed,
    };
    let mut manifest = ManifestBuilder::new(&args.out, args.seed, &effective);
    manifest.record_input(&args.weights)?;
    manifest.record_input(&args.image)?;

    let report = sanity_check(&model, &image, &config, &schedule, args.seed).map_err(core_err)?;

    let csv_path = manifest.out_file("sanity.csv");
    let mut csv = String::from("num_randomized,spearman\n");
    for entry in &report.entries {
        csv.push_str(&format!("{},{}\n", entry.num_randomized, entry.spearman));
        let map_path = manifest.out_file(&format!("mask_cursor_{}.fgrid", entry.num_randomized));
        io::save_fgrid(&map_path, &entry.map).map_err(core_err)?;
    }
    std::fs::write(&csv_path, csv)?;
    manifest.finish()?;

    for entry in &report.entries {
        println!(
            "randomized {:>2} layers: spearman {:+.4}",
            entry.num_randomized, entry.spearman
        );
    }
    Ok(())
}
