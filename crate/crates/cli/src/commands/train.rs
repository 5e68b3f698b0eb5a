use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::Serialize;

use ssplain_core::model::{self, Classifier, Dataset, TrainConfig};

use super::core_err;
use crate::common::{
    create_out_dir, require_dir, require_file, resolve, CliResult, FileConfig, IdxPaths,
};
use crate::manifest::ManifestBuilder;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArchFlag {
    /// conv(6,5)→pool→relu→conv(16,5)→pool→relu→dense 120→84→c
    Lenet,
}

#[derive(Args)]
pub struct TrainArgs {
    /// Directory holding train-images-idx3-ubyte / train-labels-idx1-ubyte
    /// (and optionally the t10k test pair, logged as test accuracy)
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value = "lenet")]
    arch: ArchFlag,
    /// Adam learning rate
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    weight_decay: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Early-stopping patience in epochs
    #[arg(long)]
    patience: Option<usize>,
    /// Disable early stopping (train the full epoch schedule)
    #[arg(long)]
    no_early_stop: bool,
    /// Number of classes
    #[arg(long)]
    classes: Option<usize>,
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
struct EffectiveConfig {
    arch: ArchFlag,
    classes: usize,
    train: TrainConfigEcho,
}

#[derive(Serialize)]
struct TrainConfigEcho {
    learning_rate: f64,
    weight_decay: f64,
    epochs: usize,
    batch_size: usize,
    seed: u64,
    patience: Option<usize>,
}

pub fn run(args: TrainArgs) -> CliResult<()> {
    let file = FileConfig::load(args.config.as_deref())?;
    require_dir(&args.data, "dataset directory")?;
    let paths = IdxPaths::locate(&args.data);
    require_file(&paths.train_images, "training image file")?;
    require_file(&paths.train_labels, "training label file")?;
    let have_test = paths.test_images.is_file() && paths.test_labels.is_file();

    let defaults = TrainConfig::default();
    let patience = if args.no_early_stop {
        None
    } else {
        Some(resolve(
            args.patience,
            &file,
            "patience",
            defaults.patience.unwrap(),
        )?)
    };
    let config = TrainConfig {
        learning_rate: resolve(args.lr, &file, "lr", defaults.learning_rate)?,
        weight_decay: resolve(args.weight_decay, &file, "weight-decay", defaults.weight_decay)?,
        epochs: resolve(args.epochs, &file, "epochs", defaults.epochs)?,
        batch_size: resolve(args.batch_size, &file, "batch-size", defaults.batch_size)?,
        seed: args.seed,
        patience,
    };
    let classes = resolve(args.classes, &file, "classes", 10)?;

    let train_set =
        Dataset::from_idx(&paths.train_images, &paths.train_labels, classes).map_err(core_err)?;
    let test_set = if have_test {
        Some(Dataset::from_idx(&paths.test_images, &paths.test_labels, classes).map_err(core_err)?)
    } else {
        None
    };
    let (h, w) = (train_set.image(0).height(), train_set.image(0).width());
    let model = match args.arch {
        ArchFlag::Lenet => {
            Classifier::new((h, w), classes, &model::lenet_specs(classes), args.seed)
                .map_err(core_err)?
        }
    };

    let effective = EffectiveConfig {
        arch: args.arch,
        classes,
        train: TrainConfigEcho {
            learning_rate: config.learning_rate,
            weight_decay: config.weight_decay,
            epochs: config.epochs,
            batch_size: config.batch_size,
            seed: config.seed,
            patience: config.patience,
        },
    };

    create_out_dir(&args.out)?;
    let mut manifest = ManifestBuilder::new(&args.out, args.seed, &effective);
    manifest.record_input(&paths.train_images)?;
    manifest.record_input(&paths.train_labels)?;
    if have_test {
        manifest.record_input(&paths.test_images)?;
        manifest.record_input(&paths.test_labels)?;
    }

    let (trained, log) =
        model::train(&model, &train_set, test_set.as_ref(), &config).map_err(core_err)?;

    let weights_path = manifest.out_file("weights.json");
    model::save_weights(&trained, &weights_path).map_err(core_err)?;

    let log_path = manifest.out_file("training_log.csv");
    let mut csv = String::from("epoch,train_loss,test_acc\n");
    for row in &log {
        let test = row.test_acc.map(|a| a.to_string()).unwrap_or_default();
        csv.push_str(&format!("{},{},{}\n", row.epoch, row.train_loss, test));
    }
    std::fs::write(&log_path, csv)?;

    manifest.finish()?;

    if let Some(test_set) = &test_set {
        let acc = model::accuracy(&trained, test_set).map_err(core_err)?;
        println!("trained {} epochs, test accuracy {:.4}", log.len(), acc);
    } else {
        println!("trained {} epochs", log.len());
    }
    Ok(())
}
