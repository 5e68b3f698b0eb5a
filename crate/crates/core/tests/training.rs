//! Training sanity run on a synthetic nonlinearly-separable blob task.

use ssplain_core::grid::Grid;
use ssplain_core::model::{self, Classifier, Dataset, LayerSpec, TrainConfig};
use ssplain_core::rng::Prng;

/// 8×8 images with a blob in the top-left and/or bottom-right corner.
/// Class 1 iff exactly one blob is present — XOR of the two corners, so no
/// linear pixel functional separates the classes.
fn xor_blob_dataset(per_pattern: usize, seed: u64) -> Dataset {
    let mut rng = Prng::seeded(seed);
    let kernel = [
        [0.4, 0.7, 0.4],
        [0.7, 1.0, 0.7],
        [0.4, 0.7, 0.4],
    ];
    let mut stamp = |img: &mut Grid, top: usize, left: usize, rng: &mut Prng| {
        let intensity = rng.uniform(0.6, 1.0);
        let dy = rng.below(2);
        let dx = rng.below(2);
        for (ky, row) in kernel.iter().enumerate() {
            for (kx, k) in row.iter().enumerate() {
                let r = top + dy + ky;
                let c = left + dx + kx;
                img.set(r, c, (img.get(r, c) + k * intensity).min(1.0));
            }
        }
    };
    let mut images = Vec::new();
    let mut labels = Vec::new();
    for (tl, br) in [(false, false), (true, false), (false, true), (true, true)] {
        for _ in 0..per_pattern {
            let mut img = Grid::zeros(8, 8);
            // A faint fixed marker keeps even the "no blob" images nonempty.
            img.set(3, 3, 0.05);
            img.set(4, 4, 0.05);
            if tl {
                stamp(&mut img, 0, 0, &mut rng);
            }
            if br {
                stamp(&mut img, 4, 4, &mut rng);
            }
            images.push(img);
            labels.push(usize::from(tl ^ br));
        }
    }
    Dataset::new(images, labels, 2).unwrap()
}

fn blob_model(seed: u64) -> Classifier {
    Classifier::new(
        (8, 8),
        2,
        &[
            LayerSpec::Conv {
                out_channels: 4,
                kernel: 3,
                stride: 1,
            },
            LayerSpec::Relu,
            LayerSpec::MaxPool { kernel: 2 },
            LayerSpec::Flatten,
            LayerSpec::Dense { out_dim: 16 },
            LayerSpec::Relu,
            LayerSpec::Dense { out_dim: 2 },
            LayerSpec::Softmax,
        ],
        seed,
    )
    .unwrap()
}

#[test]
fn xor_blobs_reach_full_train_accuracy_within_50_epochs() {
    let data = xor_blob_dataset(16, 42);
    let model = blob_model(7);
    let config = TrainConfig {
        learning_rate: 0.01,
        weight_decay: 0.0,
        epochs: 50,
        batch_size: 8,
        seed: 1,
        patience: None,
    };
    let (trained, log) = model::train(&model, &data, None, &config).unwrap();
    assert!(log.len() <= 50);
    let acc = model::accuracy(&trained, &data).unwrap();
    assert_eq!(acc, 1.0, "expected 100% train accuracy, got {acc}");
}

#[test]
fn training_is_reproducible_for_a_fixed_seed() {
    let data = xor_blob_dataset(8, 9);
    let model = blob_model(3);
    let config = TrainConfig {
        learning_rate: 0.01,
        weight_decay: 0.0001,
        epochs: 3,
        batch_size: 8,
        seed: 5,
        patience: None,
    };
    let (a, log_a) = model::train(&model, &data, None, &config).unwrap();
    let (b, log_b) = model::train(&model, &data, None, &config).unwrap();
    let x = data.image(0);
    assert_eq!(a.forward(x).unwrap(), b.forward(x).unwrap());
    for (ra, rb) in log_a.iter().zip(&log_b) {
        assert_eq!(ra.train_loss, rb.train_loss);
    }
}

#[test]
fn empty_dataset_is_rejected() {
    let data = xor_blob_dataset(2, 1);
    let model = blob_model(1);
    let bad = data.take(0);
    assert!(bad.is_err() || {
        let config = TrainConfig::default();
        model::train(&model, &bad.unwrap(), None, &config).is_err()
    });
}

#[test]
fn early_stopping_restores_best_weights() {
    let data = xor_blob_dataset(16, 21);
    let model = blob_model(11);
    let config = TrainConfig {
        learning_rate: 0.01,
        weight_decay: 0.0,
        epochs: 40,
        batch_size: 8,
        seed: 2,
        patience: Some(3),
    };
    let (_, log) = model::train(&model, &data, None, &config).unwrap();
    assert!(!log.is_empty());
    assert!(log.iter().all(|row| row.val_acc.is_some()));
}
