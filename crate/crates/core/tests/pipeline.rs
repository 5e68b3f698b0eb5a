//! End-to-end flow over the file formats: IDX in, training, explanation,
//! FGRID masks out, and the full metric sweep including curvature maps and
//! branch traces read back from disk.

use std::fs;
use std::io::Write;
use std::path::Path;

use ssplain_core::baselines::GradientSource;
use ssplain_core::eval::{
    self, EdgeRule, MethodSpec, SweepMode, TargetPolicy,
};
use ssplain_core::grid::Grid;
use ssplain_core::io;
use ssplain_core::model::{self, Classifier, Dataset, LayerSpec, TrainConfig};
use ssplain_core::rng::Prng;
use ssplain_core::ssplain::SsplainConfig;

fn write_idx_images(path: &Path, images: &[Vec<u8>], rows: usize, cols: usize) {
    let mut f = fs::File::create(path).unwrap();
    f.write_all(&0x0000_0803u32.to_be_bytes()).unwrap();
    f.write_all(&(images.len() as u32).to_be_bytes()).unwrap();
    f.write_all(&(rows as u32).to_be_bytes()).unwrap();
    f.write_all(&(cols as u32).to_be_bytes()).unwrap();
    for img in images {
        f.write_all(img).unwrap();
    }
}

fn write_idx_labels(path: &Path, labels: &[u8]) {
    let mut f = fs::File::create(path).unwrap();
    f.write_all(&0x0000_0801u32.to_be_bytes()).unwrap();
    f.write_all(&(labels.len() as u32).to_be_bytes()).unwrap();
    f.write_all(labels).unwrap();
}

/// Two-class 10×10 task: a bright bar on the left vs on the right.
fn synthetic_idx(dir: &Path, n: usize, seed: u64) -> (std::path::PathBuf, std::path::PathBuf) {
    let mut rng = Prng::seeded(seed);
    let mut images = Vec::new();
    let mut labels = Vec::new();
    for i in 0..n {
        let class = i % 2;
        let mut img = vec![0u8; 100];
        let col0 = if class == 0 { 1 } else { 6 };
        for r in 2..8 {
            for c in col0..col0 + 2 {
                img[r * 10 + c] = 150 + rng.below(100) as u8;
            }
        }
        images.push(img);
        labels.push(class as u8);
    }
    let img_path = dir.join("train-images-idx3-ubyte");
    let lbl_path = dir.join("train-labels-idx1-ubyte");
    write_idx_images(&img_path, &images, 10, 10);
    write_idx_labels(&lbl_path, &labels);
    (img_path, lbl_path)
}

fn bar_model(seed: u64) -> Classifier {
    Classifier::new(
        (10, 10),
        2,
        &[
            LayerSpec::Conv {
                out_channels: 3,
                kernel: 3,
                stride: 1,
            },
            LayerSpec::Relu,
            LayerSpec::MaxPool { kernel: 2 },
            LayerSpec::Flatten,
            LayerSpec::Dense { out_dim: 12 },
            LayerSpec::Relu,
            LayerSpec::Dense { out_dim: 2 },
            LayerSpec::Softmax,
        ],
        seed,
    )
    .unwrap()
}

#[test]
fn idx_to_curves_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let (img_path, lbl_path) = synthetic_idx(dir.path(), 24, 3);
    let data = Dataset::from_idx(&img_path, &lbl_path, 2).unwrap();

    let config = TrainConfig {
        learning_rate: 0.02,
        weight_decay: 0.0,
        epochs: 15,
        batch_size: 8,
        seed: 4,
        patience: None,
    };
    let (trained, _) = model::train(&bar_model(5), &data, None, &config).unwrap();
    assert!(model::accuracy(&trained, &data).unwrap() > 0.9);

    // Weight round trip through disk.
    let weights_path = dir.path().join("weights.json");
    model::save_weights(&trained, &weights_path).unwrap();
    let trained = model::load_weights(&weights_path).unwrap();

    // Explain a batch with the solver and one baseline.
    let images: Vec<Grid> = data.images()[..8].to_vec();
    let labels: Vec<usize> = data.labels()[..8].to_vec();
    let targets =
        eval::resolve_targets(&trained, &images, &labels, TargetPolicy::TrueLabel).unwrap();
    let ssplain_spec = MethodSpec::Ssplain(SsplainConfig {
        admm_iters: 4,
        inner_steps: 4,
        ..SsplainConfig::mnist()
    });
    let masks = eval::compute_maps(&trained, &images, &targets, &ssplain_spec).unwrap();
    let saliency_spec = MethodSpec::Saliency {
        source: GradientSource::Logit,
    };
    let sal_maps = eval::compute_maps(&trained, &images, &targets, &saliency_spec).unwrap();

    // Mask support stays inside the image support.
    for (mask, x) in masks.iter().zip(&images) {
        let support = x.support();
        for (i, v) in mask.values().iter().enumerate() {
            assert!(support.contains(i) || *v == 0.0);
        }
    }

    // Masks round-trip through the FGRID format at 9 significant digits.
    let mask_path = dir.path().join("mask.fgrid");
    io::save_fgrid(&mask_path, &masks[0]).unwrap();
    let loaded = io::load_fgrid(&mask_path).unwrap();
    assert_eq!(loaded.shape(), masks[0].shape());
    for (a, b) in loaded.values().iter().zip(masks[0].values()) {
        assert!((a - b).abs() <= 1e-8 * b.abs().max(1.0));
    }

    // Full metric sweep.
    let s_grid = eval::default_s_grid();
    for maps in [&masks, &sal_maps] {
        let acc = eval::accuracy_curve(
            &trained,
            &images,
            &labels,
            maps,
            SweepMode::Insertion,
            &s_grid,
            false,
        )
        .unwrap();
        assert_eq!(acc.points.len(), s_grid.len());
        let kappa = eval::kappa_curve(&images, maps, &s_grid, SweepMode::Insertion).unwrap();
        assert_eq!(kappa.value_at(1.0), Some(1.0));
        let cc = eval::largest_cc_curve(
            &images,
            maps,
            &s_grid,
            SweepMode::Insertion,
            EdgeRule::ValueDiffers,
        )
        .unwrap();
        assert_eq!(cc.value_at(1.0), Some(1.0));
    }

    // Curvature maps from disk: use the images themselves as stand-ins.
    let curv_paths: Vec<_> = (0..images.len())
        .map(|i| {
            let p = dir.path().join(format!("{i:05}.fgrid"));
            io::save_fgrid(&p, &images[i]).unwrap();
            p
        })
        .collect();
    let curvatures: Vec<Grid> = curv_paths.iter().map(|p| io::load_fgrid(p).unwrap()).collect();
    let curv = eval::curvature_curve(&images, &masks, &curvatures, &s_grid, SweepMode::Insertion)
        .unwrap();
    assert_eq!(curv.value_at(0.0), Some(0.0));
    assert!((curv.value_at(1.0).unwrap() - 1.0).abs() < 1e-9);

    // Branch traces from disk: one straight branch through each bar.
    let poly_path = dir.path().join("poly.csv");
    let pix_path = dir.path().join("pix.csv");
    let mut poly = String::from("branch_id,point_row,point_col\n");
    let mut pix = String::from("branch_id,pixel_row,pixel_col\n");
    for (r, _) in (2..8).enumerate() {
        poly.push_str(&format!("0,{}.0,1.0\n", r + 2));
        pix.push_str(&format!("0,{},1\n", r + 2));
        pix.push_str(&format!("0,{},2\n", r + 2));
    }
    fs::write(&poly_path, poly).unwrap();
    fs::write(&pix_path, pix).unwrap();
    let traces = eval::load_traces(&poly_path, &pix_path, 10, 10).unwrap();
    let trace_sets: Vec<_> = (0..images.len()).map(|_| traces.clone()).collect();
    // Only class-0 images have mass on the branch, but the mean curve is
    // still well defined as long as each reference image has nonzero ASD
    // somewhere; restrict to class-0 images to keep the reference nonzero.
    let class0: Vec<Grid> = images
        .iter()
        .zip(&labels)
        .filter(|(_, &l)| l == 0)
        .map(|(x, _)| x.clone())
        .collect();
    let class0_masks: Vec<Grid> = masks
        .iter()
        .zip(&labels)
        .filter(|(_, &l)| l == 0)
        .map(|(m, _)| m.clone())
        .collect();
    let dil = eval::dilation_curve(
        &class0,
        &class0_masks,
        &trace_sets[..class0.len()],
        &s_grid,
        SweepMode::Insertion,
    )
    .unwrap();
    assert!((dil.value_at(1.0).unwrap() - 1.0).abs() < 1e-9);

    // Sanity check runs against the trained model.
    let report = eval::sanity_check(
        &trained,
        &images[0],
        &SsplainConfig {
            admm_iters: 3,
            inner_steps: 3,
            ..SsplainConfig::mnist()
        },
        &[0, trained.weight_layer_count()],
        17,
    )
    .unwrap();
    assert_eq!(report.entries[0].spearman, 1.0);
}
