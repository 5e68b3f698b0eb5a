use approx::assert_relative_eq;
use tempfile::tempdir;

use super::*;
use crate::rng::Prng;

fn tiny_conv_specs(num_classes: usize) -> Vec<LayerSpec> {
    vec![
        LayerSpec::Conv {
            out_channels: 2,
            kernel: 3,
            stride: 1,
        },
        LayerSpec::MaxPool { kernel: 2 },
        LayerSpec::Relu,
        LayerSpec::Flatten,
        LayerSpec::Dense { out_dim: 8 },
        LayerSpec::Relu,
        LayerSpec::Dense {
            out_dim: num_classes,
        },
        LayerSpec::Softmax,
    ]
}

fn linear_softmax(input: (usize, usize), num_classes: usize, seed: u64) -> Classifier {
    Classifier::new(
        input,
        num_classes,
        &[
            LayerSpec::Flatten,
            LayerSpec::Dense {
                out_dim: num_classes,
            },
            LayerSpec::Softmax,
        ],
        seed,
    )
    .unwrap()
}

fn random_grid(h: usize, w: usize, rng: &mut Prng) -> Grid {
    Grid::from_values(h, w, (0..h * w).map(|_| rng.uniform(0.05, 1.0)).collect()).unwrap()
}

/// Smallest |pre-activation| over relu units and smallest top-two gap over
/// pool windows. Finite differences are only trusted at points comfortably
/// away from these kinks.
fn kink_margin(model: &Classifier, x: &Grid) -> f64 {
    let acts = model.run_forward(Vol::from_grid(x));
    let mut margin = f64::INFINITY;
    for (i, layer) in model.layers().iter().enumerate() {
        match layer {
            Layer::Relu => {
                for v in &acts[i].data {
                    margin = margin.min(v.abs());
                }
            }
            Layer::MaxPool(pool) => {
                let input = &acts[i];
                for c in 0..input.c {
                    let plane = &input.data[c * pool.in_h * pool.in_w..];
                    for oy in 0..pool.out_h {
                        for ox in 0..pool.out_w {
                            let mut vals: Vec<f64> = (0..pool.kernel)
                                .flat_map(|ky| {
                                    (0..pool.kernel).map(move |kx| {
                                        plane[(oy * pool.kernel + ky) * pool.in_w
                                            + ox * pool.kernel
                                            + kx]
                                    })
                                })
                                .collect();
                            vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
                            if vals.len() > 1 {
                                margin = margin.min(vals[0] - vals[1]);
                            }
                        }
                    }
                }
            }
            _ => {}
        }
    }
    margin
}

fn sample_away_from_kinks(model: &Classifier, rng: &mut Prng) -> Grid {
    let (h, w) = model.input_shape();
    for _ in 0..200 {
        let x = random_grid(h, w, rng);
        if kink_margin(model, &x) > 5e-3 {
            return x;
        }
    }
    panic!("could not sample an input away from kinks");
}

fn central_diff(mut f: impl FnMut(&Grid) -> f64, x: &Grid, idx: usize, h: f64) -> f64 {
    let mut plus = x.clone();
    plus.values_mut()[idx] += h;
    let mut minus = x.clone();
    minus.values_mut()[idx] -= h;
    (f(&plus) - f(&minus)) / (2.0 * h)
}

fn check_gradient(analytic: &Grid, mut f: impl FnMut(&Grid) -> f64, x: &Grid, coords: &[usize]) {
    for &i in coords {
        let fd = central_diff(&mut f, x, i, 1e-5);
        let a = analytic.values()[i];
        let denom = fd.abs().max(a.abs()).max(1e-6);
        assert!(
            ((fd - a) / denom).abs() < 1e-4,
            "coordinate {i}: analytic {a} vs finite difference {fd}"
        );
    }
}

#[test]
fn forward_is_a_distribution() {
    let model = Classifier::new((8, 8), 3, &tiny_conv_specs(3), 11).unwrap();
    let mut rng = Prng::seeded(5);
    for _ in 0..5 {
        let x = random_grid(8, 8, &mut rng);
        let p = model.forward(&x).unwrap();
        assert_eq!(p.len(), 3);
        assert!(p.iter().all(|v| *v >= 0.0));
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        // Scaling the input changes the logits but not the normalization.
        let mut x2 = x.clone();
        x2.values_mut().iter_mut().for_each(|v| *v *= 2.0);
        let p2 = model.forward(&x2).unwrap();
        assert!((p2.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn zero_weights_give_uniform_output() {
    let model = Classifier::with_zero_weights((6, 6), 4, &tiny_conv_specs(4)).unwrap();
    let mut rng = Prng::seeded(2);
    let x = random_grid(6, 6, &mut rng);
    let p = model.forward(&x).unwrap();
    for v in p {
        assert_relative_eq!(v, 0.25, epsilon = 1e-12);
    }
}

#[test]
fn forward_rejects_wrong_shape() {
    let model = linear_softmax((4, 4), 2, 0);
    assert!(model.forward(&Grid::zeros(5, 4)).is_err());
}

#[test]
fn cross_entropy_reference_values() {
    let uniform = vec![0.1; 10];
    assert_relative_eq!(
        cross_entropy(&uniform, 7).unwrap(),
        10.0_f64.ln(),
        epsilon = 1e-12
    );
    let mut onehot = vec![0.0; 4];
    onehot[2] = 1.0;
    assert_eq!(cross_entropy(&onehot, 2).unwrap(), 0.0);
    let half = vec![0.5, 0.25, 0.25];
    assert_relative_eq!(
        cross_entropy(&half, 0).unwrap(),
        2.0_f64.ln(),
        epsilon = 1e-12
    );
    assert!(cross_entropy(&half, 3).is_err());
    // Cross-entropy clamps p[y] at 1e-12 rather than producing infinity.
    let zero = vec![0.0, 1.0];
    assert!(cross_entropy(&zero, 0).unwrap().is_finite());
}

#[test]
fn input_gradient_matches_finite_differences() {
    let model = Classifier::new((8, 8), 3, &tiny_conv_specs(3), 23).unwrap();
    let mut rng = Prng::seeded(99);
    for trial in 0..5 {
        let x = sample_away_from_kinks(&model, &mut rng);
        let label = trial % 3;
        let grad = model.input_gradient(&x, label).unwrap();
        let coords: Vec<usize> = (0..8).map(|_| rng.below(64)).collect();
        check_gradient(
            &grad,
            |x| {
                let p = model.forward(x).unwrap();
                cross_entropy(&p, label).unwrap()
            },
            &x,
            &coords,
        );
    }
}

#[test]
fn logit_gradient_matches_finite_differences() {
    let model = Classifier::new((8, 8), 3, &tiny_conv_specs(3), 31).unwrap();
    let mut rng = Prng::seeded(7);
    for class_k in 0..3 {
        let x = sample_away_from_kinks(&model, &mut rng);
        let grad = model.logit_gradient(&x, class_k).unwrap();
        let coords: Vec<usize> = (0..8).map(|_| rng.below(64)).collect();
        check_gradient(&grad, |x| model.logits(x).unwrap()[class_k], &x, &coords);
    }
}

#[test]
fn probability_gradient_matches_finite_differences() {
    let model = Classifier::new((8, 8), 3, &tiny_conv_specs(3), 37).unwrap();
    let mut rng = Prng::seeded(13);
    let x = sample_away_from_kinks(&model, &mut rng);
    let grad = model.probability_gradient(&x, 1).unwrap();
    let coords: Vec<usize> = (0..8).map(|_| rng.below(64)).collect();
    check_gradient(&grad, |x| model.forward(x).unwrap()[1], &x, &coords);
}

#[test]
fn linear_softmax_closed_form_gradients() {
    let model = linear_softmax((3, 4), 3, 17);
    let Layer::Dense(dense) = &model.layers()[1] else {
        panic!("expected dense layer");
    };
    let w = dense.weights.clone();
    let mut rng = Prng::seeded(3);
    let x = random_grid(3, 4, &mut rng);

    // Loss gradient: (softmax(Wx + b) - onehot(y))^T W, reshaped.
    let label = 2;
    let p = model.forward(&x).unwrap();
    let grad = model.input_gradient(&x, label).unwrap();
    for i in 0..12 {
        let mut expected = 0.0;
        for (j, pj) in p.iter().enumerate() {
            let delta = if j == label { pj - 1.0 } else { *pj };
            expected += delta * w[j * 12 + i];
        }
        assert_relative_eq!(grad.values()[i], expected, epsilon = 1e-12);
    }

    // Logit gradient: row k of W, reshaped.
    let grad_k = model.logit_gradient(&x, 1).unwrap();
    for i in 0..12 {
        assert_relative_eq!(grad_k.values()[i], w[12 + i], epsilon = 1e-12);
    }
}

#[test]
fn ignored_pixel_has_zero_gradient() {
    let mut model = linear_softmax((2, 2), 2, 5);
    let dead = 3;
    if let Layer::Dense(dense) = &mut model.layers_mut()[1] {
        for j in 0..2 {
            dense.weights[j * 4 + dead] = 0.0;
        }
    }
    let x = Grid::from_rows(&[&[0.3, 0.6], &[0.9, 0.2]]).unwrap();
    let grad = model.input_gradient(&x, 0).unwrap();
    assert_eq!(grad.values()[dead], 0.0);
}

#[test]
fn relu_subgradient_at_zero_input() {
    // A bias-free relu network evaluated at the zero image: every relu sits
    // exactly at its kink and the convention relu'(0) = 0 zeroes the
    // gradient contribution.
    let mut model = Classifier::with_zero_weights(
        (4, 4),
        2,
        &[
            LayerSpec::Flatten,
            LayerSpec::Dense { out_dim: 4 },
            LayerSpec::Relu,
            LayerSpec::Dense { out_dim: 2 },
            LayerSpec::Softmax,
        ],
    )
    .unwrap();
    let mut rng = Prng::seeded(1);
    for layer in model.layers_mut() {
        if let Layer::Dense(d) = layer {
            for w in &mut d.weights {
                *w = rng.uniform(-1.0, 1.0);
            }
            // biases stay zero
        }
    }
    let grad = model.input_gradient(&Grid::zeros(4, 4), 0).unwrap();
    assert!(grad.values().iter().all(|v| *v == 0.0));
}

#[test]
fn maxpool_ties_route_to_first_row_major() {
    let model = Classifier::with_zero_weights(
        (2, 2),
        2,
        &[
            LayerSpec::MaxPool { kernel: 2 },
            LayerSpec::Flatten,
            LayerSpec::Dense { out_dim: 2 },
            LayerSpec::Softmax,
        ],
    )
    .unwrap();
    let mut model = model;
    if let Layer::Dense(d) = &mut model.layers_mut()[2] {
        d.weights = vec![1.0, -1.0];
    }
    // All four inputs equal: the pooled value must come from (0,0).
    let x = Grid::constant(2, 2, 0.5);
    let grad = model.logit_gradient(&x, 0).unwrap();
    assert!(grad.values()[0] != 0.0);
    assert_eq!(&grad.values()[1..], &[0.0, 0.0, 0.0]);
}

#[test]
fn randomize_zero_layers_is_identity() {
    let model = Classifier::new((8, 8), 3, &tiny_conv_specs(3), 41).unwrap();
    let same = model.randomize_layers(0, 123).unwrap();
    let mut rng = Prng::seeded(8);
    let x = random_grid(8, 8, &mut rng);
    assert_eq!(model.forward(&x).unwrap(), same.forward(&x).unwrap());
}

#[test]
fn randomize_is_deterministic_and_bounded() {
    let model = Classifier::new((8, 8), 3, &tiny_conv_specs(3), 41).unwrap();
    let a = model.randomize_layers(2, 77).unwrap();
    let b = model.randomize_layers(2, 77).unwrap();
    let mut rng = Prng::seeded(9);
    let x = random_grid(8, 8, &mut rng);
    assert_eq!(a.forward(&x).unwrap(), b.forward(&x).unwrap());
    // A different seed must produce different weights.
    let c = model.randomize_layers(2, 78).unwrap();
    assert_ne!(a.forward(&x).unwrap(), c.forward(&x).unwrap());
    // Out-of-range cursors are rejected.
    assert!(model.randomize_layers(4, 0).is_err());
}

#[test]
fn randomize_leaves_lower_layers_untouched() {
    let model = Classifier::new((8, 8), 3, &tiny_conv_specs(3), 41).unwrap();
    let randomized = model.randomize_layers(1, 5).unwrap();
    let (Layer::Conv(orig), Layer::Conv(rand)) = (&model.layers()[0], &randomized.layers()[0])
    else {
        panic!("expected conv layers");
    };
    assert_eq!(orig.weights, rand.weights);
}

#[test]
fn weights_round_trip_bit_exact() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("w.json");
    let model = Classifier::new((8, 8), 3, &tiny_conv_specs(3), 53).unwrap();
    save_weights(&model, &path).unwrap();
    let loaded = load_weights(&path).unwrap();
    let mut rng = Prng::seeded(4);
    let x = random_grid(8, 8, &mut rng);
    assert_eq!(model.forward(&x).unwrap(), loaded.forward(&x).unwrap());
}

#[test]
fn weights_load_rejects_truncation_and_mismatch() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("w.json");
    let model = Classifier::new((8, 8), 3, &tiny_conv_specs(3), 53).unwrap();
    save_weights(&model, &path).unwrap();

    let text = std::fs::read_to_string(&path).unwrap();
    let truncated_path = dir.path().join("trunc.json");
    std::fs::write(&truncated_path, &text[..text.len() / 2]).unwrap();
    assert!(load_weights(&truncated_path).is_err());

    let err = load_weights_expecting(&path, (8, 8), 3, &lenet_specs(3));
    assert!(matches!(err, Err(crate::Error::ArchMismatch(_))));
}

#[test]
fn model_with_dense_before_flatten_rejected() {
    let bad = [
        LayerSpec::Dense { out_dim: 4 },
        LayerSpec::Softmax,
    ];
    assert!(Classifier::with_zero_weights((4, 4), 4, &bad).is_err());
}

#[test]
fn softmax_must_be_last() {
    let bad = [
        LayerSpec::Flatten,
        LayerSpec::Softmax,
        LayerSpec::Dense { out_dim: 2 },
    ];
    assert!(Classifier::with_zero_weights((2, 2), 2, &bad).is_err());
}

#[test]
fn lenet_shapes_chain_on_28x28() {
    let model = Classifier::new((28, 28), 10, &lenet_specs(10), 0).unwrap();
    let p = model.forward(&Grid::zeros(28, 28)).unwrap();
    assert_eq!(p.len(), 10);
    assert_eq!(model.weight_layer_count(), 5);
}
