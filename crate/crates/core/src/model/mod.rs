//! From-scratch differentiable feed-forward classifier.
//!
//! Supports convolution, max-pooling, ReLU, sigmoid, flatten, dense and a
//! final softmax, all in `f64`. Reverse-mode gradients are available with
//! respect to the weights (for training) and with respect to the input (for
//! explanation). A trained [`Classifier`] is immutable, so forward and
//! gradient queries may run concurrently from multiple threads.

mod data;
mod train;
mod weights;

pub use data::{load_idx_images, load_idx_labels, Dataset};
pub use train::{accuracy, train, EpochLog, TrainConfig};
pub use weights::{load_weights, load_weights_expecting, save_weights};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::rng::Prng;

/// Architecture descriptor for one layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Conv {
        out_channels: usize,
        kernel: usize,
        stride: usize,
    },
    MaxPool {
        kernel: usize,
    },
    Relu,
    Sigmoid,
    Flatten,
    Dense {
        out_dim: usize,
    },
    Softmax,
}

/// The reference convolutional architecture used by the CLI presets:
/// conv(6,5×5) → pool(2) → relu → conv(16,5×5) → pool(2) → relu → flatten
/// → dense(120) → relu → dense(84) → relu → dense(c) → softmax.
pub fn lenet_specs(num_classes: usize) -> Vec<LayerSpec> {
    vec![
        LayerSpec::Conv {
            out_channels: 6,
            kernel: 5,
            stride: 1,
        },
        LayerSpec::MaxPool { kernel: 2 },
        LayerSpec::Relu,
        LayerSpec::Conv {
            out_channels: 16,
            kernel: 5,
            stride: 1,
        },
        LayerSpec::MaxPool { kernel: 2 },
        LayerSpec::Relu,
        LayerSpec::Flatten,
        LayerSpec::Dense { out_dim: 120 },
        LayerSpec::Relu,
        LayerSpec::Dense { out_dim: 84 },
        LayerSpec::Relu,
        LayerSpec::Dense {
            out_dim: num_classes,
        },
        LayerSpec::Softmax,
    ]
}

/// Dense activation volume, channel-major row-major.
#[derive(Debug, Clone)]
pub(crate) struct Vol {
    pub c: usize,
    pub h: usize,
    pub w: usize,
    pub data: Vec<f64>,
}

impl Vol {
    fn zeros(c: usize, h: usize, w: usize) -> Self {
        Vol {
            c,
            h,
            w,
            data: vec![0.0; c * h * w],
        }
    }

    fn from_grid(grid: &Grid) -> Self {
        Vol {
            c: 1,
            h: grid.height(),
            w: grid.width(),
            data: grid.values().to_vec(),
        }
    }

    fn dims(&self) -> (usize, usize, usize) {
        (self.c, self.h, self.w)
    }
}

#[derive(Debug, Clone)]
pub(crate) struct ConvLayer {
    pub in_c: usize,
    pub out_c: usize,
    pub kernel: usize,
    pub stride: usize,
    pub in_h: usize,
    pub in_w: usize,
    pub out_h: usize,
    pub out_w: usize,
    /// [out_c][in_c][kernel][kernel], flat.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct DenseLayer {
    pub in_dim: usize,
    pub out_dim: usize,
    /// [out_dim][in_dim], flat.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct PoolLayer {
    pub kernel: usize,
    pub in_h: usize,
    pub in_w: usize,
    pub out_h: usize,
    pub out_w: usize,
}

#[derive(Debug, Clone)]
pub(crate) enum Layer {
    Conv(ConvLayer),
    MaxPool(PoolLayer),
    Relu,
    Sigmoid,
    Flatten,
    Dense(DenseLayer),
    Softmax,
}

/// Differentiable feed-forward classifier mapping an h×w grid to a
/// probability vector over `num_classes` classes.
#[derive(Debug, Clone)]
pub struct Classifier {
    input_shape: (usize, usize),
    num_classes: usize,
    specs: Vec<LayerSpec>,
    layers: Vec<Layer>,
}

fn init_conv(layer: &mut ConvLayer, rng: &mut Prng) {
    let fan_in = (layer.in_c * layer.kernel * layer.kernel) as f64;
    let bound = 1.0 / fan_in.sqrt();
    for w in &mut layer.weights {
        *w = rng.uniform(-bound, bound);
    }
    for b in &mut layer.bias {
        *b = rng.uniform(-bound, bound);
    }
}

fn init_dense(layer: &mut DenseLayer, rng: &mut Prng) {
    let bound = 1.0 / (layer.in_dim as f64).sqrt();
    for w in &mut layer.weights {
        *w = rng.uniform(-bound, bound);
    }
    for b in &mut layer.bias {
        *b = rng.uniform(-bound, bound);
    }
}

impl Classifier {
    /// Build a classifier with freshly initialized weights.
    ///
    /// Weight-bearing layers are initialized uniform(−1/√fan_in, 1/√fan_in)
    /// from a PRNG seeded with `seed`, so construction is deterministic.
    pub fn new(
        input_shape: (usize, usize),
        num_classes: usize,
        specs: &[LayerSpec],
        seed: u64,
    ) -> Result<Self> {
        let mut model = Self::with_zero_weights(input_shape, num_classes, specs)?;
        let mut rng = Prng::seeded(seed);
        for layer in &mut model.layers {
            match layer {
                Layer::Conv(conv) => init_conv(conv, &mut rng),
                Layer::Dense(dense) => init_dense(dense, &mut rng),
                _ => {}
            }
        }
        Ok(model)
    }

    /// Build the layer chain with all weights zero, validating shapes.
    pub(crate) fn with_zero_weights(
        input_shape: (usize, usize),
        num_classes: usize,
        specs: &[LayerSpec],
    ) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::InvalidModel(format!(
                "need at least 2 classes, got {num_classes}"
            )));
        }
        if specs.is_empty() {
            return Err(Error::InvalidModel("empty layer list".to_string()));
        }
        let (mut c, mut h, mut w) = (1usize, input_shape.0, input_shape.1);
        if h == 0 || w == 0 {
            return Err(Error::InvalidModel("zero-sized input".to_string()));
        }
        let mut layers = Vec::with_capacity(specs.len());
        for (i, spec) in specs.iter().enumerate() {
            let last = i + 1 == specs.len();
            match *spec {
                LayerSpec::Conv {
                    out_channels,
                    kernel,
                    stride,
                } => {
                    if out_channels == 0 || kernel == 0 || stride == 0 {
                        return Err(Error::InvalidModel(format!(
                            "layer {i}: conv parameters must be positive"
                        )));
                    }
                    if kernel > h || kernel > w {
                        return Err(Error::InvalidModel(format!(
                            "layer {i}: {kernel}x{kernel} kernel exceeds {h}x{w} input"
                        )));
                    }
                    let out_h = (h - kernel) / stride + 1;
                    let out_w = (w - kernel) / stride + 1;
                    layers.push(Layer::Conv(ConvLayer {
                        in_c: c,
                        out_c: out_channels,
                        kernel,
                        stride,
                        in_h: h,
                        in_w: w,
                        out_h,
                        out_w,
                        weights: vec![0.0; out_channels * c * kernel * kernel],
                        bias: vec![0.0; out_channels],
                    }));
                    c = out_channels;
                    h = out_h;
                    w = out_w;
                }
                LayerSpec::MaxPool { kernel } => {
                    if kernel == 0 || kernel > h || kernel > w {
                        return Err(Error::InvalidModel(format!(
                            "layer {i}: pool kernel {kernel} invalid for {h}x{w} input"
                        )));
                    }
                    let out_h = h / kernel;
                    let out_w = w / kernel;
                    layers.push(Layer::MaxPool(PoolLayer {
                        kernel,
                        in_h: h,
                        in_w: w,
                        out_h,
                        out_w,
                    }));
                    h = out_h;
                    w = out_w;
                }
                LayerSpec::Relu => layers.push(Layer::Relu),
                LayerSpec::Sigmoid => layers.push(Layer::Sigmoid),
                LayerSpec::Flatten => {
                    c *= h * w;
                    h = 1;
                    w = 1;
                    layers.push(Layer::Flatten);
                }
                LayerSpec::Dense { out_dim } => {
                    if h != 1 || w != 1 {
                        return Err(Error::InvalidModel(format!(
                            "layer {i}: dense requires flattened input, have {c}x{h}x{w}"
                        )));
                    }
                    if out_dim == 0 {
                        return Err(Error::InvalidModel(format!(
                            "layer {i}: dense out_dim must be positive"
                        )));
                    }
                    layers.push(Layer::Dense(DenseLayer {
                        in_dim: c,
                        out_dim,
                        weights: vec![0.0; out_dim * c],
                        bias: vec![0.0; out_dim],
                    }));
                    c = out_dim;
                }
                LayerSpec::Softmax => {
                    if !last {
                        return Err(Error::InvalidModel(format!(
                            "layer {i}: softmax must be the final layer"
                        )));
                    }
                    layers.push(Layer::Softmax);
                }
            }
        }
        if !matches!(layers.last(), Some(Layer::Softmax)) {
            return Err(Error::InvalidModel(
                "final layer must be softmax".to_string(),
            ));
        }
        if c != num_classes || h != 1 || w != 1 {
            return Err(Error::InvalidModel(format!(
                "output shape {c}x{h}x{w} does not match {num_classes} classes"
            )));
        }
        Ok(Classifier {
            input_shape,
            num_classes,
            specs: specs.to_vec(),
            layers,
        })
    }

    pub fn input_shape(&self) -> (usize, usize) {
        self.input_shape
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn specs(&self) -> &[LayerSpec] {
        &self.specs
    }

    /// Number of weight-bearing (conv or dense) layers.
    pub fn weight_layer_count(&self) -> usize {
        self.layers
            .iter()
            .filter(|l| matches!(l, Layer::Conv(_) | Layer::Dense(_)))
            .count()
    }

    pub(crate) fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    fn check_input(&self, x: &Grid) -> Result<()> {
        if x.shape() == self.input_shape {
            Ok(())
        } else {
            Err(Error::ShapeMismatch {
                expected_h: self.input_shape.0,
                expected_w: self.input_shape.1,
                got_h: x.height(),
                got_w: x.width(),
            })
        }
    }

    /// Forward pass; returns the softmax probability vector.
    pub fn forward(&self, x: &Grid) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let acts = self.run_forward(Vol::from_grid(x));
        Ok(acts.last().unwrap().data.clone())
    }

    /// Forward pass stopping before the final softmax.
    pub fn logits(&self, x: &Grid) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let acts = self.run_forward(Vol::from_grid(x));
        Ok(acts[acts.len() - 2].data.clone())
    }

    /// Predicted class: argmax probability, lowest index on ties.
    pub fn predict(&self, x: &Grid) -> Result<usize> {
        Ok(argmax(&self.forward(x)?))
    }

    /// Run all layers, keeping every intermediate activation.
    /// `acts[0]` is the input; `acts[i + 1]` is the output of layer `i`.
    pub(crate) fn run_forward(&self, input: Vol) -> Vec<Vol> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(input);
        for layer in &self.layers {
            let out = layer.forward(acts.last().unwrap());
            acts.push(out);
        }
        acts
    }

    /// Backpropagate `seed` (a gradient with respect to the pre-softmax
    /// logits) down to the input. Weight gradients are accumulated into
    /// `grads` when provided.
    pub(crate) fn backward(
        &self,
        acts: &[Vol],
        seed: Vec<f64>,
        mut grads: Option<&mut Gradients>,
    ) -> Vol {
        debug_assert!(matches!(self.layers.last(), Some(Layer::Softmax)));
        let logits_dims = acts[acts.len() - 2].dims();
        let mut grad = Vol {
            c: logits_dims.0,
            h: logits_dims.1,
            w: logits_dims.2,
            data: seed,
        };
        // Softmax is folded into the seed, so walk the layers below it.
        for (i, layer) in self.layers.iter().enumerate().rev().skip(1) {
            let layer_grads = grads
                .as_deref_mut()
                .map(|g| &mut g.per_layer[i]);
            grad = layer.backward(&acts[i], &grad, layer_grads);
        }
        grad
    }

    /// Gradient of `cross_entropy(forward(x), label)` with respect to `x`.
    pub fn input_gradient(&self, x: &Grid, label: usize) -> Result<Grid> {
        Ok(self.loss_and_input_gradient(x, label)?.1)
    }

    /// Cross-entropy loss and its input gradient in one pass.
    pub fn loss_and_input_gradient(&self, x: &Grid, label: usize) -> Result<(f64, Grid)> {
        self.check_input(x)?;
        if label >= self.num_classes {
            return Err(Error::InvalidLabel {
                label,
                num_classes: self.num_classes,
            });
        }
        let acts = self.run_forward(Vol::from_grid(x));
        let probs = &acts.last().unwrap().data;
        let loss = cross_entropy(probs, label)?;
        // d(-log softmax_y)/d logits = p - onehot(y)
        let mut seed = probs.clone();
        seed[label] -= 1.0;
        let grad = self.backward(&acts, seed, None);
        Ok((loss, Grid::from_values(x.height(), x.width(), grad.data)?))
    }

    /// Gradient of the pre-softmax logit of `class_k` with respect to `x`.
    pub fn logit_gradient(&self, x: &Grid, class_k: usize) -> Result<Grid> {
        self.check_input(x)?;
        if class_k >= self.num_classes {
            return Err(Error::InvalidLabel {
                label: class_k,
                num_classes: self.num_classes,
            });
        }
        let acts = self.run_forward(Vol::from_grid(x));
        let mut seed = vec![0.0; self.num_classes];
        seed[class_k] = 1.0;
        let grad = self.backward(&acts, seed, None);
        Grid::from_values(x.height(), x.width(), grad.data)
    }

    /// Gradient of the post-softmax probability of `class_k` with respect
    /// to `x`.
    pub fn probability_gradient(&self, x: &Grid, class_k: usize) -> Result<Grid> {
        self.check_input(x)?;
        if class_k >= self.num_classes {
            return Err(Error::InvalidLabel {
                label: class_k,
                num_classes: self.num_classes,
            });
        }
        let acts = self.run_forward(Vol::from_grid(x));
        let probs = &acts.last().unwrap().data;
        // dp_k/dz = p_k (e_k - p)
        let pk = probs[class_k];
        let mut seed: Vec<f64> = probs.iter().map(|p| -pk * p).collect();
        seed[class_k] += pk;
        let grad = self.backward(&acts, seed, None);
        Grid::from_values(x.height(), x.width(), grad.data)
    }

    /// Re-initialize the top `num_randomized` weight-bearing layers, counted
    /// from the output layer backwards, drawing from a PRNG seeded with
    /// `seed`. The original model is left untouched.
    pub fn randomize_layers(&self, num_randomized: usize, seed: u64) -> Result<Classifier> {
        let total = self.weight_layer_count();
        if num_randomized > total {
            return Err(Error::InvalidConfig(format!(
                "cannot randomize {num_randomized} of {total} weight-bearing layers"
            )));
        }
        let mut model = self.clone();
        let mut rng = Prng::seeded(seed);
        let weight_layer_indices: Vec<usize> = model
            .layers
            .iter()
            .enumerate()
            .filter_map(|(i, l)| matches!(l, Layer::Conv(_) | Layer::Dense(_)).then_some(i))
            .collect();
        // Top-down: output layer first.
        for &idx in weight_layer_indices.iter().rev().take(num_randomized) {
            match &mut model.layers[idx] {
                Layer::Conv(conv) => init_conv(conv, &mut rng),
                Layer::Dense(dense) => init_dense(dense, &mut rng),
                _ => unreachable!(),
            }
        }
        Ok(model)
    }
}

/// Cross-entropy −log p\[label\], with p\[label\] clamped below at 1e-12 so a
/// mask that drives the target probability to numerical zero still yields a
/// finite loss.
pub fn cross_entropy(probs: &[f64], label: usize) -> Result<f64> {
    if label >= probs.len() {
        return Err(Error::InvalidLabel {
            label,
            num_classes: probs.len(),
        });
    }
    Ok(-probs[label].max(1e-12).ln())
}

/// Index of the largest value; lowest index wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Per-layer weight gradient buffers, aligned with the layer list.
#[derive(Debug, Clone)]
pub(crate) struct Gradients {
    pub per_layer: Vec<Option<LayerGrads>>,
}

#[derive(Debug, Clone)]
pub(crate) struct LayerGrads {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Gradients {
    pub(crate) fn zeros_like(model: &Classifier) -> Self {
        let per_layer = model
            .layers
            .iter()
            .map(|l| match l {
                Layer::Conv(c) => Some(LayerGrads {
                    weights: vec![0.0; c.weights.len()],
                    bias: vec![0.0; c.bias.len()],
                }),
                Layer::Dense(d) => Some(LayerGrads {
                    weights: vec![0.0; d.weights.len()],
                    bias: vec![0.0; d.bias.len()],
                }),
                _ => None,
            })
            .collect();
        Gradients { per_layer }
    }

    pub(crate) fn reset(&mut self) {
        for slot in self.per_layer.iter_mut().flatten() {
            slot.weights.iter_mut().for_each(|v| *v = 0.0);
            slot.bias.iter_mut().for_each(|v| *v = 0.0);
        }
    }
}

impl Layer {
    fn forward(&self, input: &Vol) -> Vol {
        match self {
            Layer::Conv(conv) => conv.forward(input),
            Layer::MaxPool(pool) => pool.forward(input),
            Layer::Relu => Vol {
                c: input.c,
                h: input.h,
                w: input.w,
                data: input.data.iter().map(|v| v.max(0.0)).collect(),
            },
            Layer::Sigmoid => Vol {
                c: input.c,
                h: input.h,
                w: input.w,
                data: input.data.iter().map(|v| 1.0 / (1.0 + (-v).exp())).collect(),
            },
            Layer::Flatten => Vol {
                c: input.data.len(),
                h: 1,
                w: 1,
                data: input.data.clone(),
            },
            Layer::Dense(dense) => dense.forward(input),
            Layer::Softmax => {
                let max = input.data.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v));
                let exps: Vec<f64> = input.data.iter().map(|v| (v - max).exp()).collect();
                let sum: f64 = exps.iter().sum();
                Vol {
                    c: input.c,
                    h: input.h,
                    w: input.w,
                    data: exps.into_iter().map(|e| e / sum).collect(),
                }
            }
        }
    }

    /// Gradient with respect to this layer's input, given the gradient with
    /// respect to its output. Softmax never reaches here: its gradient is
    /// folded into the backward seed analytically.
    fn backward(&self, input: &Vol, dout: &Vol, grads: Option<&mut Option<LayerGrads>>) -> Vol {
        match self {
            Layer::Conv(conv) => conv.backward(input, dout, grads.and_then(|g| g.as_mut())),
            Layer::MaxPool(pool) => pool.backward(input, dout),
            Layer::Relu => Vol {
                c: input.c,
                h: input.h,
                w: input.w,
                // Subgradient convention: relu'(0) = 0.
                data: input
                    .data
                    .iter()
                    .zip(&dout.data)
                    .map(|(x, g)| if *x > 0.0 { *g } else { 0.0 })
                    .collect(),
            },
            Layer::Sigmoid => {
                let out: Vec<f64> = input.data.iter().map(|v| 1.0 / (1.0 + (-v).exp())).collect();
                Vol {
                    c: input.c,
                    h: input.h,
                    w: input.w,
                    data: out
                        .iter()
                        .zip(&dout.data)
                        .map(|(s, g)| g * s * (1.0 - s))
                        .collect(),
                }
            }
            Layer::Flatten => Vol {
                c: input.c,
                h: input.h,
                w: input.w,
                data: dout.data.clone(),
            },
            Layer::Dense(dense) => dense.backward(input, dout, grads.and_then(|g| g.as_mut())),
            Layer::Softmax => unreachable!("softmax gradient is folded into the seed"),
        }
    }
}

impl ConvLayer {
    fn forward(&self, input: &Vol) -> Vol {
        debug_assert_eq!(input.dims(), (self.in_c, self.in_h, self.in_w));
        let (k, s) = (self.kernel, self.stride);
        let mut out = Vol::zeros(self.out_c, self.out_h, self.out_w);
        let kk = k * k;
        for oc in 0..self.out_c {
            let w_oc = &self.weights[oc * self.in_c * kk..(oc + 1) * self.in_c * kk];
            let bias = self.bias[oc];
            let out_plane = &mut out.data[oc * self.out_h * self.out_w..];
            for oy in 0..self.out_h {
                for ox in 0..self.out_w {
                    let mut acc = bias;
                    for ic in 0..self.in_c {
                        let w_base = ic * kk;
                        let in_base = ic * self.in_h * self.in_w + oy * s * self.in_w + ox * s;
                        for ky in 0..k {
                            let wrow = &w_oc[w_base + ky * k..w_base + ky * k + k];
                            let xrow = &input.data[in_base + ky * self.in_w
                                ..in_base + ky * self.in_w + k];
                            for i in 0..k {
                                acc += wrow[i] * xrow[i];
                            }
                        }
                    }
                    out_plane[oy * self.out_w + ox] = acc;
                }
            }
        }
        out
    }

    fn backward(&self, input: &Vol, dout: &Vol, grads: Option<&mut LayerGrads>) -> Vol {
        let (k, s) = (self.kernel, self.stride);
        let kk = k * k;
        let mut dx = Vol::zeros(self.in_c, self.in_h, self.in_w);
        let (mut dw, mut db) = match grads {
            Some(g) => (Some(&mut g.weights), Some(&mut g.bias)),
            None => (None, None),
        };
        for oc in 0..self.out_c {
            let w_oc = &self.weights[oc * self.in_c * kk..(oc + 1) * self.in_c * kk];
            let dout_plane = &dout.data[oc * self.out_h * self.out_w..];
            for oy in 0..self.out_h {
                for ox in 0..self.out_w {
                    let g = dout_plane[oy * self.out_w + ox];
                    if g == 0.0 {
                        continue;
                    }
                    if let Some(db) = db.as_deref_mut() {
                        db[oc] += g;
                    }
                    for ic in 0..self.in_c {
                        let w_base = ic * kk;
                        let in_base = ic * self.in_h * self.in_w + oy * s * self.in_w + ox * s;
                        for ky in 0..k {
                            let w_off = w_base + ky * k;
                            let x_off = in_base + ky * self.in_w;
                            let wrow = &w_oc[w_off..w_off + k];
                            let xrow = &input.data[x_off..x_off + k];
                            let dxrow = &mut dx.data[x_off..x_off + k];
                            if let Some(dw) = dw.as_deref_mut() {
                                let dwrow = &mut dw[oc * self.in_c * kk + w_off
                                    ..oc * self.in_c * kk + w_off + k];
                                for i in 0..k {
                                    dwrow[i] += g * xrow[i];
                                    dxrow[i] += g * wrow[i];
                                }
                            } else {
                                for i in 0..k {
                                    dxrow[i] += g * wrow[i];
                                }
                            }
                        }
                    }
                }
            }
        }
        dx
    }
}

impl PoolLayer {
    /// Index of the window maximum; the first row-major maximum wins ties.
    #[inline]
    fn window_argmax(&self, plane: &[f64], oy: usize, ox: usize) -> usize {
        let k = self.kernel;
        let base = oy * k * self.in_w + ox * k;
        let mut best_idx = base;
        let mut best = plane[base];
        for ky in 0..k {
            for kx in 0..k {
                let idx = base + ky * self.in_w + kx;
                if plane[idx] > best {
                    best = plane[idx];
                    best_idx = idx;
                }
            }
        }
        best_idx
    }

    fn forward(&self, input: &Vol) -> Vol {
        let mut out = Vol::zeros(input.c, self.out_h, self.out_w);
        for c in 0..input.c {
            let plane = &input.data[c * self.in_h * self.in_w..(c + 1) * self.in_h * self.in_w];
            let out_plane = &mut out.data[c * self.out_h * self.out_w..];
            for oy in 0..self.out_h {
                for ox in 0..self.out_w {
                    out_plane[oy * self.out_w + ox] = plane[self.window_argmax(plane, oy, ox)];
                }
            }
        }
        out
    }

    fn backward(&self, input: &Vol, dout: &Vol) -> Vol {
        let mut dx = Vol::zeros(input.c, self.in_h, self.in_w);
        for c in 0..input.c {
            let plane = &input.data[c * self.in_h * self.in_w..(c + 1) * self.in_h * self.in_w];
            let dx_plane = &mut dx.data[c * self.in_h * self.in_w..(c + 1) * self.in_h * self.in_w];
            let dout_plane = &dout.data[c * self.out_h * self.out_w..];
            for oy in 0..self.out_h {
                for ox in 0..self.out_w {
                    dx_plane[self.window_argmax(plane, oy, ox)] +=
                        dout_plane[oy * self.out_w + ox];
                }
            }
        }
        dx
    }
}

impl DenseLayer {
    fn forward(&self, input: &Vol) -> Vol {
        debug_assert_eq!(input.data.len(), self.in_dim);
        let mut out = Vol::zeros(self.out_dim, 1, 1);
        for j in 0..self.out_dim {
            let row = &self.weights[j * self.in_dim..(j + 1) * self.in_dim];
            let mut acc = self.bias[j];
            for (w, x) in row.iter().zip(&input.data) {
                acc += w * x;
            }
            out.data[j] = acc;
        }
        out
    }

    fn backward(&self, input: &Vol, dout: &Vol, grads: Option<&mut LayerGrads>) -> Vol {
        let mut dx = Vol::zeros(self.in_dim, 1, 1);
        if let Some(g) = grads {
            for j in 0..self.out_dim {
                let gj = dout.data[j];
                g.bias[j] += gj;
                let row = &self.weights[j * self.in_dim..(j + 1) * self.in_dim];
                let grow = &mut g.weights[j * self.in_dim..(j + 1) * self.in_dim];
                for i in 0..self.in_dim {
                    grow[i] += gj * input.data[i];
                    dx.data[i] += gj * row[i];
                }
            }
        } else {
            for j in 0..self.out_dim {
                let gj = dout.data[j];
                if gj == 0.0 {
                    continue;
                }
                let row = &self.weights[j * self.in_dim..(j + 1) * self.in_dim];
                for i in 0..self.in_dim {
                    dx.data[i] += gj * row[i];
                }
            }
        }
        dx
    }
}

#[cfg(test)]
mod tests;
