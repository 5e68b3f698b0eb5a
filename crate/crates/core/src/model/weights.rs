//! Weight file serialization.
//!
//! Weights are stored as self-describing JSON: the input shape, class count
//! and full layer list with flat value arrays. JSON floats use the shortest
//! representation that parses back to the identical `f64`, so a save/load
//! round trip reproduces forward outputs bit for bit.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{Classifier, Layer, LayerSpec};

const FORMAT_TAG: &str = "ssplain-weights-v1";

#[derive(Serialize, Deserialize)]
struct WeightsFile {
    format: String,
    input_height: usize,
    input_width: usize,
    num_classes: usize,
    layers: Vec<LayerEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum LayerEntry {
    Conv {
        out_channels: usize,
        kernel: usize,
        stride: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
    },
    MaxPool {
        kernel: usize,
    },
    Relu,
    Sigmoid,
    Flatten,
    Dense {
        out_dim: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
    },
    Softmax,
}

impl LayerEntry {
    fn spec(&self) -> LayerSpec {
        match self {
            LayerEntry::Conv {
                out_channels,
                kernel,
                stride,
                ..
            } => LayerSpec::Conv {
                out_channels: *out_channels,
                kernel: *kernel,
                stride: *stride,
            },
            LayerEntry::MaxPool { kernel } => LayerSpec::MaxPool { kernel: *kernel },
            LayerEntry::Relu => LayerSpec::Relu,
            LayerEntry::Sigmoid => LayerSpec::Sigmoid,
            LayerEntry::Flatten => LayerSpec::Flatten,
            LayerEntry::Dense { out_dim, .. } => LayerSpec::Dense { out_dim: *out_dim },
            LayerEntry::Softmax => LayerSpec::Softmax,
        }
    }
}

/// Serialize a model to `path` as JSON.
pub fn save_weights(model: &Classifier, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let layers = model
        .layers()
        .iter()
        .map(|layer| match layer {
            Layer::Conv(c) => LayerEntry::Conv {
                out_channels: c.out_c,
                kernel: c.kernel,
                stride: c.stride,
                weights: c.weights.clone(),
                bias: c.bias.clone(),
            },
            Layer::MaxPool(p) => LayerEntry::MaxPool { kernel: p.kernel },
            Layer::Relu => LayerEntry::Relu,
            Layer::Sigmoid => LayerEntry::Sigmoid,
            Layer::Flatten => LayerEntry::Flatten,
            Layer::Dense(d) => LayerEntry::Dense {
                out_dim: d.out_dim,
                weights: d.weights.clone(),
                bias: d.bias.clone(),
            },
            Layer::Softmax => LayerEntry::Softmax,
        })
        .collect();
    let file = WeightsFile {
        format: FORMAT_TAG.to_string(),
        input_height: model.input_shape().0,
        input_width: model.input_shape().1,
        num_classes: model.num_classes(),
        layers,
    };
    let json = serde_json::to_string(&file)
        .map_err(|e| Error::format("weights", path, e.to_string()))?;
    fs::write(path, json).map_err(|e| Error::io(path, e))
}

/// Load a self-describing weight file.
pub fn load_weights(path: impl AsRef<Path>) -> Result<Classifier> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: WeightsFile = serde_json::from_str(&text)
        .map_err(|e| Error::format("weights", path, e.to_string()))?;
    if file.format != FORMAT_TAG {
        return Err(Error::format(
            "weights",
            path,
            format!("unknown format tag {:?}", file.format),
        ));
    }
    let specs: Vec<LayerSpec> = file.layers.iter().map(LayerEntry::spec).collect();
    let mut model = Classifier::with_zero_weights(
        (file.input_height, file.input_width),
        file.num_classes,
        &specs,
    )?;
    for (i, (layer, entry)) in model.layers_mut().iter_mut().zip(&file.layers).enumerate() {
        match (layer, entry) {
            (Layer::Conv(c), LayerEntry::Conv { weights, bias, .. }) => {
                if weights.len() != c.weights.len() || bias.len() != c.bias.len() {
                    return Err(Error::ArchMismatch(format!(
                        "layer {i}: conv expects {} weights and {} biases, file has {} and {}",
                        c.weights.len(),
                        c.bias.len(),
                        weights.len(),
                        bias.len()
                    )));
                }
                c.weights.copy_from_slice(weights);
                c.bias.copy_from_slice(bias);
            }
            (Layer::Dense(d), LayerEntry::Dense { weights, bias, .. }) => {
                if weights.len() != d.weights.len() || bias.len() != d.bias.len() {
                    return Err(Error::ArchMismatch(format!(
                        "layer {i}: dense expects {} weights and {} biases, file has {} and {}",
                        d.weights.len(),
                        d.bias.len(),
                        weights.len(),
                        bias.len()
                    )));
                }
                d.weights.copy_from_slice(weights);
                d.bias.copy_from_slice(bias);
            }
            _ => {}
        }
    }
    Ok(model)
}

/// Load a weight file, rejecting it unless the stored architecture matches
/// the expected one exactly.
pub fn load_weights_expecting(
    path: impl AsRef<Path>,
    input_shape: (usize, usize),
    num_classes: usize,
    specs: &[LayerSpec],
) -> Result<Classifier> {
    let model = load_weights(path)?;
    if model.input_shape() != input_shape
        || model.num_classes() != num_classes
        || model.specs() != specs
    {
        return Err(Error::ArchMismatch(format!(
            "file holds a {:?} -> {} model with layers {:?}, expected {:?} -> {} with {:?}",
            model.input_shape(),
            model.num_classes(),
            model.specs(),
            input_shape,
            num_classes,
            specs
        )));
    }
    Ok(model)
}
