//! Comparator explainers: saliency, input×gradient, integrated gradients
//! and occlusion. All four are deterministic and produce an h×w score grid
//! on the same interface as the mask solver.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::model::Classifier;

/// Which output quantity gradient-based methods differentiate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientSource {
    /// Pre-softmax logit of the target class (the default).
    Logit,
    /// Post-softmax probability of the target class.
    Probability,
}

impl GradientSource {
    fn gradient(&self, model: &Classifier, x: &Grid, target: usize) -> Result<Grid> {
        match self {
            GradientSource::Logit => model.logit_gradient(x, target),
            GradientSource::Probability => model.probability_gradient(x, target),
        }
    }
}

/// Per-pixel relevance scores for one image and target class.
#[derive(Debug, Clone)]
pub struct AttributionMap {
    pub scores: Grid,
    pub method: String,
    pub target: usize,
}

/// Absolute value of the output gradient with respect to the input.
pub fn saliency(
    model: &Classifier,
    x: &Grid,
    target: usize,
    source: GradientSource,
) -> Result<AttributionMap> {
    let mut scores = source.gradient(model, x, target)?;
    scores.values_mut().iter_mut().for_each(|v| *v = v.abs());
    Ok(AttributionMap {
        scores,
        method: "saliency".to_string(),
        target,
    })
}

/// Elementwise product of the input with the output gradient. Zero pixels
/// get score exactly zero, so the score support never exceeds the image
/// support.
pub fn input_x_gradient(
    model: &Classifier,
    x: &Grid,
    target: usize,
    source: GradientSource,
) -> Result<AttributionMap> {
    let grad = source.gradient(model, x, target)?;
    Ok(AttributionMap {
        scores: x.hadamard(&grad)?,
        method: "input_x_gradient".to_string(),
        target,
    })
}

/// Riemann-sum path integral of the gradient from the black image to `x`:
/// (x − 0) ⊙ (1/steps)·Σ_{t=1..steps} ∇ at (t/steps)·x.
pub fn integrated_gradients(
    model: &Classifier,
    x: &Grid,
    target: usize,
    steps: usize,
    source: GradientSource,
) -> Result<AttributionMap> {
    if steps == 0 {
        return Err(Error::InvalidConfig(
            "integrated gradients needs at least one step".to_string(),
        ));
    }
    let mut acc = Grid::zeros(x.height(), x.width());
    for t in 1..=steps {
        let scale = t as f64 / steps as f64;
        let mut point = x.clone();
        point.values_mut().iter_mut().for_each(|v| *v *= scale);
        let grad = source.gradient(model, &point, target)?;
        for (a, g) in acc.values_mut().iter_mut().zip(grad.values()) {
            *a += g;
        }
    }
    let inv = 1.0 / steps as f64;
    let mut scores = x.clone();
    for (s, a) in scores.values_mut().iter_mut().zip(acc.values()) {
        *s *= a * inv;
    }
    Ok(AttributionMap {
        scores,
        method: "integrated_gradients".to_string(),
        target,
    })
}

/// What occlusion measures when a window is filled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OcclusionMetric {
    /// Drop of the target class probability (the default).
    ProbabilityDrop,
    /// Drop of the target class logit.
    LogitDrop,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OcclusionConfig {
    /// (height, width) of the sliding window.
    pub window: (usize, usize),
    /// (row, col) stride of window placements.
    pub stride: (usize, usize),
    /// Value painted into the window.
    pub fill: f64,
    pub metric: OcclusionMetric,
}

impl Default for OcclusionConfig {
    fn default() -> Self {
        OcclusionConfig {
            window: (1, 1),
            stride: (1, 1),
            fill: 0.0,
            metric: OcclusionMetric::ProbabilityDrop,
        }
    }
}

/// Slide a window over the image, filling it with a constant; each pixel's
/// score is the mean output drop over all placements covering it. Border
/// windows are clipped, and the averaging divides by the actual coverage
/// count per pixel.
pub fn occlusion(
    model: &Classifier,
    x: &Grid,
    target: usize,
    config: &OcclusionConfig,
) -> Result<AttributionMap> {
    let (h, w) = x.shape();
    let (wh, ww) = config.window;
    let (sh, sw) = config.stride;
    if wh == 0 || ww == 0 || wh > h || ww > w {
        return Err(Error::InvalidConfig(format!(
            "occlusion window {wh}x{ww} invalid for a {h}x{w} image"
        )));
    }
    if sh == 0 || sw == 0 {
        return Err(Error::InvalidConfig("occlusion stride must be ≥ 1".to_string()));
    }
    if target >= model.num_classes() {
        return Err(Error::InvalidLabel {
            label: target,
            num_classes: model.num_classes(),
        });
    }

    let score_of = |image: &Grid| -> Result<f64> {
        Ok(match config.metric {
            OcclusionMetric::ProbabilityDrop => model.forward(image)?[target],
            OcclusionMetric::LogitDrop => model.logits(image)?[target],
        })
    };
    let base = score_of(x)?;

    let mut drops = vec![0.0; h * w];
    let mut coverage = vec![0usize; h * w];
    let mut patched = x.clone();
    // Placements step by the stride until the window reaches the far edge;
    // the trailing placements are clipped to the image. A full-image window
    // therefore yields exactly one placement.
    for r0 in (0..h - wh + sh).step_by(sh) {
        for c0 in (0..w - ww + sw).step_by(sw) {
            let r1 = (r0 + wh).min(h);
            let c1 = (c0 + ww).min(w);
            let already_filled = (r0..r1)
                .all(|r| (c0..c1).all(|c| x.get(r, c) == config.fill));
            // A window whose content already equals the fill value cannot
            // change the output; skip the model call.
            let drop = if already_filled {
                0.0
            } else {
                for r in r0..r1 {
                    for c in c0..c1 {
                        patched.set(r, c, config.fill);
                    }
                }
                let score = score_of(&patched)?;
                for r in r0..r1 {
                    for c in c0..c1 {
                        patched.set(r, c, x.get(r, c));
                    }
                }
                base - score
            };
            for r in r0..r1 {
                for c in c0..c1 {
                    drops[r * w + c] += drop;
                    coverage[r * w + c] += 1;
                }
            }
        }
    }

    let scores = drops
        .into_iter()
        .zip(coverage)
        .map(|(d, n)| if n == 0 { 0.0 } else { d / n as f64 })
        .collect();
    Ok(AttributionMap {
        scores: Grid::from_values(h, w, scores)?,
        method: "occlusion".to_string(),
        target,
    })
}
