//! Post-hoc evaluation harness.
//!
//! Attribution maps are judged by progressively revealing (insertion) or
//! erasing (deletion) their highest-ranked pixels and tracking classifier
//! accuracy, normalized sparsity, connected-component structure and the
//! optional curvature/dilation similarities along the sweep. Per-image work
//! is independent and runs on the rayon pool; every reduction happens in
//! image order, so results are identical regardless of thread count.

pub mod components;
pub mod sanity;
pub mod similarity;

pub use components::{largest_cc_ratio, largest_component_size, EdgeRule};
pub use sanity::{sanity_check, spearman, SanityEntry, SanityReport};
pub use similarity::{
    asd, cosine, curvature_similarity, dilation_similarity, load_traces, BranchTrace,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{
    input_x_gradient, integrated_gradients, occlusion, saliency, GradientSource, OcclusionConfig,
};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::model::{argmax, Classifier};
use crate::ssplain::{explain, SsplainConfig, TargetMode};

/// Pixel indices in descending attribution order; equal scores fall back to
/// row-major index order. Always a full permutation of the pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelRanking {
    order: Vec<usize>,
}

impl PixelRanking {
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Number of leading pixels at sparsity `s`: round(s · n).
    pub fn count_at(&self, s: f64) -> usize {
        ((s * self.order.len() as f64).round() as usize).min(self.order.len())
    }
}

/// Stable descending sort by score with row-major tie-break.
pub fn rank_pixels(scores: &Grid) -> PixelRanking {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    // `v + 0.0` collapses -0.0 onto +0.0 so both rank as the same score.
    let key = |i: usize| scores.values()[i] + 0.0;
    order.sort_by(|&a, &b| key(b).total_cmp(&key(a)));
    PixelRanking { order }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    /// Start black, reveal the top-ranked pixels of the original image.
    Insertion,
    /// Start from the original image, erase the top-ranked pixels.
    Deletion,
}

/// The image at sparsity level `s` along a sweep.
pub fn image_at_sparsity(
    x: &Grid,
    ranking: &PixelRanking,
    s: f64,
    mode: SweepMode,
) -> Result<Grid> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::InvalidConfig(format!(
            "sparsity level must be in [0, 1], got {s}"
        )));
    }
    if ranking.order.len() != x.len() {
        return Err(Error::ShapeMismatch {
            expected_h: x.height(),
            expected_w: x.width(),
            got_h: ranking.order.len(),
            got_w: 1,
        });
    }
    let n = ranking.count_at(s);
    match mode {
        SweepMode::Insertion => {
            let mut out = Grid::zeros(x.height(), x.width());
            for &i in &ranking.order[..n] {
                out.values_mut()[i] = x.values()[i];
            }
            Ok(out)
        }
        SweepMode::Deletion => {
            let mut out = x.clone();
            for &i in &ranking.order[..n] {
                out.values_mut()[i] = 0.0;
            }
            Ok(out)
        }
    }
}

/// A metric traced over sparsity levels, with its trapezoidal AUC.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalCurve {
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

impl EvalCurve {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidConfig("empty curve".to_string()));
        }
        for pair in points.windows(2) {
            if pair[1].0 <= pair[0].0 {
                return Err(Error::InvalidConfig(format!(
                    "sparsity levels must strictly increase: {} then {}",
                    pair[0].0, pair[1].0
                )));
            }
        }
        let auc = points
            .windows(2)
            .map(|p| (p[1].0 - p[0].0) * (p[0].1 + p[1].1) * 0.5)
            .sum();
        Ok(EvalCurve { points, auc })
    }

    pub fn value_at(&self, s: f64) -> Option<f64> {
        self.points
            .iter()
            .find(|(ps, _)| (*ps - s).abs() < 1e-12)
            .map(|(_, v)| *v)
    }
}

/// The default sweep grid: 21 levels from 0 to 1 in steps of 0.05.
pub fn default_s_grid() -> Vec<f64> {
    (0..=20).map(|i| i as f64 / 20.0).collect()
}

/// Mean per-class recall over the classes present in `labels`.
pub fn balanced_accuracy(predictions: &[usize], labels: &[usize], num_classes: usize) -> f64 {
    let mut correct = vec![0usize; num_classes];
    let mut total = vec![0usize; num_classes];
    for (&pred, &label) in predictions.iter().zip(labels) {
        total[label] += 1;
        if pred == label {
            correct[label] += 1;
        }
    }
    let mut sum = 0.0;
    let mut classes = 0usize;
    for c in 0..num_classes {
        if total[c] > 0 {
            sum += correct[c] as f64 / total[c] as f64;
            classes += 1;
        }
    }
    if classes == 0 {
        0.0
    } else {
        sum / classes as f64
    }
}

fn plain_accuracy(predictions: &[usize], labels: &[usize]) -> f64 {
    let correct = predictions
        .iter()
        .zip(labels)
        .filter(|(p, l)| p == l)
        .count();
    correct as f64 / labels.len() as f64
}

fn check_batch(images: &[Grid], maps: &[Grid]) -> Result<()> {
    if images.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if images.len() != maps.len() {
        return Err(Error::InvalidConfig(format!(
            "{} images but {} maps",
            images.len(),
            maps.len()
        )));
    }
    Ok(())
}

/// Classifier accuracy along a sweep. `balanced` selects mean per-class
/// recall instead of plain accuracy.
pub fn accuracy_curve(
    model: &Classifier,
    images: &[Grid],
    labels: &[usize],
    maps: &[Grid],
    mode: SweepMode,
    s_grid: &[f64],
    balanced: bool,
) -> Result<EvalCurve> {
    check_batch(images, maps)?;
    if images.len() != labels.len() {
        return Err(Error::InvalidConfig(format!(
            "{} images but {} labels",
            images.len(),
            labels.len()
        )));
    }
    // One prediction row per image, all sparsity levels at once.
    let rows: Vec<Vec<usize>> = images
        .par_iter()
        .zip(maps.par_iter())
        .map(|(x, map)| -> Result<Vec<usize>> {
            let ranking = rank_pixels(map);
            s_grid
                .iter()
                .map(|&s| {
                    let xs = image_at_sparsity(x, &ranking, s, mode)?;
                    Ok(argmax(&model.forward(&xs)?))
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let points = s_grid
        .iter()
        .enumerate()
        .map(|(si, &s)| {
            let predictions: Vec<usize> = rows.iter().map(|row| row[si]).collect();
            let value = if balanced {
                balanced_accuracy(&predictions, labels, model.num_classes())
            } else {
                plain_accuracy(&predictions, labels)
            };
            (s, value)
        })
        .collect();
    EvalCurve::new(points)
}

/// Normalized sparsity ‖X_s‖₁ / ‖X‖₁.
pub fn kappa_s(x: &Grid, xs: &Grid) -> Result<f64> {
    x.check_same_shape(xs)?;
    let denom = x.norm_l1();
    if denom == 0.0 {
        return Err(Error::ZeroNorm { what: "image" });
    }
    Ok(xs.norm_l1() / denom)
}

/// Mean of a per-(image, X_s) metric along the sweep.
fn mean_metric_curve<F>(
    images: &[Grid],
    maps: &[Grid],
    s_grid: &[f64],
    mode: SweepMode,
    metric: F,
) -> Result<EvalCurve>
where
    F: Fn(usize, &Grid, &Grid) -> Result<f64> + Sync,
{
    check_batch(images, maps)?;
    let rows: Vec<Vec<f64>> = images
        .par_iter()
        .zip(maps.par_iter())
        .enumerate()
        .map(|(i, (x, map))| -> Result<Vec<f64>> {
            let ranking = rank_pixels(map);
            s_grid
                .iter()
                .map(|&s| {
                    let xs = image_at_sparsity(x, &ranking, s, mode)?;
                    metric(i, x, &xs)
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let points = s_grid
        .iter()
        .enumerate()
        .map(|(si, &s)| {
            let mean = rows.iter().map(|row| row[si]).sum::<f64>() / rows.len() as f64;
            (s, mean)
        })
        .collect();
    EvalCurve::new(points)
}

/// Mean normalized sparsity along a sweep.
pub fn kappa_curve(
    images: &[Grid],
    maps: &[Grid],
    s_grid: &[f64],
    mode: SweepMode,
) -> Result<EvalCurve> {
    mean_metric_curve(images, maps, s_grid, mode, |_, x, xs| kappa_s(x, xs))
}

/// Mean largest-connected-component ratio along a sweep.
pub fn largest_cc_curve(
    images: &[Grid],
    maps: &[Grid],
    s_grid: &[f64],
    mode: SweepMode,
    rule: EdgeRule,
) -> Result<EvalCurve> {
    mean_metric_curve(images, maps, s_grid, mode, |_, x, xs| {
        largest_cc_ratio(x, xs, rule)
    })
}

/// Mean curvature cosine similarity along a sweep; one curvature map per
/// image.
pub fn curvature_curve(
    images: &[Grid],
    maps: &[Grid],
    curvatures: &[Grid],
    s_grid: &[f64],
    mode: SweepMode,
) -> Result<EvalCurve> {
    if curvatures.len() != images.len() {
        return Err(Error::InvalidConfig(format!(
            "{} images but {} curvature maps",
            images.len(),
            curvatures.len()
        )));
    }
    mean_metric_curve(images, maps, s_grid, mode, |i, _, xs| {
        curvature_similarity(xs, &curvatures[i])
    })
}

/// Mean dilation cosine similarity along a sweep; one trace set per image.
pub fn dilation_curve(
    images: &[Grid],
    maps: &[Grid],
    traces: &[Vec<BranchTrace>],
    s_grid: &[f64],
    mode: SweepMode,
) -> Result<EvalCurve> {
    if traces.len() != images.len() {
        return Err(Error::InvalidConfig(format!(
            "{} images but {} trace sets",
            images.len(),
            traces.len()
        )));
    }
    mean_metric_curve(images, maps, s_grid, mode, |i, x, xs| {
        dilation_similarity(&traces[i], x, xs)
    })
}

/// A fully configured explanation method.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum MethodSpec {
    Ssplain(SsplainConfig),
    Saliency { source: GradientSource },
    InputXGradient { source: GradientSource },
    IntegratedGradients { steps: usize, source: GradientSource },
    Occlusion(OcclusionConfig),
}

impl MethodSpec {
    pub fn name(&self) -> &'static str {
        match self {
            MethodSpec::Ssplain(_) => "ssplain",
            MethodSpec::Saliency { .. } => "saliency",
            MethodSpec::InputXGradient { .. } => "input_x_gradient",
            MethodSpec::IntegratedGradients { .. } => "integrated_gradients",
            MethodSpec::Occlusion(_) => "occlusion",
        }
    }
}

/// Compute one attribution map for an explicit target class.
pub fn compute_map(
    model: &Classifier,
    x: &Grid,
    target: usize,
    spec: &MethodSpec,
) -> Result<Grid> {
    match spec {
        MethodSpec::Ssplain(config) => {
            let mut config = config.clone();
            config.target_mode = TargetMode::Supervised(target);
            Ok(explain(model, x, &config)?.mask)
        }
        MethodSpec::Saliency { source } => Ok(saliency(model, x, target, *source)?.scores),
        MethodSpec::InputXGradient { source } => {
            Ok(input_x_gradient(model, x, target, *source)?.scores)
        }
        MethodSpec::IntegratedGradients { steps, source } => {
            Ok(integrated_gradients(model, x, target, *steps, *source)?.scores)
        }
        MethodSpec::Occlusion(config) => Ok(occlusion(model, x, target, config)?.scores),
    }
}

/// Compute maps for a batch of images in parallel, in input order.
pub fn compute_maps(
    model: &Classifier,
    images: &[Grid],
    targets: &[usize],
    spec: &MethodSpec,
) -> Result<Vec<Grid>> {
    if images.len() != targets.len() {
        return Err(Error::InvalidConfig(format!(
            "{} images but {} targets",
            images.len(),
            targets.len()
        )));
    }
    images
        .par_iter()
        .zip(targets.par_iter())
        .map(|(x, &t)| compute_map(model, x, t, spec))
        .collect()
}

/// Where explanation targets come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetPolicy {
    /// Ground-truth labels.
    TrueLabel,
    /// The model's own predictions.
    Prediction,
}

pub fn resolve_targets(
    model: &Classifier,
    images: &[Grid],
    labels: &[usize],
    policy: TargetPolicy,
) -> Result<Vec<usize>> {
    match policy {
        TargetPolicy::TrueLabel => Ok(labels.to_vec()),
        TargetPolicy::Prediction => images
            .par_iter()
            .map(|x| model.predict(x))
            .collect::<Result<_>>(),
    }
}
