//! Model-parameter-randomization sanity check.
//!
//! A usable explainer must react to the model: progressively re-initialize
//! layers from the output backwards and measure how far the explanation
//! drifts from the original via Spearman rank correlation over the image
//! support (background pixels are pinned at zero by the support constraint
//! and carry no signal).

use serde::Serialize;

use crate::error::Result;
use crate::grid::Grid;
use crate::model::Classifier;
use crate::ssplain::{explain, SsplainConfig};

/// Spearman rank correlation with average-rank tie handling.
///
/// Identical inputs give exactly 1.0. If either side has no rank variance
/// (and they are not identical), the correlation is undefined and 0.0 is
/// returned.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "rank correlation needs equal lengths");
    if a == b {
        return 1.0;
    }
    let ra = average_ranks(a);
    let rb = average_ranks(b);
    let n = a.len() as f64;
    let mean = (n + 1.0) / 2.0;
    let mut cov = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for (x, y) in ra.iter().zip(&rb) {
        cov += (x - mean) * (y - mean);
        var_a += (x - mean) * (x - mean);
        var_b += (y - mean) * (y - mean);
    }
    if var_a == 0.0 || var_b == 0.0 {
        return 0.0;
    }
    cov / (var_a * var_b).sqrt()
}

fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // 1-based ranks; ties share the average rank of their block.
        let avg = (i + j + 2) as f64 / 2.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

#[derive(Debug, Clone, Serialize)]
pub struct SanityEntry {
    /// Weight-bearing layers re-initialized, counted from the output.
    pub num_randomized: usize,
    /// Rank correlation with the original map over the image support.
    pub spearman: f64,
    #[serde(skip)]
    pub map: Grid,
}

#[derive(Debug, Clone, Serialize)]
pub struct SanityReport {
    pub entries: Vec<SanityEntry>,
}

/// Run the explainer against progressively randomized copies of the model.
pub fn sanity_check(
    model: &Classifier,
    x: &Grid,
    config: &SsplainConfig,
    cursor_schedule: &[usize],
    seed: u64,
) -> Result<SanityReport> {
    let original = explain(model, x, config)?;
    let support = x.support();
    let support_values = |g: &Grid| -> Vec<f64> {
        support.indices().map(|i| g.values()[i]).collect()
    };
    let original_values = support_values(&original.mask);

    let mut entries = Vec::with_capacity(cursor_schedule.len());
    for &cursor in cursor_schedule {
        let randomized = model.randomize_layers(cursor, seed)?;
        let map = explain(&randomized, x, config)?;
        let rho = spearman(&support_values(&map.mask), &original_values);
        entries.push(SanityEntry {
            num_randomized: cursor,
            spearman: rho,
            map: map.mask,
        });
    }
    Ok(SanityReport { entries })
}
