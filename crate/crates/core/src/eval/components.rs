//! Pixel-grid connected components.
//!
//! A grid induces an undirected graph: horizontal and vertical edges join
//! 4-neighbors selected by the [`EdgeRule`]. Only pixels incident to at
//! least one edge become nodes. Component sizes are node counts, found by
//! breadth-first search.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeRule {
    /// Neighbors are joined when their values differ (the default).
    ValueDiffers,
    /// Neighbors are joined when both values are nonzero.
    BothNonzero,
}

impl EdgeRule {
    #[inline]
    fn connects(&self, a: f64, b: f64) -> bool {
        match self {
            EdgeRule::ValueDiffers => a != b,
            EdgeRule::BothNonzero => a != 0.0 && b != 0.0,
        }
    }
}

/// Node count of the largest connected component; 0 when the grid induces
/// no edges.
pub fn largest_component_size(grid: &Grid, rule: EdgeRule) -> usize {
    let (h, w) = grid.shape();
    let v = grid.values();
    let has_edge_right = |r: usize, c: usize| c + 1 < w && rule.connects(v[r * w + c], v[r * w + c + 1]);
    let has_edge_down = |r: usize, c: usize| r + 1 < h && rule.connects(v[r * w + c], v[(r + 1) * w + c]);

    // A pixel is a node iff some incident edge exists.
    let mut is_node = vec![false; h * w];
    for r in 0..h {
        for c in 0..w {
            if has_edge_right(r, c) {
                is_node[r * w + c] = true;
                is_node[r * w + c + 1] = true;
            }
            if has_edge_down(r, c) {
                is_node[r * w + c] = true;
                is_node[(r + 1) * w + c] = true;
            }
        }
    }

    let mut visited = vec![false; h * w];
    let mut queue = Vec::new();
    let mut largest = 0usize;
    for start in 0..h * w {
        if !is_node[start] || visited[start] {
            continue;
        }
        visited[start] = true;
        queue.push(start);
        let mut size = 0usize;
        while let Some(idx) = queue.pop() {
            size += 1;
            let (r, c) = (idx / w, idx % w);
            let mut push = |nidx: usize| {
                if !visited[nidx] {
                    visited[nidx] = true;
                    queue.push(nidx);
                }
            };
            if c + 1 < w && rule.connects(v[idx], v[idx + 1]) {
                push(idx + 1);
            }
            if c > 0 && rule.connects(v[idx], v[idx - 1]) {
                push(idx - 1);
            }
            if r + 1 < h && rule.connects(v[idx], v[idx + w]) {
                push(idx + w);
            }
            if r > 0 && rule.connects(v[idx], v[idx - w]) {
                push(idx - w);
            }
        }
        largest = largest.max(size);
    }
    largest
}

/// Ratio of the largest component size of `xs`'s graph to that of `x`'s.
pub fn largest_cc_ratio(x: &Grid, xs: &Grid, rule: EdgeRule) -> Result<f64> {
    x.check_same_shape(xs)?;
    let reference = largest_component_size(x, rule);
    if reference == 0 {
        return Err(Error::EmptyGraph);
    }
    Ok(largest_component_size(xs, rule) as f64 / reference as f64)
}
