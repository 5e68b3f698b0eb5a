//! Curvature and dilation similarity against supplied reference data.
//!
//! Curvature maps arrive as FGRID files; vessel branch traces arrive as two
//! CSV files per image (an ordered centerline polyline and the branch's
//! member pixels). Producing these inputs is outside this crate's scope.

use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Cosine between flattened grids, with the convention that a zero `a`
/// yields 0. A zero `b` (the reference side) is rejected.
pub fn cosine(a: &Grid, b: &Grid, reference_name: &'static str) -> Result<f64> {
    a.check_same_shape(b)?;
    let nb = b.norm_l2();
    if nb == 0.0 {
        return Err(Error::ZeroNorm {
            what: reference_name,
        });
    }
    let na = a.norm_l2();
    if na == 0.0 {
        return Ok(0.0);
    }
    Ok(a.dot(b)? / (na * nb))
}

/// Cosine similarity between a partially revealed image and a pixel-wise
/// curvature map.
pub fn curvature_similarity(xs: &Grid, curvature: &Grid) -> Result<f64> {
    cosine(xs, curvature, "curvature map")
}

/// One traced vessel branch: an ordered centerline polyline plus the flat
/// indices of the branch's member pixels in the reference image.
#[derive(Debug, Clone)]
pub struct BranchTrace {
    pub polyline: Vec<(f64, f64)>,
    pub member_pixels: Vec<usize>,
}

impl BranchTrace {
    /// Sum of segment Euclidean lengths.
    pub fn arc_length(&self) -> f64 {
        self.polyline
            .windows(2)
            .map(|seg| {
                let (r0, c0) = seg[0];
                let (r1, c1) = seg[1];
                ((r1 - r0).powi(2) + (c1 - c0).powi(2)).sqrt()
            })
            .sum()
    }
}

/// Average segment diameter: member pixels that survive in `xs`, divided by
/// the branch arc length. The arc length comes from the reference trace, so
/// only the pixel count varies across insertion steps.
pub fn asd(branch: &BranchTrace, xs: &Grid) -> Result<f64> {
    if branch.polyline.len() < 2 {
        return Err(Error::InvalidTrace(format!(
            "polyline needs at least 2 points, has {}",
            branch.polyline.len()
        )));
    }
    let length = branch.arc_length();
    if length == 0.0 {
        return Err(Error::DegeneratePolyline);
    }
    let mut alive = 0usize;
    for &idx in &branch.member_pixels {
        if idx >= xs.len() {
            return Err(Error::InvalidTrace(format!(
                "member pixel {idx} outside a grid of {} pixels",
                xs.len()
            )));
        }
        if xs.values()[idx] != 0.0 {
            alive += 1;
        }
    }
    Ok(alive as f64 / length)
}

/// Cosine between the per-branch ASD vectors of `xs` and of the reference
/// image `x`.
pub fn dilation_similarity(branches: &[BranchTrace], x: &Grid, xs: &Grid) -> Result<f64> {
    if branches.is_empty() {
        return Err(Error::InvalidTrace("no branches supplied".to_string()));
    }
    x.check_same_shape(xs)?;
    let reference: Vec<f64> = branches
        .iter()
        .map(|b| asd(b, x))
        .collect::<Result<_>>()?;
    let current: Vec<f64> = branches
        .iter()
        .map(|b| asd(b, xs))
        .collect::<Result<_>>()?;
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nr = norm(&reference);
    if nr == 0.0 {
        return Err(Error::ZeroNorm {
            what: "reference dilation vector",
        });
    }
    let nc = norm(&current);
    if nc == 0.0 {
        return Ok(0.0);
    }
    let dot: f64 = reference.iter().zip(&current).map(|(a, b)| a * b).sum();
    Ok(dot / (nr * nc))
}

/// Load branch traces from the two-file CSV form: `polyline_csv` rows are
/// `branch_id,point_row,point_col` (ordered centerline points, real
/// coordinates) and `pixels_csv` rows are `branch_id,pixel_row,pixel_col`
/// (integer member pixels). Branches are returned sorted by id.
pub fn load_traces(
    polyline_csv: impl AsRef<Path>,
    pixels_csv: impl AsRef<Path>,
    height: usize,
    width: usize,
) -> Result<Vec<BranchTrace>> {
    use std::collections::BTreeMap;

    let read_rows = |path: &Path, kind: &'static str| -> Result<Vec<(u64, f64, f64)>> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if lineno == 0 && line.chars().any(|c| c.is_ascii_alphabetic()) {
                continue; // header
            }
            let mut fields = line.split(',');
            let parse_err = |msg: String| Error::format(kind, path, msg);
            let id: u64 = fields
                .next()
                .ok_or_else(|| parse_err(format!("line {}: missing branch id", lineno + 1)))?
                .trim()
                .parse()
                .map_err(|_| parse_err(format!("line {}: bad branch id", lineno + 1)))?;
            let row: f64 = fields
                .next()
                .ok_or_else(|| parse_err(format!("line {}: missing row", lineno + 1)))?
                .trim()
                .parse()
                .map_err(|_| parse_err(format!("line {}: bad row", lineno + 1)))?;
            let col: f64 = fields
                .next()
                .ok_or_else(|| parse_err(format!("line {}: missing col", lineno + 1)))?
                .trim()
                .parse()
                .map_err(|_| parse_err(format!("line {}: bad col", lineno + 1)))?;
            rows.push((id, row, col));
        }
        Ok(rows)
    };

    let mut polylines: BTreeMap<u64, Vec<(f64, f64)>> = BTreeMap::new();
    for (id, r, c) in read_rows(polyline_csv.as_ref(), "trace polyline CSV")? {
        polylines.entry(id).or_default().push((r, c));
    }
    let mut pixels: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for (id, r, c) in read_rows(pixels_csv.as_ref(), "trace pixels CSV")? {
        let (ri, ci) = (r as usize, c as usize);
        if r.fract() != 0.0 || c.fract() != 0.0 || ri >= height || ci >= width {
            return Err(Error::InvalidTrace(format!(
                "pixel ({r}, {c}) is not an integer coordinate inside {height}x{width}"
            )));
        }
        pixels.entry(id).or_default().push(ri * width + ci);
    }

    let mut traces = Vec::new();
    for (id, polyline) in polylines {
        let member_pixels = pixels.remove(&id).unwrap_or_default();
        if polyline.len() < 2 {
            return Err(Error::InvalidTrace(format!(
                "branch {id}: polyline needs at least 2 points"
            )));
        }
        traces.push(BranchTrace {
            polyline,
            member_pixels,
        });
    }
    if !pixels.is_empty() {
        return Err(Error::InvalidTrace(format!(
            "pixel rows reference unknown branch ids: {:?}",
            pixels.keys().collect::<Vec<_>>()
        )));
    }
    if traces.is_empty() {
        return Err(Error::InvalidTrace("no branches supplied".to_string()));
    }
    Ok(traces)
}
