//! Grid file formats.
//!
//! Two formats are supported:
//!
//! * **PGM** (`P2` ASCII or `P5` binary, maxval ≤ 255) for grayscale image
//!   input. Samples are divided by 255 on load, so loaded values are always
//!   of the form k/255 in [0, 1].
//! * **FGRID**, a plain-text float grid used for masks, attribution maps and
//!   curvature maps: a `FGRID <height> <width>` header line followed by
//!   row-major values written with 9 significant digits. Re-saving a loaded
//!   file reproduces it byte for byte.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Load a PGM image (P2 or P5, maxval ≤ 255), normalizing samples by 255.
pub fn load_pgm(path: impl AsRef<Path>) -> Result<Grid> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_pgm(&bytes).map_err(|msg| Error::format("PGM", path, msg))
}

fn parse_pgm(bytes: &[u8]) -> std::result::Result<Grid, String> {
    let mut pos = 0usize;

    // Header tokens may be separated by whitespace and '#' comment lines.
    let next_token = |bytes: &[u8], pos: &mut usize| -> std::result::Result<String, String> {
        loop {
            while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
            if *pos < bytes.len() && bytes[*pos] == b'#' {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
                continue;
            }
            break;
        }
        let start = *pos;
        while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if start == *pos {
            return Err("unexpected end of header".to_string());
        }
        String::from_utf8(bytes[start..*pos].to_vec()).map_err(|_| "non-ASCII header".to_string())
    };

    let magic = next_token(bytes, &mut pos)?;
    if magic != "P2" && magic != "P5" {
        return Err(format!("unsupported magic {magic:?}, expected P2 or P5"));
    }
    let width: usize = next_token(bytes, &mut pos)?
        .parse()
        .map_err(|_| "bad width")?;
    let height: usize = next_token(bytes, &mut pos)?
        .parse()
        .map_err(|_| "bad height")?;
    let maxval: u32 = next_token(bytes, &mut pos)?
        .parse()
        .map_err(|_| "bad maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(format!("maxval {maxval} out of range 1..=255"));
    }
    let n = width * height;
    if n == 0 {
        return Err("zero-sized image".to_string());
    }

    let mut samples = Vec::with_capacity(n);
    if magic == "P5" {
        // Exactly one whitespace byte separates maxval from the raster.
        if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
            return Err("missing separator before raster".to_string());
        }
        pos += 1;
        if bytes.len() - pos < n {
            return Err(format!(
                "raster truncated: need {n} bytes, found {}",
                bytes.len() - pos
            ));
        }
        samples.extend(bytes[pos..pos + n].iter().map(|b| *b as u32));
    } else {
        for _ in 0..n {
            let tok = next_token(bytes, &mut pos)?;
            let v: u32 = tok.parse().map_err(|_| format!("bad sample {tok:?}"))?;
            samples.push(v);
        }
    }
    for &s in &samples {
        if s > maxval {
            return Err(format!("sample {s} exceeds maxval {maxval}"));
        }
    }

    let values = samples.into_iter().map(|s| s as f64 / 255.0).collect();
    Grid::from_values(height, width, values).map_err(|e| e.to_string())
}

/// Save a grid as binary P5 PGM, mapping values through round(v · 255)
/// clamped to 0..=255.
pub fn save_pgm(path: impl AsRef<Path>, grid: &Grid) -> Result<()> {
    let path = path.as_ref();
    let mut out = format!("P5\n{} {}\n255\n", grid.width(), grid.height()).into_bytes();
    out.extend(
        grid.values()
            .iter()
            .map(|v| (v * 255.0).round().clamp(0.0, 255.0) as u8),
    );
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Load an FGRID float grid.
pub fn load_fgrid(path: impl AsRef<Path>) -> Result<Grid> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_fgrid(&text).map_err(|msg| Error::format("FGRID", path, msg))
}

fn parse_fgrid(text: &str) -> std::result::Result<Grid, String> {
    let mut tokens = text.split_ascii_whitespace();
    match tokens.next() {
        Some("FGRID") => {}
        other => return Err(format!("bad magic {other:?}, expected FGRID")),
    }
    let height: usize = tokens
        .next()
        .ok_or("missing height")?
        .parse()
        .map_err(|_| "bad height")?;
    let width: usize = tokens
        .next()
        .ok_or("missing width")?
        .parse()
        .map_err(|_| "bad width")?;
    let n = height * width;
    let mut values = Vec::with_capacity(n);
    for tok in tokens.by_ref().take(n) {
        let v: f64 = tok.parse().map_err(|_| format!("bad value {tok:?}"))?;
        values.push(v);
    }
    if values.len() != n {
        return Err(format!("expected {n} values, found {}", values.len()));
    }
    if tokens.next().is_some() {
        return Err("trailing data after values".to_string());
    }
    Grid::from_values(height, width, values).map_err(|e| e.to_string())
}

/// Serialize a grid in the FGRID format (9 significant digits per value).
pub fn fgrid_to_string(grid: &Grid) -> String {
    let mut out = format!("FGRID {} {}\n", grid.height(), grid.width());
    for row in 0..grid.height() {
        for col in 0..grid.width() {
            if col > 0 {
                out.push(' ');
            }
            out.push_str(&format!("{:.8e}", grid.get(row, col)));
        }
        out.push('\n');
    }
    out
}

pub fn save_fgrid(path: impl AsRef<Path>, grid: &Grid) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, fgrid_to_string(grid)).map_err(|e| Error::io(path, e))
}
