//! Marginal ingestion from plain PGM (`P2`) images and one-value-per-line text.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Additive smoothing applied before normalization so every entry is positive.
pub const EPS_MASS: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<Histogram> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_pgm(&text).map_err(|m| Error::parse(path, m))
}

fn parse_pgm(text: &str) -> std::result::Result<Histogram, String> {
    let mut tokens = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(str::split_whitespace);
    match tokens.next() {
        Some("P2") => {}
        Some(other) => return Err(format!("expected magic P2, found {other}")),
        None => return Err("empty file".into()),
    }
    let mut header = |name: &str| -> std::result::Result<usize, String> {
        tokens
            .next()
            .ok_or_else(|| format!("missing {name}"))?
            .parse::<usize>()
            .map_err(|e| format!("bad {name}: {e}"))
    };
    let width = header("width")?;
    let height = header("height")?;
    let maxval = header("maxval")?;
    let values = tokens
        .map(|t| {
            t.parse::<f64>()
                .map_err(|e| format!("bad pixel {t:?}: {e}"))
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if values.len() != width * height {
        return Err(format!(
            "expected {} pixels, found {}",
            width * height,
            values.len()
        ));
    }
    if let Some(v) = values.iter().find(|v| **v < 0.0 || **v > maxval as f64) {
        return Err(format!("pixel {v} outside [0, {maxval}]"));
    }
    Ok(Histogram {
        width,
        height,
        values,
    })
}

pub fn read_histogram_text(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let mut values = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: f64 = line
            .parse()
            .map_err(|e| Error::parse(path, format!("line {}: {e}", lineno + 1)))?;
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::parse(
                path,
                format!("line {}: negative or non-finite value {v}", lineno + 1),
            ));
        }
        values.push(v);
    }
    Ok(values)
}

/// Shift by [`EPS_MASS`] and normalize to a probability vector.
pub fn ingest_marginal(raw: &[f64]) -> Result<Vec<f64>> {
    if raw.is_empty() {
        return Err(Error::InvalidInstance("empty histogram".into()));
    }
    if let Some(v) = raw.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
        return Err(Error::InvalidInstance(format!(
            "histogram entries must be nonnegative, found {v}"
        )));
    }
    if raw.iter().all(|v| *v == 0.0) {
        return Err(Error::InvalidInstance(
            "histogram is identically zero".into(),
        ));
    }
    let shifted: Vec<f64> = raw.iter().map(|v| v + EPS_MASS).collect();
    let total: f64 = shifted.iter().sum();
    Ok(shifted.iter().map(|v| v / total).collect())
}

/// Loads a marginal from a PGM image (detected by its `P2` magic) or a text column.
pub fn load_marginal(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let head = fs::read_to_string(path)?;
    let raw = if head.trim_start().starts_with("P2") {
        parse_pgm(&head).map_err(|m| Error::parse(path, m))?.values
    } else {
        read_histogram_text(path)?
    };
    ingest_marginal(&raw)
}

/// `√p` when `p` is a perfect square.
pub fn square_side(p: usize) -> Result<usize> {
    let side = (p as f64).sqrt().round() as usize;
    if side * side == p {
        Ok(side)
    } else {
        Err(Error::InvalidInstance(format!(
            "{p} is not a perfect square; a grid cost needs a square pixel count"
        )))
    }
}
