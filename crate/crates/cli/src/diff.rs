//! Pointwise comparison of two field dumps.

use std::path::Path;

use thiserror::Error;
use vortexmap::dump::Dump;

#[derive(Debug, Error)]
pub enum DiffError {
    #[error("header mismatch: {0}")]
    Header(String),

    #[error("{path}: {source}")]
    Load { path: String, source: vortexmap::Error },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiffReport {
    pub max_abs: f64,
    pub mean_abs: f64,
    pub count: usize,
}

impl DiffReport {
    pub fn within(&self, tol: f64) -> bool {
        self.max_abs <= tol
    }
}

pub fn diff_dumps(a: &Dump, b: &Dump) -> Result<DiffReport, DiffError> {
    if a.grid != b.grid {
        return Err(DiffError::Header(format!("grids differ: {:?} vs {:?}", a.grid, b.grid)));
    }
    if a.kind != b.kind {
        return Err(DiffError::Header(format!("field kinds differ: {:?} vs {:?}", a.kind, b.kind)));
    }
    if a.data.len() != b.data.len() {
        return Err(DiffError::Header(format!("lengths differ: {} vs {}", a.data.len(), b.data.len())));
    }
    let mut max_abs: f64 = 0.0;
    let mut sum = 0.0;
    for (x, y) in a.data.iter().zip(&b.data) {
        // NaN anywhere makes the fields differ.
        let d = (x - y).abs();
        let d = if d.is_nan() && x.to_bits() != y.to_bits() { f64::INFINITY } else if d.is_nan() { 0.0 } else { d };
        max_abs = max_abs.max(d);
        sum += d;
    }
    let count = a.data.len();
    let mean_abs = if count == 0 { 0.0 } else { sum / count as f64 };
    Ok(DiffReport { max_abs, mean_abs, count })
}

pub fn diff_files(a: &Path, b: &Path) -> Result<DiffReport, DiffError> {
    let load = |p: &Path| Dump::load(p).map_err(|source| DiffError::Load { path: p.display().to_string(), source });
    diff_dumps(&load(a)?, &load(b)?)
}
