//! JSON instance files.
//!
//! ```json
//! { "name": "half-bound", "a": 0.5, "b": [[1.0, 0.0]], "D": [[[0.0, 0.0]]] }
//! ```
//!
//! Every complex number is an explicit `[re, im]` pair. Numbers are written
//! in shortest round-trip form, so writing and re-reading a spec reproduces
//! it bit for bit.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eigen::CMatrix;
use crate::graph::GraphSpec;
use crate::Complex;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub a: f64,
    pub b: Vec<[f64; 2]>,
    #[serde(rename = "D")]
    pub d: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed instance: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("D has {rows} rows but b has {b_len} entries")]
    Shape { rows: usize, b_len: usize },
    #[error("D row {row} has {len} entries, expected {expected}")]
    Row { row: usize, len: usize, expected: usize },
    #[error("{0}")]
    Invalid(String),
}

fn pair(p: &[f64; 2]) -> Complex {
    Complex::new(p[0], p[1])
}

impl InstanceFile {
    pub fn from_spec(spec: &GraphSpec) -> Self {
        InstanceFile {
            name: None,
            seed: None,
            a: spec.a(),
            b: spec.b().iter().map(|z| [z.re, z.im]).collect(),
            d: spec
                .d()
                .rows()
                .iter()
                .map(|r| r.iter().map(|z| [z.re, z.im]).collect())
                .collect(),
        }
    }

    pub fn to_spec(&self) -> Result<GraphSpec, InstanceError> {
        let m = self.b.len();
        if self.d.len() != m {
            return Err(InstanceError::Shape {
                rows: self.d.len(),
                b_len: m,
            });
        }
        for (row, r) in self.d.iter().enumerate() {
            if r.len() != m {
                return Err(InstanceError::Row {
                    row,
                    len: r.len(),
                    expected: m,
                });
            }
        }
        let rows: Vec<Vec<Complex>> = self.d.iter().map(|r| r.iter().map(pair).collect()).collect();
        let d = CMatrix::from_rows(&rows).map_err(|e| InstanceError::Invalid(e.to_string()))?;
        GraphSpec::from_parts(self.a, self.b.iter().map(pair).collect(), d).map_err(|e| {
            use crate::error::Error;
            // Raw indices count the attachment vertex as 0; name the entries in
            // file terms instead.
            let msg = match e {
                Error::NonHermitian { i, j, asymmetry, tol } => format!(
                    "{} and {} are not complex conjugates (asymmetry {asymmetry:e} > {tol:e})",
                    entry_name(i, j),
                    entry_name(j, i)
                ),
                Error::NonFinite { i, j } => format!("{} is not finite", entry_name(i, j)),
                other => other.to_string(),
            };
            InstanceError::Invalid(msg)
        })
    }

    pub fn parse(text: &str) -> Result<Self, InstanceError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }
}

fn entry_name(i: usize, j: usize) -> String {
    match (i, j) {
        (0, 0) => "a".to_string(),
        (0, j) => format!("conj(b[{}])", j - 1),
        (i, 0) => format!("b[{}]", i - 1),
        (i, j) => format!("D[{}][{}]", i - 1, j - 1),
    }
}

pub fn read_spec(path: &Path) -> Result<(InstanceFile, GraphSpec), InstanceError> {
    let text = std::fs::read_to_string(path).map_err(|source| InstanceError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let file = InstanceFile::parse(&text)?;
    let spec = file.to_spec()?;
    Ok((file, spec))
}
