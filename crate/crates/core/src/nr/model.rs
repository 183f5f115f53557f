//! The trained pristine model: a 36-dimensional mean and covariance of
//! natural-scene features, plus the patch parameters it was trained with.
//!
//! # File format
//!
//! Versioned line-oriented text, LF-terminated, `.` decimal:
//!
//! ```text
//! NIQE-MVG 1
//! patch_size 96
//! sharpness_fraction 0.75
//! mean <36 space-separated values>
//! cov <36 space-separated values>   (one line per covariance row)
//! ...
//! checksum <sha256 hex of every preceding byte>
//! ```
//!
//! Floats are written in shortest round-trip decimal form, so save/load is
//! lossless and two saves of the same model are byte-identical.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Feature dimension: 18 features per scale at 2 scales.
pub const FEATURE_DIM: usize = 36;

const MAGIC: &str = "NIQE-MVG";
const VERSION: u32 = 1;

/// Patch extraction parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NiqeParams {
    /// Side of the square scale-1 patches, in pixels. Must be even.
    pub patch_size: usize,
    /// Keep patches whose sharpness is at least this fraction of the
    /// sharpest patch. In (0, 1].
    pub sharpness_fraction: f64,
}

impl Default for NiqeParams {
    fn default() -> Self {
        Self {
            patch_size: 96,
            sharpness_fraction: 0.75,
        }
    }
}

impl NiqeParams {
    pub fn validate(&self) -> Result<()> {
        if self.patch_size % 2 != 0 || self.patch_size < 20 {
            return Err(Error::InvalidConfig(format!(
                "patch_size must be even and >= 20, got {}",
                self.patch_size
            )));
        }
        if !(self.sharpness_fraction > 0.0 && self.sharpness_fraction <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "sharpness_fraction must be in (0, 1], got {}",
                self.sharpness_fraction
            )));
        }
        Ok(())
    }
}

/// Pristine multivariate Gaussian model.
#[derive(Debug, Clone, PartialEq)]
pub struct NiqeModel {
    pub params: NiqeParams,
    /// 36 feature means.
    pub mean: Vec<f64>,
    /// 36x36 covariance, row-major.
    pub covariance: Vec<f64>,
}

impl NiqeModel {
    pub fn new(params: NiqeParams, mean: Vec<f64>, covariance: Vec<f64>) -> Result<Self> {
        let model = Self {
            params,
            mean,
            covariance,
        };
        model.validate()?;
        Ok(model)
    }

    /// Enforce the structural invariants: dimensions, finiteness, symmetry
    /// within 1e-10 and positive semidefiniteness (min eigenvalue >= -1e-8).
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.mean.len() != FEATURE_DIM {
            return Err(Error::InvalidConfig(format!(
                "mean has {} entries, expected {FEATURE_DIM}",
                self.mean.len()
            )));
        }
        if self.covariance.len() != FEATURE_DIM * FEATURE_DIM {
            return Err(Error::InvalidConfig(format!(
                "covariance has {} entries, expected {}",
                self.covariance.len(),
                FEATURE_DIM * FEATURE_DIM
            )));
        }
        if self
            .mean
            .iter()
            .chain(self.covariance.iter())
            .any(|v| !v.is_finite())
        {
            return Err(Error::InvalidConfig("non-finite model entry".into()));
        }
        for i in 0..FEATURE_DIM {
            for j in (i + 1)..FEATURE_DIM {
                let a = self.covariance[i * FEATURE_DIM + j];
                let b = self.covariance[j * FEATURE_DIM + i];
                if (a - b).abs() > 1e-10 {
                    return Err(Error::InvalidConfig(format!(
                        "covariance asymmetric at ({i},{j}): {a} vs {b}"
                    )));
                }
            }
        }
        let m = DMatrix::from_row_slice(FEATURE_DIM, FEATURE_DIM, &self.covariance);
        let min_eig = SymmetricEigen::new(m)
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -1e-8 {
            return Err(Error::InvalidConfig(format!(
                "covariance not positive semidefinite: min eigenvalue {min_eig}"
            )));
        }
        Ok(())
    }

    pub fn covariance_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(FEATURE_DIM, FEATURE_DIM, &self.covariance)
    }

    /// Serialize to the versioned text format.
    pub fn to_text(&self) -> String {
        let mut body = String::new();
        writeln!(body, "{MAGIC} {VERSION}").unwrap();
        writeln!(body, "patch_size {}", self.params.patch_size).unwrap();
        writeln!(body, "sharpness_fraction {}", self.params.sharpness_fraction).unwrap();
        writeln!(body, "mean {}", join_floats(&self.mean)).unwrap();
        for row in self.covariance.chunks_exact(FEATURE_DIM) {
            writeln!(body, "cov {}", join_floats(row)).unwrap();
        }
        let digest = sha256_hex(body.as_bytes());
        writeln!(body, "checksum {digest}").unwrap();
        body
    }

    /// Parse the text format, verifying magic, version and checksum.
    pub fn from_text(text: &str, origin: &Path) -> Result<Self> {
        let bad = |detail: String| Error::ModelFormat {
            path: origin.to_path_buf(),
            detail,
        };

        let checksum_at = text
            .rfind("checksum ")
            .ok_or_else(|| bad("missing checksum line".into()))?;
        let (body, checksum_line) = text.split_at(checksum_at);
        let stated = checksum_line
            .trim_start_matches("checksum ")
            .trim();
        let digest = sha256_hex(body.as_bytes());
        if digest != stated {
            return Err(bad(format!(
                "checksum mismatch: stated {stated}, computed {digest}"
            )));
        }

        let mut lines = body.lines();
        let header = lines.next().ok_or_else(|| bad("empty file".into()))?;
        let mut parts = header.split_whitespace();
        if parts.next() != Some(MAGIC) {
            return Err(bad(format!("bad magic in header {header:?}")));
        }
        let version: u32 = parts
            .next()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad("unparseable version".into()))?;
        if version != VERSION {
            return Err(bad(format!("unsupported version {version}")));
        }

        let mut patch_size = None;
        let mut sharpness_fraction = None;
        let mut mean = None;
        let mut cov_rows: Vec<Vec<f64>> = Vec::new();
        for line in lines {
            let (key, rest) = line
                .split_once(' ')
                .ok_or_else(|| bad(format!("malformed line {line:?}")))?;
            match key {
                "patch_size" => {
                    patch_size = Some(
                        rest.trim()
                            .parse::<usize>()
                            .map_err(|e| bad(format!("patch_size: {e}")))?,
                    )
                }
                "sharpness_fraction" => {
                    sharpness_fraction = Some(
                        rest.trim()
                            .parse::<f64>()
                            .map_err(|e| bad(format!("sharpness_fraction: {e}")))?,
                    )
                }
                "mean" => mean = Some(parse_floats(rest).map_err(&bad)?),
                "cov" => cov_rows.push(parse_floats(rest).map_err(&bad)?),
                other => return Err(bad(format!("unknown key {other:?}"))),
            }
        }

        let mean = mean.ok_or_else(|| bad("missing mean line".into()))?;
        if cov_rows.len() != FEATURE_DIM {
            return Err(bad(format!(
                "{} covariance rows, expected {FEATURE_DIM}",
                cov_rows.len()
            )));
        }
        for (i, row) in cov_rows.iter().enumerate() {
            if row.len() != FEATURE_DIM {
                return Err(bad(format!("covariance row {i} has {} entries", row.len())));
            }
        }
        let covariance = cov_rows.concat();
        NiqeModel::new(
            NiqeParams {
                patch_size: patch_size.ok_or_else(|| bad("missing patch_size".into()))?,
                sharpness_fraction: sharpness_fraction
                    .ok_or_else(|| bad("missing sharpness_fraction".into()))?,
            },
            mean,
            covariance,
        )
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text, path)
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn join_floats(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn parse_floats(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split_whitespace()
        .map(|tok| tok.parse::<f64>().map_err(|e| format!("{tok:?}: {e}")))
        .collect()
}
