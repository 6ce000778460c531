//! LIBSVM-format sparse datasets.
//!
//! Each line is `<label> <idx>:<val> <idx>:<val> ...` with 1-based,
//! strictly increasing feature indices. Anything after `#` is a comment.
//! Indices are shifted to 0-based on load; missing features are zeros.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One `(a_i, b_i)` pair: sparse features with 0-based indices and a label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseExample {
    pub features: Vec<(usize, f64)>,
    pub label: f64,
}

impl SparseExample {
    pub fn new(features: Vec<(usize, f64)>, label: f64) -> Self {
        SparseExample { features, label }
    }

    pub fn norm_sq(&self) -> f64 {
        self.features.iter().map(|(_, v)| v * v).sum()
    }

    /// Largest 0-based index, if any feature is present.
    pub fn max_index(&self) -> Option<usize> {
        self.features.last().map(|&(i, _)| i)
    }

    /// `a_i^T x`
    #[inline]
    pub fn dot(&self, x: &[f64]) -> f64 {
        self.features.iter().map(|&(j, v)| v * x[j]).sum()
    }

    /// `out += scale * a_i`
    #[inline]
    pub fn add_scaled_to(&self, scale: f64, out: &mut [f64]) {
        for &(j, v) in &self.features {
            out[j] += scale * v;
        }
    }
}

/// How labels are mapped to `{-1, +1}` for binary tasks.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BinaryLabelMap {
    /// Smaller of the two distinct labels becomes -1, larger becomes +1.
    Auto,
    /// Explicit mapping `negative -> -1`, `positive -> +1`.
    Explicit { negative: f64, positive: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum FeatureScaling {
    #[default]
    None,
    UnitRowNorm,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    examples: Vec<SparseExample>,
    dim: usize,
    class_labels: Vec<f64>,
}

impl Dataset {
    /// Builds a dataset, checking the example invariants. `dim` of `None`
    /// means "max feature index + 1".
    pub fn new(examples: Vec<SparseExample>, dim: Option<usize>) -> Result<Self> {
        if examples.is_empty() {
            return Err(Error::Dataset("dataset has no examples".into()));
        }
        for (i, ex) in examples.iter().enumerate() {
            validate_example(ex).map_err(|message| Error::Validation {
                line: i + 1,
                message,
            })?;
        }
        let needed = examples
            .iter()
            .filter_map(|e| e.max_index())
            .max()
            .map_or(0, |m| m + 1);
        let dim = match dim {
            Some(d) if d < needed => {
                return Err(Error::Dataset(format!(
                    "requested dim {d} is below the max feature index {needed}"
                )))
            }
            Some(d) => d,
            None => needed,
        };
        let class_labels = distinct_labels(&examples);
        Ok(Dataset {
            examples,
            dim,
            class_labels,
        })
    }

    pub fn examples(&self) -> &[SparseExample] {
        &self.examples
    }

    pub fn example(&self, i: usize) -> &SparseExample {
        &self.examples[i]
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Sorted distinct labels.
    pub fn class_labels(&self) -> &[f64] {
        &self.class_labels
    }

    /// Raises `dim` so train and test files agree. Lowering is an error.
    pub fn with_dim(mut self, dim: usize) -> Result<Self> {
        if dim < self.dim {
            return Err(Error::Dataset(format!(
                "cannot shrink dim from {} to {dim}",
                self.dim
            )));
        }
        self.dim = dim;
        Ok(self)
    }

    /// Remaps a two-class dataset onto `{-1, +1}`.
    pub fn map_binary(mut self, map: BinaryLabelMap) -> Result<Self> {
        let (neg, pos) = match map {
            BinaryLabelMap::Auto => match self.class_labels.as_slice() {
                [a, b] => (*a, *b),
                [a] if *a == -1.0 || *a == 1.0 => return Ok(self),
                other => {
                    return Err(Error::Dataset(format!(
                        "binary task needs exactly two classes, found {}",
                        other.len()
                    )))
                }
            },
            BinaryLabelMap::Explicit { negative, positive } => (negative, positive),
        };
        if self.class_labels.len() > 2 {
            return Err(Error::Dataset(format!(
                "binary task needs exactly two classes, found {}",
                self.class_labels.len()
            )));
        }
        for (i, ex) in self.examples.iter_mut().enumerate() {
            ex.label = if ex.label == neg {
                -1.0
            } else if ex.label == pos {
                1.0
            } else {
                return Err(Error::Validation {
                    line: i + 1,
                    message: format!("label {} is not in the binary map", ex.label),
                });
            };
        }
        self.class_labels = distinct_labels(&self.examples);
        Ok(self)
    }

    pub fn scale_features(mut self, mode: FeatureScaling) -> Self {
        if mode == FeatureScaling::UnitRowNorm {
            for ex in &mut self.examples {
                let norm = ex.norm_sq().sqrt();
                if norm > 0.0 {
                    ex.features.iter_mut().for_each(|(_, v)| *v /= norm);
                }
            }
        }
        self
    }

    pub fn max_row_norm_sq(&self) -> f64 {
        self.examples
            .iter()
            .map(SparseExample::norm_sq)
            .fold(0.0, f64::max)
    }

    /// Serializes back to LIBSVM text with 1-based indices.
    pub fn to_libsvm_string(&self) -> String {
        let mut out = String::new();
        for ex in &self.examples {
            write!(out, "{}", ex.label).unwrap();
            for &(j, v) in &ex.features {
                write!(out, " {}:{}", j + 1, v).unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn write_libsvm(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_libsvm_string()).map_err(|e| Error::io(path, e))
    }
}

fn distinct_labels(examples: &[SparseExample]) -> Vec<f64> {
    let mut labels: Vec<f64> = examples.iter().map(|e| e.label).collect();
    labels.sort_by(f64::total_cmp);
    labels.dedup();
    labels
}

fn validate_example(ex: &SparseExample) -> std::result::Result<(), String> {
    if !ex.label.is_finite() {
        return Err(format!("non-finite label {}", ex.label));
    }
    for w in ex.features.windows(2) {
        if w[1].0 <= w[0].0 {
            return Err(format!(
                "feature indices not strictly increasing ({} then {})",
                w[0].0 + 1,
                w[1].0 + 1
            ));
        }
    }
    if let Some(&(j, v)) = ex.features.iter().find(|(_, v)| !v.is_finite()) {
        return Err(format!("non-finite value {v} at index {}", j + 1));
    }
    Ok(())
}

/// Parses one LIBSVM line. `line_no` is only used in error messages.
///
/// Returns `Ok(None)` for blank and comment-only lines.
pub fn parse_libsvm_line(line: &str, line_no: usize) -> Result<Option<SparseExample>> {
    let content = line.split('#').next().unwrap_or("");
    let mut tokens = content.split_whitespace();
    let Some(label_tok) = tokens.next() else {
        return Ok(None);
    };
    let parse_err = |message: String| Error::Parse {
        line: line_no,
        message,
    };
    let label: f64 = label_tok
        .parse()
        .map_err(|_| parse_err(format!("bad label `{label_tok}`")))?;
    if !label.is_finite() {
        return Err(parse_err(format!("non-finite label `{label_tok}`")));
    }

    let mut features: Vec<(usize, f64)> = Vec::new();
    for tok in tokens {
        let (idx, val) = tok
            .split_once(':')
            .ok_or_else(|| parse_err(format!("expected `index:value`, got `{tok}`")))?;
        let idx: usize = idx
            .parse()
            .map_err(|_| parse_err(format!("bad feature index in `{tok}`")))?;
        if idx == 0 {
            return Err(parse_err(format!(
                "feature indices are 1-based, got `{tok}`"
            )));
        }
        let val: f64 = val
            .parse()
            .map_err(|_| parse_err(format!("bad feature value in `{tok}`")))?;
        if !val.is_finite() {
            return Err(Error::Validation {
                line: line_no,
                message: format!("non-finite feature value in `{tok}`"),
            });
        }
        if let Some(&(prev, _)) = features.last() {
            let message = if idx - 1 == prev {
                format!("duplicate feature index {idx}")
            } else if idx - 1 < prev {
                format!("feature indices not increasing ({} then {idx})", prev + 1)
            } else {
                String::new()
            };
            if !message.is_empty() {
                return Err(Error::Validation {
                    line: line_no,
                    message,
                });
            }
        }
        features.push((idx - 1, val));
    }
    Ok(Some(SparseExample { features, label }))
}

/// Parses a whole LIBSVM document.
pub fn parse_libsvm(text: &str) -> Result<Vec<SparseExample>> {
    let mut examples = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if let Some(ex) = parse_libsvm_line(line, i + 1)? {
            examples.push(ex);
        }
    }
    Ok(examples)
}

/// Loads a LIBSVM file. When `binary_label_map` is given the labels are
/// remapped onto `{-1, +1}` and more than two classes is an error.
pub fn load_libsvm(
    path: impl AsRef<Path>,
    binary_label_map: Option<BinaryLabelMap>,
) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let examples = parse_libsvm(&text)?;
    if examples.is_empty() {
        return Err(Error::Dataset(format!(
            "{} contains no examples",
            path.display()
        )));
    }
    let ds = Dataset::new(examples, None)?;
    match binary_label_map {
        Some(map) => ds.map_binary(map),
        None => Ok(ds),
    }
}
