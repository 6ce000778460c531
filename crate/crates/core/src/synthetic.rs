//! Seeded synthetic datasets with a planted model.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, SparseExample};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticKind {
    LeastSquares,
    Logistic,
    Multinomial { classes: usize },
}

impl fmt::Display for SyntheticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SyntheticKind::LeastSquares => f.write_str("least-squares"),
            SyntheticKind::Logistic => f.write_str("logistic"),
            SyntheticKind::Multinomial { classes } => write!(f, "multinomial:{classes}"),
        }
    }
}

impl FromStr for SyntheticKind {
    type Err = Error;

    /// `least-squares`, `logistic`, or `multinomial[:C]` (default 3 classes).
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "least-squares" | "ls" | "ridge" => Ok(SyntheticKind::LeastSquares),
            "logistic" => Ok(SyntheticKind::Logistic),
            "multinomial" => Ok(SyntheticKind::Multinomial { classes: 3 }),
            other => match other.strip_prefix("multinomial:") {
                Some(c) => {
                    let classes: usize = c
                        .parse()
                        .map_err(|_| Error::invalid(format!("bad class count `{c}`")))?;
                    if classes < 2 {
                        return Err(Error::invalid("multinomial needs at least 2 classes"));
                    }
                    Ok(SyntheticKind::Multinomial { classes })
                }
                None => Err(Error::invalid(format!("unknown synthetic kind `{other}`"))),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n: usize,
    pub d: usize,
    pub kind: SyntheticKind,
    /// Label noise: Gaussian std for least squares, softmax temperature for
    /// the logistic kinds (0 gives hard argmax labels).
    pub noise: f64,
    pub seed: u64,
    /// Feature std; `None` means `1/sqrt(d)`, which keeps row norms near 1.
    pub feature_scale: Option<f64>,
}

impl SyntheticSpec {
    pub fn new(n: usize, d: usize, kind: SyntheticKind, noise: f64, seed: u64) -> Self {
        SyntheticSpec {
            n,
            d,
            kind,
            noise,
            seed,
            feature_scale: None,
        }
    }
}

/// Metadata written next to a generated dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticMeta {
    pub spec: SyntheticSpec,
    /// Planted parameters, class-major for multinomial.
    pub planted: Vec<f64>,
    /// Known optimal value of the unregularized objective, when the
    /// construction fixes it (noise-free least squares).
    pub f_star: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct Synthetic {
    pub dataset: Dataset,
    pub meta: SyntheticMeta,
}

fn gaussian_rows(rng: &mut ChaCha8Rng, n: usize, d: usize, scale: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            (0..d)
                .map(|_| scale * Distribution::<f64>::sample(&StandardNormal, rng))
                .collect::<Vec<f64>>()
        })
        .collect()
}

fn sparse(row: &[f64], label: f64) -> SparseExample {
    let features = row
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(j, v)| (j, *v))
        .collect();
    SparseExample::new(features, label)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn generate(spec: &SyntheticSpec) -> Result<Synthetic> {
    if spec.n == 0 || spec.d == 0 {
        return Err(Error::invalid("synthetic data needs n, d >= 1"));
    }
    if !(spec.noise.is_finite() && spec.noise >= 0.0) {
        return Err(Error::invalid(format!(
            "noise must be non-negative, got {}",
            spec.noise
        )));
    }
    let scale = spec.feature_scale.unwrap_or(1.0 / (spec.d as f64).sqrt());
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let rows_of = match spec.kind {
        SyntheticKind::Multinomial { classes } => classes,
        _ => 1,
    };
    let planted: Vec<f64> = (0..rows_of * spec.d)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let rows = gaussian_rows(&mut rng, spec.n, spec.d, scale);
    let mut examples = Vec::with_capacity(spec.n);
    for row in &rows {
        let label = match spec.kind {
            SyntheticKind::LeastSquares => {
                let e: f64 = StandardNormal.sample(&mut rng);
                dot(row, &planted) + spec.noise * e
            }
            SyntheticKind::Logistic => {
                let t = dot(row, &planted);
                let positive = if spec.noise == 0.0 {
                    t >= 0.0
                } else {
                    rng.random::<f64>() < 1.0 / (1.0 + (-t / spec.noise).exp())
                };
                if positive {
                    1.0
                } else {
                    -1.0
                }
            }
            SyntheticKind::Multinomial { .. } => {
                let scores = planted.chunks_exact(spec.d).map(|w| dot(row, w));
                let perturbed: Vec<f64> = scores
                    .map(|s| {
                        if spec.noise == 0.0 {
                            s
                        } else {
                            // Gumbel-max sampling from softmax(s / noise)
                            let u: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
                            s / spec.noise - (-u.ln()).ln()
                        }
                    })
                    .collect();
                perturbed
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.total_cmp(b.1))
                    .map(|(c, _)| c as f64)
                    .expect("at least two classes")
            }
        };
        examples.push(sparse(row, label));
    }
    let dataset = Dataset::new(examples, Some(spec.d))?;
    let f_star = (spec.kind == SyntheticKind::LeastSquares && spec.noise == 0.0).then_some(0.0);
    Ok(Synthetic {
        dataset,
        meta: SyntheticMeta {
            spec: spec.clone(),
            planted,
            f_star,
        },
    })
}

/// Path of the metadata file for a dataset path: `<path>.json`.
pub fn meta_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Writes the LIBSVM file and its metadata JSON.
pub fn gen_synthetic(spec: &SyntheticSpec, path: impl AsRef<Path>) -> Result<SyntheticMeta> {
    let path = path.as_ref();
    let syn = generate(spec)?;
    syn.dataset.write_libsvm(path)?;
    let meta = meta_path(path);
    let json = serde_json::to_string_pretty(&syn.meta)?;
    std::fs::write(&meta, json + "\n").map_err(|e| Error::io(&meta, e))?;
    Ok(syn.meta)
}

pub fn read_meta(path: impl AsRef<Path>) -> Result<SyntheticMeta> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Small unstructured instance: standard normal features; labels are
/// random signs when `binary`, standard normal otherwise.
pub fn random_instance<R: Rng>(rng: &mut R, n: usize, d: usize, binary: bool) -> Result<Dataset> {
    let examples = (0..n)
        .map(|_| {
            let row: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
            let label = if binary {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            } else {
                StandardNormal.sample(rng)
            };
            sparse(&row, label)
        })
        .collect();
    Dataset::new(examples, Some(d))
}
