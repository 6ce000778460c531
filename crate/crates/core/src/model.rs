//! Finite-sum objectives `f(x) = (1/n) sum_i f_i(x)` with the L2 term
//! `(lambda/2) ||x||^2` folded into every component.
//!
//! Gradient routines that do optimization work take an [`EvalCounter`] and
//! charge it; measurement helpers (`full_value`, `gradient`) are free.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::trace::EvalCounter;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveKind {
    /// `f_i(x) = (a_i^T x - b_i)^2 / 2`
    LeastSquares,
    /// `f_i(x) = log(1 + exp(-b_i x^T a_i))`, `b_i` in `{-1, +1}`
    LogisticBinary,
    /// Softmax cross-entropy over `C` classes; parameters are the `C x d`
    /// weight matrix flattened class-major.
    LogisticMultinomial,
}

impl ObjectiveKind {
    pub fn name(self) -> &'static str {
        match self {
            ObjectiveKind::LeastSquares => "least_squares",
            ObjectiveKind::LogisticBinary => "logistic_binary",
            ObjectiveKind::LogisticMultinomial => "logistic_multinomial",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Objective {
    kind: ObjectiveKind,
    data: Arc<Dataset>,
    lambda: f64,
    /// Class index per example (multinomial only).
    classes: Vec<usize>,
    num_classes: usize,
}

impl Objective {
    pub fn new(kind: ObjectiveKind, data: Arc<Dataset>, lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::invalid(format!(
                "lambda must be finite and non-negative, got {lambda}"
            )));
        }
        let mut classes = Vec::new();
        let mut num_classes = 1;
        match kind {
            ObjectiveKind::LeastSquares => {}
            ObjectiveKind::LogisticBinary => {
                if let Some(ex) = data.examples().iter().find(|e| e.label.abs() != 1.0) {
                    return Err(Error::Dataset(format!(
                        "binary logistic needs labels in {{-1, +1}}, found {}",
                        ex.label
                    )));
                }
            }
            ObjectiveKind::LogisticMultinomial => {
                let labels = data.class_labels();
                if labels.len() < 2 {
                    return Err(Error::Dataset(
                        "multinomial logistic needs at least two classes".into(),
                    ));
                }
                num_classes = labels.len();
                classes = data
                    .examples()
                    .iter()
                    .map(|e| {
                        labels
                            .binary_search_by(|l| l.total_cmp(&e.label))
                            .expect("label present in class list")
                    })
                    .collect();
            }
        }
        Ok(Objective {
            kind,
            data,
            lambda,
            classes,
            num_classes,
        })
    }

    pub fn kind(&self) -> ObjectiveKind {
        self.kind
    }

    pub fn data(&self) -> &Arc<Dataset> {
        &self.data
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Number of components.
    pub fn n(&self) -> usize {
        self.data.len()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    /// Length of a parameter vector: `d`, or `d * C` for multinomial.
    pub fn dim_params(&self) -> usize {
        self.data.dim() * self.num_classes
    }

    /// Same objective with a different regularization weight.
    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        let mut out = self.clone();
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::invalid(format!(
                "lambda must be finite and non-negative, got {lambda}"
            )));
        }
        out.lambda = lambda;
        Ok(out)
    }

    /// Closed-form upper bound on every component's gradient Lipschitz
    /// constant.
    pub fn smoothness_bound(&self) -> f64 {
        let r = self.data.max_row_norm_sq();
        let curvature = match self.kind {
            ObjectiveKind::LeastSquares => 1.0,
            ObjectiveKind::LogisticBinary => 0.25,
            ObjectiveKind::LogisticMultinomial => 0.5,
        };
        curvature * r + self.lambda
    }

    /// Strong convexity modulus guaranteed by the regularizer alone.
    pub fn strong_convexity_bound(&self) -> f64 {
        self.lambda
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i < self.n() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                index: i,
                n: self.n(),
            })
        }
    }

    /// Data part of `f_i(x)` (no regularizer).
    fn loss(&self, i: usize, x: &[f64]) -> f64 {
        let ex = self.data.example(i);
        match self.kind {
            ObjectiveKind::LeastSquares => {
                let r = ex.dot(x) - ex.label;
                0.5 * r * r
            }
            ObjectiveKind::LogisticBinary => softplus(-ex.label * ex.dot(x)),
            ObjectiveKind::LogisticMultinomial => {
                let d = self.data.dim();
                let scores: Vec<f64> = x.chunks_exact(d).map(|w| ex.dot(w)).collect();
                log_sum_exp(&scores) - scores[self.classes[i]]
            }
        }
    }

    /// `out += scale * grad(loss_i)(x)` (no regularizer).
    fn add_loss_gradient(&self, i: usize, x: &[f64], scale: f64, out: &mut [f64]) {
        let ex = self.data.example(i);
        match self.kind {
            ObjectiveKind::LeastSquares => {
                let r = ex.dot(x) - ex.label;
                ex.add_scaled_to(scale * r, out);
            }
            ObjectiveKind::LogisticBinary => {
                let b = ex.label;
                let coef = -b * sigmoid(-b * ex.dot(x));
                ex.add_scaled_to(scale * coef, out);
            }
            ObjectiveKind::LogisticMultinomial => {
                let d = self.data.dim();
                let scores: Vec<f64> = x.chunks_exact(d).map(|w| ex.dot(w)).collect();
                let lse = log_sum_exp(&scores);
                let y = self.classes[i];
                for (c, (s, block)) in scores.iter().zip(out.chunks_exact_mut(d)).enumerate() {
                    let p = (s - lse).exp();
                    let coef = if c == y { p - 1.0 } else { p };
                    ex.add_scaled_to(scale * coef, block);
                }
            }
        }
    }

    fn regularizer(&self, x: &Point) -> f64 {
        0.5 * self.lambda * x.norm_sq()
    }

    /// `f_i(x)` including `(lambda/2) ||x||^2`.
    pub fn component_value(&self, i: usize, x: &Point) -> Result<f64> {
        self.check_index(i)?;
        x.check_dim(self.dim_params())?;
        Ok(self.loss(i, x.as_slice()) + self.regularizer(x))
    }

    /// `grad f_i(x)`.
    pub fn component_gradient(&self, i: usize, x: &Point) -> Result<Point> {
        self.check_index(i)?;
        x.check_dim(self.dim_params())?;
        let mut g = Point::zeros(self.dim_params());
        self.add_loss_gradient(i, x.as_slice(), 1.0, g.as_mut_slice());
        g.axpy(self.lambda, x);
        Ok(g)
    }

    /// `(1/|I|) sum_{i in I} grad f_i(x)`, charging `|I|` evaluations.
    pub fn batch_gradient(
        &self,
        indices: &[usize],
        x: &Point,
        counter: &mut EvalCounter,
    ) -> Result<Point> {
        if indices.is_empty() {
            return Err(Error::invalid("batch gradient over an empty index set"));
        }
        for &i in indices {
            self.check_index(i)?;
        }
        x.check_dim(self.dim_params())?;
        let scale = 1.0 / indices.len() as f64;
        let mut g = Point::zeros(self.dim_params());
        for &i in indices {
            self.add_loss_gradient(i, x.as_slice(), scale, g.as_mut_slice());
        }
        g.axpy(self.lambda, x);
        let b = indices.len() as u64;
        counter.charge(b, b)?;
        Ok(g)
    }

    /// Mini-batch variance-reduced direction
    /// `grad f_I(x) - grad f_I(anchor) + anchor_gradient`.
    ///
    /// Evaluates `2|I|` component gradients; the paper axis is charged `|I|`.
    pub fn variance_reduced_gradient(
        &self,
        indices: &[usize],
        x: &Point,
        anchor: &Point,
        anchor_gradient: &Point,
        counter: &mut EvalCounter,
    ) -> Result<Point> {
        if indices.is_empty() {
            return Err(Error::invalid(
                "variance-reduced gradient over an empty index set",
            ));
        }
        for &i in indices {
            self.check_index(i)?;
        }
        let dim = self.dim_params();
        x.check_dim(dim)?;
        anchor.check_dim(dim)?;
        anchor_gradient.check_dim(dim)?;
        let scale = 1.0 / indices.len() as f64;
        let mut v = Point::zeros(dim);
        for &i in indices {
            self.add_loss_gradient(i, x.as_slice(), scale, v.as_mut_slice());
            self.add_loss_gradient(i, anchor.as_slice(), -scale, v.as_mut_slice());
        }
        if self.lambda != 0.0 {
            v.axpy(self.lambda, &x.sub(anchor));
        }
        v.axpy(1.0, anchor_gradient);
        let b = indices.len() as u64;
        counter.charge(2 * b, b)?;
        Ok(v)
    }

    /// `f(x)`; free of charge.
    ///
    /// # Panics
    /// If `x` has the wrong dimension.
    pub fn full_value(&self, x: &Point) -> f64 {
        assert_eq!(x.dim(), self.dim_params(), "point dimension");
        let s: f64 = (0..self.n()).map(|i| self.loss(i, x.as_slice())).sum();
        s / self.n() as f64 + self.regularizer(x)
    }

    /// `grad f(x)`, charging `n` evaluations.
    pub fn full_gradient(&self, x: &Point, counter: &mut EvalCounter) -> Point {
        let g = self.gradient(x);
        let n = self.n() as u64;
        counter
            .charge(n, n)
            .expect("full gradient charge is well formed");
        g
    }

    /// `grad f(x)` for measurement; not charged.
    ///
    /// # Panics
    /// If `x` has the wrong dimension.
    pub fn gradient(&self, x: &Point) -> Point {
        assert_eq!(x.dim(), self.dim_params(), "point dimension");
        let scale = 1.0 / self.n() as f64;
        let mut g = Point::zeros(self.dim_params());
        for i in 0..self.n() {
            self.add_loss_gradient(i, x.as_slice(), scale, g.as_mut_slice());
        }
        g.axpy(self.lambda, x);
        g
    }
}

/// `log(1 + exp(t))` without overflow.
fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

fn log_sum_exp(s: &[f64]) -> f64 {
    let m = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + s.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}
