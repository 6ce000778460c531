//! Dense points and the Euclidean proximal geometry used by the accelerated
//! stage: the gradient (SGD) step, the mirror (SMD) step and the convex
//! combination that couples them.
//!
//! Data rows are sparse but iterates become dense after a single step, so
//! every vector here is a dense `Vec<f64>`.

use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A dense point in parameter space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn zeros(dim: usize) -> Self {
        Point(vec![0.0; dim])
    }

    pub fn from_vec(coords: Vec<f64>) -> Self {
        Point(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn dot(&self, other: &Point) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `self += a * x`
    pub fn axpy(&mut self, a: f64, x: &Point) {
        debug_assert_eq!(self.dim(), x.dim());
        for (s, v) in self.0.iter_mut().zip(&x.0) {
            *s += a * v;
        }
    }

    pub fn scale(&mut self, a: f64) {
        for s in &mut self.0 {
            *s *= a;
        }
    }

    pub fn fill(&mut self, value: f64) {
        self.0.iter_mut().for_each(|s| *s = value);
    }

    /// `self - other`
    pub fn sub(&self, other: &Point) -> Point {
        debug_assert_eq!(self.dim(), other.dim());
        Point(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn distance(&self, other: &Point) -> f64 {
        self.sub(other).norm()
    }

    pub(crate) fn check_dim(&self, expected: usize) -> Result<()> {
        if self.dim() == expected {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected,
                got: self.dim(),
            })
        }
    }
}

impl From<Vec<f64>> for Point {
    fn from(v: Vec<f64>) -> Self {
        Point(v)
    }
}

impl Index<usize> for Point {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for Point {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

/// A Bregman divergence `V_x(y) = d(y) - d(x) - (grad d(x), y - x)` built
/// from a 1-strongly convex distance generating function `d`.
///
/// Only the Euclidean geometry is provided; other mirror maps can plug in
/// here.
pub trait Bregman {
    /// `V_x(y)`
    fn value(&self, x: &Point, y: &Point) -> Result<f64>;

    /// Gradient of `y -> V_x(y)`, i.e. `grad d(y) - grad d(x)`.
    fn gradient(&self, x: &Point, y: &Point) -> Result<Point>;

    /// `argmin_w { alpha (v, w - z) + V_z(w) }`
    fn mirror_step(&self, z: &Point, v: &Point, alpha: f64) -> Result<Point>;
}

/// `d(x) = ||x||^2 / 2`, giving `V_x(y) = ||x - y||^2 / 2`.
#[derive(Clone, Copy, Debug, Default)]
pub struct EuclideanBregman;

impl Bregman for EuclideanBregman {
    fn value(&self, x: &Point, y: &Point) -> Result<f64> {
        bregman_value(x, y)
    }

    fn gradient(&self, x: &Point, y: &Point) -> Result<Point> {
        y.check_dim(x.dim())?;
        Ok(y.sub(x))
    }

    fn mirror_step(&self, z: &Point, v: &Point, alpha: f64) -> Result<Point> {
        mirror_step(z, v, alpha)
    }
}

/// Euclidean Bregman divergence `||x - y||^2 / 2`.
pub fn bregman_value(x: &Point, y: &Point) -> Result<f64> {
    y.check_dim(x.dim())?;
    Ok(0.5 * x.sub(y).norm_sq())
}

/// Closed form of `argmin_y { eta (v, y - x) + ||y - x||^2 / 2 }`, which is
/// `x - eta v`.
pub fn sgd_step(x: &Point, v: &Point, eta: f64) -> Result<Point> {
    v.check_dim(x.dim())?;
    if eta.is_nan() || eta <= 0.0 {
        return Err(Error::invalid(format!(
            "step size must be positive, got {eta}"
        )));
    }
    let mut y = x.clone();
    y.axpy(-eta, v);
    Ok(y)
}

/// Euclidean mirror step `z - alpha v`.
pub fn mirror_step(z: &Point, v: &Point, alpha: f64) -> Result<Point> {
    v.check_dim(z.dim())?;
    if alpha.is_nan() || alpha <= 0.0 {
        return Err(Error::invalid(format!(
            "mirror step weight must be positive, got {alpha}"
        )));
    }
    let mut out = z.clone();
    out.axpy(-alpha, v);
    Ok(out)
}

/// `(1 - tau) y + tau z` for `tau` in `[0, 1]`.
pub fn convex_combine(y: &Point, z: &Point, tau: f64) -> Result<Point> {
    z.check_dim(y.dim())?;
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::invalid(format!("tau must lie in [0, 1], got {tau}")));
    }
    let coords = y
        .as_slice()
        .iter()
        .zip(z.as_slice())
        .map(|(a, b)| (1.0 - tau) * a + tau * b)
        .collect();
    Ok(Point(coords))
}
