//! Brute-force checkers. None of them reuses the code path it checks:
//! subsets are enumerated exhaustively, sums are taken directly over
//! components, and schedule facts are evaluated in exact arithmetic.

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::model::{Objective, ObjectiveKind};
use crate::trace::EvalCounter;

/// Largest `n` for which subsets are enumerated.
pub const ENUMERATION_CAP: usize = 12;
/// Largest `n` for the objective-level enumeration oracles.
pub const OBJECTIVE_ENUMERATION_CAP: usize = 8;

/// Calls `f` on every size-`b` subset of `0..n` in lexicographic order.
pub fn for_each_subset(n: usize, b: usize, mut f: impl FnMut(&[usize])) {
    if b == 0 || b > n {
        return;
    }
    let mut idx: Vec<usize> = (0..b).collect();
    loop {
        f(&idx);
        let mut i = b;
        while i > 0 && idx[i - 1] == n - b + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return;
        }
        idx[i - 1] += 1;
        for j in i..b {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn check_enumeration(n: usize, b: usize, cap: usize) -> Result<()> {
    if n > cap {
        return Err(Error::EnumerationTooLarge { n, cap });
    }
    if b == 0 || b > n {
        return Err(Error::invalid(format!(
            "subset size {b} out of range for n = {n}"
        )));
    }
    Ok(())
}

fn mean_of(vectors: &[Vec<f64>], indices: &[usize]) -> Vec<f64> {
    let d = vectors[indices[0]].len();
    let mut m = vec![0.0; d];
    for &i in indices {
        for (a, v) in m.iter_mut().zip(&vectors[i]) {
            *a += v;
        }
    }
    let k = indices.len() as f64;
    m.iter_mut().for_each(|a| *a /= k);
    m
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `(n - b) / (b (n - 1))`, evaluated independently of the sampling module.
fn shrink(n: usize, b: usize) -> f64 {
    if n == 1 {
        0.0
    } else {
        (n - b) as f64 / ((n - 1) as f64 * b as f64)
    }
}

/// `E_i || xi_i - mu ||^2`.
pub fn mean_spread(vectors: &[Point]) -> f64 {
    let rows: Vec<Vec<f64>> = vectors.iter().map(|p| p.as_slice().to_vec()).collect();
    let all: Vec<usize> = (0..rows.len()).collect();
    let mu = mean_of(&rows, &all);
    rows.iter().map(|r| sq_dist(r, &mu)).sum::<f64>() / rows.len() as f64
}

/// Subset-mean variance: `lhs` is `E_I || mean_I(xi) - mu ||^2` over all
/// `C(n, b)` subsets, `rhs` is `(n - b) / (b (n - 1)) * E_i || xi_i - mu ||^2`.
pub fn oracle_subset_variance(vectors: &[Point], b: usize) -> Result<(f64, f64)> {
    let n = vectors.len();
    check_enumeration(n, b, ENUMERATION_CAP)?;
    let rows: Vec<Vec<f64>> = vectors.iter().map(|p| p.as_slice().to_vec()).collect();
    let all: Vec<usize> = (0..n).collect();
    let mu = mean_of(&rows, &all);
    let (mut total, mut count) = (0.0, 0usize);
    for_each_subset(n, b, |s| {
        total += sq_dist(&mean_of(&rows, s), &mu);
        count += 1;
    });
    let lhs = total / count as f64;
    Ok((lhs, shrink(n, b) * mean_spread(vectors)))
}

/// Library directions `v_S` for every size-`b` subset, together with
/// `grad f(x)` summed directly over components.
fn enumerate_directions(
    obj: &Objective,
    x: &Point,
    y0: &Point,
    b: usize,
) -> Result<(Vec<Point>, Point)> {
    let n = obj.n();
    check_enumeration(n, b, OBJECTIVE_ENUMERATION_CAP)?;
    let mut counter = EvalCounter::new();
    let v_tilde = obj.full_gradient(y0, &mut counter);
    let mut dirs = Vec::new();
    let mut err = None;
    for_each_subset(n, b, |s| {
        match obj.variance_reduced_gradient(s, x, y0, &v_tilde, &mut counter) {
            Ok(v) => dirs.push(v),
            Err(e) => err = Some(e),
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| obj.component_gradient(i, x).map(Point::into_vec))
        .collect::<Result<_>>()?;
    let all: Vec<usize> = (0..n).collect();
    Ok((dirs, Point::from_vec(mean_of(&rows, &all))))
}

/// Mean of `points` as `p_0 + mean(p_i - p_0)`, exact when all are equal.
fn anchored_mean(points: &[Point]) -> Point {
    let first = &points[0];
    let mut acc = Point::zeros(first.dim());
    for p in points {
        acc.axpy(1.0, &p.sub(first));
    }
    acc.scale(1.0 / points.len() as f64);
    acc.axpy(1.0, first);
    acc
}

/// `|| E_I[v] - grad f(x) ||` with the expectation taken over every subset.
pub fn oracle_unbiasedness(obj: &Objective, x: &Point, y0: &Point, b: usize) -> Result<f64> {
    let (dirs, grad) = enumerate_directions(obj, x, y0, b)?;
    Ok(anchored_mean(&dirs).distance(&grad))
}

fn direct_value(obj: &Objective, x: &Point) -> Result<f64> {
    let n = obj.n();
    let mut s = 0.0;
    for i in 0..n {
        s += obj.component_value(i, x)?;
    }
    Ok(s / n as f64)
}

/// Exhaustive conditional variance `E_I || v - E_I v ||^2` and the bound
/// `4 L delta (f(x) - f(x_*) + f(y0) - f(x_*))`.
pub fn oracle_variance_bound(
    obj: &Objective,
    x: &Point,
    y0: &Point,
    b: usize,
    x_star: &Point,
) -> Result<(f64, f64)> {
    let (dirs, _) = enumerate_directions(obj, x, y0, b)?;
    let center = anchored_mean(&dirs);
    let variance = dirs.iter().map(|v| v.sub(&center).norm_sq()).sum::<f64>() / dirs.len() as f64;
    let f_star = direct_value(obj, x_star)?;
    let gap = (direct_value(obj, x)? - f_star) + (direct_value(obj, y0)? - f_star);
    let bound = 4.0 * obj.smoothness_bound() * shrink(obj.n(), b) * gap;
    Ok((variance, bound))
}

/// Central finite differences with step `1e-5` against
/// `component_gradient`; returns `||g - fd|| / max(1, ||fd||)`.
pub fn oracle_fd_gradient(obj: &Objective, i: usize, x: &Point) -> Result<f64> {
    let g = obj.component_gradient(i, x)?;
    let fd = fd_gradient(obj, i, x, 1e-5)?;
    Ok(g.distance(&fd) / fd.norm().max(1.0))
}

/// Central-difference gradient of `f_i`.
pub fn fd_gradient(obj: &Objective, i: usize, x: &Point, h: f64) -> Result<Point> {
    let mut fd = Point::zeros(x.dim());
    let mut probe = x.clone();
    for j in 0..x.dim() {
        let orig = probe[j];
        probe[j] = orig + h;
        let up = obj.component_value(i, &probe)?;
        probe[j] = orig - h;
        let down = obj.component_value(i, &probe)?;
        probe[j] = orig;
        fd[j] = (up - down) / (2.0 * h);
    }
    Ok(fd)
}

/// `p` as an exact fraction `num / 2^shift` (or `num * 2^-shift` when
/// `shift` is negative).
fn decompose(p: f64) -> (i128, i32) {
    let bits = p.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = (bits & ((1u64 << 52) - 1)) as i128;
    let (mut mant, mut e) = if exp == 0 {
        (frac, -1074)
    } else {
        (frac | (1i128 << 52), exp - 1075)
    };
    while mant != 0 && mant % 2 == 0 {
        mant /= 2;
        e += 1;
    }
    (mant, -e)
}

/// Exact `lhs <= p * rhs` for non-negative integers and finite `p > 0`.
fn exact_le(lhs: i128, p: f64, rhs: i128) -> Result<bool> {
    let (mant, shift) = decompose(p);
    let overflow = || Error::invalid("exact comparison overflowed i128");
    let prod = mant.checked_mul(rhs).ok_or_else(overflow)?;
    if shift >= 0 {
        let s = u32::try_from(shift).map_err(|_| overflow())?;
        let l = lhs.checked_mul(
            1i128
                .checked_shl(s)
                .filter(|v| *v > 0)
                .ok_or_else(overflow)?,
        );
        Ok(l.ok_or_else(overflow)? <= prod)
    } else {
        let s = u32::try_from(-shift).map_err(|_| overflow())?;
        let r = prod.checked_mul(
            1i128
                .checked_shl(s)
                .filter(|v| *v > 0)
                .ok_or_else(overflow)?,
        );
        Ok(lhs <= r.ok_or_else(overflow)?)
    }
}

/// Smallest `b` in `1..=n` with `4 L delta(n, b) alpha_{k+1} <= p`, i.e.
/// `(n - b)(k + 2) <= p b (n - 1)`, by a linear scan in exact arithmetic.
pub fn oracle_batch_size(n: usize, p: f64, k: usize) -> Result<usize> {
    if n == 0 || !(p.is_finite() && p > 0.0) {
        return Err(Error::invalid("oracle_batch_size needs n >= 1 and p > 0"));
    }
    for b in 1..=n {
        let lhs = (n - b) as i128 * (k as i128 + 2);
        let rhs = b as i128 * (n as i128 - 1);
        if exact_le(lhs, p, rhs)? {
            return Ok(b);
        }
    }
    Ok(n)
}

/// Minimal `m` with `sum_{k=0}^{m} b_{k+1} >= n`, scanning with
/// [`oracle_batch_size`].
pub fn oracle_r1(n: usize, p: f64) -> Result<usize> {
    let mut total = 0usize;
    let mut m = 0usize;
    loop {
        total += oracle_batch_size(n, p, m)?;
        if total >= n {
            return Ok(m);
        }
        m += 1;
    }
}

pub type Rational = Ratio<i128>;

/// `alpha_{k+1} = (k + 2) / (4L)` in exact arithmetic.
pub fn exact_alpha(l: Rational, k: usize) -> Rational {
    Rational::from_integer(k as i128 + 2) / (Rational::from_integer(4) * l)
}

/// `tau_k = 1 / (L alpha_{k+1} + 1/2)` in exact arithmetic.
pub fn exact_tau(l: Rational, k: usize) -> Rational {
    (l * exact_alpha(l, k) + Rational::new(1, 2)).recip()
}

/// First `k` in `1..=k_max` where
/// `L alpha_{k+1}^2 - alpha_{k+1} / 2 - L alpha_k^2 != -1/(16L)`, if any.
/// `alpha_k` here is `alpha(k - 1)` in zero-based indexing.
pub fn oracle_telescoping(l: Rational, k_max: usize) -> Option<usize> {
    let target = -(Rational::from_integer(16) * l).recip();
    (1..=k_max).find(|&k| {
        let next = exact_alpha(l, k);
        let prev = exact_alpha(l, k - 1);
        l * next * next - next / Rational::from_integer(2) - l * prev * prev != target
    })
}

/// `1/tau_k - (1 + 4 delta_{k+1}) L alpha_{k+1}` in exact arithmetic for a
/// given batch size `b = b_{k+1}`.
pub fn exact_coefficient(l: Rational, n: usize, b: usize, k: usize) -> Rational {
    let delta = if n == 1 {
        Rational::from_integer(0)
    } else {
        Rational::new((n - b) as i128, b as i128 * (n as i128 - 1))
    };
    exact_tau(l, k).recip()
        - (Rational::from_integer(1) + Rational::from_integer(4) * delta) * l * exact_alpha(l, k)
}

/// Approximation of the minimizer with its objective value.
#[derive(Clone, Debug)]
pub struct Reference {
    pub x: Point,
    pub f_star: f64,
    pub grad_norm: f64,
    pub iterations: usize,
}

/// Solves `(A^T A / n + lambda I) x = A^T b / n` by Gaussian elimination
/// with partial pivoting.
pub fn least_squares_minimizer(obj: &Objective) -> Result<Point> {
    if obj.kind() != ObjectiveKind::LeastSquares {
        return Err(Error::invalid(
            "direct solve needs a least-squares objective",
        ));
    }
    let d = obj.dim_params();
    let n = obj.n() as f64;
    let mut a = vec![vec![0.0; d + 1]; d];
    for ex in obj.data().examples() {
        for &(j, vj) in &ex.features {
            for &(k, vk) in &ex.features {
                a[j][k] += vj * vk / n;
            }
            a[j][d] += vj * ex.label / n;
        }
    }
    for (j, row) in a.iter_mut().enumerate() {
        row[j] += obj.lambda();
    }
    for col in 0..d {
        let pivot = (col..d)
            .max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))
            .expect("non-empty pivot range");
        if a[pivot][col].abs() < 1e-300 {
            return Err(Error::invalid("normal equations are singular"));
        }
        a.swap(col, pivot);
        for r in col + 1..d {
            let factor = a[r][col] / a[col][col];
            if factor != 0.0 {
                let (upper, lower) = a.split_at_mut(r);
                for (dst, src) in lower[0][col..].iter_mut().zip(&upper[col][col..]) {
                    *dst -= factor * src;
                }
            }
        }
    }
    let mut x = vec![0.0; d];
    for r in (0..d).rev() {
        let s: f64 = (r + 1..d).map(|c| a[r][c] * x[c]).sum();
        x[r] = (a[r][d] - s) / a[r][r];
    }
    Ok(Point::from_vec(x))
}

/// Reference minimizer: direct solve for least squares, otherwise
/// accelerated gradient descent with gradient-based momentum restarts,
/// stopped at `||grad f|| <= 1e-12`, after `max_iter` iterations, or once
/// the gradient norm has not improved for a long stretch.
pub fn reference_minimizer(obj: &Objective, max_iter: usize) -> Result<Reference> {
    if obj.kind() == ObjectiveKind::LeastSquares {
        let x = least_squares_minimizer(obj)?;
        return Ok(Reference {
            f_star: obj.full_value(&x),
            grad_norm: obj.gradient(&x).norm(),
            x,
            iterations: 0,
        });
    }
    const CHECK_EVERY: usize = 16;
    const PATIENCE: usize = 500;
    let step = 1.0 / obj.smoothness_bound();
    let mut x = Point::zeros(obj.dim_params());
    let mut y = x.clone();
    let mut theta = 1.0f64;
    let mut best = (x.clone(), obj.gradient(&x).norm());
    let mut since_best = 0usize;
    let mut iterations = 0;
    while iterations < max_iter && best.1 > 1e-12 {
        iterations += 1;
        let g = obj.gradient(&y);
        let mut x_next = y.clone();
        x_next.axpy(-step, &g);
        let theta_next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
        let mut beta = (theta - 1.0) / theta_next;
        theta = theta_next;
        if g.dot(&x_next.sub(&x)) > 0.0 {
            theta = 1.0;
            beta = 0.0;
        }
        y = x_next.clone();
        y.scale(1.0 + beta);
        y.axpy(-beta, &x);
        x = x_next;
        if iterations % CHECK_EVERY == 0 {
            let gn = obj.gradient(&x).norm();
            if gn < best.1 {
                best = (x.clone(), gn);
                since_best = 0;
            } else {
                since_best += 1;
                if since_best > PATIENCE {
                    break;
                }
            }
        }
    }
    let (x, grad_norm) = best;
    Ok(Reference {
        f_star: obj.full_value(&x),
        grad_norm,
        x,
        iterations,
    })
}
