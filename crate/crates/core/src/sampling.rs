//! Uniform mini-batch sampling without replacement and the increasing
//! batch-size schedule.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Variance shrink factor of a size-`b` uniform subset mean,
/// `(n - b) / (b (n - 1))`. Zero when `n = 1`.
pub fn delta(n: usize, b: usize) -> Result<f64> {
    if n == 0 || b == 0 || b > n {
        return Err(Error::invalid(format!(
            "batch size {b} out of range for n = {n}"
        )));
    }
    if n == 1 {
        return Ok(0.0);
    }
    Ok((n - b) as f64 / (b as f64 * (n - 1) as f64))
}

/// `b_{k+1} = min b` such that `4 L delta(n, b) alpha_{k+1} <= p`, with
/// `alpha_{k+1} = (k + 2) / (4L)`.
///
/// The `L` cancels, leaving `(n - b)(k + 2) <= p b (n - 1)`, whose smallest
/// solution is `ceil(n (k + 2) / (p (n - 1) + k + 2))` capped at `n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BatchSchedule {
    n: usize,
    p: f64,
}

impl BatchSchedule {
    pub fn new(n: usize, p: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("batch schedule needs n >= 1"));
        }
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::invalid(format!("p must be positive, got {p}")));
        }
        Ok(BatchSchedule { n, p })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// `true` when `p` is within the range covered by the stage analysis.
    pub fn is_theory_admissible(&self) -> bool {
        self.p <= 0.5
    }

    /// Batch size `b_{k+1}` for inner iteration `k` (counted from 0).
    pub fn batch_size(&self, k: usize) -> usize {
        let n = self.n;
        if n == 1 {
            return 1;
        }
        let kk = (k + 2) as f64;
        let guess = (n as f64 * kk / (self.p * (n - 1) as f64 + kk)).ceil();
        let mut b = if guess.is_finite() {
            (guess as usize).clamp(1, n)
        } else {
            n
        };
        // the float guess can be off by one at exact ties
        while b > 1 && self.admits(b - 1, k) {
            b -= 1;
        }
        while b < n && !self.admits(b, k) {
            b += 1;
        }
        b
    }

    /// Exact test of `(n - b)(k + 2) <= p b (n - 1)` for the stored `p`.
    fn admits(&self, b: usize, k: usize) -> bool {
        let n = self.n as u64;
        let b = b as u64;
        let lhs = ((n - b) * (k as u64 + 2)) as f64;
        let m = (b * (n - 1)) as f64;
        let prod = self.p * m;
        // p * m == prod + err exactly
        let err = self.p.mul_add(m, -prod);
        lhs - prod <= err
    }
}

/// Seeded sampler of uniform size-`b` subsets of `{0, .., n-1}`.
#[derive(Clone, Debug)]
pub struct SubsetSampler {
    rng: ChaCha8Rng,
    perm: Vec<usize>,
}

impl SubsetSampler {
    pub fn new(n: usize, seed: u64) -> Self {
        SubsetSampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
            perm: (0..n).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.perm.len()
    }

    /// `b` distinct indices by a partial Fisher-Yates shuffle. The
    /// permutation carries over between calls, which keeps every draw
    /// uniform over the `C(n, b)` subsets.
    pub fn sample_subset(&mut self, b: usize) -> Result<Vec<usize>> {
        let n = self.perm.len();
        if b == 0 || b > n {
            return Err(Error::invalid(format!(
                "subset size {b} out of range for n = {n}"
            )));
        }
        for i in 0..b {
            let j = self.rng.random_range(i..n);
            self.perm.swap(i, j);
        }
        Ok(self.perm[..b].to_vec())
    }

    /// One index drawn uniformly.
    pub fn uniform_index(&mut self) -> usize {
        self.rng.random_range(0..self.perm.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn delta_examples() {
        assert_eq!(delta(10, 10).unwrap(), 0.0);
        assert_eq!(delta(10, 1).unwrap(), 1.0);
        assert!((delta(100, 10).unwrap() - 1.0 / 11.0).abs() < 1e-15);
        assert_eq!(delta(1, 1).unwrap(), 0.0);
        assert!(delta(10, 0).is_err());
        assert!(delta(10, 11).is_err());
    }

    #[test]
    fn batch_size_examples() {
        let s = BatchSchedule::new(1000, 0.5).unwrap();
        assert_eq!(s.batch_size(0), 4);
        assert_eq!(s.batch_size(8), 20);
        assert_eq!(s.batch_size(10_000_000), 1000);
        assert_eq!(BatchSchedule::new(1, 0.5).unwrap().batch_size(3), 1);
    }

    #[test]
    fn batch_size_exact_tie() {
        // n = 10, p = 1/2, k = 1: b = 4 meets (10 - 4) * 3 = 18 = 0.5 * 4 * 9 exactly
        let s = BatchSchedule::new(10, 0.5).unwrap();
        assert_eq!(s.batch_size(1), 4);
        // n = 11, p = 0.1, k = 8: b = 10 meets 1 * 10 = 0.1 * 10 * 10
        let s = BatchSchedule::new(11, 0.1).unwrap();
        assert_eq!(s.batch_size(8), 10);
    }

    #[test]
    fn batch_size_is_nondecreasing() {
        for &n in &[2, 7, 100, 1000, 12345] {
            for &p in &[0.01, 0.1, 0.5, 1.0, 10.0] {
                let s = BatchSchedule::new(n, p).unwrap();
                let mut prev = 0;
                for k in 0..2000 {
                    let b = s.batch_size(k);
                    assert!(b >= prev && (1..=n).contains(&b));
                    prev = b;
                }
            }
        }
    }

    #[test]
    fn schedule_rejects_bad_input() {
        assert!(BatchSchedule::new(0, 0.5).is_err());
        assert!(BatchSchedule::new(10, 0.0).is_err());
        assert!(BatchSchedule::new(10, f64::NAN).is_err());
        assert!(!BatchSchedule::new(10, 2.0).unwrap().is_theory_admissible());
    }

    #[test]
    fn full_subset_and_bounds() {
        let mut s = SubsetSampler::new(5, 1);
        let mut all = s.sample_subset(5).unwrap();
        all.sort();
        assert_eq!(all, vec![0, 1, 2, 3, 4]);
        assert!(s.sample_subset(0).is_err());
        assert!(s.sample_subset(6).is_err());
    }

    #[test]
    fn determinism() {
        let mut a = SubsetSampler::new(50, 9);
        let mut b = SubsetSampler::new(50, 9);
        for k in 1..20 {
            assert_eq!(a.sample_subset(k).unwrap(), b.sample_subset(k).unwrap());
        }
    }

    #[test]
    fn singleton_frequencies() {
        let mut s = SubsetSampler::new(2, 123);
        let draws = 100_000;
        let zeros = (0..draws)
            .filter(|_| s.sample_subset(1).unwrap()[0] == 0)
            .count();
        let freq = zeros as f64 / draws as f64;
        assert!((freq - 0.5).abs() <= 0.01, "{freq}");
    }

    #[test]
    fn subsets_are_uniform() {
        // chi-square statistic over all C(n, b) cells within 3 sigma of its mean
        let draws = 100_000usize;
        for n in 2..=6usize {
            for b in 1..=3.min(n) {
                let mut s = SubsetSampler::new(n, (n * 10 + b) as u64);
                let mut counts: HashMap<Vec<usize>, usize> = HashMap::new();
                for _ in 0..draws {
                    let mut sub = s.sample_subset(b).unwrap();
                    sub.sort();
                    *counts.entry(sub).or_default() += 1;
                }
                let cells = binomial(n, b);
                assert_eq!(counts.len(), cells);
                if cells == 1 {
                    continue;
                }
                let expected = draws as f64 / cells as f64;
                let chi2: f64 = counts
                    .values()
                    .map(|&c| (c as f64 - expected).powi(2) / expected)
                    .sum();
                let df = (cells - 1) as f64;
                assert!(
                    (chi2 - df).abs() <= 3.0 * (2.0 * df).sqrt(),
                    "n={n} b={b}: chi2 {chi2} with {df} dof"
                );
            }
        }
    }

    fn binomial(n: usize, k: usize) -> usize {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }
}
