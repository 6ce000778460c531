//! Oracle verification suite behind `amsvrg verify`.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::dataset::Dataset;
use crate::error::Result;
use crate::geometry::Point;
use crate::model::{Objective, ObjectiveKind};
use crate::oracles::{
    exact_alpha, exact_coefficient, exact_tau, least_squares_minimizer, mean_spread,
    oracle_batch_size, oracle_fd_gradient, oracle_r1, oracle_subset_variance, oracle_telescoping,
    oracle_unbiasedness, oracle_variance_bound, Rational,
};
use crate::sampling::{delta, BatchSchedule};
use crate::solvers::amsvrg::{restart_r1_horizon, ScheduleParams};
use crate::synthetic::random_instance;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VerifyScale {
    Small,
    Full,
}

struct Sizes {
    instances: usize,
    k_max: usize,
    r1_n_max: usize,
    fd_points: usize,
}

impl VerifyScale {
    fn sizes(self) -> Sizes {
        match self {
            VerifyScale::Small => Sizes {
                instances: 20,
                k_max: 1000,
                r1_n_max: 100,
                fd_points: 10,
            },
            VerifyScale::Full => Sizes {
                instances: 100,
                k_max: 10_000,
                r1_n_max: 500,
                fd_points: 50,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{status}  {:<22} {}", self.name, self.detail)
    }
}

/// Mini-batch shrink factor under test.
pub type DeltaFn = dyn Fn(usize, usize) -> f64 + Sync;

fn library_delta(n: usize, b: usize) -> f64 {
    delta(n, b).expect("valid batch size")
}

/// Runs every check with the library's shrink factor.
pub fn run_verify(scale: VerifyScale, seed: u64) -> Result<Vec<CheckResult>> {
    run_verify_with(scale, seed, &library_delta)
}

/// Runs every check, substituting `delta` for the shrink factor wherever
/// the library formula is compared against an oracle.
pub fn run_verify_with(scale: VerifyScale, seed: u64, delta: &DeltaFn) -> Result<Vec<CheckResult>> {
    let sizes = scale.sizes();
    Ok(vec![
        check_subset_variance(&sizes, seed, delta)?,
        check_unbiasedness(&sizes, seed)?,
        check_variance_bound(&sizes, seed)?,
        check_schedule(&sizes),
        check_coefficient(&sizes, delta),
        check_batch_minimality()?,
        check_r1(&sizes)?,
        check_fd(&sizes, seed)?,
    ])
}

fn gaussian_points<R: Rng>(rng: &mut R, n: usize, d: usize) -> Vec<Point> {
    (0..n)
        .map(|_| Point::from_vec((0..d).map(|_| StandardNormal.sample(rng)).collect()))
        .collect()
}

fn random_point<R: Rng>(rng: &mut R, d: usize) -> Point {
    Point::from_vec((0..d).map(|_| StandardNormal.sample(rng)).collect())
}

/// Small random objective of the given kind.
fn random_objective<R: Rng>(
    rng: &mut R,
    kind: ObjectiveKind,
    n: usize,
    d: usize,
    lambda: f64,
) -> Result<Objective> {
    let ds = random_instance(rng, n, d, kind == ObjectiveKind::LogisticBinary)?;
    let ds = if kind == ObjectiveKind::LogisticMultinomial {
        let mut examples = ds.examples().to_vec();
        for (i, ex) in examples.iter_mut().enumerate() {
            ex.label = (i % 3) as f64;
        }
        Dataset::new(examples, Some(d))?
    } else {
        ds
    };
    Objective::new(kind, Arc::new(ds), lambda)
}

const KINDS: [ObjectiveKind; 3] = [
    ObjectiveKind::LeastSquares,
    ObjectiveKind::LogisticBinary,
    ObjectiveKind::LogisticMultinomial,
];

fn check_subset_variance(sizes: &Sizes, seed: u64, delta: &DeltaFn) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..sizes.instances {
        let n = rng.random_range(2..=8);
        let d = rng.random_range(1..=4);
        let xs = gaussian_points(&mut rng, n, d);
        let spread = mean_spread(&xs);
        for b in 1..=n {
            let (lhs, rhs) = oracle_subset_variance(&xs, b)?;
            worst = worst
                .max((lhs - rhs).abs())
                .max((lhs - delta(n, b) * spread).abs());
        }
    }
    Ok(CheckResult {
        name: "subset_variance",
        passed: worst <= 1e-12,
        detail: format!(
            "{} instances, max |lhs - rhs| = {worst:.3e}",
            sizes.instances
        ),
    })
}

fn check_unbiasedness(sizes: &Sizes, seed: u64) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let mut worst = 0.0f64;
    for t in 0..sizes.instances {
        let n = rng.random_range(3..=8);
        let d = rng.random_range(1..=4);
        let obj = random_objective(&mut rng, KINDS[t % 3], n, d, 0.1)?;
        let x = random_point(&mut rng, obj.dim_params());
        let y0 = random_point(&mut rng, obj.dim_params());
        for b in 1..=n {
            worst = worst.max(oracle_unbiasedness(&obj, &x, &y0, b)?);
        }
    }
    Ok(CheckResult {
        name: "unbiasedness",
        passed: worst <= 1e-12,
        detail: format!("{} instances, max deviation = {worst:.3e}", sizes.instances),
    })
}

fn check_variance_bound(sizes: &Sizes, seed: u64) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(2));
    let mut violations = 0usize;
    let mut max_ratio = 0.0f64;
    for _ in 0..sizes.instances {
        let n = rng.random_range(2..=8);
        let d = rng.random_range(1..=4);
        let lambda = rng.random_range(1e-3..1e-1);
        let obj = random_objective(&mut rng, ObjectiveKind::LeastSquares, n, d, lambda)?;
        let x_star = least_squares_minimizer(&obj)?;
        let x = random_point(&mut rng, d);
        let y0 = random_point(&mut rng, d);
        for b in 1..=n {
            let (var, bound) = oracle_variance_bound(&obj, &x, &y0, b, &x_star)?;
            if var > bound {
                violations += 1;
            }
            if bound > 0.0 {
                max_ratio = max_ratio.max(var / bound);
            }
        }
    }
    Ok(CheckResult {
        name: "variance_bound",
        passed: violations == 0,
        detail: format!("{violations} violations, max variance/bound = {max_ratio:.3}"),
    })
}

/// Exact `num/den` rounded to the nearest double.
fn to_f64(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn check_schedule(sizes: &Sizes) -> CheckResult {
    let mut ok = true;
    let mut worst = 0.0f64;
    for (exact_l, l) in [
        (Rational::new(1, 10), 0.1),
        (Rational::from_integer(1), 1.0),
        (Rational::from_integer(10), 10.0),
    ] {
        ok &= oracle_telescoping(exact_l, sizes.k_max).is_none();
        let params = ScheduleParams::from_smoothness(l).expect("positive L");
        ok &= params.tau(0) == 1.0;
        for k in 0..=sizes.k_max {
            let a = to_f64(exact_alpha(exact_l, k));
            let t = to_f64(exact_tau(exact_l, k));
            worst = worst
                .max((params.alpha(k) - a).abs() / a)
                .max((params.tau(k) - t).abs() / t);
        }
    }
    ok &= worst <= 1e-15;
    CheckResult {
        name: "schedule_identities",
        passed: ok,
        detail: format!(
            "exact telescoping for k <= {}, max rel alpha/tau error = {worst:.3e}",
            sizes.k_max
        ),
    }
}

fn check_coefficient(sizes: &Sizes, delta: &DeltaFn) -> CheckResult {
    let one = Rational::from_integer(1);
    let zero = Rational::from_integer(0);
    let mut failures = 0usize;
    let params = ScheduleParams::from_smoothness(1.0).expect("positive L");
    for p in [0.1, 0.25, 0.5] {
        for n in [2usize, 10, 100, 1000, 4321] {
            let sched = BatchSchedule::new(n, p).expect("valid schedule");
            for k in 0..=sizes.k_max {
                let b = sched.batch_size(k);
                if exact_coefficient(one, n, b, k) < zero {
                    failures += 1;
                }
                let inv_tau = 1.0 / params.tau(k);
                let float = inv_tau - (1.0 + 4.0 * delta(n, b)) * params.alpha(k);
                if float < -8.0 * f64::EPSILON * inv_tau {
                    failures += 1;
                }
            }
        }
    }
    CheckResult {
        name: "coefficient",
        passed: failures == 0,
        detail: format!("{failures} negative coefficients for k <= {}", sizes.k_max),
    }
}

fn check_batch_minimality() -> Result<CheckResult> {
    let mut mismatches = 0usize;
    for n in [10usize, 100, 1000] {
        for p in [0.1, 0.5] {
            let sched = BatchSchedule::new(n, p)?;
            for k in 0..=200 {
                if sched.batch_size(k) != oracle_batch_size(n, p, k)? {
                    mismatches += 1;
                }
            }
        }
    }
    Ok(CheckResult {
        name: "batch_minimality",
        passed: mismatches == 0,
        detail: format!(
            "{mismatches} mismatches on n in {{10,100,1000}}, p in {{0.1,0.5}}, k <= 200"
        ),
    })
}

fn check_r1(sizes: &Sizes) -> Result<CheckResult> {
    let mut mismatches = 0usize;
    for n in 1..=sizes.r1_n_max {
        for p in [0.1, 0.5, 1.0, 2.0] {
            if restart_r1_horizon(&BatchSchedule::new(n, p)?) != oracle_r1(n, p)? {
                mismatches += 1;
            }
        }
    }
    let spot = restart_r1_horizon(&BatchSchedule::new(100, 0.5)?);
    Ok(CheckResult {
        name: "r1_horizon",
        passed: mismatches == 0 && spot == 9,
        detail: format!(
            "{mismatches} mismatches for n <= {}, m(100, 0.5) = {spot}",
            sizes.r1_n_max
        ),
    })
}

fn check_fd(sizes: &Sizes, seed: u64) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(3));
    let mut worst = 0.0f64;
    for kind in KINDS {
        let obj = random_objective(&mut rng, kind, 12, 5, 0.05)?;
        for _ in 0..sizes.fd_points {
            let x = random_point(&mut rng, obj.dim_params());
            let i = rng.random_range(0..obj.n());
            worst = worst.max(oracle_fd_gradient(&obj, i, &x)?);
        }
    }
    Ok(CheckResult {
        name: "fd_gradient",
        passed: worst <= 1e-6,
        detail: format!(
            "{} points per objective, max rel error = {worst:.3e}",
            sizes.fd_points
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_passes_and_repeats() {
        let a = run_verify(VerifyScale::Small, 7).unwrap();
        for r in &a {
            assert!(r.passed, "{r}");
        }
        let b = run_verify(VerifyScale::Small, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn tampered_delta_is_caught() {
        let wrong = |n: usize, b: usize| (n - b) as f64 / (b * n) as f64;
        let report = run_verify_with(VerifyScale::Small, 7, &wrong).unwrap();
        assert!(report.iter().any(|r| !r.passed));
    }
}
