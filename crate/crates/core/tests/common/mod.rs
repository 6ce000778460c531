#![allow(dead_code)]

use std::sync::Arc;

use amsvrg::model::{Objective, ObjectiveKind};
use amsvrg::synthetic::{generate, SyntheticKind, SyntheticSpec};
use amsvrg::trace::TraceOptions;

pub fn quiet() -> TraceOptions {
    TraceOptions {
        grad_norm: false,
        wall_clock: false,
    }
}

/// Synthetic ridge regression with unit-scale rows.
pub fn ridge(n: usize, d: usize, lambda: f64, noise: f64, seed: u64) -> Objective {
    let syn = generate(&SyntheticSpec::new(
        n,
        d,
        SyntheticKind::LeastSquares,
        noise,
        seed,
    ))
    .unwrap();
    Objective::new(ObjectiveKind::LeastSquares, Arc::new(syn.dataset), lambda).unwrap()
}

/// Synthetic binary logistic regression with noisy labels.
pub fn logistic(n: usize, d: usize, lambda: f64, seed: u64) -> Objective {
    let syn = generate(&SyntheticSpec::new(
        n,
        d,
        SyntheticKind::Logistic,
        1.0,
        seed,
    ))
    .unwrap();
    Objective::new(ObjectiveKind::LogisticBinary, Arc::new(syn.dataset), lambda).unwrap()
}

/// Synthetic multinomial logistic regression.
pub fn multinomial(n: usize, d: usize, classes: usize, lambda: f64, seed: u64) -> Objective {
    let syn = generate(&SyntheticSpec::new(
        n,
        d,
        SyntheticKind::Multinomial { classes },
        1.0,
        seed,
    ))
    .unwrap();
    Objective::new(
        ObjectiveKind::LogisticMultinomial,
        Arc::new(syn.dataset),
        lambda,
    )
    .unwrap()
}
