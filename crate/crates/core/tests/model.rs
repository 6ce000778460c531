mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use amsvrg::geometry::Point;
use amsvrg::model::Objective;
use amsvrg::trace::EvalCounter;

fn objectives() -> Vec<(&'static str, Objective)> {
    vec![
        ("least_squares", common::ridge(30, 5, 0.05, 0.5, 1)),
        ("logistic", common::logistic(30, 5, 0.05, 2)),
        ("multinomial", common::multinomial(30, 5, 4, 0.05, 3)),
    ]
}

fn random_point(rng: &mut ChaCha8Rng, dim: usize) -> Point {
    Point::from_vec(
        (0..dim)
            .map(|_| 2.0 * Distribution::<f64>::sample(&StandardNormal, rng))
            .collect::<Vec<f64>>(),
    )
}

#[test]
fn component_gradients_are_lipschitz_with_the_reported_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for (name, obj) in objectives() {
        let l = obj.smoothness_bound();
        for _ in 0..200 {
            let i = rng.random_range(0..obj.n());
            let x = random_point(&mut rng, obj.dim_params());
            let y = random_point(&mut rng, obj.dim_params());
            let gx = obj.component_gradient(i, &x).unwrap();
            let gy = obj.component_gradient(i, &y).unwrap();
            assert!(
                gx.distance(&gy) <= l * x.distance(&y) * (1.0 + 1e-12),
                "{name}"
            );
        }
    }
}

#[test]
fn components_are_strongly_convex_with_lambda() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (name, obj) in objectives() {
        let mu = obj.lambda();
        for _ in 0..200 {
            let i = rng.random_range(0..obj.n());
            let x = random_point(&mut rng, obj.dim_params());
            let y = random_point(&mut rng, obj.dim_params());
            let fx = obj.component_value(i, &x).unwrap();
            let fy = obj.component_value(i, &y).unwrap();
            let g = obj.component_gradient(i, &x).unwrap();
            let lower = fx + g.dot(&y.sub(&x)) + 0.5 * mu * x.distance(&y).powi(2);
            assert!(
                fy >= lower - 1e-10 * (1.0 + fy.abs()),
                "{name}: {fy} < {lower}"
            );
        }
    }
}

#[test]
fn full_objective_is_the_component_mean() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for (name, obj) in objectives() {
        let x = random_point(&mut rng, obj.dim_params());
        let mean = (0..obj.n())
            .map(|i| obj.component_value(i, &x).unwrap())
            .sum::<f64>()
            / obj.n() as f64;
        assert!(
            (obj.full_value(&x) - mean).abs() <= 1e-12 * (1.0 + mean.abs()),
            "{name}"
        );
        let mut g = Point::zeros(obj.dim_params());
        for i in 0..obj.n() {
            g.axpy(
                1.0 / obj.n() as f64,
                &obj.component_gradient(i, &x).unwrap(),
            );
        }
        assert!(
            obj.gradient(&x).distance(&g) <= 1e-12 * (1.0 + g.norm()),
            "{name}"
        );
    }
}

#[test]
fn gradient_charges() {
    let obj = common::logistic(40, 3, 0.0, 4);
    let x = Point::zeros(3);
    let mut counter = EvalCounter::new();
    obj.full_gradient(&x, &mut counter);
    assert_eq!((counter.component_calls(), counter.paper_axis()), (40, 40));
    obj.batch_gradient(&[0, 5, 9], &x, &mut counter).unwrap();
    assert_eq!((counter.component_calls(), counter.paper_axis()), (43, 43));
    let anchor = obj.gradient(&x);
    obj.variance_reduced_gradient(&[1, 2], &x, &x, &anchor, &mut counter)
        .unwrap();
    assert_eq!((counter.component_calls(), counter.paper_axis()), (47, 45));
    obj.full_value(&x);
    obj.gradient(&x);
    assert_eq!((counter.component_calls(), counter.paper_axis()), (47, 45));
}

#[test]
fn out_of_range_indices_are_rejected() {
    let obj = common::ridge(5, 2, 0.0, 0.1, 5);
    let x = Point::zeros(2);
    assert!(obj.component_gradient(5, &x).is_err());
    assert!(obj
        .batch_gradient(&[0, 7], &x, &mut EvalCounter::new())
        .is_err());
    assert!(obj.component_value(0, &Point::zeros(3)).is_err());
}
