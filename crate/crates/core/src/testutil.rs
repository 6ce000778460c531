use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dataset::Dataset;
use crate::geometry::Point;
use crate::synthetic::random_instance;

pub fn random_dataset<R: Rng>(rng: &mut R, n: usize, d: usize, binary: bool) -> Dataset {
    random_instance(rng, n, d, binary).expect("valid sizes")
}

pub fn random_point<R: Rng>(rng: &mut R, dim: usize, scale: f64) -> Point {
    Point::from_vec(
        (0..dim)
            .map(|_| scale * Distribution::<f64>::sample(&StandardNormal, rng))
            .collect::<Vec<f64>>(),
    )
}

/// Same features, labels replaced by class ids `i mod classes`.
pub fn relabel_classes(ds: &Dataset, classes: usize) -> Dataset {
    let mut examples = ds.examples().to_vec();
    for (i, ex) in examples.iter_mut().enumerate() {
        ex.label = (i % classes) as f64;
    }
    Dataset::new(examples, Some(ds.dim())).expect("relabelled dataset is valid")
}
