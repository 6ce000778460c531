//! Accelerated mini-batch SVRG (AMSVRG) for finite-sum convex problems
//! `f(x) = (1/n) sum_i f_i(x)`, together with SVRG, SAGA, accelerated
//! gradient descent and SGD baselines, component-gradient accounting,
//! convergence traces and brute-force oracles.
//!
//! ```no_run
//! use std::sync::Arc;
//! use amsvrg::dataset::load_libsvm;
//! use amsvrg::geometry::Point;
//! use amsvrg::model::{Objective, ObjectiveKind};
//! use amsvrg::solvers::amsvrg::{run_multistage, SolverConfig};
//!
//! let data = Arc::new(load_libsvm("train.svm", None)?);
//! let obj = Objective::new(ObjectiveKind::LeastSquares, data, 1e-3)?;
//! let cfg = SolverConfig::new(1.0 / obj.smoothness_bound());
//! let res = run_multistage(&obj, &Point::zeros(obj.dim_params()), &cfg)?;
//! res.trace.write_csv("trace.csv")?;
//! # Ok::<(), amsvrg::Error>(())
//! ```

pub mod cli;
pub mod dataset;
pub mod error;
pub mod geometry;
pub mod model;
pub mod oracles;
pub mod sampling;
pub mod solvers;
pub mod synthetic;
pub mod trace;
pub mod verify;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
