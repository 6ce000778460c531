//! Comparison methods sharing the objective, counter and trace surfaces:
//! mini-batch SVRG, SAGA, deterministic accelerated gradient descent and
//! plain SGD.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{convex_combine, mirror_step, sgd_step, Point};
use crate::model::Objective;
use crate::sampling::SubsetSampler;
use crate::solvers::amsvrg::ScheduleParams;
use crate::solvers::{Budget, RunResult, StopReason};
use crate::trace::{EvalCounter, Measurement, Recorder, TraceOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineMethod {
    Svrg,
    Saga,
    Agd,
    Sgd,
}

impl BaselineMethod {
    pub fn name(self) -> &'static str {
        match self {
            BaselineMethod::Svrg => "svrg",
            BaselineMethod::Saga => "saga",
            BaselineMethod::Agd => "agd",
            BaselineMethod::Sgd => "sgd",
        }
    }

    /// Default step size given the smoothness bound `L`.
    pub fn default_step(self, l: f64) -> f64 {
        match self {
            BaselineMethod::Svrg => 1.0 / (10.0 * l),
            BaselineMethod::Saga => 1.0 / (3.0 * l),
            BaselineMethod::Agd | BaselineMethod::Sgd => 1.0 / l,
        }
    }
}

impl fmt::Display for BaselineMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BaselineMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "svrg" => Ok(BaselineMethod::Svrg),
            "saga" => Ok(BaselineMethod::Saga),
            "agd" => Ok(BaselineMethod::Agd),
            "sgd" => Ok(BaselineMethod::Sgd),
            other => Err(Error::invalid(format!("unknown baseline `{other}`"))),
        }
    }
}

/// Weight sequences used by [`agd_run`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgdSchedule {
    /// `alpha_{k+1} = (k+2) eta / 4`, `tau_k = 4 / (k+4)`.
    #[default]
    Accelerated,
    /// `tau = 1`, `alpha = eta`: plain gradient descent.
    GradientDescent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub method: BaselineMethod,
    pub step_size: f64,
    /// Mini-batch size for SVRG and SGD.
    pub batch: usize,
    /// SVRG inner loop length; `None` means `2n`.
    pub epoch_length: Option<usize>,
    pub seed: u64,
    pub budget: Budget,
    pub trace: TraceOptions,
    pub agd_schedule: AgdSchedule,
    pub tag: Option<String>,
}

impl BaselineConfig {
    pub fn new(method: BaselineMethod, step_size: f64) -> Self {
        BaselineConfig {
            method,
            step_size,
            batch: 1,
            epoch_length: None,
            seed: 0,
            budget: Budget::default(),
            trace: TraceOptions::default(),
            agd_schedule: AgdSchedule::Accelerated,
            tag: None,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.step_size.is_finite() && self.step_size > 0.0) {
            return Err(Error::invalid(format!(
                "step size must be positive, got {}",
                self.step_size
            )));
        }
        if self.batch == 0 || self.batch > n {
            return Err(Error::invalid(format!(
                "batch {} out of range for n = {n}",
                self.batch
            )));
        }
        if self.epoch_length == Some(0) {
            return Err(Error::invalid("epoch length must be positive"));
        }
        Ok(())
    }

    pub fn method_tag(&self) -> String {
        self.tag
            .clone()
            .unwrap_or_else(|| self.method.name().to_string())
    }
}

/// Runs the configured baseline.
pub fn run_baseline(obj: &Objective, x0: &Point, cfg: &BaselineConfig) -> Result<RunResult> {
    match cfg.method {
        BaselineMethod::Svrg => svrg_run(obj, x0, cfg),
        BaselineMethod::Saga => saga_run(obj, x0, cfg),
        BaselineMethod::Agd => agd_run(obj, x0, cfg),
        BaselineMethod::Sgd => sgd_run(obj, x0, cfg),
    }
}

struct Run<'a> {
    obj: &'a Objective,
    budget: Budget,
    counter: EvalCounter,
    recorder: Recorder,
    method: String,
}

impl<'a> Run<'a> {
    fn start(obj: &'a Objective, x0: &Point, cfg: &BaselineConfig) -> Result<Self> {
        cfg.validate(obj.n())?;
        x0.check_dim(obj.dim_params())?;
        let method = cfg.method_tag();
        let recorder = Recorder::new(method.clone(), cfg.trace)
            .with_target(cfg.budget.f_star, cfg.budget.target_gap);
        Ok(Run {
            obj,
            budget: cfg.budget,
            counter: EvalCounter::new(),
            recorder,
            method,
        })
    }

    fn record(&mut self, x: &Point, stage: usize, iter: usize) -> Result<Measurement> {
        self.recorder
            .record(self.obj, x, stage, iter, &self.counter)
    }

    fn exhausted(&self) -> bool {
        self.budget.exhausted(&self.counter)
    }

    fn finish(self, x: Point, stop_reason: StopReason) -> RunResult {
        let wall_seconds = self.recorder.elapsed();
        RunResult {
            method: self.method,
            final_objective: self.obj.full_value(&x),
            x,
            trace: self.recorder.finish(),
            stop_reason,
            counter: self.counter,
            stages: Vec::new(),
            f_star: self.budget.f_star,
            wall_seconds,
        }
    }
}

/// Mini-batch SVRG. Each stage takes the full gradient at the anchor, then
/// `epoch_length` steps `x <- x - eta v`; the last iterate becomes the next
/// anchor. Rows are written every `n` paper-axis evaluations and at stage
/// ends.
pub fn svrg_run(obj: &Objective, x0: &Point, cfg: &BaselineConfig) -> Result<RunResult> {
    let mut run = Run::start(obj, x0, cfg)?;
    let n = obj.n();
    let m = cfg.epoch_length.unwrap_or(2 * n);
    let mut sampler = SubsetSampler::new(n, cfg.seed);
    let mut x = x0.clone();
    if run.record(&x, 0, 0)?.target_reached {
        return Ok(run.finish(x, StopReason::TargetGap));
    }
    let mut next_row = n as u64;
    for s in 0..cfg.budget.max_stages {
        if run.exhausted() {
            return Ok(run.finish(x, StopReason::Budget));
        }
        let anchor = x.clone();
        let v_tilde = obj.full_gradient(&anchor, &mut run.counter);
        for t in 0..m {
            let v = if cfg.batch == n {
                // the anchor terms cancel exactly when every component is drawn
                run.counter.charge(2 * n as u64, n as u64)?;
                obj.gradient(&x)
            } else {
                let batch = sampler.sample_subset(cfg.batch)?;
                obj.variance_reduced_gradient(&batch, &x, &anchor, &v_tilde, &mut run.counter)?
            };
            x = sgd_step(&x, &v, cfg.step_size)?;
            let last = t + 1 == m;
            let out = run.exhausted();
            if last || out || run.counter.paper_axis() >= next_row {
                while next_row <= run.counter.paper_axis() {
                    next_row += n as u64;
                }
                if run.record(&x, s, t + 1)?.target_reached {
                    return Ok(run.finish(x, StopReason::TargetGap));
                }
            }
            if out {
                return Ok(run.finish(x, StopReason::Budget));
            }
        }
    }
    Ok(run.finish(x, StopReason::MaxStages))
}

/// Table of stored component gradients with their running mean.
#[derive(Clone, Debug)]
pub struct SagaTable {
    dim: usize,
    table: Vec<f64>,
    mean: Point,
}

impl SagaTable {
    /// Fills the table at `x`, charging `n` evaluations.
    pub fn init(obj: &Objective, x: &Point, counter: &mut EvalCounter) -> Result<Self> {
        let n = obj.n();
        let dim = obj.dim_params();
        let mut table = Vec::with_capacity(n * dim);
        for i in 0..n {
            table.extend_from_slice(obj.component_gradient(i, x)?.as_slice());
        }
        counter.charge(n as u64, n as u64)?;
        let mut t = SagaTable {
            dim,
            table,
            mean: Point::zeros(dim),
        };
        t.mean = t.direct_mean();
        Ok(t)
    }

    pub fn mean(&self) -> &Point {
        &self.mean
    }

    pub fn entry(&self, j: usize) -> &[f64] {
        &self.table[j * self.dim..(j + 1) * self.dim]
    }

    /// Replaces entry `j` with `g`, updates the running mean and returns
    /// the SAGA direction `g - g_j + mean` computed with the old values.
    pub fn replace(&mut self, j: usize, g: &Point) -> Point {
        let n = (self.table.len() / self.dim) as f64;
        let old = &mut self.table[j * self.dim..(j + 1) * self.dim];
        let mut v = self.mean.clone();
        for ((vk, mk), (ok, gk)) in v
            .as_mut_slice()
            .iter_mut()
            .zip(self.mean.as_mut_slice())
            .zip(old.iter_mut().zip(g.as_slice()))
        {
            let diff = gk - *ok;
            *vk += diff;
            *mk += diff / n;
            *ok = *gk;
        }
        v
    }

    /// Mean of the table recomputed from scratch.
    pub fn direct_mean(&self) -> Point {
        let n = self.table.len() / self.dim;
        let mut m = Point::zeros(self.dim);
        for row in self.table.chunks_exact(self.dim) {
            for (a, b) in m.as_mut_slice().iter_mut().zip(row) {
                *a += b;
            }
        }
        m.scale(1.0 / n as f64);
        m
    }

    /// Largest coordinate gap between the running and direct means.
    pub fn mean_drift(&self) -> f64 {
        self.direct_mean()
            .as_slice()
            .iter()
            .zip(self.mean.as_slice())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// SAGA with uniform single-component sampling. An epoch is `n` steps;
/// one row is written per epoch.
pub fn saga_run(obj: &Objective, x0: &Point, cfg: &BaselineConfig) -> Result<RunResult> {
    let mut run = Run::start(obj, x0, cfg)?;
    let n = obj.n();
    let mut sampler = SubsetSampler::new(n, cfg.seed);
    let mut x = x0.clone();
    if run.record(&x, 0, 0)?.target_reached {
        return Ok(run.finish(x, StopReason::TargetGap));
    }
    if cfg.budget.max_stages == 0 {
        return Ok(run.finish(x, StopReason::MaxStages));
    }
    if run.exhausted() {
        return Ok(run.finish(x, StopReason::Budget));
    }
    let mut table = SagaTable::init(obj, &x, &mut run.counter)?;
    for epoch in 0..cfg.budget.max_stages {
        for t in 0..n {
            let j = sampler.uniform_index();
            let g = obj.component_gradient(j, &x)?;
            run.counter.charge(1, 1)?;
            let v = table.replace(j, &g);
            x = sgd_step(&x, &v, cfg.step_size)?;
            let out = run.exhausted();
            if (t + 1 == n || out) && run.record(&x, epoch, t + 1)?.target_reached {
                return Ok(run.finish(x, StopReason::TargetGap));
            }
            if out {
                return Ok(run.finish(x, StopReason::Budget));
            }
        }
        log::trace!("saga epoch {epoch}: mean drift {:e}", table.mean_drift());
    }
    Ok(run.finish(x, StopReason::MaxStages))
}

/// Deterministic three-step accelerated scheme with exact gradients:
/// `x = (1-tau) y + tau z`, `y = x - eta grad f(x)`, `z = z - alpha grad f(x)`.
/// Charges `n` per iteration and records every iteration.
pub fn agd_run(obj: &Objective, x0: &Point, cfg: &BaselineConfig) -> Result<RunResult> {
    let mut run = Run::start(obj, x0, cfg)?;
    let params = ScheduleParams::from_eta(cfg.step_size)?;
    let mut y = x0.clone();
    let mut z = x0.clone();
    if run.record(&y, 0, 0)?.target_reached {
        return Ok(run.finish(y, StopReason::TargetGap));
    }
    for k in 0..cfg.budget.max_stages {
        if run.exhausted() {
            return Ok(run.finish(y, StopReason::Budget));
        }
        let (tau, alpha) = match cfg.agd_schedule {
            AgdSchedule::Accelerated => (params.tau(k), params.alpha(k)),
            AgdSchedule::GradientDescent => (1.0, params.eta()),
        };
        let x = convex_combine(&y, &z, tau)?;
        let g = obj.full_gradient(&x, &mut run.counter);
        y = sgd_step(&x, &g, params.eta())?;
        z = mirror_step(&z, &g, alpha)?;
        let m = run.record(&y, 0, k + 1)?;
        if m.target_reached {
            return Ok(run.finish(y, StopReason::TargetGap));
        }
    }
    Ok(run.finish(y, StopReason::MaxStages))
}

/// Mini-batch SGD with `eta_t = eta_0 / (1 + t/n)`, `t` the number of
/// component samples drawn so far. One row per `n` evaluations.
pub fn sgd_run(obj: &Objective, x0: &Point, cfg: &BaselineConfig) -> Result<RunResult> {
    let mut run = Run::start(obj, x0, cfg)?;
    let n = obj.n();
    let mut sampler = SubsetSampler::new(n, cfg.seed);
    let mut x = x0.clone();
    if run.record(&x, 0, 0)?.target_reached {
        return Ok(run.finish(x, StopReason::TargetGap));
    }
    let steps_per_epoch = n.div_ceil(cfg.batch);
    let mut seen = 0u64;
    for epoch in 0..cfg.budget.max_stages {
        for t in 0..steps_per_epoch {
            if run.exhausted() {
                return Ok(run.finish(x, StopReason::Budget));
            }
            let batch = sampler.sample_subset(cfg.batch)?;
            let g = obj.batch_gradient(&batch, &x, &mut run.counter)?;
            let eta = cfg.step_size / (1.0 + seen as f64 / n as f64);
            seen += cfg.batch as u64;
            x = sgd_step(&x, &g, eta)?;
            if (t + 1 == steps_per_epoch || run.exhausted())
                && run.record(&x, epoch, t + 1)?.target_reached
            {
                return Ok(run.finish(x, StopReason::TargetGap));
            }
        }
    }
    let reason = if run.exhausted() {
        StopReason::Budget
    } else {
        StopReason::MaxStages
    };
    Ok(run.finish(x, reason))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Dataset, SparseExample};
    use crate::model::ObjectiveKind;
    use crate::testutil::random_dataset;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn quiet() -> TraceOptions {
        TraceOptions {
            grad_norm: false,
            wall_clock: false,
        }
    }

    fn ridge(seed: u64, n: usize, d: usize, lambda: f64) -> Objective {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ds = random_dataset(&mut rng, n, d, false);
        Objective::new(ObjectiveKind::LeastSquares, Arc::new(ds), lambda).unwrap()
    }

    fn half_square() -> Objective {
        let ds = Dataset::new(vec![SparseExample::new(vec![(0, 1.0)], 0.0)], None).unwrap();
        Objective::new(ObjectiveKind::LeastSquares, Arc::new(ds), 0.0).unwrap()
    }

    fn direct_gd(obj: &Objective, x0: &Point, eta: f64, iters: usize) -> Vec<Point> {
        let mut x = x0.clone();
        let mut out = vec![x.clone()];
        for _ in 0..iters {
            let g = obj.gradient(&x);
            x = sgd_step(&x, &g, eta).unwrap();
            out.push(x.clone());
        }
        out
    }

    #[test]
    fn method_names_round_trip() {
        for m in [
            BaselineMethod::Svrg,
            BaselineMethod::Saga,
            BaselineMethod::Agd,
            BaselineMethod::Sgd,
        ] {
            assert_eq!(m.name().parse::<BaselineMethod>().unwrap(), m);
        }
        assert!("adam".parse::<BaselineMethod>().is_err());
    }

    #[test]
    fn svrg_full_batch_is_gradient_descent() {
        let obj = ridge(1, 30, 4, 0.1);
        let eta = 1.0 / obj.smoothness_bound();
        let mut cfg = BaselineConfig::new(BaselineMethod::Svrg, eta);
        cfg.batch = 30;
        cfg.epoch_length = Some(1);
        cfg.budget.max_stages = 12;
        cfg.trace = quiet();
        let x0 = Point::from_vec(vec![1.0, -2.0, 0.5, 3.0]);
        let res = svrg_run(&obj, &x0, &cfg).unwrap();
        let gd = direct_gd(&obj, &x0, eta, 12);
        assert_eq!(res.x, gd[12]);
        for (r, p) in res.trace.records().iter().zip(&gd) {
            assert_eq!(r.objective, obj.full_value(p));
        }
    }

    #[test]
    fn agd_unit_step_is_gradient_descent() {
        let obj = ridge(2, 25, 3, 0.05);
        let eta = 1.0 / obj.smoothness_bound();
        let mut cfg = BaselineConfig::new(BaselineMethod::Agd, eta);
        cfg.agd_schedule = AgdSchedule::GradientDescent;
        cfg.budget.max_stages = 15;
        cfg.trace = quiet();
        let x0 = Point::from_vec(vec![2.0, 1.0, -1.0]);
        let res = agd_run(&obj, &x0, &cfg).unwrap();
        let gd = direct_gd(&obj, &x0, eta, 15);
        assert_eq!(res.x, gd[15]);
        assert_eq!(res.counter.component_calls(), 15 * 25);
    }

    #[test]
    fn agd_quadratic_decay() {
        let obj = half_square();
        let mut cfg = BaselineConfig::new(BaselineMethod::Agd, 1.0);
        cfg.budget.max_stages = 50;
        cfg.trace = quiet();
        let res = agd_run(&obj, &Point::from_vec(vec![1.0]), &cfg).unwrap();
        let rows = res.trace.records();
        assert!(rows.last().unwrap().objective <= 1e-6);
        for w in rows.windows(2) {
            assert!(w[1].objective <= w[0].objective);
        }
        let c = rows
            .iter()
            .map(|r| r.objective * (r.iter.max(1) as f64).powi(2))
            .fold(0.0, f64::max);
        assert!(c < 10.0, "{c}");
    }

    #[test]
    fn saga_single_component_is_gradient_descent() {
        let ds = Dataset::new(
            vec![SparseExample::new(vec![(0, 2.0), (1, -1.0)], 1.0)],
            None,
        )
        .unwrap();
        let obj = Objective::new(ObjectiveKind::LeastSquares, Arc::new(ds), 0.1).unwrap();
        let eta = 1.0 / obj.smoothness_bound();
        let mut cfg = BaselineConfig::new(BaselineMethod::Saga, eta);
        cfg.budget.max_stages = 20;
        cfg.trace = quiet();
        let x0 = Point::from_vec(vec![1.0, 1.0]);
        let res = saga_run(&obj, &x0, &cfg).unwrap();
        let gd = direct_gd(&obj, &x0, eta, 20);
        assert!(res.x.distance(&gd[20]) <= 1e-14);
    }

    #[test]
    fn saga_mean_stays_consistent() {
        let obj = ridge(3, 40, 5, 0.01);
        let mut counter = EvalCounter::new();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut x = crate::testutil::random_point(&mut rng, 5, 1.0);
        let mut table = SagaTable::init(&obj, &x, &mut counter).unwrap();
        let mut sampler = SubsetSampler::new(40, 5);
        for step in 1..=400 {
            let j = sampler.uniform_index();
            let g = obj.component_gradient(j, &x).unwrap();
            let v = table.replace(j, &g);
            x = sgd_step(&x, &v, 0.05).unwrap();
            if step % 40 == 0 {
                assert!(table.mean_drift() <= 1e-10);
            }
        }
    }

    #[test]
    fn sgd_zero_gradient_never_moves() {
        let ds = Dataset::new(
            vec![
                SparseExample::new(vec![(0, 1.0)], 0.0),
                SparseExample::new(vec![(1, 1.0)], 0.0),
            ],
            None,
        )
        .unwrap();
        let obj = Objective::new(ObjectiveKind::LeastSquares, Arc::new(ds), 0.0).unwrap();
        let mut cfg = BaselineConfig::new(BaselineMethod::Sgd, 0.5);
        cfg.budget.max_stages = 10;
        let res = sgd_run(&obj, &Point::zeros(2), &cfg).unwrap();
        assert_eq!(res.x, Point::zeros(2));
    }

    #[test]
    fn baselines_are_deterministic() {
        let obj = ridge(5, 50, 4, 0.01);
        for method in [
            BaselineMethod::Svrg,
            BaselineMethod::Saga,
            BaselineMethod::Sgd,
        ] {
            let mut cfg = BaselineConfig::new(method, method.default_step(obj.smoothness_bound()));
            cfg.budget.max_stages = 3;
            cfg.seed = 11;
            cfg.trace = quiet();
            let a = run_baseline(&obj, &Point::zeros(4), &cfg).unwrap();
            let b = run_baseline(&obj, &Point::zeros(4), &cfg).unwrap();
            assert_eq!(
                a.trace.to_csv_string().unwrap(),
                b.trace.to_csv_string().unwrap()
            );
        }
    }

    #[test]
    fn budgets_stop_within_one_step() {
        let obj = ridge(6, 60, 4, 0.01);
        for method in [
            BaselineMethod::Svrg,
            BaselineMethod::Saga,
            BaselineMethod::Agd,
            BaselineMethod::Sgd,
        ] {
            let mut cfg = BaselineConfig::new(method, method.default_step(obj.smoothness_bound()));
            cfg.budget.max_evals = Some(500);
            cfg.budget.max_stages = usize::MAX;
            cfg.trace = quiet();
            let res = run_baseline(&obj, &Point::zeros(4), &cfg).unwrap();
            assert_eq!(res.stop_reason, StopReason::Budget, "{method}");
            let axis = res.counter.paper_axis();
            assert!((500..500 + 60).contains(&axis), "{method}: {axis}");
        }
    }

    #[test]
    fn config_validation() {
        let cfg = BaselineConfig::new(BaselineMethod::Svrg, 0.0);
        assert!(cfg.validate(10).is_err());
        let mut cfg = BaselineConfig::new(BaselineMethod::Svrg, 0.1);
        cfg.batch = 11;
        assert!(cfg.validate(10).is_err());
        cfg.batch = 10;
        cfg.epoch_length = Some(0);
        assert!(cfg.validate(10).is_err());
    }
}
