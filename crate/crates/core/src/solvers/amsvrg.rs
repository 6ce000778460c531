//! Accelerated mini-batch SVRG.
//!
//! A stage starts from an anchor `y0` with its exact gradient `v~`, then
//! runs accelerated iterations driven by the variance-reduced direction
//!
//! ```text
//! x_{k+1} = (1 - tau_k) y_k + tau_k z_k
//! v_{k+1} = grad f_I(x_{k+1}) - grad f_I(y0) + v~      (|I| = b_{k+1})
//! y_{k+1} = x_{k+1} - eta v_{k+1}                        (gradient step)
//! z_{k+1} = z_k - alpha_{k+1} v_{k+1}                    (mirror step)
//! ```
//!
//! with `alpha_{k+1} = (k + 2) / (4L)`, `1/tau_k = L alpha_{k+1} + 1/2` and
//! `L = 1/eta`. Stages are chained by [`run_multistage`] (`z0 = y0 = w_s`)
//! or [`run_modified`] (`z0 = w_0` every stage). Stage length is either
//! fixed or decided online by a restart heuristic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{convex_combine, mirror_step, sgd_step, Point};
use crate::model::Objective;
use crate::sampling::{BatchSchedule, SubsetSampler};
use crate::solvers::{Budget, RunResult, StopReason, STATIONARY_TOL};
use crate::trace::{EvalCounter, Recorder, TraceOptions};

/// Step size and the accelerated weight sequences it determines.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScheduleParams {
    eta: f64,
    l_used: f64,
}

impl ScheduleParams {
    pub fn from_eta(eta: f64) -> Result<Self> {
        if !(eta.is_finite() && eta > 0.0) {
            return Err(Error::invalid(format!("eta must be positive, got {eta}")));
        }
        Ok(ScheduleParams {
            eta,
            l_used: 1.0 / eta,
        })
    }

    /// `eta = 1/L`.
    pub fn from_smoothness(l: f64) -> Result<Self> {
        if !(l.is_finite() && l > 0.0) {
            return Err(Error::invalid(format!("L must be positive, got {l}")));
        }
        Ok(ScheduleParams {
            eta: 1.0 / l,
            l_used: l,
        })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn l_used(&self) -> f64 {
        self.l_used
    }

    /// `alpha_{k+1} = (k + 2) / (4L)`.
    pub fn alpha(&self, k: usize) -> f64 {
        (k + 2) as f64 / (4.0 * self.l_used)
    }

    /// `tau_k = 1 / (L alpha_{k+1} + 1/2)`, which simplifies to `4 / (k + 4)`
    /// and is evaluated in that form so `tau_0 = 1` exactly.
    pub fn tau(&self, k: usize) -> f64 {
        4.0 / (k + 4) as f64
    }
}

/// Which point a stage returns.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageOption {
    /// Option I: the last gradient-step iterate `y_{m+1}`.
    #[default]
    LastIterate,
    /// Option II: the mean of `x_1 .. x_{m+1}`. Not covered by the stage
    /// convergence analysis.
    AveragedIterate,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageLength {
    /// Run `k = 0..=m`.
    Iterations(usize),
    /// `m = ceil(4 sqrt(L V / (q gap)))` from user estimates of
    /// `V_{z0}(x_*)` and `f(y0) - f(x_*)`.
    Estimated { distance: f64, gap: f64 },
}

/// Stage termination rule.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RestartPolicy {
    Fixed(StageLength),
    /// Smallest `m` with `sum_{k<=m} b_{k+1} >= n`.
    R1,
    /// Restart as soon as `(v_{k+1}, y_{k+1} - y_k) > 0`, returning `y_k`.
    R2,
    /// R2 once more than `n` samples were drawn, with a hard cap at `10n`.
    R3,
}

impl RestartPolicy {
    pub fn tag(&self) -> &'static str {
        match self {
            RestartPolicy::Fixed(_) => "fixed",
            RestartPolicy::R1 => "r1",
            RestartPolicy::R2 => "r2",
            RestartPolicy::R3 => "r3",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub eta: f64,
    pub p: f64,
    /// Only used by `StageLength::Estimated`.
    pub q: f64,
    pub option: StageOption,
    pub restart: RestartPolicy,
    pub budget: Budget,
    pub seed: u64,
    pub trace: TraceOptions,
    pub stationary_tol: f64,
    /// Overrides the method tag written to traces.
    pub tag: Option<String>,
}

impl SolverConfig {
    pub fn new(eta: f64) -> Self {
        SolverConfig {
            eta,
            p: 0.5,
            q: 0.25,
            option: StageOption::LastIterate,
            restart: RestartPolicy::R1,
            budget: Budget::default(),
            seed: 0,
            trace: TraceOptions::default(),
            stationary_tol: STATIONARY_TOL,
            tag: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ScheduleParams::from_eta(self.eta)?;
        if !(self.p.is_finite() && self.p > 0.0) {
            return Err(Error::invalid(format!(
                "p must be positive, got {}",
                self.p
            )));
        }
        if !(self.q.is_finite() && self.q > 0.0) {
            return Err(Error::invalid(format!(
                "q must be positive, got {}",
                self.q
            )));
        }
        if self.budget.max_evals.is_none() && self.budget.max_stages == usize::MAX {
            return Err(Error::invalid(
                "run needs a stage limit or an evaluation budget",
            ));
        }
        Ok(())
    }

    pub fn method_tag(&self, modified: bool) -> String {
        if let Some(tag) = &self.tag {
            return tag.clone();
        }
        let base = if modified { "amsvrg-mod" } else { "amsvrg" };
        format!("{base}-{}", self.restart.tag())
    }
}

/// Stage termination rule after resolving the policy for a given problem.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StageControl {
    Fixed(usize),
    R2,
    R3,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageEnd {
    Completed,
    R2Restart,
    R3Restart,
    R3Cap,
    Budget,
    Target,
    Stationary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageStats {
    pub stage: usize,
    /// Inner iterations performed.
    pub iterations: usize,
    /// `sum_k b_{k+1}` over the stage.
    pub sum_b: u64,
    pub component_calls: u64,
    pub paper_axis: u64,
    pub end: StageEnd,
    /// Objective at the stage output.
    pub objective: f64,
}

impl StageStats {
    /// The stage was cut short by the evaluation budget.
    pub fn truncated(&self) -> bool {
        self.end == StageEnd::Budget
    }
}

#[derive(Clone, Debug)]
pub struct StageOutcome {
    pub point: Point,
    pub stats: StageStats,
    /// Set when the whole run must stop after this stage.
    pub halt: Option<StopReason>,
}

/// Mutable per-run state: one sampler, one counter, one recorder.
#[derive(Debug)]
pub struct RunState {
    pub sampler: SubsetSampler,
    pub counter: EvalCounter,
    pub recorder: Recorder,
}

/// `ceil(4 sqrt(L V / (q gap)))`.
pub fn stage_length(l: f64, distance: f64, gap: f64, q: f64) -> Result<usize> {
    for (name, v) in [("L", l), ("V", distance), ("gap", gap), ("q", q)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::invalid(format!("{name} must be positive, got {v}")));
        }
    }
    Ok((4.0 * (l * distance / (q * gap)).sqrt()).ceil() as usize)
}

/// Minimal `m` with `sum_{k=0}^{m} b_{k+1} >= n`.
pub fn restart_r1_horizon(schedule: &BatchSchedule) -> usize {
    let n = schedule.n() as u64;
    let mut total = 0u64;
    let mut k = 0;
    loop {
        total += schedule.batch_size(k) as u64;
        if total >= n {
            return k;
        }
        k += 1;
    }
}

/// `(v_{k+1}, y_{k+1} - y_k) > 0`.
pub fn restart_r2_trigger(v_next: &Point, y_next: &Point, y_prev: &Point) -> bool {
    let s: f64 = v_next
        .as_slice()
        .iter()
        .zip(y_next.as_slice().iter().zip(y_prev.as_slice()))
        .map(|(v, (a, b))| v * (a - b))
        .sum();
    s > 0.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum R3Decision {
    Continue,
    /// R2 fired after more than `n` samples: return `y_k`.
    Rollback,
    /// More than `10n` samples: return the current `y_{k+1}`.
    Cap,
}

impl R3Decision {
    pub fn is_restart(self) -> bool {
        self != R3Decision::Continue
    }
}

pub fn restart_r3_trigger(cumulative_b: u64, n: usize, r2_fired: bool) -> R3Decision {
    let n = n as u64;
    if r2_fired && cumulative_b > n {
        R3Decision::Rollback
    } else if cumulative_b > 10 * n {
        R3Decision::Cap
    } else {
        R3Decision::Continue
    }
}

/// Resolves a restart policy into a per-stage rule.
pub fn stage_control(cfg: &SolverConfig, schedule: &BatchSchedule) -> Result<StageControl> {
    Ok(match cfg.restart {
        RestartPolicy::R1 => StageControl::Fixed(restart_r1_horizon(schedule)),
        RestartPolicy::R2 => StageControl::R2,
        RestartPolicy::R3 => StageControl::R3,
        RestartPolicy::Fixed(StageLength::Iterations(m)) => StageControl::Fixed(m),
        RestartPolicy::Fixed(StageLength::Estimated { distance, gap }) => {
            let l = ScheduleParams::from_eta(cfg.eta)?.l_used();
            StageControl::Fixed(stage_length(l, distance, gap, cfg.q)?)
        }
    })
}

/// One stage from anchor `y0` and mirror start `z0`.
///
/// Charges `n` for the anchor gradient and `2 b_{k+1}` (paper axis
/// `b_{k+1}`) per inner iteration, and records one trace row per
/// iteration. A stage that ends on budget or target returns the point it
/// reached and sets `halt`.
pub fn run_stage(
    obj: &Objective,
    y0: &Point,
    z0: &Point,
    stage: usize,
    control: StageControl,
    cfg: &SolverConfig,
    state: &mut RunState,
) -> Result<StageOutcome> {
    let n = obj.n();
    let dim = obj.dim_params();
    y0.check_dim(dim)?;
    z0.check_dim(dim)?;
    let params = ScheduleParams::from_eta(cfg.eta)?;
    let schedule = BatchSchedule::new(n, cfg.p)?;
    let start = state.counter;

    let mut stats = StageStats {
        stage,
        iterations: 0,
        sum_b: 0,
        component_calls: 0,
        paper_axis: 0,
        end: StageEnd::Completed,
        objective: f64::NAN,
    };
    let close = |stats: &mut StageStats, counter: &EvalCounter, end: StageEnd, objective: f64| {
        stats.component_calls = counter.component_calls() - start.component_calls();
        stats.paper_axis = counter.paper_axis() - start.paper_axis();
        stats.end = end;
        stats.objective = objective;
    };

    let v_tilde = obj.full_gradient(y0, &mut state.counter);
    let early = if v_tilde.norm() <= cfg.stationary_tol {
        Some((StageEnd::Stationary, StopReason::Stationary))
    } else if cfg.budget.exhausted(&state.counter) {
        Some((StageEnd::Budget, StopReason::Budget))
    } else {
        None
    };
    if let Some((end, reason)) = early {
        let m = state.recorder.record(obj, y0, stage, 0, &state.counter)?;
        close(&mut stats, &state.counter, end, m.objective);
        let halt = if m.target_reached {
            StopReason::TargetGap
        } else {
            reason
        };
        return Ok(StageOutcome {
            point: y0.clone(),
            stats,
            halt: Some(halt),
        });
    }

    let mut y = y0.clone();
    let mut z = z0.clone();
    let mut x_sum = Point::zeros(dim);
    let mut k = 0usize;
    loop {
        let x = convex_combine(&y, &z, params.tau(k))?;
        let b = schedule.batch_size(k);
        let batch = state.sampler.sample_subset(b)?;
        let v = obj.variance_reduced_gradient(&batch, &x, y0, &v_tilde, &mut state.counter)?;
        stats.sum_b += b as u64;
        stats.iterations += 1;

        let y_next = sgd_step(&x, &v, params.eta())?;
        z = mirror_step(&z, &v, params.alpha(k))?;
        x_sum.axpy(1.0, &x);

        let r2 = k >= 1 && restart_r2_trigger(&v, &y_next, &y);
        let mut end = match control {
            StageControl::Fixed(m) => (k >= m).then_some(StageEnd::Completed),
            StageControl::R2 => r2.then_some(StageEnd::R2Restart),
            StageControl::R3 => match restart_r3_trigger(stats.sum_b, n, r2) {
                R3Decision::Continue => None,
                R3Decision::Rollback => Some(StageEnd::R3Restart),
                R3Decision::Cap => Some(StageEnd::R3Cap),
            },
        };
        if !matches!(end, Some(StageEnd::R2Restart | StageEnd::R3Restart)) {
            y = y_next;
        }
        if end.is_none() && cfg.budget.exhausted(&state.counter) {
            end = Some(StageEnd::Budget);
        }

        let output = match (end, cfg.option) {
            (Some(_), StageOption::AveragedIterate) => {
                let mut avg = x_sum.clone();
                avg.scale(1.0 / stats.iterations as f64);
                avg
            }
            _ => y.clone(),
        };
        let m = state
            .recorder
            .record(obj, &output, stage, k + 1, &state.counter)?;
        if m.target_reached {
            close(&mut stats, &state.counter, StageEnd::Target, m.objective);
            return Ok(StageOutcome {
                point: output,
                stats,
                halt: Some(StopReason::TargetGap),
            });
        }
        if let Some(end) = end {
            close(&mut stats, &state.counter, end, m.objective);
            let halt = (end == StageEnd::Budget).then_some(StopReason::Budget);
            return Ok(StageOutcome {
                point: output,
                stats,
                halt,
            });
        }
        k += 1;
    }
}

fn run(obj: &Objective, w0: &Point, cfg: &SolverConfig, modified: bool) -> Result<RunResult> {
    cfg.validate()?;
    w0.check_dim(obj.dim_params())?;
    if cfg.option == StageOption::AveragedIterate {
        log::warn!("option II (averaged iterate) is outside the stage convergence analysis");
    }
    let schedule = BatchSchedule::new(obj.n(), cfg.p)?;
    if !schedule.is_theory_admissible() {
        log::warn!(
            "p = {} exceeds 1/2; the stage guarantee assumes p <= 1/2",
            cfg.p
        );
    }
    let control = stage_control(cfg, &schedule)?;
    let method = cfg.method_tag(modified);
    let recorder = Recorder::new(method.clone(), cfg.trace)
        .with_target(cfg.budget.f_star, cfg.budget.target_gap);
    let mut state = RunState {
        sampler: SubsetSampler::new(obj.n(), cfg.seed),
        counter: EvalCounter::new(),
        recorder,
    };

    let first = state.recorder.record(obj, w0, 0, 0, &state.counter)?;
    let mut w = w0.clone();
    let mut stages = Vec::new();
    let stop_reason = 'outer: {
        if first.target_reached {
            break 'outer StopReason::TargetGap;
        }
        for s in 0..cfg.budget.max_stages {
            if cfg.budget.exhausted(&state.counter) {
                break 'outer StopReason::Budget;
            }
            let z0 = if modified { w0 } else { &w };
            let out = run_stage(obj, &w, z0, s, control, cfg, &mut state)?;
            log::debug!(
                "{method} stage {s}: {} iterations, end {:?}, paper axis {}",
                out.stats.iterations,
                out.stats.end,
                state.counter.paper_axis()
            );
            stages.push(out.stats);
            w = out.point;
            if let Some(reason) = out.halt {
                break 'outer reason;
            }
        }
        StopReason::MaxStages
    };

    let wall_seconds = state.recorder.elapsed();
    Ok(RunResult {
        method,
        final_objective: obj.full_value(&w),
        x: w,
        trace: state.recorder.finish(),
        stop_reason,
        counter: state.counter,
        stages,
        f_star: cfg.budget.f_star,
        wall_seconds,
    })
}

/// Multi-stage AMSVRG: each stage restarts with `y0 = z0 = w_s`.
pub fn run_multistage(obj: &Objective, w0: &Point, cfg: &SolverConfig) -> Result<RunResult> {
    run(obj, w0, cfg, false)
}

/// Modified AMSVRG: `y0 = w_s` but the mirror sequence always restarts
/// from the initial point, `z0 = w_0`.
pub fn run_modified(obj: &Objective, w0: &Point, cfg: &SolverConfig) -> Result<RunResult> {
    run(obj, w0, cfg, true)
}
