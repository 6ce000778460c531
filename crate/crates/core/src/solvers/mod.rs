//! Solvers and the result types they share.

pub mod amsvrg;
pub mod baselines;

use serde::{Deserialize, Serialize};

use crate::geometry::Point;
use crate::trace::{BudgetAxis, EvalCounter, Trace};

/// Why a run stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// Stage / epoch / iteration limit.
    MaxStages,
    /// Evaluation budget exhausted.
    Budget,
    /// `f(x) - f_star <= target_gap`.
    TargetGap,
    /// Full gradient norm fell below the stationarity tolerance.
    Stationary,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::MaxStages => "max_stages",
            StopReason::Budget => "budget",
            StopReason::TargetGap => "target_gap",
            StopReason::Stationary => "stationary",
        }
    }
}

/// Limits shared by every solver.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    /// Outer iterations: stages for AMSVRG/SVRG, epochs for SAGA/SGD,
    /// iterations for AGD.
    pub max_stages: usize,
    pub max_evals: Option<u64>,
    pub axis: BudgetAxis,
    pub target_gap: Option<f64>,
    /// Optimal value used for the target-gap test and gap reporting.
    pub f_star: Option<f64>,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_stages: 1000,
            max_evals: None,
            axis: BudgetAxis::PaperAxis,
            target_gap: None,
            f_star: None,
        }
    }
}

impl Budget {
    pub fn exhausted(&self, counter: &EvalCounter) -> bool {
        self.max_evals.is_some_and(|m| counter.get(self.axis) >= m)
    }
}

/// Full gradient norm treated as an exact stationary point.
pub const STATIONARY_TOL: f64 = 1e-12;

/// Output of a solver run.
#[derive(Clone, Debug)]
pub struct RunResult {
    pub method: String,
    pub x: Point,
    pub trace: Trace,
    pub stop_reason: StopReason,
    pub counter: EvalCounter,
    pub stages: Vec<amsvrg::StageStats>,
    pub final_objective: f64,
    pub f_star: Option<f64>,
    pub wall_seconds: f64,
}

impl RunResult {
    pub fn final_gap(&self) -> Option<f64> {
        self.f_star.map(|f| self.final_objective - f)
    }

    /// First paper-axis count at which the trace reaches `f_star + gap`.
    pub fn paper_axis_to_gap(&self, f_star: f64, gap: f64) -> Option<u64> {
        self.trace
            .records()
            .iter()
            .find(|r| r.objective - f_star <= gap)
            .map(|r| r.paper_axis)
    }
}
