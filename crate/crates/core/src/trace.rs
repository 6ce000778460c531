//! Component-gradient accounting and convergence traces.
//!
//! Two counts are kept side by side. `component_calls` is every single
//! component gradient actually evaluated. `paper_axis` charges `n` per full
//! gradient and `b` per mini-batch step, even where a step evaluates the
//! batch at two points; it is the axis complexity bounds are stated on.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::model::Objective;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalCounter {
    component_calls: u64,
    paper_axis: u64,
}

impl EvalCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn component_calls(&self) -> u64 {
        self.component_calls
    }

    pub fn paper_axis(&self) -> u64 {
        self.paper_axis
    }

    /// Adds `calls` real evaluations and `axis_calls` to the paper axis.
    pub fn charge(&mut self, calls: u64, axis_calls: u64) -> Result<()> {
        if axis_calls > calls {
            return Err(Error::invalid(format!(
                "paper-axis charge {axis_calls} exceeds component calls {calls}"
            )));
        }
        self.component_calls += calls;
        self.paper_axis += axis_calls;
        Ok(())
    }

    pub fn get(&self, axis: BudgetAxis) -> u64 {
        match axis {
            BudgetAxis::ComponentCalls => self.component_calls,
            BudgetAxis::PaperAxis => self.paper_axis,
        }
    }
}

/// Which count a budget is measured on.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetAxis {
    ComponentCalls,
    #[default]
    PaperAxis,
}

/// One CSV row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub method: String,
    pub stage: usize,
    pub iter: usize,
    pub component_calls: u64,
    pub paper_axis: u64,
    pub objective: f64,
    pub grad_norm: Option<f64>,
    pub wall_seconds: f64,
}

pub const CSV_HEADER: &str =
    "method,stage,iter,component_calls,paper_axis,objective,grad_norm,wall_seconds";

/// Ordered list of trace records.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trace {
    records: Vec<TraceRecord>,
}

impl Trace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<TraceRecord> {
        self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    /// Appends a record. Within one method tag `component_calls` must not
    /// decrease and the objective must be finite.
    pub fn emit(&mut self, record: TraceRecord) -> Result<()> {
        if !record.objective.is_finite() {
            return Err(Error::NonFinite {
                value: record.objective,
                stage: record.stage,
                iter: record.iter,
            });
        }
        if let Some(prev) = self
            .records
            .iter()
            .rev()
            .find(|r| r.method == record.method)
        {
            if record.component_calls < prev.component_calls {
                return Err(Error::TraceOrder {
                    previous: prev.component_calls,
                    got: record.component_calls,
                });
            }
        }
        self.records.push(record);
        Ok(())
    }

    /// Concatenates another trace (typically a different method).
    pub fn extend(&mut self, other: Trace) -> Result<()> {
        for r in other.records {
            self.emit(r)?;
        }
        Ok(())
    }

    pub fn write_csv_to<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(writer);
        w.write_record(CSV_HEADER.split(','))?;
        for r in &self.records {
            w.serialize(r)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv_to(file)
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv_to(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    pub fn read_csv_from<R: Read>(reader: R) -> Result<Trace> {
        let mut r = csv::Reader::from_reader(reader);
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        if header.join(",") != CSV_HEADER {
            return Err(Error::invalid(format!(
                "unexpected trace header `{}`",
                header.join(",")
            )));
        }
        let mut trace = Trace::new();
        for row in r.deserialize() {
            trace.emit(row?)?;
        }
        Ok(trace)
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Trace> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv_from(file)
    }
}

/// What a recorder measures at each row.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceOptions {
    /// Record `||grad f||` (costs a free full gradient per row).
    pub grad_norm: bool,
    /// Record wall-clock seconds; when off the column is 0 and traces are
    /// byte-for-byte reproducible.
    pub wall_clock: bool,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions {
            grad_norm: true,
            wall_clock: true,
        }
    }
}

/// Measures iterates and appends rows to a [`Trace`]. Measurement is never
/// charged to the evaluation counter.
#[derive(Debug)]
pub struct Recorder {
    method: String,
    options: TraceOptions,
    start: Instant,
    trace: Trace,
    f_star: Option<f64>,
    target_gap: Option<f64>,
}

/// Result of recording one row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Measurement {
    pub objective: f64,
    pub grad_norm: Option<f64>,
    pub target_reached: bool,
}

impl Recorder {
    pub fn new(method: impl Into<String>, options: TraceOptions) -> Self {
        Recorder {
            method: method.into(),
            options,
            start: Instant::now(),
            trace: Trace::new(),
            f_star: None,
            target_gap: None,
        }
    }

    /// Enables the `objective - f_star <= target_gap` stop signal.
    pub fn with_target(mut self, f_star: Option<f64>, target_gap: Option<f64>) -> Self {
        self.f_star = f_star;
        self.target_gap = target_gap;
        self
    }

    pub fn method(&self) -> &str {
        &self.method
    }

    pub fn f_star(&self) -> Option<f64> {
        self.f_star
    }

    pub fn elapsed(&self) -> f64 {
        if self.options.wall_clock {
            self.start.elapsed().as_secs_f64()
        } else {
            0.0
        }
    }

    pub fn record(
        &mut self,
        obj: &Objective,
        x: &Point,
        stage: usize,
        iter: usize,
        counter: &EvalCounter,
    ) -> Result<Measurement> {
        let objective = obj.full_value(x);
        let grad_norm = self.options.grad_norm.then(|| obj.gradient(x).norm());
        self.trace.emit(TraceRecord {
            method: self.method.clone(),
            stage,
            iter,
            component_calls: counter.component_calls(),
            paper_axis: counter.paper_axis(),
            objective,
            grad_norm,
            wall_seconds: self.elapsed(),
        })?;
        let target_reached = match (self.f_star, self.target_gap) {
            (Some(f), Some(t)) => objective - f <= t,
            _ => false,
        };
        Ok(Measurement {
            objective,
            grad_norm,
            target_reached,
        })
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn finish(self) -> Trace {
        self.trace
    }
}
