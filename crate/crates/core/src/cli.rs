//! Command-line interface.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::dataset::{load_libsvm, BinaryLabelMap, Dataset, FeatureScaling};
use crate::geometry::Point;
use crate::model::{Objective, ObjectiveKind};
use crate::oracles::reference_minimizer;
use crate::solvers::amsvrg::{
    run_modified, run_multistage, RestartPolicy, SolverConfig, StageLength, StageOption,
};
use crate::solvers::baselines::{run_baseline, BaselineConfig, BaselineMethod};
use crate::solvers::{Budget, RunResult};
use crate::synthetic::{gen_synthetic, SyntheticKind, SyntheticSpec};
use crate::trace::{BudgetAxis, Trace, TraceOptions};
use crate::verify::{run_verify, VerifyScale};

/// Iteration cap for the `--fstar auto` reference run.
pub const REFERENCE_ITERATIONS: usize = 1_000_000;

#[derive(Parser, Debug)]
#[command(
    name = "amsvrg",
    version,
    about = "Accelerated mini-batch SVRG and baselines for finite-sum problems"
)]
pub struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run one solver and write its trace and summary.
    Run(RunArgs),
    /// Run several methods under one budget and merge their traces.
    Compare(CompareArgs),
    /// Run the oracle verification suite.
    Verify(VerifyArgs),
    /// Write a synthetic LIBSVM dataset with a planted model.
    GenSynthetic(GenArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ObjArg {
    LeastSquares,
    #[default]
    Logistic,
    Multinomial,
}

impl From<ObjArg> for ObjectiveKind {
    fn from(o: ObjArg) -> Self {
        match o {
            ObjArg::LeastSquares => ObjectiveKind::LeastSquares,
            ObjArg::Logistic => ObjectiveKind::LogisticBinary,
            ObjArg::Multinomial => ObjectiveKind::LogisticMultinomial,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum MethodArg {
    #[default]
    Amsvrg,
    AmsvrgMod,
    Svrg,
    Saga,
    Agd,
    Sgd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum RestartArg {
    #[default]
    R1,
    R2,
    R3,
    Fixed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum AxisArg {
    #[default]
    Paper,
    Calls,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ScaleArg {
    #[default]
    None,
    Unit,
}

/// How the dataset is loaded.
#[derive(Args, Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct DataOpts {
    /// Objective.
    #[arg(long, value_enum, default_value_t = ObjArg::Logistic)]
    pub obj: ObjArg,
    /// Feature scaling applied after loading.
    #[arg(long, value_enum, default_value_t = ScaleArg::None)]
    pub scale: ScaleArg,
    /// Feature dimension (default: largest index in the file).
    #[arg(long)]
    pub dim: Option<usize>,
}

impl Default for DataOpts {
    fn default() -> Self {
        DataOpts {
            obj: ObjArg::Logistic,
            scale: ScaleArg::None,
            dim: None,
        }
    }
}

/// Solver tunables and budgets shared by `run` and `compare`.
#[derive(Args, Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOpts {
    /// Step size (default: 1/L for amsvrg, agd and sgd; 1/(10L) for svrg; 1/(3L) for saga).
    #[arg(long)]
    pub eta: Option<f64>,
    /// Batch-size schedule parameter.
    #[arg(long, default_value_t = 0.5)]
    pub p: f64,
    /// Stage-length parameter, used by `--restart fixed` with estimates.
    #[arg(long, default_value_t = 0.25)]
    pub q: f64,
    /// Stage termination rule for amsvrg.
    #[arg(long, value_enum, default_value_t = RestartArg::R1)]
    pub restart: RestartArg,
    /// Inner iterations per stage for `--restart fixed`.
    #[arg(long)]
    pub m: Option<usize>,
    /// Estimate of the Bregman distance to the optimum, for `--restart fixed`.
    #[arg(long)]
    pub v_estimate: Option<f64>,
    /// Estimate of the initial objective gap, for `--restart fixed`.
    #[arg(long)]
    pub gap_estimate: Option<f64>,
    /// Stage output: 1 = last iterate, 2 = averaged iterate.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub option: u8,
    /// Mini-batch size for svrg and sgd.
    #[arg(long, default_value_t = 1)]
    pub batch: usize,
    /// Inner loop length for svrg (default 2n).
    #[arg(long)]
    pub epoch_length: Option<usize>,
    /// Seed for all sampling.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Evaluation budget on the chosen axis.
    #[arg(long)]
    pub max_evals: Option<u64>,
    /// Axis the budget is measured on.
    #[arg(long, value_enum, default_value_t = AxisArg::Paper)]
    pub budget_axis: AxisArg,
    /// Limit on stages (amsvrg, svrg), epochs (saga, sgd) or iterations (agd).
    #[arg(long, default_value_t = 1000)]
    pub max_stages: usize,
    /// Stop once f(x) - f_star falls to this value.
    #[arg(long)]
    pub target_gap: Option<f64>,
    /// Optimal value: a number, or `auto` for a long deterministic reference run.
    #[arg(long)]
    pub fstar: Option<String>,
    /// Skip the gradient-norm column.
    #[arg(long)]
    pub no_grad_norm: bool,
    /// Write 0 in the wall-clock column so traces are reproducible byte for byte.
    #[arg(long)]
    pub no_timing: bool,
}

impl Default for SolverOpts {
    fn default() -> Self {
        SolverOpts {
            eta: None,
            p: 0.5,
            q: 0.25,
            restart: RestartArg::R1,
            m: None,
            v_estimate: None,
            gap_estimate: None,
            option: 1,
            batch: 1,
            epoch_length: None,
            seed: 0,
            max_evals: None,
            budget_axis: AxisArg::Paper,
            max_stages: 1000,
            target_gap: None,
            fstar: None,
            no_grad_norm: false,
            no_timing: false,
        }
    }
}

#[derive(Args, Debug)]
pub struct RunArgs {
    /// LIBSVM dataset.
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub data_opts: DataOpts,
    /// L2 regularization weight.
    #[arg(long, default_value_t = 0.0)]
    pub lambda: f64,
    /// Solver.
    #[arg(long, value_enum, default_value_t = MethodArg::Amsvrg)]
    pub method: MethodArg,
    #[command(flatten)]
    pub solver: SolverOpts,
    /// Trace CSV path.
    #[arg(long, default_value = "trace.csv")]
    pub out: PathBuf,
    /// JSON summary path (default: the trace path with a .json extension).
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    /// LIBSVM dataset (may instead come from `--specs`).
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[command(flatten)]
    pub data_opts: DataOpts,
    /// Regularization weights; one run per value and method.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub lambda: Vec<f64>,
    /// Methods to compare.
    #[arg(long, value_delimiter = ',', default_value = "amsvrg,svrg,saga")]
    pub methods: Vec<MethodArg>,
    #[command(flatten)]
    pub solver: SolverOpts,
    /// JSON list of run specs replacing `--methods` and `--lambda`.
    #[arg(long)]
    pub specs: Option<PathBuf>,
    /// Merged trace CSV path.
    #[arg(long, default_value = "compare.csv")]
    pub out: PathBuf,
    /// Best-objective-per-budget table (CSV); printed to stdout either way.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Instance counts and horizons.
    #[arg(long, value_enum, default_value_t = ScaleOpt::Small)]
    pub scale: ScaleOpt,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ScaleOpt {
    Small,
    Full,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub d: usize,
    /// `least-squares`, `logistic` or `multinomial[:C]`.
    #[arg(long, default_value = "logistic")]
    pub kind: SyntheticKind,
    /// Label noise (Gaussian std, or softmax temperature for logistic kinds).
    #[arg(long, default_value_t = 0.5)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Feature standard deviation (default 1/sqrt(d)).
    #[arg(long)]
    pub feature_scale: Option<f64>,
    /// Output LIBSVM path; metadata goes to `<out>.json`.
    #[arg(long)]
    pub out: PathBuf,
}

/// One solver run inside `compare`, also the element type of `--specs`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunSpec {
    pub data: PathBuf,
    #[serde(default)]
    pub lambda: f64,
    pub method: MethodArg,
    #[serde(flatten)]
    pub solver: SolverOpts,
}

/// JSON summary written next to each trace.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunSummary {
    pub method: String,
    pub stop_reason: String,
    pub final_objective: f64,
    pub final_gap: Option<f64>,
    pub component_calls: u64,
    pub paper_axis: u64,
    pub wall_seconds: f64,
    pub config: serde_json::Value,
}

pub fn load_dataset(path: &Path, opts: &DataOpts) -> anyhow::Result<Dataset> {
    let map = (opts.obj == ObjArg::Logistic).then_some(BinaryLabelMap::Auto);
    let mut ds = load_libsvm(path, map).with_context(|| format!("loading {}", path.display()))?;
    if let Some(d) = opts.dim {
        ds = ds.with_dim(d)?;
    }
    let scaling = match opts.scale {
        ScaleArg::None => FeatureScaling::None,
        ScaleArg::Unit => FeatureScaling::UnitRowNorm,
    };
    Ok(ds.scale_features(scaling))
}

fn resolve_fstar(
    spec: Option<&str>,
    target: Option<f64>,
    obj: &Objective,
) -> anyhow::Result<Option<f64>> {
    match spec {
        Some("auto") => Ok(Some(reference_value(obj)?)),
        Some(v) => Ok(Some(v.parse::<f64>().with_context(|| {
            format!("--fstar must be a number or `auto`, got `{v}`")
        })?)),
        None if target.is_some() => Ok(Some(reference_value(obj)?)),
        None => Ok(None),
    }
}

fn reference_value(obj: &Objective) -> anyhow::Result<f64> {
    let r = reference_minimizer(obj, REFERENCE_ITERATIONS)?;
    log::info!(
        "reference: f_star = {:.17e}, |grad| = {:.3e} after {} iterations",
        r.f_star,
        r.grad_norm,
        r.iterations
    );
    Ok(r.f_star)
}

fn budget(opts: &SolverOpts, f_star: Option<f64>) -> Budget {
    Budget {
        max_stages: opts.max_stages,
        max_evals: opts.max_evals,
        axis: match opts.budget_axis {
            AxisArg::Paper => BudgetAxis::PaperAxis,
            AxisArg::Calls => BudgetAxis::ComponentCalls,
        },
        target_gap: opts.target_gap,
        f_star,
    }
}

fn trace_options(opts: &SolverOpts) -> TraceOptions {
    TraceOptions {
        grad_norm: !opts.no_grad_norm,
        wall_clock: !opts.no_timing,
    }
}

/// Runs one method and returns its result with the resolved config.
pub fn execute(
    obj: &Objective,
    method: MethodArg,
    opts: &SolverOpts,
    f_star: Option<f64>,
    tag: Option<String>,
) -> anyhow::Result<(RunResult, serde_json::Value)> {
    let l = obj.smoothness_bound();
    let w0 = Point::zeros(obj.dim_params());
    let budget = budget(opts, f_star);
    match method {
        MethodArg::Amsvrg | MethodArg::AmsvrgMod => {
            let restart = match opts.restart {
                RestartArg::R1 => RestartPolicy::R1,
                RestartArg::R2 => RestartPolicy::R2,
                RestartArg::R3 => RestartPolicy::R3,
                RestartArg::Fixed => match (opts.m, opts.v_estimate, opts.gap_estimate) {
                    (Some(m), _, _) => RestartPolicy::Fixed(StageLength::Iterations(m)),
                    (None, Some(distance), Some(gap)) => {
                        RestartPolicy::Fixed(StageLength::Estimated { distance, gap })
                    }
                    _ => bail!("--restart fixed needs --m or both --v-estimate and --gap-estimate"),
                },
            };
            let cfg = SolverConfig {
                eta: opts.eta.unwrap_or(1.0 / l),
                p: opts.p,
                q: opts.q,
                option: if opts.option == 2 {
                    StageOption::AveragedIterate
                } else {
                    StageOption::LastIterate
                },
                restart,
                budget,
                seed: opts.seed,
                trace: trace_options(opts),
                stationary_tol: crate::solvers::STATIONARY_TOL,
                tag,
            };
            let res = if method == MethodArg::AmsvrgMod {
                run_modified(obj, &w0, &cfg)?
            } else {
                run_multistage(obj, &w0, &cfg)?
            };
            Ok((res, serde_json::to_value(&cfg)?))
        }
        _ => {
            let m = match method {
                MethodArg::Svrg => BaselineMethod::Svrg,
                MethodArg::Saga => BaselineMethod::Saga,
                MethodArg::Agd => BaselineMethod::Agd,
                _ => BaselineMethod::Sgd,
            };
            let mut cfg = BaselineConfig::new(m, opts.eta.unwrap_or_else(|| m.default_step(l)));
            cfg.batch = opts.batch;
            cfg.epoch_length = opts.epoch_length;
            cfg.seed = opts.seed;
            cfg.budget = budget;
            cfg.trace = trace_options(opts);
            cfg.tag = tag;
            let res = run_baseline(obj, &w0, &cfg)?;
            Ok((res, serde_json::to_value(&cfg)?))
        }
    }
}

pub fn summarize(res: &RunResult, config: serde_json::Value) -> RunSummary {
    RunSummary {
        method: res.method.clone(),
        stop_reason: res.stop_reason.as_str().to_string(),
        final_objective: res.final_objective,
        final_gap: res.final_gap(),
        component_calls: res.counter.component_calls(),
        paper_axis: res.counter.paper_axis(),
        wall_seconds: res.wall_seconds,
        config,
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn cmd_run(args: &RunArgs) -> anyhow::Result<i32> {
    let ds = load_dataset(&args.data, &args.data_opts)?;
    let obj = Objective::new(args.data_opts.obj.into(), Arc::new(ds), args.lambda)?;
    log::info!(
        "n = {}, parameters = {}, L = {:.6e}",
        obj.n(),
        obj.dim_params(),
        obj.smoothness_bound()
    );
    let f_star = resolve_fstar(args.solver.fstar.as_deref(), args.solver.target_gap, &obj)?;
    let (res, mut config) = execute(&obj, args.method, &args.solver, f_star, None)?;
    if let serde_json::Value::Object(map) = &mut config {
        map.insert("data".into(), serde_json::json!(args.data));
        map.insert("objective".into(), serde_json::json!(obj.kind().name()));
        map.insert("lambda".into(), serde_json::json!(args.lambda));
    }
    res.trace.write_csv(&args.out)?;
    let summary = summarize(&res, config);
    let path = args
        .summary
        .clone()
        .unwrap_or_else(|| args.out.with_extension("json"));
    write_json(&path, &summary)?;
    println!(
        "{}: stop = {}, f = {:.12e}, paper axis = {}, component calls = {}",
        summary.method,
        summary.stop_reason,
        summary.final_objective,
        summary.paper_axis,
        summary.component_calls
    );
    Ok(0)
}

fn method_tag(method: MethodArg, opts: &SolverOpts) -> String {
    let restart = match opts.restart {
        RestartArg::R1 => "r1",
        RestartArg::R2 => "r2",
        RestartArg::R3 => "r3",
        RestartArg::Fixed => "fixed",
    };
    match method {
        MethodArg::Amsvrg => format!("amsvrg-{restart}"),
        MethodArg::AmsvrgMod => format!("amsvrg-mod-{restart}"),
        MethodArg::Svrg => "svrg".into(),
        MethodArg::Saga => "saga".into(),
        MethodArg::Agd => "agd".into(),
        MethodArg::Sgd => "sgd".into(),
    }
}

/// Expands the `compare` flags (or the `--specs` file) into run specs.
pub fn compare_specs(args: &CompareArgs) -> anyhow::Result<Vec<RunSpec>> {
    let specs = match &args.specs {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            let specs: Vec<RunSpec> = serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", path.display()))?;
            if let Some(first) = specs.first() {
                let expected = args.data.as_ref().unwrap_or(&first.data);
                if let Some(bad) = specs.iter().find(|s| &s.data != expected) {
                    bail!(
                        "compare needs a single dataset: `{}` differs from `{}`",
                        bad.data.display(),
                        expected.display()
                    );
                }
            }
            specs
        }
        None => {
            let Some(data) = &args.data else {
                bail!("compare needs --data or --specs");
            };
            let mut specs = Vec::new();
            for &lambda in &args.lambda {
                for &method in &args.methods {
                    specs.push(RunSpec {
                        data: data.clone(),
                        lambda,
                        method,
                        solver: args.solver.clone(),
                    });
                }
            }
            specs
        }
    };
    if specs.len() < 2 {
        bail!("compare needs at least two runs, got {}", specs.len());
    }
    Ok(specs)
}

/// Budget fractions reported in the compare table.
pub const SUMMARY_FRACTIONS: [f64; 4] = [0.25, 0.5, 0.75, 1.0];

/// Best objective reached by each method at each budget fraction, as CSV.
pub fn best_per_budget(trace: &Trace, budget: u64, axis: BudgetAxis) -> String {
    let mut methods: Vec<&str> = Vec::new();
    for r in trace.records() {
        if !methods.contains(&r.method.as_str()) {
            methods.push(&r.method);
        }
    }
    let mut out = String::from("method,budget,best_objective\n");
    for m in methods {
        for frac in SUMMARY_FRACTIONS {
            let limit = (budget as f64 * frac).round() as u64;
            let best = trace
                .records()
                .iter()
                .filter(|r| r.method == m)
                .filter(|r| {
                    let used = match axis {
                        BudgetAxis::PaperAxis => r.paper_axis,
                        BudgetAxis::ComponentCalls => r.component_calls,
                    };
                    used <= limit
                })
                .map(|r| r.objective)
                .fold(f64::INFINITY, f64::min);
            out.push_str(&format!("{m},{limit},{best:e}\n"));
        }
    }
    out
}

fn cmd_compare(args: &CompareArgs) -> anyhow::Result<i32> {
    let specs = compare_specs(args)?;
    let data = specs[0].data.clone();
    let ds = Arc::new(load_dataset(&data, &args.data_opts)?);
    let n = ds.len() as u64;
    let kind: ObjectiveKind = args.data_opts.obj.into();

    let mut objectives: HashMap<u64, (Objective, Option<f64>)> = HashMap::new();
    for spec in &specs {
        if let std::collections::hash_map::Entry::Vacant(e) =
            objectives.entry(spec.lambda.to_bits())
        {
            let obj = Objective::new(kind, ds.clone(), spec.lambda)?;
            let f_star = resolve_fstar(spec.solver.fstar.as_deref(), spec.solver.target_gap, &obj)?;
            e.insert((obj, f_star));
        }
    }
    let sweep = objectives.len() > 1;
    let default_budget = 50 * n;

    let mut tags: Vec<String> = Vec::new();
    for spec in &specs {
        let mut tag = method_tag(spec.method, &spec.solver);
        if sweep {
            tag = format!("{tag}/lambda={}", spec.lambda);
        }
        let base = tag.clone();
        let mut k = 2;
        while tags.contains(&tag) {
            tag = format!("{base}#{k}");
            k += 1;
        }
        tags.push(tag);
    }

    let results: Vec<anyhow::Result<(RunResult, serde_json::Value)>> =
        std::thread::scope(|scope| {
            let handles: Vec<_> = specs
                .iter()
                .zip(&tags)
                .map(|(spec, tag)| {
                    let (obj, f_star) = &objectives[&spec.lambda.to_bits()];
                    let mut opts = spec.solver.clone();
                    opts.max_evals = opts.max_evals.or(Some(default_budget));
                    let tag = tag.clone();
                    let f_star = *f_star;
                    scope.spawn(move || execute(obj, spec.method, &opts, f_star, Some(tag)))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("solver thread panicked"))
                .collect()
        });

    let mut merged = Trace::new();
    let mut summaries = Vec::new();
    for (spec, r) in specs.iter().zip(results) {
        let (res, mut config) = r?;
        if let serde_json::Value::Object(map) = &mut config {
            map.insert("data".into(), serde_json::json!(spec.data));
            map.insert("lambda".into(), serde_json::json!(spec.lambda));
        }
        summaries.push(summarize(&res, config));
        merged.extend(res.trace)?;
    }
    merged.write_csv(&args.out)?;
    write_json(&args.out.with_extension("json"), &summaries)?;

    let budget = specs[0].solver.max_evals.unwrap_or(default_budget);
    let axis = budget_axis(specs[0].solver.budget_axis);
    let table = best_per_budget(&merged, budget, axis);
    if let Some(path) = &args.summary {
        std::fs::write(path, &table).with_context(|| format!("writing {}", path.display()))?;
    }
    print!("{table}");
    Ok(0)
}

fn budget_axis(a: AxisArg) -> BudgetAxis {
    match a {
        AxisArg::Paper => BudgetAxis::PaperAxis,
        AxisArg::Calls => BudgetAxis::ComponentCalls,
    }
}

fn cmd_verify(args: &VerifyArgs) -> anyhow::Result<i32> {
    let scale = match args.scale {
        ScaleOpt::Small => VerifyScale::Small,
        ScaleOpt::Full => VerifyScale::Full,
    };
    let report = run_verify(scale, args.seed)?;
    for r in &report {
        println!("{r}");
    }
    let failed = report.iter().filter(|r| !r.passed).count();
    println!("{} checks, {failed} failed", report.len());
    Ok(if failed == 0 { 0 } else { 1 })
}

fn cmd_gen(args: &GenArgs) -> anyhow::Result<i32> {
    let spec = SyntheticSpec {
        n: args.n,
        d: args.d,
        kind: args.kind,
        noise: args.noise,
        seed: args.seed,
        feature_scale: args.feature_scale,
    };
    gen_synthetic(&spec, &args.out)?;
    println!(
        "wrote {} ({} x {}, {})",
        args.out.display(),
        args.n,
        args.d,
        args.kind
    );
    Ok(0)
}

/// Executes a parsed command line and returns the process exit code.
pub fn dispatch(cli: &Cli) -> i32 {
    let outcome = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Verify(a) => cmd_verify(a),
        Command::GenSynthetic(a) => cmd_gen(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

/// Parses `std::env::args`, sets up logging and runs the command.
pub fn main() -> i32 {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    dispatch(&cli)
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn spec_file_defaults() {
        let specs: Vec<RunSpec> =
            serde_json::from_str(r#"[{"data": "a.svm", "method": "amsvrg-mod", "restart": "r3"}]"#)
                .unwrap();
        assert_eq!(specs[0].method, MethodArg::AmsvrgMod);
        assert_eq!(specs[0].solver.restart, RestartArg::R3);
        assert_eq!(specs[0].solver.p, 0.5);
        assert_eq!(specs[0].lambda, 0.0);
        assert!(
            serde_json::from_str::<Vec<RunSpec>>(r#"[{"data": "a", "method": "adam"}]"#).is_err()
        );
    }

    #[test]
    fn lambda_sweep_expands() {
        let cli = Cli::try_parse_from([
            "amsvrg",
            "compare",
            "--data",
            "x.svm",
            "--lambda",
            "0,1e-5,1e-3",
            "--methods",
            "amsvrg,svrg",
        ])
        .unwrap();
        let Command::Compare(args) = cli.command else {
            panic!()
        };
        let specs = compare_specs(&args).unwrap();
        assert_eq!(specs.len(), 6);
        assert_eq!(specs[5].lambda, 1e-3);
        assert_eq!(specs[5].method, MethodArg::Svrg);
    }

    #[test]
    fn unknown_flags_and_methods_rejected() {
        assert!(Cli::try_parse_from(["amsvrg", "run", "--data", "x", "--method", "adam"]).is_err());
        assert!(Cli::try_parse_from(["amsvrg", "run", "--data", "x", "--bogus"]).is_err());
        assert!(Cli::try_parse_from(["amsvrg", "run", "--data", "x", "--option", "3"]).is_err());
    }
}
