mod common;

use std::sync::Arc;

use amsvrg::dataset::{Dataset, SparseExample};
use amsvrg::geometry::Point;
use amsvrg::model::{Objective, ObjectiveKind};
use amsvrg::oracles::{least_squares_minimizer, reference_minimizer};
use amsvrg::solvers::amsvrg::{
    run_modified, run_multistage, RestartPolicy, SolverConfig, StageEnd, StageLength,
};
use amsvrg::solvers::baselines::{run_baseline, BaselineConfig, BaselineMethod};
use amsvrg::solvers::StopReason;

use common::{logistic, quiet, ridge};

fn amsvrg_cfg(obj: &Objective, restart: RestartPolicy, passes: u64) -> SolverConfig {
    let mut cfg = SolverConfig::new(1.0 / obj.smoothness_bound());
    cfg.restart = restart;
    cfg.budget.max_evals = Some(passes * obj.n() as u64);
    cfg.budget.max_stages = usize::MAX;
    cfg.trace = quiet();
    cfg.seed = 7;
    cfg
}

fn baseline_cfg(obj: &Objective, method: BaselineMethod, passes: u64, seed: u64) -> BaselineConfig {
    let mut cfg = BaselineConfig::new(method, method.default_step(obj.smoothness_bound()));
    cfg.budget.max_evals = Some(passes * obj.n() as u64);
    cfg.budget.max_stages = usize::MAX;
    cfg.trace = quiet();
    cfg.seed = seed;
    cfg
}

fn ridge_fstar(obj: &Objective) -> f64 {
    obj.full_value(&least_squares_minimizer(obj).unwrap())
}

#[test]
fn ridge_stages_contract() {
    let obj = ridge(200, 10, 1e-2, 0.1, 11);
    let f_star = ridge_fstar(&obj);
    let w0 = Point::zeros(10);
    let res = run_multistage(&obj, &w0, &amsvrg_cfg(&obj, RestartPolicy::R1, 30)).unwrap();
    let mut prev = obj.full_value(&w0) - f_star;
    let mut ratios = Vec::new();
    for s in res.stages.iter().filter(|s| !s.truncated()) {
        let gap = s.objective - f_star;
        if prev > 1e-13 {
            ratios.push(gap / prev);
        }
        prev = gap;
    }
    ratios.sort_by(f64::total_cmp);
    assert!(!ratios.is_empty());
    assert!(ratios[ratios.len() / 2] <= 0.75, "{ratios:?}");
}

#[test]
fn svrg_reaches_high_accuracy_on_ridge() {
    let obj = ridge(200, 10, 1e-2, 0.1, 12);
    let f_star = ridge_fstar(&obj);
    let mut cfg = baseline_cfg(&obj, BaselineMethod::Svrg, 1, 1);
    cfg.budget.max_evals = None;
    cfg.budget.max_stages = 100;
    let res = run_baseline(&obj, &Point::zeros(10), &cfg).unwrap();
    assert!(
        res.final_objective - f_star <= 1e-8,
        "{}",
        res.final_objective - f_star
    );
}

#[test]
fn saga_reaches_high_accuracy_on_ridge() {
    let obj = ridge(200, 10, 1e-2, 0.1, 13);
    let f_star = ridge_fstar(&obj);
    let res = run_baseline(
        &obj,
        &Point::zeros(10),
        &baseline_cfg(&obj, BaselineMethod::Saga, 100, 1),
    )
    .unwrap();
    assert!(
        res.final_objective - f_star <= 1e-8,
        "{}",
        res.final_objective - f_star
    );
    assert!(res.counter.paper_axis() <= 100 * 200 + 1);
}

#[test]
fn sgd_trails_svrg_at_fixed_budget() {
    let obj = ridge(200, 10, 1e-2, 0.5, 14);
    let f_star = ridge_fstar(&obj);
    let mut wins = Vec::new();
    for seed in 1..=5 {
        let sgd = run_baseline(
            &obj,
            &Point::zeros(10),
            &baseline_cfg(&obj, BaselineMethod::Sgd, 50, seed),
        )
        .unwrap();
        let svrg = run_baseline(
            &obj,
            &Point::zeros(10),
            &baseline_cfg(&obj, BaselineMethod::Svrg, 50, seed),
        )
        .unwrap();
        wins.push((sgd.final_objective - f_star) / (svrg.final_objective - f_star).max(1e-300));
    }
    wins.sort_by(f64::total_cmp);
    assert!(wins[2] > 1.0, "{wins:?}");
}

#[test]
fn modified_single_stage_matches_plain() {
    let obj = logistic(120, 6, 1e-3, 19);
    let mut cfg = amsvrg_cfg(&obj, RestartPolicy::R1, 100);
    cfg.budget.max_stages = 1;
    let w0 = Point::from_vec(vec![0.1, -0.2, 0.3, 0.0, 0.5, -0.4]);
    let a = run_modified(&obj, &w0, &cfg).unwrap();
    let b = run_multistage(&obj, &w0, &cfg).unwrap();
    assert_eq!(a.x, b.x);
    let objectives = |r: &amsvrg::solvers::RunResult| {
        r.trace
            .records()
            .iter()
            .map(|t| t.objective)
            .collect::<Vec<_>>()
    };
    assert_eq!(objectives(&a), objectives(&b));
    assert!(a.method.contains("mod") && !b.method.contains("mod"));
}

/// Unregularized logistic, n = 200: gap 1e-4 within 50n. Median over
/// seeds of the best of R1, R2, R3 and the fixed target-based length.
#[test]
fn modified_variant_converges_on_logistic() {
    let obj = logistic(200, 8, 0.0, 15);
    let reference = reference_minimizer(&obj, 100_000).unwrap();
    let f_star = reference.f_star;
    let distance = 0.5 * reference.x.norm_sq();
    let policies = [
        RestartPolicy::R1,
        RestartPolicy::R2,
        RestartPolicy::R3,
        RestartPolicy::Fixed(StageLength::Estimated {
            distance,
            gap: 1e-4,
        }),
    ];
    let mut best = Vec::new();
    for seed in 1..=5 {
        let gap = policies
            .iter()
            .map(|&restart| {
                let mut cfg = amsvrg_cfg(&obj, restart, 50);
                cfg.seed = seed;
                cfg.budget.f_star = Some(f_star);
                cfg.budget.target_gap = Some(1e-4);
                run_modified(&obj, &Point::zeros(8), &cfg)
                    .unwrap()
                    .final_objective
                    - f_star
            })
            .fold(f64::INFINITY, f64::min);
        best.push(gap);
    }
    println!("best gap per seed: {best:?}");
    best.sort_by(f64::total_cmp);
    assert!(best[2] <= 1e-4, "{best:?}");
}

fn one_d_quadratic() -> Objective {
    let ex = vec![SparseExample::new(vec![(0, 1.0)], 3.0)];
    let ds = Dataset::new(ex, Some(1)).unwrap();
    Objective::new(ObjectiveKind::LeastSquares, Arc::new(ds), 0.0).unwrap()
}

#[test]
fn r2_fires_when_momentum_overshoots() {
    let obj = one_d_quadratic();
    let mut cfg = SolverConfig::new(0.9 / obj.smoothness_bound());
    cfg.restart = RestartPolicy::R2;
    cfg.budget.max_stages = 3;
    cfg.trace = quiet();
    let res = run_multistage(&obj, &Point::zeros(1), &cfg).unwrap();
    assert!(
        res.stages.iter().any(|s| s.end == StageEnd::R2Restart),
        "{:?}",
        res.stages
    );
    let first = &res.stages[0];
    assert!(first.iterations >= 2);
}

#[test]
fn single_component_stage_matches_accelerated_gradient() {
    let obj = ridge(1, 5, 0.1, 0.3, 16);
    let eta = 1.0 / obj.smoothness_bound();
    let m = 25;
    let x0 = Point::from_vec(vec![0.5, -1.0, 2.0, 0.0, 1.5]);
    let mut cfg = SolverConfig::new(eta);
    cfg.restart = RestartPolicy::Fixed(StageLength::Iterations(m));
    cfg.budget.max_stages = 1;
    cfg.trace = quiet();
    let stage = run_multistage(&obj, &x0, &cfg).unwrap();

    let mut agd = BaselineConfig::new(BaselineMethod::Agd, eta);
    agd.budget.max_stages = m + 1;
    agd.trace = quiet();
    let reference = run_baseline(&obj, &x0, &agd).unwrap();
    let diff = stage.x.distance(&reference.x);
    assert!(diff <= 1e-12 * (1.0 + reference.x.norm()), "{diff}");
}

#[test]
fn budget_overshoot_is_below_one_batch() {
    let obj = logistic(300, 6, 1e-3, 17);
    for restart in [RestartPolicy::R1, RestartPolicy::R2, RestartPolicy::R3] {
        let res = run_multistage(&obj, &Point::zeros(6), &amsvrg_cfg(&obj, restart, 7)).unwrap();
        assert_eq!(res.stop_reason, StopReason::Budget);
        let over = res.counter.paper_axis() - 7 * 300;
        assert!(over < 300, "{over}");
    }
}

#[test]
fn every_trace_row_is_monotone_in_calls() {
    let obj = logistic(150, 5, 1e-3, 18);
    let res = run_multistage(
        &obj,
        &Point::zeros(5),
        &amsvrg_cfg(&obj, RestartPolicy::R3, 10),
    )
    .unwrap();
    let rows = res.trace.records();
    assert!(rows
        .windows(2)
        .all(|w| w[0].component_calls <= w[1].component_calls));
    assert!(rows.iter().all(|r| r.paper_axis <= r.component_calls));
    let last = rows.last().unwrap();
    assert_eq!(last.component_calls, res.counter.component_calls());
}

fn half_square() -> Objective {
    let ex = vec![SparseExample::new(vec![(0, 1.0)], 0.0)];
    Objective::new(
        ObjectiveKind::LeastSquares,
        Arc::new(Dataset::new(ex, Some(1)).unwrap()),
        0.0,
    )
    .unwrap()
}

#[test]
fn agd_on_half_square() {
    let obj = half_square();
    assert_eq!(obj.smoothness_bound(), 1.0);
    let mut cfg = BaselineConfig::new(BaselineMethod::Agd, 1.0);
    cfg.budget.max_stages = 50;
    cfg.trace = quiet();
    let res = run_baseline(&obj, &Point::from_vec(vec![1.0]), &cfg).unwrap();
    let values: Vec<f64> = res.trace.records().iter().map(|r| r.objective).collect();
    assert_eq!(values.len(), 51);
    assert!(values.windows(2).all(|w| w[1] <= w[0]), "{values:?}");
    assert!(values[50] <= 1e-6);
    let scaled = values
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, f)| f * (k * k) as f64);
    assert!(scaled.fold(0.0, f64::max) <= 1.0);
}

#[test]
fn traces_strictly_advance_the_eval_count() {
    let obj = logistic(120, 5, 1e-3, 20);
    let w0 = Point::zeros(5);
    let mut traces = Vec::new();
    for restart in [RestartPolicy::R1, RestartPolicy::R2, RestartPolicy::R3] {
        traces.push(
            run_multistage(&obj, &w0, &amsvrg_cfg(&obj, restart, 15))
                .unwrap()
                .trace,
        );
        traces.push(
            run_modified(&obj, &w0, &amsvrg_cfg(&obj, restart, 15))
                .unwrap()
                .trace,
        );
    }
    for method in [
        BaselineMethod::Svrg,
        BaselineMethod::Saga,
        BaselineMethod::Agd,
        BaselineMethod::Sgd,
    ] {
        let mut cfg = baseline_cfg(&obj, method, 15, 1);
        cfg.batch = 7;
        traces.push(run_baseline(&obj, &w0, &cfg).unwrap().trace);
    }
    for t in traces {
        let rows = t.records();
        let name = &rows[0].method;
        assert!(
            rows.windows(2)
                .all(|w| w[0].component_calls < w[1].component_calls),
            "{name}"
        );
        assert!(
            rows.windows(2).all(|w| w[0].paper_axis <= w[1].paper_axis),
            "{name}"
        );
    }
}
