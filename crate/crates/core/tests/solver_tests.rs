//! LP correctness against an independent tableau simplex, and cutting-plane
//! solves on desk cases.

mod common;

use ccopf_core::{
    build_flow_matrix, load_case_str, solve, ConstraintKind, FluctuationModel, FormulationConfig,
    LinearProgram, LpRow, LpSense, LpStatus, NetworkCase, PolicyForm, SolveOptions, SolveStatus,
};
use common::{naive_simplex, NaiveLp, NaiveOutcome, TestRng};

fn lp_opts() -> ccopf_core::solver::LpOptions {
    ccopf_core::solver::LpOptions::default()
}

#[test]
fn lp_matches_naive_simplex_on_random_instances() {
    let mut rng = TestRng::new(0x11A);
    let mut solved = 0;
    for trial in 0..60 {
        let n = 3 + rng.below(6);
        let k = 1 + rng.below(n.min(4));
        // random feasible standard-form instance: A x0 = b with x0 >= 0
        let mut a = vec![vec![0.0; n]; k];
        for row in a.iter_mut() {
            for v in row.iter_mut() {
                *v = rng.range(-3.0, 3.0);
            }
        }
        let x0: Vec<f64> = (0..n).map(|_| rng.range(0.0, 4.0)).collect();
        let mut b: Vec<f64> = a
            .iter()
            .map(|row| row.iter().zip(&x0).map(|(r, x)| r * x).sum())
            .collect();
        // naive oracle wants b >= 0: flip offending rows
        for i in 0..k {
            if b[i] < 0.0 {
                b[i] = -b[i];
                for v in a[i].iter_mut() {
                    *v = -*v;
                }
            }
        }
        let c: Vec<f64> = (0..n).map(|_| rng.range(0.1, 5.0)).collect();

        let lp = LinearProgram {
            n_vars: n,
            objective: c.clone(),
            rows: a
                .iter()
                .zip(&b)
                .map(|(row, rhs)| LpRow {
                    coeffs: row.clone(),
                    sense: LpSense::Eq,
                    rhs: *rhs,
                })
                .collect(),
            lower: vec![0.0; n],
            upper: vec![f64::INFINITY; n],
        };
        let mine = ccopf_core::lp_solve(&lp, &lp_opts()).unwrap();
        let oracle = naive_simplex(&NaiveLp { a, b, c });
        match oracle {
            NaiveOutcome::Optimal { objective, .. } => {
                assert_eq!(mine.status, LpStatus::Optimal, "trial {trial}");
                assert!(
                    (mine.objective - objective).abs() <= 1e-9 * (1.0 + objective.abs()),
                    "trial {trial}: mine {} vs oracle {objective}",
                    mine.objective
                );
                solved += 1;
            }
            NaiveOutcome::Infeasible => assert_eq!(mine.status, LpStatus::Infeasible),
            NaiveOutcome::Unbounded => assert_eq!(mine.status, LpStatus::Unbounded),
        }
    }
    assert!(solved >= 50, "only {solved} optimal instances exercised");
}

fn desk_case() -> NetworkCase {
    load_case_str(include_str!("../../../cases/desk3.json")).unwrap()
}

fn paper_fluct() -> FluctuationModel {
    FluctuationModel::from_std_and_rho(&[9.4, 13.1], 0.2).unwrap()
}

#[test]
fn trivial_case_dispatches_cheapest_generator() {
    // huge limits, generous budgets: pure merit order
    let case = load_case_str(
        r#"{
            "buses": 2, "slack_bus": 0, "base_mva": 100.0,
            "lines": [{"from": 0, "to": 1, "susceptance": 10.0, "limit_mw": 10000.0}],
            "generators": [
                {"bus": 0, "cost": 5.0, "p_min": 0.0, "p_max": 500.0},
                {"bus": 1, "cost": 50.0, "p_min": 0.0, "p_max": 500.0}
            ],
            "wind": [{"bus": 1, "forecast_mw": 20.0}],
            "demand": [{"bus": 1, "mw": 220.0}]
        }"#,
    )
    .unwrap();
    let flow = build_flow_matrix(&case).unwrap();
    let fm = FluctuationModel::from_std_and_rho(&[5.0], 0.0).unwrap();
    let cfg = FormulationConfig::uniform(ConstraintKind::Standard, PolicyForm::Affine, 0.4, 0.4);
    let report = solve(&case, &flow, &fm, &cfg, None, &SolveOptions::default()).unwrap();
    assert_eq!(report.status, SolveStatus::Optimal);
    assert!((report.decision.p[0] - 200.0).abs() < 1e-6, "p = {}", report.decision.p);
    assert!(report.decision.p[1].abs() < 1e-6);
    assert!((report.objective - 1000.0).abs() < 1e-4);
    // participation still sums to one
    assert!((report.decision.alpha.sum() - 1.0).abs() < 1e-9);
}

#[test]
fn infeasible_demand_is_reported() {
    let case = load_case_str(
        r#"{
            "buses": 2, "slack_bus": 0, "base_mva": 100.0,
            "lines": [{"from": 0, "to": 1, "susceptance": 10.0, "limit_mw": 1000.0}],
            "generators": [{"bus": 0, "cost": 5.0, "p_min": 0.0, "p_max": 100.0}],
            "wind": [],
            "demand": [{"bus": 1, "mw": 500.0}]
        }"#,
    )
    .unwrap();
    let flow = build_flow_matrix(&case).unwrap();
    let fm = FluctuationModel::new(nalgebra::DMatrix::zeros(0, 0)).unwrap();
    let cfg = FormulationConfig::uniform(ConstraintKind::Standard, PolicyForm::Affine, 0.1, 0.1);
    let report = solve(&case, &flow, &fm, &cfg, None, &SolveOptions::default()).unwrap();
    assert_eq!(report.status, SolveStatus::Infeasible);
}

#[test]
fn standard_cc_piecewise_combination_is_rejected() {
    let case = desk_case();
    let flow = build_flow_matrix(&case).unwrap();
    let fm = paper_fluct();
    let cfg = FormulationConfig::uniform(ConstraintKind::Standard, PolicyForm::Piecewise, 0.001, 0.1);
    let err = solve(&case, &flow, &fm, &cfg, Some((26.0, -26.0)), &SolveOptions::default())
        .unwrap_err();
    assert!(matches!(err, ccopf_core::CoreError::Config(_)), "{err}");
}

#[test]
fn desk_cc_solve_is_optimal_with_certificate() {
    let case = desk_case();
    let flow = build_flow_matrix(&case).unwrap();
    let fm = paper_fluct();
    let cfg = FormulationConfig::uniform(ConstraintKind::Standard, PolicyForm::Affine, 0.001, 0.1);
    let report = solve(&case, &flow, &fm, &cfg, None, &SolveOptions::default()).unwrap();
    assert_eq!(report.status, SolveStatus::Optimal, "iterations: {:?}", report.iterations.last());
    assert!(report.gap <= 1e-6, "gap {}", report.gap);
    // every residual within its tolerance
    for r in &report.residuals {
        assert!(r.value <= r.tolerance, "{}: {} > {}", r.id, r.value, r.tolerance);
    }
    // LP bound is monotone across iterations
    let bounds: Vec<f64> = report.iterations.iter().map(|it| it.lp_bound).collect();
    for w in bounds.windows(2) {
        assert!(w[1] >= w[0] - 1e-7 * (1.0 + w[0].abs()), "bound dipped: {w:?}");
    }
    // the tight corridor must be active at eps = 0.1 for the desk design
    let active = report
        .residuals
        .iter()
        .find(|r| r.id == "line_2_upper")
        .unwrap();
    assert!(
        active.value.abs() <= 1e-3,
        "line_2_upper expected binding, residual {}",
        active.value
    );
}

#[test]
fn determinism_identical_reports() {
    let case = desk_case();
    let flow = build_flow_matrix(&case).unwrap();
    let fm = paper_fluct();
    let cfg = FormulationConfig::uniform(ConstraintKind::Linear, PolicyForm::Affine, 0.01, 0.5);
    let a = solve(&case, &flow, &fm, &cfg, None, &SolveOptions::default()).unwrap();
    let b = solve(&case, &flow, &fm, &cfg, None, &SolveOptions::default()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn piecewise_no_costlier_than_affine() {
    let case = desk_case();
    let flow = build_flow_matrix(&case).unwrap();
    let fm = paper_fluct();
    let mut cfg = FormulationConfig::uniform(ConstraintKind::Linear, PolicyForm::Affine, 0.01, 0.5);
    let affine = solve(&case, &flow, &fm, &cfg, None, &SolveOptions::default()).unwrap();
    assert_eq!(affine.status, SolveStatus::Optimal);
    cfg.policy_form = PolicyForm::Piecewise;
    let thresholds = (1.5 * fm.total_std(), -1.5 * fm.total_std());
    let pw = solve(&case, &flow, &fm, &cfg, Some(thresholds), &SolveOptions::default()).unwrap();
    assert_eq!(pw.status, SolveStatus::Optimal);
    assert!(
        pw.objective <= affine.objective + 1e-6 * affine.objective.abs(),
        "piecewise {} vs affine {}",
        pw.objective,
        affine.objective
    );
}

#[test]
fn quadratic_tighter_budget_costs_at_least_linear() {
    let case = desk_case();
    let flow = build_flow_matrix(&case).unwrap();
    let fm = paper_fluct();
    let lin_cfg = FormulationConfig::uniform(ConstraintKind::Linear, PolicyForm::Affine, 0.01, 0.5);
    let lin = solve(&case, &flow, &fm, &lin_cfg, None, &SolveOptions::default()).unwrap();
    assert_eq!(lin.status, SolveStatus::Optimal);

    // quadratic budget far below the linear solution's realized squared
    // risk: strictly tighter feasible set on the binding line
    let ctx = ccopf_core::ConstraintContext::new(&case, &flow, &fm).unwrap();
    let quad_spec = ccopf_core::ConstraintSpec {
        kind: ConstraintKind::Quadratic,
        target: ccopf_core::Target::Line(2),
        side: ccopf_core::policy::Side::Upper,
        epsilon: 0.0_f64.max(f64::MIN_POSITIVE),
        policy_form: PolicyForm::Affine,
    };
    let realized_quad = ctx
        .eval_affine(&quad_spec, &lin.decision.p, &lin.decision.alpha)
        .unwrap()
        .value;
    let quad_cfg = FormulationConfig::uniform(
        ConstraintKind::Quadratic,
        PolicyForm::Affine,
        0.5,
        (realized_quad / 4.0).max(1e-4),
    );
    let quad = solve(&case, &flow, &fm, &quad_cfg, None, &SolveOptions::default()).unwrap();
    assert_eq!(quad.status, SolveStatus::Optimal);
    assert!(
        quad.objective >= lin.objective - 1e-6 * lin.objective.abs(),
        "tighter quadratic budget should not be cheaper: quad {} vs lin {}",
        quad.objective,
        lin.objective
    );
}
