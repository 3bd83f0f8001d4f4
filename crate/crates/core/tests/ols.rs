mod common;

use std::collections::BTreeSet;

use ols_core::netcase::case14;
use ols_core::ols::{brute_force_ols, verify_feasibility, Binding, OracleOptions, ViolationKind};
use ols_core::{assemble_ols, solve_ols, CostConfig, NetworkCase, OlsSolution, SolverOptions};

fn solve(case: &NetworkCase, costs: &CostConfig) -> OlsSolution {
    let p = assemble_ols(case, costs).unwrap();
    let sol = solve_ols(&p, &SolverOptions::default());
    assert!(sol.is_optimal(), "{}", sol.status);
    sol
}

#[test]
fn line_limit_forces_known_shed() {
    // lossless x = 0.1 line rated 1 pu feeding 1.5 pu at unity power factor:
    // the sending end binds when sin δ = x, so the line carries cos(asin x)
    let case = common::two_bus(0.1, 150.0, 0.0, 100.0);
    let costs = CostConfig::for_case(&case);
    let problem = assemble_ols(&case, &costs).unwrap();
    let expected = 1.5 - 0.1f64.asin().cos();

    let sol = solve_ols(&problem, &SolverOptions::default());
    assert!(sol.is_optimal());
    assert!((sol.p_s[1] / 100.0 - expected).abs() < 1e-5, "{} vs {expected}", sol.p_s[1] / 100.0);
    assert!(verify_feasibility(&sol, &problem, 1e-6).is_empty());
    assert!(problem.binding_constraints(&sol, 1e-5).contains(&Binding::LineLimit(0)));

    let grid = brute_force_ols(&problem, &OracleOptions::default()).unwrap();
    assert!((grid.p_s[1] / 100.0 - expected).abs() <= 0.01 + 1e-9);
    assert!(grid.p_s[1] / 100.0 >= expected - 1e-9);
}

#[test]
fn zero_demand_needs_no_generation() {
    let case = common::two_bus(0.1, 0.0, 0.0, 0.0);
    let costs = CostConfig::for_case(&case);
    let problem = assemble_ols(&case, &costs).unwrap();
    let grid = brute_force_ols(&problem, &OracleOptions::default()).unwrap();
    assert!(grid.p_g[0].abs() < 1e-6);
    let sol = solve_ols(&problem, &SolverOptions::default());
    assert!(sol.is_optimal());
    assert!(sol.objective.abs() < 1e-3);
    assert!(sol.total_p_shed().abs() < 1e-6);
}

#[test]
fn perturbed_solution_is_reported() {
    let case = case14();
    let costs = CostConfig::for_case(&case);
    let problem = assemble_ols(&case, &costs).unwrap();
    let sol = solve_ols(&problem, &SolverOptions::default());
    assert!(verify_feasibility(&sol, &problem, 1e-6).is_empty());

    let mut bad = sol.clone();
    bad.v[13] = 1.2;
    let rep = verify_feasibility(&bad, &problem, 1e-6);
    assert!(rep.violations.iter().any(|v| v.kind == ViolationKind::Voltage && v.element == 14));
    assert!(rep.violations.iter().any(|v| v.kind == ViolationKind::RealBalance));

    let mut bad = sol.clone();
    bad.p_s[13] = -5.0;
    let rep = verify_feasibility(&bad, &problem, 1e-6);
    assert!(rep.violations.iter().any(|v| v.kind == ViolationKind::RealShed && v.element == 14));
    assert!(rep.worst() >= 0.05 - 1e-12);
}

#[test]
fn costlier_shedding_keeps_the_binding_set() {
    let case = common::two_bus(0.1, 150.0, 0.0, 100.0);
    let costs = CostConfig::for_case(&case);
    let p1 = assemble_ols(&case, &costs).unwrap();
    let p2 = assemble_ols(&case, &costs.scaled(2.0)).unwrap();
    let s1 = solve_ols(&p1, &SolverOptions::default());
    let s2 = solve_ols(&p2, &SolverOptions::default());
    assert!(s2.total_p_shed() <= s1.total_p_shed() + 1e-6);
    let b1: BTreeSet<Binding> = p1.binding_constraints(&s1, 1e-5).into_iter().collect();
    let b2: BTreeSet<Binding> = p2.binding_constraints(&s2, 1e-5).into_iter().collect();
    assert_eq!(b1, b2);
}

#[test]
fn doubling_the_base_changes_nothing_physical() {
    let case = case14().scale_to_total(520.0).unwrap();
    let mut rebased = case.clone();
    rebased.base_mva *= 2.0;
    for br in &mut rebased.branches {
        br.r *= 2.0;
        br.x *= 2.0;
        br.b_ch *= 0.5;
    }
    let costs = CostConfig::for_case(&case);
    let a = solve(&case, &costs);
    let b = solve(&rebased, &costs);
    assert!(a.total_p_shed() > 1.0, "stressed case should shed");
    assert!(((a.objective - b.objective) / a.objective).abs() < 1e-5);
    for (x, y) in a.p_s.iter().zip(&b.p_s) {
        assert!((x - y).abs() < 1e-3, "{x} vs {y}");
    }
}

#[test]
fn heavier_load_never_sheds_less() {
    let base = case14();
    let costs = CostConfig::for_case(&base);
    let mut last = 0.0;
    for total in [480.0, 520.0, 560.0] {
        let s = solve(&base.scale_to_total(total).unwrap(), &costs);
        assert!(s.total_p_shed() >= last - 1e-4);
        last = s.total_p_shed();
    }
}
