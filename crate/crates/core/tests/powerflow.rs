mod common;

use std::collections::BTreeSet;

use ols_core::netcase::case14;
use ols_core::powerflow::{check_connectivity, frequency_proxy, line_flows, solve_power_flow, PfOptions, Start};
use proptest::prelude::*;

#[test]
fn two_bus_matches_closed_form() {
    for &(x, p, q) in &[(0.1, 50.0, 10.0), (0.2, 80.0, 30.0), (0.05, 120.0, -20.0), (0.3, 20.0, 0.0)] {
        let case = common::two_bus(x, p, q, 0.0);
        let opts = PfOptions { tol: 1e-13, ..PfOptions::default() };
        let sol = solve_power_flow(&case, Start::Flat, &opts).unwrap();
        assert!(sol.converged);
        let (v, th) = common::two_bus_closed_form(x, p / 100.0, q / 100.0);
        assert!((sol.v[1] - v).abs() < 1e-10, "x={x}: {} vs {v}", sol.v[1]);
        assert!((sol.theta[1] - th).abs() < 1e-10, "x={x}: {} vs {th}", sol.theta[1]);
        assert!((sol.p_g[0] - p / 100.0).abs() < 1e-10);
    }
}

#[test]
fn case14_flat_start_balances_every_bus() {
    let case = case14();
    let sol = solve_power_flow(&case, Start::Flat, &PfOptions::default()).unwrap();
    assert!(sol.converged);
    assert!(sol.max_mismatch <= 1e-8);
    assert!(common::pi_model_mismatch(&case, &sol) <= 1e-8);
    // published solution: bus 14 at 1.036 pu, -16.03 degrees
    assert!((sol.v[13] - 1.036).abs() < 1e-3);
    assert!((sol.theta[13].to_degrees() + 16.03).abs() < 0.01);
}

#[test]
fn case14_single_outages_balance() {
    let base = case14();
    for k in 0..base.branches.len() {
        let case = base.apply_outage(&[k]).unwrap();
        if !check_connectivity(&case).connected {
            continue;
        }
        let sol = solve_power_flow(&case, Start::Flat, &PfOptions::default()).unwrap();
        if sol.converged {
            assert!(common::pi_model_mismatch(&case, &sol) <= 1e-8, "outage {k}");
        }
    }
}

#[test]
fn branch_flows_conserve_power() {
    let case = case14();
    let sol = solve_power_flow(&case, Start::Flat, &PfOptions::default()).unwrap();
    let flows = line_flows(&case, &sol.v, &sol.theta);
    let gen: f64 = sol.p_g.iter().sum();
    let load = case.total_p_demand() / case.base_mva;
    assert!((flows.losses().re - (gen - load)).abs() < 1e-8);
}

#[test]
fn isolated_bus_is_reported() {
    let case = case14();
    let k = case.branch_index(7, 8).unwrap();
    let out = case.apply_outage(&[k]).unwrap();
    let rep = check_connectivity(&out);
    assert!(!rep.connected);
    assert_eq!(rep.islands, vec![vec![8]]);
    assert!(solve_power_flow(&out, Start::Flat, &PfOptions::default()).is_err());
}

#[test]
fn frequency_drops_with_extra_generation() {
    let f = frequency_proxy(2.5, 2.6, 10.0, 60.0).unwrap();
    assert!((f.f - 59.99).abs() < 1e-12);
    assert!(frequency_proxy(1.0, 1.0, 0.0, 60.0).is_err());
}

fn find(parent: &mut [usize], i: usize) -> usize {
    let mut r = i;
    while parent[r] != r {
        r = parent[r];
    }
    parent[i] = r;
    r
}

proptest! {
    #[test]
    fn connectivity_agrees_with_union_find(mask in proptest::collection::vec(any::<bool>(), 20)) {
        let base = case14();
        let out: Vec<usize> = mask.iter().enumerate().filter(|(_, &m)| m).map(|(k, _)| k).collect();
        let case = base.apply_outage(&out).unwrap();
        let idx = case.index_map();
        let mut parent: Vec<usize> = (0..case.n_bus()).collect();
        for (_, br) in case.in_service_branches() {
            let (a, b) = (find(&mut parent, idx[&br.from]), find(&mut parent, idx[&br.to]));
            parent[a] = b;
        }
        let mut comps: BTreeSet<BTreeSet<u32>> = BTreeSet::new();
        let roots: Vec<usize> = (0..case.n_bus()).map(|i| find(&mut parent, i)).collect();
        for r in roots.iter().copied().collect::<BTreeSet<_>>() {
            comps.insert((0..case.n_bus()).filter(|&i| roots[i] == r).map(|i| case.buses[i].id).collect());
        }
        let rep = check_connectivity(&case);
        prop_assert_eq!(rep.connected, comps.len() == 1);
        let mut got: BTreeSet<BTreeSet<u32>> = rep.islands.iter().map(|s| s.iter().copied().collect()).collect();
        let in_islands: BTreeSet<u32> = rep.islands.iter().flatten().copied().collect();
        got.insert(case.buses.iter().map(|b| b.id).filter(|id| !in_islands.contains(id)).collect());
        prop_assert_eq!(got, comps);
    }
}
