//! Steady-state AC power flow (polar Newton-Raphson), branch flows,
//! islanding detection and the post-contingency frequency proxy.

use std::collections::VecDeque;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm_inf, DenseLu, LinearSolver};
use crate::netcase::{build_admittance, AdmittanceMatrix, BranchAdmittance, BusKind, NetworkCase};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConnectivityReport {
    pub connected: bool,
    /// Bus-id sets of every component except the main one (the largest,
    /// or the slack's component on a tie), each sorted.
    pub islands: Vec<Vec<u32>>,
}

/// Connected components over in-service branches, found by breadth-first
/// search starting at the slack bus.
pub fn check_connectivity(case: &NetworkCase) -> ConnectivityReport {
    let n = case.n_bus();
    let idx = case.index_map();
    let mut adj = vec![Vec::new(); n];
    for (_, br) in case.in_service_branches() {
        let (f, t) = (idx[&br.from], idx[&br.to]);
        adj[f].push(t);
        adj[t].push(f);
    }
    let mut comp = vec![usize::MAX; n];
    let mut order = vec![case.slack_index()];
    order.extend((0..n).filter(|&i| i != case.slack_index()));
    let mut n_comp = 0;
    for start in order {
        if comp[start] != usize::MAX {
            continue;
        }
        comp[start] = n_comp;
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if comp[v] == usize::MAX {
                    comp[v] = n_comp;
                    queue.push_back(v);
                }
            }
        }
        n_comp += 1;
    }
    // the main component is the largest one; the slack's component wins ties
    let mut sizes = vec![0usize; n_comp];
    for &c in &comp {
        sizes[c] += 1;
    }
    let main = (0..n_comp).fold(0, |best, c| if sizes[c] > sizes[best] { c } else { best });
    let mut islands: Vec<Vec<u32>> = vec![Vec::new(); n_comp];
    for (i, &c) in comp.iter().enumerate() {
        if c != main {
            islands[c].push(case.buses[i].id);
        }
    }
    let mut islands: Vec<Vec<u32>> = islands.into_iter().filter(|s| !s.is_empty()).collect();
    for island in &mut islands {
        island.sort_unstable();
    }
    islands.sort();
    ConnectivityReport {
        connected: islands.is_empty(),
        islands,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerFlowSolution {
    /// Voltage magnitude per bus, pu.
    pub v: Vec<f64>,
    /// Voltage angle per bus, radians; zero at the slack.
    pub theta: Vec<f64>,
    /// Realized real output per generator (aligned with `case.gens`), pu.
    pub p_g: Vec<f64>,
    /// Realized reactive output per generator, pu.
    pub q_g: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub max_mismatch: f64,
    /// Buses whose generator reactive output left its limits.
    pub q_limit_violations: Vec<u32>,
}

impl PowerFlowSolution {
    pub fn phasors(&self) -> Vec<Complex64> {
        self.v
            .iter()
            .zip(&self.theta)
            .map(|(&m, &a)| Complex64::from_polar(m, a))
            .collect()
    }

    pub fn total_p_gen(&self) -> f64 {
        self.p_g.iter().sum()
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Start<'a> {
    Flat,
    Warm(&'a PowerFlowSolution),
}

#[derive(Debug, Clone, Copy)]
pub struct PfOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Fraction of each Newton correction applied.
    pub damping: f64,
}

impl Default for PfOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 20,
            damping: 1.0,
        }
    }
}

struct BusTypes {
    pv: Vec<usize>,
    pq: Vec<usize>,
    slack: usize,
}

fn classify(case: &NetworkCase) -> BusTypes {
    let idx = case.index_map();
    let mut has_gen = vec![false; case.n_bus()];
    for g in case.active_gens() {
        has_gen[idx[&g.bus]] = true;
    }
    let mut pv = Vec::new();
    let mut pq = Vec::new();
    for (i, b) in case.buses.iter().enumerate() {
        match b.kind {
            BusKind::Slack => {}
            BusKind::Pv if has_gen[i] => pv.push(i),
            _ => pq.push(i),
        }
    }
    BusTypes {
        pv,
        pq,
        slack: case.slack_index(),
    }
}

/// Complex power injections `S = V ∘ conj(Y V)`.
pub fn injections(y: &AdmittanceMatrix, v: &[Complex64]) -> Vec<Complex64> {
    y.mul(v).iter().zip(v).map(|(i, vi)| vi * i.conj()).collect()
}

/// Solve the AC power flow with the solver's own dense LU.
pub fn solve_power_flow(case: &NetworkCase, start: Start<'_>, opts: &PfOptions) -> Result<PowerFlowSolution> {
    solve_power_flow_with(case, start, opts, &DenseLu)
}

/// Polar Newton-Raphson with full Jacobian. Generator reactive limits are
/// reported but not enforced. Non-convergence is not an error: the result
/// carries `converged = false` and the last iterate.
pub fn solve_power_flow_with(
    case: &NetworkCase,
    start: Start<'_>,
    opts: &PfOptions,
    solver: &dyn LinearSolver,
) -> Result<PowerFlowSolution> {
    let conn = check_connectivity(case);
    if !conn.connected {
        return Err(Error::Disconnected(conn.islands.concat()));
    }
    let n = case.n_bus();
    let base = case.base_mva;
    let idx = case.index_map();
    let types = classify(case);
    let y = build_admittance(case);

    let mut p_spec = vec![0.0; n];
    let mut q_spec = vec![0.0; n];
    let mut v_set: Vec<Option<f64>> = vec![None; n];
    for (i, b) in case.buses.iter().enumerate() {
        p_spec[i] -= b.p_d / base;
        q_spec[i] -= b.q_d / base;
    }
    for g in case.active_gens() {
        let i = idx[&g.bus];
        p_spec[i] += g.p_g / base;
        q_spec[i] += g.q_g / base;
        v_set[i].get_or_insert(g.v_set);
    }

    let (mut vm, mut va) = match start {
        Start::Flat => {
            let vm = (0..n)
                .map(|i| if i == types.slack || types.pv.contains(&i) { v_set[i].unwrap_or(case.buses[i].vm) } else { 1.0 })
                .collect::<Vec<_>>();
            (vm, vec![0.0; n])
        }
        Start::Warm(sol) => {
            if sol.v.len() != n {
                return Err(Error::Dimension { expected: n, got: sol.v.len() });
            }
            (sol.v.clone(), sol.theta.clone())
        }
    };
    // regulated magnitudes always come from the setpoints
    for &i in types.pv.iter().chain(std::iter::once(&types.slack)) {
        vm[i] = v_set[i].unwrap_or(case.buses[i].vm);
    }
    va[types.slack] = 0.0;

    let pvpq: Vec<usize> = types.pv.iter().chain(&types.pq).copied().collect();
    let n_th = pvpq.len();
    let n_v = types.pq.len();

    let mismatch = |vm: &[f64], va: &[f64]| -> Vec<f64> {
        let v: Vec<Complex64> = vm.iter().zip(va).map(|(&m, &a)| Complex64::from_polar(m, a)).collect();
        let s = injections(&y, &v);
        let mut f = Vec::with_capacity(n_th + n_v);
        f.extend(pvpq.iter().map(|&i| s[i].re - p_spec[i]));
        f.extend(types.pq.iter().map(|&i| s[i].im - q_spec[i]));
        f
    };

    let mut f = mismatch(&vm, &va);
    let mut err = norm_inf(&f);
    let mut iterations = 0;
    while err > opts.tol && iterations < opts.max_iter {
        let v: Vec<Complex64> = vm.iter().zip(&va).map(|(&m, &a)| Complex64::from_polar(m, a)).collect();
        let (ds_dva, ds_dvm) = power_derivatives(&y, &v);
        let mut jac = DMatrix::zeros(n_th + n_v, n_th + n_v);
        for (r, &i) in pvpq.iter().enumerate() {
            for (c, &k) in pvpq.iter().enumerate() {
                jac[(r, c)] = ds_dva[(i, k)].re;
            }
            for (c, &k) in types.pq.iter().enumerate() {
                jac[(r, n_th + c)] = ds_dvm[(i, k)].re;
            }
        }
        for (r, &i) in types.pq.iter().enumerate() {
            for (c, &k) in pvpq.iter().enumerate() {
                jac[(n_th + r, c)] = ds_dva[(i, k)].im;
            }
            for (c, &k) in types.pq.iter().enumerate() {
                jac[(n_th + r, n_th + c)] = ds_dvm[(i, k)].im;
            }
        }
        let rhs = -DVector::from_vec(f.clone());
        let dx = solver.solve(jac, &rhs).ok_or(Error::Singular)?;
        for (r, &i) in pvpq.iter().enumerate() {
            va[i] += opts.damping * dx[r];
        }
        for (r, &i) in types.pq.iter().enumerate() {
            vm[i] += opts.damping * dx[n_th + r];
        }
        iterations += 1;
        f = mismatch(&vm, &va);
        err = norm_inf(&f);
        if !err.is_finite() {
            break;
        }
    }
    let converged = err <= opts.tol;

    // back-compute slack and regulated-bus injections
    let v: Vec<Complex64> = vm.iter().zip(&va).map(|(&m, &a)| Complex64::from_polar(m, a)).collect();
    let s = injections(&y, &v);
    let mut p_g = vec![0.0; case.gens.len()];
    let mut q_g = vec![0.0; case.gens.len()];
    let mut q_limit_violations = Vec::new();
    for (k, g) in case.gens.iter().enumerate() {
        if !g.in_service {
            continue;
        }
        let i = idx[&g.bus];
        let bus = &case.buses[i];
        p_g[k] = if i == types.slack { s[i].re + bus.p_d / base } else { g.p_g / base };
        q_g[k] = if i == types.slack || types.pv.contains(&i) { s[i].im + bus.q_d / base } else { g.q_g / base };
        let q_mvar = q_g[k] * base;
        if q_mvar > g.q_max + 1e-9 || q_mvar < g.q_min - 1e-9 {
            q_limit_violations.push(g.bus);
        }
    }

    Ok(PowerFlowSolution {
        v: vm,
        theta: va,
        p_g,
        q_g,
        converged,
        iterations,
        max_mismatch: err,
        q_limit_violations,
    })
}

/// Partial derivatives of bus injections with respect to voltage angles
/// and magnitudes, dense.
pub fn power_derivatives(y: &AdmittanceMatrix, v: &[Complex64]) -> (DMatrix<Complex64>, DMatrix<Complex64>) {
    let n = v.len();
    let ibus = y.mul(v);
    let j = Complex64::new(0.0, 1.0);
    let mut ds_dva = DMatrix::zeros(n, n);
    let mut ds_dvm = DMatrix::zeros(n, n);
    for i in 0..n {
        let vn_i = v[i] / v[i].norm();
        for &(k, yik) in y.row(i) {
            let vn_k = v[k] / v[k].norm();
            // diag(V) conj(Y diag(Vnorm))
            ds_dvm[(i, k)] += v[i] * (yik * vn_k).conj();
            // -j diag(V) conj(Y diag(V))
            ds_dva[(i, k)] -= j * v[i] * (yik * v[k]).conj();
        }
        ds_dvm[(i, i)] += ibus[i].conj() * vn_i;
        ds_dva[(i, i)] += j * v[i] * ibus[i].conj();
    }
    (ds_dva, ds_dvm)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFlow {
    pub branch: usize,
    pub s_from: Complex64,
    pub s_to: Complex64,
}

impl LineFlow {
    pub fn p_from(&self) -> f64 {
        self.s_from.re
    }
    pub fn q_from(&self) -> f64 {
        self.s_from.im
    }
    pub fn p_to(&self) -> f64 {
        self.s_to.re
    }
    pub fn q_to(&self) -> f64 {
        self.s_to.im
    }
}

/// Both-end complex flows of every in-service branch, pu.
#[derive(Debug, Clone, PartialEq)]
pub struct LineFlowSet {
    pub flows: Vec<LineFlow>,
}

impl LineFlowSet {
    pub fn get(&self, branch: usize) -> Option<&LineFlow> {
        self.flows.iter().find(|f| f.branch == branch)
    }

    /// Total series and charging losses.
    pub fn losses(&self) -> Complex64 {
        self.flows.iter().map(|f| f.s_from + f.s_to).sum()
    }
}

/// Branch flows `S_ij = V_i·conj(y_ii·V_i + y_ij·V_j)` for the tap/shift
/// pi model.
pub fn line_flows(case: &NetworkCase, v: &[f64], theta: &[f64]) -> LineFlowSet {
    let idx = case.index_map();
    let phasor = |i: usize| Complex64::from_polar(v[i], theta[i]);
    let flows = case
        .in_service_branches()
        .map(|(k, br)| {
            let a = BranchAdmittance::of(br);
            let vf = phasor(idx[&br.from]);
            let vt = phasor(idx[&br.to]);
            LineFlow {
                branch: k,
                s_from: vf * (a.yff * vf + a.yft * vt).conj(),
                s_to: vt * (a.ytf * vf + a.ytt * vt).conj(),
            }
        })
        .collect();
    LineFlowSet { flows }
}

/// Steady-state frequency estimate from the change in total generation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyProxy {
    /// Hz.
    pub f: f64,
    /// Post minus pre total generation, pu.
    pub delta_p: f64,
    /// pu per Hz.
    pub beta: f64,
}

pub const DEFAULT_BETA: f64 = 10.0;
pub const NOMINAL_FREQUENCY: f64 = 60.0;

/// `f = f0 − (post − pre)/beta`: extra generation pulls frequency down.
pub fn frequency_proxy(pre_gen_total: f64, post_gen_total: f64, beta: f64, f0: f64) -> Result<FrequencyProxy> {
    if !(beta > 0.0) {
        return Err(Error::InvalidArgument(format!("frequency response constant {beta} must be positive")));
    }
    let delta_p = post_gen_total - pre_gen_total;
    Ok(FrequencyProxy {
        f: f0 - delta_p / beta,
        delta_p,
        beta,
    })
}

/// CSV export: one row per bus with voltage and summed generation in MW/MVAr.
pub fn write_solution_csv<W: Write>(case: &NetworkCase, sol: &PowerFlowSolution, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["bus", "v", "theta_deg", "p_g", "q_g"])?;
    for (i, bus) in case.buses.iter().enumerate() {
        let (mut p, mut q) = (0.0, 0.0);
        for (k, g) in case.gens.iter().enumerate() {
            if g.bus == bus.id {
                p += sol.p_g[k] * case.base_mva;
                q += sol.q_g[k] * case.base_mva;
            }
        }
        w.write_record([
            bus.id.to_string(),
            sol.v[i].to_string(),
            sol.theta[i].to_degrees().to_string(),
            p.to_string(),
            q.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netcase::{case14, parse_case};

    #[test]
    fn base_case_connected() {
        assert!(check_connectivity(&case14()).connected);
    }

    #[test]
    fn islands_found() {
        let c = case14();
        let k78 = c.branch_index(7, 8).unwrap();
        let r = check_connectivity(&c.apply_outage(&[k78]).unwrap());
        assert_eq!(r.islands, vec![vec![8]]);
        let k12 = c.branch_index(1, 2).unwrap();
        let k15 = c.branch_index(1, 5).unwrap();
        let r = check_connectivity(&c.apply_outage(&[k12, k15]).unwrap());
        assert_eq!(r.islands, vec![vec![1]]);
    }

    #[test]
    fn frequency_proxy_arithmetic() {
        assert_eq!(frequency_proxy(2.0, 2.0, 10.0, 60.0).unwrap().f, 60.0);
        assert!((frequency_proxy(2.0, 2.1, 10.0, 60.0).unwrap().f - 59.99).abs() < 1e-12);
        assert!((frequency_proxy(2.0, 1.8, 10.0, 60.0).unwrap().f - 60.02).abs() < 1e-12);
        assert!(frequency_proxy(2.0, 1.8, 0.0, 60.0).is_err());
    }

    #[test]
    fn zero_injection_fixed_point() {
        let mut c = case14();
        for b in &mut c.buses {
            b.p_d = 0.0;
            b.q_d = 0.0;
            b.shunt_b = 0.0;
        }
        for g in &mut c.gens {
            g.p_g = 0.0;
            g.v_set = 1.0;
        }
        for br in &mut c.branches {
            br.b_ch = 0.0;
            br.tap = 1.0;
        }
        let sol = solve_power_flow(&c, Start::Flat, &PfOptions::default()).unwrap();
        assert!(sol.converged);
        assert_eq!(sol.iterations, 0);
        assert!(sol.v.iter().all(|&v| v == 1.0));
        assert!(sol.theta.iter().all(|&t| t == 0.0));
        let flows = line_flows(&c, &sol.v, &sol.theta);
        assert!(flows.flows.iter().all(|f| f.s_from.norm() == 0.0 && f.s_to.norm() == 0.0));
    }

    #[test]
    fn warm_start_needs_no_iterations() {
        let c = case14();
        let sol = solve_power_flow(&c, Start::Flat, &PfOptions::default()).unwrap();
        assert!(sol.converged);
        let again = solve_power_flow(&c, Start::Warm(&sol), &PfOptions::default()).unwrap();
        assert!(again.converged);
        assert!(again.iterations <= 1);
    }

    #[test]
    fn rejects_islanded_case() {
        let c = case14();
        let k = c.branch_index(7, 8).unwrap();
        let err = solve_power_flow(&c.apply_outage(&[k]).unwrap(), Start::Flat, &PfOptions::default());
        assert!(matches!(err, Err(Error::Disconnected(_))));
    }

    #[test]
    fn csv_export_has_row_per_bus() {
        let c = parse_case(crate::netcase::CASE14).unwrap();
        let sol = solve_power_flow(&c, Start::Flat, &PfOptions::default()).unwrap();
        let mut buf = Vec::new();
        write_solution_csv(&c, &sol, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 15);
        assert!(text.starts_with("bus,v,theta_deg,p_g,q_g"));
    }
}
