//! AC optimal load shedding: generation plus per-bus shedding dispatch
//! under AC power balance, voltage, angle, generator and line limits.
//!
//! Decision vector (all per-unit), in order:
//! `[V (N), θ (N), p_g (gens), q_g (gens), p_s (loads), q_s (loads)]`.
//! Loads are the buses with positive real demand. The slack angle is
//! pinned to zero through equal bounds.

mod derivs;
mod feasibility;
pub mod ipm;
pub mod oracle;

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use self::derivs::{branch_end, injection, Coupling, Part, VarMap};
pub use self::feasibility::{verify_feasibility, Binding, Violation, ViolationKind, ViolationReport};
pub use self::ipm::{IpmOptions, IpmStatus, KktResiduals};
pub use self::oracle::{brute_force_ols, OracleOptions};
use crate::error::{Error, Result};
use crate::netcase::{build_admittance, BranchAdmittance, NetworkCase};
use crate::powerflow::{check_connectivity, PowerFlowSolution};

/// How reactive shedding relates to real shedding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShedMode {
    /// `q_s/p_s = q_d/p_d` at every load: a shed block keeps the load's
    /// power factor.
    #[default]
    ConstantPowerFactor,
    /// `p_s` and `q_s` are separate decisions.
    Independent,
}

/// Shed cost of one load, `linear·p + quadratic·p²` with p in MW, $/h.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShedCost {
    pub linear: f64,
    pub quadratic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostConfig {
    /// Per-bus real shed cost, keyed by bus id.
    pub shed: BTreeMap<u32, ShedCost>,
    /// Reactive shed cost on |q_s| in MVAr: linear and quadratic coefficients.
    pub q_linear: f64,
    pub q_quadratic: f64,
    /// Largest sheddable fraction of a bus's demand; absent buses use 1.0.
    pub shed_cap: BTreeMap<u32, f64>,
    /// Required ratio between the marginal shed cost at zero shedding and
    /// the largest generator marginal cost.
    pub dominance: f64,
    pub mode: ShedMode,
}

pub const DEFAULT_DOMINANCE: f64 = 100.0;
/// Reactive shed costs relative to the smallest real shed costs.
pub const REACTIVE_COST_RATIO: f64 = 1e-3;

/// Largest generator marginal cost at maximum output, $/MWh.
pub fn max_gen_marginal(case: &NetworkCase) -> f64 {
    case.active_gens()
        .map(|g| g.marginal_cost(g.p_max))
        .fold(0.0, f64::max)
}

impl CostConfig {
    /// Default costs: every load gets linear cost `dominance·M` and
    /// quadratic cost `dominance·M / min p_d`, where M is the largest
    /// generator marginal cost at maximum output.
    pub fn for_case(case: &NetworkCase) -> Self {
        let m = max_gen_marginal(case).max(1.0);
        let min_pd = case
            .buses
            .iter()
            .filter(|b| b.p_d > 0.0)
            .map(|b| b.p_d)
            .fold(f64::INFINITY, f64::min);
        let min_pd = if min_pd.is_finite() { min_pd } else { 1.0 };
        let cost = ShedCost {
            linear: DEFAULT_DOMINANCE * m,
            quadratic: DEFAULT_DOMINANCE * m / min_pd,
        };
        let shed = case.buses.iter().filter(|b| b.p_d > 0.0).map(|b| (b.id, cost)).collect();
        CostConfig {
            shed,
            q_linear: REACTIVE_COST_RATIO * cost.linear,
            q_quadratic: REACTIVE_COST_RATIO * cost.quadratic,
            shed_cap: BTreeMap::new(),
            dominance: DEFAULT_DOMINANCE,
            mode: ShedMode::default(),
        }
    }

    pub fn with_mode(mut self, mode: ShedMode) -> Self {
        self.mode = mode;
        self
    }

    /// All shed costs (real and reactive) multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for c in out.shed.values_mut() {
            c.linear *= factor;
            c.quadratic *= factor;
        }
        out.q_linear *= factor;
        out.q_quadratic *= factor;
        out
    }

    pub fn shed_cost(&self, bus: u32) -> Option<ShedCost> {
        self.shed.get(&bus).copied()
    }

    pub fn cap(&self, bus: u32) -> f64 {
        self.shed_cap.get(&bus).copied().unwrap_or(1.0)
    }

    /// Shedding must be far costlier than generation at every load: the
    /// marginal shed cost at zero shedding has to reach `dominance` times
    /// the largest generator marginal cost.
    pub fn check_ordering(&self, case: &NetworkCase) -> Result<()> {
        let required = self.dominance * max_gen_marginal(case);
        for bus in case.buses.iter().filter(|b| b.p_d > 0.0) {
            let c = self
                .shed_cost(bus.id)
                .ok_or_else(|| Error::InvalidArgument(format!("no shed cost for load bus {}", bus.id)))?;
            if !(c.quadratic > 0.0) || c.linear < required {
                return Err(Error::CostOrdering {
                    bus: bus.id,
                    shed: c.linear,
                    required,
                });
            }
            let cap = self.cap(bus.id);
            if !(0.0..=1.0).contains(&cap) {
                return Err(Error::InvalidArgument(format!("shed cap {cap} at bus {} outside [0, 1]", bus.id)));
            }
        }
        if !(self.q_quadratic > 0.0) || self.q_linear < 0.0 {
            return Err(Error::InvalidArgument("reactive shed cost must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemOptions {
    /// Symmetric bound on every non-slack angle, radians.
    pub angle_bound: f64,
    /// False drops the shedding variables (a plain AC-OPF).
    pub allow_shedding: bool,
}

impl Default for ProblemOptions {
    fn default() -> Self {
        Self {
            angle_bound: 0.6,
            allow_shedding: true,
        }
    }
}

#[derive(Debug, Clone)]
struct LineLimit {
    from: usize,
    to: usize,
    adm: BranchAdmittance,
    /// Squared rating, pu².
    smax2: f64,
}

/// An assembled shedding problem ready for [`solve_ols`].
#[derive(Debug, Clone)]
pub struct OlsProblem {
    pub case: NetworkCase,
    pub costs: CostConfig,
    pub options: ProblemOptions,
    n_bus: usize,
    slack: usize,
    /// Indices into `case.gens` of in-service units.
    gens: Vec<usize>,
    gen_bus: Vec<usize>,
    /// Bus positions of the loads.
    loads: Vec<usize>,
    rows: Vec<Vec<Coupling>>,
    limits: Vec<LineLimit>,
    obj_scale: f64,
}

/// Variable layout shared with the derivative helpers.
struct Map {
    n: usize,
}

impl VarMap for Map {
    fn vm(&self, bus: usize) -> usize {
        bus
    }
    fn va(&self, bus: usize) -> usize {
        self.n + bus
    }
}

/// Assemble with default problem options.
pub fn assemble_ols(case: &NetworkCase, costs: &CostConfig) -> Result<OlsProblem> {
    assemble_ols_with(case, costs, ProblemOptions::default())
}

pub fn assemble_ols_with(case: &NetworkCase, costs: &CostConfig, options: ProblemOptions) -> Result<OlsProblem> {
    let conn = check_connectivity(case);
    if !conn.connected {
        return Err(Error::Disconnected(conn.islands.concat()));
    }
    if options.allow_shedding {
        costs.check_ordering(case)?;
    }
    if !(options.angle_bound > 0.0) {
        return Err(Error::InvalidArgument("angle bound must be positive".into()));
    }
    let n = case.n_bus();
    let idx = case.index_map();
    let y = build_admittance(case);
    let rows = (0..n)
        .map(|i| {
            y.row(i)
                .iter()
                .map(|&(k, v)| Coupling { a: i, b: k, g: v.re, bs: v.im })
                .collect()
        })
        .collect();
    let gens: Vec<usize> = case
        .gens
        .iter()
        .enumerate()
        .filter(|(_, g)| g.in_service)
        .map(|(k, _)| k)
        .collect();
    let gen_bus = gens.iter().map(|&k| idx[&case.gens[k].bus]).collect();
    let loads = if options.allow_shedding {
        (0..n).filter(|&i| case.buses[i].p_d > 0.0).collect()
    } else {
        Vec::new()
    };
    let base = case.base_mva;
    let limits = case
        .in_service_branches()
        .filter(|(_, br)| br.is_rated())
        .map(|(_, br)| LineLimit {
            from: idx[&br.from],
            to: idx[&br.to],
            adm: BranchAdmittance::of(br),
            smax2: (br.s_rating / base).powi(2),
        })
        .collect();
    // scale the objective so the largest first-order cost sensitivity is O(1)
    let mut top = max_gen_marginal(case).max(1.0);
    if options.allow_shedding {
        top = costs.shed.values().map(|c| c.linear).fold(top, f64::max);
    }
    Ok(OlsProblem {
        case: case.clone(),
        costs: costs.clone(),
        options,
        n_bus: n,
        slack: case.slack_index(),
        gens,
        gen_bus,
        loads,
        rows,
        limits,
        obj_scale: 1.0 / (top * base),
    })
}

impl OlsProblem {
    pub fn n_gens(&self) -> usize {
        self.gens.len()
    }

    pub fn n_loads(&self) -> usize {
        self.loads.len()
    }

    /// Bus ids of the loads, in variable order.
    pub fn load_buses(&self) -> Vec<u32> {
        self.loads.iter().map(|&i| self.case.buses[i].id).collect()
    }

    pub fn n_line_limits(&self) -> usize {
        self.limits.len()
    }

    fn vm(&self, i: usize) -> usize {
        i
    }
    fn va(&self, i: usize) -> usize {
        self.n_bus + i
    }
    fn pg(&self, k: usize) -> usize {
        2 * self.n_bus + k
    }
    fn qg(&self, k: usize) -> usize {
        2 * self.n_bus + self.gens.len() + k
    }
    fn ps(&self, l: usize) -> usize {
        2 * self.n_bus + 2 * self.gens.len() + l
    }
    fn qs(&self, l: usize) -> usize {
        2 * self.n_bus + 2 * self.gens.len() + self.loads.len() + l
    }

    fn map(&self) -> Map {
        Map { n: self.n_bus }
    }

    fn base(&self) -> f64 {
        self.case.base_mva
    }

    /// Sign of the reactive shedding range at load `l`.
    fn q_sign(&self, l: usize) -> f64 {
        if self.case.buses[self.loads[l]].q_d < 0.0 {
            -1.0
        } else {
            1.0
        }
    }

    fn pf_ratio(&self, l: usize) -> f64 {
        let b = &self.case.buses[self.loads[l]];
        b.q_d / b.p_d
    }

    fn shed_costs(&self, l: usize) -> ShedCost {
        self.costs
            .shed_cost(self.case.buses[self.loads[l]].id)
            .expect("checked at assembly")
    }

    fn constant_pf(&self) -> bool {
        self.costs.mode == ShedMode::ConstantPowerFactor
    }

    /// Physical objective in $/h.
    pub fn cost(&self, x: &[f64]) -> f64 {
        let base = self.base();
        let mut f = 0.0;
        for (k, &gk) in self.gens.iter().enumerate() {
            f += self.case.gens[gk].cost(x[self.pg(k)] * base);
        }
        for l in 0..self.loads.len() {
            let c = self.shed_costs(l);
            let p = x[self.ps(l)] * base;
            let q = self.q_sign(l) * x[self.qs(l)] * base;
            f += c.linear * p + c.quadratic * p * p + self.costs.q_linear * q + self.costs.q_quadratic * q * q;
        }
        f
    }

    /// Split a decision vector into an [`OlsSolution`] skeleton.
    fn unpack(&self, x: &[f64]) -> OlsSolution {
        let n = self.n_bus;
        let base = self.base();
        let mut p_s = vec![0.0; n];
        let mut q_s = vec![0.0; n];
        for (l, &i) in self.loads.iter().enumerate() {
            p_s[i] = x[self.ps(l)] * base;
            q_s[i] = x[self.qs(l)] * base;
        }
        let mut p_g = vec![0.0; self.case.gens.len()];
        let mut q_g = vec![0.0; self.case.gens.len()];
        for (k, &gk) in self.gens.iter().enumerate() {
            p_g[gk] = x[self.pg(k)] * base;
            q_g[gk] = x[self.qg(k)] * base;
        }
        OlsSolution {
            p_s,
            q_s,
            p_g,
            q_g,
            v: x[..n].to_vec(),
            theta: x[n..2 * n].to_vec(),
            objective: self.cost(x),
            status: IpmStatus::MaxIter,
            kkt: KktResiduals::default(),
            iterations: 0,
        }
    }

    /// Decision vector of a solution (inverse of the unpacking).
    pub fn pack(&self, sol: &OlsSolution) -> Vec<f64> {
        let base = self.base();
        let mut x = vec![0.0; self.n_vars_total()];
        for i in 0..self.n_bus {
            x[self.vm(i)] = sol.v[i];
            x[self.va(i)] = sol.theta[i];
        }
        for (k, &gk) in self.gens.iter().enumerate() {
            x[self.pg(k)] = sol.p_g[gk] / base;
            x[self.qg(k)] = sol.q_g[gk] / base;
        }
        for (l, &i) in self.loads.iter().enumerate() {
            x[self.ps(l)] = sol.p_s[i] / base;
            x[self.qs(l)] = sol.q_s[i] / base;
        }
        x
    }

    fn n_vars_total(&self) -> usize {
        2 * self.n_bus + 2 * self.gens.len() + 2 * self.loads.len()
    }

    /// Bounds on `(p_s, q_s)` of load `l`, pu.
    fn shed_bounds(&self, l: usize) -> ((f64, f64), (f64, f64)) {
        let bus = &self.case.buses[self.loads[l]];
        let cap = self.costs.cap(bus.id);
        let base = self.base();
        let p = (0.0, cap * bus.p_d / base);
        let qc = cap * bus.q_d / base;
        let q = if self.constant_pf() {
            (f64::NEG_INFINITY, f64::INFINITY)
        } else {
            (qc.min(0.0), qc.max(0.0))
        };
        (p, q)
    }

    fn initial_point(&self, warm: Option<&WarmStart>) -> Vec<f64> {
        let n = self.n_bus;
        let mut x = vec![0.0; self.n_vars_total()];
        match warm {
            Some(w) if w.v.len() == n => {
                x[..n].copy_from_slice(&w.v);
                x[n..2 * n].copy_from_slice(&w.theta);
            }
            _ => x[..n].iter_mut().for_each(|v| *v = 1.0),
        }
        for (k, &gk) in self.gens.iter().enumerate() {
            let g = &self.case.gens[gk];
            x[self.pg(k)] = 0.5 * (g.p_min + g.p_max) / self.base();
            x[self.qg(k)] = 0.5 * (g.q_min + g.q_max) / self.base();
        }
        for l in 0..self.loads.len() {
            let ((_, pu), (ql, qu)) = self.shed_bounds(l);
            x[self.ps(l)] = 0.01 * pu;
            x[self.qs(l)] = if self.constant_pf() {
                self.pf_ratio(l) * x[self.ps(l)]
            } else {
                0.01 * if self.q_sign(l) < 0.0 { ql } else { qu }
            };
        }
        x
    }

    fn balance(&self, x: &[f64], part: Part) -> Vec<derivs::Injection> {
        let (vm, va) = (&x[..self.n_bus], &x[self.n_bus..2 * self.n_bus]);
        (0..self.n_bus)
            .map(|i| injection(&self.map(), &self.rows[i], part, vm, va))
            .collect()
    }

    /// Flows `(P, Q)` at one end of a limited branch as local expressions.
    fn limit_end(&self, lim: &LineLimit, from_side: bool, x: &[f64]) -> (derivs::Local, derivs::Local) {
        let (vm, va) = (&x[..self.n_bus], &x[self.n_bus..2 * self.n_bus]);
        let (a, b, yself, ymut) = if from_side {
            (lim.from, lim.to, lim.adm.yff, lim.adm.yft)
        } else {
            (lim.to, lim.from, lim.adm.ytt, lim.adm.ytf)
        };
        let selfc = Coupling { a, b: a, g: yself.re, bs: yself.im };
        let mutual = Coupling { a, b, g: ymut.re, bs: ymut.im };
        (
            branch_end(&self.map(), selfc, mutual, Part::Real, vm, va),
            branch_end(&self.map(), selfc, mutual, Part::Reactive, vm, va),
        )
    }
}

impl ipm::Nlp for OlsProblem {
    fn n_vars(&self) -> usize {
        self.n_vars_total()
    }

    fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let nv = self.n_vars_total();
        let mut lb = vec![f64::NEG_INFINITY; nv];
        let mut ub = vec![f64::INFINITY; nv];
        let base = self.base();
        for (i, bus) in self.case.buses.iter().enumerate() {
            lb[self.vm(i)] = bus.v_min;
            ub[self.vm(i)] = bus.v_max;
            if i == self.slack {
                lb[self.va(i)] = 0.0;
                ub[self.va(i)] = 0.0;
            } else {
                lb[self.va(i)] = -self.options.angle_bound;
                ub[self.va(i)] = self.options.angle_bound;
            }
        }
        for (k, &gk) in self.gens.iter().enumerate() {
            let g = &self.case.gens[gk];
            lb[self.pg(k)] = g.p_min / base;
            ub[self.pg(k)] = g.p_max / base;
            lb[self.qg(k)] = g.q_min / base;
            ub[self.qg(k)] = g.q_max / base;
        }
        for l in 0..self.loads.len() {
            let ((pl, pu), (ql, qu)) = self.shed_bounds(l);
            lb[self.ps(l)] = pl;
            ub[self.ps(l)] = pu;
            lb[self.qs(l)] = ql;
            ub[self.qs(l)] = qu;
        }
        (lb, ub)
    }

    fn objective(&self, x: &[f64]) -> f64 {
        self.cost(x) * self.obj_scale
    }

    fn gradient(&self, x: &[f64]) -> DVector<f64> {
        let base = self.base();
        let s = self.obj_scale;
        let mut g = DVector::zeros(self.n_vars_total());
        for (k, &gk) in self.gens.iter().enumerate() {
            g[self.pg(k)] = s * base * self.case.gens[gk].marginal_cost(x[self.pg(k)] * base);
        }
        for l in 0..self.loads.len() {
            let c = self.shed_costs(l);
            let sign = self.q_sign(l);
            g[self.ps(l)] = s * base * (c.linear + 2.0 * c.quadratic * x[self.ps(l)] * base);
            g[self.qs(l)] = s * base * sign * (self.costs.q_linear + 2.0 * self.costs.q_quadratic * sign * x[self.qs(l)] * base);
        }
        g
    }

    fn equalities(&self, x: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.n_bus;
        let nv = self.n_vars_total();
        let n_pf = if self.constant_pf() { self.loads.len() } else { 0 };
        let mut g = DVector::zeros(2 * n + n_pf);
        let mut jac = DMatrix::zeros(2 * n + n_pf, nv);
        let base = self.base();
        for (row0, part) in [(0, Part::Real), (n, Part::Reactive)] {
            for (i, inj) in self.balance(x, part).into_iter().enumerate() {
                let bus = &self.case.buses[i];
                let demand = if part == Part::Real { bus.p_d } else { bus.q_d };
                g[row0 + i] = inj.value + demand / base;
                for (k, v) in inj.grad {
                    jac[(row0 + i, k)] += v;
                }
            }
            for (k, &bi) in self.gen_bus.iter().enumerate() {
                let var = if part == Part::Real { self.pg(k) } else { self.qg(k) };
                g[row0 + bi] -= x[var];
                jac[(row0 + bi, var)] -= 1.0;
            }
            for (l, &bi) in self.loads.iter().enumerate() {
                let var = if part == Part::Real { self.ps(l) } else { self.qs(l) };
                g[row0 + bi] -= x[var];
                jac[(row0 + bi, var)] -= 1.0;
            }
        }
        if self.constant_pf() {
            for l in 0..self.loads.len() {
                let r = 2 * n + l;
                let ratio = self.pf_ratio(l);
                g[r] = x[self.qs(l)] - ratio * x[self.ps(l)];
                jac[(r, self.qs(l))] = 1.0;
                jac[(r, self.ps(l))] = -ratio;
            }
        }
        (g, jac)
    }

    fn inequalities(&self, x: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
        let m = 2 * self.limits.len();
        let mut h = DVector::zeros(m);
        let mut jac = DMatrix::zeros(m, self.n_vars_total());
        for (r, lim) in self.limits.iter().enumerate() {
            for (side, from_side) in [(0, true), (1, false)] {
                let row = 2 * r + side;
                let (p, q) = self.limit_end(lim, from_side, x);
                h[row] = p.value * p.value + q.value * q.value - lim.smax2;
                for k in 0..4 {
                    jac[(row, p.vars[k])] += 2.0 * (p.value * p.grad[k] + q.value * q.grad[k]);
                }
            }
        }
        (h, jac)
    }

    fn lagrangian_hessian(&self, x: &[f64], lam: &[f64], mu: &[f64]) -> DMatrix<f64> {
        let n = self.n_bus;
        let nv = self.n_vars_total();
        let base = self.base();
        let s = self.obj_scale;
        let mut hess = DMatrix::zeros(nv, nv);
        for (k, &gk) in self.gens.iter().enumerate() {
            hess[(self.pg(k), self.pg(k))] += s * 2.0 * self.case.gens[gk].cost_a * base * base;
        }
        for l in 0..self.loads.len() {
            let c = self.shed_costs(l);
            hess[(self.ps(l), self.ps(l))] += s * 2.0 * c.quadratic * base * base;
            hess[(self.qs(l), self.qs(l))] += s * 2.0 * self.costs.q_quadratic * base * base;
        }
        for (row0, part) in [(0, Part::Real), (n, Part::Reactive)] {
            for (i, inj) in self.balance(x, part).into_iter().enumerate() {
                let w = lam[row0 + i];
                if w == 0.0 {
                    continue;
                }
                for (a, b, v) in inj.hess {
                    hess[(a, b)] += w * v;
                }
            }
        }
        for (r, lim) in self.limits.iter().enumerate() {
            for (side, from_side) in [(0, true), (1, false)] {
                let w = mu[2 * r + side];
                if w == 0.0 {
                    continue;
                }
                let (p, q) = self.limit_end(lim, from_side, x);
                for a in 0..4 {
                    for b in 0..4 {
                        let v = 2.0
                            * (p.grad[a] * p.grad[b] + p.value * p.hess[a][b] + q.grad[a] * q.grad[b] + q.value * q.hess[a][b]);
                        hess[(p.vars[a], p.vars[b])] += w * v;
                    }
                }
            }
        }
        hess
    }
}

/// Starting voltages for the interior-point iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct WarmStart {
    pub v: Vec<f64>,
    pub theta: Vec<f64>,
}

impl From<&PowerFlowSolution> for WarmStart {
    fn from(pf: &PowerFlowSolution) -> Self {
        WarmStart {
            v: pf.v.clone(),
            theta: pf.theta.clone(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SolverOptions {
    pub ipm: IpmOptions,
    /// Voltage start; flat when absent.
    pub warm_start: Option<WarmStart>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsSolution {
    /// Real shedding per bus, MW (zero at non-load buses).
    pub p_s: Vec<f64>,
    /// Reactive shedding per bus, MVAr.
    pub q_s: Vec<f64>,
    /// Dispatch per generator (aligned with `case.gens`), MW.
    pub p_g: Vec<f64>,
    /// MVAr.
    pub q_g: Vec<f64>,
    pub v: Vec<f64>,
    /// Radians.
    pub theta: Vec<f64>,
    /// $/h.
    pub objective: f64,
    pub status: IpmStatus,
    pub kkt: KktResiduals,
    pub iterations: usize,
}

impl OlsSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == IpmStatus::Optimal
    }

    pub fn total_p_shed(&self) -> f64 {
        self.p_s.iter().sum()
    }

    pub fn total_q_shed(&self) -> f64 {
        self.q_s.iter().map(|q| q.abs()).sum()
    }

    /// CSV rows `bus,p_s_mw,q_s_mvar,v,theta_deg`.
    pub fn write_csv<W: std::io::Write>(&self, case: &NetworkCase, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["bus", "p_s_mw", "q_s_mvar", "v", "theta_deg"])?;
        for (i, bus) in case.buses.iter().enumerate() {
            w.write_record([
                bus.id.to_string(),
                self.p_s[i].to_string(),
                self.q_s[i].to_string(),
                self.v[i].to_string(),
                self.theta[i].to_degrees().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// JSON summary with objective, status, KKT residuals and iterations.
    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "objective": self.objective,
            "status": self.status,
            "kkt": self.kkt,
            "iterations": self.iterations,
            "total_p_shed_mw": self.total_p_shed(),
        })
    }
}

pub fn solve_ols(problem: &OlsProblem, opts: &SolverOptions) -> OlsSolution {
    let x0 = problem.initial_point(opts.warm_start.as_ref());
    let r = ipm::solve(problem, &x0, &opts.ipm);
    let mut sol = problem.unpack(&r.x);
    sol.status = r.status;
    sol.kkt = r.kkt;
    sol.iterations = r.iterations;
    sol
}
