//! Exhaustive-grid reference solver for very small shedding problems.
//!
//! Every combination of the free decisions (non-slack real dispatch,
//! regulated voltages, shedding) is placed on a grid, the remaining state
//! is found by a tight Newton power flow, and the cheapest point passing
//! the feasibility audit wins. An optional zoom search then polishes the
//! winner on successively finer local grids.

use super::{verify_feasibility, IpmStatus, KktResiduals, OlsProblem, OlsSolution, ShedMode};
use crate::error::{Error, Result};
use crate::netcase::BusKind;
use crate::powerflow::{solve_power_flow, PfOptions, Start};

const ZOOM_RADIUS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    /// Grid spacing, pu.
    pub step: f64,
    /// Polish the best grid point until the step falls below this (pu);
    /// `None` returns the plain grid optimum.
    pub refine_to: Option<f64>,
    /// Feasibility tolerance, pu.
    pub tol: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            step: 0.01,
            refine_to: None,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Decision {
    /// Real output of generator `k` (index into `case.gens`).
    RealGen(usize),
    /// Voltage setpoint of generator `k`'s bus.
    Voltage(usize),
    /// Real shedding at bus position `i`.
    RealShed(usize),
    ReactiveShed(usize),
}

struct Grid<'a> {
    problem: &'a OlsProblem,
    decisions: Vec<Decision>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    tol: f64,
}

impl Grid<'_> {
    /// Feasible solution at decision point `d`, or `None`.
    fn evaluate(&self, d: &[f64]) -> Option<OlsSolution> {
        if d.iter().zip(&self.lo).zip(&self.hi).any(|((&x, &l), &h)| x < l - 1e-12 || x > h + 1e-12) {
            return None;
        }
        let p = self.problem;
        let base = p.case.base_mva;
        let mut case = p.case.clone();
        let n = case.n_bus();
        let mut p_s = vec![0.0; n];
        let mut q_s = vec![0.0; n];
        for (dec, &val) in self.decisions.iter().zip(d) {
            match *dec {
                Decision::RealGen(k) => case.gens[k].p_g = val * base,
                Decision::Voltage(k) => case.gens[k].v_set = val,
                Decision::RealShed(i) => p_s[i] = val * base,
                Decision::ReactiveShed(i) => q_s[i] = val * base,
            }
        }
        for (i, bus) in case.buses.iter_mut().enumerate() {
            if p.costs.mode == ShedMode::ConstantPowerFactor && bus.p_d > 0.0 {
                q_s[i] = bus.q_d / bus.p_d * p_s[i];
            }
            bus.p_d -= p_s[i];
            bus.q_d -= q_s[i];
        }
        let opts = PfOptions {
            tol: 1e-12,
            max_iter: 30,
            damping: 1.0,
        };
        let pf = solve_power_flow(&case, Start::Flat, &opts).ok()?;
        if !pf.converged {
            return None;
        }
        let sol = OlsSolution {
            p_s,
            q_s,
            p_g: pf.p_g.iter().map(|x| x * base).collect(),
            q_g: pf.q_g.iter().map(|x| x * base).collect(),
            v: pf.v,
            theta: pf.theta,
            objective: 0.0,
            status: IpmStatus::Optimal,
            kkt: KktResiduals::default(),
            iterations: 0,
        };
        if !verify_feasibility(&sol, p, self.tol).is_empty() {
            return None;
        }
        let objective = p.cost(&p.pack(&sol));
        Some(OlsSolution { objective, ..sol })
    }
}

fn axis(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    let mut pts: Vec<f64> = (0..=n).map(|k| lo + k as f64 * step).collect();
    if hi - pts[n] > 1e-12 {
        pts.push(hi);
    }
    pts
}

/// Cheapest feasible grid point of a problem with at most three buses and
/// two generator buses. Fails with [`Error::NoFeasiblePoint`] when no grid
/// point is feasible.
pub fn brute_force_ols(problem: &OlsProblem, opts: &OracleOptions) -> Result<OlsSolution> {
    let case = &problem.case;
    if case.n_bus() > 3 {
        return Err(Error::InvalidArgument(format!("brute force needs at most 3 buses, got {}", case.n_bus())));
    }
    let gen_buses: std::collections::BTreeSet<u32> = case.active_gens().map(|g| g.bus).collect();
    if gen_buses.len() > 2 {
        return Err(Error::InvalidArgument("brute force needs at most 2 generator buses".into()));
    }
    if !(opts.step > 0.0) {
        return Err(Error::InvalidArgument("grid step must be positive".into()));
    }
    let base = case.base_mva;
    let slack = case.slack_index();
    let mut decisions = Vec::new();
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    for (k, g) in case.gens.iter().enumerate().filter(|(_, g)| g.in_service) {
        let i = case.bus_index(g.bus).expect("validated case");
        let bus = &case.buses[i];
        if i != slack {
            if bus.kind != BusKind::Pv {
                return Err(Error::InvalidArgument(format!("generator bus {} must be PV", g.bus)));
            }
            decisions.push(Decision::RealGen(k));
            lo.push(g.p_min / base);
            hi.push(g.p_max / base);
        }
        if bus.v_max > bus.v_min {
            decisions.push(Decision::Voltage(k));
            lo.push(bus.v_min);
            hi.push(bus.v_max);
        }
    }
    if problem.options.allow_shedding {
        for (i, bus) in case.buses.iter().enumerate().filter(|(_, b)| b.p_d > 0.0) {
            let cap = problem.costs.cap(bus.id);
            decisions.push(Decision::RealShed(i));
            lo.push(0.0);
            hi.push(cap * bus.p_d / base);
            if problem.costs.mode == ShedMode::Independent && bus.q_d != 0.0 {
                let qc = cap * bus.q_d / base;
                decisions.push(Decision::ReactiveShed(i));
                lo.push(qc.min(0.0));
                hi.push(qc.max(0.0));
            }
        }
    }
    let grid = Grid {
        problem,
        decisions,
        lo,
        hi,
        tol: opts.tol,
    };
    let axes: Vec<Vec<f64>> = grid.lo.iter().zip(&grid.hi).map(|(&l, &h)| axis(l, h, opts.step)).collect();

    let mut best: Option<(Vec<f64>, OlsSolution)> = None;
    let mut point = vec![0usize; axes.len()];
    loop {
        let d: Vec<f64> = point.iter().zip(&axes).map(|(&k, a)| a[k]).collect();
        if let Some(sol) = grid.evaluate(&d) {
            if best.as_ref().is_none_or(|(_, b)| sol.objective < b.objective) {
                best = Some((d, sol));
            }
        }
        // odometer increment
        let mut c = 0;
        while c < point.len() {
            point[c] += 1;
            if point[c] < axes[c].len() {
                break;
            }
            point[c] = 0;
            c += 1;
        }
        if c == point.len() {
            break;
        }
    }
    let (mut d, mut sol) = best.ok_or(Error::NoFeasiblePoint)?;

    if let Some(target) = opts.refine_to {
        // zoom: a dense local grid around the incumbent, halving the
        // spacing each round, so narrow feasible wedges are still entered
        let dim = d.len();
        let width = 2 * ZOOM_RADIUS + 1;
        let mut h = opts.step / 2.0;
        while h >= target {
            let center = d.clone();
            for code in 0..width.pow(dim as u32) {
                let mut trial = center.clone();
                let mut c = code;
                for t in trial.iter_mut() {
                    *t += h * ((c % width) as f64 - ZOOM_RADIUS as f64);
                    c /= width;
                }
                if let Some(s) = grid.evaluate(&trial) {
                    if s.objective < sol.objective {
                        d = trial;
                        sol = s;
                    }
                }
            }
            h /= 2.0;
        }
    }
    Ok(sol)
}
