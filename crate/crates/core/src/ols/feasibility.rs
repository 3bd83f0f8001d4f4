//! Independent feasibility audit of a shedding solution.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{OlsProblem, OlsSolution, ShedMode};
use crate::netcase::build_admittance;
use crate::powerflow::{injections, line_flows};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    RealBalance,
    ReactiveBalance,
    Voltage,
    Angle,
    SlackAngle,
    RealGeneration,
    ReactiveGeneration,
    RealShed,
    ReactiveShed,
    PowerFactor,
    LineLimit,
}

/// One violated constraint; `amount` is in per-unit (radians for angles).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    /// Bus id, generator bus id, or branch index.
    pub element: u32,
    pub amount: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    pub violations: Vec<Violation>,
}

impl ViolationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn worst(&self) -> f64 {
        self.violations.iter().map(|v| v.amount).fold(0.0, f64::max)
    }

    fn check(&mut self, kind: ViolationKind, element: u32, amount: f64, tol: f64) {
        if amount > tol || amount.is_nan() {
            self.violations.push(Violation { kind, element, amount });
        }
    }

    fn range(&mut self, kind: ViolationKind, element: u32, x: f64, lo: f64, hi: f64, tol: f64) {
        self.check(kind, element, (lo - x).max(x - hi).max(0.0), tol);
    }
}

impl fmt::Display for ViolationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "feasible");
        }
        for v in &self.violations {
            writeln!(f, "{:?} at {}: {:.3e}", v.kind, v.element, v.amount)?;
        }
        Ok(())
    }
}

/// A constraint active at a solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Binding {
    VoltageLower(u32),
    VoltageUpper(u32),
    RealGenLower(usize),
    RealGenUpper(usize),
    ReactiveGenLower(usize),
    ReactiveGenUpper(usize),
    ShedUpper(u32),
    ShedActive(u32),
    LineLimit(usize),
}

/// Recompute every constraint of `problem` from the physical quantities in
/// `sol` and list those violated by more than `tol`.
pub fn verify_feasibility(sol: &OlsSolution, problem: &OlsProblem, tol: f64) -> ViolationReport {
    let case = &problem.case;
    let base = case.base_mva;
    let mut rep = ViolationReport::default();
    let y = build_admittance(case);
    let v: Vec<Complex64> = sol
        .v
        .iter()
        .zip(&sol.theta)
        .map(|(&m, &a)| Complex64::from_polar(m, a))
        .collect();
    let s = injections(&y, &v);
    let mut net = vec![Complex64::new(0.0, 0.0); case.n_bus()];
    for (gk, g) in case.gens.iter().enumerate() {
        if g.in_service {
            let i = case.bus_index(g.bus).expect("validated case");
            net[i] += Complex64::new(sol.p_g[gk], sol.q_g[gk]) / base;
        }
    }
    for (i, bus) in case.buses.iter().enumerate() {
        net[i] -= Complex64::new(bus.p_d - sol.p_s[i], bus.q_d - sol.q_s[i]) / base;
        let mis = s[i] - net[i];
        rep.check(ViolationKind::RealBalance, bus.id, mis.re.abs(), tol);
        rep.check(ViolationKind::ReactiveBalance, bus.id, mis.im.abs(), tol);
        rep.range(ViolationKind::Voltage, bus.id, sol.v[i], bus.v_min, bus.v_max, tol);
        if i == case.slack_index() {
            rep.check(ViolationKind::SlackAngle, bus.id, sol.theta[i].abs(), tol);
        } else {
            let ab = problem.options.angle_bound;
            rep.range(ViolationKind::Angle, bus.id, sol.theta[i], -ab, ab, tol);
        }
        let cap = if bus.p_d > 0.0 && problem.options.allow_shedding {
            problem.costs.cap(bus.id)
        } else {
            0.0
        };
        rep.range(ViolationKind::RealShed, bus.id, sol.p_s[i] / base, 0.0, cap * bus.p_d / base, tol);
        let qc = cap * bus.q_d / base;
        rep.range(ViolationKind::ReactiveShed, bus.id, sol.q_s[i] / base, qc.min(0.0), qc.max(0.0), tol);
        if problem.costs.mode == ShedMode::ConstantPowerFactor && bus.p_d > 0.0 {
            let gap = sol.q_s[i] - bus.q_d / bus.p_d * sol.p_s[i];
            rep.check(ViolationKind::PowerFactor, bus.id, gap.abs() / base, tol);
        }
    }
    for (gk, g) in case.gens.iter().enumerate() {
        let (p, q) = if g.in_service { (g.p_min..=g.p_max, g.q_min..=g.q_max) } else { (0.0..=0.0, 0.0..=0.0) };
        rep.range(ViolationKind::RealGeneration, g.bus, sol.p_g[gk] / base, p.start() / base, p.end() / base, tol);
        rep.range(ViolationKind::ReactiveGeneration, g.bus, sol.q_g[gk] / base, q.start() / base, q.end() / base, tol);
    }
    for f in line_flows(case, &sol.v, &sol.theta).flows {
        let br = &case.branches[f.branch];
        if br.is_rated() {
            let limit = br.s_rating / base;
            let worst = f.s_from.norm().max(f.s_to.norm());
            rep.check(ViolationKind::LineLimit, f.branch as u32, worst - limit, tol);
        }
    }
    rep
}

impl OlsProblem {
    /// Constraints within `tol` (pu) of their limits, plus loads with
    /// shedding above `tol`.
    pub fn binding_constraints(&self, sol: &OlsSolution, tol: f64) -> Vec<Binding> {
        let case = &self.case;
        let base = case.base_mva;
        let mut out = Vec::new();
        for (i, bus) in case.buses.iter().enumerate() {
            if sol.v[i] - bus.v_min <= tol {
                out.push(Binding::VoltageLower(bus.id));
            }
            if bus.v_max - sol.v[i] <= tol {
                out.push(Binding::VoltageUpper(bus.id));
            }
            if bus.p_d > 0.0 && self.options.allow_shedding {
                let ub = self.costs.cap(bus.id) * bus.p_d / base;
                if sol.p_s[i] / base > tol {
                    out.push(Binding::ShedActive(bus.id));
                }
                if ub - sol.p_s[i] / base <= tol {
                    out.push(Binding::ShedUpper(bus.id));
                }
            }
        }
        for (gk, g) in case.gens.iter().enumerate().filter(|(_, g)| g.in_service) {
            let (p, q) = (sol.p_g[gk], sol.q_g[gk]);
            if (p - g.p_min) / base <= tol {
                out.push(Binding::RealGenLower(gk));
            }
            if (g.p_max - p) / base <= tol {
                out.push(Binding::RealGenUpper(gk));
            }
            if (q - g.q_min) / base <= tol {
                out.push(Binding::ReactiveGenLower(gk));
            }
            if (g.q_max - q) / base <= tol {
                out.push(Binding::ReactiveGenUpper(gk));
            }
        }
        for f in line_flows(case, &sol.v, &sol.theta).flows {
            let br = &case.branches[f.branch];
            if br.is_rated() && br.s_rating / base - f.s_from.norm().max(f.s_to.norm()) <= tol {
                out.push(Binding::LineLimit(f.branch));
            }
        }
        out
    }
}
