//! Network model: case-file parsing, canonical serialization, outages and
//! load scaling.
//!
//! Records keep the units of the matrix-table case format (MW, MVAr,
//! degrees). Conversion to per-unit happens where the math needs it.

mod admittance;
mod parse;

pub use admittance::{build_admittance, AdmittanceMatrix, BranchAdmittance};
pub use parse::{parse_case, serialize_case};

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};

/// The IEEE 14-bus test system in matrix-table format.
pub const CASE14: &str = include_str!("../../data/case14.m");

/// Parse the bundled IEEE 14-bus case.
pub fn case14() -> NetworkCase {
    parse_case(CASE14).expect("bundled case14 is valid")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum BusKind {
    Pq,
    Pv,
    Slack,
}

impl BusKind {
    pub fn code(self) -> u8 {
        match self {
            BusKind::Pq => 1,
            BusKind::Pv => 2,
            BusKind::Slack => 3,
        }
    }

    pub fn from_code(code: i64) -> Option<Self> {
        match code {
            1 => Some(BusKind::Pq),
            2 => Some(BusKind::Pv),
            3 => Some(BusKind::Slack),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BusRecord {
    pub id: u32,
    pub kind: BusKind,
    /// Real demand, MW.
    pub p_d: f64,
    /// Reactive demand, MVAr.
    pub q_d: f64,
    /// Shunt conductance, MW consumed at 1.0 pu voltage.
    pub shunt_g: f64,
    /// Shunt susceptance, MVAr injected at 1.0 pu voltage.
    pub shunt_b: f64,
    pub area: u32,
    /// Voltage magnitude (pu); initial guess for PQ buses.
    pub vm: f64,
    /// Voltage angle (degrees).
    pub va: f64,
    pub base_kv: f64,
    pub zone: u32,
    pub v_max: f64,
    pub v_min: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenRecord {
    pub bus: u32,
    /// Scheduled real output, MW.
    pub p_g: f64,
    pub q_g: f64,
    pub q_max: f64,
    pub q_min: f64,
    /// Voltage setpoint, pu.
    pub v_set: f64,
    pub m_base: f64,
    pub in_service: bool,
    pub p_max: f64,
    pub p_min: f64,
    /// Quadratic cost `cost_a·P² + cost_b·P + cost_c` with P in MW, $/h.
    pub cost_a: f64,
    pub cost_b: f64,
    pub cost_c: f64,
}

impl GenRecord {
    /// Marginal cost at `p_mw`, $/MWh.
    pub fn marginal_cost(&self, p_mw: f64) -> f64 {
        2.0 * self.cost_a * p_mw + self.cost_b
    }

    pub fn cost(&self, p_mw: f64) -> f64 {
        self.cost_a * p_mw * p_mw + self.cost_b * p_mw + self.cost_c
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchRecord {
    pub from: u32,
    pub to: u32,
    pub r: f64,
    pub x: f64,
    /// Total line charging susceptance, pu.
    pub b_ch: f64,
    /// Long-term apparent power rating, MVA. Zero means unlimited.
    pub s_rating: f64,
    pub rate_b: f64,
    pub rate_c: f64,
    /// Off-nominal turns ratio; 1.0 for lines.
    pub tap: f64,
    /// Phase shift, degrees.
    pub shift: f64,
    pub in_service: bool,
    pub ang_min: f64,
    pub ang_max: f64,
}

impl BranchRecord {
    pub fn shift_rad(&self) -> f64 {
        self.shift.to_radians()
    }

    pub fn is_rated(&self) -> bool {
        self.s_rating > 0.0
    }
}

/// A validated power-system case.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkCase {
    pub base_mva: f64,
    pub buses: Vec<BusRecord>,
    pub gens: Vec<GenRecord>,
    pub branches: Vec<BranchRecord>,
}

impl NetworkCase {
    /// Assemble a case from records, aggregating co-located generators and
    /// checking every structural invariant.
    pub fn new(
        base_mva: f64,
        buses: Vec<BusRecord>,
        gens: Vec<GenRecord>,
        branches: Vec<BranchRecord>,
    ) -> Result<Self> {
        let case = NetworkCase {
            base_mva,
            buses,
            gens: aggregate_generators(gens)?,
            branches,
        };
        case.validate()?;
        Ok(case)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.base_mva > 0.0) {
            return Err(Error::InvalidCase(format!("base MVA {} must be positive", self.base_mva)));
        }
        if self.buses.is_empty() {
            return Err(Error::InvalidCase("case has no buses".into()));
        }
        let mut ids = BTreeSet::new();
        for b in &self.buses {
            if !ids.insert(b.id) {
                return Err(Error::InvalidCase(format!("duplicate bus id {}", b.id)));
            }
            if !(b.v_min > 0.0) || b.v_min > b.v_max {
                return Err(Error::InvalidCase(format!(
                    "bus {}: voltage bounds [{}, {}] invalid",
                    b.id, b.v_min, b.v_max
                )));
            }
        }
        let slacks = self.buses.iter().filter(|b| b.kind == BusKind::Slack).count();
        match slacks {
            0 => return Err(Error::NoSlack),
            1 => {}
            n => return Err(Error::MultipleSlack(n)),
        }
        for g in &self.gens {
            if !ids.contains(&g.bus) {
                return Err(Error::UnknownBus(g.bus));
            }
            if g.p_min > g.p_max || g.q_min > g.q_max {
                return Err(Error::InvalidCase(format!("generator at bus {}: inverted bounds", g.bus)));
            }
        }
        for (k, br) in self.branches.iter().enumerate() {
            for end in [br.from, br.to] {
                if !ids.contains(&end) {
                    return Err(Error::UnknownBus(end));
                }
            }
            if br.from == br.to {
                return Err(Error::InvalidCase(format!("branch {k} is a self-loop at bus {}", br.from)));
            }
            if br.r == 0.0 && br.x == 0.0 {
                return Err(Error::InvalidCase(format!("branch {k} has zero impedance")));
            }
            if !(br.tap > 0.0) {
                return Err(Error::InvalidCase(format!("branch {k}: tap ratio must be positive")));
            }
            if br.s_rating < 0.0 {
                return Err(Error::InvalidCase(format!("branch {k}: negative rating")));
            }
        }
        Ok(())
    }

    pub fn n_bus(&self) -> usize {
        self.buses.len()
    }

    /// Position of bus `id` in `buses`.
    pub fn bus_index(&self, id: u32) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }

    pub fn bus(&self, id: u32) -> Option<&BusRecord> {
        self.buses.iter().find(|b| b.id == id)
    }

    pub fn slack_index(&self) -> usize {
        self.buses
            .iter()
            .position(|b| b.kind == BusKind::Slack)
            .expect("validated case has a slack bus")
    }

    /// Map from bus id to position, for bulk lookups.
    pub fn index_map(&self) -> BTreeMap<u32, usize> {
        self.buses.iter().enumerate().map(|(i, b)| (b.id, i)).collect()
    }

    /// In-service generators.
    pub fn active_gens(&self) -> impl Iterator<Item = &GenRecord> {
        self.gens.iter().filter(|g| g.in_service)
    }

    pub fn in_service_branches(&self) -> impl Iterator<Item = (usize, &BranchRecord)> {
        self.branches.iter().enumerate().filter(|(_, b)| b.in_service)
    }

    pub fn n_in_service(&self) -> usize {
        self.branches.iter().filter(|b| b.in_service).count()
    }

    /// Index of the first branch joining `a` and `b` in either orientation.
    pub fn branch_index(&self, a: u32, b: u32) -> Option<usize> {
        self.branches
            .iter()
            .position(|br| (br.from == a && br.to == b) || (br.from == b && br.to == a))
    }

    /// Branches of the case touching bus `id`, ascending index, regardless of status.
    pub fn incident_branches(&self, id: u32) -> Vec<usize> {
        self.branches
            .iter()
            .enumerate()
            .filter(|(_, br)| br.from == id || br.to == id)
            .map(|(k, _)| k)
            .collect()
    }

    pub fn total_p_demand(&self) -> f64 {
        self.buses.iter().map(|b| b.p_d).sum()
    }

    pub fn total_q_demand(&self) -> f64 {
        self.buses.iter().map(|b| b.q_d).sum()
    }

    /// Copy with the listed branches switched out of service.
    pub fn apply_outage(&self, lines: &[usize]) -> Result<NetworkCase> {
        let mut out = self.clone();
        let set: BTreeSet<usize> = lines.iter().copied().collect();
        for &k in &set {
            let count = self.branches.len();
            let br = out.branches.get_mut(k).ok_or(Error::UnknownBranch { index: k, count })?;
            if !br.in_service {
                return Err(Error::InvalidArgument(format!("branch {k} is already out of service")));
            }
            br.in_service = false;
        }
        Ok(out)
    }

    /// Copy with each listed bus's demand multiplied by its factor. Buses
    /// absent from the map keep their demand.
    pub fn scale_loads(&self, factors: &BTreeMap<u32, f64>) -> Result<NetworkCase> {
        let mut out = self.clone();
        for (&id, &f) in factors {
            if !(f > 0.0) || !f.is_finite() {
                return Err(Error::InvalidArgument(format!("load factor {f} at bus {id} must be positive")));
            }
            let bus = out
                .buses
                .iter_mut()
                .find(|b| b.id == id)
                .ok_or(Error::UnknownBus(id))?;
            bus.p_d *= f;
            bus.q_d *= f;
        }
        Ok(out)
    }

    /// Uniformly scale all demand so that total real demand equals `total_mw`.
    pub fn scale_to_total(&self, total_mw: f64) -> Result<NetworkCase> {
        let current = self.total_p_demand();
        if !(current > 0.0) {
            return Err(Error::InvalidArgument("case has no real demand to scale".into()));
        }
        let f = total_mw / current;
        let factors = self.buses.iter().map(|b| (b.id, f)).collect();
        self.scale_loads(&factors)
    }
}

/// Merge generators sharing a bus. Units on one bus must have identical
/// cost curves; the merged unit sums bounds and schedules and carries the
/// cost of `k` identical units sharing output equally.
fn aggregate_generators(gens: Vec<GenRecord>) -> Result<Vec<GenRecord>> {
    let mut merged: Vec<(GenRecord, usize)> = Vec::with_capacity(gens.len());
    for g in gens {
        if !g.in_service {
            merged.push((g, 0));
            continue;
        }
        match merged.iter_mut().find(|(m, _)| m.in_service && m.bus == g.bus) {
            None => merged.push((g, 1)),
            Some((m, count)) => {
                let base_a = m.cost_a * *count as f64;
                let base_c = m.cost_c / *count as f64;
                if base_a != g.cost_a || m.cost_b != g.cost_b || base_c != g.cost_c {
                    return Err(Error::InvalidCase(format!(
                        "generators at bus {} have different costs and cannot be aggregated",
                        g.bus
                    )));
                }
                *count += 1;
                let k = *count as f64;
                m.p_g += g.p_g;
                m.q_g += g.q_g;
                m.p_max += g.p_max;
                m.p_min += g.p_min;
                m.q_max += g.q_max;
                m.q_min += g.q_min;
                m.m_base += g.m_base;
                m.cost_a = g.cost_a / k;
                m.cost_c = g.cost_c * k;
            }
        }
    }
    Ok(merged.into_iter().map(|(g, _)| g).collect())
}
