//! Contingency enumeration, load sampling, and per-sample power flow +
//! shedding solves.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::netcase::{serialize_case, NetworkCase};
use crate::ols::{
    assemble_ols, assemble_ols_with, solve_ols, CostConfig, IpmOptions, OlsSolution, ProblemOptions, SolverOptions,
    WarmStart,
};
use crate::powerflow::{
    check_connectivity, frequency_proxy, solve_power_flow, FrequencyProxy, PfOptions, PowerFlowSolution, Start,
    DEFAULT_BETA, NOMINAL_FREQUENCY,
};
use crate::rng::{sub_seed, SeededRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioClass {
    Single,
    Double,
    Triple,
}

impl ScenarioClass {
    pub fn of_size(k: usize) -> Option<Self> {
        match k {
            1 => Some(Self::Single),
            2 => Some(Self::Double),
            3 => Some(Self::Triple),
            _ => None,
        }
    }
}

/// A set of simultaneously outaged branches (indices into `case.branches`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: usize,
    pub outaged: Vec<usize>,
    pub klass: ScenarioClass,
}

impl Scenario {
    /// Outage of 1 to 3 distinct branches; indices are sorted.
    pub fn new(id: usize, mut outaged: Vec<usize>) -> Result<Self> {
        outaged.sort_unstable();
        outaged.dedup();
        let klass = ScenarioClass::of_size(outaged.len())
            .ok_or_else(|| Error::InvalidArgument(format!("outage of {} branches", outaged.len())))?;
        Ok(Self { id, outaged, klass })
    }

    /// Outage given by bus pairs such as `[(2, 3), (4, 9)]`.
    pub fn from_pairs(id: usize, case: &NetworkCase, pairs: &[(u32, u32)]) -> Result<Self> {
        let outaged = pairs
            .iter()
            .map(|&(a, b)| {
                case.branch_index(a, b)
                    .ok_or_else(|| Error::InvalidArgument(format!("no branch {a}-{b}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(id, outaged)
    }

    /// Human-readable outage, e.g. `2-3+4-9`.
    pub fn label(&self, case: &NetworkCase) -> String {
        self.outaged
            .iter()
            .map(|&k| {
                let br = &case.branches[k];
                format!("{}-{}", br.from, br.to)
            })
            .collect::<Vec<_>>()
            .join("+")
    }
}

fn keeps_connected(case: &NetworkCase, outaged: &[usize]) -> bool {
    case.apply_outage(outaged)
        .map(|c| check_connectivity(&c).connected)
        .unwrap_or(false)
}

/// Every single in-service branch outage that keeps the grid connected.
pub fn enumerate_n1(case: &NetworkCase) -> Vec<Scenario> {
    case.in_service_branches()
        .map(|(k, _)| k)
        .filter(|&k| keeps_connected(case, &[k]))
        .enumerate()
        .map(|(id, k)| Scenario {
            id,
            outaged: vec![k],
            klass: ScenarioClass::Single,
        })
        .collect()
}

/// Result of [`sample_nk`]; `shortfall` is set when fewer valid outage
/// sets exist than were requested.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioDraw {
    pub scenarios: Vec<Scenario>,
    pub shortfall: bool,
}

fn k_subsets(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    fn rec(items: &[usize], k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..items.len() {
            cur.push(items[i]);
            rec(items, k, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(items, k, 0, &mut Vec::with_capacity(k), &mut out);
    out
}

/// `count` distinct connectivity-preserving outages of `k` branches, drawn
/// uniformly without replacement. Scenario ids start at `first_id`.
pub fn sample_nk(case: &NetworkCase, k: usize, count: usize, seed: u64, first_id: usize) -> Result<ScenarioDraw> {
    if !(2..=3).contains(&k) {
        return Err(Error::InvalidArgument(format!("k must be 2 or 3, got {k}")));
    }
    if count == 0 {
        return Ok(ScenarioDraw {
            scenarios: Vec::new(),
            shortfall: false,
        });
    }
    let branches: Vec<usize> = case.in_service_branches().map(|(i, _)| i).collect();
    let mut valid: Vec<Vec<usize>> = k_subsets(&branches, k)
        .into_iter()
        .filter(|s| keeps_connected(case, s))
        .collect();
    let shortfall = valid.len() < count;
    let mut rng = SeededRng::new(sub_seed(seed, "nk", k as u64));
    rng.shuffle(&mut valid);
    valid.truncate(count);
    let scenarios = valid
        .into_iter()
        .enumerate()
        .map(|(i, outaged)| Scenario {
            id: first_id + i,
            outaged,
            klass: ScenarioClass::of_size(k).expect("k checked"),
        })
        .collect();
    Ok(ScenarioDraw { scenarios, shortfall })
}

/// Per-bus demand multipliers, aligned with `case.buses`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadSample {
    pub multipliers: Vec<f64>,
}

impl LoadSample {
    pub fn unit(n_bus: usize) -> Self {
        Self {
            multipliers: vec![1.0; n_bus],
        }
    }

    /// Copy of `case` with both real and reactive demand scaled per bus.
    pub fn apply(&self, case: &NetworkCase) -> Result<NetworkCase> {
        if self.multipliers.len() != case.n_bus() {
            return Err(Error::Dimension {
                expected: case.n_bus(),
                got: self.multipliers.len(),
            });
        }
        let factors: BTreeMap<u32, f64> = case
            .buses
            .iter()
            .zip(&self.multipliers)
            .map(|(b, &m)| (b.id, m))
            .collect();
        case.scale_loads(&factors)
    }
}

/// `count` samples of independent uniform per-bus multipliers in `[lo, hi]`.
pub fn sample_loads(case: &NetworkCase, lo: f64, hi: f64, count: usize, seed: u64) -> Result<Vec<LoadSample>> {
    if !(lo > 0.0) || !(lo <= hi) || !hi.is_finite() {
        return Err(Error::InvalidArgument(format!("invalid load range [{lo}, {hi}]")));
    }
    let mut rng = SeededRng::new(seed);
    Ok((0..count)
        .map(|_| LoadSample {
            multipliers: (0..case.n_bus()).map(|_| rng.uniform_in(lo, hi)).collect(),
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordStatus {
    Ok,
    PfDiverged,
    OlsFailed,
}

impl RecordStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Ok => "ok",
            Self::PfDiverged => "pf_diverged",
            Self::OlsFailed => "ols_failed",
        }
    }
}

impl fmt::Display for RecordStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for RecordStatus {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ok" => Ok(Self::Ok),
            "pf_diverged" => Ok(Self::PfDiverged),
            "ols_failed" => Ok(Self::OlsFailed),
            other => Err(Error::Schema(format!("unknown status {other:?}"))),
        }
    }
}

/// Everything computed for one (scenario, load sample) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub scenario: usize,
    pub sample: usize,
    pub load: LoadSample,
    /// Load-sampled network with the outage applied.
    pub post_case: NetworkCase,
    pub pf_post: Option<PowerFlowSolution>,
    pub freq: Option<FrequencyProxy>,
    pub ols: Option<OlsSolution>,
    pub status: RecordStatus,
}

#[derive(Debug, Clone)]
pub struct DatasetOptions {
    pub lo: f64,
    pub hi: f64,
    pub pf: PfOptions,
    pub ipm: IpmOptions,
    pub costs: CostConfig,
    pub beta: f64,
    pub f0: f64,
}

impl DatasetOptions {
    /// Defaults for a stressed base case: loads in [0.95, 1.05], costs
    /// derived from the base.
    pub fn for_case(case: &NetworkCase) -> Self {
        Self {
            lo: 0.95,
            hi: 1.05,
            pf: PfOptions::default(),
            ipm: IpmOptions::default(),
            costs: CostConfig::for_case(case),
            beta: DEFAULT_BETA,
            f0: NOMINAL_FREQUENCY,
        }
    }
}

/// Operating point before any outage: generator schedules and regulated
/// voltages taken from the economic dispatch (AC-OPF) of the intact base.
pub fn dispatch_base(case: &NetworkCase, opts: &DatasetOptions) -> Result<NetworkCase> {
    let problem = assemble_ols_with(
        case,
        &opts.costs,
        ProblemOptions {
            allow_shedding: false,
            ..ProblemOptions::default()
        },
    )?;
    let sol = solve_ols(&problem, &SolverOptions { ipm: opts.ipm, warm_start: None });
    if !sol.is_optimal() {
        return Err(Error::NonOptimal(format!("base dispatch: {}", sol.status)));
    }
    let mut out = case.clone();
    for (k, g) in out.gens.iter_mut().enumerate() {
        if g.in_service {
            let i = case.bus_index(g.bus).expect("validated case");
            g.p_g = sol.p_g[k];
            g.q_g = sol.q_g[k];
            g.v_set = sol.v[i];
        }
    }
    Ok(out)
}

fn power_flow_with_retry(case: &NetworkCase, warm: Option<&PowerFlowSolution>, opts: &PfOptions) -> Option<PowerFlowSolution> {
    let start = warm.map_or(Start::Flat, Start::Warm);
    if let Ok(pf) = solve_power_flow(case, start, opts) {
        if pf.converged {
            return Some(pf);
        }
    }
    let damped = PfOptions {
        damping: 0.5,
        max_iter: opts.max_iter * 2,
        ..*opts
    };
    solve_power_flow(case, Start::Flat, &damped).ok().filter(|pf| pf.converged)
}

fn run_sample(base: &NetworkCase, scenario: &Scenario, sample: usize, load: LoadSample, opts: &DatasetOptions) -> SampleRecord {
    let intact = load.apply(base).expect("multipliers match the case");
    let post_case = intact.apply_outage(&scenario.outaged).expect("scenario built for this case");
    let mut rec = SampleRecord {
        scenario: scenario.id,
        sample,
        load,
        post_case,
        pf_post: None,
        freq: None,
        ols: None,
        status: RecordStatus::PfDiverged,
    };
    let Some(pre) = power_flow_with_retry(&intact, None, &opts.pf) else {
        return rec;
    };
    let Some(post) = power_flow_with_retry(&rec.post_case, Some(&pre), &opts.pf) else {
        return rec;
    };
    let freq = frequency_proxy(pre.total_p_gen(), post.total_p_gen(), opts.beta, opts.f0).ok();
    rec.freq = freq;
    rec.status = RecordStatus::OlsFailed;
    if let Ok(problem) = assemble_ols(&rec.post_case, &opts.costs) {
        let mut sol = solve_ols(
            &problem,
            &SolverOptions {
                ipm: opts.ipm,
                warm_start: Some(WarmStart::from(&post)),
            },
        );
        if !sol.is_optimal() {
            sol = solve_ols(&problem, &SolverOptions { ipm: opts.ipm, warm_start: None });
        }
        if sol.is_optimal() && rec.freq.is_some() {
            rec.status = RecordStatus::Ok;
        }
        rec.ols = Some(sol);
    }
    rec.pf_post = Some(post);
    rec
}

/// Counts and provenance of one dataset generation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub case_digest: String,
    pub scenarios: usize,
    pub per_scenario: usize,
    pub records: usize,
    pub ok: usize,
    pub pf_diverged: usize,
    pub ols_failed: usize,
}

/// SHA-256 of the canonical text serialization of a case.
pub fn case_digest(case: &NetworkCase) -> String {
    hex::encode(Sha256::digest(serialize_case(case).as_bytes()))
}

#[derive(Debug, Clone)]
pub struct GeneratedDataset {
    pub records: Vec<SampleRecord>,
    pub manifest: Manifest,
}

/// Solve every (scenario, load sample) pair of a stressed base case whose
/// generator schedules are already set (see [`dispatch_base`]). Records
/// come back scenario-major, sample-minor; failures are kept with their
/// status.
pub fn generate_dataset(
    base: &NetworkCase,
    scenarios: &[Scenario],
    per_scenario: usize,
    seed: u64,
    opts: &DatasetOptions,
) -> Result<GeneratedDataset> {
    for s in scenarios {
        if !keeps_connected(base, &s.outaged) {
            return Err(Error::InvalidArgument(format!("scenario {} islands the grid", s.id)));
        }
    }
    let mut work = Vec::with_capacity(scenarios.len() * per_scenario);
    for s in scenarios {
        let loads = sample_loads(base, opts.lo, opts.hi, per_scenario, sub_seed(seed, "loads", s.id as u64))?;
        work.extend(loads.into_iter().enumerate().map(|(i, l)| (s, i, l)));
    }
    let records: Vec<SampleRecord> = work
        .into_par_iter()
        .map(|(s, i, l)| run_sample(base, s, i, l, opts))
        .collect();
    let tally = |st: RecordStatus| records.iter().filter(|r| r.status == st).count();
    let manifest = Manifest {
        seed,
        case_digest: case_digest(base),
        scenarios: scenarios.len(),
        per_scenario,
        records: records.len(),
        ok: tally(RecordStatus::Ok),
        pf_diverged: tally(RecordStatus::PfDiverged),
        ols_failed: tally(RecordStatus::OlsFailed),
    };
    Ok(GeneratedDataset { records, manifest })
}
