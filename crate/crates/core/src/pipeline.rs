//! End-to-end run: stress the case, generate single- and multiple-outage
//! datasets, train one model per (load center, outage class), evaluate,
//! and write every artifact under one output directory.
//!
//! Output layout:
//!
//! ```text
//! <out>/manifest.json
//! <out>/<class>/scenarios.json
//! <out>/<class>/bus<id>.csv
//! <out>/<class>/bus<id>_model.json
//! <out>/<class>/bus<id>_train.json
//! <out>/<class>/report.json, report.txt
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::eval::{evaluate, EvalReport, DEFAULT_EPS_MW};
use crate::features::{build_dataset, Dataset};
use crate::mlp::{init_mlp, save_model, split_indices, train, MlpModel, TrainConfig, TrainReport};
use crate::netcase::{case14, parse_case, NetworkCase};
use crate::ols::{CostConfig, IpmOptions, ShedMode};
use crate::powerflow::{PfOptions, DEFAULT_BETA, NOMINAL_FREQUENCY};
use crate::rng::sub_seed;
use crate::scenarios::{dispatch_base, enumerate_n1, generate_dataset, sample_nk, DatasetOptions, Manifest, Scenario};

/// Environment variable naming a default configuration file.
pub const CONFIG_ENV: &str = "OLS_CONFIG";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CaseSection {
    /// MATPOWER case file; the bundled IEEE 14-bus case when absent.
    pub path: Option<PathBuf>,
    /// Total real demand after uniform stressing, MW.
    pub total_mw: f64,
}

impl Default for CaseSection {
    fn default() -> Self {
        Self {
            path: None,
            total_mw: 469.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingSection {
    pub load_lo: f64,
    pub load_hi: f64,
    pub per_scenario: usize,
    /// Include every connectivity-preserving single outage.
    pub single: bool,
    /// Number of random double and triple outages.
    pub double: usize,
    pub triple: usize,
}

impl Default for SamplingSection {
    fn default() -> Self {
        Self {
            load_lo: 0.95,
            load_hi: 1.05,
            per_scenario: 1000,
            single: true,
            double: 0,
            triple: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub pf_tol: f64,
    pub pf_max_iter: usize,
    pub ipm_tol: f64,
    pub ipm_max_iter: usize,
    pub shed_mode: ShedMode,
    pub dominance: f64,
    pub beta: f64,
    pub f0: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        let pf = PfOptions::default();
        let ipm = IpmOptions::default();
        Self {
            pf_tol: pf.tol,
            pf_max_iter: pf.max_iter,
            ipm_tol: ipm.feas_tol,
            ipm_max_iter: ipm.max_iter,
            shed_mode: ShedMode::default(),
            dominance: crate::ols::DEFAULT_DOMINANCE,
            beta: DEFAULT_BETA,
            f0: NOMINAL_FREQUENCY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub buses: Vec<u32>,
    pub eps_mw: f64,
    pub case: CaseSection,
    pub sampling: SamplingSection,
    pub solver: SolverSection,
    pub train: TrainConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 2022,
            output_dir: PathBuf::from("ols-out"),
            buses: vec![6, 9, 10, 11, 13, 14],
            eps_mw: DEFAULT_EPS_MW,
            case: CaseSection::default(),
            sampling: SamplingSection::default(),
            solver: SolverSection::default(),
            train: TrainConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::InvalidArgument(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.sampling;
        if !(s.load_lo > 0.0 && s.load_lo <= s.load_hi) {
            return Err(Error::InvalidArgument(format!("load range [{}, {}]", s.load_lo, s.load_hi)));
        }
        if !(self.case.total_mw > 0.0) {
            return Err(Error::InvalidArgument("total load must be positive".into()));
        }
        if !(self.solver.pf_tol > 0.0 && self.solver.ipm_tol > 0.0 && self.solver.beta > 0.0) {
            return Err(Error::InvalidArgument("solver tolerances and beta must be positive".into()));
        }
        if !(self.eps_mw >= 0.0) {
            return Err(Error::InvalidArgument("eps must be non-negative".into()));
        }
        self.train.validate()
    }

    pub fn load_case(&self) -> Result<NetworkCase> {
        match &self.case.path {
            Some(p) => parse_case(&fs::read_to_string(p)?),
            None => Ok(case14()),
        }
    }

    pub fn pf_options(&self) -> PfOptions {
        PfOptions {
            tol: self.solver.pf_tol,
            max_iter: self.solver.pf_max_iter,
            ..PfOptions::default()
        }
    }

    pub fn ipm_options(&self) -> IpmOptions {
        IpmOptions {
            max_iter: self.solver.ipm_max_iter,
            ..IpmOptions::default().with_tol(self.solver.ipm_tol)
        }
    }

    pub fn costs(&self, case: &NetworkCase) -> CostConfig {
        let mut c = CostConfig::for_case(case).with_mode(self.solver.shed_mode);
        let factor = self.solver.dominance / c.dominance;
        if factor != 1.0 {
            c = c.scaled(factor);
            c.dominance = self.solver.dominance;
        }
        c
    }

    /// Stressed base case with its pre-contingency dispatch, and the
    /// dataset options that go with it.
    pub fn prepare(&self) -> Result<(NetworkCase, DatasetOptions)> {
        let stressed = self.load_case()?.scale_to_total(self.case.total_mw)?;
        let opts = DatasetOptions {
            lo: self.sampling.load_lo,
            hi: self.sampling.load_hi,
            pf: self.pf_options(),
            ipm: self.ipm_options(),
            costs: self.costs(&stressed),
            beta: self.solver.beta,
            f0: self.solver.f0,
        };
        let base = dispatch_base(&stressed, &opts)?;
        Ok((base, opts))
    }

    /// Outage groups: `single` (every N-1) and `multiple` (sampled N-2/N-3).
    pub fn scenario_groups(&self, base: &NetworkCase) -> Result<Vec<(String, Vec<Scenario>)>> {
        let mut groups = Vec::new();
        if self.sampling.single {
            groups.push(("single".to_string(), enumerate_n1(base)));
        }
        let mut multi = Vec::new();
        for (k, count) in [(2, self.sampling.double), (3, self.sampling.triple)] {
            if count > 0 {
                let draw = sample_nk(base, k, count, sub_seed(self.seed, "scenarios", k as u64), multi.len())?;
                if draw.shortfall {
                    log::warn!("only {} valid {k}-branch outages available", draw.scenarios.len());
                }
                multi.extend(draw.scenarios);
            }
        }
        if !multi.is_empty() {
            groups.push(("multiple".to_string(), multi));
        }
        Ok(groups)
    }
}

/// Per-bus training inputs from the ok rows of a dataset.
pub fn rows_of(ds: &Dataset) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    ds.ok_rows()
        .map(|r| (r.features.clone(), vec![r.target.p_s, r.target.q_s]))
        .unzip()
}

/// Train/test split of the ok rows, reproducible from `seed` and the bus.
pub fn split_dataset(ds: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let ok = ds.only_ok();
    if ok.is_empty() {
        return Err(Error::InvalidArgument(format!("bus {} has no usable samples", ds.bus)));
    }
    let (train_idx, test_idx) = split_indices(ok.len(), train_fraction, sub_seed(seed, "split", u64::from(ds.bus)));
    Ok((ok.subset(&train_idx), ok.subset(&test_idx)))
}

/// 80/20 (or configured) split of the ok rows, model training, and the
/// resulting model, report and split datasets.
pub fn train_bus(ds: &Dataset, cfg: &TrainConfig, base_mva: f64, seed: u64) -> Result<(MlpModel, TrainReport, Dataset, Dataset)> {
    let (train_ds, test_ds) = split_dataset(ds, cfg.train_fraction, seed)?;
    let mut sizes = vec![ds.n_features()];
    sizes.extend(&cfg.hidden);
    sizes.push(2);
    let mut model = init_mlp(&sizes, sub_seed(seed, "init", u64::from(ds.bus)))?;
    model.base_mva = base_mva;
    let (xs, ys) = rows_of(&train_ds);
    let cfg = TrainConfig {
        seed: sub_seed(seed, "train", u64::from(ds.bus)),
        ..cfg.clone()
    };
    let (model, report) = train(&model, &xs, &ys, &cfg)?;
    Ok((model, report, train_ds, test_ds))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub name: String,
    pub scenarios: Vec<String>,
    pub dataset: Manifest,
    pub report: EvalReport,
    /// SHA-256 of every written dataset and model file, by file name.
    pub digests: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineSummary {
    pub seed: u64,
    pub groups: Vec<GroupSummary>,
}

fn file_digest(path: &Path) -> Result<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

/// Run everything and write the artifacts; see the module docs for the layout.
pub fn run_pipeline(cfg: &RunConfig) -> Result<PipelineSummary> {
    cfg.validate()?;
    let (base, opts) = cfg.prepare()?;
    let out = &cfg.output_dir;
    fs::create_dir_all(out)?;
    let mut groups = Vec::new();
    for (g, (name, scenarios)) in cfg.scenario_groups(&base)?.into_iter().enumerate() {
        let dir = out.join(&name);
        fs::create_dir_all(&dir)?;
        let labels: Vec<String> = scenarios.iter().map(|s| s.label(&base)).collect();
        fs::write(dir.join("scenarios.json"), serde_json::to_string_pretty(&scenarios)?)?;
        log::info!("{name}: {} scenarios x {} samples", scenarios.len(), cfg.sampling.per_scenario);
        let generated = generate_dataset(
            &base,
            &scenarios,
            cfg.sampling.per_scenario,
            sub_seed(cfg.seed, "dataset", g as u64),
            &opts,
        )?;
        let mut report = EvalReport {
            title: format!("{name} line outages"),
            eps_mw: cfg.eps_mw,
            buses: Vec::new(),
        };
        let mut digests = Vec::new();
        for &bus in &cfg.buses {
            let ds = match build_dataset(bus, &base, &generated.records) {
                Ok(ds) => ds,
                Err(Error::NotLoadCenter(_)) => {
                    log::warn!("bus {bus} has no demand; skipped");
                    continue;
                }
                Err(e) => return Err(e),
            };
            let csv_name = format!("bus{bus}.csv");
            ds.save(&dir.join(&csv_name))?;
            digests.push((csv_name.clone(), file_digest(&dir.join(&csv_name))?));
            let (model, train_report, train_ds, test_ds) =
                train_bus(&ds, &cfg.train, base.base_mva, sub_seed(cfg.seed, &name, 0))?;
            let model_name = format!("bus{bus}_model.json");
            save_model(&model, &dir.join(&model_name))?;
            digests.push((model_name.clone(), file_digest(&dir.join(&model_name))?));
            fs::write(dir.join(format!("bus{bus}_train.json")), serde_json::to_string_pretty(&train_report)?)?;
            report.buses.push(evaluate(&model, &train_ds, &test_ds, cfg.eps_mw)?);
        }
        fs::write(dir.join("report.json"), report.to_json()?)?;
        fs::write(dir.join("report.txt"), report.to_table())?;
        groups.push(GroupSummary {
            name,
            scenarios: labels,
            dataset: generated.manifest,
            report,
            digests,
        });
    }
    let summary = PipelineSummary { seed: cfg.seed, groups };
    fs::write(out.join("manifest.json"), serde_json::to_string_pretty(&summary)?)?;
    Ok(summary)
}
