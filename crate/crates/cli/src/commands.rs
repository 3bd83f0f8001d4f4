use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use ols_core::eval::{evaluate, EvalReport};
use ols_core::features::{build_dataset, Dataset};
use ols_core::mlp::{load_model, save_model};
use ols_core::ols::WarmStart;
use ols_core::pipeline::{run_pipeline, split_dataset, train_bus, RunConfig};
use ols_core::powerflow::{check_connectivity, solve_power_flow, write_solution_csv, Start};
use ols_core::scenarios::generate_dataset;
use ols_core::{assemble_ols, solve_ols, Error, NetworkCase, SolverOptions};
use serde_json::json;

use crate::args::{Command, Global, Network};

/// A solver ran but did not reach a usable answer.
#[derive(Debug)]
pub struct SolverFailure(pub String);

impl fmt::Display for SolverFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for SolverFailure {}

pub fn load_config(g: &Global) -> Result<RunConfig> {
    let mut cfg = match &g.config {
        Some(path) => RunConfig::load(path).with_context(|| format!("reading config {}", path.display()))?,
        None => RunConfig::default(),
    };
    if let Some(p) = &g.case {
        cfg.case.path = Some(p.clone());
    }
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if let Some(t) = g.total_mw {
        cfg.case.total_mw = t;
    }
    if let Some(d) = &g.output_dir {
        cfg.output_dir = d.clone();
    }
    if let Some(b) = &g.buses {
        cfg.buses = b.clone();
    }
    if let Some(n) = g.per_scenario {
        cfg.sampling.per_scenario = n;
    }
    if let Some(n) = g.double {
        cfg.sampling.double = n;
    }
    if let Some(n) = g.triple {
        cfg.sampling.triple = n;
    }
    if g.no_single {
        cfg.sampling.single = false;
    }
    if let Some(n) = g.max_epochs {
        cfg.train.max_epochs = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn run(command: &Command, cfg: &RunConfig) -> Result<()> {
    match command {
        Command::Parse => parse(cfg),
        Command::Pf(net) => pf(cfg, net),
        Command::Ols(net) => ols(cfg, net),
        Command::Scenarios => scenarios(cfg),
        Command::Dataset => dataset(cfg),
        Command::Train { dataset, out } => train(cfg, dataset, out.as_deref()),
        Command::Eval { model, dataset, json } => eval(cfg, model, dataset, *json),
        Command::Predict { model, features } => predict(model, features),
        Command::Pipeline => pipeline(cfg),
    }
}

fn parse(cfg: &RunConfig) -> Result<()> {
    let case = cfg.load_case()?;
    println!(
        "{} buses, {} generators, {} branches ({} in service), demand {:.2} MW / {:.2} MVAr, base {} MVA",
        case.n_bus(),
        case.gens.len(),
        case.branches.len(),
        case.n_in_service(),
        case.total_p_demand(),
        case.total_q_demand(),
        case.base_mva
    );
    Ok(())
}

fn network(cfg: &RunConfig, net: &Network) -> Result<NetworkCase> {
    let base = if net.unstressed {
        cfg.load_case()?
    } else {
        cfg.prepare()?.0
    };
    let lines = net
        .outages
        .iter()
        .map(|&(a, b)| {
            base.branch_index(a, b)
                .ok_or_else(|| anyhow::anyhow!(Error::InvalidArgument(format!("no in-service branch {a}-{b}"))))
        })
        .collect::<Result<Vec<_>>>()?;
    let case = base.apply_outage(&lines)?;
    let conn = check_connectivity(&case);
    if !conn.connected {
        let buses = conn.islands.into_iter().flatten().collect();
        return Err(Error::Disconnected(buses).into());
    }
    Ok(case)
}

fn pf(cfg: &RunConfig, net: &Network) -> Result<()> {
    let case = network(cfg, net)?;
    let sol = solve_power_flow(&case, Start::Flat, &cfg.pf_options())?;
    if let Some(path) = &net.csv {
        write_solution_csv(&case, &sol, fs::File::create(path)?)?;
    }
    let (i_min, v_min) = sol
        .v
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
    println!(
        "{}",
        serde_json::to_string_pretty(&json!({
            "converged": sol.converged,
            "iterations": sol.iterations,
            "max_mismatch": sol.max_mismatch,
            "total_p_gen_mw": sol.total_p_gen() * case.base_mva,
            "min_v": v_min,
            "min_v_bus": case.buses[i_min].id,
        }))?
    );
    if !sol.converged {
        return Err(SolverFailure(format!("power flow did not converge in {} iterations", sol.iterations)).into());
    }
    Ok(())
}

fn ols(cfg: &RunConfig, net: &Network) -> Result<()> {
    let case = network(cfg, net)?;
    let costs = cfg.costs(&case);
    let problem = assemble_ols(&case, &costs)?;
    let warm = solve_power_flow(&case, Start::Flat, &cfg.pf_options())
        .ok()
        .filter(|s| s.converged)
        .map(|s| WarmStart::from(&s));
    let sol = solve_ols(&problem, &SolverOptions { ipm: cfg.ipm_options(), warm_start: warm });
    if let Some(path) = &net.csv {
        sol.write_csv(&case, fs::File::create(path)?)?;
    }
    let shed: serde_json::Map<String, serde_json::Value> = case
        .buses
        .iter()
        .zip(&sol.p_s)
        .filter(|(_, &p)| p > cfg.eps_mw)
        .map(|(b, &p)| (b.id.to_string(), json!(p)))
        .collect();
    let mut summary = sol.summary_json();
    summary["shed_mw"] = serde_json::Value::Object(shed);
    println!("{}", serde_json::to_string_pretty(&summary)?);
    if !sol.is_optimal() {
        return Err(SolverFailure(format!("load shedding solve ended with status {}", sol.status)).into());
    }
    Ok(())
}

fn scenarios(cfg: &RunConfig) -> Result<()> {
    let (base, _) = cfg.prepare()?;
    let mut out = serde_json::Map::new();
    for (name, list) in cfg.scenario_groups(&base)? {
        let items: Vec<_> = list
            .iter()
            .map(|s| json!({"id": s.id, "label": s.label(&base), "branches": s.outaged}))
            .collect();
        out.insert(name, json!(items));
    }
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

fn dataset(cfg: &RunConfig) -> Result<()> {
    let (base, opts) = cfg.prepare()?;
    for (g, (name, list)) in cfg.scenario_groups(&base)?.into_iter().enumerate() {
        let dir = cfg.output_dir.join(&name);
        fs::create_dir_all(&dir)?;
        log::info!("{name}: {} scenarios x {} samples", list.len(), cfg.sampling.per_scenario);
        let seed = ols_core::rng::sub_seed(cfg.seed, "dataset", g as u64);
        let generated = generate_dataset(&base, &list, cfg.sampling.per_scenario, seed, &opts)?;
        fs::write(dir.join("scenarios.json"), serde_json::to_string_pretty(&list)?)?;
        fs::write(dir.join("dataset.json"), serde_json::to_string_pretty(&generated.manifest)?)?;
        for &bus in &cfg.buses {
            let ds = build_dataset(bus, &base, &generated.records)?;
            ds.save(&dir.join(format!("bus{bus}.csv")))?;
        }
        let m = &generated.manifest;
        println!(
            "{name}: {} records ({} ok, {} power flow diverged, {} shedding failed) in {}",
            m.records,
            m.ok,
            m.pf_diverged,
            m.ols_failed,
            dir.display()
        );
    }
    Ok(())
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn train(cfg: &RunConfig, dataset: &Path, out: Option<&Path>) -> Result<()> {
    let ds = Dataset::load(dataset).with_context(|| format!("reading dataset {}", dataset.display()))?;
    let base_mva = cfg.load_case()?.base_mva;
    let (model, report, _, _) = train_bus(&ds, &cfg.train, base_mva, cfg.seed)?;
    let path = out.map_or_else(|| sibling(dataset, "_model.json"), Path::to_path_buf);
    save_model(&model, &path)?;
    fs::write(sibling(&path, "_train.json"), serde_json::to_string_pretty(&report)?)?;
    println!(
        "bus {}: {} epochs (best {}), stop {:?}, validation MSE {:.4e}, model {}",
        ds.bus,
        report.train_mse.len(),
        report.best_epoch,
        report.stop_reason,
        report.final_mse,
        path.display()
    );
    Ok(())
}

fn eval(cfg: &RunConfig, model: &Path, dataset: &Path, as_json: bool) -> Result<()> {
    let model = load_model(model).with_context(|| format!("reading model {}", model.display()))?;
    let ds = Dataset::load(dataset).with_context(|| format!("reading dataset {}", dataset.display()))?;
    let (train_ds, test_ds) = split_dataset(&ds, cfg.train.train_fraction, cfg.seed)?;
    let report = EvalReport {
        title: String::new(),
        eps_mw: cfg.eps_mw,
        buses: vec![evaluate(&model, &train_ds, &test_ds, cfg.eps_mw)?],
    };
    if as_json {
        println!("{}", report.to_json()?);
    } else {
        print!("{}", report.to_table());
    }
    Ok(())
}

fn predict(model: &Path, features: &[f64]) -> Result<()> {
    let model = load_model(model).with_context(|| format!("reading model {}", model.display()))?;
    let y = model.predict(features)?;
    println!("{}", json!({"p_s_mw": y[0], "q_s_mvar": y.get(1)}));
    Ok(())
}

fn pipeline(cfg: &RunConfig) -> Result<()> {
    let summary = run_pipeline(cfg)?;
    for g in &summary.groups {
        print!("{}", g.report.to_table());
    }
    println!("artifacts in {}", cfg.output_dir.display());
    Ok(())
}

/// Exit status for a failed command: 3 for solver failures, 2 otherwise.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<SolverFailure>() {
            return 3;
        }
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::NonOptimal(_) | Error::Singular | Error::NoFeasiblePoint => 3,
                _ => 2,
            };
        }
    }
    2
}
