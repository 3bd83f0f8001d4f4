//! Accuracy metrics, shedding occurrence, per-bus reports, and scatter
//! export.

use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::Dataset;
use crate::mlp::MlpModel;

/// Shedding above this many MW counts as an occurrence.
pub const DEFAULT_EPS_MW: f64 = 1e-3;

/// Root-mean-square difference of two equal-length series.
pub fn rmse(pred: &[f64], actual: &[f64]) -> Result<f64> {
    if pred.is_empty() || pred.len() != actual.len() {
        return Err(Error::InvalidArgument(format!(
            "rmse needs equal nonzero lengths, got {} and {}",
            pred.len(),
            actual.len()
        )));
    }
    let ss: f64 = pred.iter().zip(actual).map(|(p, a)| (p - a) * (p - a)).sum();
    Ok((ss / pred.len() as f64).sqrt())
}

/// Percentage of ok rows whose real shedding exceeds `eps` MW.
pub fn occurrence_rate(ds: &Dataset, eps: f64) -> Result<f64> {
    let mut n = 0usize;
    let mut hit = 0usize;
    for r in ds.ok_rows() {
        n += 1;
        if r.target.p_s > eps {
            hit += 1;
        }
    }
    if n == 0 {
        return Err(Error::InvalidArgument("occurrence of an empty dataset".into()));
    }
    Ok(100.0 * hit as f64 / n as f64)
}

/// Ranks starting at 1, ties sharing their average rank.
fn ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut out = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = r;
        }
        i = j + 1;
    }
    out
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return 0.0;
    }
    sab / (saa * sbb).sqrt()
}

/// Spearman rank correlation; 0 when either series is constant.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() < 2 || a.len() != b.len() {
        return Err(Error::InvalidArgument("spearman needs two equal series of length ≥ 2".into()));
    }
    Ok(pearson(&ranks(a), &ranks(b)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BusEval {
    pub bus: u32,
    /// Percent of all ok rows (both splits) with shedding.
    pub occurrence: f64,
    /// MW, over shed-occurred rows; `None` when there are none.
    pub train_rmse: Option<f64>,
    pub test_rmse: Option<f64>,
    /// MW, over every row of the split.
    pub train_rmse_all: Option<f64>,
    pub test_rmse_all: Option<f64>,
    pub n_train: usize,
    pub n_test: usize,
    pub n_train_occurred: usize,
    pub n_test_occurred: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub title: String,
    pub eps_mw: f64,
    pub buses: Vec<BusEval>,
}

fn split_rmse(model: &MlpModel, ds: &Dataset, eps: f64) -> Result<(Option<f64>, Option<f64>, usize, usize)> {
    let mut pred_all = Vec::new();
    let mut act_all = Vec::new();
    let mut pred_occ = Vec::new();
    let mut act_occ = Vec::new();
    for r in ds.ok_rows() {
        let p = model.predict(&r.features)?[0];
        if r.target.p_s > eps {
            pred_occ.push(p);
            act_occ.push(r.target.p_s);
        }
        pred_all.push(p);
        act_all.push(r.target.p_s);
    }
    let occ = if pred_occ.is_empty() { None } else { Some(rmse(&pred_occ, &act_occ)?) };
    let all = if pred_all.is_empty() { None } else { Some(rmse(&pred_all, &act_all)?) };
    Ok((occ, all, pred_all.len(), pred_occ.len()))
}

/// Metrics of one bus model on its train and test splits (ok rows only).
pub fn evaluate(model: &MlpModel, train: &Dataset, test: &Dataset, eps: f64) -> Result<BusEval> {
    for ds in [train, test] {
        if ds.n_features() != model.n_inputs() {
            return Err(Error::Schema(format!(
                "bus {} dataset has {} features, model expects {}",
                ds.bus,
                ds.n_features(),
                model.n_inputs()
            )));
        }
    }
    let (train_rmse, train_rmse_all, n_train, n_train_occurred) = split_rmse(model, train, eps)?;
    let (test_rmse, test_rmse_all, n_test, n_test_occurred) = split_rmse(model, test, eps)?;
    let n = n_train + n_test;
    let occurrence = if n == 0 {
        0.0
    } else {
        100.0 * (n_train_occurred + n_test_occurred) as f64 / n as f64
    };
    Ok(BusEval {
        bus: train.bus,
        occurrence,
        train_rmse,
        test_rmse,
        train_rmse_all,
        test_rmse_all,
        n_train,
        n_test,
        n_train_occurred,
        n_test_occurred,
    })
}

impl EvalReport {
    /// Plain-text table: Bus, Occurrence, Training and Testing RMSE in MW.
    pub fn to_table(&self) -> String {
        let fmt_opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"));
        let mut s = String::new();
        if !self.title.is_empty() {
            let _ = writeln!(s, "{}", self.title);
        }
        let _ = writeln!(s, "{:>4}  {:>10}  {:>13}  {:>12}", "Bus", "Occurrence", "Training [MW]", "Testing [MW]");
        for b in &self.buses {
            let _ = writeln!(
                s,
                "{:>4}  {:>9.1}%  {:>13}  {:>12}",
                b.bus,
                b.occurrence,
                fmt_opt(b.train_rmse),
                fmt_opt(b.test_rmse)
            );
        }
        s
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn bus(&self, id: u32) -> Option<&BusEval> {
        self.buses.iter().find(|b| b.bus == id)
    }
}

/// CSV `v_post,sum_incident_p_flow,ps_mw` over the ok rows of `ds`.
pub fn export_scatter<W: Write>(ds: &Dataset, out: W) -> Result<()> {
    let deg = ds.branches.len();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["v_post", "sum_incident_p_flow", "ps_mw"])?;
    for r in ds.ok_rows() {
        let flow: f64 = r.features[3..3 + deg].iter().sum();
        w.write_record([r.features[2].to_string(), flow.to_string(), r.target.p_s.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
