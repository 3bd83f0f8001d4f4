//! Feedforward network: tanh hidden layers, linear output, MSE + L2 loss,
//! Adam mini-batch training with early stopping, JSON persistence.

use std::fmt;
use std::path::Path;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::NormalizationStats;
use crate::rng::{sub_seed, SeededRng};

pub const MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    Identity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    /// (outputs × inputs).
    pub w: DMatrix<f64>,
    pub b: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub layers: Vec<Layer>,
    pub hidden: Activation,
    /// Scaling of raw features; identity when absent.
    pub input_stats: Option<NormalizationStats>,
    /// Scaling of targets; identity when absent.
    pub output_stats: Option<NormalizationStats>,
    /// Used to turn the per-unit demand feature into the MW clamp range.
    pub base_mva: f64,
}

/// Glorot-uniform weights and zero biases.
pub fn init_mlp(layer_sizes: &[usize], seed: u64) -> Result<MlpModel> {
    if layer_sizes.len() < 2 || layer_sizes.contains(&0) {
        return Err(Error::InvalidArgument(format!("invalid layer sizes {layer_sizes:?}")));
    }
    let mut rng = SeededRng::new(seed);
    let layers = layer_sizes
        .windows(2)
        .map(|w| {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let mut m = DMatrix::zeros(fan_out, fan_in);
            for r in 0..fan_out {
                for c in 0..fan_in {
                    m[(r, c)] = rng.uniform_in(-limit, limit);
                }
            }
            Layer {
                w: m,
                b: DVector::zeros(fan_out),
            }
        })
        .collect();
    Ok(MlpModel {
        layers,
        hidden: Activation::Tanh,
        input_stats: None,
        output_stats: None,
        base_mva: 100.0,
    })
}

/// Parameter gradients, laid out like the model's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub dw: Vec<DMatrix<f64>>,
    pub db: Vec<DVector<f64>>,
}

impl MlpModel {
    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut s = vec![self.layers[0].w.ncols()];
        s.extend(self.layers.iter().map(|l| l.w.nrows()));
        s
    }

    pub fn n_inputs(&self) -> usize {
        self.layers[0].w.ncols()
    }

    pub fn n_outputs(&self) -> usize {
        self.layers.last().expect("at least one layer").w.nrows()
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    fn act(&self, z: f64) -> f64 {
        match self.hidden {
            Activation::Tanh => z.tanh(),
            Activation::Identity => z,
        }
    }

    /// Derivative of the hidden activation written in terms of its output.
    fn act_grad(&self, a: f64) -> f64 {
        match self.hidden {
            Activation::Tanh => 1.0 - a * a,
            Activation::Identity => 1.0,
        }
    }

    /// Activations of every layer for a batch stored column-wise.
    fn forward_all(&self, x: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.clone());
        let last = self.layers.len() - 1;
        for (k, l) in self.layers.iter().enumerate() {
            let mut z = &l.w * acts.last().expect("input pushed");
            for mut col in z.column_iter_mut() {
                col += &l.b;
            }
            if k < last {
                z.apply(|v| *v = self.act(*v));
            }
            acts.push(z);
        }
        acts
    }

    /// Network output for one input row (no feature scaling applied).
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_inputs() {
            return Err(Error::Dimension {
                expected: self.n_inputs(),
                got: x.len(),
            });
        }
        let out = self.forward_batch(&[x.to_vec()])?;
        Ok(out.into_iter().next().expect("one row"))
    }

    pub fn forward_batch(&self, xs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let x = to_columns(xs, self.n_inputs())?;
        let out = self.forward_all(&x).pop().expect("output layer");
        Ok(out.column_iter().map(|c| c.iter().copied().collect()).collect())
    }

    /// Loss `mean((ŷ − y)²) + λ·Σ‖W‖²` and its exact gradient. The mean runs
    /// over every output entry of the batch; optional per-row weights
    /// (normalized to mean one) scale each row's squared error.
    pub fn gradients(
        &self,
        xs: &[Vec<f64>],
        ys: &[Vec<f64>],
        lambda: f64,
        weights: Option<&[f64]>,
    ) -> Result<(f64, Gradients)> {
        if xs.is_empty() || xs.len() != ys.len() {
            return Err(Error::InvalidArgument("batch must be nonempty with one target per input".into()));
        }
        let x = to_columns(xs, self.n_inputs())?;
        let y = to_columns(ys, self.n_outputs())?;
        let acts = self.forward_all(&x);
        let n = xs.len();
        let scale = 1.0 / (n * self.n_outputs()) as f64;
        let row_w = row_weights(weights, n)?;

        let mut delta = acts.last().expect("output") - &y;
        let mut loss = 0.0;
        for (j, mut col) in delta.column_iter_mut().enumerate() {
            loss += row_w[j] * col.norm_squared();
            col *= 2.0 * scale * row_w[j];
        }
        loss *= scale;
        for l in &self.layers {
            loss += lambda * l.w.norm_squared();
        }

        let n_layers = self.layers.len();
        let mut dw = vec![DMatrix::zeros(0, 0); n_layers];
        let mut db = vec![DVector::zeros(0); n_layers];
        for k in (0..n_layers).rev() {
            let l = &self.layers[k];
            dw[k] = &delta * acts[k].transpose() + 2.0 * lambda * &l.w;
            db[k] = delta.column_sum();
            if k > 0 {
                let mut back = l.w.transpose() * &delta;
                back.zip_apply(&acts[k], |d, a| *d *= self.act_grad(a));
                delta = back;
            }
        }
        Ok((loss, Gradients { dw, db }))
    }

    /// Data part of the loss (no L2) on already-scaled rows.
    pub fn mse(&self, xs: &[Vec<f64>], ys: &[Vec<f64>]) -> Result<f64> {
        if xs.is_empty() {
            return Ok(0.0);
        }
        let (loss, _) = self.gradients(xs, ys, 0.0, None)?;
        Ok(loss)
    }

    /// Shedding decision from raw features: scale, forward, unscale, and
    /// clamp real shedding to `[0, p_d]` MW (reactive to the range between
    /// 0 and `q_d`), with `p_d`, `q_d` taken from the first two features.
    pub fn predict(&self, features: &[f64]) -> Result<Vec<f64>> {
        if features.len() != self.n_inputs() {
            return Err(Error::Dimension {
                expected: self.n_inputs(),
                got: features.len(),
            });
        }
        let z = match &self.input_stats {
            Some(s) => s.apply(features),
            None => features.to_vec(),
        };
        let out = self.forward(&z)?;
        let mut y = match &self.output_stats {
            Some(s) => s.invert(&out),
            None => out,
        };
        if self.n_inputs() >= 2 {
            let p_d = features[0] * self.base_mva;
            let q_d = features[1] * self.base_mva;
            if let Some(p) = y.get_mut(0) {
                *p = p.clamp(0.0, p_d.max(0.0));
            }
            if let Some(q) = y.get_mut(1) {
                *q = q.clamp(q_d.min(0.0), q_d.max(0.0));
            }
        }
        Ok(y)
    }

    fn params_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.w.iter().chain(l.b.iter()).all(|v| v.is_finite()))
    }
}

fn to_columns(rows: &[Vec<f64>], width: usize) -> Result<DMatrix<f64>> {
    let mut m = DMatrix::zeros(width, rows.len());
    for (j, r) in rows.iter().enumerate() {
        if r.len() != width {
            return Err(Error::Dimension {
                expected: width,
                got: r.len(),
            });
        }
        m.column_mut(j).copy_from_slice(r);
    }
    Ok(m)
}

fn row_weights(weights: Option<&[f64]>, n: usize) -> Result<Vec<f64>> {
    match weights {
        None => Ok(vec![1.0; n]),
        Some(w) if w.len() != n => Err(Error::Dimension { expected: n, got: w.len() }),
        Some(w) => {
            let mean = w.iter().sum::<f64>() / n as f64;
            if !(mean > 0.0) {
                return Err(Error::InvalidArgument("sample weights must have positive mean".into()));
            }
            Ok(w.iter().map(|v| v / mean).collect())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub l2: f64,
    pub batch_size: usize,
    /// Share of the training rows held out for early stopping.
    pub validation_fraction: f64,
    pub patience: usize,
    pub seed: u64,
    /// Share of a dataset used for training; the rest is the test split.
    pub train_fraction: f64,
    /// Weight each row's error by `1 + |p_s| / mean |p_s|`.
    pub weighted: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden: vec![15, 12],
            learning_rate: 1e-3,
            max_epochs: 2000,
            l2: 1e-4,
            batch_size: 32,
            validation_fraction: 0.2,
            patience: 50,
            seed: 0,
            train_fraction: 0.8,
            weighted: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let frac_ok = |f: f64| f > 0.0 && f < 1.0;
        if !(self.learning_rate > 0.0)
            || self.l2 < 0.0
            || self.batch_size == 0
            || self.patience == 0
            || !frac_ok(self.validation_fraction)
            || !frac_ok(self.train_fraction)
            || self.hidden.contains(&0)
        {
            return Err(Error::InvalidArgument(format!("invalid training configuration {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxEpochs,
    EarlyStop,
    Diverged,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::MaxEpochs => "max_epochs",
            Self::EarlyStop => "early_stop",
            Self::Diverged => "diverged",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Scaled-space MSE per epoch.
    pub train_mse: Vec<f64>,
    pub validation_mse: Vec<f64>,
    pub final_mse: f64,
    pub best_epoch: usize,
    pub stop_reason: StopReason,
    pub wall_time_s: f64,
}

/// Shuffled split of `0..n` into `(first, rest)` with `round(fraction·n)`
/// indices in the first part.
pub fn split_indices(n: usize, fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    SeededRng::new(seed).shuffle(&mut idx);
    let cut = ((fraction * n as f64).round() as usize).min(n);
    let rest = idx.split_off(cut);
    (idx, rest)
}

struct Adam {
    m_w: Vec<DMatrix<f64>>,
    v_w: Vec<DMatrix<f64>>,
    m_b: Vec<DVector<f64>>,
    v_b: Vec<DVector<f64>>,
    t: i32,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

impl Adam {
    fn new(model: &MlpModel) -> Self {
        Self {
            m_w: model.layers.iter().map(|l| l.w.map(|_| 0.0)).collect(),
            v_w: model.layers.iter().map(|l| l.w.map(|_| 0.0)).collect(),
            m_b: model.layers.iter().map(|l| l.b.map(|_| 0.0)).collect(),
            v_b: model.layers.iter().map(|l| l.b.map(|_| 0.0)).collect(),
            t: 0,
        }
    }

    fn step(&mut self, model: &mut MlpModel, g: &Gradients, lr: f64) {
        self.t += 1;
        let c1 = 1.0 - BETA1.powi(self.t);
        let c2 = 1.0 - BETA2.powi(self.t);
        for (k, l) in model.layers.iter_mut().enumerate() {
            update(l.w.as_mut_slice(), g.dw[k].as_slice(), self.m_w[k].as_mut_slice(), self.v_w[k].as_mut_slice(), lr, c1, c2);
            update(l.b.as_mut_slice(), g.db[k].as_slice(), self.m_b[k].as_mut_slice(), self.v_b[k].as_mut_slice(), lr, c1, c2);
        }
    }
}

fn update(p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64], lr: f64, c1: f64, c2: f64) {
    for i in 0..p.len() {
        m[i] = BETA1 * m[i] + (1.0 - BETA1) * g[i];
        v[i] = BETA2 * v[i] + (1.0 - BETA2) * g[i] * g[i];
        p[i] -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + ADAM_EPS);
    }
}

/// Train on raw (unscaled) rows. Input and output scaling are fitted on
/// all of `xs`/`ys` and stored in the returned model; a validation share
/// drives early stopping and the best-validation parameters are returned.
pub fn train(model: &MlpModel, xs: &[Vec<f64>], ys: &[Vec<f64>], config: &TrainConfig) -> Result<(MlpModel, TrainReport)> {
    config.validate()?;
    let started = Instant::now();
    if xs.is_empty() || xs.len() != ys.len() {
        return Err(Error::InvalidArgument("training needs rows with matching targets".into()));
    }
    let mut model = model.clone();
    let in_stats = NormalizationStats::fit(xs.iter().map(Vec::as_slice), model.n_inputs());
    let out_stats = NormalizationStats::fit(ys.iter().map(Vec::as_slice), model.n_outputs());
    let zx: Vec<Vec<f64>> = xs.iter().map(|x| in_stats.apply(x)).collect();
    let zy: Vec<Vec<f64>> = ys.iter().map(|y| out_stats.apply(y)).collect();
    model.input_stats = Some(in_stats);
    model.output_stats = Some(out_stats);

    let (mut val_idx, mut fit_idx) = split_indices(xs.len(), config.validation_fraction, sub_seed(config.seed, "validation", 0));
    if fit_idx.is_empty() {
        std::mem::swap(&mut val_idx, &mut fit_idx);
    }
    let weights: Option<Vec<f64>> = config.weighted.then(|| {
        let mean = ys.iter().map(|y| y[0].abs()).sum::<f64>() / ys.len() as f64;
        ys.iter()
            .map(|y| if mean > 0.0 { 1.0 + y[0].abs() / mean } else { 1.0 })
            .collect()
    });
    let pick = |idx: &[usize], rows: &[Vec<f64>]| -> Vec<Vec<f64>> { idx.iter().map(|&i| rows[i].clone()).collect() };
    let (fit_x, fit_y) = (pick(&fit_idx, &zx), pick(&fit_idx, &zy));
    let (val_x, val_y) = if val_idx.is_empty() {
        (fit_x.clone(), fit_y.clone())
    } else {
        (pick(&val_idx, &zx), pick(&val_idx, &zy))
    };

    let mut adam = Adam::new(&model);
    let mut best = model.clone();
    let mut best_val = f64::INFINITY;
    let mut best_epoch = 0;
    let mut report = TrainReport {
        train_mse: Vec::new(),
        validation_mse: Vec::new(),
        final_mse: model.mse(&fit_x, &fit_y)?,
        best_epoch: 0,
        stop_reason: StopReason::MaxEpochs,
        wall_time_s: 0.0,
    };
    let mut order: Vec<usize> = (0..fit_x.len()).collect();
    for epoch in 0..config.max_epochs {
        SeededRng::new(sub_seed(config.seed, "epoch", epoch as u64)).shuffle(&mut order);
        for chunk in order.chunks(config.batch_size) {
            let bx: Vec<Vec<f64>> = chunk.iter().map(|&i| fit_x[i].clone()).collect();
            let by: Vec<Vec<f64>> = chunk.iter().map(|&i| fit_y[i].clone()).collect();
            let bw: Option<Vec<f64>> = weights.as_ref().map(|w| chunk.iter().map(|&i| w[fit_idx[i]]).collect());
            let (_, g) = model.gradients(&bx, &by, config.l2, bw.as_deref())?;
            adam.step(&mut model, &g, config.learning_rate);
        }
        let train_mse = model.mse(&fit_x, &fit_y)?;
        let val_mse = model.mse(&val_x, &val_y)?;
        report.train_mse.push(train_mse);
        report.validation_mse.push(val_mse);
        if !train_mse.is_finite() || !model.params_finite() {
            report.stop_reason = StopReason::Diverged;
            break;
        }
        if val_mse < best_val {
            best_val = val_mse;
            best_epoch = epoch;
            best = model.clone();
        } else if epoch - best_epoch >= config.patience {
            report.stop_reason = StopReason::EarlyStop;
            break;
        }
    }
    if config.max_epochs == 0 {
        best = model;
    }
    report.final_mse = best.mse(&fit_x, &fit_y)?;
    report.best_epoch = best_epoch;
    report.wall_time_s = started.elapsed().as_secs_f64();
    Ok((best, report))
}

#[derive(Serialize, Deserialize)]
struct LayerFile {
    weights: Vec<Vec<f64>>,
    biases: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    schema_version: u32,
    layer_sizes: Vec<usize>,
    hidden_activation: Activation,
    output_activation: Activation,
    base_mva: f64,
    layers: Vec<LayerFile>,
    input_stats: Option<NormalizationStats>,
    output_stats: Option<NormalizationStats>,
}

impl MlpModel {
    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            schema_version: MODEL_SCHEMA_VERSION,
            layer_sizes: self.layer_sizes(),
            hidden_activation: self.hidden,
            output_activation: Activation::Identity,
            base_mva: self.base_mva,
            layers: self
                .layers
                .iter()
                .map(|l| LayerFile {
                    weights: l.w.row_iter().map(|r| r.iter().copied().collect()).collect(),
                    biases: l.b.iter().copied().collect(),
                })
                .collect(),
            input_stats: self.input_stats.clone(),
            output_stats: self.output_stats.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.schema_version != MODEL_SCHEMA_VERSION {
            return Err(Error::Schema(format!("unsupported model schema {}", file.schema_version)));
        }
        if file.output_activation != Activation::Identity {
            return Err(Error::Schema("output activation must be identity".into()));
        }
        let sizes = &file.layer_sizes;
        if sizes.len() < 2 || sizes.contains(&0) || file.layers.len() != sizes.len() - 1 {
            return Err(Error::Schema(format!("layer sizes {sizes:?} do not match {} layers", file.layers.len())));
        }
        let mut layers = Vec::with_capacity(file.layers.len());
        for (k, lf) in file.layers.into_iter().enumerate() {
            let (rows, cols) = (sizes[k + 1], sizes[k]);
            if lf.weights.len() != rows || lf.weights.iter().any(|r| r.len() != cols) || lf.biases.len() != rows {
                return Err(Error::Schema(format!("layer {k} is not {rows}x{cols}")));
            }
            let w = DMatrix::from_fn(rows, cols, |r, c| lf.weights[r][c]);
            layers.push(Layer {
                w,
                b: DVector::from_vec(lf.biases),
            });
        }
        let check = |s: &Option<NormalizationStats>, n: usize, what: &str| -> Result<()> {
            match s {
                Some(s) if s.mean.len() != n || s.std.len() != n => {
                    Err(Error::Schema(format!("{what} statistics have width {}, expected {n}", s.mean.len())))
                }
                _ => Ok(()),
            }
        };
        check(&file.input_stats, sizes[0], "input")?;
        check(&file.output_stats, sizes[sizes.len() - 1], "output")?;
        let model = MlpModel {
            layers,
            hidden: file.hidden_activation,
            input_stats: file.input_stats,
            output_stats: file.output_stats,
            base_mva: file.base_mva,
        };
        if !model.params_finite() {
            return Err(Error::Schema("non-finite parameters".into()));
        }
        Ok(model)
    }
}

pub fn save_model(model: &MlpModel, path: &Path) -> Result<()> {
    std::fs::write(path, model.to_json()?)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<MlpModel> {
    MlpModel::from_json(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_follow_sizes() {
        let m = init_mlp(&[8, 15, 12, 2], 1).unwrap();
        let shapes: Vec<_> = m.layers.iter().map(|l| l.w.shape()).collect();
        assert_eq!(shapes, vec![(15, 8), (12, 15), (2, 12)]);
        assert_eq!(m, init_mlp(&[8, 15, 12, 2], 1).unwrap());
        assert!(init_mlp(&[8, 0, 2], 1).is_err());
        assert!(init_mlp(&[8], 1).is_err());
    }

    #[test]
    fn hand_computed_forward() {
        let mut m = init_mlp(&[1, 2, 1], 0).unwrap();
        m.layers[0].w = DMatrix::from_row_slice(2, 1, &[0.5, -1.0]);
        m.layers[0].b = DVector::from_vec(vec![0.1, 0.2]);
        m.layers[1].w = DMatrix::from_row_slice(1, 2, &[2.0, 3.0]);
        m.layers[1].b = DVector::from_vec(vec![-0.3]);
        let x = 0.7;
        let expected = 2.0 * (0.5 * x + 0.1f64).tanh() + 3.0 * (-x + 0.2f64).tanh() - 0.3;
        assert!((m.forward(&[x]).unwrap()[0] - expected).abs() < 1e-15);
        assert!(m.forward(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn zero_parameters_give_zero_output() {
        let mut m = init_mlp(&[3, 4, 2], 5).unwrap();
        for l in &mut m.layers {
            l.w.fill(0.0);
            l.b.fill(0.0);
        }
        assert_eq!(m.forward(&[1.0, -2.0, 3.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn linear_unit_gradient() {
        // y = w·x + b, loss (w·x + b − t)²
        let mut m = init_mlp(&[1, 1], 0).unwrap();
        m.layers[0].w[(0, 0)] = 0.5;
        m.layers[0].b[0] = 0.25;
        let (x, t) = (2.0, 3.0);
        let r = 0.5 * x + 0.25 - t;
        let (loss, g) = m.gradients(&[vec![x]], &[vec![t]], 0.0, None).unwrap();
        assert!((loss - r * r).abs() < 1e-15);
        assert!((g.dw[0][(0, 0)] - 2.0 * r * x).abs() < 1e-15);
        assert!((g.db[0][0] - 2.0 * r).abs() < 1e-15);
    }

    #[test]
    fn zero_residual_leaves_only_l2() {
        let m = init_mlp(&[2, 3, 1], 9).unwrap();
        let xs = vec![vec![0.3, -0.1], vec![1.0, 0.4]];
        let ys = m.forward_batch(&xs).unwrap();
        let lambda = 0.01;
        let (_, g) = m.gradients(&xs, &ys, lambda, None).unwrap();
        for (k, l) in m.layers.iter().enumerate() {
            assert!((&g.dw[k] - 2.0 * lambda * &l.w).amax() < 1e-15);
            assert!(g.db[k].amax() < 1e-15);
        }
    }

    #[test]
    fn split_sizes() {
        let (a, b) = split_indices(1000, 0.8, 3);
        assert_eq!((a.len(), b.len()), (800, 200));
        let mut all: Vec<usize> = a.iter().chain(&b).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..1000).collect::<Vec<_>>());
    }

    #[test]
    fn zero_epochs_keep_parameters() {
        let m = init_mlp(&[1, 3, 1], 2).unwrap();
        let xs: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let cfg = TrainConfig {
            max_epochs: 0,
            ..TrainConfig::default()
        };
        let (out, rep) = train(&m, &xs, &xs, &cfg).unwrap();
        assert_eq!(out.layers, m.layers);
        assert!(rep.train_mse.is_empty());
    }

    #[test]
    fn malformed_model_json() {
        let m = init_mlp(&[2, 3, 1], 1).unwrap();
        let text = m.to_json().unwrap().replace("\"layer_sizes\": [\n    2,", "\"layer_sizes\": [\n    4,");
        assert!(matches!(MlpModel::from_json(&text), Err(Error::Schema(_))));
        assert!(MlpModel::from_json("{").is_err());
    }
}
