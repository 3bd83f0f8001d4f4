//! Per-load-center feature and target vectors, z-score normalization, and
//! dataset CSV files.
//!
//! Features (per-unit, frequency in Hz): local demand `p_d, q_d`, the
//! post-contingency voltage magnitude, real and reactive flow on every
//! incident branch of the base topology (measured at this bus, leaving
//! positive, zero when the branch is out), and the frequency proxy.
//! Targets are the optimal shedding in MW and MVAr.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netcase::NetworkCase;
use crate::ols::OlsSolution;
use crate::powerflow::{line_flows, FrequencyProxy, PowerFlowSolution};
use crate::scenarios::{RecordStatus, SampleRecord};

/// Smallest standard deviation used when scaling a feature.
pub const STD_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub p_d: f64,
    pub q_d: f64,
    pub v_post: f64,
    pub p_flows: Vec<f64>,
    pub q_flows: Vec<f64>,
    pub freq: f64,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        4 + self.p_flows.len() + self.q_flows.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        out.extend([self.p_d, self.q_d, self.v_post]);
        out.extend(&self.p_flows);
        out.extend(&self.q_flows);
        out.push(self.freq);
        out
    }

    /// Inverse of [`to_vec`](Self::to_vec) for a bus with `degree` incident branches.
    pub fn from_slice(x: &[f64], degree: usize) -> Result<Self> {
        let expected = 4 + 2 * degree;
        if x.len() != expected {
            return Err(Error::Dimension { expected, got: x.len() });
        }
        Ok(Self {
            p_d: x[0],
            q_d: x[1],
            v_post: x[2],
            p_flows: x[3..3 + degree].to_vec(),
            q_flows: x[3 + degree..3 + 2 * degree].to_vec(),
            freq: x[3 + 2 * degree],
        })
    }

    pub fn total_p_flow(&self) -> f64 {
        self.p_flows.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetVector {
    /// MW.
    pub p_s: f64,
    /// MVAr.
    pub q_s: f64,
}

fn load_center(case: &NetworkCase, bus: u32) -> Result<usize> {
    let i = case.bus_index(bus).ok_or(Error::UnknownBus(bus))?;
    if case.buses[i].p_d <= 0.0 {
        return Err(Error::NotLoadCenter(bus));
    }
    Ok(i)
}

/// Local measurements at `bus` after a contingency. `post_case` is the
/// load-sampled network with the outage applied; its out-of-service
/// branches still define the feature layout.
pub fn extract_features(
    bus: u32,
    post_case: &NetworkCase,
    pf_post: &PowerFlowSolution,
    freq: &FrequencyProxy,
) -> Result<FeatureVector> {
    let i = load_center(post_case, bus)?;
    if !pf_post.converged {
        return Err(Error::InvalidArgument("power flow did not converge".into()));
    }
    let base = post_case.base_mva;
    let flows = line_flows(post_case, &pf_post.v, &pf_post.theta);
    let incident = post_case.incident_branches(bus);
    let mut p_flows = Vec::with_capacity(incident.len());
    let mut q_flows = Vec::with_capacity(incident.len());
    for k in incident {
        let s = flows.get(k).map_or(num_complex::Complex64::new(0.0, 0.0), |f| {
            if post_case.branches[k].from == bus {
                f.s_from
            } else {
                f.s_to
            }
        });
        p_flows.push(s.re);
        q_flows.push(s.im);
    }
    let b = &post_case.buses[i];
    Ok(FeatureVector {
        p_d: b.p_d / base,
        q_d: b.q_d / base,
        v_post: pf_post.v[i],
        p_flows,
        q_flows,
        freq: freq.f,
    })
}

/// Shedding at `bus` in MW/MVAr.
pub fn extract_target(bus: u32, case: &NetworkCase, ols: &OlsSolution) -> Result<TargetVector> {
    let i = case.bus_index(bus).ok_or(Error::UnknownBus(bus))?;
    if !ols.is_optimal() {
        return Err(Error::NonOptimal(ols.status.to_string()));
    }
    Ok(TargetVector {
        p_s: ols.p_s[i],
        q_s: ols.q_s[i],
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRow {
    pub scenario: usize,
    pub status: RecordStatus,
    /// NaN-filled when the sample failed.
    pub features: Vec<f64>,
    pub target: TargetVector,
}

impl DatasetRow {
    pub fn is_ok(&self) -> bool {
        self.status == RecordStatus::Ok
    }
}

/// All samples for one load center.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub bus: u32,
    /// Incident branches of the base topology as (from, to), in feature order.
    pub branches: Vec<(u32, u32)>,
    pub rows: Vec<DatasetRow>,
}

impl Dataset {
    pub fn new(bus: u32, branches: Vec<(u32, u32)>) -> Self {
        Self {
            bus,
            branches,
            rows: Vec::new(),
        }
    }

    /// Empty dataset with the feature layout of `bus` in `case`.
    pub fn for_bus(case: &NetworkCase, bus: u32) -> Result<Self> {
        load_center(case, bus)?;
        let branches = case
            .incident_branches(bus)
            .into_iter()
            .map(|k| (case.branches[k].from, case.branches[k].to))
            .collect();
        Ok(Self::new(bus, branches))
    }

    pub fn n_features(&self) -> usize {
        4 + 2 * self.branches.len()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn ok_rows(&self) -> impl Iterator<Item = &DatasetRow> {
        self.rows.iter().filter(|r| r.is_ok())
    }

    /// Copy keeping only rows with status ok.
    pub fn only_ok(&self) -> Self {
        Self {
            rows: self.ok_rows().cloned().collect(),
            ..self.clone()
        }
    }

    /// Copy keeping the rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            ..self.clone()
        }
    }

    /// Column names of the CSV form.
    pub fn columns(&self) -> Vec<String> {
        let mut cols: Vec<String> = ["bus", "scenario", "status", "p_d", "q_d", "v_post"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        cols.extend(self.branches.iter().map(|(a, b)| format!("p_flow_{a}-{b}")));
        cols.extend(self.branches.iter().map(|(a, b)| format!("q_flow_{a}-{b}")));
        cols.extend(["freq", "ps_mw", "qs_mvar"].iter().map(|s| s.to_string()));
        cols
    }

    pub fn push(&mut self, row: DatasetRow) -> Result<()> {
        if row.features.len() != self.n_features() {
            return Err(Error::Dimension {
                expected: self.n_features(),
                got: row.features.len(),
            });
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.columns())?;
        for r in &self.rows {
            let mut rec = vec![self.bus.to_string(), r.scenario.to_string(), r.status.to_string()];
            rec.extend(r.features.iter().map(|x| x.to_string()));
            rec.push(r.target.p_s.to_string());
            rec.push(r.target.q_s.to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rd = csv::ReaderBuilder::new().flexible(true).from_reader(input);
        let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
        let branches = parse_header(&header)?;
        let mut ds = Dataset::new(0, branches);
        let width = header.len();
        let n_feat = ds.n_features();
        for (line, rec) in rd.records().enumerate() {
            let rec = rec?;
            if rec.len() != width {
                return Err(Error::Schema(format!("row {} has {} fields, expected {width}", line + 1, rec.len())));
            }
            let num = |j: usize| -> Result<f64> {
                rec[j]
                    .parse::<f64>()
                    .map_err(|_| Error::Schema(format!("row {}: bad number {:?}", line + 1, &rec[j])))
            };
            let bus: u32 = rec[0]
                .parse()
                .map_err(|_| Error::Schema(format!("row {}: bad bus {:?}", line + 1, &rec[0])))?;
            if line == 0 {
                ds.bus = bus;
            } else if bus != ds.bus {
                return Err(Error::Schema(format!("row {}: bus {bus} in a bus-{} dataset", line + 1, ds.bus)));
            }
            let scenario = rec[1]
                .parse()
                .map_err(|_| Error::Schema(format!("row {}: bad scenario {:?}", line + 1, &rec[1])))?;
            let status = rec[2].parse()?;
            let features = (3..3 + n_feat).map(num).collect::<Result<Vec<_>>>()?;
            ds.rows.push(DatasetRow {
                scenario,
                status,
                features,
                target: TargetVector {
                    p_s: num(3 + n_feat)?,
                    q_s: num(4 + n_feat)?,
                },
            });
        }
        Ok(ds)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_csv(File::create(path)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_csv(File::open(path)?)
    }
}

fn parse_header(header: &[String]) -> Result<Vec<(u32, u32)>> {
    let fixed_front = ["bus", "scenario", "status", "p_d", "q_d", "v_post"];
    let fixed_back = ["freq", "ps_mw", "qs_mvar"];
    let n = header.len();
    if n < fixed_front.len() + fixed_back.len() || !(n - fixed_front.len() - fixed_back.len()).is_multiple_of(2) {
        return Err(Error::Schema(format!("unexpected column count {n}")));
    }
    if header[..6] != fixed_front || header[n - 3..] != fixed_back {
        return Err(Error::Schema("unexpected column names".into()));
    }
    let deg = (n - 9) / 2;
    let mut branches = Vec::with_capacity(deg);
    for j in 0..deg {
        let p = &header[6 + j];
        let q = &header[6 + deg + j];
        let pair = p
            .strip_prefix("p_flow_")
            .and_then(|s| s.split_once('-'))
            .and_then(|(a, b)| Some((a.parse().ok()?, b.parse().ok()?)))
            .ok_or_else(|| Error::Schema(format!("bad flow column {p:?}")))?;
        if q != &format!("q_flow_{}-{}", pair.0, pair.1) {
            return Err(Error::Schema(format!("flow columns out of order at {q:?}")));
        }
        branches.push(pair);
    }
    Ok(branches)
}

/// Dataset for `bus` from generated records. Failed samples keep their
/// status with NaN features and targets.
pub fn build_dataset(bus: u32, case: &NetworkCase, records: &[SampleRecord]) -> Result<Dataset> {
    let mut ds = Dataset::for_bus(case, bus)?;
    let nan_row = |r: &SampleRecord, n: usize| DatasetRow {
        scenario: r.scenario,
        status: r.status,
        features: vec![f64::NAN; n],
        target: TargetVector {
            p_s: f64::NAN,
            q_s: f64::NAN,
        },
    };
    for r in records {
        let row = match (&r.status, &r.pf_post, &r.freq, &r.ols) {
            (RecordStatus::Ok, Some(pf), Some(freq), Some(ols)) => DatasetRow {
                scenario: r.scenario,
                status: r.status,
                features: extract_features(bus, &r.post_case, pf, freq)?.to_vec(),
                target: extract_target(bus, &r.post_case, ols)?,
            },
            _ => nan_row(r, ds.n_features()),
        };
        ds.push(row)?;
    }
    Ok(ds)
}

/// Per-column mean and standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl NormalizationStats {
    /// Population moments of each column; standard deviations are floored
    /// at [`STD_FLOOR`].
    pub fn fit<'a, I>(rows: I, width: usize) -> Self
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let mut n = 0usize;
        let mut sum = vec![0.0; width];
        let mut sq = vec![0.0; width];
        let rows: Vec<&[f64]> = rows.into_iter().collect();
        for r in &rows {
            for (s, &x) in sum.iter_mut().zip(r.iter()) {
                *s += x;
            }
            n += 1;
        }
        let mean: Vec<f64> = sum.iter().map(|s| if n > 0 { s / n as f64 } else { 0.0 }).collect();
        for r in &rows {
            for ((q, &x), m) in sq.iter_mut().zip(r.iter()).zip(&mean) {
                *q += (x - m) * (x - m);
            }
        }
        let std = sq
            .iter()
            .map(|q| if n > 0 { (q / n as f64).sqrt().max(STD_FLOOR) } else { 1.0 })
            .collect();
        Self { mean, std }
    }

    pub fn width(&self) -> usize {
        self.mean.len()
    }

    /// Constant columns (std at the floor) map to zero.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((&v, m), s)| if *s <= STD_FLOOR { 0.0 } else { (v - m) / s })
            .collect()
    }

    pub fn invert(&self, z: &[f64]) -> Vec<f64> {
        z.iter().zip(&self.mean).zip(&self.std).map(|((&v, m), s)| v * s + m).collect()
    }
}

/// Z-score the features of `ds`, fitting the statistics on its ok rows
/// unless `stats` is given. Targets are left in physical units.
pub fn normalize(ds: &Dataset, stats: Option<&NormalizationStats>) -> Result<(Dataset, NormalizationStats)> {
    let stats = match stats {
        Some(s) if s.width() != ds.n_features() => {
            return Err(Error::Dimension {
                expected: ds.n_features(),
                got: s.width(),
            })
        }
        Some(s) => s.clone(),
        None => NormalizationStats::fit(ds.ok_rows().map(|r| r.features.as_slice()), ds.n_features()),
    };
    let mut out = ds.clone();
    for r in &mut out.rows {
        r.features = stats.apply(&r.features);
    }
    Ok((out, stats))
}
