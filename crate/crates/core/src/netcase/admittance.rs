use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{BranchRecord, NetworkCase};

/// Two-port admittances of one branch in the standard pi model with an
/// ideal phase-shifting transformer on the from side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchAdmittance {
    pub yff: Complex64,
    pub yft: Complex64,
    pub ytf: Complex64,
    pub ytt: Complex64,
}

impl BranchAdmittance {
    pub fn of(br: &BranchRecord) -> Self {
        let ys = Complex64::new(1.0, 0.0) / Complex64::new(br.r, br.x);
        let charging = Complex64::new(0.0, br.b_ch / 2.0);
        let tap = Complex64::from_polar(br.tap, br.shift_rad());
        let ytt = ys + charging;
        BranchAdmittance {
            yff: ytt / (br.tap * br.tap),
            yft: -ys / tap.conj(),
            ytf: -ys / tap,
            ytt,
        }
    }
}

/// Sparse nodal admittance matrix `Y = G + jB`, stored row-wise with
/// ascending column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmittanceMatrix {
    n: usize,
    rows: Vec<Vec<(usize, Complex64)>>,
}

impl AdmittanceMatrix {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, k: usize) -> Complex64 {
        self.rows[i]
            .binary_search_by_key(&k, |e| e.0)
            .map(|p| self.rows[i][p].1)
            .unwrap_or_default()
    }

    pub fn g(&self, i: usize, k: usize) -> f64 {
        self.get(i, k).re
    }

    pub fn b(&self, i: usize, k: usize) -> f64 {
        self.get(i, k).im
    }

    /// Nonzeros of row `i` as `(column, value)`.
    pub fn row(&self, i: usize) -> &[(usize, Complex64)] {
        &self.rows[i]
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (i, row) in self.rows.iter().enumerate() {
            for &(k, y) in row {
                m[(i, k)] = y;
            }
        }
        m
    }

    /// `Y·v` for a complex voltage vector.
    pub fn mul(&self, v: &[Complex64]) -> Vec<Complex64> {
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(k, y)| y * v[k]).sum())
            .collect()
    }

    fn add(&mut self, i: usize, k: usize, y: Complex64) {
        let row = &mut self.rows[i];
        match row.binary_search_by_key(&k, |e| e.0) {
            Ok(p) => row[p].1 += y,
            Err(p) => row.insert(p, (k, y)),
        }
    }
}

/// Assemble the bus admittance matrix from in-service branches and bus
/// shunts, in per-unit on the case base.
pub fn build_admittance(case: &NetworkCase) -> AdmittanceMatrix {
    let n = case.n_bus();
    let idx = case.index_map();
    let mut y = AdmittanceMatrix {
        n,
        rows: vec![Vec::new(); n],
    };
    for (_, br) in case.in_service_branches() {
        let f = idx[&br.from];
        let t = idx[&br.to];
        let a = BranchAdmittance::of(br);
        y.add(f, f, a.yff);
        y.add(f, t, a.yft);
        y.add(t, f, a.ytf);
        y.add(t, t, a.ytt);
    }
    for (i, bus) in case.buses.iter().enumerate() {
        if bus.shunt_g != 0.0 || bus.shunt_b != 0.0 {
            y.add(i, i, Complex64::new(bus.shunt_g, bus.shunt_b) / case.base_mva);
        }
    }
    y
}
