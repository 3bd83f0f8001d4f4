//! Primal-dual interior-point method for smooth nonlinear programs
//!
//! ```text
//! min f(x)  s.t.  g(x) = 0,  h(x) ≤ 0,  lb ≤ x ≤ ub
//! ```
//!
//! Inequalities get slacks `z > 0` (`h(x) + z = 0`) and a logarithmic
//! barrier with parameter `γ`. Each iteration takes one Newton step on the
//! perturbed KKT conditions, reduced to the `(x, λ)` system
//!
//! ```text
//! [ M   Jgᵀ ] [dx]   [-N]      M = ∇²L + Jhᵀ diag(μ/z) Jh
//! [ Jg  0   ] [dλ] = [-g]      N = ∇L + Jhᵀ diag(1/z) (μ∘h + γ)
//! ```
//!
//! followed by separate primal and dual fraction-to-boundary step lengths
//! and `γ ← σ·zᵀμ/m`. Variable bounds are carried as inequality rows with
//! unit Jacobians (their contribution to `M` is diagonal); equal bounds
//! become equality rows.

use nalgebra::{DMatrix, DVector};

use crate::linalg::{DenseLu, LinearSolver};

/// A smooth NLP with dense derivatives.
pub trait Nlp {
    fn n_vars(&self) -> usize;
    /// Variable bounds; infinite entries are ignored.
    fn bounds(&self) -> (Vec<f64>, Vec<f64>);
    fn objective(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> DVector<f64>;
    /// Equality values and Jacobian (rows = constraints).
    fn equalities(&self, x: &[f64]) -> (DVector<f64>, DMatrix<f64>);
    /// Inequality values `h(x) ≤ 0` and Jacobian.
    fn inequalities(&self, x: &[f64]) -> (DVector<f64>, DMatrix<f64>);
    /// `∇²f + Σ λ_i ∇²g_i + Σ μ_j ∇²h_j`, for the problem's own constraints.
    fn lagrangian_hessian(&self, x: &[f64], lam: &[f64], mu: &[f64]) -> DMatrix<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IpmOptions {
    pub feas_tol: f64,
    pub grad_tol: f64,
    pub comp_tol: f64,
    pub cost_tol: f64,
    pub max_iter: usize,
    /// Fraction-to-boundary factor.
    pub step_fraction: f64,
    /// Barrier reduction factor.
    pub sigma: f64,
    /// First diagonal shift tried when the KKT matrix is singular.
    pub reg_min: f64,
    pub reg_max: f64,
}

impl Default for IpmOptions {
    fn default() -> Self {
        Self {
            feas_tol: 1e-6,
            grad_tol: 1e-6,
            comp_tol: 1e-6,
            cost_tol: 1e-6,
            max_iter: 150,
            step_fraction: 0.9995,
            sigma: 0.1,
            reg_min: 1e-10,
            reg_max: 1e-2,
        }
    }
}

impl IpmOptions {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.feas_tol = tol;
        self.grad_tol = tol;
        self.comp_tol = tol;
        self.cost_tol = tol;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IpmStatus {
    Optimal,
    MaxIter,
    NumericalFailure,
}

impl std::fmt::Display for IpmStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            IpmStatus::Optimal => "optimal",
            IpmStatus::MaxIter => "max_iter",
            IpmStatus::NumericalFailure => "numerical_failure",
        })
    }
}

/// Scaled KKT residuals of an iterate.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct KktResiduals {
    pub feasibility: f64,
    pub gradient: f64,
    pub complementarity: f64,
}

#[derive(Debug, Clone)]
pub struct IpmResult {
    pub x: Vec<f64>,
    pub f: f64,
    /// Multipliers of the problem's equalities (bound-fixing rows excluded).
    pub lam: Vec<f64>,
    /// Multipliers of the problem's inequalities (bound rows excluded).
    pub mu: Vec<f64>,
    /// Multipliers of the upper and lower variable bounds (zero where absent).
    pub mu_upper: Vec<f64>,
    pub mu_lower: Vec<f64>,
    pub status: IpmStatus,
    pub iterations: usize,
    pub kkt: KktResiduals,
}

#[derive(Clone, Copy)]
struct BoundRow {
    var: usize,
    /// +1 for `x - ub ≤ 0`, -1 for `lb - x ≤ 0`.
    sign: f64,
    bound: f64,
}

struct Layout {
    /// Variables fixed by equal bounds: (var, value).
    fixed: Vec<(usize, f64)>,
    bounds: Vec<BoundRow>,
}

impl Layout {
    fn new(lb: &[f64], ub: &[f64]) -> Self {
        let mut fixed = Vec::new();
        let mut bounds = Vec::new();
        for (k, (&l, &u)) in lb.iter().zip(ub).enumerate() {
            if l == u {
                fixed.push((k, l));
                continue;
            }
            if u.is_finite() {
                bounds.push(BoundRow { var: k, sign: 1.0, bound: u });
            }
            if l.is_finite() {
                bounds.push(BoundRow { var: k, sign: -1.0, bound: l });
            }
        }
        Layout { fixed, bounds }
    }
}

/// Evaluated constraint data at one iterate, with the bound rows appended
/// implicitly after the problem's own inequalities.
struct Eval {
    f: f64,
    grad: DVector<f64>,
    g: DVector<f64>,
    jg: DMatrix<f64>,
    h: DVector<f64>,
    jh: DMatrix<f64>,
}

fn evaluate<P: Nlp + ?Sized>(p: &P, lay: &Layout, x: &[f64]) -> Eval {
    let n = x.len();
    let (g0, jg0) = p.equalities(x);
    let (h0, jh0) = p.inequalities(x);
    let neq = g0.len() + lay.fixed.len();
    let mut g = DVector::zeros(neq);
    let mut jg = DMatrix::zeros(neq, n);
    g.rows_mut(0, g0.len()).copy_from(&g0);
    jg.rows_mut(0, g0.len()).copy_from(&jg0);
    for (r, &(k, v)) in lay.fixed.iter().enumerate() {
        g[g0.len() + r] = x[k] - v;
        jg[(g0.len() + r, k)] = 1.0;
    }
    let mut h = DVector::zeros(h0.len() + lay.bounds.len());
    h.rows_mut(0, h0.len()).copy_from(&h0);
    for (r, b) in lay.bounds.iter().enumerate() {
        h[h0.len() + r] = b.sign * (x[b.var] - b.bound);
    }
    Eval {
        f: p.objective(x),
        grad: p.gradient(x),
        g,
        jg,
        h,
        jh: jh0,
    }
}

/// `Jhᵀ·w` over both the dense rows and the bound rows.
fn jh_t_mul(e: &Eval, lay: &Layout, w: &DVector<f64>) -> DVector<f64> {
    let m0 = e.jh.nrows();
    let mut out = e.jh.tr_mul(&w.rows(0, m0).into_owned());
    for (r, b) in lay.bounds.iter().enumerate() {
        out[b.var] += b.sign * w[m0 + r];
    }
    out
}

/// `Jh·d`.
fn jh_mul(e: &Eval, lay: &Layout, d: &DVector<f64>) -> DVector<f64> {
    let m0 = e.jh.nrows();
    let mut out = DVector::zeros(m0 + lay.bounds.len());
    out.rows_mut(0, m0).copy_from(&(&e.jh * d));
    for (r, b) in lay.bounds.iter().enumerate() {
        out[m0 + r] = b.sign * d[b.var];
    }
    out
}

pub fn solve<P: Nlp + ?Sized>(p: &P, x0: &[f64], opts: &IpmOptions) -> IpmResult {
    solve_with(p, x0, opts, &DenseLu)
}

pub fn solve_with<P: Nlp + ?Sized>(p: &P, x0: &[f64], opts: &IpmOptions, lin: &dyn LinearSolver) -> IpmResult {
    let n = p.n_vars();
    let (lb, ub) = p.bounds();
    let lay = Layout::new(&lb, &ub);
    let mut x = DVector::from_iterator(n, x0.iter().enumerate().map(|(k, &v)| clamp_inside(v, lb[k], ub[k])));

    let mut e = evaluate(p, &lay, x.as_slice());
    let neq = e.g.len();
    let m0 = e.jh.nrows();
    let niq = e.h.len();

    // slacks and multipliers
    let z0 = 1.0;
    let mut gamma = 1.0;
    let mut z = DVector::from_iterator(niq, e.h.iter().map(|&h| if h < -z0 { -h } else { z0 }));
    let mut mu = DVector::from_iterator(niq, z.iter().map(|&zi| if gamma / zi > z0 { gamma / zi } else { z0 }));
    let mut lam = DVector::zeros(neq);

    let lagrangian_grad = |e: &Eval, lam: &DVector<f64>, mu: &DVector<f64>| -> DVector<f64> {
        &e.grad + e.jg.tr_mul(lam) + jh_t_mul(e, &lay, mu)
    };

    let residuals = |e: &Eval, x: &DVector<f64>, z: &DVector<f64>, lam: &DVector<f64>, mu: &DVector<f64>| {
        let lx = lagrangian_grad(e, lam, mu);
        let xn = x.amax();
        let maxh = e.h.iter().fold(0.0f64, |m, &v| m.max(v));
        let feas = e.g.amax().max(maxh) / (1.0 + xn.max(if niq > 0 { z.amax() } else { 0.0 }));
        let mult = (if neq > 0 { lam.amax() } else { 0.0 }).max(if niq > 0 { mu.amax() } else { 0.0 });
        let grad = lx.amax() / (1.0 + mult);
        let comp = z.dot(mu) / (1.0 + xn);
        KktResiduals {
            feasibility: feas,
            gradient: grad,
            complementarity: comp,
        }
    };

    let mut kkt = residuals(&e, &x, &z, &lam, &mu);
    let mut f_prev = e.f;
    let mut cost_change = f64::INFINITY;
    let mut status = IpmStatus::MaxIter;
    let mut iterations = 0;

    let converged = |k: &KktResiduals, cost: f64| {
        k.feasibility < opts.feas_tol && k.gradient < opts.grad_tol && k.complementarity < opts.comp_tol && cost < opts.cost_tol
    };

    while iterations < opts.max_iter {
        if converged(&kkt, cost_change) {
            status = IpmStatus::Optimal;
            break;
        }
        iterations += 1;

        let lam_p = lam.rows(0, neq - lay.fixed.len()).into_owned();
        let mu_p = mu.rows(0, m0).into_owned();
        let mut m = p.lagrangian_hessian(x.as_slice(), lam_p.as_slice(), mu_p.as_slice());
        // Jhᵀ diag(μ/z) Jh
        let scaled: DVector<f64> = mu.component_div(&z);
        if m0 > 0 {
            let mut jh_s = e.jh.clone();
            for r in 0..m0 {
                jh_s.row_mut(r).scale_mut(scaled[r]);
            }
            m += e.jh.tr_mul(&jh_s);
        }
        for (r, b) in lay.bounds.iter().enumerate() {
            m[(b.var, b.var)] += scaled[m0 + r];
        }
        let lx = lagrangian_grad(&e, &lam, &mu);
        let w: DVector<f64> = DVector::from_iterator(niq, (0..niq).map(|j| (mu[j] * e.h[j] + gamma) / z[j]));
        let nvec = &lx + jh_t_mul(&e, &lay, &w);

        let dim = n + neq;
        let mut rhs = DVector::zeros(dim);
        rhs.rows_mut(0, n).copy_from(&(-&nvec));
        rhs.rows_mut(n, neq).copy_from(&(-&e.g));

        let mut step = None;
        let mut reg = 0.0;
        while step.is_none() {
            let mut kkt_m = DMatrix::zeros(dim, dim);
            kkt_m.view_mut((0, 0), (n, n)).copy_from(&m);
            kkt_m.view_mut((0, n), (n, neq)).copy_from(&e.jg.transpose());
            kkt_m.view_mut((n, 0), (neq, n)).copy_from(&e.jg);
            if reg > 0.0 {
                for i in 0..n {
                    kkt_m[(i, i)] += reg;
                }
                for i in n..dim {
                    kkt_m[(i, i)] -= reg;
                }
            }
            step = lin.solve(kkt_m, &rhs);
            if step.is_none() {
                reg = if reg == 0.0 { opts.reg_min } else { reg * 10.0 };
                if reg > opts.reg_max {
                    break;
                }
            }
        }
        let Some(sol) = step else {
            status = IpmStatus::NumericalFailure;
            break;
        };
        let dx = sol.rows(0, n).into_owned();
        let dlam = sol.rows(n, neq).into_owned();
        let dz = -&e.h - &z - jh_mul(&e, &lay, &dx);
        let dmu = DVector::from_iterator(niq, (0..niq).map(|j| -mu[j] + (gamma - mu[j] * dz[j]) / z[j]));

        let alpha_p = max_step(&z, &dz, opts.step_fraction);
        let alpha_d = max_step(&mu, &dmu, opts.step_fraction);

        x += alpha_p * &dx;
        z += alpha_p * &dz;
        lam += alpha_d * &dlam;
        mu += alpha_d * &dmu;
        if niq > 0 {
            gamma = opts.sigma * z.dot(&mu) / niq as f64;
        }

        if !x.iter().all(|v| v.is_finite()) || !mu.iter().all(|v| v.is_finite()) {
            status = IpmStatus::NumericalFailure;
            break;
        }
        e = evaluate(p, &lay, x.as_slice());
        kkt = residuals(&e, &x, &z, &lam, &mu);
        cost_change = (e.f - f_prev).abs() / (1.0 + f_prev.abs());
        f_prev = e.f;
        if !e.f.is_finite() {
            status = IpmStatus::NumericalFailure;
            break;
        }
    }
    if status == IpmStatus::MaxIter && converged(&kkt, cost_change) {
        status = IpmStatus::Optimal;
    }

    let mut mu_upper = vec![0.0; n];
    let mut mu_lower = vec![0.0; n];
    for (r, b) in lay.bounds.iter().enumerate() {
        if b.sign > 0.0 {
            mu_upper[b.var] = mu[m0 + r];
        } else {
            mu_lower[b.var] = mu[m0 + r];
        }
    }
    let n_own_eq = neq - lay.fixed.len();
    IpmResult {
        f: e.f,
        lam: lam.as_slice()[..n_own_eq].to_vec(),
        mu: mu.as_slice()[..m0].to_vec(),
        x: x.as_slice().to_vec(),
        mu_upper,
        mu_lower,
        status,
        iterations,
        kkt,
    }
}

fn clamp_inside(v: f64, lb: f64, ub: f64) -> f64 {
    if lb == ub {
        return lb;
    }
    v.max(lb).min(ub)
}

fn max_step(v: &DVector<f64>, dv: &DVector<f64>, xi: f64) -> f64 {
    let mut alpha = 1.0f64;
    for (a, d) in v.iter().zip(dv.iter()) {
        if *d < 0.0 {
            alpha = alpha.min(xi * (-a / d));
        }
    }
    alpha
}
