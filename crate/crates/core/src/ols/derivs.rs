//! First and second derivatives of the polar power expressions.
//!
//! Every bus injection and every branch-end flow is a sum of terms
//!
//! ```text
//! t = V_a·V_b·(c·cos(θ_a − θ_b) + s·sin(θ_a − θ_b))      (a ≠ b)
//! t = c·V_a²                                             (a = b)
//! ```
//!
//! with `(c, s) = (G, B)` for real power and `(−B, G)` for reactive power.
//! The local variable order of a term is `[θ_a, θ_b, V_a, V_b]`.

/// A pair admittance `G + jB` between `a` and `b`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Coupling {
    pub a: usize,
    pub b: usize,
    pub g: f64,
    pub bs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Part {
    Real,
    Reactive,
}

/// Value, gradient and Hessian of a sum of terms, over at most four
/// distinct local variables.
#[derive(Debug, Clone, Default)]
pub(crate) struct Local {
    pub value: f64,
    /// (θ_a, θ_b, V_a, V_b) where b may equal a.
    pub vars: [usize; 4],
    pub grad: [f64; 4],
    pub hess: [[f64; 4]; 4],
}

/// Global positions of `V` and `θ` for a bus.
pub(crate) trait VarMap {
    fn vm(&self, bus: usize) -> usize;
    fn va(&self, bus: usize) -> usize;
}

fn coefficients(c: &Coupling, part: Part) -> (f64, f64) {
    match part {
        Part::Real => (c.g, c.bs),
        Part::Reactive => (-c.bs, c.g),
    }
}

/// Accumulate one term into `out`, whose `vars` layout is anchored on
/// `(a, b)` of the first off-diagonal coupling, or `(a, a)`.
fn accumulate(out: &mut Local, cp: &Coupling, part: Part, vm: &[f64], va: &[f64]) {
    let (c, s) = coefficients(cp, part);
    if cp.a == cp.b {
        let v = vm[cp.a];
        out.value += c * v * v;
        out.grad[2] += 2.0 * c * v;
        out.hess[2][2] += 2.0 * c;
        return;
    }
    let (va_a, va_b, vm_a, vm_b) = (va[cp.a], va[cp.b], vm[cp.a], vm[cp.b]);
    let phi = va_a - va_b;
    let (sin, cos) = phi.sin_cos();
    let a0 = c * cos + s * sin;
    let a1 = -c * sin + s * cos;
    let vv = vm_a * vm_b;
    out.value += vv * a0;
    out.grad[0] += vv * a1;
    out.grad[1] -= vv * a1;
    out.grad[2] += vm_b * a0;
    out.grad[3] += vm_a * a0;

    let h = &mut out.hess;
    h[0][0] -= vv * a0;
    h[1][1] -= vv * a0;
    h[0][1] += vv * a0;
    h[1][0] += vv * a0;
    h[0][2] += vm_b * a1;
    h[2][0] += vm_b * a1;
    h[0][3] += vm_a * a1;
    h[3][0] += vm_a * a1;
    h[1][2] -= vm_b * a1;
    h[2][1] -= vm_b * a1;
    h[1][3] -= vm_a * a1;
    h[3][1] -= vm_a * a1;
    h[2][3] += a0;
    h[3][2] += a0;
}

/// Branch-end expression: self coupling at `a` plus mutual coupling to `b`.
pub(crate) fn branch_end<M: VarMap>(
    map: &M,
    selfc: Coupling,
    mutual: Coupling,
    part: Part,
    vm: &[f64],
    va: &[f64],
) -> Local {
    let mut out = Local {
        vars: [map.va(mutual.a), map.va(mutual.b), map.vm(mutual.a), map.vm(mutual.b)],
        ..Local::default()
    };
    accumulate(&mut out, &selfc, part, vm, va);
    accumulate(&mut out, &mutual, part, vm, va);
    out
}

/// Sparse accumulator for a bus injection, which touches every neighbour.
#[derive(Debug, Clone, Default)]
pub(crate) struct Injection {
    pub value: f64,
    pub grad: Vec<(usize, f64)>,
    pub hess: Vec<(usize, usize, f64)>,
}

pub(crate) fn injection<M: VarMap>(map: &M, row: &[Coupling], part: Part, vm: &[f64], va: &[f64]) -> Injection {
    let mut out = Injection::default();
    for cp in row {
        let mut loc = Local {
            vars: [map.va(cp.a), map.va(cp.b), map.vm(cp.a), map.vm(cp.b)],
            ..Local::default()
        };
        accumulate(&mut loc, cp, part, vm, va);
        out.value += loc.value;
        let used: &[usize] = if cp.a == cp.b { &[2] } else { &[0, 1, 2, 3] };
        for &p in used {
            out.grad.push((loc.vars[p], loc.grad[p]));
            for &q in used {
                if loc.hess[p][q] != 0.0 {
                    out.hess.push((loc.vars[p], loc.vars[q], loc.hess[p][q]));
                }
            }
        }
    }
    out
}
