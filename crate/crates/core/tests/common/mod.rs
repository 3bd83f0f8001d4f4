//! Small hand-built networks shared by the integration tests.
#![allow(dead_code)]

use ols_core::netcase::parse_case;
use ols_core::rng::SeededRng;
use num_complex::Complex64;
use ols_core::{NetworkCase, PowerFlowSolution};

/// Slack bus 1 feeding a PQ load at bus 2 over one lossless line.
pub fn two_bus(x: f64, p_d_mw: f64, q_d_mvar: f64, rating_mva: f64) -> NetworkCase {
    let text = format!(
        "mpc.baseMVA = 100;
mpc.bus = [
1 3 0 0 0 0 1 1 0 100 1 1.0 1.0;
2 1 {p_d_mw} {q_d_mvar} 0 0 1 1 0 100 1 1.2 0.8;
];
mpc.gen = [
1 0 0 500 -500 1.0 100 1 500 0;
];
mpc.branch = [
1 2 0 {x} 0 {rating_mva} 0 0 0 0 1 -360 360;
];
mpc.gencost = [
2 0 0 3 0.01 20 0;
];
"
    );
    parse_case(&text).expect("valid two-bus case")
}

/// Random three-bus instance: cheap slack at bus 1, limited expensive
/// unit at bus 2, load at bus 3 behind rated lines.
pub fn three_bus(seed: u64) -> NetworkCase {
    let mut rng = SeededRng::new(seed);
    let v1 = rng.uniform_in(0.98, 1.05);
    let v2 = rng.uniform_in(0.98, 1.05);
    let pmax2 = rng.uniform_in(20.0, 60.0);
    let b2 = rng.uniform_in(30.0, 45.0);
    let p_d = rng.uniform_in(80.0, 140.0);
    let q_d = rng.uniform_in(5.0, 20.0);
    let x13 = rng.uniform_in(0.15, 0.3);
    let rate13 = rng.uniform_in(50.0, 90.0);
    let rate23 = rng.uniform_in(30.0, 60.0);
    let text = format!(
        "mpc.baseMVA = 100;
mpc.bus = [
1 3 0 0 0 0 1 1 0 100 1 {v1} {v1};
2 2 0 0 0 0 1 1 0 100 1 {v2} {v2};
3 1 {p_d} {q_d} 0 0 1 1 0 100 1 1.1 0.9;
];
mpc.gen = [
1 0 0 300 -300 {v1} 100 1 300 0;
2 0 0 100 -100 {v2} 100 1 {pmax2} 0;
];
mpc.branch = [
1 2 0.01 0.1 0.02 0 0 0 0 0 1 -360 360;
1 3 0.02 {x13} 0.02 {rate13} 0 0 0 0 1 -360 360;
2 3 0.02 0.25 0.02 {rate23} 0 0 0 0 1 -360 360;
];
mpc.gencost = [
2 0 0 3 0.01 20 0;
2 0 0 3 0.02 {b2} 0;
];
"
    );
    parse_case(&text).expect("valid three-bus case")
}

/// Three buses in a ring with a load at bus 3.
pub fn triangle() -> NetworkCase {
    parse_case(
        "mpc.baseMVA = 100;
mpc.bus = [
1 3 0 0 0 0 1 1 0 100 1 1.1 0.9;
2 1 20 5 0 0 1 1 0 100 1 1.1 0.9;
3 1 40 10 0 0 1 1 0 100 1 1.1 0.9;
];
mpc.gen = [
1 0 0 200 -200 1.0 100 1 200 0;
];
mpc.branch = [
1 2 0.01 0.1 0 0 0 0 0 0 1 -360 360;
2 3 0.01 0.1 0 0 0 0 0 0 1 -360 360;
1 3 0.01 0.1 0 0 0 0 0 0 1 -360 360;
];
mpc.gencost = [
2 0 0 3 0.01 20 0;
];
",
    )
    .expect("valid triangle case")
}

/// Largest relative gap between backprop and central differences for a
/// random architecture and batch drawn from `seed`.
pub fn gradient_check(seed: u64) -> f64 {
    use ols_core::mlp::{init_mlp, MlpModel};
    let mut rng = SeededRng::new(seed);
    let depth = 1 + rng.below(3) as usize;
    let mut sizes = vec![1 + rng.below(6) as usize];
    for _ in 0..depth {
        sizes.push(1 + rng.below(8) as usize);
    }
    sizes.push(1 + rng.below(3) as usize);
    let batch = 1 + rng.below(10) as usize;
    let xs: Vec<Vec<f64>> = (0..batch).map(|_| (0..sizes[0]).map(|_| rng.uniform_in(-2.0, 2.0)).collect()).collect();
    let ys: Vec<Vec<f64>> = (0..batch).map(|_| (0..*sizes.last().unwrap()).map(|_| rng.uniform_in(-1.0, 1.0)).collect()).collect();
    let lambda = rng.uniform_in(0.0, 1e-2);
    let model = init_mlp(&sizes, seed).unwrap();
    let (_, g) = model.gradients(&xs, &ys, lambda, None).unwrap();

    let loss = |m: &MlpModel| m.gradients(&xs, &ys, lambda, None).unwrap().0;
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-4);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for k in 0..model.layers.len() {
        for idx in 0..model.layers[k].w.len() {
            let mut p = model.clone();
            p.layers[k].w[idx] += h;
            let mut m = model.clone();
            m.layers[k].w[idx] -= h;
            worst = worst.max(rel(g.dw[k][idx], (loss(&p) - loss(&m)) / (2.0 * h)));
        }
        for idx in 0..model.layers[k].b.len() {
            let mut p = model.clone();
            p.layers[k].b[idx] += h;
            let mut m = model.clone();
            m.layers[k].b[idx] -= h;
            worst = worst.max(rel(g.db[k][idx], (loss(&p) - loss(&m)) / (2.0 * h)));
        }
    }
    worst
}

/// Largest nodal power mismatch, recomputed branch by branch.
pub fn pi_model_mismatch(case: &NetworkCase, sol: &PowerFlowSolution) -> f64 {
    let base = case.base_mva;
    let idx = case.index_map();
    let v = sol.phasors();
    let mut s = vec![Complex64::new(0.0, 0.0); case.n_bus()];
    for br in case.branches.iter().filter(|b| b.in_service) {
        let (f, t) = (idx[&br.from], idx[&br.to]);
        let ys = Complex64::new(1.0, 0.0) / Complex64::new(br.r, br.x);
        let half = Complex64::new(0.0, br.b_ch / 2.0);
        let tap = if br.tap == 0.0 { 1.0 } else { br.tap };
        let a = Complex64::from_polar(tap, br.shift.to_radians());
        let i_f = (ys + half) / (tap * tap) * v[f] - ys / a.conj() * v[t];
        let i_t = (ys + half) * v[t] - ys / a * v[f];
        s[f] += v[f] * i_f.conj();
        s[t] += v[t] * i_t.conj();
    }
    let mut worst: f64 = 0.0;
    for (i, bus) in case.buses.iter().enumerate() {
        let vm2 = v[i].norm_sqr();
        let mut net = Complex64::new(-bus.p_d / base, -bus.q_d / base);
        net -= Complex64::new(bus.shunt_g, -bus.shunt_b) / base * vm2;
        for (k, g) in case.gens.iter().enumerate() {
            if g.in_service && g.bus == bus.id {
                net += Complex64::new(sol.p_g[k], sol.q_g[k]);
            }
        }
        worst = worst.max((s[i] - net).norm());
    }
    worst
}

/// Exact receiving-end voltage of a lossless line fed at 1∠0.
pub fn two_bus_closed_form(x: f64, p: f64, q: f64) -> (f64, f64) {
    let a = 1.0 - 2.0 * q * x;
    let v2 = (a + (a * a - 4.0 * x * x * (p * p + q * q)).sqrt()) / 2.0;
    let v = v2.sqrt();
    (v, -(p * x / v).asin())
}
