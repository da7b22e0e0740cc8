//! Random instance generators and brute-force oracles shared by the
//! integration tests.
#![allow(dead_code)]

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rtep::ipm::{self, IpmOptions, QcqpBuilder, QcqpRow};
use rtep::linalg::CsrMatrix;
use rtep::milp::{LpProblem, MilpProblem, RowSense};

const INF: f64 = f64::INFINITY;

/// Feasible, bounded LP with mixed row senses and bound types.
pub fn random_lp(seed: u64) -> LpProblem<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(3..10);
    let m = rng.gen_range(2..8);
    random_lp_sized(seed, m, n)
}

pub fn random_lp_sized(seed: u64, m: usize, n: usize) -> LpProblem<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut c = Vec::new();
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    let mut x0 = Vec::new();
    for _ in 0..n {
        if rng.gen_bool(0.3) {
            lower.push(0.0);
            upper.push(INF);
            c.push(rng.gen_range(0.1..2.0));
            x0.push(rng.gen_range(0.0..2.0));
        } else {
            let l = -rng.gen_range(0.0..3.0);
            let u = rng.gen_range(0.0..3.0);
            lower.push(l);
            upper.push(u);
            c.push(rng.gen_range(-2.0..2.0));
            x0.push(rng.gen_range(l..=u));
        }
    }
    let mut dense = vec![0.0; m * n];
    for v in dense.iter_mut() {
        if rng.gen_bool(0.6) {
            *v = rng.gen_range(-3.0..3.0);
        }
    }
    // Occasionally duplicate a row to create degeneracy.
    if m > 2 && rng.gen_bool(0.3) {
        for j in 0..n {
            dense[(m - 1) * n + j] = dense[j];
        }
    }
    let mut senses = Vec::new();
    let mut b = Vec::new();
    for i in 0..m {
        let ax: f64 = (0..n).map(|j| dense[i * n + j] * x0[j]).sum();
        let pick = rng.gen_range(0..5);
        let (s, v) = match pick {
            0 => (RowSense::Eq, ax),
            1 | 2 => (RowSense::Le, ax + rng.gen_range(0.0..1.0)),
            _ => (RowSense::Ge, ax - rng.gen_range(0.0..1.0)),
        };
        senses.push(s);
        b.push(v);
    }
    LpProblem { c, a: CsrMatrix::from_dense(m, n, &dense), senses, b, lower, upper }
}

pub fn lp_via_ipm(lp: &LpProblem<f64>) -> ipm::NlpSolution<f64> {
    let mut bld = QcqpBuilder::new();
    for j in 0..lp.num_vars() {
        bld.add_var(lp.lower[j], lp.upper[j], 0.0);
        bld.add_objective_linear(j, lp.c[j]);
    }
    for i in 0..lp.num_rows() {
        let linear: Vec<(usize, f64)> = lp.a.row_iter(i).collect();
        let (lo, hi) = match lp.senses[i] {
            RowSense::Le => (-INF, lp.b[i]),
            RowSense::Ge => (lp.b[i], INF),
            RowSense::Eq => (lp.b[i], lp.b[i]),
        };
        bld.add_row(QcqpRow { linear, quad: vec![], lower: lo, upper: hi });
    }
    let opts = IpmOptions { tol: 1e-10, ..Default::default() };
    ipm::solve(&bld.build(), &opts)
}

/// Feasible pure-binary program with integer data.
pub fn random_binary_program(seed: u64, nbin: usize) -> MilpProblem<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.gen_range(2..6);
    let x0: Vec<f64> = (0..nbin).map(|_| if rng.gen_bool(0.5) { 1.0 } else { 0.0 }).collect();
    let c: Vec<f64> = (0..nbin).map(|_| rng.gen_range(-10..=10) as f64).collect();
    let mut dense = vec![0.0; m * nbin];
    for v in dense.iter_mut() {
        if rng.gen_bool(0.7) {
            *v = rng.gen_range(-3..=6) as f64;
        }
    }
    let mut senses = Vec::new();
    let mut b = Vec::new();
    for i in 0..m {
        let ax: f64 = (0..nbin).map(|j| dense[i * nbin + j] * x0[j]).sum();
        if i == 0 && rng.gen_bool(0.3) {
            senses.push(RowSense::Eq);
            b.push(ax);
        } else if rng.gen_bool(0.7) {
            senses.push(RowSense::Le);
            b.push(ax + rng.gen_range(0..4) as f64);
        } else {
            senses.push(RowSense::Ge);
            b.push(ax - rng.gen_range(0..4) as f64);
        }
    }
    let lp = LpProblem {
        c,
        a: CsrMatrix::from_dense(m, nbin, &dense),
        senses,
        b,
        lower: vec![0.0; nbin],
        upper: vec![1.0; nbin],
    };
    MilpProblem { lp, integer: vec![true; nbin] }
}

/// Enumerates every 0/1 point; returns the best objective and point.
pub fn brute_force_binary(p: &MilpProblem<f64>) -> Option<(f64, Vec<f64>)> {
    let n = p.lp.num_vars();
    let rows: Vec<Vec<(usize, f64)>> = (0..p.lp.num_rows()).map(|i| p.lp.a.row_iter(i).collect()).collect();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u32..(1u32 << n) {
        let x: Vec<f64> = (0..n).map(|j| ((mask >> j) & 1) as f64).collect();
        let ok = rows.iter().enumerate().all(|(i, r)| {
            let ax: f64 = r.iter().map(|&(j, a)| a * x[j]).sum();
            match p.lp.senses[i] {
                RowSense::Le => ax <= p.lp.b[i] + 1e-9,
                RowSense::Ge => ax >= p.lp.b[i] - 1e-9,
                RowSense::Eq => (ax - p.lp.b[i]).abs() <= 1e-9,
            }
        });
        if ok {
            let obj = p.lp.objective(&x);
            if best.as_ref().is_none_or(|(b, _)| obj < *b) {
                best = Some((obj, x));
            }
        }
    }
    best
}
