//! Deterministic expansion model in rectangular voltages, solved locally at a
//! fixed topology.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{build_relaxed_tep, rows_to_qcqp, Converted, RowKind, SparseRow, TepModel};
use crate::ipm::{solve, IpmOptions, NlpSolution, QcqpProblem, QcqpRow};
use crate::netcase::{CaseError, NetworkCase};

/// Nonconvex model: the relaxed variables plus `e_i, f_i` tied to `c, s` by
/// `c_ii = e_i^2 + f_i^2`, `c_ij = e_i e_j + f_i f_j`, `s_ij = f_i e_j - f_j e_i`.
/// Angle rows are absent; the angles are fixed at zero.
#[derive(Debug, Clone)]
pub struct NonconvexTep {
    pub relaxed: TepModel,
}

pub fn build_deterministic_tep(case: &NetworkCase) -> Result<NonconvexTep, CaseError> {
    Ok(NonconvexTep { relaxed: build_relaxed_tep(case)? })
}

/// Local optimum at a fixed topology.
#[derive(Debug, Clone)]
pub struct NonconvexSolution {
    /// Hourly cost including investment.
    pub objective: f64,
    pub y_s: Vec<f64>,
    pub e: Vec<f64>,
    pub f: Vec<f64>,
    pub starts_converged: usize,
    pub ipm: NlpSolution<f64>,
}

impl NonconvexTep {
    pub fn n_buses(&self) -> usize {
        self.relaxed.net.n_buses()
    }

    pub fn e_index(&self, i: usize) -> usize {
        self.relaxed.space.n_s() + 2 * i
    }

    pub fn f_index(&self, i: usize) -> usize {
        self.relaxed.space.n_s() + 2 * i + 1
    }

    /// Rows that survive at a fixed topology, with the binaries and `xi` moved
    /// to the right side. An empty `xi` reads as zero.
    pub fn fixed_rows(&self, y_m: &[f64], xi: &[f64]) -> Vec<SparseRow> {
        let xv = |j: usize| xi.get(j).copied().unwrap_or(0.0);
        self.relaxed
            .rows
            .iter()
            .filter(|r| !matches!(r.kind, RowKind::Sequential | RowKind::CandAngle | RowKind::BaseAngle | RowKind::Angle))
            .map(|r| SparseRow { coefs: r.ys.clone(), rhs: r.rhs - r.ym.iter().map(|&(j, a)| a * y_m[j]).sum::<f64>() - r.xi.iter().map(|&(j, a)| a * xv(j)).sum::<f64>(), eq: r.eq })
            .collect()
    }

    /// The QCQP at `y_m` and `xi`, started from `e0, f0`.
    pub fn problem_at(&self, y_m: &[f64], xi: &[f64], e0: &[f64], f0: &[f64]) -> (QcqpProblem<f64>, Converted) {
        let m = &self.relaxed;
        let (sp, net) = (&m.space, &m.net);
        let nb = net.n_buses();
        let ns = sp.n_s();
        let inf = f64::INFINITY;
        let mut lower = vec![-inf; ns];
        let mut upper = vec![inf; ns];
        for t in sp.theta.iter().flatten() {
            lower[*t] = 0.0;
            upper[*t] = 0.0;
        }
        let mut start = vec![0.0; ns];
        for i in 0..nb {
            start[sp.c_ii[i]] = e0[i] * e0[i] + f0[i] * f0[i];
        }
        for (c, cr) in net.corridors.iter().enumerate() {
            start[sp.c_ij[c]] = e0[cr.i] * e0[cr.j] + f0[cr.i] * f0[cr.j];
            start[sp.s_ij[c]] = f0[cr.i] * e0[cr.j] - f0[cr.j] * e0[cr.i];
        }
        for (g, gen) in net.gens.iter().enumerate() {
            start[sp.p_g[g]] = 0.5 * (gen.p_min + gen.p_max);
            start[sp.q_g[g]] = 0.5 * (gen.q_min + gen.q_max);
        }
        let rows = self.fixed_rows(y_m, xi);
        let mut cv = rows_to_qcqp(&lower, &upper, &start, &rows);
        let b = &mut cv.builder;
        for i in 0..nb {
            let vmax = net.buses[i].v_max;
            if i == net.ref_bus {
                b.add_var(net.buses[i].v_min, vmax, e0[i]);
                b.add_var(0.0, 0.0, 0.0);
            } else {
                b.add_var(-vmax, vmax, e0[i]);
                b.add_var(-vmax, vmax, f0[i]);
            }
        }
        let (e, f) = (|i: usize| ns + 2 * i, |i: usize| ns + 2 * i + 1);
        for i in 0..nb {
            b.add_row(QcqpRow { linear: vec![(sp.c_ii[i], 1.0)], quad: vec![(e(i), e(i), -1.0), (f(i), f(i), -1.0)], lower: 0.0, upper: 0.0 });
        }
        for (c, cr) in net.corridors.iter().enumerate() {
            let (i, j) = (cr.i, cr.j);
            b.add_row(QcqpRow { linear: vec![(sp.c_ij[c], 1.0)], quad: vec![(e(i), e(j), -1.0), (f(i), f(j), -1.0)], lower: 0.0, upper: 0.0 });
            b.add_row(QcqpRow { linear: vec![(sp.s_ij[c], 1.0)], quad: vec![(f(i), e(j), -1.0), (f(j), e(i), 1.0)], lower: 0.0, upper: 0.0 });
        }
        for (j, &a) in m.f_s.iter().enumerate() {
            if a != 0.0 {
                b.add_objective_linear(j, a);
            }
        }
        b.add_objective_const(m.f_c + m.f_m.iter().zip(y_m).map(|(a, x)| a * x).sum::<f64>());
        (cv.builder.clone().build(), cv)
    }

    /// Best local optimum over a flat start and `extra` perturbed starts.
    pub fn solve_local(&self, y_m: &[f64], extra: usize, seed: u64) -> Option<NonconvexSolution> {
        let nb = self.n_buses();
        let ns = self.relaxed.space.n_s();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let opts = IpmOptions { tol: 1e-8, max_iter: 300, ..Default::default() };
        let mut best: Option<NonconvexSolution> = None;
        let mut converged = 0;
        for s in 0..=extra {
            let (e0, f0): (Vec<f64>, Vec<f64>) = if s == 0 {
                (vec![1.0; nb], vec![0.0; nb])
            } else {
                (0..nb).map(|_| (1.0 + rng.gen_range(-0.05..0.05), rng.gen_range(-0.05..0.05))).unzip()
            };
            let (p, _) = self.problem_at(y_m, &[], &e0, &f0);
            let sol = solve(&p, &opts);
            if !sol.converged() {
                continue;
            }
            converged += 1;
            if best.as_ref().is_none_or(|b| sol.objective < b.objective) {
                best = Some(NonconvexSolution {
                    objective: sol.objective,
                    y_s: sol.x[..ns].to_vec(),
                    e: (0..nb).map(|i| sol.x[ns + 2 * i]).collect(),
                    f: (0..nb).map(|i| sol.x[ns + 2 * i + 1]).collect(),
                    starts_converged: 0,
                    ipm: sol,
                });
            }
        }
        best.map(|mut b| {
            b.starts_converged = converged;
            b
        })
    }
}
