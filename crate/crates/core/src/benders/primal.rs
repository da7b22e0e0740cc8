//! Convex slave at a fixed plan and a fixed uncertainty realization.

use super::{slave_ipm_options, SlaveError};
use crate::formulation::{rows_to_qcqp, CompactRobustModel, Converted, SparseRow, H_DIAG};
use crate::ipm::{solve, NlpSolution, QcqpProblem, QcqpRow};

#[derive(Debug, Clone)]
pub struct PrimalSlaveSolution {
    pub y_s: Vec<f64>,
    pub y_cone: Vec<f64>,
    /// `F_s y_s + F_c`, hourly.
    pub objective: f64,
    pub z_ms: Vec<f64>,
    pub lambda: Vec<f64>,
    pub z: Vec<f64>,
    pub z_c: Vec<f64>,
    pub lambda_cs: Vec<f64>,
    pub ipm: NlpSolution<f64>,
}

/// All slave rows with `y_m` and `ξ` moved to the right side, in T/G, B_e, B_ie order.
pub(crate) fn slave_rows(m: &CompactRobustModel, y_m: &[f64], xi: &[f64]) -> Vec<SparseRow> {
    let mut rows = Vec::with_capacity(m.r.len() + m.t_e.len() + m.t_ie.len());
    let ty = m.t.mul_vec(y_m);
    for k in 0..m.r.len() {
        let (c, v) = m.g.row(k);
        rows.push(SparseRow { coefs: c.iter().copied().zip(v.iter().copied()).collect(), rhs: m.r[k] - ty[k], eq: false });
    }
    let jx = m.j_e.mul_vec(xi);
    for k in 0..m.t_e.len() {
        let (c, v) = m.b_e.row(k);
        rows.push(SparseRow { coefs: c.iter().copied().zip(v.iter().copied()).collect(), rhs: m.t_e[k] - jx[k], eq: true });
    }
    let jx = m.j_ie.mul_vec(xi);
    for k in 0..m.t_ie.len() {
        let (c, v) = m.b_ie.row(k);
        rows.push(SparseRow { coefs: c.iter().copied().zip(v.iter().copied()).collect(), rhs: m.t_ie[k] - jx[k], eq: false });
    }
    rows
}

/// A point inside the voltage box and the cones.
pub(crate) fn slave_start(m: &CompactRobustModel) -> Vec<f64> {
    let sp = &m.space;
    let mut x = vec![0.0; m.n_s()];
    for (i, b) in m.net.buses.iter().enumerate() {
        x[sp.c_ii[i]] = 0.5 * (b.v_min * b.v_min + b.v_max * b.v_max);
    }
    for (c, cr) in m.net.corridors.iter().enumerate() {
        x[sp.c_ij[c]] = 0.95 * x[sp.c_ii[cr.i]].min(x[sp.c_ii[cr.j]]);
    }
    for (g, gen) in m.net.gens.iter().enumerate() {
        x[sp.p_g[g]] = 0.5 * (gen.p_min + gen.p_max);
        x[sp.q_g[g]] = 0.5 * (gen.q_min + gen.q_max);
    }
    x
}

/// The slave as handed to the interior-point solver, with the row map and the cone rows.
fn assemble(m: &CompactRobustModel, y_m: &[f64], xi: &[f64]) -> (QcqpProblem<f64>, Converted, Vec<usize>) {
    let ns = m.n_s();
    let rows = slave_rows(m, y_m, xi);
    let inf = f64::INFINITY;
    let mut cv = rows_to_qcqp(&vec![-inf; ns], &vec![inf; ns], &slave_start(m), &rows);
    let b = &mut cv.builder;
    let sp = &m.space;
    // Rotated cone c_ij^2 + s_ij^2 <= c_ii c_jj, a quarter of y^T H y with y = -U y_s.
    let mut cone_rows = Vec::with_capacity(m.n_corridors());
    for (c, cr) in m.net.corridors.iter().enumerate() {
        let q = vec![(sp.c_ij[c], sp.c_ij[c], 1.0), (sp.s_ij[c], sp.s_ij[c], 1.0), (sp.c_ii[cr.i], sp.c_ii[cr.j], -1.0)];
        cone_rows.push(b.add_row(QcqpRow { linear: vec![], quad: q, lower: -inf, upper: 0.0 }));
    }
    for (j, &a) in m.f_s.iter().enumerate() {
        if a != 0.0 {
            b.add_objective_linear(j, a);
        }
    }
    b.add_objective_const(m.f_c);
    let p = cv.builder.clone().build();
    (p, cv, cone_rows)
}

pub fn primal_slave_problem(m: &CompactRobustModel, y_m: &[f64], xi: &[f64]) -> QcqpProblem<f64> {
    assemble(m, y_m, xi).0
}

pub fn solve_primal_slave(m: &CompactRobustModel, y_m: &[f64], xi: &[f64]) -> Result<PrimalSlaveSolution, SlaveError> {
    let ns = m.n_s();
    let (p, cv, cone_rows) = assemble(m, y_m, xi);
    let rows = slave_rows(m, y_m, xi);
    let sol = solve(&p, &slave_ipm_options());
    if !sol.converged() {
        return Err(SlaveError::from_ipm("primal slave", &sol));
    }
    let duals = cv.row_duals(&rows, &sol);
    let (ntg, nbe) = (m.r.len(), m.t_e.len());
    let y_s = sol.x[..ns].to_vec();
    let y_cone = m.cone_of(&y_s);
    let z_c: Vec<f64> = cone_rows.iter().map(|&r| 0.25 * sol.lambda[r].max(0.0)).collect();
    let mut lambda_cs = vec![0.0; 4 * z_c.len()];
    for (c, &zc) in z_c.iter().enumerate() {
        for k in 0..4 {
            lambda_cs[4 * c + k] = -2.0 * zc * H_DIAG[k] * y_cone[4 * c + k];
        }
    }
    Ok(PrimalSlaveSolution {
        objective: sol.objective,
        z_ms: duals[..ntg].to_vec(),
        lambda: duals[ntg..ntg + nbe].to_vec(),
        z: duals[ntg + nbe..].to_vec(),
        y_s,
        y_cone,
        z_c,
        lambda_cs,
        ipm: sol,
    })
}
