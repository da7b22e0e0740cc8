//! Dual slave: worst-case realization of ξ for a fixed plan.
//!
//! Variables are the multipliers of the slave rows, the cone multipliers
//! `λ_cs`, and for each uncertain component the split `Ψ = Ψ⁺ - Ψ⁻` with `u`
//! bounded by the box ends. Pairs of opposite rows that pin a quantity exactly
//! (zero width at this plan) share one free multiplier; otherwise the two
//! multipliers could grow together without bound.
//!
//! `λ_cs = -2 z_c H y_cone` with `y_cone` in the cone and `z_c >= 0` describes
//! exactly the second-order cone `|λ_1..3| <= λ_4`. The solver sees that cone
//! directly, since the product form has stationary points with `z_c = 0` that
//! are not optimal; `z_c` and `y_cone` are read back from `λ_cs` with `D_4`
//! at the middle of its range.

use serde::Serialize;

use super::{slave_ipm_options, SlaveError};
use crate::formulation::{Block, CompactRobustModel};
use crate::ipm::{solve_warm, ConeQcqp, IpmOptions, QcqpBuilder, QcqpRow, RotatedCone, WarmStart};
use crate::netcase::UncertaintyBox;

#[derive(Debug, Clone, Serialize)]
pub struct DualSlaveSolution {
    pub y_m: Vec<f64>,
    pub z_ms: Vec<f64>,
    pub lambda: Vec<f64>,
    pub z: Vec<f64>,
    pub lambda_cs: Vec<f64>,
    pub z_c: Vec<f64>,
    pub y_cone: Vec<f64>,
    pub psi: Vec<f64>,
    pub psi_plus: Vec<f64>,
    pub psi_minus: Vec<f64>,
    pub u: Vec<f64>,
    pub xi: Vec<f64>,
    /// Objective, hourly.
    pub sd: f64,
    /// Objective as returned by the solver, before snapping.
    pub sd_unsnapped: f64,
    pub polish_rounds: usize,
    /// Tightest complementarity bound the free solve reached.
    pub tau_reached: f64,
    pub ipm_iterations: usize,
}

#[derive(Debug, Clone)]
pub struct DualSlaveOptions {
    /// Bound on `Ψ⁺ Ψ⁻`.
    pub tau: f64,
    pub polish_rounds: usize,
    pub ipm: IpmOptions<f64>,
}

impl Default for DualSlaveOptions {
    fn default() -> Self {
        Self { tau: 1e-8, polish_rounds: 8, ipm: IpmOptions { line_search: true, ..slave_ipm_options() } }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Mult {
    /// Own nonnegative variable.
    Own(usize),
    /// Upper side of a merged pair: `z = max(w, 0)`.
    Up(usize),
    /// Lower side: `z = max(-w, 0)`; its column terms are carried by the upper side.
    Down(usize),
}

impl Mult {
    fn value(self, x: &[f64]) -> f64 {
        match self {
            Mult::Own(v) => x[v].max(0.0),
            Mult::Up(v) => x[v].max(0.0),
            Mult::Down(v) => (-x[v]).max(0.0),
        }
    }
}

struct Layout {
    tg: Vec<Mult>,
    be: Vec<usize>,
    bie: Vec<Mult>,
    lcs: usize,
    /// Per ξ component: (Ψ⁺, Ψ⁻, u) when the component is searched over.
    psi: Vec<Option<(usize, usize, usize)>>,
}

fn merge_pairs(b: &mut QcqpBuilder<f64>, rho: &[f64], partners: &[Option<usize>], allowed: impl Fn(usize) -> bool) -> Vec<Mult> {
    let inf = f64::INFINITY;
    let mut out = vec![Mult::Own(usize::MAX); rho.len()];
    for k in 0..rho.len() {
        if out[k] != Mult::Own(usize::MAX) {
            continue;
        }
        match partners[k] {
            Some(p) if p > k && allowed(k) && allowed(p) && (rho[k] + rho[p]).abs() <= 1e-12 * (1.0 + rho[k].abs()) => {
                let v = b.add_var(-inf, inf, 0.0);
                out[k] = Mult::Up(v);
                out[p] = Mult::Down(v);
            }
            _ => out[k] = Mult::Own(b.add_var(0.0, inf, 1.0)),
        }
    }
    out
}

/// ξ values held fixed, or `None` entries for components searched over.
fn build(m: &CompactRobustModel, y_m: &[f64], fixed: &[Option<f64>], tau: f64) -> (ConeQcqp<f64>, Layout) {
    let inf = f64::INFINITY;
    let nc = m.n_corridors();
    let big_l = m.net.system.big_l;
    let mut b = QcqpBuilder::new();
    let ty = m.t.mul_vec(y_m);
    let rho_tg: Vec<f64> = (0..m.r.len()).map(|k| m.r[k] - ty[k]).collect();
    let tg = merge_pairs(&mut b, &rho_tg, &m.partners(Block::Tg), |_| true);
    let be: Vec<usize> = (0..m.t_e.len()).map(|_| b.add_var(-inf, inf, 0.0)).collect();
    let jie_rows: Vec<bool> = (0..m.t_ie.len()).map(|k| m.j_ie.row(k).0.is_empty()).collect();
    let bie = merge_pairs(&mut b, &m.t_ie, &m.partners(Block::Bie), |k| jie_rows[k]);
    let lcs = b.num_vars();
    // Per corridor (λ_1, λ_2, a, b) with λ_3 = (a - b)/2, λ_4 = (a + b)/2.
    for _ in 0..nc {
        b.add_var(-inf, inf, 0.0);
        b.add_var(-inf, inf, 0.0);
        b.add_var(0.0, inf, 1.0);
        b.add_var(0.0, inf, 1.0);
    }
    let psi: Vec<Option<(usize, usize, usize)>> = fixed
        .iter()
        .map(|f| {
            f.is_none().then(|| {
                let p = b.add_var(0.0, big_l, 1e-3);
                let q = b.add_var(0.0, big_l, 1e-3);
                let u = b.add_var(-inf, inf, 0.0);
                (p, q, u)
            })
        })
        .collect();
    let lay = Layout { tg, be, bie, lcs, psi };

    // Stationarity in each y_s column.
    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m.n_s()];
    let mut put = |mat: &crate::linalg::CsrMatrix<f64>, var: &dyn Fn(usize) -> Option<usize>| {
        for (r, j, a) in mat.triplets() {
            if let Some(v) = var(r) {
                cols[j].push((v, a));
            }
        }
    };
    let own = |mu: Mult| match mu {
        Mult::Own(v) | Mult::Up(v) => Some(v),
        Mult::Down(_) => None,
    };
    put(&m.g, &|r| own(lay.tg[r]));
    put(&m.b_e, &|r| Some(lay.be[r]));
    put(&m.b_ie, &|r| own(lay.bie[r]));
    for (r, j, a) in m.u.triplets() {
        let base = lay.lcs + r - r % 4;
        match r % 4 {
            k @ (0 | 1) => cols[j].push((base + k, a)),
            2 => cols[j].extend([(base + 2, 0.5 * a), (base + 3, -0.5 * a)]),
            _ => cols[j].extend([(base + 2, 0.5 * a), (base + 3, 0.5 * a)]),
        }
    }
    for (j, col) in cols.into_iter().enumerate() {
        b.add_row(QcqpRow { linear: col, quad: vec![], lower: -m.f_s[j], upper: -m.f_s[j] });
    }
    // Ψ columns: Ψ_k = J_e^T λ + J_ie^T z.
    let mut psi_terms: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m.n_xi()];
    for (r, k, a) in m.j_e.triplets() {
        psi_terms[k].push((lay.be[r], a));
    }
    for (r, k, a) in m.j_ie.triplets() {
        if let Mult::Own(v) = lay.bie[r] {
            psi_terms[k].push((v, a));
        }
    }
    // Objective, minimized as its negative.
    let mut obj: Vec<(usize, f64)> = Vec::new();
    for (k, mu) in lay.tg.iter().enumerate() {
        if let Mult::Own(v) | Mult::Up(v) = *mu {
            obj.push((v, rho_tg[k]));
        }
    }
    for (k, &v) in lay.be.iter().enumerate() {
        obj.push((v, m.t_e[k]));
    }
    for (k, mu) in lay.bie.iter().enumerate() {
        if let Mult::Own(v) | Mult::Up(v) = *mu {
            obj.push((v, m.t_ie[k]));
        }
    }
    let (lo, hi) = (&m.xi_box.xi_min, &m.xi_box.xi_max);
    for k in 0..m.n_xi() {
        match (fixed[k], lay.psi[k]) {
            (Some(x), _) => obj.extend(psi_terms[k].iter().map(|&(v, a)| (v, -a * x))),
            (None, Some((p, q, u))) => {
                let mut lin = vec![(p, 1.0), (q, -1.0)];
                lin.extend(psi_terms[k].iter().map(|&(v, a)| (v, -a)));
                b.add_row(QcqpRow { linear: lin, quad: vec![], lower: 0.0, upper: 0.0 });
                b.add_row(QcqpRow { linear: vec![(u, 1.0), (p, -hi[k]), (q, lo[k])], quad: vec![], lower: -inf, upper: 0.0 });
                b.add_row(QcqpRow { linear: vec![(u, -1.0), (q, -hi[k]), (p, lo[k])], quad: vec![], lower: -inf, upper: 0.0 });
                b.add_row(QcqpRow { linear: vec![], quad: vec![(p, q, 1.0)], lower: -inf, upper: tau });
                obj.push((u, -1.0));
            }
            (None, None) => unreachable!(),
        }
    }
    for (v, a) in obj {
        if a != 0.0 {
            b.add_objective_linear(v, a);
        }
    }
    b.add_objective_const(-m.f_c);
    // λ_1² + λ_2² <= a b.
    let cones = (0..nc)
        .map(|c| {
            let v = lay.lcs + 4 * c;
            RotatedCone { num: vec![v, v + 1], a: v + 2, b: v + 3 }
        })
        .collect();
    (ConeQcqp::new(b.build(), cones), lay)
}

/// The free-ξ dual slave with complementarity bound `tau` (`INFINITY` leaves it off).
pub fn dual_slave_problem(m: &CompactRobustModel, y_m: &[f64], tau: f64) -> ConeQcqp<f64> {
    build(m, y_m, &free_components(m), tau).0
}

/// Which components are searched over when ξ is free.
fn free_components(m: &CompactRobustModel) -> Vec<Option<f64>> {
    let enters = m.xi_enters();
    (0..m.n_xi()).map(|k| if enters[k] && m.xi_box.width(k) > 0.0 { None } else { Some(m.xi_box.xi_min[k]) }).collect()
}

fn extract(m: &CompactRobustModel, y_m: &[f64], lay: &Layout, x: &[f64], fixed: &[Option<f64>]) -> DualSlaveSolution {
    let nc = m.n_corridors();
    let z_ms: Vec<f64> = lay.tg.iter().map(|mu| mu.value(x)).collect();
    let lambda: Vec<f64> = lay.be.iter().map(|&v| x[v]).collect();
    let z: Vec<f64> = lay.bie.iter().map(|mu| mu.value(x)).collect();
    let lambda_cs: Vec<f64> = (0..nc)
        .flat_map(|c| {
            let v = &x[lay.lcs + 4 * c..lay.lcs + 4 * c + 4];
            [v[0], v[1], 0.5 * (v[2] - v[3]), 0.5 * (v[2] + v[3])]
        })
        .collect();
    let (z_c, y_cone) = cone_factors(m, &lambda_cs);
    let mut psi = m.j_e.tr_mul_vec(&lambda);
    for (k, v) in m.j_ie.tr_mul_vec(&z).into_iter().enumerate() {
        psi[k] += v;
    }
    let n = m.n_xi();
    let (mut pp, mut pm, mut u, mut xi) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for k in 0..n {
        match (fixed[k], lay.psi[k]) {
            (Some(v), _) => {
                xi[k] = v;
                u[k] = psi[k] * v;
                pp[k] = psi[k].max(0.0);
                pm[k] = (-psi[k]).max(0.0);
            }
            (None, Some((p, q, uu))) => {
                pp[k] = x[p];
                pm[k] = x[q];
                u[k] = x[uu];
                let (lo, hi) = (m.xi_box.xi_min[k], m.xi_box.xi_max[k]);
                xi[k] = if psi[k].abs() > 1e-12 { (u[k] / psi[k]).clamp(lo, hi) } else { hi };
            }
            (None, None) => unreachable!(),
        }
    }
    let mut sol = DualSlaveSolution {
        y_m: y_m.to_vec(),
        z_ms,
        lambda,
        z,
        lambda_cs,
        z_c,
        y_cone,
        psi,
        psi_plus: pp,
        psi_minus: pm,
        u,
        xi,
        sd: 0.0,
        sd_unsnapped: 0.0,
        polish_rounds: 0,
        tau_reached: 0.0,
        ipm_iterations: 0,
    };
    sol.sd = dual_objective(m, &sol);
    sol.sd_unsnapped = sol.sd;
    sol
}

/// Splits `λ_cs = -2 z_c H y_cone` with `y_cone` at mid-range `D_4`.
pub fn cone_factors(m: &CompactRobustModel, lambda_cs: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let nc = m.n_corridors();
    let mut z_c = vec![0.0; nc];
    let mut y = vec![0.0; 4 * nc];
    for c in 0..nc {
        let d4 = 0.5 * (m.d4_bounds[c].0 + m.d4_bounds[c].1);
        let l = &lambda_cs[4 * c..4 * c + 4];
        z_c[c] = (l[3] / (2.0 * d4)).max(0.0);
        y[4 * c + 3] = d4;
        if z_c[c] > 0.0 {
            for k in 0..3 {
                y[4 * c + k] = -l[k] / (2.0 * z_c[c]);
            }
        }
    }
    (z_c, y)
}

/// `F_c + (T y_m - r)^T z_ms - t_e^T λ - t_ie^T z + Σ u`.
pub fn dual_objective(m: &CompactRobustModel, s: &DualSlaveSolution) -> f64 {
    let ty = m.t.mul_vec(&s.y_m);
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let tg: f64 = (0..m.r.len()).map(|k| (ty[k] - m.r[k]) * s.z_ms[k]).sum();
    m.f_c + tg - dot(&m.t_e, &s.lambda) - dot(&m.t_ie, &s.z) + s.u.iter().sum::<f64>()
}

fn run(m: &CompactRobustModel, y_m: &[f64], fixed: &[Option<f64>], opts: &DualSlaveOptions) -> Result<DualSlaveSolution, SlaveError> {
    // With components searched over, the unbounded τ stage is convex; Ψ⁺Ψ⁻ <= τ
    // is then tightened stage by stage, each warm-started from the previous
    // one. A stage that stalls ends the sequence; its predecessor is returned.
    let searched = fixed.iter().any(|f| f.is_none());
    let mut taus = vec![];
    if searched {
        taus.push(f64::INFINITY);
        let mut t = 1e2;
        while t > opts.tau {
            taus.push(t);
            t *= 1e-2;
        }
    }
    taus.push(opts.tau);
    let mut warm: Option<WarmStart<f64>> = None;
    let mut iterations = 0;
    let mut last: Option<(Layout, Vec<f64>, f64)> = None;
    for &tau in &taus {
        let (p, lay) = build(m, y_m, fixed, tau);
        let stage = if last.is_some() { IpmOptions { max_iter: opts.ipm.max_iter.min(100), ..opts.ipm.clone() } } else { opts.ipm.clone() };
        let sol = solve_warm(&p, &stage, warm.as_ref());
        iterations += sol.iterations;
        // The free solve only picks the starting vertex for the exact climb, so a
        // first stage that stalls close to the optimum is still usable.
        let near = searched && last.is_none() && sol.residuals.stationarity < 1e-3 && sol.residuals.feasibility < 1e-6 && sol.residuals.complementarity < 1e-6;
        if near && !sol.converged() {
            log::warn!("dual slave: free stage stopped ({:?}, stationarity {:.1e}); using it as the starting point", sol.status, sol.residuals.stationarity);
        }
        if !sol.converged() && !near {
            if last.is_some() {
                log::debug!("dual slave: stage τ={tau:.1e} stopped ({:?}), keeping the previous stage", sol.status);
                break;
            }
            return Err(SlaveError::from_ipm("dual slave", &sol));
        }
        let mut x = sol.x.clone();
        for (k, slot) in lay.psi.iter().enumerate() {
            if let Some((pp, pm, u)) = *slot {
                let psi = x[pp] - x[pm];
                let (lo, hi) = (m.xi_box.xi_min[k], m.xi_box.xi_max[k]);
                x[pp] = psi.max(0.0);
                x[pm] = (-psi).max(0.0);
                x[u] = hi * x[pp] - lo * x[pm] - 1e-6;
            }
        }
        warm = Some(WarmStart { x, lambda: sol.lambda.clone(), z_lower: sol.z_lower.clone(), z_upper: sol.z_upper.clone() });
        last = Some((lay, sol.x, tau));
    }
    let (lay, x, tau) = last.expect("at least one stage converged");
    let mut out = extract(m, y_m, &lay, &x, fixed);
    out.ipm_iterations = iterations;
    out.tau_reached = tau;
    Ok(out)
}

/// Each searched component goes to the end picked by the sign of Ψ; `u = Ψ ξ`.
pub fn snap_worst_case(sol: &DualSlaveSolution, xi_box: &UncertaintyBox) -> DualSlaveSolution {
    let mut s = sol.clone();
    for k in 0..s.xi.len() {
        s.xi[k] = if s.psi[k] >= 0.0 { xi_box.xi_max[k] } else { xi_box.xi_min[k] };
        s.u[k] = s.psi[k] * s.xi[k];
    }
    let du: f64 = s.u.iter().sum::<f64>() - sol.u.iter().sum::<f64>();
    s.sd = sol.sd + du;
    s
}

/// Dual slave with ξ fixed at `xi`.
pub fn solve_dual_slave_at(m: &CompactRobustModel, y_m: &[f64], xi: &[f64], opts: &DualSlaveOptions) -> Result<DualSlaveSolution, SlaveError> {
    let fixed: Vec<Option<f64>> = xi.iter().map(|&v| Some(v)).collect();
    run(m, y_m, &fixed, opts)
}

/// Worst case over the box. The free solve picks a vertex by the sign of Ψ;
/// fixed-ξ solves then climb from vertex to vertex while the value improves.
/// The returned value is always that of an exact solve at a vertex.
pub fn solve_dual_slave(m: &CompactRobustModel, y_m: &[f64], opts: &DualSlaveOptions) -> Result<DualSlaveSolution, SlaveError> {
    let fixed = free_components(m);
    let raw = run(m, y_m, &fixed, opts)?;
    if fixed.iter().all(|f| f.is_some()) {
        return Ok(raw);
    }
    let mut xi = snap_worst_case(&raw, &m.xi_box).xi;
    let mut iters = raw.ipm_iterations;
    let mut best: Option<DualSlaveSolution> = None;
    for round in 1..=opts.polish_rounds.max(1) {
        let mut at = solve_dual_slave_at(m, y_m, &xi, opts)?;
        iters += at.ipm_iterations;
        at.polish_rounds = round;
        let improved = best.as_ref().is_none_or(|b| at.sd > b.sd + 1e-12 * (1.0 + b.sd.abs()));
        if !improved {
            break;
        }
        let next = snap_worst_case(&at, &m.xi_box).xi;
        best = Some(at);
        if next == xi {
            break;
        }
        xi = next;
    }
    let mut best = best.expect("one round at least");
    best.sd_unsnapped = raw.sd_unsnapped;
    best.tau_reached = raw.tau_reached;
    best.ipm_iterations = iters;
    Ok(best)
}

/// `F_s + G^T z_ms + B_e^T λ + B_ie^T z + U^T λ_cs`, zero at a feasible dual point.
pub fn stationarity_residual(m: &CompactRobustModel, z_ms: &[f64], lambda: &[f64], z: &[f64], lambda_cs: &[f64]) -> Vec<f64> {
    let mut r = m.f_s.clone();
    for v in [m.g.tr_mul_vec(z_ms), m.b_e.tr_mul_vec(lambda), m.b_ie.tr_mul_vec(z), m.u.tr_mul_vec(lambda_cs)] {
        for (a, b) in r.iter_mut().zip(v) {
            *a += b;
        }
    }
    r
}
