//! Exhaustive search over plans and box vertices, and primal/dual gap records.

use rayon::prelude::*;
use serde::Serialize;

use super::{solve_dual_slave_at, solve_primal_slave, DualSlaveOptions, SlaveError, TepPlan};
use crate::formulation::CompactRobustModel;

/// Every plan that installs circuits in order within each corridor.
pub fn enumerate_plans(m: &CompactRobustModel) -> Vec<Vec<f64>> {
    let mut plans = vec![vec![0.0; m.n_m()]];
    for c in &m.net.corridors {
        let lines: Vec<usize> = c.lines.clone().collect();
        if lines.is_empty() {
            continue;
        }
        let mut next = Vec::with_capacity(plans.len() * (lines.len() + 1));
        for p in &plans {
            for n in 0..=lines.len() {
                let mut q = p.clone();
                for &l in &lines[..n] {
                    q[l] = 1.0;
                }
                next.push(q);
            }
        }
        plans = next;
    }
    plans
}

/// Vertices of the box over the components that matter; others sit at their lower end.
pub fn box_vertices(m: &CompactRobustModel) -> Vec<Vec<f64>> {
    let enters = m.xi_enters();
    let free: Vec<usize> = (0..m.n_xi()).filter(|&k| enters[k] && m.xi_box.width(k) > 0.0).collect();
    (0..1usize << free.len())
        .map(|mask| {
            let mut xi = m.xi_box.xi_min.clone();
            for (b, &k) in free.iter().enumerate() {
                if mask >> b & 1 == 1 {
                    xi[k] = m.xi_box.xi_max[k];
                }
            }
            xi
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct BruteForceResult {
    pub plan: TepPlan,
    /// Hourly investment plus worst-case operation.
    pub total: f64,
    pub worst_xi: Vec<f64>,
    /// `(plan, hourly total)` for every plan.
    pub per_plan: Vec<(Vec<f64>, f64)>,
    pub slave_solves: usize,
}

pub fn brute_force(m: &CompactRobustModel) -> Result<BruteForceResult, SlaveError> {
    let plans = enumerate_plans(m);
    let verts = box_vertices(m);
    let per: Vec<(Vec<f64>, f64, Vec<f64>)> = plans
        .par_iter()
        .map(|y| {
            let mut worst = (f64::NEG_INFINITY, Vec::new());
            for xi in &verts {
                let s = solve_primal_slave(m, y, xi)?;
                if s.objective > worst.0 {
                    worst = (s.objective, xi.clone());
                }
            }
            let invest: f64 = m.f_m.iter().zip(y).map(|(a, x)| a * x).sum();
            Ok((y.clone(), invest + worst.0, worst.1))
        })
        .collect::<Result<_, SlaveError>>()?;
    let best = per.iter().enumerate().min_by(|a, b| a.1 .1.total_cmp(&b.1 .1)).map(|(k, _)| k).expect("at least the empty plan");
    Ok(BruteForceResult {
        plan: TepPlan::new(m, per[best].0.clone()),
        total: per[best].1,
        worst_xi: per[best].2.clone(),
        slave_solves: plans.len() * verts.len(),
        per_plan: per.into_iter().map(|(y, t, _)| (y, t)).collect(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct GapRecord {
    pub system: String,
    pub topology: String,
    /// $/yr.
    pub primal: f64,
    /// $/yr.
    pub dual: f64,
    pub relative_gap: f64,
}

/// Primal and dual slave at a fixed plan and realization.
pub fn duality_gap_report(m: &CompactRobustModel, y_m: &[f64], xi: &[f64], topology: &str) -> Result<GapRecord, SlaveError> {
    let p = solve_primal_slave(m, y_m, xi)?;
    let d = solve_dual_slave_at(m, y_m, xi, &DualSlaveOptions::default())?;
    let ann = m.net.system.annualization;
    Ok(GapRecord {
        system: m.net.system.name.clone(),
        topology: topology.to_string(),
        primal: p.objective * ann,
        dual: d.sd * ann,
        relative_gap: (p.objective - d.sd).abs() / p.objective.abs().max(1e-12),
    })
}
