//! Benders decomposition for the robust expansion problem: slaves, master,
//! cuts and the outer loop, plus the exhaustive oracle used in tests.

mod driver;
mod dual;
mod master;
mod oracle;
mod primal;

use serde::Serialize;

use crate::formulation::CompactRobustModel;
use crate::ipm::{IpmOptions, IpmStatus, NlpSolution};

pub use driver::{benders_on_model, benders_solve, BendersError, BendersOptions, BendersState, InitTopology, Snapshot};
pub use dual::{cone_factors, dual_slave_problem, dual_objective, stationarity_residual, snap_worst_case, solve_dual_slave, solve_dual_slave_at, DualSlaveOptions, DualSlaveSolution};
pub use master::{build_master, BendersCut, MasterLayout, MasterMode};
pub use oracle::{box_vertices, brute_force, duality_gap_report, enumerate_plans, BruteForceResult, GapRecord};
pub use primal::{primal_slave_problem, solve_primal_slave, PrimalSlaveSolution};

#[derive(Debug, thiserror::Error)]
pub enum SlaveError {
    #[error("{what}: interior point stopped ({status:?}) after {iterations} iterations; stationarity {stationarity:.3e}, feasibility {feasibility:.3e}, complementarity {complementarity:.3e}")]
    Ipm { what: &'static str, status: IpmStatus, iterations: usize, stationarity: f64, feasibility: f64, complementarity: f64 },
}

impl SlaveError {
    pub(crate) fn from_ipm(what: &'static str, s: &NlpSolution<f64>) -> Self {
        SlaveError::Ipm {
            what,
            status: s.status,
            iterations: s.iterations,
            stationarity: s.residuals.stationarity,
            feasibility: s.residuals.feasibility,
            complementarity: s.residuals.complementarity,
        }
    }
}

pub(crate) fn slave_ipm_options() -> IpmOptions<f64> {
    IpmOptions { tol: 1e-9, max_iter: 400, ..Default::default() }
}

/// Installation decisions over the candidate lines.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TepPlan {
    pub y_m: Vec<f64>,
    /// `F_m y_m` times the annualization factor, $/yr.
    pub investment_cost: f64,
}

impl TepPlan {
    pub fn new(m: &CompactRobustModel, y_m: Vec<f64>) -> Self {
        let y_m: Vec<f64> = y_m.into_iter().map(|v| v.round() + 0.0).collect();
        let investment_cost = m.f_m.iter().zip(&y_m).map(|(a, x)| a * x).sum::<f64>() * m.net.system.annualization;
        Self { y_m, investment_cost }
    }

    pub fn empty(m: &CompactRobustModel) -> Self {
        Self::new(m, vec![0.0; m.n_m()])
    }

    pub fn all(m: &CompactRobustModel) -> Self {
        Self::new(m, vec![1.0; m.n_m()])
    }

    /// Candidate circuits per corridor, `(label, count)` for nonzero counts.
    pub fn counts(&self, m: &CompactRobustModel) -> Vec<(String, u32)> {
        m.net
            .corridors
            .iter()
            .filter_map(|c| {
                let n = c.lines.clone().map(|l| self.y_m[l] as u32).sum::<u32>();
                (n > 0).then(|| (c.label.clone(), n))
            })
            .collect()
    }

    /// `n_{1-2}=1, n_{2-3}=2` style summary; `none` when empty.
    pub fn describe(&self, m: &CompactRobustModel) -> String {
        let c = self.counts(m);
        if c.is_empty() {
            return "none".into();
        }
        c.iter().map(|(l, n)| format!("n_{{{l}}}={n}")).collect::<Vec<_>>().join(", ")
    }

    /// Respects the installation order within each corridor.
    pub fn is_ordered(&self, m: &CompactRobustModel) -> bool {
        let ah = m.a.mul_vec(&self.y_m);
        ah.iter().zip(&m.h).all(|(v, h)| *v <= h + 1e-9)
    }
}

/// Annual costs of a plan operated at one realization, $/yr; curtailment in pu.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostBreakdown {
    pub investment: f64,
    pub generation: f64,
    pub load_curtailment: f64,
    pub res_curtailment: f64,
    pub total: f64,
    /// Curtailed load, summed over buses, pu.
    pub cp_d: f64,
    /// Curtailed RES output, summed over buses, pu.
    pub cp_r: f64,
}

/// Operates `plan` at `xi` through the primal slave and splits the cost.
pub fn cost_breakdown(m: &CompactRobustModel, plan: &TepPlan, xi: &[f64]) -> Result<CostBreakdown, SlaveError> {
    let p = solve_primal_slave(m, &plan.y_m, xi)?;
    let (sp, net) = (&m.space, &m.net);
    let ann = net.system.annualization;
    let sum = |ks: &[Option<usize>]| ks.iter().flatten().map(|&k| p.y_s[k]).sum::<f64>();
    let generation = (m.f_c + sp.p_g.iter().map(|&k| m.f_s[k] * p.y_s[k]).sum::<f64>()) * ann;
    let (cp_d, cp_r) = (sum(&sp.cp_d), sum(&sp.cp_r));
    let load_curtailment = net.system.gamma_d * cp_d * ann;
    let res_curtailment = net.system.gamma_r * cp_r * ann;
    Ok(CostBreakdown {
        investment: plan.investment_cost,
        generation,
        load_curtailment,
        res_curtailment,
        total: plan.investment_cost + generation + load_curtailment + res_curtailment,
        cp_d,
        cp_r,
    })
}
