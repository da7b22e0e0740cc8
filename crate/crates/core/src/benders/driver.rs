use serde::Serialize;

use super::master::{build_master, BendersCut, MasterMode};
use super::{solve_dual_slave, DualSlaveOptions, DualSlaveSolution, SlaveError, TepPlan};
use crate::formulation::{assemble_compact, build_uncertain_tep, CompactRobustModel};
use crate::milp::{bb_solve_from, BbOptions, MilpStatus};
use crate::netcase::{CaseError, NetworkCase, UncertaintyBox};

#[derive(Debug, Clone, PartialEq, Default)]
pub enum InitTopology {
    /// Every candidate installed.
    #[default]
    All,
    /// Plan of the zero-uncertainty problem.
    Deterministic,
    Given(Vec<f64>),
}

#[derive(Debug, Clone)]
pub struct BendersOptions {
    pub max_iter: usize,
    /// Relative gap; `None` takes the case's value.
    pub tol: Option<f64>,
    pub init: InitTopology,
    /// Keep a slave copy for every distinct past realization, not only the latest.
    pub accumulate: bool,
    pub mode: MasterMode,
    pub dual: DualSlaveOptions,
    pub bb: BbOptions<f64>,
}

impl Default for BendersOptions {
    fn default() -> Self {
        Self { max_iter: 200, tol: None, init: InitTopology::All, accumulate: false, mode: MasterMode::Reduced, dual: DualSlaveOptions::default(), bb: BbOptions::default() }
    }
}

/// One iteration of the loop. Costs are hourly.
#[derive(Debug, Clone, Serialize)]
pub struct Snapshot {
    pub p: usize,
    pub y_m: Vec<f64>,
    pub xi: Vec<f64>,
    pub y_cone: Vec<f64>,
    pub sd: f64,
    pub master_objective: f64,
    pub lb: f64,
    pub ub: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BendersState {
    pub iteration: usize,
    pub lb: f64,
    pub ub: f64,
    pub cuts: Vec<BendersCut>,
    pub snapshots: Vec<Snapshot>,
    pub converged: bool,
    pub best: TepPlan,
    /// Worst-case hourly cost of the first plan.
    pub initial_ub: f64,
}

impl BendersState {
    pub fn gap(&self) -> f64 {
        (self.ub - self.lb) / self.ub.abs().max(1e-12)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BendersError {
    #[error(transparent)]
    Case(#[from] CaseError),
    #[error(transparent)]
    Slave(#[from] SlaveError),
    #[error("master problem ended with status {0:?}")]
    Master(MilpStatus),
}

/// Builds the model from `case` and `xi_box` and runs the loop.
pub fn benders_solve(case: &NetworkCase, xi_box: &UncertaintyBox, opts: &BendersOptions) -> Result<(TepPlan, BendersState, DualSlaveSolution), BendersError> {
    let m = assemble_compact(&build_uncertain_tep(case, xi_box)?);
    let init = match &opts.init {
        InitTopology::Deterministic => {
            let m0 = assemble_compact(&build_uncertain_tep(case, &UncertaintyBox::zero(case.n_buses()))?);
            let o = BendersOptions { init: InitTopology::All, ..opts.clone() };
            let (plan, _, _) = benders_on_model(&m0, &o)?;
            InitTopology::Given(plan.y_m)
        }
        other => other.clone(),
    };
    benders_on_model(&m, &BendersOptions { init, ..opts.clone() })
}

pub fn benders_on_model(m: &CompactRobustModel, opts: &BendersOptions) -> Result<(TepPlan, BendersState, DualSlaveSolution), BendersError> {
    let tol = opts.tol.unwrap_or(m.net.system.bd_tolerance);
    let y0 = match &opts.init {
        InitTopology::Given(y) => y.clone(),
        _ => vec![1.0; m.n_m()],
    };
    let invest = |y: &[f64]| m.f_m.iter().zip(y).map(|(a, x)| a * x).sum::<f64>();
    let mut ds = solve_dual_slave(m, &y0, &opts.dual)?;
    let mut ub = invest(&y0) + ds.sd;
    let mut best = (TepPlan::new(m, y0.clone()), ds.clone());
    let mut state = BendersState { iteration: 0, lb: f64::NEG_INFINITY, ub, cuts: Vec::new(), snapshots: Vec::new(), converged: false, best: best.0.clone(), initial_ub: ub };
    let mut xis: Vec<Vec<f64>> = Vec::new();
    let mut cone_points: Vec<Vec<f64>> = Vec::new();
    let mut y = y0;
    for p in 1..=opts.max_iter {
        state.iteration = p;
        let cut = BendersCut::from_dual(m, &ds);
        log::debug!("cut {p}: value at its plan {:.9e}, slave {:.9e}", cut.value(&y), ds.sd);
        state.cuts.push(cut);
        if !opts.accumulate {
            xis.clear();
        }
        if !xis.contains(&ds.xi) {
            xis.push(ds.xi.clone());
        }
        cone_points.push(ds.y_cone.clone());
        let (milp, _) = build_master(m, &state.cuts, &xis, &cone_points, opts.mode);
        let mut start = vec![f64::NAN; milp.lp.num_vars()];
        start[..m.n_m()].copy_from_slice(&best.0.y_m);
        let sol = bb_solve_from(&milp, &opts.bb, Some(&start));
        let (obj, bound) = match sol.status {
            MilpStatus::Optimal => (sol.objective, sol.objective),
            MilpStatus::GapLimit if sol.objective.is_finite() => (sol.objective, sol.bound),
            s => return Err(BendersError::Master(s)),
        };
        state.lb = state.lb.max(bound);
        let xi_p = ds.xi.clone();
        let yc_p = ds.y_cone.clone();
        let sd_p = ds.sd;
        let y_prev = y.clone();
        y = sol.x[..m.n_m()].iter().map(|v| v.round()).collect();
        ds = solve_dual_slave(m, &y, &opts.dual)?;
        let cand = invest(&y) + ds.sd;
        if cand < ub {
            ub = cand;
            best = (TepPlan::new(m, y.clone()), ds.clone());
        }
        state.ub = ub;
        state.snapshots.push(Snapshot { p, y_m: y_prev, xi: xi_p, y_cone: yc_p, sd: sd_p, master_objective: obj, lb: state.lb, ub });
        log::info!("iteration {p}: LB {:.6e} UB {:.6e} gap {:.3e} nodes {}", state.lb, ub, state.gap(), sol.nodes);
        if state.gap() < tol {
            state.converged = true;
            break;
        }
    }
    state.best = best.0.clone();
    Ok((best.0, state, best.1))
}
