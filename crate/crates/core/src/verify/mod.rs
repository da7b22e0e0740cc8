//! Nonconvex ACOPF at a frozen plan and the Monte-Carlo robustness harness.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::formulation::{build_uncertain_tep, NonconvexTep, SparseRow};
use crate::ipm::{solve, IpmOptions};
use crate::netcase::{CaseError, NetworkCase, UncertaintyBox};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AcopfStatus {
    Converged,
    NotConverged,
}

/// Flows on one corridor, summed over its installed circuits, pu.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorridorFlow {
    pub label: String,
    pub circuits: f64,
    pub p_ij: f64,
    pub q_ij: f64,
    pub p_ji: f64,
    pub q_ji: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AcopfSolution {
    pub status: AcopfStatus,
    pub e: Vec<f64>,
    pub f: Vec<f64>,
    pub p_g: Vec<f64>,
    pub q_g: Vec<f64>,
    /// Per bus, zero where the bus has no load.
    pub cp_d: Vec<f64>,
    /// Per bus, zero where the bus has no RES unit.
    pub cp_r: Vec<f64>,
    pub flows: Vec<CorridorFlow>,
    /// Generation plus curtailment cost, $/h. Investment excluded.
    pub objective: f64,
    /// Largest row or tie violation, pu.
    pub max_violation: f64,
    /// Starts tried before one converged (or all of them).
    pub starts: usize,
}

impl AcopfSolution {
    pub fn curtailment(&self) -> f64 {
        self.cp_d.iter().chain(&self.cp_r).sum()
    }
}

/// ACOPF with a plan frozen into the topology, reusable across `xi`.
#[derive(Debug, Clone)]
pub struct Acopf {
    model: NonconvexTep,
    y_m: Vec<f64>,
    pub opts: IpmOptions<f64>,
    /// Random perturbed starts after a failed flat start.
    pub extra_starts: usize,
}

impl Acopf {
    pub fn new(case: &NetworkCase, y_m: &[f64]) -> Result<Self, CaseError> {
        let relaxed = build_uncertain_tep(case, &UncertaintyBox::zero(case.n_buses()))?;
        if y_m.len() != relaxed.space.n_m() {
            return Err(CaseError::Invalid { field: "plan".into(), msg: format!("expected {} candidate lines, got {}", relaxed.space.n_m(), y_m.len()) });
        }
        Ok(Self {
            model: NonconvexTep { relaxed },
            y_m: y_m.iter().map(|v| v.round()).collect(),
            opts: IpmOptions { tol: 1e-8, max_iter: 300, ..Default::default() },
            extra_starts: 2,
        })
    }

    pub fn n_xi(&self) -> usize {
        self.model.relaxed.net.n_xi()
    }

    /// Flat start first; on failure, voltages perturbed by up to 5% drawn from `seed`.
    pub fn solve(&self, xi: &[f64], seed: u64) -> AcopfSolution {
        let nb = self.model.n_buses();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut last = None;
        for s in 0..=self.extra_starts {
            let (e0, f0): (Vec<f64>, Vec<f64>) = if s == 0 {
                (vec![1.0; nb], vec![0.0; nb])
            } else {
                (0..nb).map(|_| (1.0 + rng.gen_range(-0.05..0.05), rng.gen_range(-0.05..0.05))).unzip()
            };
            let (p, _) = self.model.problem_at(&self.y_m, xi, &e0, &f0);
            let sol = solve(&p, &self.opts);
            let ok = sol.converged();
            last = Some(self.report(xi, &sol.x, ok, s + 1));
            if ok {
                break;
            }
        }
        last.expect("at least one start")
    }

    fn report(&self, xi: &[f64], x: &[f64], converged: bool, starts: usize) -> AcopfSolution {
        let m = &self.model.relaxed;
        let (sp, net) = (&m.space, &m.net);
        let nb = net.n_buses();
        let ns = sp.n_s();
        let y_s = &x[..ns];
        let e: Vec<f64> = (0..nb).map(|i| x[ns + 2 * i]).collect();
        let f: Vec<f64> = (0..nb).map(|i| x[ns + 2 * i + 1]).collect();

        let rows = self.model.fixed_rows(&self.y_m, xi);
        let mut viol = rows.iter().map(|r| row_violation(r, y_s)).fold(0.0, f64::max);
        for i in 0..nb {
            viol = viol.max((y_s[sp.c_ii[i]] - e[i] * e[i] - f[i] * f[i]).abs());
        }
        for (c, cr) in net.corridors.iter().enumerate() {
            let (i, j) = (cr.i, cr.j);
            viol = viol.max((y_s[sp.c_ij[c]] - e[i] * e[j] - f[i] * f[j]).abs());
            viol = viol.max((y_s[sp.s_ij[c]] - f[i] * e[j] + f[j] * e[i]).abs());
        }
        viol = viol.max(f[net.ref_bus].abs());

        let per_bus = |v: &[Option<usize>]| v.iter().map(|k| k.map_or(0.0, |k| y_s[k])).collect::<Vec<_>>();
        let circuits = net.circuits(&self.y_m);
        let flows = net
            .corridors
            .iter()
            .enumerate()
            .map(|(c, cr)| {
                let (pf, qf) = branch_flow(cr.base.as_ref().map(|b| (b.n0 as f64, b.g, b.b, b.b_sh_half)), &e, &f, cr.i, cr.j);
                let (pr, qr) = branch_flow(cr.base.as_ref().map(|b| (b.n0 as f64, b.g, b.b, b.b_sh_half)), &e, &f, cr.j, cr.i);
                let n_new = circuits[c] - cr.n0();
                let cand = cr.cand.as_ref().map(|d| (n_new, d.g, d.b, d.b_sh_half));
                let (pf2, qf2) = branch_flow(cand, &e, &f, cr.i, cr.j);
                let (pr2, qr2) = branch_flow(cand, &e, &f, cr.j, cr.i);
                CorridorFlow { label: cr.label.clone(), circuits: circuits[c], p_ij: pf + pf2, q_ij: qf + qf2, p_ji: pr + pr2, q_ji: qr + qr2 }
            })
            .collect();
        let objective = m.f_c + m.f_s.iter().zip(y_s).map(|(a, v)| a * v).sum::<f64>();
        AcopfSolution {
            status: if converged { AcopfStatus::Converged } else { AcopfStatus::NotConverged },
            p_g: sp.p_g.iter().map(|&k| y_s[k]).collect(),
            q_g: sp.q_g.iter().map(|&k| y_s[k]).collect(),
            cp_d: per_bus(&sp.cp_d),
            cp_r: per_bus(&sp.cp_r),
            flows,
            objective,
            max_violation: viol,
            starts,
            e,
            f,
        }
    }
}

fn row_violation(r: &SparseRow, y: &[f64]) -> f64 {
    let v = r.coefs.iter().map(|&(j, a)| a * y[j]).sum::<f64>() - r.rhs;
    if r.eq {
        v.abs()
    } else {
        v.max(0.0)
    }
}

/// Flow leaving `from` over `n` parallel circuits with series `g + jb` and half shunt `bsh`.
fn branch_flow(line: Option<(f64, f64, f64, f64)>, e: &[f64], f: &[f64], from: usize, to: usize) -> (f64, f64) {
    let Some((n, g, b, bsh)) = line else { return (0.0, 0.0) };
    if n == 0.0 {
        return (0.0, 0.0);
    }
    let vv = e[from] * e[from] + f[from] * f[from];
    let c = e[from] * e[to] + f[from] * f[to];
    let s = f[from] * e[to] - e[from] * f[to];
    (n * (g * vv - g * c - b * s), n * (-(b + bsh) * vv + b * c - g * s))
}

/// One-off solve; see [`Acopf`] to reuse the model across samples.
pub fn acopf_solve(case: &NetworkCase, y_m: &[f64], xi: &[f64]) -> Result<AcopfSolution, CaseError> {
    Ok(Acopf::new(case, y_m)?.solve(xi, 0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum McsMode {
    /// Converged and within tolerance; curtailment is allowed recourse.
    Recourse,
    /// Additionally, total curtailment may not exceed the given level (pu) plus 1e-6.
    Strict { curtailment_allowance: f64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct SampleRecord {
    pub id: usize,
    pub xi: Vec<f64>,
    pub status: AcopfStatus,
    /// $/h
    pub objective: f64,
    /// pu
    pub max_violation: f64,
    /// pu
    pub curtailment: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct McsReport {
    pub samples: usize,
    pub seed: u64,
    pub mode: McsMode,
    pub converged: usize,
    pub feasible: usize,
    /// `None` for an empty run.
    pub robustness: Option<f64>,
    pub worst_violation: f64,
    pub failures: Vec<usize>,
    pub records: Vec<SampleRecord>,
}

pub const FEAS_TOL: f64 = 1e-6;

/// Uniform draws from the box; zero-width components stay at their value.
pub fn sample_box(xi_box: &UncertaintyBox, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| (0..xi_box.len()).map(|k| if xi_box.width(k) > 0.0 { rng.gen_range(xi_box.xi_min[k]..=xi_box.xi_max[k]) } else { xi_box.xi_min[k] }).collect())
        .collect()
}

pub fn mcs_verify(case: &NetworkCase, y_m: &[f64], xi_box: &UncertaintyBox, n_samples: usize, seed: u64, mode: McsMode) -> Result<McsReport, CaseError> {
    let acopf = Acopf::new(case, y_m)?;
    if xi_box.len() != acopf.n_xi() {
        return Err(CaseError::Invalid { field: "uncertainty box".into(), msg: format!("expected {} components, got {}", acopf.n_xi(), xi_box.len()) });
    }
    let xis = sample_box(xi_box, n_samples, seed);
    let records: Vec<SampleRecord> = xis
        .into_par_iter()
        .enumerate()
        .map(|(id, xi)| {
            let s = acopf.solve(&xi, seed ^ (id as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
            let ok = s.status == AcopfStatus::Converged && s.max_violation <= FEAS_TOL;
            let feasible = ok
                && match mode {
                    McsMode::Recourse => true,
                    McsMode::Strict { curtailment_allowance } => s.curtailment() <= curtailment_allowance + FEAS_TOL,
                };
            SampleRecord { id, xi, status: s.status, objective: s.objective, max_violation: s.max_violation, curtailment: s.curtailment(), feasible }
        })
        .collect();
    let converged = records.iter().filter(|r| r.status == AcopfStatus::Converged).count();
    let feasible = records.iter().filter(|r| r.feasible).count();
    let failures: Vec<usize> = records.iter().filter(|r| !r.feasible).map(|r| r.id).collect();
    let worst_violation = records.iter().map(|r| r.max_violation).fold(0.0, f64::max);
    log::info!("mcs: {feasible}/{n_samples} feasible, {converged} converged, worst violation {worst_violation:.2e}");
    Ok(McsReport {
        samples: n_samples,
        seed,
        mode,
        converged,
        feasible,
        robustness: (n_samples > 0).then(|| feasible as f64 / n_samples as f64),
        worst_violation,
        failures,
        records,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DominanceCheck {
    /// $/h at the worst-case realization.
    pub worst_cost: f64,
    /// Largest sampled cost, $/h.
    pub max_sample_cost: f64,
    /// `(max_sample_cost - worst_cost) / worst_cost`.
    pub excess: f64,
    pub samples: usize,
    pub passed: bool,
}

/// Compares ACOPF cost at `worst_xi` with the costs at `n` uniform draws.
pub fn worst_case_dominance(case: &NetworkCase, y_m: &[f64], xi_box: &UncertaintyBox, worst_xi: &[f64], n: usize, seed: u64) -> Result<DominanceCheck, CaseError> {
    let acopf = Acopf::new(case, y_m)?;
    let worst = acopf.solve(worst_xi, seed);
    let costs: Vec<f64> = sample_box(xi_box, n, seed).into_par_iter().enumerate().map(|(k, xi)| acopf.solve(&xi, seed.wrapping_add(k as u64 + 1)).objective).collect();
    let max_sample_cost = costs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let excess = (max_sample_cost - worst.objective) / worst.objective.abs().max(1e-12);
    Ok(DominanceCheck { worst_cost: worst.objective, max_sample_cost, excess, samples: n, passed: worst.status == AcopfStatus::Converged && excess <= 1e-3 })
}
