//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.
//!
//! `cargo test --release -p rtep-core --test acceptance`. Set
//! `RTEP_EXTENDED=1` for the 16,600-sample Monte-Carlo run.

mod common;

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rtep::benders::*;
use rtep::formulation::{assemble_compact, build_deterministic_tep, build_uncertain_tep, CompactRobustModel};
use rtep::ipm::{check_derivatives, NlpProblem};
use rtep::milp::{bb_solve, lp_solve, BbOptions, LpOptions, LpStatus, MilpStatus};
use rtep::netcase::{build_uncertainty_box, bundled_case, NetworkCase, UncertaintyBox};
use rtep::verify::{mcs_verify, worst_case_dominance, McsMode};

type Outcome = Result<String, String>;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-12)
}

fn model(case: &NetworkCase, bx: &UncertaintyBox) -> CompactRobustModel {
    assemble_compact(&build_uncertain_tep(case, bx).unwrap())
}

fn within(t: Instant, budget: Duration, what: &str) -> Result<(), String> {
    let e = t.elapsed();
    if e > budget {
        Err(format!("{what} took {:.1} s, budget {:.0} s", e.as_secs_f64(), budget.as_secs_f64()))
    } else {
        Ok(())
    }
}

struct RobustRun {
    case: NetworkCase,
    bx: UncertaintyBox,
    label: String,
    plan: TepPlan,
    state: BendersState,
    worst: DualSlaveSolution,
}

fn strong_duality() -> Outcome {
    let t = Instant::now();
    let mut worst = 0.0f64;
    let mut rows = Vec::new();
    for name in ["three-bus", "garver6"] {
        let case = bundled_case(name).unwrap();
        let m = model(&case, &UncertaintyBox::zero(case.n_buses()));
        let xi = vec![0.0; m.n_xi()];
        for (topo, plan) in [("base", TepPlan::empty(&m)), ("augmented", TepPlan::all(&m))] {
            let g = duality_gap_report(&m, &plan.y_m, &xi, topo).map_err(|e| e.to_string())?;
            worst = worst.max(g.relative_gap);
            rows.push(format!("{name}/{topo} {:.2e}", g.relative_gap));
        }
    }
    within(t, Duration::from_secs(10), "duality runs")?;
    let msg = format!("max relative gap {worst:.2e} [{}], {:.1} s", rows.join(", "), t.elapsed().as_secs_f64());
    if worst <= 1e-4 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn zero_optimality_gap() -> Outcome {
    let t = Instant::now();
    let mut worst = 0.0f64;
    let mut rows = Vec::new();
    for name in ["three-bus", "garver6"] {
        let case = bundled_case(name).unwrap();
        let m = model(&case, &UncertaintyBox::zero(case.n_buses()));
        let nc = build_deterministic_tep(&case).unwrap();
        let xi = vec![0.0; m.n_xi()];
        for (topo, plan) in [("base", TepPlan::empty(&m)), ("augmented", TepPlan::all(&m))] {
            let relaxed = solve_primal_slave(&m, &plan.y_m, &xi).map_err(|e| e.to_string())?.objective;
            let local = nc.solve_local(&plan.y_m, 4, 17).ok_or(format!("{name}/{topo}: no start converged"))?;
            let invest: f64 = m.f_m.iter().zip(&plan.y_m).map(|(a, x)| a * x).sum();
            let g = rel(local.objective - invest, relaxed);
            worst = worst.max(g);
            rows.push(format!("{name}/{topo} {g:.2e}"));
        }
    }
    within(t, Duration::from_secs(60), "local solves")?;
    let msg = format!("max relative gap {worst:.2e} [{}], {:.1} s", rows.join(", "), t.elapsed().as_secs_f64());
    if worst <= 1e-3 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn benders_convergence(runs: &mut Vec<RobustRun>) -> Outcome {
    let t = Instant::now();
    let mut rows = Vec::new();
    let mut bad = Vec::new();
    for (name, levels) in [("three-bus", &[0.0, 10.0, 20.0][..]), ("garver6", &[0.0, 10.0][..])] {
        let case = bundled_case(name).unwrap();
        for &ud in levels {
            let bx = build_uncertainty_box(&case, ud, 0.0).unwrap();
            let label = format!("{name}@{ud}%");
            let (plan, state, worst) = benders_solve(&case, &bx, &BendersOptions::default()).map_err(|e| format!("{label}: {e}"))?;
            let monotone = state.snapshots.windows(2).all(|w| w[1].lb >= w[0].lb);
            if !(state.converged && state.gap() < 1e-5 && state.iteration <= 200 && monotone) {
                bad.push(format!("{label}: converged {} gap {:.2e} iterations {} monotone {monotone}", state.converged, state.gap(), state.iteration));
            }
            rows.push(format!("{label} {} it gap {:.1e}", state.iteration, state.gap()));
            runs.push(RobustRun { case: case.clone(), bx, label, plan, state, worst });
        }
    }
    within(t, Duration::from_secs(300), "Benders runs")?;
    let msg = format!("[{}], {:.1} s", rows.join(", "), t.elapsed().as_secs_f64());
    if bad.is_empty() {
        Ok(msg)
    } else {
        Err(format!("{}; {msg}", bad.join("; ")))
    }
}

fn oracle_equivalence() -> Outcome {
    let t = Instant::now();
    let case = bundled_case("three-bus").unwrap();
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    for ud in [0.0, 10.0, 25.0] {
        let bx = build_uncertainty_box(&case, ud, 0.0).unwrap();
        let m = model(&case, &bx);
        let bf = brute_force(&m).map_err(|e| e.to_string())?;
        let (_, st, _) = benders_on_model(&m, &BendersOptions::default()).map_err(|e| e.to_string())?;
        let g = rel(st.ub, bf.total);
        worst = worst.max(g);
        rows.push(format!("{ud}%: {g:.1e} over {} solves", bf.slave_solves));
    }
    within(t, Duration::from_secs(600), "brute force")?;
    let msg = format!("max relative difference {worst:.2e} [{}], {:.1} s", rows.join(", "), t.elapsed().as_secs_f64());
    if worst <= 1e-4 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn worst_case_structure(runs: &[RobustRun]) -> Outcome {
    let mut checked = 0;
    for r in runs.iter().filter(|r| r.state.converged) {
        let mut points: Vec<(&[f64], Option<&DualSlaveSolution>)> = r.state.snapshots.iter().map(|s| (&s.xi[..], None)).collect();
        points.push((&r.worst.xi[..], Some(&r.worst)));
        for (xi, sol) in points {
            for k in r.bx.uncertain() {
                if xi[k] != r.bx.xi_min[k] && xi[k] != r.bx.xi_max[k] {
                    return Err(format!("{}: component {k} at {} inside the box", r.label, xi[k]));
                }
            }
            if let Some(s) = sol {
                if let Some(k) = (0..s.u.len()).find(|&k| s.u[k] != s.psi[k] * s.xi[k]) {
                    return Err(format!("{}: u_{k} = {} but psi xi = {}", r.label, s.u[k], s.psi[k] * s.xi[k]));
                }
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} realizations on box vertices with u = psi xi"))
}

fn mcs_robustness(runs: &[RobustRun]) -> Outcome {
    let t = Instant::now();
    let n = if std::env::var("RTEP_EXTENDED").is_ok_and(|v| v == "1") { 16_600 } else { 2_000 };
    let mut rows = Vec::new();
    let mut bad = Vec::new();
    for r in runs.iter().filter(|r| r.state.converged) {
        let rep = mcs_verify(&r.case, &r.plan.y_m, &r.bx, n, 2024, McsMode::Recourse).map_err(|e| e.to_string())?;
        let dom = worst_case_dominance(&r.case, &r.plan.y_m, &r.bx, &r.worst.xi, 50, 7).map_err(|e| e.to_string())?;
        if rep.robustness != Some(1.0) {
            bad.push(format!("{}: robustness {:?}, failures {:?}", r.label, rep.robustness, &rep.failures[..rep.failures.len().min(5)]));
        }
        if !dom.passed {
            bad.push(format!("{}: sampled cost {:.6} above worst-case {:.6}", r.label, dom.max_sample_cost, dom.worst_cost));
        }
        rows.push(format!("{} {}/{}", r.label, rep.feasible, rep.samples));
    }
    if n == 2_000 {
        within(t, Duration::from_secs(600), "Monte-Carlo runs")?;
    }
    let msg = format!("[{}], worst-case dominance on 50 samples each, {:.1} s", rows.join(", "), t.elapsed().as_secs_f64());
    if bad.is_empty() {
        Ok(msg)
    } else {
        Err(format!("{}; {msg}", bad.join("; ")))
    }
}

fn trend_reproduction() -> Outcome {
    let case = bundled_case("three-bus").unwrap();
    let solve = |ud: f64, ur: f64| -> Result<CostBreakdown, String> {
        let bx = build_uncertainty_box(&case, ud, ur).unwrap();
        let m = model(&case, &bx);
        let (plan, st, worst) = benders_on_model(&m, &BendersOptions::default()).map_err(|e| e.to_string())?;
        if !st.converged {
            return Err(format!("u_d {ud}% u_r {ur}% did not converge"));
        }
        cost_breakdown(&m, &plan, &worst.xi).map_err(|e| e.to_string())
    };
    let uds = [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0];
    let by_ud: Vec<CostBreakdown> = uds.iter().map(|&u| solve(u, 0.0)).collect::<Result<_, _>>()?;
    let urs = [0.0, 20.0, 40.0, 60.0, 80.0, 100.0];
    let by_ur: Vec<CostBreakdown> = urs.iter().map(|&u| solve(10.0, u)).collect::<Result<_, _>>()?;
    let nondec = |v: &[CostBreakdown]| v.windows(2).all(|w| w[1].total >= w[0].total * (1.0 - 1e-9));
    let onset = uds.iter().zip(&by_ud).find(|(_, c)| c.cp_d > 1e-6).map(|(u, _)| *u);
    let totals: Vec<String> = by_ud.iter().map(|c| format!("{:.0}", c.total)).collect();
    let cp25 = by_ud[5].cp_d;
    let soft = if (cp25 - 0.0467).abs() <= 1e-3 { "matches" } else { "differs from" };
    let msg = format!(
        "totals $/yr over u_d 0..30%: [{}]; u_r sweep non-decreasing {}; curtailment onset at {:?}%; CP_d at 25% = {cp25:.4} pu ({soft} the published 0.0467)",
        totals.join(", "),
        nondec(&by_ur),
        onset
    );
    if nondec(&by_ud) && nondec(&by_ur) && onset == Some(25.0) {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn derivative_families() -> Result<f64, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    let mut check = |p: &dyn Fn(&mut ChaCha8Rng) -> f64| worst = worst.max(p(&mut rng));
    fn at<P: NlpProblem<f64>>(p: &P, rng: &mut ChaCha8Rng) -> f64 {
        let (lo, hi) = p.var_bounds();
        let x: Vec<f64> = lo
            .iter()
            .zip(&hi)
            .map(|(&l, &u)| match (l.is_finite(), u.is_finite()) {
                (true, true) if u > l => l + (u - l) * rng.gen_range(0.1..0.9),
                (true, true) => l,
                (true, false) => l + rng.gen_range(0.2..2.0),
                (false, true) => u - rng.gen_range(0.2..2.0),
                (false, false) => rng.gen_range(-2.0..2.0),
            })
            .collect();
        let lambda: Vec<f64> = (0..p.num_cons()).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let c = check_derivatives(p, &x, &lambda, 1e-6);
        c.gradient.max(c.jacobian).max(c.hessian)
    }
    for name in ["three-bus", "garver6"] {
        let case = bundled_case(name).unwrap();
        let bx = build_uncertainty_box(&case, 15.0, 20.0).unwrap();
        let m = model(&case, &bx);
        let nc = build_deterministic_tep(&case).unwrap();
        let nb = case.n_buses();
        for _ in 0..4 {
            check(&|r| {
                let y: Vec<f64> = (0..m.n_m()).map(|_| r.gen_range(0..2) as f64).collect();
                let xi: Vec<f64> = (0..m.n_xi()).map(|k| r.gen_range(m.xi_box.xi_min[k]..=m.xi_box.xi_max[k])).collect();
                at(&primal_slave_problem(&m, &y, &xi), r)
            });
            check(&|r| {
                let y: Vec<f64> = (0..m.n_m()).map(|_| r.gen_range(0..2) as f64).collect();
                at(&dual_slave_problem(&m, &y, 1e-2), r)
            });
            check(&|r| {
                let y: Vec<f64> = (0..m.n_m()).map(|_| r.gen_range(0..2) as f64).collect();
                let xi: Vec<f64> = (0..2 * nb).map(|_| r.gen_range(-0.1..0.1)).collect();
                let e0: Vec<f64> = (0..nb).map(|_| r.gen_range(0.9..1.1)).collect();
                let f0: Vec<f64> = (0..nb).map(|_| r.gen_range(-0.1..0.1)).collect();
                at(&nc.problem_at(&y, &xi, &e0, &f0).0, r)
            });
        }
    }
    Ok(worst)
}

fn solver_suites() -> Outcome {
    let deriv = derivative_families()?;
    let mut bb_bad = 0;
    for seed in 0..25u64 {
        let nbin = 8 + (seed as usize % 13);
        let p = common::random_binary_program(5000 + seed, nbin);
        let s = bb_solve(&p, &BbOptions::default());
        let (best, _) = common::brute_force_binary(&p).ok_or("generator produced an infeasible program")?;
        if s.status != MilpStatus::Optimal || (s.objective - best).abs() > 1e-9 {
            bb_bad += 1;
        }
    }
    let mut lp_worst = 0.0f64;
    for seed in 0..25u64 {
        let lp = common::random_lp(7000 + seed);
        let s = lp_solve(&lp, &LpOptions::default());
        let r = common::lp_via_ipm(&lp);
        if s.status != LpStatus::Optimal || !r.converged() {
            return Err(format!("LP {seed}: simplex {:?}, ipm {:?}", s.status, r.status));
        }
        lp_worst = lp_worst.max((s.objective - r.objective).abs() / s.objective.abs().max(1.0));
    }
    let msg = format!("derivatives {deriv:.1e} relative; B&B mismatches {bb_bad}/25 (8..20 binaries); simplex vs interior point {lp_worst:.1e}");
    if deriv <= 1e-5 && bb_bad == 0 && lp_worst <= 1e-7 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn main() {
    // Ignore libtest flags such as --nocapture; this target has no harness.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let mut runs = Vec::new();
    let report = |n: usize, title: &str, o: Outcome| {
        let (tag, msg) = match &o {
            Ok(m) => ("PASS", m),
            Err(m) => ("FAIL", m),
        };
        println!("criterion {n} [{title}]: {tag}: {msg}");
        o.is_ok()
    };
    let mut ok = true;
    ok &= report(1, "strong duality", strong_duality());
    ok &= report(2, "zero optimality gap", zero_optimality_gap());
    let c3 = benders_convergence(&mut runs);
    ok &= report(3, "Benders convergence", c3);
    ok &= report(4, "oracle equivalence", oracle_equivalence());
    ok &= report(5, "worst-case structure", worst_case_structure(&runs));
    ok &= report(6, "MCS robustness", mcs_robustness(&runs));
    ok &= report(7, "trend reproduction", trend_reproduction());
    ok &= report(8, "solver suites", solver_suites());
    if !ok {
        std::process::exit(1);
    }
}
