//! Slaves, worst-case search, cuts and the outer loop against exhaustive
//! primal solves.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rtep::benders::*;
use rtep::formulation::{assemble_compact, build_uncertain_tep, CompactRobustModel};
use rtep::netcase::{build_uncertainty_box, bundled_case};

fn three_bus(ud: f64) -> CompactRobustModel {
    let case = bundled_case("three-bus").unwrap();
    assemble_compact(&build_uncertain_tep(&case, &build_uncertainty_box(&case, ud, 0.0).unwrap()).unwrap())
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-12)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    #[test]
    fn dual_equals_primal_at_fixed_xi(seed in any::<u64>()) {
        let m = three_bus(20.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let plans = enumerate_plans(&m);
        let y = &plans[rng.gen_range(0..plans.len())];
        let xi: Vec<f64> = (0..m.n_xi()).map(|k| rng.gen_range(m.xi_box.xi_min[k]..=m.xi_box.xi_max[k])).collect();
        let p = solve_primal_slave(&m, y, &xi).unwrap();
        let d = solve_dual_slave_at(&m, y, &xi, &DualSlaveOptions::default()).unwrap();
        prop_assert!(rel(d.sd, p.objective) < 1e-6, "primal {} dual {}", p.objective, d.sd);
        // The dual point is feasible: stationarity in y_s and the cone.
        let r = stationarity_residual(&m, &d.z_ms, &d.lambda, &d.z, &d.lambda_cs);
        let worst = r.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        prop_assert!(worst < 1e-6, "stationarity {worst}");
        for c in 0..m.n_corridors() {
            let l = &d.lambda_cs[4 * c..4 * c + 4];
            prop_assert!(l[0].powi(2) + l[1].powi(2) + l[2].powi(2) <= l[3].powi(2) * (1.0 + 1e-9) + 1e-12);
        }
        // Recomputing the objective from the multipliers gives the reported value.
        prop_assert!(rel(dual_objective(&m, &d), d.sd) < 1e-9);
    }
}

#[test]
fn worst_case_matches_vertex_enumeration() {
    let m = three_bus(20.0);
    let verts = box_vertices(&m);
    let plans = enumerate_plans(&m);
    for y in plans.iter().step_by(4) {
        let oracle = verts.iter().map(|xi| solve_primal_slave(&m, y, xi).unwrap().objective).fold(f64::NEG_INFINITY, f64::max);
        let d = solve_dual_slave(&m, y, &DualSlaveOptions::default()).unwrap();
        assert!(rel(d.sd, oracle) < 1e-5, "plan {y:?}: dual {} oracle {oracle}", d.sd);
        for k in m.xi_box.uncertain() {
            assert!(d.xi[k] == m.xi_box.xi_min[k] || d.xi[k] == m.xi_box.xi_max[k], "component {k} at {}", d.xi[k]);
            assert_eq!(d.u[k], d.psi[k] * d.xi[k]);
        }
    }
}

#[test]
fn cuts_never_exceed_the_worst_case() {
    let m = three_bus(10.0);
    let bf = brute_force(&m).unwrap();
    let invest = |y: &[f64]| m.f_m.iter().zip(y).map(|(a, x)| a * x).sum::<f64>();
    for y in enumerate_plans(&m).iter().step_by(5) {
        let d = solve_dual_slave(&m, y, &DualSlaveOptions::default()).unwrap();
        let cut = BendersCut::from_dual(&m, &d);
        assert!(rel(cut.value(y), d.sd) < 1e-6, "cut is tight at its own plan");
        for (other, total) in &bf.per_plan {
            let worst = total - invest(other);
            assert!(cut.value(other) <= worst + 1e-6 * (1.0 + worst.abs()), "cut from {y:?} overshoots at {other:?}: {} > {worst}", cut.value(other));
        }
    }
}

#[test]
fn loop_reaches_the_exhaustive_optimum() {
    let m = three_bus(10.0);
    let bf = brute_force(&m).unwrap();
    let (plan, st, _) = benders_on_model(&m, &BendersOptions::default()).unwrap();
    assert!(st.converged);
    assert!(st.snapshots.windows(2).all(|w| w[1].lb >= w[0].lb), "lower bound decreased");
    assert!(rel(st.ub, bf.total) < 1e-5, "benders {} brute force {}", st.ub, bf.total);
    assert!(plan.is_ordered(&m));
}

#[test]
fn deterministic_start_gives_the_same_cost() {
    let case = bundled_case("three-bus").unwrap();
    let bx = build_uncertainty_box(&case, 10.0, 0.0).unwrap();
    let (_, a, _) = benders_solve(&case, &bx, &BendersOptions::default()).unwrap();
    let (_, b, _) = benders_solve(&case, &bx, &BendersOptions { init: InitTopology::Deterministic, ..Default::default() }).unwrap();
    assert!(rel(a.ub, b.ub) < 1e-5, "{} vs {}", a.ub, b.ub);
}

#[test]
fn full_master_agrees_with_reduced() {
    let m = three_bus(20.0);
    let (_, a, _) = benders_on_model(&m, &BendersOptions::default()).unwrap();
    let (_, b, _) = benders_on_model(&m, &BendersOptions { mode: MasterMode::Full, ..Default::default() }).unwrap();
    assert!(a.converged && b.converged);
    assert!(rel(a.ub, b.ub) < 1e-5, "{} vs {}", a.ub, b.ub);
}
