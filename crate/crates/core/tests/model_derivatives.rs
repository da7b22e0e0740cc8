//! Analytic derivatives of every problem the models hand to the interior-point
//! solver, against central differences.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rtep::benders::{dual_slave_problem, primal_slave_problem};
use rtep::formulation::{assemble_compact, build_deterministic_tep, build_uncertain_tep, CompactRobustModel};
use rtep::ipm::{check_derivatives, NlpProblem};
use rtep::netcase::{build_uncertainty_box, bundled_case};

const TOL: f64 = 1e-5;

fn model(name: &str) -> CompactRobustModel {
    let case = bundled_case(name).unwrap();
    let bx = build_uncertainty_box(&case, 15.0, 20.0).unwrap();
    assemble_compact(&build_uncertain_tep(&case, &bx).unwrap())
}

fn ordered_plan(m: &CompactRobustModel, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut y = vec![0.0; m.n_m()];
    for c in &m.net.corridors {
        let k = rng.gen_range(0..=c.lines.len());
        for l in c.lines.clone().take(k) {
            y[l] = 1.0;
        }
    }
    y
}

/// A point strictly inside the variable bounds, kept away from zero on
/// one-sided bounds so quotient rows stay smooth.
fn interior_point<P: NlpProblem<f64>>(p: &P, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    let (lo, hi) = p.var_bounds();
    let x = lo
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
    let lambda = (0..p.num_cons()).map(|_| rng.gen_range(-3.0..3.0)).collect();
    (x, lambda)
}

fn assert_close<P: NlpProblem<f64>>(what: &str, p: &P, rng: &mut ChaCha8Rng) -> Result<(), TestCaseError> {
    let (x, lambda) = interior_point(p, rng);
    let chk = check_derivatives(p, &x, &lambda, 1e-6);
    prop_assert!(chk.gradient <= TOL && chk.jacobian <= TOL && chk.hessian <= TOL, "{what}: {chk:?}");
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn primal_slave(seed in any::<u64>(), garver in any::<bool>()) {
        let m = model(if garver { "garver6" } else { "three-bus" });
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y = ordered_plan(&m, &mut rng);
        let xi: Vec<f64> = (0..m.n_xi()).map(|k| rng.gen_range(m.xi_box.xi_min[k]..=m.xi_box.xi_max[k])).collect();
        assert_close("primal slave", &primal_slave_problem(&m, &y, &xi), &mut rng)?;
    }

    #[test]
    fn dual_slave_with_cones(seed in any::<u64>(), garver in any::<bool>(), bounded in any::<bool>()) {
        let m = model(if garver { "garver6" } else { "three-bus" });
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y = ordered_plan(&m, &mut rng);
        let tau = if bounded { 1e-2 } else { f64::INFINITY };
        assert_close("dual slave", &dual_slave_problem(&m, &y, tau), &mut rng)?;
    }

    #[test]
    fn rectangular_voltage_model(seed in any::<u64>(), garver in any::<bool>()) {
        let case = bundled_case(if garver { "garver6" } else { "three-bus" }).unwrap();
        let nc = build_deterministic_tep(&case).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nb = case.n_buses();
        let y: Vec<f64> = (0..nc.relaxed.space.n_m()).map(|_| rng.gen_range(0..2) as f64).collect();
        let xi: Vec<f64> = (0..2 * nb).map(|_| rng.gen_range(-0.1..0.1)).collect();
        let e0: Vec<f64> = (0..nb).map(|_| rng.gen_range(0.9..1.1)).collect();
        let f0: Vec<f64> = (0..nb).map(|_| rng.gen_range(-0.1..0.1)).collect();
        let (p, _) = nc.problem_at(&y, &xi, &e0, &f0);
        assert_close("rectangular model", &p, &mut rng)?;
    }
}
