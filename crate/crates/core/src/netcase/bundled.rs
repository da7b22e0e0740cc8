//! Bundled test systems.
//!
//! Garver 6-bus: the usual AC data set (loads with 0.2 reactive ratio,
//! generators at buses 1, 3, 6, bus 6 unconnected in the base topology).
//! Install costs are the classic k$ figures divided by 10 (hourly
//! coefficients, max 6.8). Three 1.0 pu wind units at buses 1, 3 and 5.
//!
//! 3-bus: one circuit per corridor, 3.5 pu of conventional capacity,
//! 3 + j2.5 pu of load and a 0.75 pu wind unit at bus 2. Line data and
//! reactive limits are our reconstruction; see the README.

use super::{admittance, Bus, CandidateCorridor, ExistingCorridor, Generator, NetworkCase, SystemParams};

pub const BUNDLED: [&str; 2] = ["three-bus", "garver6"];

pub fn bundled_case(name: &str) -> Option<NetworkCase> {
    match name {
        "three-bus" | "3bus" | "3-bus" => Some(three_bus()),
        "garver6" | "garver" | "6bus" | "6-bus" => Some(garver6()),
        _ => None,
    }
}

fn system(name: &str) -> SystemParams {
    SystemParams {
        name: name.into(),
        base_mva: 100.0,
        angle_ref_bus: None,
        gamma_d: 100.0,
        gamma_r: 500.0,
        big_m: 10.0,
        big_l: 300.0,
        bd_tolerance: 1e-5,
        eps_theta: 0.0044,
        annualization: 8760.0,
    }
}

fn bus(id: usize, p: f64, q: f64, res: f64, vmin: f64, vmax: f64) -> Bus {
    Bus { id, p_load: p, q_over_p: (p > 0.0).then(|| q / p), p_res: res, b_shunt: 0.0, v_min: vmin, v_max: vmax }
}

fn finish(mut c: NetworkCase) -> NetworkCase {
    c.validate().expect("bundled case is valid");
    c
}

pub fn three_bus() -> NetworkCase {
    let buses = vec![
        bus(1, 0.5, 0.5 * 2.5 / 3.0, 0.0, 0.95, 1.05),
        bus(2, 1.0, 2.5 / 3.0, 0.75, 0.95, 1.05),
        bus(3, 1.5, 1.5 * 2.5 / 3.0, 0.0, 0.95, 1.05),
    ];
    let generators = vec![
        Generator { bus: 1, p_min: 0.0, p_max: 2.0, q_min: -1.0, q_max: 1.53, cost_a: 0.163323, cost_b: 0.0 },
        Generator { bus: 2, p_min: 0.0, p_max: 1.5, q_min: -1.0, q_max: 1.25, cost_a: 0.217765, cost_b: 0.0 },
    ];
    let (g, b) = admittance(0.01, 0.1);
    let line = |from, to| ExistingCorridor { from, to, n0: 1, g, b, b_sh_half: 0.02, p_max: 0.6 };
    let cand = |from, to, ic_yr: f64| CandidateCorridor { from, to, n_max: 2, g, b, b_sh_half: 0.02, p_max: 0.6, install_cost: ic_yr / 8760.0 };
    finish(NetworkCase {
        system: system("three-bus"),
        buses,
        generators,
        existing_lines: vec![line(1, 2), line(1, 3), line(2, 3)],
        candidate_corridors: vec![cand(1, 2, 5000.0), cand(1, 3, 6000.0), cand(2, 3, 4000.0)],
    })
}

pub fn garver6() -> NetworkCase {
    let (vmin, vmax) = (0.95, 1.05);
    let buses = vec![
        bus(1, 0.8, 0.16, 1.0, vmin, vmax),
        bus(2, 2.4, 0.48, 0.0, vmin, vmax),
        bus(3, 0.4, 0.08, 1.0, vmin, vmax),
        bus(4, 1.6, 0.32, 0.0, vmin, vmax),
        bus(5, 2.4, 0.48, 1.0, vmin, vmax),
        bus(6, 0.0, 0.0, 0.0, vmin, vmax),
    ];
    let generators = vec![
        Generator { bus: 1, p_min: 0.0, p_max: 1.5, q_min: -0.1, q_max: 0.65, cost_a: 0.4, cost_b: 0.0 },
        Generator { bus: 3, p_min: 0.0, p_max: 3.6, q_min: -0.1, q_max: 1.5, cost_a: 0.3, cost_b: 0.0 },
        Generator { bus: 6, p_min: 0.0, p_max: 6.0, q_min: -0.1, q_max: 2.0, cost_a: 0.2, cost_b: 0.0 },
    ];
    // from, to, r, x, rating MW, cost k$, base circuits
    let table: [(usize, usize, f64, f64, f64, f64, u32); 15] = [
        (1, 2, 0.10, 0.40, 100.0, 40.0, 1),
        (1, 3, 0.09, 0.38, 100.0, 38.0, 0),
        (1, 4, 0.15, 0.60, 80.0, 60.0, 1),
        (1, 5, 0.05, 0.20, 100.0, 20.0, 1),
        (1, 6, 0.17, 0.68, 70.0, 68.0, 0),
        (2, 3, 0.05, 0.20, 100.0, 20.0, 1),
        (2, 4, 0.10, 0.40, 100.0, 40.0, 1),
        (2, 5, 0.08, 0.31, 100.0, 31.0, 0),
        (2, 6, 0.08, 0.30, 100.0, 30.0, 0),
        (3, 4, 0.15, 0.59, 82.0, 59.0, 0),
        (3, 5, 0.05, 0.20, 100.0, 20.0, 1),
        (3, 6, 0.12, 0.48, 100.0, 48.0, 0),
        (4, 5, 0.16, 0.63, 75.0, 63.0, 0),
        (4, 6, 0.08, 0.30, 100.0, 30.0, 0),
        (5, 6, 0.15, 0.61, 78.0, 61.0, 0),
    ];
    let mut existing_lines = Vec::new();
    let mut candidate_corridors = Vec::new();
    for (from, to, r, x, mw, cost, n0) in table {
        let (g, b) = admittance(r, x);
        let p_max = mw / 100.0;
        if n0 > 0 {
            existing_lines.push(ExistingCorridor { from, to, n0, g, b, b_sh_half: 0.0, p_max });
        }
        candidate_corridors.push(CandidateCorridor { from, to, n_max: 5 - n0, g, b, b_sh_half: 0.0, p_max, install_cost: cost / 10.0 });
    }
    finish(NetworkCase { system: system("garver6"), buses, generators, existing_lines, candidate_corridors })
}
