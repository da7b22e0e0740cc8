//! Block matrices against a direct evaluation of the network equations.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rtep::formulation::{assemble_compact, build_uncertain_tep, CompactRobustModel};
use rtep::netcase::{build_uncertainty_box, bundled_case, NetworkCase};

#[derive(Clone, Copy)]
struct C(f64, f64);

impl C {
    fn mul(self, o: C) -> C {
        C(self.0 * o.0 - self.1 * o.1, self.0 * o.1 + self.1 * o.0)
    }
    fn sub(self, o: C) -> C {
        C(self.0 - o.0, self.1 - o.1)
    }
    fn conj(self) -> C {
        C(self.0, -self.1)
    }
}

/// Complex power leaving `vi` towards `vj` on one pi-model circuit.
fn power(vi: C, vj: C, g: f64, b: f64, bsh: f64) -> C {
    let i = C(g, b).mul(vi.sub(vj)).sub(C(0.0, -bsh).mul(vi));
    vi.mul(i.conj())
}

struct Point {
    v: Vec<C>,
    theta: Vec<f64>,
    pg: Vec<f64>,
    qg: Vec<f64>,
    cpd: Vec<f64>,
    cpr: Vec<f64>,
    /// Per candidate line: p_ij, q_ij, p_ji, q_ji.
    pk: Vec<[f64; 4]>,
    y_m: Vec<f64>,
    xi: Vec<f64>,
}

fn random_point(case: &NetworkCase, n_lines: usize, rng: &mut ChaCha8Rng) -> Point {
    let nb = case.n_buses();
    let mut r = |a: f64, b: f64| rng.gen_range(a..b);
    Point {
        v: (0..nb).map(|_| C(r(0.8, 1.2), r(-0.4, 0.4))).collect(),
        theta: (0..nb).map(|_| r(-2.0, 2.0)).collect(),
        pg: case.generators.iter().map(|_| r(-1.0, 3.0)).collect(),
        qg: case.generators.iter().map(|_| r(-1.0, 3.0)).collect(),
        cpd: (0..nb).map(|_| r(-0.5, 1.0)).collect(),
        cpr: (0..nb).map(|_| r(-0.5, 1.0)).collect(),
        pk: (0..n_lines).map(|_| [r(-2.0, 2.0), r(-2.0, 2.0), r(-2.0, 2.0), r(-2.0, 2.0)]).collect(),
        y_m: (0..n_lines).map(|_| if r(0.0, 1.0) < 0.5 { 1.0 } else { 0.0 }).collect(),
        xi: (0..2 * nb).map(|_| r(-0.3, 0.3)).collect(),
    }
}

fn ids(case: &NetworkCase) -> impl Fn(usize) -> usize + '_ {
    move |id| case.bus_index(id).unwrap()
}

/// Candidate lines as (from id, to id, k), in label order.
fn line_labels(m: &CompactRobustModel) -> Vec<String> {
    (0..m.n_m()).map(|l| m.net.line_label(l)).collect()
}

/// y_s assembled by variable name.
fn pack(m: &CompactRobustModel, case: &NetworkCase, p: &Point) -> Vec<f64> {
    let sp = &m.space;
    let mut y = vec![f64::NAN; m.n_s()];
    let mut set = |name: String, v: f64| {
        let k = sp.index_of(&name).unwrap_or_else(|| panic!("no variable {name}"));
        y[k] = v;
    };
    for (i, b) in case.buses.iter().enumerate() {
        set(format!("c[{}]", b.id), p.v[i].0.powi(2) + p.v[i].1.powi(2));
        if b.id != case.angle_ref_bus() {
            set(format!("theta[{}]", b.id), p.theta[i]);
        }
        if b.p_load > 0.0 {
            set(format!("cpd[{}]", b.id), p.cpd[i]);
        }
        if b.p_res > 0.0 {
            set(format!("cpr[{}]", b.id), p.cpr[i]);
        }
    }
    let idx = ids(case);
    for c in case.corridors() {
        let (vi, vj) = (p.v[idx(c.from)], p.v[idx(c.to)]);
        let w = vi.mul(vj.conj());
        set(format!("c[{}-{}]", c.from, c.to), w.0);
        set(format!("s[{}-{}]", c.from, c.to), w.1);
    }
    for g in 0..case.generators.len() {
        set(format!("pg[{g}]"), p.pg[g]);
        set(format!("qg[{g}]"), p.qg[g]);
    }
    for (l, lab) in line_labels(m).iter().enumerate() {
        for (t, name) in ["pk_ij", "qk_ij", "pk_ji", "qk_ji"].iter().enumerate() {
            set(format!("{name}[{lab}]"), p.pk[l][t]);
        }
    }
    assert!(y.iter().all(|v| v.is_finite()));
    y
}

/// Expected residual (left minus right, `<= 0` or `= 0` form) of a named row.
fn expected(name: &str, case: &NetworkCase, m: &CompactRobustModel, p: &Point) -> f64 {
    let sys = &case.system;
    let (big_m, eps) = (sys.big_m, sys.eps_theta);
    let idx = ids(case);
    let nb = case.n_buses();
    let (body, side) = match name.rsplit_once('.') {
        Some((b, s)) if s == "up" || s == "lo" => (b, Some(s == "up")),
        _ => (name, None),
    };
    let sgn = |up: bool, v: f64| if up { v } else { -v };
    let (fam, arg) = body.split_once('[').unwrap();
    let arg = arg.trim_end_matches(']');
    let theta = |id: usize| if id == case.angle_ref_bus() { 0.0 } else { p.theta[idx(id)] };
    let labels = line_labels(m);
    let line = || labels.iter().position(|l| l == arg).unwrap();
    let cand_of = |l: usize| {
        let (ft, _) = arg.split_once('#').unwrap();
        let (f, t) = ft.split_once('-').unwrap();
        let (f, t): (usize, usize) = (f.parse().unwrap(), t.parse().unwrap());
        let c = case.candidate_corridors.iter().find(|c| c.from == f && c.to == t).unwrap();
        (l, f, t, c)
    };
    let bus = || idx(arg.parse().unwrap());
    match fam {
        "seq" => {
            let l = line();
            p.y_m[l] - p.y_m[l - 1]
        }
        "pcand_ij" | "pcand_ji" | "qcand_ij" | "qcand_ji" => {
            let (l, .., c) = cand_of(line());
            let (slot, cap) = match fam {
                "pcand_ij" => (0, c.p_max),
                "pcand_ji" => (2, c.p_max),
                "qcand_ij" => (1, big_m),
                _ => (3, big_m),
            };
            sgn(side.unwrap(), p.pk[l][slot]) - cap * p.y_m[l]
        }
        "pflow_ij" | "pflow_ji" | "qflow_ij" | "qflow_ji" => {
            let (l, f, t, c) = cand_of(line());
            let (a, b) = (p.v[idx(f)], p.v[idx(t)]);
            let s = if fam.ends_with("ij") { power(a, b, c.g, c.b, c.b_sh_half) } else { power(b, a, c.g, c.b, c.b_sh_half) };
            let diff = match fam {
                "pflow_ij" => s.0 - p.pk[l][0],
                "pflow_ji" => s.0 - p.pk[l][2],
                "qflow_ij" => p.pk[l][1] - s.1,
                _ => p.pk[l][3] - s.1,
            };
            sgn(side.unwrap(), diff) - big_m * (1.0 - p.y_m[l])
        }
        "angle_cand" => {
            let (l, f, t, _) = cand_of(line());
            let w = p.v[idx(f)].mul(p.v[idx(t)].conj());
            sgn(side.unwrap(), theta(f) - theta(t) - w.1) - eps - PI * (1.0 - p.y_m[l])
        }
        "pbal" | "qbal" => {
            let i = bus();
            let b = &case.buses[i];
            let delta = b.q_over_p.unwrap_or(0.0);
            let mut out = C(0.0, 0.0);
            for c in case.corridors() {
                let (fi, ti) = (idx(c.from), idx(c.to));
                if fi != i && ti != i {
                    continue;
                }
                let fw = fi == i;
                let (a, o) = if fw { (p.v[fi], p.v[ti]) } else { (p.v[ti], p.v[fi]) };
                if let Some(b0) = &c.base {
                    let s = power(a, o, b0.g, b0.b, b0.b_sh_half);
                    out = C(out.0 + b0.n0 as f64 * s.0, out.1 + b0.n0 as f64 * s.1);
                }
                for (l, lab) in labels.iter().enumerate() {
                    if lab.starts_with(&format!("{}-{}#", c.from, c.to)) {
                        let k = if fw { [0, 1] } else { [2, 3] };
                        out = C(out.0 + p.pk[l][k[0]], out.1 + p.pk[l][k[1]]);
                    }
                }
            }
            let (mut pg, mut qg) = (0.0, 0.0);
            for (g, gen) in case.generators.iter().enumerate() {
                if idx(gen.bus) == i {
                    pg += p.pg[g];
                    qg += p.qg[g];
                }
            }
            let cpd = if b.p_load > 0.0 { p.cpd[i] } else { 0.0 };
            let cpr = if b.p_res > 0.0 { p.cpr[i] } else { 0.0 };
            let (xd, xr) = if b.p_load > 0.0 { (p.xi[i], 0.0) } else { (0.0, 0.0) };
            let xr = if b.p_res > 0.0 { p.xi[nb + i] } else { xr };
            let served = b.p_load + xd - cpd;
            let vv = p.v[i].0.powi(2) + p.v[i].1.powi(2);
            if fam == "pbal" {
                out.0 - (pg + b.p_res + xr - cpr - served)
            } else {
                out.1 - b.b_shunt * vv - (qg - delta * served)
            }
        }
        "pbase_ij" | "pbase_ji" => {
            let (f, t) = arg.split_once('-').unwrap();
            let (f, t) = (idx(f.parse().unwrap()), idx(t.parse().unwrap()));
            let c = case.corridors().into_iter().find(|c| idx(c.from) == f && idx(c.to) == t).unwrap();
            let b0 = c.base.unwrap();
            let s = if fam.ends_with("ij") { power(p.v[f], p.v[t], b0.g, b0.b, b0.b_sh_half) } else { power(p.v[t], p.v[f], b0.g, b0.b, b0.b_sh_half) };
            let n0 = b0.n0 as f64;
            n0 * (sgn(side.unwrap(), s.0) - b0.p_max)
        }
        "angle_base" => {
            let (f, t) = arg.split_once('-').unwrap();
            let (f, t): (usize, usize) = (f.parse().unwrap(), t.parse().unwrap());
            let n0 = case.existing_lines.iter().find(|c| c.from == f && c.to == t).unwrap().n0 as f64;
            let w = p.v[idx(f)].mul(p.v[idx(t)].conj());
            n0 * (sgn(side.unwrap(), theta(f) - theta(t) - w.1) - eps)
        }
        "pgen" | "qgen" => {
            let g: usize = arg.parse().unwrap();
            let gen = &case.generators[g];
            let (v, lo, hi) = if fam == "pgen" { (p.pg[g], gen.p_min, gen.p_max) } else { (p.qg[g], gen.q_min, gen.q_max) };
            if side.unwrap() {
                v - hi
            } else {
                lo - v
            }
        }
        "volt" => {
            let i = bus();
            let b = &case.buses[i];
            let vv = p.v[i].0.powi(2) + p.v[i].1.powi(2);
            if side.unwrap() {
                vv - b.v_max.powi(2)
            } else {
                b.v_min.powi(2) - vv
            }
        }
        "theta" => sgn(side.unwrap(), p.theta[bus()]) - FRAC_PI_2,
        "cpd" | "cpr" => {
            let i = bus();
            let b = &case.buses[i];
            let (cp, nominal, x) = if fam == "cpd" { (p.cpd[i], b.p_load, p.xi[i]) } else { (p.cpr[i], b.p_res, p.xi[nb + i]) };
            if side.unwrap() {
                cp - nominal - x
            } else {
                -cp
            }
        }
        other => panic!("row family {other} has no reference evaluation"),
    }
}

fn check_case(name: &str, seed: u64, points: usize) {
    let case = bundled_case(name).unwrap();
    let bx = build_uncertainty_box(&case, 20.0, 30.0).unwrap();
    let m = assemble_compact(&build_uncertain_tep(&case, &bx).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..points {
        let p = random_point(&case, m.n_m(), &mut rng);
        let y_s = pack(&m, &case, &p);
        for (block, k, got) in m.residuals(&p.y_m, &y_s, &p.xi) {
            let row = &m.row_info(block, k).name;
            let want = expected(row, &case, &m, &p);
            assert!((got - want).abs() <= 1e-9 * (1.0 + want.abs()), "{name} {row}: model {got}, reference {want}");
        }
        // Consistent voltages sit on the cone boundary.
        let yc = m.cone_of(&y_s);
        for c in 0..m.n_corridors() {
            assert!(m.cone_value(&yc, c).abs() < 1e-9, "{name} corridor {c}");
            assert!(yc[4 * c + 3] > 0.0);
        }
    }
}

#[test]
fn three_bus_blocks_match_reference() {
    check_case("three-bus", 11, 50);
}

#[test]
fn garver_blocks_match_reference() {
    check_case("garver6", 12, 50);
}
