//! Relaxed and robust AC expansion models, their block-matrix assembly, the
//! nonconvex rectangular-voltage model, and conversion of linear row sets into
//! interior-point problems.
//!
//! Row convention: every row reads `ys·y_s + ym·y_m + xi·ξ (<= | =) rhs`.

mod compact;
mod convert;
mod nonconvex;

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI};

use serde::Serialize;

use crate::netcase::{Bus, CandidateCorridor, CaseError, ExistingCorridor, Generator, NetworkCase, SystemParams, UncertaintyBox};

pub use compact::{assemble_compact, Block, CompactRobustModel, RowInfo, H_DIAG};
pub use convert::{rows_to_qcqp, Converted, DualSlot, SparseRow};
pub use nonconvex::{build_deterministic_tep, NonconvexTep};

/// Index-based view of a validated case.
#[derive(Debug, Clone)]
pub struct Network {
    pub system: SystemParams,
    pub buses: Vec<Bus>,
    pub gens: Vec<Generator>,
    /// Bus index of each generator.
    pub gen_bus: Vec<usize>,
    pub ref_bus: usize,
    pub corridors: Vec<NetCorridor>,
    /// Candidate lines in y_m order.
    pub lines: Vec<CandidateLine>,
}

#[derive(Debug, Clone)]
pub struct NetCorridor {
    pub i: usize,
    pub j: usize,
    /// `"from-to"` with bus ids.
    pub label: String,
    pub base: Option<ExistingCorridor>,
    pub cand: Option<CandidateCorridor>,
    pub lines: std::ops::Range<usize>,
}

impl NetCorridor {
    pub fn n0(&self) -> f64 {
        self.base.as_ref().map_or(0.0, |b| b.n0 as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CandidateLine {
    pub corridor: usize,
    /// 1-based circuit number within the corridor.
    pub k: u32,
}

impl Network {
    pub fn new(case: &NetworkCase) -> Result<Self, CaseError> {
        let mut case = case.clone();
        case.validate()?;
        let idx = |id: usize| case.bus_index(id).expect("validated bus id");
        let mut corridors = Vec::new();
        let mut lines = Vec::new();
        for c in case.corridors() {
            let start = lines.len();
            if let Some(cand) = &c.candidate {
                for k in 1..=cand.n_max {
                    lines.push(CandidateLine { corridor: corridors.len(), k });
                }
            }
            corridors.push(NetCorridor {
                i: idx(c.from),
                j: idx(c.to),
                label: format!("{}-{}", c.from, c.to),
                base: c.base,
                cand: c.candidate,
                lines: start..lines.len(),
            });
        }
        Ok(Self {
            gen_bus: case.generators.iter().map(|g| idx(g.bus)).collect(),
            ref_bus: idx(case.angle_ref_bus()),
            system: case.system.clone(),
            buses: case.buses.clone(),
            gens: case.generators.clone(),
            corridors,
            lines,
        })
    }

    pub fn n_buses(&self) -> usize {
        self.buses.len()
    }

    pub fn line_label(&self, l: usize) -> String {
        let cl = self.lines[l];
        format!("{}#{}", self.corridors[cl.corridor].label, cl.k)
    }

    /// Number of installed circuits per corridor under `y_m` (base plus candidates).
    pub fn circuits(&self, y_m: &[f64]) -> Vec<f64> {
        self.corridors.iter().map(|c| c.n0() + c.lines.clone().map(|l| y_m[l].round()).sum::<f64>()).collect()
    }

    /// The ξ layout: loads first, then RES, one slot per bus.
    pub fn n_xi(&self) -> usize {
        2 * self.n_buses()
    }
}

/// Ordered index maps over y_s, y_cone and y_m.
#[derive(Debug, Clone)]
pub struct VariableSpace {
    pub c_ii: Vec<usize>,
    pub c_ij: Vec<usize>,
    pub s_ij: Vec<usize>,
    /// None at the reference bus, whose angle is the constant 0.
    pub theta: Vec<Option<usize>>,
    pub p_g: Vec<usize>,
    pub q_g: Vec<usize>,
    /// Only at buses with load.
    pub cp_d: Vec<Option<usize>>,
    /// Only at buses with RES.
    pub cp_r: Vec<Option<usize>>,
    pub p_ij: Vec<usize>,
    pub q_ij: Vec<usize>,
    pub p_ji: Vec<usize>,
    pub q_ji: Vec<usize>,
    pub names: Vec<String>,
    pub cone_names: Vec<String>,
    pub line_names: Vec<String>,
    lookup: HashMap<String, usize>,
}

impl VariableSpace {
    fn new(net: &Network) -> Self {
        let mut names = Vec::new();
        let mut add = |s: String| {
            names.push(s);
            names.len() - 1
        };
        let id = |i: usize| net.buses[i].id;
        let c_ii = (0..net.n_buses()).map(|i| add(format!("c[{}]", id(i)))).collect();
        let mut c_ij = Vec::new();
        let mut s_ij = Vec::new();
        for c in &net.corridors {
            c_ij.push(add(format!("c[{}]", c.label)));
            s_ij.push(add(format!("s[{}]", c.label)));
        }
        let theta = (0..net.n_buses()).map(|i| (i != net.ref_bus).then(|| add(format!("theta[{}]", id(i))))).collect();
        let p_g = (0..net.gens.len()).map(|g| add(format!("pg[{}]", g))).collect();
        let q_g = (0..net.gens.len()).map(|g| add(format!("qg[{}]", g))).collect();
        let cp_d = (0..net.n_buses()).map(|i| (net.buses[i].p_load > 0.0).then(|| add(format!("cpd[{}]", id(i))))).collect();
        let cp_r = (0..net.n_buses()).map(|i| (net.buses[i].p_res > 0.0).then(|| add(format!("cpr[{}]", id(i))))).collect();
        let (mut p_ij, mut q_ij, mut p_ji, mut q_ji) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for l in 0..net.lines.len() {
            let lab = net.line_label(l);
            p_ij.push(add(format!("pk_ij[{lab}]")));
            q_ij.push(add(format!("qk_ij[{lab}]")));
            p_ji.push(add(format!("pk_ji[{lab}]")));
            q_ji.push(add(format!("qk_ji[{lab}]")));
        }
        let cone_names = net.corridors.iter().flat_map(|c| (1..=4).map(move |m| format!("D{m}[{}]", c.label))).collect();
        let line_names = (0..net.lines.len()).map(|l| format!("x[{}]", net.line_label(l))).collect();
        let lookup = names.iter().enumerate().map(|(k, s)| (s.clone(), k)).collect();
        Self { c_ii, c_ij, s_ij, theta, p_g, q_g, cp_d, cp_r, p_ij, q_ij, p_ji, q_ji, names, cone_names, line_names, lookup }
    }

    pub fn n_s(&self) -> usize {
        self.names.len()
    }

    pub fn n_cone(&self) -> usize {
        self.cone_names.len()
    }

    pub fn n_m(&self) -> usize {
        self.line_names.len()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.lookup.get(name).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RowKind {
    Sequential,
    CandRealLimit,
    CandReactiveLimit,
    CandRealFlow,
    CandReactiveFlow,
    CandAngle,
    RealBalance,
    ReactiveBalance,
    BaseRealFlow,
    GenReal,
    GenReactive,
    Voltage,
    Angle,
    BaseAngle,
    LoadCurtail,
    ResCurtail,
}

/// One named linear row.
#[derive(Debug, Clone, PartialEq)]
pub struct LinRow {
    pub kind: RowKind,
    pub name: String,
    pub dual: String,
    pub ys: Vec<(usize, f64)>,
    pub ym: Vec<(usize, f64)>,
    pub xi: Vec<(usize, f64)>,
    pub rhs: f64,
    pub eq: bool,
}

impl LinRow {
    /// Left side minus right side.
    pub fn residual(&self, y_s: &[f64], y_m: &[f64], xi: &[f64]) -> f64 {
        let s = |v: &[(usize, f64)], x: &[f64]| v.iter().map(|&(j, a)| a * x[j]).sum::<f64>();
        s(&self.ys, y_s) + s(&self.ym, y_m) + s(&self.xi, xi) - self.rhs
    }
}

/// Relaxed (and optionally uncertain) expansion model as a list of named rows.
#[derive(Debug, Clone)]
pub struct TepModel {
    pub net: Network,
    pub space: VariableSpace,
    pub rows: Vec<LinRow>,
    pub f_m: Vec<f64>,
    pub f_s: Vec<f64>,
    pub f_c: f64,
    pub xi_box: UncertaintyBox,
}

/// Coefficients of `±(D1..D4)` in terms of y_s per corridor: `D = -U y_s`.
pub(crate) fn cone_map(space: &VariableSpace, net: &Network, c: usize) -> [Vec<(usize, f64)>; 4] {
    let cr = &net.corridors[c];
    let (ci, cj) = (space.c_ii[cr.i], space.c_ii[cr.j]);
    [
        vec![(space.c_ij[c], 2.0)],
        vec![(space.s_ij[c], 2.0)],
        vec![(ci, 1.0), (cj, -1.0)],
        vec![(ci, 1.0), (cj, 1.0)],
    ]
}

fn tidy(mut v: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    v.sort_by_key(|e| e.0);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(v.len());
    for (j, a) in v {
        match out.last_mut() {
            Some(l) if l.0 == j => l.1 += a,
            _ => out.push((j, a)),
        }
    }
    out.retain(|e| e.1 != 0.0);
    out
}

fn scaled(v: &[(usize, f64)], s: f64) -> Vec<(usize, f64)> {
    v.iter().map(|&(j, a)| (j, a * s)).collect()
}

/// Real and reactive flow expressions leaving `from` (forward) or `to` (reverse)
/// for one circuit with the given parameters.
fn flow_terms(space: &VariableSpace, cr: &NetCorridor, c: usize, g: f64, b: f64, bsh: f64, forward: bool) -> (Vec<(usize, f64)>, Vec<(usize, f64)>) {
    let (own, cij, sij) = (space.c_ii[if forward { cr.i } else { cr.j }], space.c_ij[c], space.s_ij[c]);
    let sg = if forward { 1.0 } else { -1.0 };
    let p = vec![(own, g), (cij, -g), (sij, -sg * b)];
    let q = vec![(own, -(b + bsh)), (cij, b), (sij, -sg * g)];
    (p, q)
}

struct RowSink {
    rows: Vec<LinRow>,
}

impl RowSink {
    #[allow(clippy::too_many_arguments)]
    fn push(&mut self, kind: RowKind, name: String, dual: String, ys: Vec<(usize, f64)>, ym: Vec<(usize, f64)>, xi: Vec<(usize, f64)>, rhs: f64, eq: bool) {
        self.rows.push(LinRow { kind, name, dual, ys: tidy(ys), ym: tidy(ym), xi: tidy(xi), rhs, eq });
    }

    /// Adds `expr + ym <= rhs` and `-expr + ym_lo <= rhs_lo` as an upper/lower pair.
    #[allow(clippy::too_many_arguments)]
    fn pair(&mut self, kind: RowKind, name: &str, dual: &str, ys: &[(usize, f64)], ym: Vec<(usize, f64)>, xi: &[(usize, f64)], rhs_up: f64, rhs_lo: f64) {
        self.push(kind, format!("{name}.up"), format!("z_up_{dual}"), ys.to_vec(), ym.clone(), xi.to_vec(), rhs_up, false);
        self.push(kind, format!("{name}.lo"), format!("z_lo_{dual}"), scaled(ys, -1.0), ym, scaled(xi, -1.0), rhs_lo, false);
    }
}

/// Relaxed deterministic model: no ξ terms.
pub fn build_relaxed_tep(case: &NetworkCase) -> Result<TepModel, CaseError> {
    let net = Network::new(case)?;
    let n = net.n_buses();
    build(net, UncertaintyBox::zero(n), false)
}

/// Relaxed model with ξ entering the balance and curtailment rows.
pub fn build_uncertain_tep(case: &NetworkCase, xi_box: &UncertaintyBox) -> Result<TepModel, CaseError> {
    let net = Network::new(case)?;
    if xi_box.len() != net.n_xi() {
        return Err(CaseError::Invalid { field: "uncertainty box".into(), msg: format!("expected {} components, got {}", net.n_xi(), xi_box.len()) });
    }
    build(net, xi_box.clone(), true)
}

fn build(net: Network, xi_box: UncertaintyBox, with_xi: bool) -> Result<TepModel, CaseError> {
    let sp = VariableSpace::new(&net);
    let nb = net.n_buses();
    let sys = &net.system;
    let (big_m, eps) = (sys.big_m, sys.eps_theta);
    let bid = |i: usize| net.buses[i].id;
    let mut out = RowSink { rows: Vec::new() };
    let xi = |k: usize, a: f64| if with_xi { vec![(k, a)] } else { vec![] };

    // Binary-only rows.
    for c in &net.corridors {
        for l in c.lines.clone().skip(1) {
            out.push(RowKind::Sequential, format!("seq[{}]", net.line_label(l)), format!("z_seq[{}]", net.line_label(l)), vec![], vec![(l, 1.0), (l - 1, -1.0)], vec![], 0.0, false);
        }
    }

    // Mixed rows per candidate line.
    for (l, cl) in net.lines.iter().enumerate() {
        let cr = &net.corridors[cl.corridor];
        let cd = cr.cand.as_ref().expect("line on a candidate corridor");
        let lab = net.line_label(l);
        let (pf, qf) = flow_terms(&sp, cr, cl.corridor, cd.g, cd.b, cd.b_sh_half, true);
        let (pr, qr) = flow_terms(&sp, cr, cl.corridor, cd.g, cd.b, cd.b_sh_half, false);
        let x = |a: f64| vec![(l, a)];
        out.pair(RowKind::CandRealLimit, &format!("pcand_ij[{lab}]"), &format!("pijk[{lab}]"), &[(sp.p_ij[l], 1.0)], x(-cd.p_max), &[], 0.0, 0.0);
        out.pair(RowKind::CandRealLimit, &format!("pcand_ji[{lab}]"), &format!("pjik[{lab}]"), &[(sp.p_ji[l], 1.0)], x(-cd.p_max), &[], 0.0, 0.0);
        out.pair(RowKind::CandReactiveLimit, &format!("qcand_ij[{lab}]"), &format!("qijk[{lab}]"), &[(sp.q_ij[l], 1.0)], x(-big_m), &[], 0.0, 0.0);
        out.pair(RowKind::CandReactiveLimit, &format!("qcand_ji[{lab}]"), &format!("qjik[{lab}]"), &[(sp.q_ji[l], 1.0)], x(-big_m), &[], 0.0, 0.0);
        let mut e = pf.clone();
        e.push((sp.p_ij[l], -1.0));
        out.pair(RowKind::CandRealFlow, &format!("pflow_ij[{lab}]"), &format!("fpijk[{lab}]"), &e, x(big_m), &[], big_m, big_m);
        let mut e = pr.clone();
        e.push((sp.p_ji[l], -1.0));
        out.pair(RowKind::CandRealFlow, &format!("pflow_ji[{lab}]"), &format!("fpjik[{lab}]"), &e, x(big_m), &[], big_m, big_m);
        let mut e = scaled(&qf, -1.0);
        e.push((sp.q_ij[l], 1.0));
        out.pair(RowKind::CandReactiveFlow, &format!("qflow_ij[{lab}]"), &format!("fqijk[{lab}]"), &e, x(big_m), &[], big_m, big_m);
        let mut e = scaled(&qr, -1.0);
        e.push((sp.q_ji[l], 1.0));
        out.pair(RowKind::CandReactiveFlow, &format!("qflow_ji[{lab}]"), &format!("fqjik[{lab}]"), &e, x(big_m), &[], big_m, big_m);
        let mut e = vec![(sp.s_ij[cl.corridor], -1.0)];
        e.extend(sp.theta[cr.i].map(|t| (t, 1.0)));
        e.extend(sp.theta[cr.j].map(|t| (t, -1.0)));
        out.pair(RowKind::CandAngle, &format!("angle_cand[{lab}]"), &format!("thetak[{lab}]"), &e, x(PI), &[], eps + PI, eps + PI);
    }

    // Balance rows.
    let mut pb: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nb];
    let mut qb: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nb];
    for (c, cr) in net.corridors.iter().enumerate() {
        if let Some(b0) = &cr.base {
            let n0 = b0.n0 as f64;
            for (fw, bus) in [(true, cr.i), (false, cr.j)] {
                let (p, q) = flow_terms(&sp, cr, c, b0.g, b0.b, b0.b_sh_half, fw);
                pb[bus].extend(scaled(&p, n0));
                qb[bus].extend(scaled(&q, n0));
            }
        }
        for l in cr.lines.clone() {
            pb[cr.i].push((sp.p_ij[l], 1.0));
            qb[cr.i].push((sp.q_ij[l], 1.0));
            pb[cr.j].push((sp.p_ji[l], 1.0));
            qb[cr.j].push((sp.q_ji[l], 1.0));
        }
    }
    for (g, &bus) in net.gen_bus.iter().enumerate() {
        pb[bus].push((sp.p_g[g], -1.0));
        qb[bus].push((sp.q_g[g], -1.0));
    }
    for i in 0..nb {
        let bus = &net.buses[i];
        let delta = bus.q_over_p.unwrap_or(0.0);
        let mut p = std::mem::take(&mut pb[i]);
        let mut q = std::mem::take(&mut qb[i]);
        let mut pxi = Vec::new();
        let mut qxi = Vec::new();
        if let Some(cp) = sp.cp_d[i] {
            p.push((cp, -1.0));
            q.push((cp, -delta));
            pxi.extend(xi(i, 1.0));
            qxi.extend(xi(i, delta));
        }
        if let Some(cp) = sp.cp_r[i] {
            p.push((cp, 1.0));
            pxi.extend(xi(nb + i, -1.0));
        }
        q.push((sp.c_ii[i], -bus.b_shunt));
        out.push(RowKind::RealBalance, format!("pbal[{}]", bid(i)), format!("lambda_p[{}]", bid(i)), p, vec![], pxi, bus.p_res - bus.p_load, true);
        out.push(RowKind::ReactiveBalance, format!("qbal[{}]", bid(i)), format!("lambda_q[{}]", bid(i)), q, vec![], qxi, -delta * bus.p_load, true);
    }

    // Continuous-only inequalities.
    for (c, cr) in net.corridors.iter().enumerate() {
        if let Some(b0) = &cr.base {
            let n0 = b0.n0 as f64;
            for (fw, tag) in [(true, "ij"), (false, "ji")] {
                let (p, _) = flow_terms(&sp, cr, c, b0.g, b0.b, b0.b_sh_half, fw);
                out.pair(RowKind::BaseRealFlow, &format!("pbase_{tag}[{}]", cr.label), &format!("p{tag}0[{}]", cr.label), &scaled(&p, n0), vec![], &[], n0 * b0.p_max, n0 * b0.p_max);
            }
        }
    }
    for (g, gen) in net.gens.iter().enumerate() {
        out.pair(RowKind::GenReal, &format!("pgen[{g}]"), &format!("pg[{g}]"), &[(sp.p_g[g], 1.0)], vec![], &[], gen.p_max, -gen.p_min);
    }
    for (g, gen) in net.gens.iter().enumerate() {
        out.pair(RowKind::GenReactive, &format!("qgen[{g}]"), &format!("qg[{g}]"), &[(sp.q_g[g], 1.0)], vec![], &[], gen.q_max, -gen.q_min);
    }
    for i in 0..nb {
        let bus = &net.buses[i];
        out.pair(RowKind::Voltage, &format!("volt[{}]", bid(i)), &format!("v[{}]", bid(i)), &[(sp.c_ii[i], 1.0)], vec![], &[], bus.v_max * bus.v_max, -bus.v_min * bus.v_min);
    }
    for i in 0..nb {
        if let Some(t) = sp.theta[i] {
            out.pair(RowKind::Angle, &format!("theta[{}]", bid(i)), &format!("theta[{}]", bid(i)), &[(t, 1.0)], vec![], &[], FRAC_PI_2, FRAC_PI_2);
        }
    }
    for (c, cr) in net.corridors.iter().enumerate() {
        if let Some(b0) = &cr.base {
            let n0 = b0.n0 as f64;
            let mut e = vec![(sp.s_ij[c], -n0)];
            e.extend(sp.theta[cr.i].map(|t| (t, n0)));
            e.extend(sp.theta[cr.j].map(|t| (t, -n0)));
            out.pair(RowKind::BaseAngle, &format!("angle_base[{}]", cr.label), &format!("theta0[{}]", cr.label), &e, vec![], &[], n0 * eps, n0 * eps);
        }
    }
    for i in 0..nb {
        if let Some(cp) = sp.cp_d[i] {
            let p = net.buses[i].p_load;
            out.push(RowKind::LoadCurtail, format!("cpd[{}].up", bid(i)), format!("z_up_pd[{}]", bid(i)), vec![(cp, 1.0)], vec![], xi(i, -1.0), p, false);
            out.push(RowKind::LoadCurtail, format!("cpd[{}].lo", bid(i)), format!("z_lo_pd[{}]", bid(i)), vec![(cp, -1.0)], vec![], vec![], 0.0, false);
        }
    }
    for i in 0..nb {
        if let Some(cp) = sp.cp_r[i] {
            let p = net.buses[i].p_res;
            out.push(RowKind::ResCurtail, format!("cpr[{}].up", bid(i)), format!("z_up_pr[{}]", bid(i)), vec![(cp, 1.0)], vec![], xi(nb + i, -1.0), p, false);
            out.push(RowKind::ResCurtail, format!("cpr[{}].lo", bid(i)), format!("z_lo_pr[{}]", bid(i)), vec![(cp, -1.0)], vec![], vec![], 0.0, false);
        }
    }

    let mut f_s = vec![0.0; sp.n_s()];
    for (g, gen) in net.gens.iter().enumerate() {
        f_s[sp.p_g[g]] = gen.cost_a;
    }
    for i in 0..nb {
        if let Some(cp) = sp.cp_d[i] {
            f_s[cp] = sys.gamma_d;
        }
        if let Some(cp) = sp.cp_r[i] {
            f_s[cp] = sys.gamma_r;
        }
    }
    let f_c = net.gens.iter().map(|g| g.cost_b).sum();
    let f_m = net.lines.iter().map(|cl| net.corridors[cl.corridor].cand.as_ref().unwrap().install_cost).collect();
    Ok(TepModel { rows: out.rows, space: sp, f_m, f_s, f_c, xi_box, net })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netcase::{build_uncertainty_box, bundled_case};

    #[test]
    fn three_bus_structure() {
        let case = bundled_case("three-bus").unwrap();
        let m = build_relaxed_tep(&case).unwrap();
        assert_eq!(m.net.corridors.len(), 3);
        assert_eq!(m.space.n_cone(), 12);
        let bal = m.rows.iter().filter(|r| r.eq).count();
        assert_eq!(bal, 6);
        assert!(m.rows.iter().all(|r| r.xi.is_empty()));
        let eps_rows: Vec<_> = m.rows.iter().filter(|r| r.kind == RowKind::BaseAngle).collect();
        assert!(eps_rows.iter().all(|r| (r.rhs - 0.0044).abs() < 1e-15));
        // Every name and every dual label is unique.
        let mut names: Vec<_> = m.rows.iter().map(|r| &r.name).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), m.rows.len());
        let mut duals: Vec<_> = m.rows.iter().map(|r| &r.dual).collect();
        duals.sort();
        duals.dedup();
        assert_eq!(duals.len(), m.rows.len());
    }

    #[test]
    fn zero_box_matches_relaxed_rows() {
        let case = bundled_case("garver6").unwrap();
        let a = build_relaxed_tep(&case).unwrap();
        let b = build_uncertain_tep(&case, &UncertaintyBox::zero(6)).unwrap();
        assert_eq!(a.rows.len(), b.rows.len());
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            assert_eq!((&ra.name, &ra.ys, &ra.ym, ra.rhs, ra.eq), (&rb.name, &rb.ys, &rb.ym, rb.rhs, rb.eq));
        }
    }

    #[test]
    fn xi_only_touches_load_buses() {
        let case = bundled_case("three-bus").unwrap();
        let bx = build_uncertainty_box(&case, 10.0, 0.0).unwrap();
        let m = build_uncertain_tep(&case, &bx).unwrap();
        for r in &m.rows {
            if !r.xi.is_empty() {
                assert!(matches!(r.kind, RowKind::RealBalance | RowKind::ReactiveBalance | RowKind::LoadCurtail | RowKind::ResCurtail), "{}", r.name);
            }
        }
    }
}
