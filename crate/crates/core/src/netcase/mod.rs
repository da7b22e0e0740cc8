//! Network data: buses, generators, existing and candidate corridors,
//! cost and solver constants, the TOML case format and the uncertainty box.
//!
//! All electrical quantities are per unit on `base_mva`. Costs are hourly
//! coefficients; reports multiply them by `annualization` to get $/yr.

mod bundled;

use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bundled::{bundled_case, garver6, three_bus, BUNDLED};

#[derive(Debug, Error)]
pub enum CaseError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid case: {field}: {msg}")]
    Invalid { field: String, msg: String },
}

fn invalid(field: impl Into<String>, msg: impl Into<String>) -> CaseError {
    CaseError::Invalid { field: field.into(), msg: msg.into() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemParams {
    #[serde(default)]
    pub name: String,
    pub base_mva: f64,
    /// Filled with the lowest generator bus when absent from the file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle_ref_bus: Option<usize>,
    pub gamma_d: f64,
    pub gamma_r: f64,
    pub big_m: f64,
    pub big_l: f64,
    pub bd_tolerance: f64,
    pub eps_theta: f64,
    pub annualization: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bus {
    pub id: usize,
    pub p_load: f64,
    /// tan of the load power-factor angle; only for buses with load.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_over_p: Option<f64>,
    #[serde(default)]
    pub p_res: f64,
    #[serde(default)]
    pub b_shunt: f64,
    pub v_min: f64,
    pub v_max: f64,
}

impl Bus {
    pub fn q_load(&self) -> f64 {
        self.q_over_p.unwrap_or(0.0) * self.p_load
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Generator {
    pub bus: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub q_min: f64,
    pub q_max: f64,
    pub cost_a: f64,
    #[serde(default)]
    pub cost_b: f64,
}

/// `n0` identical circuits in service between `from` and `to`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExistingCorridor {
    pub from: usize,
    pub to: usize,
    pub n0: u32,
    pub g: f64,
    pub b: f64,
    #[serde(default)]
    pub b_sh_half: f64,
    pub p_max: f64,
}

/// Up to `n_max` new circuits beyond the base topology.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidateCorridor {
    pub from: usize,
    pub to: usize,
    pub n_max: u32,
    pub g: f64,
    pub b: f64,
    #[serde(default)]
    pub b_sh_half: f64,
    pub p_max: f64,
    pub install_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkCase {
    pub system: SystemParams,
    #[serde(rename = "bus")]
    pub buses: Vec<Bus>,
    #[serde(rename = "gen", default)]
    pub generators: Vec<Generator>,
    #[serde(rename = "line0", default)]
    pub existing_lines: Vec<ExistingCorridor>,
    #[serde(rename = "candidate", default)]
    pub candidate_corridors: Vec<CandidateCorridor>,
}

/// Series admittance `(g, b)` from resistance and reactance.
pub fn admittance(r: f64, x: f64) -> (f64, f64) {
    let d = r * r + x * x;
    (r / d, -x / d)
}

impl NetworkCase {
    pub fn from_toml(text: &str) -> Result<Self, CaseError> {
        let mut case: NetworkCase = toml::from_str(text).map_err(|e| CaseError::Parse(e.to_string()))?;
        case.validate()?;
        Ok(case)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("case serializes")
    }

    pub fn n_buses(&self) -> usize {
        self.buses.len()
    }

    pub fn angle_ref_bus(&self) -> usize {
        self.system.angle_ref_bus.expect("validated case has a reference bus")
    }

    /// Position of a bus id in `buses`.
    pub fn bus_index(&self, id: usize) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }

    pub fn total_load(&self) -> (f64, f64) {
        self.buses.iter().fold((0.0, 0.0), |(p, q), b| (p + b.p_load, q + b.q_load()))
    }

    pub fn total_gen_capacity(&self) -> f64 {
        self.generators.iter().map(|g| g.p_max).sum()
    }

    /// Checks every invariant and resolves the default reference bus.
    pub fn validate(&mut self) -> Result<(), CaseError> {
        let s = &self.system;
        for (name, v) in [
            ("system.base_mva", s.base_mva),
            ("system.gamma_d", s.gamma_d),
            ("system.gamma_r", s.gamma_r),
            ("system.big_m", s.big_m),
            ("system.big_l", s.big_l),
            ("system.bd_tolerance", s.bd_tolerance),
            ("system.eps_theta", s.eps_theta),
            ("system.annualization", s.annualization),
        ] {
            if !v.is_finite() {
                return Err(invalid(name, "must be finite"));
            }
            if v <= 0.0 {
                return Err(invalid(name, "must be positive"));
            }
        }
        if s.big_l < 10.0 * s.big_m {
            return Err(invalid("system.big_l", "must be at least 10 * big_m"));
        }
        if self.buses.is_empty() {
            return Err(invalid("bus", "at least one bus is required"));
        }
        let mut ids = HashSet::new();
        for (k, b) in self.buses.iter().enumerate() {
            let f = |name: &str| format!("bus[{k}].{name}");
            if !ids.insert(b.id) {
                return Err(invalid(f("id"), format!("duplicate bus id {}", b.id)));
            }
            for (name, v) in [("p_load", b.p_load), ("p_res", b.p_res), ("b_shunt", b.b_shunt), ("v_min", b.v_min), ("v_max", b.v_max)] {
                if !v.is_finite() {
                    return Err(invalid(f(name), "must be finite"));
                }
            }
            if !(b.v_min > 0.0 && b.v_min <= b.v_max) {
                return Err(invalid(f("v_min"), "need 0 < v_min <= v_max"));
            }
            if b.p_load < 0.0 {
                return Err(invalid(f("p_load"), "must be non-negative"));
            }
            if b.p_res < 0.0 {
                return Err(invalid(f("p_res"), "must be non-negative"));
            }
            match b.q_over_p {
                Some(q) if !q.is_finite() => return Err(invalid(f("q_over_p"), "must be finite")),
                Some(_) if b.p_load == 0.0 => return Err(invalid(f("q_over_p"), "only defined for buses with load")),
                None if b.p_load > 0.0 => return Err(invalid(f("q_over_p"), "required for buses with load")),
                _ => {}
            }
        }
        for (k, g) in self.generators.iter().enumerate() {
            let f = |name: &str| format!("gen[{k}].{name}");
            if !ids.contains(&g.bus) {
                return Err(invalid(f("bus"), format!("unknown bus {}", g.bus)));
            }
            for (name, v) in [("p_min", g.p_min), ("p_max", g.p_max), ("q_min", g.q_min), ("q_max", g.q_max), ("cost_a", g.cost_a), ("cost_b", g.cost_b)] {
                if !v.is_finite() {
                    return Err(invalid(f(name), "must be finite"));
                }
            }
            if g.p_min > g.p_max {
                return Err(invalid(f("p_min"), "exceeds p_max"));
            }
            if g.q_min > g.q_max {
                return Err(invalid(f("q_min"), "exceeds q_max"));
            }
        }
        let mut pairs = HashSet::new();
        for (k, l) in self.existing_lines.iter().enumerate() {
            let f = |name: &str| format!("line0[{k}].{name}");
            check_endpoints(&ids, l.from, l.to, &f)?;
            if !pairs.insert((l.from.min(l.to), l.from.max(l.to))) {
                return Err(invalid(f("to"), "duplicate corridor; use n0 for parallel circuits"));
            }
            for (name, v) in [("g", l.g), ("b", l.b), ("b_sh_half", l.b_sh_half), ("p_max", l.p_max)] {
                if !v.is_finite() {
                    return Err(invalid(f(name), "must be finite"));
                }
            }
            if l.n0 < 1 {
                return Err(invalid(f("n0"), "must be at least 1"));
            }
            if l.p_max <= 0.0 {
                return Err(invalid(f("p_max"), "must be positive"));
            }
        }
        let mut cpairs = HashSet::new();
        for (k, c) in self.candidate_corridors.iter().enumerate() {
            let f = |name: &str| format!("candidate[{k}].{name}");
            check_endpoints(&ids, c.from, c.to, &f)?;
            if !cpairs.insert((c.from.min(c.to), c.from.max(c.to))) {
                return Err(invalid(f("to"), "duplicate candidate corridor"));
            }
            for (name, v) in [("g", c.g), ("b", c.b), ("b_sh_half", c.b_sh_half), ("p_max", c.p_max), ("install_cost", c.install_cost)] {
                if !v.is_finite() {
                    return Err(invalid(f(name), "must be finite"));
                }
            }
            if c.n_max < 1 {
                return Err(invalid(f("n_max"), "must be at least 1"));
            }
            if c.p_max <= 0.0 {
                return Err(invalid(f("p_max"), "must be positive"));
            }
            if c.install_cost <= 0.0 {
                return Err(invalid(f("install_cost"), "must be positive"));
            }
            if c.install_cost >= 12.0 {
                return Err(invalid(f("install_cost"), "scaled install costs must stay below 12"));
            }
        }
        match self.system.angle_ref_bus {
            Some(r) if !ids.contains(&r) => return Err(invalid("system.angle_ref_bus", format!("unknown bus {r}"))),
            Some(_) => {}
            None => {
                let r = self.generators.iter().map(|g| g.bus).min().ok_or_else(|| invalid("system.angle_ref_bus", "required when there are no generators"))?;
                self.system.angle_ref_bus = Some(r);
            }
        }
        Ok(())
    }
}

fn check_endpoints(ids: &HashSet<usize>, from: usize, to: usize, f: &dyn Fn(&str) -> String) -> Result<(), CaseError> {
    if !ids.contains(&from) {
        return Err(invalid(f("from"), format!("unknown bus {from}")));
    }
    if !ids.contains(&to) {
        return Err(invalid(f("to"), format!("unknown bus {to}")));
    }
    if from == to {
        return Err(invalid(f("to"), "self-loop"));
    }
    Ok(())
}

pub fn parse_case(path: impl AsRef<Path>) -> Result<NetworkCase, CaseError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| CaseError::Io { path: path.display().to_string(), source })?;
    NetworkCase::from_toml(&text)
}

/// Interval box for `xi = (xi_d per bus, xi_r per bus)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyBox {
    pub xi_min: Vec<f64>,
    pub xi_max: Vec<f64>,
    pub u_d: f64,
    pub u_r: f64,
}

impl UncertaintyBox {
    pub fn len(&self) -> usize {
        self.xi_min.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi_min.is_empty()
    }

    pub fn width(&self, k: usize) -> f64 {
        self.xi_max[k] - self.xi_min[k]
    }

    pub fn zero(n_buses: usize) -> Self {
        Self { xi_min: vec![0.0; 2 * n_buses], xi_max: vec![0.0; 2 * n_buses], u_d: 0.0, u_r: 0.0 }
    }

    pub fn contains(&self, xi: &[f64], tol: f64) -> bool {
        xi.len() == self.len() && xi.iter().enumerate().all(|(k, v)| *v >= self.xi_min[k] - tol && *v <= self.xi_max[k] + tol)
    }

    /// Indices with nonzero width.
    pub fn uncertain(&self) -> Vec<usize> {
        (0..self.len()).filter(|&k| self.width(k) > 0.0).collect()
    }
}

pub fn build_uncertainty_box(case: &NetworkCase, u_d: f64, u_r: f64) -> Result<UncertaintyBox, CaseError> {
    if !(u_d.is_finite() && u_d >= 0.0) {
        return Err(invalid("u_d", "must be a non-negative percentage"));
    }
    if !(u_r.is_finite() && (0.0..=100.0).contains(&u_r)) {
        return Err(invalid("u_r", "must be a percentage in [0, 100]"));
    }
    let n = case.n_buses();
    let mut bx = UncertaintyBox::zero(n);
    bx.u_d = u_d;
    bx.u_r = u_r;
    for (i, b) in case.buses.iter().enumerate() {
        let d = u_d * b.p_load / 100.0;
        bx.xi_min[i] = -d;
        bx.xi_max[i] = d;
        bx.xi_min[n + i] = -u_r * b.p_res / 100.0;
    }
    Ok(bx)
}

/// Corridor in the union of base and candidate sets, oriented `from -> to`.
#[derive(Debug, Clone, PartialEq)]
pub struct Corridor {
    pub from: usize,
    pub to: usize,
    pub base: Option<ExistingCorridor>,
    pub candidate: Option<CandidateCorridor>,
}

impl NetworkCase {
    /// Union of base and candidate corridors: base corridors in file order,
    /// then candidate-only corridors. Orientation follows the first listing.
    pub fn corridors(&self) -> Vec<Corridor> {
        let mut out: Vec<Corridor> = Vec::new();
        let mut at: HashMap<(usize, usize), usize> = HashMap::new();
        let key = |a: usize, b: usize| (a.min(b), a.max(b));
        for l in &self.existing_lines {
            at.insert(key(l.from, l.to), out.len());
            out.push(Corridor { from: l.from, to: l.to, base: Some(l.clone()), candidate: None });
        }
        for c in &self.candidate_corridors {
            let mut c2 = c.clone();
            match at.get(&key(c.from, c.to)) {
                Some(&k) => {
                    if out[k].from != c.from {
                        // Same circuit seen from the other end.
                        c2.from = out[k].from;
                        c2.to = out[k].to;
                    }
                    out[k].candidate = Some(c2);
                }
                None => {
                    at.insert(key(c.from, c.to), out.len());
                    out.push(Corridor { from: c.from, to: c.to, base: None, candidate: Some(c2) });
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_three_bus_totals() {
        let c = three_bus();
        let (p, q) = c.total_load();
        assert!((p - 3.0).abs() < 1e-12 && (q - 2.5).abs() < 1e-12);
        assert!((c.total_gen_capacity() - 3.5).abs() < 1e-12);
        let res: Vec<_> = c.buses.iter().filter(|b| b.p_res > 0.0).map(|b| (b.id, b.p_res)).collect();
        assert_eq!(res, vec![(2, 0.75)]);
        assert!(c.existing_lines.iter().all(|l| l.n0 == 1));
        assert_eq!(c.existing_lines.len(), 3);
    }

    #[test]
    fn bundled_garver_corridors() {
        let c = garver6();
        assert_eq!(c.n_buses(), 6);
        let cors = c.corridors();
        assert_eq!(cors.len(), 15);
        for k in &cors {
            let n0 = k.base.as_ref().map_or(0, |b| b.n0);
            assert_eq!(n0 + k.candidate.as_ref().unwrap().n_max, 5);
        }
        // Bus 6 has no base line.
        assert!(c.existing_lines.iter().all(|l| l.from != 6 && l.to != 6));
        assert!(c.candidate_corridors.iter().map(|k| k.install_cost).fold(0.0, f64::max) < 12.0);
    }

    #[test]
    fn empty_candidate_list_is_valid() {
        let mut c = three_bus();
        c.candidate_corridors.clear();
        let text = c.to_toml();
        assert!(NetworkCase::from_toml(&text).is_ok());
    }

    #[test]
    fn box_formulas() {
        let c = three_bus();
        let n = c.n_buses();
        let z = build_uncertainty_box(&c, 0.0, 0.0).unwrap();
        assert!(z.xi_min.iter().chain(&z.xi_max).all(|v| *v == 0.0));
        let b = build_uncertainty_box(&c, 10.0, 50.0).unwrap();
        for (i, bus) in c.buses.iter().enumerate() {
            assert!((b.xi_max[i] - 0.1 * bus.p_load).abs() < 1e-15);
            assert_eq!(b.xi_min[i], -b.xi_max[i]);
            assert_eq!(b.xi_max[n + i], 0.0);
        }
        let k = c.bus_index(2).unwrap();
        assert!((b.xi_min[n + k] + 0.375).abs() < 1e-15);
        assert!(build_uncertainty_box(&c, -1.0, 0.0).is_err());
        assert!(build_uncertainty_box(&c, 0.0, 101.0).is_err());
    }

    #[test]
    fn validation_names_the_field() {
        let mut c = three_bus();
        c.buses[0].v_min = 1.2;
        let err = NetworkCase::from_toml(&c.to_toml()).unwrap_err().to_string();
        assert!(err.contains("bus[0].v_min"), "{err}");
        let mut c = three_bus();
        c.existing_lines[0].to = c.existing_lines[0].from;
        assert!(NetworkCase::from_toml(&c.to_toml()).unwrap_err().to_string().contains("self-loop"));
        let mut c = three_bus();
        c.system.big_l = c.system.big_m;
        assert!(NetworkCase::from_toml(&c.to_toml()).unwrap_err().to_string().contains("big_l"));
    }

    #[test]
    fn non_finite_and_malformed_rejected() {
        let text = three_bus().to_toml().replacen("p_max = ", "p_max = nan #", 1);
        let err = NetworkCase::from_toml(&text).unwrap_err().to_string();
        assert!(err.contains("p_max") && err.contains("finite"), "{err}");
        let text = three_bus().to_toml().replacen("v_min = ", "v_min = \"x\" #", 1);
        let err = NetworkCase::from_toml(&text).unwrap_err().to_string();
        assert!(err.contains("line") && err.contains("v_min"), "{err}");
    }

    #[test]
    fn default_reference_is_lowest_generator_bus() {
        let mut c = garver6();
        c.system.angle_ref_bus = None;
        c.validate().unwrap();
        assert_eq!(c.angle_ref_bus(), 1);
    }
}
