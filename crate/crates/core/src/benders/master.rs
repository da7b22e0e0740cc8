//! Master MILP: optimality cuts plus a linearized copy of the slave at the
//! latest worst case.

use serde::Serialize;

use super::DualSlaveSolution;
use crate::formulation::CompactRobustModel;
use crate::linalg::CsrMatrix;
use crate::milp::{LpProblem, MilpProblem, RowSense};

/// `χ >= constant + coefs · y_m`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BendersCut {
    pub constant: f64,
    pub coefs: Vec<f64>,
}

impl BendersCut {
    pub fn from_dual(m: &CompactRobustModel, s: &DualSlaveSolution) -> Self {
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let constant = m.f_c - dot(&m.r, &s.z_ms) - dot(&m.t_e, &s.lambda) - dot(&m.t_ie, &s.z) + dot(&s.psi, &s.xi);
        Self { constant, coefs: m.t.tr_mul_vec(&s.z_ms) }
    }

    pub fn value(&self, y_m: &[f64]) -> f64 {
        self.constant + self.coefs.iter().zip(y_m).map(|(a, x)| a * x).sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MasterMode {
    /// Cone rows written directly over `c, s`.
    #[default]
    Reduced,
    /// Explicit `Δy_cone` variables and linking equalities.
    Full,
}

/// Column positions in the master.
#[derive(Debug, Clone)]
pub struct MasterLayout {
    pub n_m: usize,
    pub chi: usize,
    /// First y_s column of each acceleration block.
    pub ys: Vec<usize>,
    /// First Δ column of each block in full mode.
    pub delta: Vec<Option<usize>>,
}

/// Point at which the cone row is linearized, and whether it is the snapshot itself.
/// The tangent at a point on the cone boundary is always a valid outer cut; an
/// interior snapshot gives a valid row only when `D4 + |d| <= 2 min D4`.
pub(crate) fn taylor_point(y: &[f64], d4_min: f64) -> Option<([f64; 4], bool)> {
    let nd = (y[0] * y[0] + y[1] * y[1] + y[2] * y[2]).sqrt();
    if nd <= y[3] && y[3] + nd <= 2.0 * d4_min {
        return Some(([y[0], y[1], y[2], y[3]], true));
    }
    let t = 0.5 * (nd + y[3]);
    if nd == 0.0 || t <= 0.0 {
        return None;
    }
    Some(([t * y[0] / nd, t * y[1] / nd, t * y[2] / nd, t], false))
}

/// One copy of the slave rows per realization in `xis`. Each copy gets the
/// linearized cone rows at every point in `cone_points`; the cone is
/// homogeneous, so a tangent at any boundary point stays a valid outer row
/// whatever the plan. In full mode the last point is written through `Δ`.
pub fn build_master(m: &CompactRobustModel, cuts: &[BendersCut], xis: &[Vec<f64>], cone_points: &[Vec<f64>], mode: MasterMode) -> (MilpProblem<f64>, MasterLayout) {
    let (nm, ns, nc) = (m.n_m(), m.n_s(), m.n_corridors());
    let inf = f64::INFINITY;
    let mut lower = vec![0.0; nm];
    let mut upper = vec![1.0; nm];
    let mut cost = m.f_m.clone();
    let chi = nm;
    lower.push(0.0);
    upper.push(inf);
    cost.push(1.0);
    let mut trip: Vec<(usize, usize, f64)> = Vec::new();
    let mut senses = Vec::new();
    let mut rhs = Vec::new();
    let mut row = |coefs: Vec<(usize, f64)>, s: RowSense, b: f64, trip: &mut Vec<(usize, usize, f64)>| {
        let k = rhs.len();
        trip.extend(coefs.into_iter().filter(|e| e.1 != 0.0).map(|(j, a)| (k, j, a)));
        senses.push(s);
        rhs.push(b);
    };
    for k in 0..m.h.len() {
        let (c, v) = m.a.row(k);
        row(c.iter().copied().zip(v.iter().copied()).collect(), RowSense::Le, m.h[k], &mut trip);
    }
    for cut in cuts {
        let mut c: Vec<(usize, f64)> = cut.coefs.iter().copied().enumerate().collect();
        c.push((chi, -1.0));
        row(c, RowSense::Le, -cut.constant, &mut trip);
    }
    // Tangent points per corridor, deduplicated by direction.
    let mut tangents: Vec<Vec<[f64; 4]>> = vec![Vec::new(); nc];
    let reduced = match mode {
        MasterMode::Full => &cone_points[..cone_points.len().saturating_sub(1)],
        MasterMode::Reduced => cone_points,
    };
    for yc in reduced {
        for c in 0..nc {
            let Some((yh, _)) = taylor_point(&yc[4 * c..4 * c + 4], m.d4_bounds[c].0) else { continue };
            let n = yh[3].abs().max(1e-300);
            let dup = tangents[c].iter().any(|t| (0..4).all(|k| (t[k] / t[3].abs().max(1e-300) - yh[k] / n).abs() < 1e-9));
            if !dup {
                tangents[c].push(yh);
            }
        }
    }
    let last = cone_points.last();
    let mut layout = MasterLayout { n_m: nm, chi, ys: Vec::new(), delta: Vec::new() };
    for xi in xis {
        let y0 = lower.len();
        layout.ys.push(y0);
        lower.extend(std::iter::repeat_n(-inf, ns));
        upper.extend(std::iter::repeat_n(inf, ns));
        cost.extend(std::iter::repeat_n(0.0, ns));
        for k in 0..m.r.len() {
            let mut c: Vec<(usize, f64)> = m.t.row_iter(k).collect();
            c.extend(m.g.row_iter(k).map(|(j, a)| (y0 + j, a)));
            row(c, RowSense::Le, m.r[k], &mut trip);
        }
        let jx = m.j_e.mul_vec(xi);
        for k in 0..m.t_e.len() {
            row(m.b_e.row_iter(k).map(|(j, a)| (y0 + j, a)).collect(), RowSense::Eq, m.t_e[k] - jx[k], &mut trip);
        }
        let jx = m.j_ie.mul_vec(xi);
        for k in 0..m.t_ie.len() {
            let (c, v) = m.b_ie.row(k);
            let b = m.t_ie[k] - jx[k];
            if c.len() == 1 {
                let (j, a) = (y0 + c[0], v[0]);
                if a > 0.0 {
                    upper[j] = upper[j].min(b / a);
                } else {
                    lower[j] = lower[j].max(b / a);
                }
            } else {
                row(c.iter().map(|&j| y0 + j).zip(v.iter().copied()).collect(), RowSense::Le, b, &mut trip);
            }
        }
        let full = (mode == MasterMode::Full).then_some(()).and(last);
        let delta = full.map(|_| {
            let d0 = lower.len();
            lower.extend(std::iter::repeat_n(-inf, 4 * nc));
            upper.extend(std::iter::repeat_n(inf, 4 * nc));
            cost.extend(std::iter::repeat_n(0.0, 4 * nc));
            d0
        });
        layout.delta.push(delta);
        for c in 0..nc {
            for yh in &tangents[c] {
                let hy: Vec<f64> = (0..4).map(|k| m.h_diag[k] * yh[k]).collect();
                let yhy: f64 = (0..4).map(|k| hy[k] * yh[k]).sum();
                // 2 ŷ^T H D <= ŷ^T H ŷ with D = -U y_s.
                let mut coefs = Vec::new();
                for k in 0..4 {
                    coefs.extend(m.u.row_iter(4 * c + k).map(|(j, a)| (y0 + j, -2.0 * hy[k] * a)));
                }
                row(coefs, RowSense::Le, yhy, &mut trip);
            }
            if let (Some(d0), Some(yc)) = (delta, last) {
                let yp = &yc[4 * c..4 * c + 4];
                if let Some((yh, _)) = taylor_point(yp, m.d4_bounds[c].0) {
                    let hy: Vec<f64> = (0..4).map(|k| m.h_diag[k] * yh[k]).collect();
                    let yhy: f64 = (0..4).map(|k| hy[k] * yh[k]).sum();
                    for k in 0..4 {
                        let mut coefs: Vec<(usize, f64)> = m.u.row_iter(4 * c + k).map(|(j, a)| (y0 + j, a)).collect();
                        coefs.push((d0 + 4 * c + k, 1.0));
                        row(coefs, RowSense::Eq, -yp[k], &mut trip);
                    }
                    let coefs = (0..4).map(|k| (d0 + 4 * c + k, 2.0 * hy[k])).collect();
                    let shift: f64 = (0..4).map(|k| 2.0 * hy[k] * yp[k]).sum();
                    row(coefs, RowSense::Le, yhy - shift, &mut trip);
                }
            }
        }
        let mut c: Vec<(usize, f64)> = m.f_s.iter().enumerate().filter(|e| *e.1 != 0.0).map(|(j, &a)| (y0 + j, a)).collect();
        c.push((chi, -1.0));
        row(c, RowSense::Le, -m.f_c, &mut trip);
    }
    let nvar = lower.len();
    let lp = LpProblem { c: cost, a: CsrMatrix::from_triplets(rhs.len(), nvar, &trip), senses, b: rhs, lower, upper };
    let mut integer = vec![false; nvar];
    integer[..nm].iter_mut().for_each(|v| *v = true);
    (MilpProblem { lp, integer }, layout)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn taylor_point_rules() {
        // Interior snapshot with D4 + |d| <= 2 min D4 is used as is.
        assert_eq!(taylor_point(&[0.0, 0.0, 0.0, 2.0], 1.805), Some(([0.0, 0.0, 0.0, 2.0], true)));
        // On the boundary: unchanged.
        let (p, _) = taylor_point(&[0.6, 0.8, 0.0, 1.0], 1.805).unwrap();
        assert!((p[3] - 1.0).abs() < 1e-15 && (p[0] - 0.6).abs() < 1e-15);
        // Outside: nearest boundary point.
        let (p, printed) = taylor_point(&[3.0, 4.0, 0.0, 1.0], 1.805).unwrap();
        assert!(!printed);
        assert!((p[3] - 3.0).abs() < 1e-12 && (p[0] - 1.8).abs() < 1e-12 && (p[1] - 2.4).abs() < 1e-12);
    }

    #[test]
    fn interior_row_reads_delta4_at_least_minus_one() {
        // y^p = (0,0,0,2): 2 (H y)^T Δ <= -y^T H y  ->  -4 Δ4 <= 4.
        let (yh, printed) = taylor_point(&[0.0, 0.0, 0.0, 2.0], 1.9).unwrap();
        assert!(printed);
        let hy: Vec<f64> = (0..4).map(|k| crate::formulation::H_DIAG[k] * yh[k]).collect();
        let yhy: f64 = hy.iter().zip(&yh).map(|(a, b)| a * b).sum();
        assert_eq!(2.0 * hy[3], -4.0);
        assert_eq!(-yhy, 4.0);
    }
}
