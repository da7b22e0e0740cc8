//! Turns `a·y <= rhs` / `a·y = rhs` rows into an interior-point problem.
//!
//! Opposite-sign pairs become one range row (an equality when the range is
//! empty), single-variable rows become bounds. Each input row remembers where
//! it went so its multiplier can be recovered after the solve.

use std::collections::HashMap;

use crate::ipm::{NlpSolution, QcqpBuilder, QcqpRow};

#[derive(Debug, Clone, PartialEq)]
pub struct SparseRow {
    pub coefs: Vec<(usize, f64)>,
    pub rhs: f64,
    pub eq: bool,
}

/// Where an input row ended up.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DualSlot {
    /// Row of the problem; `sign` is +1 when the input row is the upper side.
    Row { row: usize, sign: f64 },
    /// Variable bound from `a x <= rhs`; `scale = 1/|a|`.
    Upper { var: usize, scale: f64 },
    Lower { var: usize, scale: f64 },
    /// Fixed variable from an equality `a x = rhs`; `scale = 1/a`.
    Fixed { var: usize, scale: f64 },
    /// Constant row or a bound dominated by a tighter one.
    Inactive,
}

#[derive(Debug, Clone)]
pub struct Converted {
    pub builder: QcqpBuilder<f64>,
    pub slots: Vec<DualSlot>,
}

fn key(coefs: &[(usize, f64)]) -> (Vec<(usize, u64)>, f64) {
    let s = if coefs[0].1 > 0.0 { 1.0 } else { -1.0 };
    (coefs.iter().map(|&(j, a)| (j, (a * s).to_bits())).collect(), s)
}

/// `lower`/`upper` are the variable bounds before any row is folded in.
pub fn rows_to_qcqp(lower: &[f64], upper: &[f64], start: &[f64], rows: &[SparseRow]) -> Converted {
    let n = lower.len();
    let mut lo = lower.to_vec();
    let mut hi = upper.to_vec();
    // Per variable: the row currently defining each bound.
    let mut lo_src: Vec<Option<usize>> = vec![None; n];
    let mut hi_src: Vec<Option<usize>> = vec![None; n];
    let mut slots = vec![DualSlot::Inactive; rows.len()];
    let mut multi = Vec::new();
    for (k, r) in rows.iter().enumerate() {
        match r.coefs.len() {
            0 => {}
            1 => {
                let (j, a) = r.coefs[0];
                let v = r.rhs / a;
                if r.eq {
                    lo[j] = v;
                    hi[j] = v;
                    lo_src[j] = Some(k);
                    hi_src[j] = Some(k);
                } else if a > 0.0 {
                    if v < hi[j] {
                        hi[j] = v;
                        hi_src[j] = Some(k);
                    }
                } else if v > lo[j] {
                    lo[j] = v;
                    lo_src[j] = Some(k);
                }
            }
            _ => multi.push(k),
        }
    }
    let mut b = QcqpBuilder::new();
    for j in 0..n {
        let (l, u) = if hi[j] - lo[j] <= 1e-12 * (1.0 + hi[j].abs()) && hi[j] >= lo[j] - 1e-9 { (hi[j], hi[j]) } else { (lo[j], hi[j]) };
        b.add_var(l, u, start[j]);
        for (src, upper) in [(hi_src[j], true), (lo_src[j], false)] {
            let Some(k) = src else { continue };
            let a = rows[k].coefs[0].1;
            slots[k] = if rows[k].eq {
                DualSlot::Fixed { var: j, scale: 1.0 / a }
            } else if upper {
                DualSlot::Upper { var: j, scale: 1.0 / a.abs() }
            } else {
                DualSlot::Lower { var: j, scale: 1.0 / a.abs() }
            };
        }
    }
    // Pair opposite rows with matching coefficients.
    let mut open: HashMap<(Vec<(usize, u64)>, bool), Vec<usize>> = HashMap::new();
    let mut partner = vec![None; rows.len()];
    for &k in &multi {
        if rows[k].eq {
            continue;
        }
        let (kk, s) = key(&rows[k].coefs);
        let want = (kk.clone(), s < 0.0);
        if let Some(list) = open.get_mut(&want) {
            if let Some(p) = list.pop() {
                partner[k] = Some(p);
                partner[p] = Some(k);
                continue;
            }
        }
        open.entry((kk, s > 0.0)).or_default().push(k);
    }
    for &k in &multi {
        let r = &rows[k];
        if r.eq {
            let row = b.add_row(QcqpRow { linear: r.coefs.clone(), quad: vec![], lower: r.rhs, upper: r.rhs });
            slots[k] = DualSlot::Row { row, sign: 1.0 };
            continue;
        }
        match partner[k] {
            Some(p) if p < k => continue,
            Some(p) => {
                // r: a·y <= r.rhs; partner: -a·y <= rows[p].rhs.
                let u = r.rhs;
                let mut l = -rows[p].rhs;
                if (u - l).abs() <= 1e-12 * (1.0 + u.abs()) {
                    l = u;
                }
                let row = b.add_row(QcqpRow { linear: r.coefs.clone(), quad: vec![], lower: l, upper: u });
                slots[k] = DualSlot::Row { row, sign: 1.0 };
                slots[p] = DualSlot::Row { row, sign: -1.0 };
            }
            None => {
                let row = b.add_row(QcqpRow { linear: r.coefs.clone(), quad: vec![], lower: f64::NEG_INFINITY, upper: r.rhs });
                slots[k] = DualSlot::Row { row, sign: 1.0 };
            }
        }
    }
    Converted { builder: b, slots }
}

impl Converted {
    /// Multipliers of the input rows: `>= 0` for inequalities, free for equalities.
    pub fn row_duals(&self, rows: &[SparseRow], sol: &NlpSolution<f64>) -> Vec<f64> {
        self.slots
            .iter()
            .zip(rows)
            .map(|(s, r)| match *s {
                DualSlot::Row { row, sign } => {
                    let l = sol.lambda[row] * sign;
                    if r.eq {
                        l
                    } else {
                        l.max(0.0)
                    }
                }
                DualSlot::Upper { var, scale } => sol.z_upper[var] * scale,
                DualSlot::Lower { var, scale } => sol.z_lower[var] * scale,
                DualSlot::Fixed { var, scale } => (sol.z_upper[var] - sol.z_lower[var]) * scale,
                DualSlot::Inactive => 0.0,
            })
            .collect()
    }
}
