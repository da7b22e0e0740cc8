//! Best-bound branch-and-bound over the dual simplex.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use super::lp::{lp_solve_from, Basis, LpOptions, LpProblem, LpStatus};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct MilpProblem<T> {
    pub lp: LpProblem<T>,
    pub integer: Vec<bool>,
}

#[derive(Debug, Clone)]
pub struct BbOptions<T> {
    pub abs_gap: T,
    pub int_tol: T,
    pub node_limit: usize,
    pub lp: LpOptions<T>,
}

impl<T: Scalar> Default for BbOptions<T> {
    fn default() -> Self {
        Self { abs_gap: T::of(1e-9), int_tol: T::of(1e-6), node_limit: 200_000, lp: LpOptions::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MilpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Node limit hit; `x` is the incumbent if any and `bound` a valid lower bound.
    GapLimit,
    NumericalFailure,
}

#[derive(Debug, Clone)]
pub struct MilpSolution<T> {
    pub status: MilpStatus,
    pub x: Vec<T>,
    pub objective: T,
    pub bound: T,
    pub nodes: usize,
}

impl<T: Scalar> MilpSolution<T> {
    pub fn gap(&self) -> T {
        self.objective - self.bound
    }
}

struct Node<T> {
    bound: T,
    seq: usize,
    lower: Vec<T>,
    upper: Vec<T>,
    basis: Option<Basis>,
}

impl<T: Scalar> PartialEq for Node<T> {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl<T: Scalar> Eq for Node<T> {}
impl<T: Scalar> PartialOrd for Node<T> {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl<T: Scalar> Ord for Node<T> {
    // BinaryHeap pops the max; invert so the lowest bound, then the oldest node, comes first.
    fn cmp(&self, o: &Self) -> Ordering {
        o.bound.partial_cmp(&self.bound).unwrap_or(Ordering::Equal).then(o.seq.cmp(&self.seq))
    }
}

pub fn bb_solve<T: Scalar>(p: &MilpProblem<T>, opts: &BbOptions<T>) -> MilpSolution<T> {
    bb_solve_from(p, opts, None)
}

/// `start` proposes values for the integer columns (other entries are
/// ignored); if the LP with those fixed is feasible it is the first incumbent.
/// Without an incumbent the search dives depth first, up branch first.
pub fn bb_solve_from<T: Scalar>(p: &MilpProblem<T>, opts: &BbOptions<T>, start: Option<&[T]>) -> MilpSolution<T> {
    let n = p.lp.num_vars();
    let mut lower = p.lp.lower.clone();
    let mut upper = p.lp.upper.clone();
    for j in 0..n {
        if p.integer[j] {
            lower[j] = lower[j].ceil();
            upper[j] = upper[j].floor();
        }
    }
    let mut best_x: Option<Vec<T>> = None;
    let mut best = T::infinity();
    let mut nodes = 0usize;
    if let Some(x0) = start {
        let (mut lo, mut up) = (lower.clone(), upper.clone());
        for j in 0..n {
            if p.integer[j] {
                let v = x0[j].round().max(lower[j]).min(upper[j]);
                lo[j] = v;
                up[j] = v;
            }
        }
        nodes += 1;
        let sol = lp_solve_from(&p.lp, &lo, &up, None, &opts.lp);
        if sol.status == LpStatus::Optimal {
            best = sol.objective;
            best_x = Some(sol.x);
        }
    }
    let mut heap = BinaryHeap::new();
    let mut seq = 0usize;
    let mut next = Some(Node { bound: T::neg_infinity(), seq, lower, upper, basis: None });
    let mut failed = false;
    while let Some(node) = next.take().or_else(|| heap.pop()) {
        if node.bound >= best - opts.abs_gap {
            // Every remaining node is at least as bad.
            heap.clear();
            break;
        }
        if nodes >= opts.node_limit {
            heap.push(node);
            break;
        }
        nodes += 1;
        let sol = lp_solve_from(&p.lp, &node.lower, &node.upper, node.basis.as_ref(), &opts.lp);
        match sol.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => {
                return MilpSolution { status: MilpStatus::Unbounded, x: sol.x, objective: T::neg_infinity(), bound: T::neg_infinity(), nodes };
            }
            _ => {
                failed = true;
                continue;
            }
        }
        let obj = sol.objective.max(node.bound);
        if obj >= best - opts.abs_gap {
            continue;
        }
        let mut branch = None;
        let mut frac_best = opts.int_tol;
        for j in 0..n {
            if !p.integer[j] {
                continue;
            }
            let v = sol.x[j];
            let f = (v - v.floor()).min(v.ceil() - v);
            if f > frac_best {
                frac_best = f;
                branch = Some(j);
            }
        }
        match branch {
            None => {
                let mut x = sol.x.clone();
                for j in 0..n {
                    if p.integer[j] {
                        x[j] = x[j].round();
                    }
                }
                best = sol.objective;
                best_x = Some(x);
                log::trace!("bb: incumbent {:?} at node {}", best.as_f64(), nodes);
            }
            Some(j) => {
                let v = sol.x[j];
                let mut up_lo = node.lower.clone();
                up_lo[j] = v.ceil();
                let mut dn_up = node.upper.clone();
                dn_up[j] = v.floor();
                seq += 1;
                heap.push(Node { bound: obj, seq, lower: node.lower.clone(), upper: dn_up, basis: sol.basis.clone() });
                seq += 1;
                let up = Node { bound: obj, seq, lower: up_lo, upper: node.upper, basis: sol.basis };
                if best_x.is_none() {
                    next = Some(up);
                } else {
                    heap.push(up);
                }
            }
        }
    }
    let open_bound = heap.iter().map(|nd| nd.bound).fold(T::infinity(), |a, b| a.min(b));
    let bound = open_bound.min(best);
    let status = if !heap.is_empty() {
        MilpStatus::GapLimit
    } else if best_x.is_some() {
        MilpStatus::Optimal
    } else if failed {
        MilpStatus::NumericalFailure
    } else {
        MilpStatus::Infeasible
    };
    MilpSolution { status, x: best_x.unwrap_or_else(|| vec![T::nan(); n]), objective: best, bound, nodes }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CsrMatrix;
    use crate::milp::RowSense;

    #[test]
    fn small_knapsack() {
        // max 5a + 4b + 3c s.t. 2a + 3b + c <= 5, 4a + b + 2c <= 11, 3a + 4b + 2c <= 8
        let lp = LpProblem {
            c: vec![-5.0, -4.0, -3.0],
            a: CsrMatrix::from_dense(3, 3, &[2.0, 3.0, 1.0, 4.0, 1.0, 2.0, 3.0, 4.0, 2.0]),
            senses: vec![RowSense::Le; 3],
            b: vec![5.0, 11.0, 8.0],
            lower: vec![0.0; 3],
            upper: vec![1.0; 3],
        };
        let s = bb_solve(&MilpProblem { lp, integer: vec![true; 3] }, &BbOptions::default());
        assert_eq!(s.status, MilpStatus::Optimal);
        assert!((s.objective + 9.0f64).abs() < 1e-9);
        assert_eq!(s.x, vec![1.0, 1.0, 0.0]);
    }

    #[test]
    fn node_limit_reports_gap() {
        let lp = LpProblem {
            c: vec![-1.0; 6],
            a: CsrMatrix::from_dense(1, 6, &[2.0; 6]),
            senses: vec![RowSense::Le],
            b: vec![7.0],
            lower: vec![0.0; 6],
            upper: vec![1.0; 6],
        };
        let opts = BbOptions { node_limit: 1, ..Default::default() };
        let s = bb_solve(&MilpProblem { lp, integer: vec![true; 6] }, &opts);
        assert_eq!(s.status, MilpStatus::GapLimit);
        assert!(s.bound <= -3.0);
    }
}
