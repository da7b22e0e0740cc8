//! Linear programs and a bounded dual simplex method.
//!
//! Rows get slack columns, `a_i x + s_i = b_i`, so a basis always has `m`
//! columns. The basis is kept as a sparse LU factorization plus product-form
//! updates and refactored periodically. Free nonbasic columns with nonzero
//! reduced cost are parked at artificial bounds, which grow on contact.

use serde::Serialize;

use crate::linalg::{CsrMatrix, SparseLu};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RowSense {
    Le,
    Eq,
    Ge,
}

/// `min c^T x  s.t.  A x (<=|=|>=) b,  lower <= x <= upper`.
#[derive(Debug, Clone)]
pub struct LpProblem<T> {
    pub c: Vec<T>,
    pub a: CsrMatrix<T>,
    pub senses: Vec<RowSense>,
    pub b: Vec<T>,
    pub lower: Vec<T>,
    pub upper: Vec<T>,
}

impl<T: Scalar> LpProblem<T> {
    pub fn num_vars(&self) -> usize {
        self.c.len()
    }

    pub fn num_rows(&self) -> usize {
        self.b.len()
    }

    /// Largest violation of rows and bounds.
    pub fn max_violation(&self, x: &[T]) -> T {
        let ax = self.a.mul_vec(x);
        let mut v = T::zero();
        for i in 0..self.num_rows() {
            let r = ax[i] - self.b[i];
            v = v.max(match self.senses[i] {
                RowSense::Le => r,
                RowSense::Ge => -r,
                RowSense::Eq => r.abs(),
            });
        }
        for j in 0..self.num_vars() {
            v = v.max(self.lower[j] - x[j]).max(x[j] - self.upper[j]);
        }
        v
    }

    pub fn objective(&self, x: &[T]) -> T {
        self.c.iter().zip(x).map(|(c, x)| *c * *x).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
    NumericalFailure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarStatus {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic free column held at zero.
    Zero,
}

/// Basis snapshot usable as a warm start; columns `n..n+m` are slacks.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    pub head: Vec<usize>,
    pub status: Vec<VarStatus>,
}

#[derive(Debug, Clone)]
pub struct LpSolution<T> {
    pub status: LpStatus,
    pub x: Vec<T>,
    pub objective: T,
    /// Row duals: sensitivity of the optimal objective to `b`.
    pub duals: Vec<T>,
    pub reduced_costs: Vec<T>,
    pub iterations: usize,
    pub basis: Option<Basis>,
}

#[derive(Debug, Clone)]
pub struct LpOptions<T> {
    pub primal_tol: T,
    pub dual_tol: T,
    pub pivot_tol: T,
    pub max_iter: usize,
    pub refactor_every: usize,
    /// Consecutive degenerate pivots before costs are perturbed.
    pub stall_limit: usize,
}

impl<T: Scalar> Default for LpOptions<T> {
    fn default() -> Self {
        let tight = T::epsilon().sqrt() * T::of(1e-1);
        let tol = tight.max(T::of(1e-9));
        Self {
            primal_tol: tol,
            dual_tol: tol,
            pivot_tol: tol.max(T::of(1e-9)),
            max_iter: 50_000,
            refactor_every: 64,
            stall_limit: 60,
        }
    }
}

/// Solves `lp` from the slack basis.
pub fn lp_solve<T: Scalar>(lp: &LpProblem<T>, opts: &LpOptions<T>) -> LpSolution<T> {
    lp_solve_from(lp, &lp.lower, &lp.upper, None, opts)
}

/// Solves `lp` with overridden variable bounds, optionally warm-started
/// from a basis of the same problem shape.
pub fn lp_solve_from<T: Scalar>(
    lp: &LpProblem<T>,
    lower: &[T],
    upper: &[T],
    basis: Option<&Basis>,
    opts: &LpOptions<T>,
) -> LpSolution<T> {
    let mut s = Simplex::new(lp, lower, upper, basis, opts);
    let status = s.run();
    s.finish(status)
}

struct Eta<T> {
    r: usize,
    pivot: T,
    col: Vec<(usize, T)>,
}

struct Simplex<'a, T> {
    lp: &'a LpProblem<T>,
    opts: &'a LpOptions<T>,
    n: usize,
    m: usize,
    cols: Vec<Vec<(usize, T)>>,
    cost: Vec<T>,
    lo: Vec<T>,
    up: Vec<T>,
    orig_lo: Vec<T>,
    orig_up: Vec<T>,
    big: T,
    head: Vec<usize>,
    status: Vec<VarStatus>,
    x: Vec<T>,
    d: Vec<T>,
    y: Vec<T>,
    lu: Option<SparseLu<T>>,
    etas: Vec<Eta<T>>,
    iterations: usize,
    perturbed: bool,
    infeasible_bounds: bool,
}

impl<'a, T: Scalar> Simplex<'a, T> {
    fn new(lp: &'a LpProblem<T>, lower: &[T], upper: &[T], basis: Option<&Basis>, opts: &'a LpOptions<T>) -> Self {
        let n = lp.num_vars();
        let m = lp.num_rows();
        let mut cols: Vec<Vec<(usize, T)>> = vec![Vec::new(); n + m];
        for (i, j, v) in lp.a.triplets() {
            cols[j].push((i, v));
        }
        for i in 0..m {
            cols[n + i].push((i, T::one()));
        }
        let mut lo: Vec<T> = lower.to_vec();
        let mut up: Vec<T> = upper.to_vec();
        for i in 0..m {
            let (l, u) = match lp.senses[i] {
                RowSense::Le => (T::zero(), T::infinity()),
                RowSense::Ge => (T::neg_infinity(), T::zero()),
                RowSense::Eq => (T::zero(), T::zero()),
            };
            lo.push(l);
            up.push(u);
        }
        let infeasible_bounds = lo.iter().zip(&up).any(|(l, u)| *l > *u);
        let mut cost = lp.c.clone();
        cost.resize(n + m, T::zero());
        let (head, status) = match basis {
            Some(b) if b.head.len() == m && b.status.len() == n + m => (b.head.clone(), b.status.clone()),
            _ => {
                let mut st = vec![VarStatus::AtLower; n + m];
                for i in 0..m {
                    st[n + i] = VarStatus::Basic;
                }
                ((n..n + m).collect(), st)
            }
        };
        let scale = lo
            .iter()
            .chain(&up)
            .filter(|v| v.is_finite())
            .fold(T::one(), |a, v| a.max(v.abs()))
            .max(lp.b.iter().fold(T::one(), |a, v| a.max(v.abs())));
        Self {
            lp,
            opts,
            n,
            m,
            cols,
            cost,
            orig_lo: lo.clone(),
            orig_up: up.clone(),
            lo,
            up,
            big: T::of(1e6) * scale,
            head,
            status,
            x: vec![T::zero(); n + m],
            d: vec![T::zero(); n + m],
            y: vec![T::zero(); m],
            lu: None,
            etas: Vec::new(),
            iterations: 0,
            perturbed: false,
            infeasible_bounds,
        }
    }

    fn artificial(&self, j: usize) -> bool {
        (self.status[j] == VarStatus::AtLower && !self.orig_lo[j].is_finite())
            || (self.status[j] == VarStatus::AtUpper && !self.orig_up[j].is_finite())
    }

    /// Factors the current basis, repairing singular bases with slacks.
    fn refactor(&mut self) -> bool {
        self.etas.clear();
        for _ in 0..3 {
            let bcols: Vec<Vec<(usize, T)>> = self.head.iter().map(|&j| self.cols[j].clone()).collect();
            match SparseLu::factor(self.m, &bcols) {
                Ok(lu) => {
                    self.lu = Some(lu);
                    return true;
                }
                Err(sing) => {
                    for (&pos, &row) in sing.positions.iter().zip(&sing.free_rows) {
                        let out = self.head[pos];
                        let slack = self.n + row;
                        self.status[out] = VarStatus::AtLower;
                        self.head[pos] = slack;
                        self.status[slack] = VarStatus::Basic;
                    }
                    // Make sure heads are unique.
                    let mut seen = vec![false; self.n + self.m];
                    for pos in 0..self.m {
                        if seen[self.head[pos]] {
                            return false;
                        }
                        seen[self.head[pos]] = true;
                    }
                }
            }
        }
        false
    }

    fn ftran(&self, b: &[T]) -> Vec<T> {
        let mut x = self.lu.as_ref().unwrap().solve(b);
        for e in &self.etas {
            let xr = x[e.r] / e.pivot;
            if xr != T::zero() {
                for &(i, a) in &e.col {
                    x[i] -= a * xr;
                }
            }
            x[e.r] = xr;
        }
        x
    }

    fn btran(&self, c: &[T]) -> Vec<T> {
        let mut u = c.to_vec();
        for e in self.etas.iter().rev() {
            let mut s = u[e.r];
            for &(i, a) in &e.col {
                s -= a * u[i];
            }
            u[e.r] = s / e.pivot;
        }
        self.lu.as_ref().unwrap().solve_transpose(&u)
    }

    fn col_dot(&self, j: usize, v: &[T]) -> T {
        self.cols[j].iter().map(|&(i, a)| a * v[i]).sum()
    }

    /// Places nonbasic columns on the bound matching their reduced cost.
    fn nonbasic_value(&mut self, j: usize) {
        self.x[j] = match self.status[j] {
            VarStatus::AtLower => self.lo[j],
            VarStatus::AtUpper => self.up[j],
            VarStatus::Zero => T::zero(),
            VarStatus::Basic => self.x[j],
        };
    }

    fn compute_duals(&mut self) {
        let cb: Vec<T> = self.head.iter().map(|&j| self.cost[j]).collect();
        self.y = self.btran(&cb);
        for j in 0..self.n + self.m {
            self.d[j] = if self.status[j] == VarStatus::Basic { T::zero() } else { self.cost[j] - self.col_dot(j, &self.y) };
        }
    }

    fn compute_primals(&mut self) {
        let mut r = self.lp.b.clone();
        for j in 0..self.n + self.m {
            if self.status[j] != VarStatus::Basic {
                self.nonbasic_value(j);
                let xj = self.x[j];
                if xj != T::zero() {
                    for &(i, a) in &self.cols[j] {
                        r[i] -= a * xj;
                    }
                }
            }
        }
        let xb = self.ftran(&r);
        for (pos, &j) in self.head.iter().enumerate() {
            self.x[j] = xb[pos];
        }
    }

    /// Restores dual feasibility of nonbasic columns by choosing bounds.
    fn fix_dual_feasibility(&mut self) {
        let tol = self.opts.dual_tol;
        for j in 0..self.n + self.m {
            if self.status[j] == VarStatus::Basic {
                continue;
            }
            let dj = self.d[j];
            let want = if dj > tol {
                VarStatus::AtLower
            } else if dj < -tol {
                VarStatus::AtUpper
            } else {
                match self.status[j] {
                    VarStatus::AtLower if self.lo[j].is_finite() => VarStatus::AtLower,
                    VarStatus::AtUpper if self.up[j].is_finite() => VarStatus::AtUpper,
                    _ if self.lo[j].is_finite() => VarStatus::AtLower,
                    _ if self.up[j].is_finite() => VarStatus::AtUpper,
                    _ => VarStatus::Zero,
                }
            };
            match want {
                VarStatus::AtLower if !self.lo[j].is_finite() => self.lo[j] = -self.big,
                VarStatus::AtUpper if !self.up[j].is_finite() => self.up[j] = self.big,
                _ => {}
            }
            self.status[j] = want;
        }
    }

    fn run(&mut self) -> LpStatus {
        if self.infeasible_bounds {
            return LpStatus::Infeasible;
        }
        if self.m == 0 {
            // Only bounds: each column independently.
            for j in 0..self.n {
                let c = self.cost[j];
                let v = if c > T::zero() {
                    self.lo[j]
                } else if c < T::zero() {
                    self.up[j]
                } else if self.lo[j].is_finite() {
                    self.lo[j]
                } else if self.up[j].is_finite() {
                    self.up[j]
                } else {
                    T::zero()
                };
                if !v.is_finite() {
                    return LpStatus::Unbounded;
                }
                self.x[j] = v;
                self.d[j] = c;
            }
            return LpStatus::Optimal;
        }
        if !self.refactor() {
            return LpStatus::NumericalFailure;
        }
        self.compute_duals();
        self.fix_dual_feasibility();
        self.compute_primals();
        let mut restarts = 0;
        loop {
            let st = self.dual_phase();
            if st != LpStatus::Optimal {
                return st;
            }
            // Artificial bounds touched: enlarge or report unboundedness.
            let touching: Vec<usize> = (0..self.n + self.m).filter(|&j| self.artificial(j)).collect();
            let mut changed = false;
            if !touching.is_empty() {
                if self.big > T::of(1e12) {
                    return LpStatus::Unbounded;
                }
                self.big *= T::of(1e3);
                for &j in &touching {
                    if self.status[j] == VarStatus::AtLower {
                        self.lo[j] = -self.big;
                    } else {
                        self.up[j] = self.big;
                    }
                }
                changed = true;
            }
            if self.perturbed {
                self.cost = self.lp.c.clone();
                self.cost.resize(self.n + self.m, T::zero());
                self.perturbed = false;
                changed = true;
            }
            if !changed {
                return LpStatus::Optimal;
            }
            restarts += 1;
            if restarts > 20 {
                return LpStatus::NumericalFailure;
            }
            if !self.refactor() {
                return LpStatus::NumericalFailure;
            }
            self.compute_duals();
            self.fix_dual_feasibility();
            self.compute_primals();
        }
    }

    fn dual_phase(&mut self) -> LpStatus {
        let ptol = self.opts.primal_tol;
        let mut stall = 0usize;
        loop {
            if self.iterations >= self.opts.max_iter {
                return LpStatus::IterationLimit;
            }
            // Leaving row: largest bound violation relative to the bound scale.
            let mut r = usize::MAX;
            let mut best = T::zero();
            let mut target = T::zero();
            for (pos, &j) in self.head.iter().enumerate() {
                let xj = self.x[j];
                let (viol, bnd) = if xj < self.lo[j] - ptol * self.lo[j].abs().max(T::one()) {
                    (self.lo[j] - xj, self.lo[j])
                } else if xj > self.up[j] + ptol * self.up[j].abs().max(T::one()) {
                    (xj - self.up[j], self.up[j])
                } else {
                    continue;
                };
                if viol > best {
                    best = viol;
                    r = pos;
                    target = bnd;
                }
            }
            if r == usize::MAX {
                return LpStatus::Optimal;
            }
            let leaving = self.head[r];
            let to_upper = self.x[leaving] > self.up[leaving];
            let mut er = vec![T::zero(); self.m];
            er[r] = T::one();
            let rho = self.btran(&er);
            // Harris two-pass ratio test.
            let mut cand: Vec<(usize, T)> = Vec::new();
            let mut row: Vec<(usize, T)> = Vec::new();
            let mut theta_max = T::infinity();
            let dtol = self.opts.dual_tol;
            for j in 0..self.n + self.m {
                if self.status[j] == VarStatus::Basic {
                    continue;
                }
                let a = self.col_dot(j, &rho);
                if a != T::zero() {
                    row.push((j, a));
                }
                if a.abs() <= self.opts.pivot_tol {
                    continue;
                }
                let sa = if to_upper { a } else { -a };
                let eligible = match self.status[j] {
                    VarStatus::AtLower => sa > T::zero() && self.lo[j] < self.up[j],
                    VarStatus::AtUpper => sa < T::zero() && self.lo[j] < self.up[j],
                    VarStatus::Zero => true,
                    VarStatus::Basic => false,
                };
                if !eligible {
                    continue;
                }
                let slack = if self.status[j] == VarStatus::Zero { T::zero() } else { dtol };
                theta_max = theta_max.min((self.d[j].abs() + slack) / a.abs());
                cand.push((j, a));
            }
            if cand.is_empty() {
                return LpStatus::Infeasible;
            }
            let mut q = usize::MAX;
            let mut alpha_rq = T::zero();
            for &(j, a) in &cand {
                if self.d[j].abs() / a.abs() <= theta_max && a.abs() > alpha_rq.abs() {
                    q = j;
                    alpha_rq = a;
                }
            }
            let alpha_q = self.ftran(&self.column_dense(q));
            let piv = alpha_q[r];
            if piv.abs() <= self.opts.pivot_tol || (piv - alpha_rq).abs() > T::of(1e-6) * piv.abs().max(T::one()) {
                // Inaccurate factorization: refactor and retry.
                if !self.refactor() {
                    return LpStatus::NumericalFailure;
                }
                self.compute_duals();
                self.fix_dual_feasibility();
                self.compute_primals();
                self.iterations += 1;
                continue;
            }
            let theta_d = self.d[q] / piv;
            let theta_p = (self.x[leaving] - target) / piv;
            for (pos, &j) in self.head.iter().enumerate() {
                self.x[j] -= theta_p * alpha_q[pos];
            }
            self.x[q] += theta_p;
            self.x[leaving] = target;
            for &(j, a) in &row {
                self.d[j] -= theta_d * a;
            }
            self.d[leaving] = -theta_d;
            self.d[q] = T::zero();
            self.status[leaving] = if to_upper { VarStatus::AtUpper } else { VarStatus::AtLower };
            self.status[q] = VarStatus::Basic;
            self.head[r] = q;
            let col: Vec<(usize, T)> = alpha_q
                .iter()
                .enumerate()
                .filter(|&(i, a)| i != r && a.abs() > T::of(1e-14))
                .map(|(i, a)| (i, *a))
                .collect();
            self.etas.push(Eta { r, pivot: piv, col });
            self.iterations += 1;
            if theta_d.abs() <= T::of(1e-12) {
                stall += 1;
            } else {
                stall = 0;
            }
            if stall > self.opts.stall_limit {
                self.perturb();
                stall = 0;
            }
            if self.etas.len() >= self.opts.refactor_every {
                if !self.refactor() {
                    return LpStatus::NumericalFailure;
                }
                self.compute_duals();
                self.fix_dual_feasibility();
                self.compute_primals();
            }
        }
    }

    fn column_dense(&self, j: usize) -> Vec<T> {
        let mut v = vec![T::zero(); self.m];
        for &(i, a) in &self.cols[j] {
            v[i] += a;
        }
        v
    }

    /// Shifts costs of nonbasic columns away from zero reduced cost while
    /// keeping the basis dual feasible.
    fn perturb(&mut self) {
        self.perturbed = true;
        let mut h: u64 = 0x9e37_79b9_7f4a_7c15;
        for j in 0..self.n + self.m {
            h ^= h << 13;
            h ^= h >> 7;
            h ^= h << 17;
            let u = T::of(0.5 + (h % 1000) as f64 / 2000.0);
            let eps = T::of(1e-7) * u * (T::one() + self.cost[j].abs());
            match self.status[j] {
                VarStatus::AtLower => {
                    self.cost[j] += eps;
                    self.d[j] += eps;
                }
                VarStatus::AtUpper => {
                    self.cost[j] -= eps;
                    self.d[j] -= eps;
                }
                _ => {}
            }
        }
        log::debug!("simplex: degenerate stall, costs perturbed");
    }

    fn finish(mut self, status: LpStatus) -> LpSolution<T> {
        let n = self.n;
        if status == LpStatus::Optimal && self.lu.is_some() {
            if self.refactor() {
                self.compute_primals();
            }
            self.compute_duals();
        }
        let x = self.x[..n].to_vec();
        let objective = if status == LpStatus::Optimal {
            self.lp.objective(&x)
        } else if status == LpStatus::Unbounded {
            T::neg_infinity()
        } else {
            T::infinity()
        };
        let basis = (status == LpStatus::Optimal && self.m > 0).then(|| Basis { head: self.head.clone(), status: self.status.clone() });
        LpSolution {
            status,
            x,
            objective,
            duals: self.y.clone(),
            reduced_costs: self.d[..n].to_vec(),
            iterations: self.iterations,
            basis,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(c: &[f64], a: &[f64], senses: &[RowSense], b: &[f64], lo: &[f64], up: &[f64]) -> LpProblem<f64> {
        LpProblem {
            c: c.to_vec(),
            a: CsrMatrix::from_dense(b.len(), c.len(), a),
            senses: senses.to_vec(),
            b: b.to_vec(),
            lower: lo.to_vec(),
            upper: up.to_vec(),
        }
    }

    const INF: f64 = f64::INFINITY;

    #[test]
    fn textbook_lp_with_duals() {
        // max x + y s.t. x + 2y <= 4, 3x + y <= 6 -> (1.6, 1.2), duals -0.4, -0.2
        let p = lp(&[-1.0, -1.0], &[1.0, 2.0, 3.0, 1.0], &[RowSense::Le, RowSense::Le], &[4.0, 6.0], &[0.0, 0.0], &[INF, INF]);
        let s = lp_solve(&p, &LpOptions::default());
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] - 1.6).abs() < 1e-12 && (s.x[1] - 1.2).abs() < 1e-12);
        assert!((s.duals[0] + 0.4).abs() < 1e-12 && (s.duals[1] + 0.2).abs() < 1e-12);
        assert!((s.objective + 2.8).abs() < 1e-12);
    }

    #[test]
    fn equality_and_free_variables() {
        // min x - y s.t. x + y = 2, x - y >= -4, y free, x >= 0 -> x = 0, y = 2
        let p = lp(&[1.0, -1.0], &[1.0, 1.0, 1.0, -1.0], &[RowSense::Eq, RowSense::Ge], &[2.0, -4.0], &[0.0, -INF], &[INF, INF]);
        let s = lp_solve(&p, &LpOptions::default());
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective + 2.0).abs() < 1e-10, "{}", s.objective);
        assert!(p.max_violation(&s.x) < 1e-10);
    }

    #[test]
    fn infeasible_and_unbounded_detected() {
        let p = lp(&[1.0], &[1.0, 1.0], &[RowSense::Le, RowSense::Ge], &[1.0, 2.0], &[0.0], &[INF]);
        assert_eq!(lp_solve(&p, &LpOptions::default()).status, LpStatus::Infeasible);
        let p = lp(&[-1.0, 0.0], &[1.0, -1.0], &[RowSense::Le], &[1.0], &[0.0, 0.0], &[INF, INF]);
        assert_eq!(lp_solve(&p, &LpOptions::default()).status, LpStatus::Unbounded);
    }

    #[test]
    fn warm_start_after_bound_change() {
        let p = lp(&[-1.0, -1.0], &[1.0, 2.0, 3.0, 1.0], &[RowSense::Le, RowSense::Le], &[4.0, 6.0], &[0.0, 0.0], &[INF, INF]);
        let s = lp_solve(&p, &LpOptions::default());
        let up = [1.0, INF];
        let w = lp_solve_from(&p, &p.lower, &up, s.basis.as_ref(), &LpOptions::default());
        assert_eq!(w.status, LpStatus::Optimal);
        assert!((w.x[0] - 1.0).abs() < 1e-12 && (w.x[1] - 1.5).abs() < 1e-12);
    }
}
