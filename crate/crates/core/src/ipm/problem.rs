//! Problem interface for the interior-point solver and a concrete
//! quadratically-constrained quadratic program with exact derivatives.

use crate::scalar::Scalar;

/// Smooth nonlinear program
///
/// ```text
/// min f(x)  s.t.  cl <= c(x) <= cu,  xl <= x <= xu
/// ```
///
/// Rows with `cl == cu` are equalities. Infinite bounds mean "absent".
pub trait NlpProblem<T: Scalar> {
    fn num_vars(&self) -> usize;
    fn num_cons(&self) -> usize;
    fn var_bounds(&self) -> (Vec<T>, Vec<T>);
    fn con_bounds(&self) -> (Vec<T>, Vec<T>);
    fn initial_point(&self) -> Vec<T>;
    fn objective(&self, x: &[T]) -> T;
    fn gradient(&self, x: &[T], grad: &mut [T]);
    fn constraints(&self, x: &[T], c: &mut [T]);
    /// `(row, col)` pairs of the constraint Jacobian.
    fn jacobian_structure(&self) -> Vec<(usize, usize)>;
    fn jacobian_values(&self, x: &[T], vals: &mut [T]);
    /// Lower-triangle `(row, col)` pairs (`row >= col`) of the Lagrangian Hessian.
    fn hessian_structure(&self) -> Vec<(usize, usize)>;
    /// Values of `obj_factor * H_f + sum_i lambda_i H_ci` at the structure positions.
    fn hessian_values(&self, x: &[T], obj_factor: T, lambda: &[T], vals: &mut [T]);
}

/// One constraint row `lower <= sum a_j x_j + sum q_ij x_i x_j <= upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct QcqpRow<T> {
    pub linear: Vec<(usize, T)>,
    pub quad: Vec<(usize, usize, T)>,
    pub lower: T,
    pub upper: T,
}

impl<T: Scalar> QcqpRow<T> {
    pub fn eval(&self, x: &[T]) -> T {
        let l: T = self.linear.iter().map(|&(j, a)| a * x[j]).sum();
        let q: T = self.quad.iter().map(|&(i, j, a)| a * x[i] * x[j]).sum();
        l + q
    }
}

/// QCQP with linear-plus-quadratic objective and rows; all model families in
/// this crate (relaxed and nonconvex AC models, dual slave, LPs) take this form.
#[derive(Debug, Clone)]
pub struct QcqpProblem<T> {
    lower: Vec<T>,
    upper: Vec<T>,
    x0: Vec<T>,
    obj_linear: Vec<(usize, T)>,
    obj_quad: Vec<(usize, usize, T)>,
    obj_const: T,
    rows: Vec<QcqpRow<T>>,
    jac_struct: Vec<(usize, usize)>,
    // (slot, coefficient) constant Jacobian contributions.
    jac_const: Vec<(usize, T)>,
    // (slot, other variable, coefficient): adds coef * x_other.
    jac_quad: Vec<(usize, usize, T)>,
    hess_struct: Vec<(usize, usize)>,
    // (slot, row or usize::MAX for objective, coefficient).
    hess_terms: Vec<(usize, usize, T)>,
}

/// Incremental builder for [`QcqpProblem`].
#[derive(Debug, Clone, Default)]
pub struct QcqpBuilder<T> {
    lower: Vec<T>,
    upper: Vec<T>,
    x0: Vec<T>,
    obj_linear: Vec<(usize, T)>,
    obj_quad: Vec<(usize, usize, T)>,
    obj_const: T,
    rows: Vec<QcqpRow<T>>,
}

impl<T: Scalar> QcqpBuilder<T> {
    pub fn new() -> Self {
        Self {
            lower: Vec::new(),
            upper: Vec::new(),
            x0: Vec::new(),
            obj_linear: Vec::new(),
            obj_quad: Vec::new(),
            obj_const: T::zero(),
            rows: Vec::new(),
        }
    }

    /// Adds a variable and returns its index.
    pub fn add_var(&mut self, lower: T, upper: T, start: T) -> usize {
        self.lower.push(lower);
        self.upper.push(upper);
        self.x0.push(start);
        self.lower.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.lower.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn set_start(&mut self, j: usize, v: T) {
        self.x0[j] = v;
    }

    pub fn set_bounds(&mut self, j: usize, lower: T, upper: T) {
        self.lower[j] = lower;
        self.upper[j] = upper;
    }

    pub fn add_objective_linear(&mut self, j: usize, a: T) {
        self.obj_linear.push((j, a));
    }

    pub fn add_objective_quad(&mut self, i: usize, j: usize, a: T) {
        self.obj_quad.push((i, j, a));
    }

    pub fn add_objective_const(&mut self, a: T) {
        self.obj_const += a;
    }

    /// Adds a row and returns its index.
    pub fn add_row(&mut self, row: QcqpRow<T>) -> usize {
        self.rows.push(row);
        self.rows.len() - 1
    }

    pub fn build(self) -> QcqpProblem<T> {
        QcqpProblem::new(
            self.lower,
            self.upper,
            self.x0,
            self.obj_linear,
            self.obj_quad,
            self.obj_const,
            self.rows,
        )
    }
}

impl<T: Scalar> QcqpProblem<T> {
    pub fn new(
        lower: Vec<T>,
        upper: Vec<T>,
        x0: Vec<T>,
        obj_linear: Vec<(usize, T)>,
        obj_quad: Vec<(usize, usize, T)>,
        obj_const: T,
        rows: Vec<QcqpRow<T>>,
    ) -> Self {
        let n = lower.len();
        assert_eq!(upper.len(), n);
        assert_eq!(x0.len(), n);
        let mut jac_struct = Vec::new();
        let mut jac_const = Vec::new();
        let mut jac_quad = Vec::new();
        let mut slot_of = std::collections::HashMap::new();
        for (r, row) in rows.iter().enumerate() {
            slot_of.clear();
            let mut slot = |j: usize, js: &mut Vec<(usize, usize)>| -> usize {
                *slot_of.entry(j).or_insert_with(|| {
                    js.push((r, j));
                    js.len() - 1
                })
            };
            for &(j, a) in &row.linear {
                assert!(j < n, "row {r} references variable {j} of {n}");
                let s = slot(j, &mut jac_struct);
                jac_const.push((s, a));
            }
            for &(i, j, a) in &row.quad {
                assert!(i < n && j < n, "row {r} references variable outside {n}");
                let si = slot(i, &mut jac_struct);
                let sj = slot(j, &mut jac_struct);
                jac_quad.push((si, j, a));
                jac_quad.push((sj, i, a));
            }
        }
        let mut hess_struct = Vec::new();
        let mut hess_terms = Vec::new();
        let mut hslot = std::collections::HashMap::new();
        let mut push_h = |i: usize, j: usize, owner: usize, a: T| {
            let key = (i.max(j), i.min(j));
            let s = *hslot.entry(key).or_insert_with(|| {
                hess_struct.push(key);
                hess_struct.len() - 1
            });
            let coef = if i == j { a + a } else { a };
            hess_terms.push((s, owner, coef));
        };
        for &(i, j, a) in &obj_quad {
            push_h(i, j, usize::MAX, a);
        }
        for (r, row) in rows.iter().enumerate() {
            for &(i, j, a) in &row.quad {
                push_h(i, j, r, a);
            }
        }
        Self {
            lower,
            upper,
            x0,
            obj_linear,
            obj_quad,
            obj_const,
            rows,
            jac_struct,
            jac_const,
            jac_quad,
            hess_struct,
            hess_terms,
        }
    }

    pub fn rows(&self) -> &[QcqpRow<T>] {
        &self.rows
    }

    pub fn objective_linear(&self) -> &[(usize, T)] {
        &self.obj_linear
    }

    pub fn objective_const(&self) -> T {
        self.obj_const
    }

    /// Copy with a different starting point.
    pub fn with_start(&self, x0: Vec<T>) -> Self {
        assert_eq!(x0.len(), self.x0.len());
        let mut p = self.clone();
        p.x0 = x0;
        p
    }

    /// Largest violation of rows and bounds at `x`.
    pub fn max_violation(&self, x: &[T]) -> T {
        let mut v = T::zero();
        for (j, &xj) in x.iter().enumerate() {
            v = v.max(self.lower[j] - xj).max(xj - self.upper[j]);
        }
        for row in &self.rows {
            let c = row.eval(x);
            v = v.max(row.lower - c).max(c - row.upper);
        }
        v
    }
}

impl<T: Scalar> NlpProblem<T> for QcqpProblem<T> {
    fn num_vars(&self) -> usize {
        self.lower.len()
    }

    fn num_cons(&self) -> usize {
        self.rows.len()
    }

    fn var_bounds(&self) -> (Vec<T>, Vec<T>) {
        (self.lower.clone(), self.upper.clone())
    }

    fn con_bounds(&self) -> (Vec<T>, Vec<T>) {
        (self.rows.iter().map(|r| r.lower).collect(), self.rows.iter().map(|r| r.upper).collect())
    }

    fn initial_point(&self) -> Vec<T> {
        self.x0.clone()
    }

    fn objective(&self, x: &[T]) -> T {
        let l: T = self.obj_linear.iter().map(|&(j, a)| a * x[j]).sum();
        let q: T = self.obj_quad.iter().map(|&(i, j, a)| a * x[i] * x[j]).sum();
        self.obj_const + l + q
    }

    fn gradient(&self, x: &[T], grad: &mut [T]) {
        grad.iter_mut().for_each(|g| *g = T::zero());
        for &(j, a) in &self.obj_linear {
            grad[j] += a;
        }
        for &(i, j, a) in &self.obj_quad {
            grad[i] += a * x[j];
            grad[j] += a * x[i];
        }
    }

    fn constraints(&self, x: &[T], c: &mut [T]) {
        for (ci, row) in c.iter_mut().zip(&self.rows) {
            *ci = row.eval(x);
        }
    }

    fn jacobian_structure(&self) -> Vec<(usize, usize)> {
        self.jac_struct.clone()
    }

    fn jacobian_values(&self, x: &[T], vals: &mut [T]) {
        vals.iter_mut().for_each(|v| *v = T::zero());
        for &(s, a) in &self.jac_const {
            vals[s] += a;
        }
        for &(s, other, a) in &self.jac_quad {
            vals[s] += a * x[other];
        }
    }

    fn hessian_structure(&self) -> Vec<(usize, usize)> {
        self.hess_struct.clone()
    }

    fn hessian_values(&self, _x: &[T], obj_factor: T, lambda: &[T], vals: &mut [T]) {
        vals.iter_mut().for_each(|v| *v = T::zero());
        for &(s, owner, a) in &self.hess_terms {
            let w = if owner == usize::MAX { obj_factor } else { lambda[owner] };
            vals[s] += w * a;
        }
    }
}

/// Worst mismatch between analytic first and second derivatives and central
/// finite differences at `x`, relative to `max(1, |analytic|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeCheck {
    pub gradient: f64,
    pub jacobian: f64,
    pub hessian: f64,
}

/// Compares analytic derivatives with central differences of step `h`.
/// The Hessian is checked against differences of the Lagrangian gradient
/// with the given multipliers.
pub fn check_derivatives<P: NlpProblem<f64>>(p: &P, x: &[f64], lambda: &[f64], h: f64) -> DerivativeCheck {
    let n = p.num_vars();
    let m = p.num_cons();
    let mut g = vec![0.0; n];
    p.gradient(x, &mut g);
    let js = p.jacobian_structure();
    let mut jv = vec![0.0; js.len()];
    p.jacobian_values(x, &mut jv);
    let mut jd = vec![0.0; m * n];
    for (&(r, c), v) in js.iter().zip(&jv) {
        jd[r * n + c] += v;
    }
    let hs = p.hessian_structure();
    let mut hv = vec![0.0; hs.len()];
    p.hessian_values(x, 1.0, lambda, &mut hv);
    let mut hd = vec![0.0; n * n];
    for (&(r, c), v) in hs.iter().zip(&hv) {
        hd[r * n + c] += v;
        if r != c {
            hd[c * n + r] += v;
        }
    }
    let lag_grad = |xx: &[f64]| -> Vec<f64> {
        let mut gg = vec![0.0; n];
        p.gradient(xx, &mut gg);
        let mut jj = vec![0.0; js.len()];
        p.jacobian_values(xx, &mut jj);
        for (&(r, c), v) in js.iter().zip(&jj) {
            gg[c] += lambda[r] * v;
        }
        gg
    };
    let mut out = DerivativeCheck { gradient: 0.0, jacobian: 0.0, hessian: 0.0 };
    let mut xp = x.to_vec();
    let mut cp = vec![0.0; m];
    let mut cm = vec![0.0; m];
    for j in 0..n {
        let orig = xp[j];
        xp[j] = orig + h;
        let fp = p.objective(&xp);
        p.constraints(&xp, &mut cp);
        let lp = lag_grad(&xp);
        xp[j] = orig - h;
        let fm = p.objective(&xp);
        p.constraints(&xp, &mut cm);
        let lm = lag_grad(&xp);
        xp[j] = orig;
        let rel = |fd: f64, an: f64| (fd - an).abs() / an.abs().max(1.0);
        out.gradient = out.gradient.max(rel((fp - fm) / (2.0 * h), g[j]));
        for r in 0..m {
            out.jacobian = out.jacobian.max(rel((cp[r] - cm[r]) / (2.0 * h), jd[r * n + j]));
        }
        for i in 0..n {
            out.hessian = out.hessian.max(rel((lp[i] - lm[i]) / (2.0 * h), hd[i * n + j]));
        }
    }
    out
}
