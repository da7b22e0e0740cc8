//! QCQP extended with rotated second-order cone rows in convex form
//!
//! ```text
//! sum_k x_k^2 / x_a - x_b <= 0,   x_a > 0
//! ```
//!
//! Written as `sum x_k^2 - x_a x_b <= 0` the row is an indefinite quadratic
//! and inertia correction spoils the Newton steps; the quotient form is
//! convex, so the Lagrangian Hessian stays positive semidefinite.

use super::problem::{NlpProblem, QcqpProblem};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct RotatedCone {
    pub num: Vec<usize>,
    pub a: usize,
    pub b: usize,
}

/// Base rows come first, cone rows after them in order.
#[derive(Debug, Clone)]
pub struct ConeQcqp<T> {
    base: QcqpProblem<T>,
    cones: Vec<RotatedCone>,
    base_jac: usize,
    base_hess: usize,
    // Per cone: Hessian slots of (num_k,num_k), (a,num_k) and (a,a).
    hess_slots: Vec<(Vec<usize>, Vec<usize>, usize)>,
    hess_struct: Vec<(usize, usize)>,
}

impl<T: Scalar> ConeQcqp<T> {
    pub fn new(base: QcqpProblem<T>, cones: Vec<RotatedCone>) -> Self {
        let base_jac = base.jacobian_structure().len();
        let mut hess_struct = base.hessian_structure();
        let base_hess = hess_struct.len();
        let mut hess_slots = Vec::with_capacity(cones.len());
        for c in &cones {
            let mut push = |i: usize, j: usize| {
                hess_struct.push((i.max(j), i.min(j)));
                hess_struct.len() - 1
            };
            let diag: Vec<usize> = c.num.iter().map(|&k| push(k, k)).collect();
            let cross: Vec<usize> = c.num.iter().map(|&k| push(c.a, k)).collect();
            let aa = push(c.a, c.a);
            hess_slots.push((diag, cross, aa));
        }
        Self { base, cones, base_jac, base_hess, hess_slots, hess_struct }
    }

    pub fn base(&self) -> &QcqpProblem<T> {
        &self.base
    }

    fn sum_sq(c: &RotatedCone, x: &[T]) -> T {
        c.num.iter().map(|&k| x[k] * x[k]).sum()
    }
}

impl<T: Scalar> NlpProblem<T> for ConeQcqp<T> {
    fn num_vars(&self) -> usize {
        self.base.num_vars()
    }

    fn num_cons(&self) -> usize {
        self.base.num_cons() + self.cones.len()
    }

    fn var_bounds(&self) -> (Vec<T>, Vec<T>) {
        self.base.var_bounds()
    }

    fn con_bounds(&self) -> (Vec<T>, Vec<T>) {
        let (mut l, mut u) = self.base.con_bounds();
        l.extend(std::iter::repeat_n(T::neg_infinity(), self.cones.len()));
        u.extend(std::iter::repeat_n(T::zero(), self.cones.len()));
        (l, u)
    }

    fn initial_point(&self) -> Vec<T> {
        self.base.initial_point()
    }

    fn objective(&self, x: &[T]) -> T {
        self.base.objective(x)
    }

    fn gradient(&self, x: &[T], grad: &mut [T]) {
        self.base.gradient(x, grad)
    }

    fn constraints(&self, x: &[T], c: &mut [T]) {
        let m = self.base.num_cons();
        self.base.constraints(x, &mut c[..m]);
        for (r, cone) in self.cones.iter().enumerate() {
            c[m + r] = Self::sum_sq(cone, x) / x[cone.a] - x[cone.b];
        }
    }

    fn jacobian_structure(&self) -> Vec<(usize, usize)> {
        let m = self.base.num_cons();
        let mut s = self.base.jacobian_structure();
        for (r, c) in self.cones.iter().enumerate() {
            s.extend(c.num.iter().map(|&k| (m + r, k)));
            s.push((m + r, c.a));
            s.push((m + r, c.b));
        }
        s
    }

    fn jacobian_values(&self, x: &[T], vals: &mut [T]) {
        self.base.jacobian_values(x, &mut vals[..self.base_jac]);
        let mut p = self.base_jac;
        for c in &self.cones {
            let a = x[c.a];
            for &k in &c.num {
                vals[p] = T::of(2.0) * x[k] / a;
                p += 1;
            }
            vals[p] = -Self::sum_sq(c, x) / (a * a);
            vals[p + 1] = -T::one();
            p += 2;
        }
    }

    fn hessian_structure(&self) -> Vec<(usize, usize)> {
        self.hess_struct.clone()
    }

    fn hessian_values(&self, x: &[T], obj_factor: T, lambda: &[T], vals: &mut [T]) {
        let m = self.base.num_cons();
        self.base.hessian_values(x, obj_factor, &lambda[..m], &mut vals[..self.base_hess]);
        for (r, (c, (diag, cross, aa))) in self.cones.iter().zip(&self.hess_slots).enumerate() {
            let y = lambda[m + r];
            let a = x[c.a];
            for (t, &k) in c.num.iter().enumerate() {
                vals[diag[t]] = y * T::of(2.0) / a;
                vals[cross[t]] = -y * T::of(2.0) * x[k] / (a * a);
            }
            vals[*aa] = y * T::of(2.0) * Self::sum_sq(c, x) / (a * a * a);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ipm::{check_derivatives, solve, IpmOptions, QcqpBuilder, QcqpRow};

    fn sample() -> ConeQcqp<f64> {
        let mut b = QcqpBuilder::new();
        let x = b.add_var(f64::NEG_INFINITY, f64::INFINITY, 0.2);
        let y = b.add_var(f64::NEG_INFINITY, f64::INFINITY, 0.1);
        let a = b.add_var(0.0, f64::INFINITY, 1.0);
        let t = b.add_var(0.0, f64::INFINITY, 1.0);
        b.add_objective_linear(x, -1.0);
        b.add_objective_linear(y, -1.0);
        b.add_row(QcqpRow { linear: vec![(a, 1.0)], quad: vec![], lower: 2.0, upper: 2.0 });
        b.add_row(QcqpRow { linear: vec![(t, 1.0)], quad: vec![], lower: f64::NEG_INFINITY, upper: 1.0 });
        ConeQcqp::new(b.build(), vec![RotatedCone { num: vec![x, y], a, b: t }])
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let p = sample();
        let chk = check_derivatives(&p, &[0.3, -0.4, 1.7, 0.6], &[0.2, -0.5, 1.3], 1e-6);
        assert!(chk.gradient < 1e-7 && chk.jacobian < 1e-7 && chk.hessian < 1e-6, "{chk:?}");
    }

    #[test]
    fn disc_of_radius_sqrt_two() {
        // x^2 + y^2 <= a t = 2: max x + y at x = y = 1.
        let s = solve(&sample(), &IpmOptions { line_search: true, ..Default::default() });
        assert!(s.converged(), "{:?}", s.status);
        assert!((s.x[0] - 1.0).abs() < 1e-6 && (s.x[1] - 1.0).abs() < 1e-6, "{:?}", s.x);
    }
}
