//! Small dense factorizations. Used for tiny systems and as reference
//! implementations in tests of the sparse kernels.

use crate::linalg::LinalgError;
use crate::scalar::Scalar;

/// LU factorization with partial pivoting of a square row-major matrix.
#[derive(Debug, Clone)]
pub struct DenseLu<T> {
    n: usize,
    lu: Vec<T>,
    perm: Vec<usize>,
}

impl<T: Scalar> DenseLu<T> {
    pub fn factor(n: usize, a: &[T]) -> Result<Self, LinalgError> {
        assert_eq!(a.len(), n * n);
        let mut lu = a.to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.iter().fold(T::zero(), |m, x| m.max(x.abs())).max(T::one());
        for k in 0..n {
            let mut p = k;
            for i in k + 1..n {
                if lu[i * n + k].abs() > lu[p * n + k].abs() {
                    p = i;
                }
            }
            if lu[p * n + k].abs() <= T::epsilon() * scale {
                return Err(LinalgError::Singular { index: k });
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let piv = lu[k * n + k];
            for i in k + 1..n {
                let f = lu[i * n + k] / piv;
                lu[i * n + k] = f;
                if f != T::zero() {
                    for j in k + 1..n {
                        let u = lu[k * n + j];
                        lu[i * n + j] -= f * u;
                    }
                }
            }
        }
        Ok(Self { n, lu, perm })
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.n;
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                let l = self.lu[i * n + j];
                let xj = x[j];
                x[i] -= l * xj;
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let u = self.lu[i * n + j];
                let xj = x[j];
                x[i] -= u * xj;
            }
            x[i] /= self.lu[i * n + i];
        }
        x
    }
}

/// Solves `A x = b` for a dense square system.
pub fn solve<T: Scalar>(n: usize, a: &[T], b: &[T]) -> Result<Vec<T>, LinalgError> {
    Ok(DenseLu::factor(n, a)?.solve(b))
}

/// Unpivoted symmetric `L D L^T` of a dense matrix. Returns the pivots `D`;
/// their signs give the inertia when the factorization exists.
pub fn ldlt_pivots<T: Scalar>(n: usize, a: &[T]) -> Result<Vec<T>, LinalgError> {
    let mut l = vec![T::zero(); n * n];
    let mut d = vec![T::zero(); n];
    for j in 0..n {
        let mut dj = a[j * n + j];
        for k in 0..j {
            dj -= l[j * n + k] * l[j * n + k] * d[k];
        }
        if dj == T::zero() {
            return Err(LinalgError::Singular { index: j });
        }
        d[j] = dj;
        for i in j + 1..n {
            let mut v = a[i * n + j];
            for k in 0..j {
                v -= l[i * n + k] * l[j * n + k] * d[k];
            }
            l[i * n + j] = v / dj;
        }
    }
    Ok(d)
}
