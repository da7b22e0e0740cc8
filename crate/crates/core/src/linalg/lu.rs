//! Sparse LU factorization of square matrices given by columns, used for
//! simplex bases. Left-looking elimination with partial pivoting on a dense
//! work vector; columns are processed sparsest first.

use crate::scalar::Scalar;

/// Result of a failed factorization: the column positions that had no
/// acceptable pivot and the rows left without one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SingularColumns {
    pub positions: Vec<usize>,
    pub free_rows: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct SparseLu<T> {
    m: usize,
    prow: Vec<usize>,
    pcol: Vec<usize>,
    lcols: Vec<Vec<(usize, T)>>,
    ucols: Vec<Vec<(usize, T)>>,
    udiag: Vec<T>,
}

impl<T: Scalar> SparseLu<T> {
    /// Factors the `m x m` matrix whose column `j` is `cols[j]` as
    /// `(row, value)` pairs.
    pub fn factor(m: usize, cols: &[Vec<(usize, T)>]) -> Result<Self, SingularColumns> {
        assert_eq!(cols.len(), m);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by_key(|&j| cols[j].len());
        let mut x = vec![T::zero(); m];
        let mut mark = vec![false; m];
        let mut pivoted = vec![false; m];
        let mut touched: Vec<usize> = Vec::new();
        let mut lu = Self {
            m,
            prow: Vec::with_capacity(m),
            pcol: Vec::with_capacity(m),
            lcols: Vec::with_capacity(m),
            ucols: Vec::with_capacity(m),
            udiag: Vec::with_capacity(m),
        };
        let mut singular = Vec::new();
        let mut row_step = vec![usize::MAX; m];
        for &pos in &order {
            touched.clear();
            let mut cnorm = T::zero();
            for &(r, v) in &cols[pos] {
                x[r] += v;
                cnorm = cnorm.max(v.abs());
                if !mark[r] {
                    mark[r] = true;
                    touched.push(r);
                }
            }
            for j in 0..lu.prow.len() {
                let v = x[lu.prow[j]];
                if v != T::zero() {
                    for &(i, l) in &lu.lcols[j] {
                        x[i] -= l * v;
                        if !mark[i] {
                            mark[i] = true;
                            touched.push(i);
                        }
                    }
                }
            }
            let mut piv_row = usize::MAX;
            let mut amax = T::zero();
            for &r in &touched {
                if !pivoted[r] && x[r].abs() > amax {
                    amax = x[r].abs();
                    piv_row = r;
                }
            }
            let tol = T::of(1e-11) * cnorm.max(T::one());
            if piv_row == usize::MAX || amax <= tol {
                singular.push(pos);
            } else {
                let k = lu.prow.len();
                let piv = x[piv_row];
                let mut ucol = Vec::new();
                let mut lcol = Vec::new();
                for &r in &touched {
                    let v = x[r];
                    if v == T::zero() || r == piv_row {
                        continue;
                    }
                    if pivoted[r] {
                        ucol.push((r, v));
                    } else {
                        lcol.push((r, v / piv));
                    }
                }
                // Store U entries by elimination step.
                let ucol: Vec<(usize, T)> = ucol
                    .into_iter()
                    .map(|(r, v)| (row_step[r], v))
                    .collect();
                pivoted[piv_row] = true;
                row_step[piv_row] = k;
                lu.prow.push(piv_row);
                lu.pcol.push(pos);
                lu.lcols.push(lcol);
                lu.ucols.push(ucol);
                lu.udiag.push(piv);
            }
            for &r in &touched {
                x[r] = T::zero();
                mark[r] = false;
            }
        }
        if !singular.is_empty() {
            let free_rows = (0..m).filter(|r| !pivoted[*r]).collect();
            return Err(SingularColumns { positions: singular, free_rows });
        }
        Ok(lu)
    }

    /// Solves `B z = b`; `b` indexed by row, result by column position.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        for k in 0..self.m {
            let v = x[self.prow[k]];
            if v != T::zero() {
                for &(i, l) in &self.lcols[k] {
                    x[i] -= l * v;
                }
            }
        }
        let mut z = vec![T::zero(); self.m];
        for k in (0..self.m).rev() {
            let zk = x[self.prow[k]] / self.udiag[k];
            z[self.pcol[k]] = zk;
            if zk != T::zero() {
                for &(j, u) in &self.ucols[k] {
                    x[self.prow[j]] -= u * zk;
                }
            }
        }
        z
    }

    /// Solves `B^T y = c`; `c` indexed by column position, result by row.
    pub fn solve_transpose(&self, c: &[T]) -> Vec<T> {
        let mut v = vec![T::zero(); self.m];
        for k in 0..self.m {
            let mut s = c[self.pcol[k]];
            for &(j, u) in &self.ucols[k] {
                s -= u * v[j];
            }
            v[k] = s / self.udiag[k];
        }
        let mut y = vec![T::zero(); self.m];
        for k in (0..self.m).rev() {
            let mut s = v[k];
            for &(i, l) in &self.lcols[k] {
                s -= l * y[i];
            }
            y[self.prow[k]] = s;
        }
        y
    }

    /// Nonzeros in both factors, diagonal included.
    pub fn nnz(&self) -> usize {
        self.m + self.lcols.iter().map(Vec::len).sum::<usize>() + self.ucols.iter().map(Vec::len).sum::<usize>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dense;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_cols(m: usize, rng: &mut ChaCha8Rng) -> (Vec<Vec<(usize, f64)>>, Vec<f64>) {
        let mut dense_a = vec![0.0; m * m];
        let mut cols = vec![Vec::new(); m];
        for (j, col) in cols.iter_mut().enumerate() {
            for i in 0..m {
                if i == (j * 7 + 3) % m || rng.gen_bool(0.2) {
                    let v: f64 = rng.gen_range(-2.0..2.0);
                    col.push((i, v));
                    dense_a[i * m + j] = v;
                }
            }
        }
        (cols, dense_a)
    }

    #[test]
    fn random_systems_match_dense_solver() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut checked = 0;
        for _ in 0..30 {
            let m = rng.gen_range(2..25);
            let (cols, a) = random_cols(m, &mut rng);
            let Ok(reference) = dense::DenseLu::factor(m, &a) else { continue };
            let Ok(lu) = SparseLu::factor(m, &cols) else { continue };
            let b: Vec<f64> = (0..m).map(|i| (i as f64).sin()).collect();
            let z = lu.solve(&b);
            let zr = reference.solve(&b);
            for (p, q) in z.iter().zip(&zr) {
                assert!((p - q).abs() < 1e-8 * q.abs().max(1.0));
            }
            // Transposed system against dense transpose.
            let mut at = vec![0.0; m * m];
            for i in 0..m {
                for j in 0..m {
                    at[j * m + i] = a[i * m + j];
                }
            }
            let y = lu.solve_transpose(&b);
            let yr = dense::solve(m, &at, &b).unwrap();
            for (p, q) in y.iter().zip(&yr) {
                assert!((p - q).abs() < 1e-8 * q.abs().max(1.0));
            }
            checked += 1;
        }
        assert!(checked > 10);
    }

    #[test]
    fn singular_columns_are_reported() {
        let cols = vec![vec![(0, 1.0), (1, 1.0)], vec![(0, 2.0), (1, 2.0)], vec![(2, 1.0)]];
        let err = SparseLu::<f64>::factor(3, &cols).unwrap_err();
        assert_eq!(err.positions.len(), 1);
        assert_eq!(err.free_rows.len(), 1);
    }
}
