//! Sparse `L D L^T` factorization for symmetric quasidefinite matrices.
//!
//! The symbolic phase computes a fill-reducing ordering (AMD), the
//! elimination tree and column counts once per sparsity pattern. The numeric
//! phase is an up-looking factorization without pivoting; the signs of `D`
//! give the inertia.

use crate::linalg::LinalgError;
use crate::scalar::Scalar;

/// Ordering applied before factorization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ordering {
    Natural,
    Amd,
}

/// Pattern analysis reusable across numeric factorizations.
#[derive(Debug, Clone)]
pub struct SymbolicLdl {
    n: usize,
    perm: Vec<usize>,
    pinv: Vec<usize>,
    ap: Vec<usize>,
    ai: Vec<usize>,
    slot: Vec<usize>,
    etree: Vec<usize>,
    lp: Vec<usize>,
}

const NONE: usize = usize::MAX;

impl SymbolicLdl {
    /// Analyzes the pattern given by `entries` (row, col) of a symmetric
    /// `n x n` matrix. Either triangle may be given and entries may repeat;
    /// values passed to [`SymbolicLdl::factor`] are aligned with `entries`
    /// and summed per position.
    pub fn analyze(n: usize, entries: &[(usize, usize)], ordering: Ordering) -> Result<Self, LinalgError> {
        for &(r, c) in entries {
            if r >= n || c >= n {
                return Err(LinalgError::Dimension(format!("entry ({r},{c}) outside order {n}")));
            }
        }
        let (perm, pinv) = match ordering {
            Ordering::Natural => ((0..n).collect(), (0..n).collect()),
            Ordering::Amd => amd_order(n, entries)?,
        };
        let mut keys: Vec<(usize, usize, usize)> = entries
            .iter()
            .enumerate()
            .map(|(k, &(r, c))| {
                let (a, b) = (pinv[r], pinv[c]);
                (a.max(b), a.min(b), k)
            })
            .collect();
        // Every diagonal entry must be present.
        for i in 0..n {
            keys.push((i, i, NONE));
        }
        keys.sort_unstable();
        let mut ap = vec![0usize; n + 1];
        let mut ai = Vec::with_capacity(keys.len());
        let mut slot = vec![0usize; entries.len()];
        let mut last: Option<(usize, usize)> = None;
        for &(col, row, k) in &keys {
            if last != Some((col, row)) {
                ai.push(row);
                ap[col + 1] += 1;
                last = Some((col, row));
            }
            if k != NONE {
                slot[k] = ai.len() - 1;
            }
        }
        for j in 0..n {
            ap[j + 1] += ap[j];
        }
        let (etree, lnz) = etree(n, &ap, &ai);
        let mut lp = vec![0usize; n + 1];
        for i in 0..n {
            lp[i + 1] = lp[i] + lnz[i];
        }
        Ok(Self { n, perm, pinv, ap, ai, slot, etree, lp })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Nonzeros in the strict lower factor.
    pub fn factor_nnz(&self) -> usize {
        self.lp[self.n]
    }

    /// Numeric factorization of the matrix whose entries are `values`
    /// (aligned with the `entries` passed to `analyze`).
    pub fn factor<T: Scalar>(&self, values: &[T]) -> Result<LdlFactor<T>, LinalgError> {
        assert_eq!(values.len(), self.slot.len());
        let n = self.n;
        let mut ax = vec![T::zero(); self.ai.len()];
        for (k, &s) in self.slot.iter().enumerate() {
            ax[s] += values[k];
        }
        let nnz_l = self.lp[n];
        let mut li = vec![0usize; nnz_l];
        let mut lx = vec![T::zero(); nnz_l];
        let mut d = vec![T::zero(); n];
        let mut dinv = vec![T::zero(); n];
        let mut y_vals = vec![T::zero(); n];
        let mut y_used = vec![false; n];
        let mut y_idx = vec![0usize; n];
        let mut elim = vec![0usize; n];
        let mut next_space: Vec<usize> = self.lp[..n].to_vec();
        for k in 0..n {
            let mut nnz_y = 0;
            for p in self.ap[k]..self.ap[k + 1] {
                let b = self.ai[p];
                if b == k {
                    d[k] = ax[p];
                    continue;
                }
                y_vals[b] = ax[p];
                if !y_used[b] {
                    y_used[b] = true;
                    elim[0] = b;
                    let mut ne = 1;
                    let mut nx = self.etree[b];
                    while nx != NONE && nx < k {
                        if y_used[nx] {
                            break;
                        }
                        y_used[nx] = true;
                        elim[ne] = nx;
                        ne += 1;
                        nx = self.etree[nx];
                    }
                    while ne > 0 {
                        ne -= 1;
                        y_idx[nnz_y] = elim[ne];
                        nnz_y += 1;
                    }
                }
            }
            for i in (0..nnz_y).rev() {
                let c = y_idx[i];
                let tmp = next_space[c];
                let yc = y_vals[c];
                for j in self.lp[c]..tmp {
                    let r = li[j];
                    y_vals[r] -= lx[j] * yc;
                }
                li[tmp] = k;
                let lkc = yc * dinv[c];
                lx[tmp] = lkc;
                d[k] -= yc * lkc;
                next_space[c] += 1;
                y_vals[c] = T::zero();
                y_used[c] = false;
            }
            if d[k] == T::zero() || !d[k].is_finite() {
                return Err(LinalgError::Singular { index: self.perm[k] });
            }
            dinv[k] = T::one() / d[k];
        }
        Ok(LdlFactor { perm: self.perm.clone(), lp: self.lp.clone(), li, lx, d, dinv })
    }

    /// Position of original index `i` in the factor ordering.
    pub fn position(&self, i: usize) -> usize {
        self.pinv[i]
    }
}

/// Numeric `L D L^T` factor.
#[derive(Debug, Clone)]
pub struct LdlFactor<T> {
    perm: Vec<usize>,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<T>,
    d: Vec<T>,
    dinv: Vec<T>,
}

impl<T: Scalar> LdlFactor<T> {
    /// Numbers of positive and negative pivots.
    pub fn inertia(&self) -> (usize, usize) {
        let pos = self.d.iter().filter(|v| **v > T::zero()).count();
        (pos, self.d.len() - pos)
    }

    /// Smallest pivot magnitude.
    pub fn min_abs_pivot(&self) -> T {
        self.d.iter().fold(T::infinity(), |m, v| m.min(v.abs()))
    }

    /// Largest pivot magnitude.
    pub fn max_abs_pivot(&self) -> T {
        self.d.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [T]) {
        let n = self.d.len();
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let xi = x[i];
            if xi != T::zero() {
                for j in self.lp[i]..self.lp[i + 1] {
                    x[self.li[j]] -= self.lx[j] * xi;
                }
            }
        }
        for i in 0..n {
            x[i] *= self.dinv[i];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in self.lp[i]..self.lp[i + 1] {
                s -= self.lx[j] * x[self.li[j]];
            }
            x[i] = s;
        }
        for (k, &p) in self.perm.iter().enumerate() {
            b[p] = x[k];
        }
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

fn etree(n: usize, ap: &[usize], ai: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let mut work = vec![NONE; n];
    let mut lnz = vec![0usize; n];
    let mut tree = vec![NONE; n];
    for j in 0..n {
        work[j] = j;
        for p in ap[j]..ap[j + 1] {
            let mut i = ai[p];
            while work[i] != j {
                if tree[i] == NONE {
                    tree[i] = j;
                }
                lnz[i] += 1;
                work[i] = j;
                i = tree[i];
            }
        }
    }
    (tree, lnz)
}

fn amd_order(n: usize, entries: &[(usize, usize)]) -> Result<(Vec<usize>, Vec<usize>), LinalgError> {
    if n == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    // Diagonals are ignored by the ordering but keep nnz >= n, which the
    // amd crate's size arithmetic assumes.
    let mut cols: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    for &(r, c) in entries {
        if r != c {
            cols[c].push(r);
            cols[r].push(c);
        }
    }
    let mut ap = Vec::with_capacity(n + 1);
    let mut ai = Vec::new();
    ap.push(0usize);
    for col in &mut cols {
        col.sort_unstable();
        col.dedup();
        ai.extend_from_slice(col);
        ap.push(ai.len());
    }
    let (p, pinv, _) = amd::order(n, &ap, &ai, &amd::Control::default())
        .map_err(|s| LinalgError::Ordering(format!("{s:?}")))?;
    Ok((p, pinv))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dense;

    fn kkt_example() -> (usize, Vec<(usize, usize)>, Vec<f64>) {
        // [H A^T; A -d] with H = diag(4, 3, 2) + offdiag, A = [1 1 0; 0 1 1]
        let e = vec![
            (0, 0), (1, 1), (2, 2), (1, 0), (3, 3), (4, 4),
            (3, 0), (3, 1), (4, 1), (4, 2),
        ];
        let v = vec![4.0, 3.0, 2.0, 0.5, -1e-8, -1e-8, 1.0, 1.0, 1.0, 1.0];
        (5, e, v)
    }

    fn dense_of(n: usize, e: &[(usize, usize)], v: &[f64]) -> Vec<f64> {
        let mut a = vec![0.0; n * n];
        for (&(r, c), &x) in e.iter().zip(v) {
            a[r * n + c] += x;
            if r != c {
                a[c * n + r] += x;
            }
        }
        a
    }

    #[test]
    fn solves_quasidefinite_system_both_orderings() {
        let (n, e, v) = kkt_example();
        let a = dense_of(n, &e, &v);
        let b = [1.0, -2.0, 3.0, 0.5, -0.25];
        let reference = dense::solve(n, &a, &b).unwrap();
        for ord in [Ordering::Natural, Ordering::Amd] {
            let s = SymbolicLdl::analyze(n, &e, ord).unwrap();
            let f = s.factor(&v).unwrap();
            assert_eq!(f.inertia(), (3, 2));
            let x = f.solve(&b);
            for (p, q) in x.iter().zip(&reference) {
                assert!((p - q).abs() < 1e-9 * q.abs().max(1.0), "{p} vs {q}");
            }
        }
    }

    #[test]
    fn duplicate_and_transposed_entries_are_summed() {
        let e = vec![(0, 0), (0, 1), (1, 0), (1, 1), (0, 0)];
        let v = vec![1.0, 0.5, 0.5, 2.0, 1.0];
        let s = SymbolicLdl::analyze(2, &e, Ordering::Amd).unwrap();
        let x: Vec<f64> = s.factor(&v).unwrap().solve(&[2.0, 2.0]);
        // [[2, 1], [1, 2]] x = [2, 2]
        assert!((x[0] - 2.0 / 3.0).abs() < 1e-14 && (x[1] - 2.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn zero_pivot_is_singular() {
        let e = vec![(0, 0), (1, 1)];
        let s = SymbolicLdl::analyze(2, &e, Ordering::Natural).unwrap();
        assert!(s.factor(&[1.0, 0.0]).is_err());
    }

    #[test]
    fn single_precision_factor() {
        let (n, e, v) = kkt_example();
        let v32: Vec<f32> = v.iter().map(|x| *x as f32).collect();
        let s = SymbolicLdl::analyze(n, &e, Ordering::Amd).unwrap();
        let f = s.factor(&v32).unwrap();
        let x = f.solve(&[1.0, 0.0, 0.0, 0.0, 0.0]);
        let a = dense_of(n, &e, &v);
        let r = dense::solve(n, &a, &[1.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        for (p, q) in x.iter().zip(&r) {
            assert!((*p as f64 - q).abs() < 1e-4);
        }
    }
}
