//! Small dense linear-algebra kernels shared by the accelerators and models.
//!
//! Vectors are plain `f64` slices. The least-squares kernel is a Householder
//! QR with column pivoting; the dense LU used by the NLS-type models is
//! delegated to LAPACK.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Factorize, LUFactorized, ReciprocalConditionNum, Solve};

use crate::error::{Error, Result};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| s * x).collect()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Linear combination `sum_j coeffs[j] * vectors[j]`.
pub fn combine(coeffs: &[f64], vectors: &[&[f64]]) -> Vec<f64> {
    assert_eq!(coeffs.len(), vectors.len());
    let n = vectors.first().map_or(0, |v| v.len());
    let mut out = vec![0.0; n];
    for (c, v) in coeffs.iter().zip(vectors) {
        axpy(*c, v, &mut out);
    }
    out
}

pub fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|x| x.is_finite())
}

/// Householder QR factorization `A P = Q R` with column pivoting.
///
/// Columns whose pivot magnitude falls below the rank tolerance are treated
/// as dependent and receive a zero coefficient in [`PivotedQr::solve`].
#[derive(Debug, Clone)]
pub struct PivotedQr {
    rows: usize,
    /// Householder vectors, one per eliminated column (length `rows - k`).
    reflectors: Vec<Vec<f64>>,
    /// Upper-triangular factor, stored by (pivoted) column.
    r: Vec<Vec<f64>>,
    perm: Vec<usize>,
    rank: usize,
}

impl PivotedQr {
    /// Factor the matrix whose columns are `columns`. The default rank
    /// tolerance is `rows * eps * max column norm`.
    pub fn new(columns: &[&[f64]]) -> Self {
        let rows = columns.first().map_or(0, |c| c.len());
        Self::with_tolerance(columns, rows.max(1) as f64 * f64::EPSILON)
    }

    /// Factor with an explicit relative rank tolerance: column `k` counts
    /// toward the rank while `|R_kk| > rel_tol * |R_00|`.
    pub fn with_tolerance(columns: &[&[f64]], rel_tol: f64) -> Self {
        let n = columns.len();
        let rows = columns.first().map_or(0, |c| c.len());
        let mut a: Vec<Vec<f64>> = columns.iter().map(|c| c.to_vec()).collect();
        let mut perm: Vec<usize> = (0..n).collect();
        let steps = n.min(rows);
        let mut reflectors = Vec::with_capacity(steps);
        let mut r = vec![vec![0.0; n]; n];

        for k in 0..steps {
            let (best, _) = (k..n)
                .map(|j| (j, norm(&a[j][k..])))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            a.swap(k, best);
            r.swap(k, best);
            perm.swap(k, best);

            let x = &a[k][k..];
            let nx = norm(x);
            let mut v = x.to_vec();
            let alpha = if x[0] >= 0.0 { -nx } else { nx };
            if nx > 0.0 {
                v[0] -= alpha;
                let nv = norm(&v);
                if nv > 0.0 {
                    v.iter_mut().for_each(|e| *e /= nv);
                }
            } else {
                v.iter_mut().for_each(|e| *e = 0.0);
            }
            for col in a.iter_mut().skip(k) {
                let tail = &mut col[k..];
                let proj = 2.0 * dot(&v, tail);
                axpy(-proj, &v, tail);
            }
            reflectors.push(v);
            for (j, col) in a.iter().enumerate().skip(k) {
                r[j][k] = col[k];
            }
        }

        let r00 = if steps > 0 { r[0][0].abs() } else { 0.0 };
        let rank = (0..steps)
            .take_while(|&k| r[k][k].abs() > rel_tol * r00 && r[k][k] != 0.0)
            .count();

        PivotedQr {
            rows,
            reflectors,
            r,
            perm,
            rank,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn cols(&self) -> usize {
        self.perm.len()
    }

    /// Column permutation: pivot position `k` holds original column `perm()[k]`.
    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    /// `|R_00| / |R_kk|` over the full diagonal, a cheap 2-norm condition estimate.
    pub fn condition_estimate(&self) -> f64 {
        let steps = self.reflectors.len();
        if steps == 0 {
            return 1.0;
        }
        let first = self.r[0][0].abs();
        let last = self.r[steps - 1][steps - 1].abs();
        if last == 0.0 {
            f64::INFINITY
        } else {
            first / last
        }
    }

    /// Apply `Q^T` to `b`.
    pub fn qt_mul(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.rows);
        let mut y = b.to_vec();
        for (k, v) in self.reflectors.iter().enumerate() {
            let tail = &mut y[k..];
            let proj = 2.0 * dot(v, tail);
            axpy(-proj, v, tail);
        }
        y
    }

    /// Basic least-squares solution of `min ||A x - b||`, with coefficients of
    /// dependent columns set to zero.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let y = self.qt_mul(b);
        let r = self.rank;
        let mut z = vec![0.0; r];
        for i in (0..r).rev() {
            let s: f64 = ((i + 1)..r).map(|j| self.r[j][i] * z[j]).sum();
            z[i] = (y[i] - s) / self.r[i][i];
        }
        let mut x = vec![0.0; self.perm.len()];
        for (i, zi) in z.into_iter().enumerate() {
            x[self.perm[i]] = zi;
        }
        x
    }
}

/// Least-squares solve of `min || sum_j x_j columns[j] - b ||` with the
/// default rank tolerance. Returns the coefficients and the numerical rank.
pub fn least_squares(columns: &[&[f64]], b: &[f64]) -> (Vec<f64>, usize) {
    let qr = PivotedQr::new(columns);
    (qr.solve(b), qr.rank())
}

/// Column-major dense matrix assembled column by column.
pub fn dense_from_columns(n: usize, mut column: impl FnMut(usize) -> Vec<f64>) -> Array2<f64> {
    let mut a = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        let c = column(j);
        assert_eq!(c.len(), n);
        for (i, v) in c.into_iter().enumerate() {
            a[(i, j)] = v;
        }
    }
    a
}

/// Cached LU factorization of a dense square matrix.
pub struct DenseLu {
    n: usize,
    lu: LUFactorized<ndarray::OwnedRepr<f64>>,
    matrix: Array2<f64>,
    rcond: f64,
}

impl std::fmt::Debug for DenseLu {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DenseLu")
            .field("n", &self.n)
            .field("rcond", &self.rcond)
            .finish()
    }
}

impl DenseLu {
    /// Factor `matrix`, rejecting it when the reciprocal condition number is
    /// below `n * eps`.
    pub fn new(matrix: Array2<f64>) -> Result<Self> {
        let n = matrix.nrows();
        if matrix.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "expected a square matrix, got {}x{}",
                n,
                matrix.ncols()
            )));
        }
        let lu = match matrix.factorize() {
            Ok(lu) => lu,
            Err(_) => return Err(Error::SingularOperator { rcond: 0.0 }),
        };
        let rcond = lu.rcond().map_err(|e| Error::Backend(e.to_string()))?;
        if rcond.is_nan() || rcond <= n as f64 * f64::EPSILON {
            return Err(Error::SingularOperator { rcond });
        }
        Ok(DenseLu { n, lu, matrix, rcond })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn rcond(&self) -> f64 {
        self.rcond
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let xv = ndarray::ArrayView1::from(x);
        self.matrix.dot(&xv).to_vec()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let rhs = Array1::from(b.to_vec());
        self.lu
            .solve(&rhs)
            .expect("LU solve on a validated factorization")
            .to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qr_solves_consistent_system() {
        let c0 = [1.0, 0.0, 0.0, 1.0];
        let c1 = [0.0, 2.0, 0.0, 1.0];
        let c2 = [0.0, 0.0, 3.0, 1.0];
        let x_true = [0.5, -1.0, 2.0];
        let b: Vec<f64> = (0..4)
            .map(|i| c0[i] * x_true[0] + c1[i] * x_true[1] + c2[i] * x_true[2])
            .collect();
        let (x, rank) = least_squares(&[&c0, &c1, &c2], &b);
        assert_eq!(rank, 3);
        for (a, e) in x.iter().zip(x_true) {
            assert!((a - e).abs() < 1e-14);
        }
    }

    #[test]
    fn qr_solves_square_system_needing_pivots() {
        // Column norms arranged so that every step reorders the remaining columns.
        let cols = [
            [0.1, 0.2, 0.0, 0.1],
            [1.0, -2.0, 0.5, 3.0],
            [0.0, 0.4, 4.0, -1.0],
            [2.0, 0.0, 0.0, 0.3],
        ];
        let x_true = [1.0, -0.5, 0.25, 2.0];
        let b: Vec<f64> = (0..4).map(|i| (0..4).map(|j| cols[j][i] * x_true[j]).sum()).collect();
        let refs: Vec<&[f64]> = cols.iter().map(|c| c.as_slice()).collect();
        let (x, rank) = least_squares(&refs, &b);
        assert_eq!(rank, 4);
        for (a, e) in x.iter().zip(x_true) {
            assert!((a - e).abs() < 1e-13);
        }
    }

    #[test]
    fn qr_drops_dependent_column() {
        let c0 = [1.0, 1.0, 0.0];
        let c1 = [2.0, 2.0, 0.0];
        let b = [3.0, 3.0, 0.0];
        let qr = PivotedQr::new(&[&c0, &c1]);
        assert_eq!(qr.rank(), 1);
        let x = qr.solve(&b);
        let fit: Vec<f64> = (0..3).map(|i| x[0] * c0[i] + x[1] * c1[i]).collect();
        assert!(norm(&sub(&fit, &b)) < 1e-14);
        assert!(x.iter().filter(|v| **v == 0.0).count() == 1);
    }

    #[test]
    fn qr_least_squares_matches_normal_equations() {
        // Overdetermined 5x2 fit of a line.
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0];
        let ys = [1.0, 2.9, 5.2, 7.1, 8.8];
        let ones = [1.0; 5];
        let (coef, _) = least_squares(&[&ones, &xs], &ys);
        let n = 5.0;
        let sx: f64 = xs.iter().sum();
        let sy: f64 = ys.iter().sum();
        let sxx: f64 = xs.iter().map(|x| x * x).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        let icept = (sy - slope * sx) / n;
        assert!((coef[0] - icept).abs() < 1e-12);
        assert!((coef[1] - slope).abs() < 1e-12);
    }

    #[test]
    fn dense_lu_rejects_singular() {
        let a = Array2::from_shape_vec((2, 2), vec![1.0, 2.0, 2.0, 4.0]).unwrap();
        assert!(matches!(DenseLu::new(a), Err(Error::SingularOperator { .. })));
    }

    #[test]
    fn dense_lu_round_trip() {
        let a = Array2::from_shape_vec((3, 3), vec![4.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 2.0]).unwrap();
        let lu = DenseLu::new(a).unwrap();
        let x = [1.0, -2.0, 0.5];
        let b = lu.matvec(&x);
        let y = lu.solve(&b);
        assert!(norm(&sub(&x, &y)) < 1e-14);
    }
}
