//! Dense symmetric linear algebra: cyclic Jacobi eigendecomposition and a
//! Cholesky solver for the weighted Guttman transform.

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

/// Convergence threshold: stop once `off(A) < JACOBI_TOL * ||A||_F`.
pub const JACOBI_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

/// Spectral decomposition `B = U diag(values) Uᵗ`, eigenvalues sorted descending.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    /// Column `k` is the unit eigenvector for `values[k]`.
    pub vectors: Array2<f64>,
    pub sweeps: usize,
}

impl SymmetricEigen {
    pub fn max_abs_eigenvalue(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Cyclic Jacobi with a fixed row-major sweep order `(p, q), p < q`.
///
/// The matrix must be symmetric; only exact symmetry up to `1e-12` relative is
/// accepted because the rotations assume it.
pub fn symmetric_eigen(matrix: ArrayView2<'_, f64>) -> Result<SymmetricEigen> {
    let n = matrix.nrows();
    if matrix.ncols() != n {
        return Err(Error::shape(format!("{n}x{n}"), format!("{}x{}", n, matrix.ncols())));
    }
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("matrix has non-finite entries".into()));
    }
    let mut a: Vec<f64> = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let (x, y) = (matrix[[i, j]], matrix[[j, i]]);
            if (x - y).abs() > 1e-12 * x.abs().max(y.abs()).max(f64::MIN_POSITIVE) && x != y {
                return Err(Error::InvalidParameter(format!("matrix is not symmetric at ({i},{j})")));
            }
            a.push(0.5 * (x + y));
        }
    }
    // Rows of `vt` are the eigenvectors, so rotations touch contiguous memory.
    let mut vt = vec![0.0; n * n];
    for i in 0..n {
        vt[i * n + i] = 1.0;
    }

    let frob = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let target = JACOBI_TOL * frob;
    let mut sweeps = 0;
    let mut row_p = vec![0.0; n];
    let mut row_q = vec![0.0; n];

    while off_norm(&a, n) >= target && frob > 0.0 {
        if sweeps == MAX_SWEEPS {
            return Err(Error::InvalidParameter(format!("Jacobi iteration did not converge in {MAX_SWEEPS} sweeps")));
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.is_infinite() {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                if s == 0.0 {
                    // rotation below rounding: drop the entry
                    a[p * n + q] = 0.0;
                    a[q * n + p] = 0.0;
                    continue;
                }

                row_p.copy_from_slice(&a[p * n..(p + 1) * n]);
                row_q.copy_from_slice(&a[q * n..(q + 1) * n]);
                for k in 0..n {
                    let (xp, xq) = (row_p[k], row_q[k]);
                    let np = c * xp - s * xq;
                    let nq = s * xp + c * xq;
                    a[p * n + k] = np;
                    a[q * n + k] = nq;
                    a[k * n + p] = np;
                    a[k * n + q] = nq;
                }
                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;

                let (head, tail) = vt.split_at_mut(q * n);
                let vp = &mut head[p * n..(p + 1) * n];
                let vq = &mut tail[..n];
                for (x, y) in vp.iter_mut().zip(vq.iter_mut()) {
                    let (xp, xq) = (*x, *y);
                    *x = c * xp - s * xq;
                    *y = s * xp + c * xq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let mut vectors = Array2::zeros((n, n));
    for (col, &i) in order.iter().enumerate() {
        for k in 0..n {
            vectors[[k, col]] = vt[i * n + k];
        }
    }
    Ok(SymmetricEigen { values, vectors, sweeps })
}

fn off_norm(a: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[i * n + j] * a[i * n + j];
            }
        }
    }
    s.sqrt()
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky(m: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    let n = m.nrows();
    let mut l = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        let mut d = m[[j, j]];
        for k in 0..j {
            d -= l[[j, k]] * l[[j, k]];
        }
        if d <= 0.0 || !d.is_finite() {
            return Err(Error::InvalidParameter("matrix is not positive definite".into()));
        }
        let d = d.sqrt();
        l[[j, j]] = d;
        for i in (j + 1)..n {
            let mut s = m[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = s / d;
        }
    }
    Ok(l)
}

/// Solves `L Lᵗ X = rhs` column by column.
pub fn cholesky_solve(l: ArrayView2<'_, f64>, rhs: ArrayView2<'_, f64>) -> Array2<f64> {
    let n = l.nrows();
    let mut x = rhs.to_owned();
    for c in 0..x.ncols() {
        for i in 0..n {
            let mut s = x[[i, c]];
            for k in 0..i {
                s -= l[[i, k]] * x[[k, c]];
            }
            x[[i, c]] = s / l[[i, i]];
        }
        for i in (0..n).rev() {
            let mut s = x[[i, c]];
            for k in (i + 1)..n {
                s -= l[[k, i]] * x[[k, c]];
            }
            x[[i, c]] = s / l[[i, i]];
        }
    }
    x
}

/// Frobenius norm.
pub fn frobenius(m: ArrayView2<'_, f64>) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    fn residual_ok(b: &Array2<f64>, eig: &SymmetricEigen) {
        let n = b.nrows();
        let scale = frobenius(b.view()).max(1.0);
        for k in 0..n {
            let u = eig.vectors.column(k);
            let bu = b.dot(&u);
            let r: f64 = bu.iter().zip(u.iter()).map(|(x, y)| (x - eig.values[k] * y).powi(2)).sum::<f64>().sqrt();
            assert!(r < 1e-9 * scale, "residual {r}");
            for l in 0..n {
                let dot = u.dot(&eig.vectors.column(l));
                let want = if k == l { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-10, "orthonormality {dot}");
            }
        }
    }

    #[test]
    fn diagonal_matrix_is_sorted() {
        let b = array![[1.0, 0.0, 0.0], [0.0, 3.0, 0.0], [0.0, 0.0, -2.0]];
        let e = symmetric_eigen(b.view()).unwrap();
        assert_eq!(e.values, vec![3.0, 1.0, -2.0]);
        assert_eq!(e.sweeps, 0);
    }

    #[test]
    fn two_by_two() {
        let b = array![[1.0, -1.0], [-1.0, 1.0]];
        let e = symmetric_eigen(b.view()).unwrap();
        assert!((e.values[0] - 2.0).abs() < 1e-14);
        assert!(e.values[1].abs() < 1e-14);
        residual_ok(&b, &e);
    }

    #[test]
    fn zero_matrix() {
        let e = symmetric_eigen(Array2::<f64>::zeros((4, 4)).view()).unwrap();
        assert!(e.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_asymmetric() {
        assert!(symmetric_eigen(array![[0.0, 1.0], [0.0, 0.0]].view()).is_err());
    }

    #[test]
    fn cholesky_solves() {
        let m = array![[4.0, 2.0, 0.0], [2.0, 5.0, 1.0], [0.0, 1.0, 3.0]];
        let l = cholesky(m.view()).unwrap();
        let rhs = array![[1.0], [2.0], [3.0]];
        let x = cholesky_solve(l.view(), rhs.view());
        let back = m.dot(&x);
        for i in 0..3 {
            assert!((back[[i, 0]] - rhs[[i, 0]]).abs() < 1e-12);
        }
        assert!(cholesky(array![[1.0, 2.0], [2.0, 1.0]].view()).is_err());
    }

    proptest! {
        #[test]
        fn random_symmetric_decomposes(n in 1usize..12, entries in proptest::collection::vec(-5.0f64..5.0, 144)) {
            let mut b = Array2::zeros((n, n));
            for i in 0..n {
                for j in i..n {
                    b[[i, j]] = entries[i * 12 + j];
                    b[[j, i]] = entries[i * 12 + j];
                }
            }
            let e = symmetric_eigen(b.view()).unwrap();
            residual_ok(&b, &e);
            prop_assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        }
    }
}
