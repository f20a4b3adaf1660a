//! Small dense linear-algebra kernels.
//!
//! Everything here operates on matrices no larger than a few hundred rows,
//! so plain textbook algorithms (Cholesky, cyclic Jacobi, triangular solves)
//! are both fast enough and bit-deterministic.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

/// Replaces `a` with its symmetric part `(a + a^T) / 2`.
pub fn symmetrize(a: &mut Array2<f64>) {
    let p = a.nrows();
    debug_assert_eq!(p, a.ncols());
    for i in 0..p {
        for j in (i + 1)..p {
            let m = 0.5 * (a[[i, j]] + a[[j, i]]);
            a[[i, j]] = m;
            a[[j, i]] = m;
        }
    }
}

/// Maximum absolute asymmetry `max |a_ij - a_ji|`.
pub fn asymmetry(a: &Array2<f64>) -> f64 {
    let p = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..p {
        for j in (i + 1)..p {
            worst = worst.max((a[[i, j]] - a[[j, i]]).abs());
        }
    }
    worst
}

/// Trace of a square matrix.
pub fn trace(a: &Array2<f64>) -> f64 {
    a.diag().sum()
}

/// Squared Frobenius norm (equals `Tr(a a^T)`; for symmetric `a`, `Tr(a^2)`).
pub fn frobenius_sq(a: &Array2<f64>) -> f64 {
    a.iter().map(|x| x * x).sum()
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
///
/// Returns `None` when a pivot is not strictly positive, which callers treat
/// as "fall back to the eigendecomposition route".
pub fn cholesky(a: &Array2<f64>) -> Option<Array2<f64>> {
    let p = a.nrows();
    let mut l = Array2::<f64>::zeros((p, p));
    for j in 0..p {
        let mut d = a[[j, j]];
        for k in 0..j {
            d -= l[[j, k]] * l[[j, k]];
        }
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        let root = d.sqrt();
        l[[j, j]] = root;
        for i in (j + 1)..p {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = s / root;
        }
    }
    Some(l)
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order with the matching eigenvectors as
/// columns, so `v * diag(vals) * v^T` reconstructs the input.
pub fn symmetric_eigen(a: &Array2<f64>) -> (Array1<f64>, Array2<f64>) {
    let p = a.nrows();
    debug_assert_eq!(p, a.ncols());
    let mut m = a.clone();
    symmetrize(&mut m);
    let mut v = Array2::<f64>::eye(p);
    let scale = frobenius_sq(&m).sqrt().max(f64::MIN_POSITIVE);
    let tol = 1e-14 * scale;
    let max_sweeps = 64;

    for _ in 0..max_sweeps {
        let mut off = 0.0f64;
        for i in 0..p {
            for j in (i + 1)..p {
                off += m[[i, j]] * m[[i, j]];
            }
        }
        if (2.0 * off).sqrt() <= tol {
            break;
        }
        for i in 0..(p.saturating_sub(1)) {
            for j in (i + 1)..p {
                let apq = m[[i, j]];
                if apq.abs() <= tol * 1e-2 {
                    continue;
                }
                let theta = (m[[j, j]] - m[[i, i]]) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // Rotate rows/columns i and j of m.
                for k in 0..p {
                    let mik = m[[i, k]];
                    let mjk = m[[j, k]];
                    m[[i, k]] = c * mik - s * mjk;
                    m[[j, k]] = s * mik + c * mjk;
                }
                for k in 0..p {
                    let mki = m[[k, i]];
                    let mkj = m[[k, j]];
                    m[[k, i]] = c * mki - s * mkj;
                    m[[k, j]] = s * mki + c * mkj;
                }
                for k in 0..p {
                    let vki = v[[k, i]];
                    let vkj = v[[k, j]];
                    v[[k, i]] = c * vki - s * vkj;
                    v[[k, j]] = s * vki + c * vkj;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&x, &y| m[[x, x]].partial_cmp(&m[[y, y]]).unwrap());
    let vals = Array1::from_iter(order.iter().map(|&k| m[[k, k]]));
    let mut vecs = Array2::<f64>::zeros((p, p));
    for (col, &k) in order.iter().enumerate() {
        for row in 0..p {
            vecs[[row, col]] = v[[row, k]];
        }
    }
    (vals, vecs)
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(a: &Array2<f64>) -> f64 {
    symmetric_eigen(a).0[0]
}

/// Lower-triangular factor `l` with `l * l^H = a` for Hermitian positive
/// definite `a`; `None` when a pivot is not strictly positive.
pub fn hermitian_cholesky(a: &Array2<Complex64>) -> Option<Array2<Complex64>> {
    let p = a.nrows();
    let mut l = Array2::<Complex64>::zeros((p, p));
    for j in 0..p {
        let mut d = a[[j, j]].re;
        for k in 0..j {
            d -= l[[j, k]].norm_sqr();
        }
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        let root = d.sqrt();
        l[[j, j]] = Complex64::new(root, 0.0);
        for i in (j + 1)..p {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]].conj();
            }
            l[[i, j]] = s / root;
        }
    }
    Some(l)
}

/// Solves `a x = b` given the Hermitian Cholesky factor `l` of `a`.
pub fn hermitian_solve(l: &Array2<Complex64>, b: &Array1<Complex64>) -> Array1<Complex64> {
    let p = l.nrows();
    // Forward: l y = b.
    let mut y = Array1::<Complex64>::zeros(p);
    for i in 0..p {
        let mut s = b[i];
        for k in 0..i {
            s -= l[[i, k]] * y[k];
        }
        y[i] = s / l[[i, i]];
    }
    // Backward: l^H x = y.
    let mut x = Array1::<Complex64>::zeros(p);
    for i in (0..p).rev() {
        let mut s = y[i];
        for k in (i + 1)..p {
            s -= l[[k, i]].conj() * x[k];
        }
        x[i] = s / l[[i, i]].conj();
    }
    x
}
