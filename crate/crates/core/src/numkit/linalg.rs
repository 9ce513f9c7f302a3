//! Small symmetric solves, generic over the scalar so they also run inside
//! jets (the matrices here are at most the manifold dimension).

use super::scalar::Scalar;

/// Lower Cholesky factor of a symmetric positive-definite matrix, row-major.
/// Returns `None` when a pivot is non-positive or non-finite; this is the
/// strict form used for admissibility checks.
pub fn spd_cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    assert_eq!(a.len(), n * n, "matrix storage mismatch");
    let mut l = vec![0.0f64; n * n];
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        let dj = d.sqrt();
        l[j * n + j] = dj;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / dj;
        }
    }
    Some(l)
}

/// Cholesky factor without a failure path: value parts must be positive,
/// which holds at admissible base points; otherwise `sqrt`/`recip` poison
/// the evaluation and NaNs propagate to the caller's finiteness checks.
fn cholesky_generic<S: Scalar>(a: &[S], n: usize) -> Vec<S> {
    assert_eq!(a.len(), n * n, "matrix storage mismatch");
    let mut l = vec![S::zero(); n * n];
    for j in 0..n {
        let mut d = a[j * n + j].clone();
        for k in 0..j {
            d -= l[j * n + k].mul_ref(&l[j * n + k]);
        }
        let dj = d.sqrt();
        let idj = dj.recip();
        l[j * n + j] = dj;
        for i in (j + 1)..n {
            let mut s = a[i * n + j].clone();
            for k in 0..j {
                s -= l[i * n + k].mul_ref(&l[j * n + k]);
            }
            l[i * n + j] = s.mul_ref(&idj);
        }
    }
    l
}

/// Solves `a x = rhs` for symmetric positive-definite `a`, row-major.
pub fn solve_spd<S: Scalar>(a: &[S], n: usize, rhs: &[S]) -> Vec<S> {
    assert_eq!(rhs.len(), n, "right-hand side length mismatch");
    let l = cholesky_generic(a, n);
    let mut y = vec![S::zero(); n];
    for i in 0..n {
        let mut s = rhs[i].clone();
        for k in 0..i {
            s -= l[i * n + k].mul_ref(&y[k]);
        }
        y[i] = s / l[i * n + i].clone();
    }
    let mut x = vec![S::zero(); n];
    for i in (0..n).rev() {
        let mut s = y[i].clone();
        for k in (i + 1)..n {
            s -= l[k * n + i].mul_ref(&x[k]);
        }
        x[i] = s / l[i * n + i].clone();
    }
    x
}

/// Inverse of a symmetric positive-definite matrix, row-major.
pub fn invert_spd<S: Scalar>(a: &[S], n: usize) -> Vec<S> {
    let mut inv = vec![S::zero(); n * n];
    for col in 0..n {
        let mut e = vec![S::zero(); n];
        e[col] = S::one();
        let x = solve_spd(a, n, &e);
        for row in 0..n {
            inv[row * n + col] = x[row].clone();
        }
    }
    inv
}
