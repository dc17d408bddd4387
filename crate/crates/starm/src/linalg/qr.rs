//! Householder QR with full Q.

use super::Mat;
use crate::scalar::{sc, Scalar};

/// Full QR factorization `A = Q R` with `Q` square orthogonal (rows×rows)
/// and `R` upper trapezoidal (rows×cols).
pub fn qr<T: Scalar>(a: &Mat<T>) -> (Mat<T>, Mat<T>) {
    let (m, n) = (a.rows(), a.cols());
    let mut r = a.clone();
    let mut q = Mat::identity(m);

    for k in 0..n.min(m.saturating_sub(1)) {
        // Householder vector for column k below the diagonal.
        let mut norm = T::zero();
        for i in k..m {
            norm = norm + r[(i, k)] * r[(i, k)];
        }
        let norm = norm.sqrt();
        if norm == T::zero() {
            continue;
        }
        let alpha = if r[(k, k)] >= T::zero() { -norm } else { norm };
        let mut v = vec![T::zero(); m];
        v[k] = r[(k, k)] - alpha;
        for i in (k + 1)..m {
            v[i] = r[(i, k)];
        }
        let vtv: T = v[k..].iter().map(|&x| x * x).sum();
        if vtv == T::zero() {
            continue;
        }
        let beta = sc::<T>(2.0) / vtv;

        // R <- (I - beta v v^T) R
        for j in k..n {
            let s: T = (k..m).map(|i| v[i] * r[(i, j)]).sum();
            let s = s * beta;
            for i in k..m {
                r[(i, j)] = r[(i, j)] - s * v[i];
            }
        }
        // Q <- Q (I - beta v v^T)
        for i in 0..m {
            let s: T = (k..m).map(|j| q[(i, j)] * v[j]).sum();
            let s = s * beta;
            for j in k..m {
                q[(i, j)] = q[(i, j)] - s * v[j];
            }
        }
    }
    (q, r)
}
