//! Symmetric eigendecomposition by cyclic Jacobi rotations.

use super::Mat;
use crate::scalar::{sc, Scalar};

/// Eigendecomposition of a symmetric matrix: `A = V diag(w) V^T`.
///
/// Returns eigenvalues in descending order with matching eigenvector columns.
/// The input is treated as exactly symmetric; only the upper triangle drives
/// the rotations after an initial symmetrization of the working copy.
pub fn eigh<T: Scalar>(a: &Mat<T>) -> (Vec<T>, Mat<T>) {
    assert!(a.is_square(), "eigh requires a square matrix");
    let n = a.rows();
    if n == 0 {
        return (Vec::new(), Mat::zeros(0, 0));
    }
    let mut m = a.symmetrized();
    let mut v = Mat::identity(n);

    let eps = T::epsilon();
    let fro = m.fro_norm();
    let stop = eps * T::max(fro, T::one()) * sc(n as f64);

    for _sweep in 0..64 {
        let mut off = T::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                off = off + m[(i, j)] * m[(i, j)];
            }
        }
        if (off + off).sqrt() <= stop {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.abs() <= eps * stop {
                    continue;
                }
                let tau = (m[(q, q)] - m[(p, p)]) / (sc::<T>(2.0) * apq);
                let t = {
                    let d = (T::one() + tau * tau).sqrt();
                    if tau >= T::zero() {
                        T::one() / (tau + d)
                    } else {
                        T::one() / (tau - d)
                    }
                };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = t * c;

                // Rotate rows/columns p and q of m.
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                // Accumulate the eigenvector rotation.
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let w: Vec<T> = (0..n).map(|i| m[(i, i)]).collect();
    order.sort_by(|&i, &j| w[j].partial_cmp(&w[i]).expect("finite eigenvalues"));

    let sorted_w: Vec<T> = order.iter().map(|&i| w[i]).collect();
    let sorted_v = Mat::from_fn(n, n, |i, j| v[(i, order[j])]);
    (sorted_w, sorted_v)
}
