//! Singular value decomposition by one-sided Jacobi orthogonalization.

use super::Mat;
use crate::scalar::{sc, Scalar};

/// Thin or full SVD factors: `A = U diag(s) V^T` with `s` descending.
#[derive(Debug, Clone)]
pub struct Svd<T> {
    pub u: Mat<T>,
    pub s: Vec<T>,
    pub v: Mat<T>,
}

/// One-sided Jacobi SVD.
///
/// With `full_u`/`full_v` false the factors are thin: `u` is `m x min(m,n)`
/// and `v` is `n x min(m,n)`. A true flag pads the corresponding factor to a
/// square orthogonal matrix by Gram-Schmidt completion.
pub fn svd<T: Scalar>(a: &Mat<T>, full_u: bool, full_v: bool) -> Svd<T> {
    let (m, n) = (a.rows(), a.cols());
    if m < n {
        // Orthogonalize the short side, then swap factors.
        let t = svd(&a.transpose(), full_v, full_u);
        return Svd {
            u: t.v,
            s: t.s,
            v: t.u,
        };
    }
    let k = n;
    // Work on columns of a copy of A; rotations accumulate into V.
    let mut w = a.clone();
    let mut v = Mat::identity(n);

    let eps = T::epsilon();
    let tol = eps * sc::<T>((m.max(1)) as f64);
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let mut app = T::zero();
                let mut aqq = T::zero();
                let mut apq = T::zero();
                for i in 0..m {
                    app += w[(i, p)] * w[(i, p)];
                    aqq += w[(i, q)] * w[(i, q)];
                    apq += w[(i, p)] * w[(i, q)];
                }
                if apq.abs() <= tol * (app * aqq).sqrt() || apq == T::zero() {
                    continue;
                }
                rotated = true;
                let tau = (aqq - app) / (sc::<T>(2.0) * apq);
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
                for i in 0..m {
                    let wp = w[(i, p)];
                    let wq = w[(i, q)];
                    w[(i, p)] = c * wp - s * wq;
                    w[(i, q)] = s * wp + c * wq;
                }
                for i in 0..n {
                    let vp = v[(i, p)];
                    let vq = v[(i, q)];
                    v[(i, p)] = c * vp - s * vq;
                    v[(i, q)] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    // Column norms are the singular values; normalize columns into U.
    let mut sv: Vec<(T, usize)> = (0..n)
        .map(|j| {
            let mut s2 = T::zero();
            for i in 0..m {
                s2 += w[(i, j)] * w[(i, j)];
            }
            (s2.sqrt(), j)
        })
        .collect();
    sv.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite singular values"));

    let mut s = Vec::with_capacity(k);
    let mut u = Mat::zeros(m, k);
    let mut vs = Mat::zeros(n, k);
    for (out, &(sig, j)) in sv.iter().enumerate() {
        s.push(sig);
        if sig > T::zero() {
            for i in 0..m {
                u[(i, out)] = w[(i, j)] / sig;
            }
        }
        for i in 0..n {
            vs[(i, out)] = v[(i, j)];
        }
    }
    // Columns of U for zero singular values are still zero; fill them with
    // any orthonormal completion so U has orthonormal columns.
    fill_zero_columns(&mut u);

    let u = if full_u { complete_orthonormal(&u, m) } else { u };
    let v = if full_v {
        complete_orthonormal(&vs, n)
    } else {
        vs
    };
    Svd { u, s, v }
}

fn fill_zero_columns<T: Scalar>(u: &mut Mat<T>) {
    let (m, k) = (u.rows(), u.cols());
    let mut zero_cols = Vec::new();
    for j in 0..k {
        let mut norm2 = T::zero();
        for i in 0..m {
            norm2 += u[(i, j)] * u[(i, j)];
        }
        if norm2 < sc::<T>(0.5) {
            zero_cols.push(j);
        }
    }
    if zero_cols.is_empty() {
        return;
    }
    let filled = complete_orthonormal(u, k.min(m).max(k));
    for &j in &zero_cols {
        for i in 0..m {
            u[(i, j)] = filled[(i, j)];
        }
    }
}

/// Extend a matrix with orthonormal (possibly zero) columns to `total`
/// orthonormal columns by Gram-Schmidt over standard basis candidates.
///
/// Existing nonzero columns are kept as they are; zero columns and columns
/// beyond the current count are replaced by new orthonormal directions.
pub fn complete_orthonormal<T: Scalar>(q: &Mat<T>, total: usize) -> Mat<T> {
    let m = q.rows();
    let total = total.min(m);
    let mut cols: Vec<Vec<T>> = Vec::with_capacity(total);
    let half = sc::<T>(0.5);
    for j in 0..q.cols().min(total) {
        let cj = q.col(j);
        let norm2: T = cj.iter().map(|&x| x * x).sum();
        if norm2 > half {
            cols.push(cj);
        } else {
            cols.push(Vec::new()); // placeholder to fill below
        }
    }
    while cols.len() < total {
        cols.push(Vec::new());
    }

    let mut candidates = (0..m).cycle();
    for slot in 0..total {
        if !cols[slot].is_empty() {
            continue;
        }
        let mut tried = 0;
        'search: loop {
            tried += 1;
            assert!(tried <= 2 * m + 2, "orthonormal completion failed");
            let e = candidates.next().expect("cycle is endless");
            let mut x = vec![T::zero(); m];
            x[e] = T::one();
            // Two rounds of classical Gram-Schmidt for stability.
            for _ in 0..2 {
                for c in cols.iter().filter(|c| !c.is_empty()) {
                    let dot: T = c.iter().zip(&x).map(|(&a, &b)| a * b).sum();
                    for (xi, &ci) in x.iter_mut().zip(c) {
                        *xi -= dot * ci;
                    }
                }
            }
            let norm: T = x.iter().map(|&v| v * v).sum::<T>().sqrt();
            if norm > sc(1e-3) {
                for xi in &mut x {
                    *xi /= norm;
                }
                cols[slot] = x;
                break 'search;
            }
        }
    }
    Mat::from_fn(m, total, |i, j| cols[j][i])
}

/// Orthonormal basis of the kernel of `a`.
///
/// Directions whose singular value is at most `rel_tol` times the largest
/// singular value count as null directions; for a zero matrix every right
/// singular vector is returned. Columns of the result are orthonormal.
pub fn null_space<T: Scalar>(a: &Mat<T>, rel_tol: T) -> Mat<T> {
    let n = a.cols();
    if n == 0 {
        return Mat::zeros(0, 0);
    }
    if a.rows() == 0 {
        return Mat::identity(n);
    }
    let dec = svd(a, false, true);
    let smax = dec.s.first().copied().unwrap_or_else(T::zero);
    let cut = rel_tol * smax;
    let mut keep = Vec::new();
    for j in 0..n {
        let sj = if j < dec.s.len() {
            dec.s[j]
        } else {
            T::zero()
        };
        if sj <= cut {
            keep.push(j);
        }
    }
    Mat::from_fn(n, keep.len(), |i, j| dec.v[(i, keep[j])])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thin_svd_reconstructs() {
        let a: Mat<f64> = Mat::from_rows(&[
            vec![1.0, 2.0],
            vec![3.0, 4.0],
            vec![5.0, 6.0],
        ]);
        let d = svd(&a, false, false);
        assert_eq!(d.u.rows(), 3);
        assert_eq!(d.u.cols(), 2);
        let mut rec = Mat::zeros(3, 2);
        for i in 0..3 {
            for j in 0..2 {
                for k in 0..2 {
                    rec[(i, j)] += d.u[(i, k)] * d.s[k] * d.v[(j, k)];
                }
            }
        }
        assert!(rec.sub(&a).max_abs() < 1e-12);
        assert!(d.u.ortho_defect() < 1e-12);
        assert!(d.v.ortho_defect() < 1e-12);
        assert!(d.s[0] >= d.s[1] && d.s[1] >= 0.0);
    }

    #[test]
    fn wide_matrix_swaps_sides() {
        let a: Mat<f64> = Mat::from_rows(&[vec![1.0, 0.0, 2.0], vec![0.0, 3.0, 0.0]]);
        let d = svd(&a, true, true);
        assert_eq!(d.u.rows(), 2);
        assert_eq!(d.u.cols(), 2);
        assert_eq!(d.v.rows(), 3);
        assert_eq!(d.v.cols(), 3);
        let mut rec = Mat::zeros(2, 3);
        for i in 0..2 {
            for j in 0..3 {
                for k in 0..2 {
                    rec[(i, j)] += d.u[(i, k)] * d.s[k] * d.v[(j, k)];
                }
            }
        }
        assert!(rec.sub(&a).max_abs() < 1e-12);
        assert!(d.v.ortho_defect() < 1e-12);
    }

    #[test]
    fn rank_deficient_null_space() {
        // Rows are multiples of (1, 1, 0): kernel is span{(1,-1,0)/sqrt2, (0,0,1)}.
        let a: Mat<f64> = Mat::from_rows(&[vec![1.0, 1.0, 0.0], vec![2.0, 2.0, 0.0]]);
        let ns = null_space(&a, 1e-10);
        assert_eq!(ns.cols(), 2);
        assert!(ns.ortho_defect() < 1e-12);
        let prod = a.mul(&ns);
        assert!(prod.max_abs() < 1e-12);
    }

    #[test]
    fn zero_matrix_null_space_is_identity_sized() {
        let ns = null_space(&Mat::<f64>::zeros(2, 4), 1e-10);
        assert_eq!(ns.cols(), 4);
        assert!(ns.ortho_defect() < 1e-12);
    }

    #[test]
    fn singular_values_match_eigenvalues_of_gram() {
        let a: Mat<f64> = Mat::from_rows(&[vec![2.0, 0.0], vec![0.0, -5.0], vec![1.0, 1.0]]);
        let d = svd(&a, false, false);
        let g = a.transpose().mul(&a);
        let (w, _) = crate::linalg::eigh(&g);
        for (sig, lam) in d.s.iter().zip(w) {
            assert!((sig * sig - lam).abs() < 1e-10);
        }
    }

    #[test]
    fn completion_produces_square_orthogonal() {
        let q: Mat<f64> = Mat::from_rows(&[vec![1.0], vec![0.0], vec![0.0]]);
        let full = complete_orthonormal(&q, 3);
        assert_eq!(full.cols(), 3);
        assert!(full.ortho_defect() < 1e-12);
        assert_eq!(full[(0, 0)], 1.0);
    }
}
