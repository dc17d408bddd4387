//! LU factorization with partial pivoting.

use super::Mat;
use crate::scalar::Scalar;

/// `P A = L U` factorization of a square matrix.
pub struct Lu<T> {
    lu: Mat<T>,
    piv: Vec<usize>,
    sign: T,
    singular: bool,
}

impl<T: Scalar> Lu<T> {
    pub fn factor(a: &Mat<T>) -> Self {
        assert!(a.is_square(), "LU requires a square matrix");
        let n = a.rows();
        let mut lu = a.clone();
        let mut piv: Vec<usize> = (0..n).collect();
        let mut sign = T::one();
        let mut singular = false;

        for k in 0..n {
            let mut p = k;
            let mut best = lu[(k, k)].abs();
            for i in (k + 1)..n {
                let v = lu[(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == T::zero() {
                singular = true;
                continue;
            }
            if p != k {
                lu.swap_rows(p, k);
                piv.swap(p, k);
                sign = -sign;
            }
            let pivot = lu[(k, k)];
            for i in (k + 1)..n {
                let m = lu[(i, k)] / pivot;
                lu[(i, k)] = m;
                if m != T::zero() {
                    for j in (k + 1)..n {
                        let u = lu[(k, j)];
                        lu[(i, j)] = lu[(i, j)] - m * u;
                    }
                }
            }
        }

        Lu {
            lu,
            piv,
            sign,
            singular,
        }
    }

    pub fn is_singular(&self) -> bool {
        self.singular
    }

    pub fn det(&self) -> T {
        if self.singular {
            return T::zero();
        }
        let mut d = self.sign;
        for i in 0..self.lu.rows() {
            d *= self.lu[(i, i)];
        }
        d
    }

    /// Solves `A x = b`. Returns `None` when the factorization is singular.
    pub fn solve(&self, b: &[T]) -> Option<Vec<T>> {
        if self.singular {
            return None;
        }
        let n = self.lu.rows();
        assert_eq!(b.len(), n);
        let mut x: Vec<T> = self.piv.iter().map(|&p| b[p]).collect();
        for i in 1..n {
            let mut s = x[i];
            for j in 0..i {
                s = s - self.lu[(i, j)] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in (i + 1)..n {
                s = s - self.lu[(i, j)] * x[j];
            }
            x[i] = s / self.lu[(i, i)];
        }
        Some(x)
    }

    pub fn inverse(&self) -> Option<Mat<T>> {
        if self.singular {
            return None;
        }
        let n = self.lu.rows();
        let mut inv = Mat::zeros(n, n);
        let mut e = vec![T::zero(); n];
        for j in 0..n {
            e[j] = T::one();
            let col = self.solve(&e)?;
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
            e[j] = T::zero();
        }
        Some(inv)
    }
}

impl<T: Scalar> Mat<T> {
    /// Determinant via LU.
    pub fn det(&self) -> T {
        Lu::factor(self).det()
    }

    /// Inverse via LU; `None` when singular.
    pub fn inverse(&self) -> Option<Mat<T>> {
        Lu::factor(self).inverse()
    }

    /// One-norm condition estimate `‖A‖₁ ‖A⁻¹‖₁`; infinity when singular.
    pub fn cond_one(&self) -> T {
        match self.inverse() {
            Some(inv) => self.one_norm() * inv.one_norm(),
            None => T::infinity(),
        }
    }
}
