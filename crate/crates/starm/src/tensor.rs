//! Dense order-3 tensors and their transform-free structural operations.
//!
//! A [`Tensor3`] stores its entries slice-major: frontal slice `k` occupies a
//! contiguous row-major block, so per-slice algorithms can work on `&[T]`
//! views without copying. Tubes (1x1xn3 tensors) get their own lightweight
//! type because so much of the algebra is tube-valued.

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::scalar::Scalar;

/// Dense real order-3 tensor with extents `(n1, n2, n3)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3<T> {
    n1: usize,
    n2: usize,
    n3: usize,
    data: Vec<T>,
}

/// A length-`n3` tube, interchangeable with a 1x1xn3 [`Tensor3`].
#[derive(Debug, Clone, PartialEq)]
pub struct Tube<T> {
    data: Vec<T>,
}

impl<T: Scalar> Tensor3<T> {
    /// All-zero tensor. `n3` must be positive; `n1` and `n2` may be zero
    /// (empty tensors arise as degenerate SVD factors).
    pub fn zeros(n1: usize, n2: usize, n3: usize) -> Self {
        assert!(n3 > 0, "tensor needs at least one frontal slice");
        Tensor3 {
            n1,
            n2,
            n3,
            data: vec![T::zero(); n1 * n2 * n3],
        }
    }

    /// Build from a slice-major, row-major-within-slice buffer.
    pub fn from_data(n1: usize, n2: usize, n3: usize, data: Vec<T>) -> Result<Self> {
        if n3 == 0 {
            return Err(Error::InvalidArgument(
                "tensor needs at least one frontal slice".into(),
            ));
        }
        if data.len() != n1 * n2 * n3 {
            return Err(Error::DimensionMismatch(format!(
                "data length {} does not match extents {}x{}x{}",
                data.len(),
                n1,
                n2,
                n3
            )));
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        Ok(Tensor3 { n1, n2, n3, data })
    }

    /// Build entrywise from a function of `(i, j, k)`.
    pub fn from_fn(n1: usize, n2: usize, n3: usize, mut f: impl FnMut(usize, usize, usize) -> T) -> Self {
        let mut t = Tensor3::zeros(n1, n2, n3);
        for k in 0..n3 {
            for i in 0..n1 {
                for j in 0..n2 {
                    t[(i, j, k)] = f(i, j, k);
                }
            }
        }
        t
    }

    /// Tensor whose every frontal slice is the `n x n` identity.
    pub fn facewise_identity(n: usize, n3: usize) -> Self {
        Tensor3::from_fn(n, n, n3, |i, j, _| if i == j { T::one() } else { T::zero() })
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn n3(&self) -> usize {
        self.n3
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.n1, self.n2, self.n3)
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        debug_assert!(i < self.n1 && j < self.n2 && k < self.n3);
        k * self.n1 * self.n2 + i * self.n2 + j
    }

    /// Borrow frontal slice `k` as a row-major block.
    pub fn slice(&self, k: usize) -> &[T] {
        let len = self.n1 * self.n2;
        &self.data[k * len..(k + 1) * len]
    }

    /// Frontal slice `k` as a matrix copy.
    pub fn slice_mat(&self, k: usize) -> Mat<T> {
        Mat::from_row_major(self.n1, self.n2, self.slice(k).to_vec())
    }

    /// Overwrite frontal slice `k` from a matrix.
    pub fn set_slice(&mut self, k: usize, m: &Mat<T>) {
        assert_eq!((m.rows(), m.cols()), (self.n1, self.n2), "slice shape");
        let len = self.n1 * self.n2;
        self.data[k * len..(k + 1) * len].copy_from_slice(m.data());
    }

    /// The tube at position `(i, j)` as a plain vector.
    pub fn tube_vec(&self, i: usize, j: usize) -> Vec<T> {
        (0..self.n3).map(|k| self[(i, j, k)]).collect()
    }

    /// The tube at position `(i, j)`.
    pub fn tube_at(&self, i: usize, j: usize) -> Tube<T> {
        Tube {
            data: self.tube_vec(i, j),
        }
    }

    /// Overwrite the tube at `(i, j)`.
    pub fn set_tube(&mut self, i: usize, j: usize, v: &[T]) {
        assert_eq!(v.len(), self.n3, "tube length");
        for (k, &x) in v.iter().enumerate() {
            self[(i, j, k)] = x;
        }
    }

    /// Mode-3 product: every tube is replaced by `M` times itself. `M` may be
    /// rectangular, changing the number of frontal slices.
    pub fn mode3_product(&self, m: &Mat<T>) -> Result<Tensor3<T>> {
        if m.cols() != self.n3 {
            return Err(Error::DimensionMismatch(format!(
                "mode-3 factor has {} columns but tensor has {} slices",
                m.cols(),
                self.n3
            )));
        }
        if m.rows() == 0 {
            return Err(Error::InvalidArgument(
                "mode-3 factor must have at least one row".into(),
            ));
        }
        let mut out = Tensor3::zeros(self.n1, self.n2, m.rows());
        for i in 0..self.n1 {
            for j in 0..self.n2 {
                let v = self.tube_vec(i, j);
                let w = m.matvec(&v);
                out.set_tube(i, j, &w);
            }
        }
        Ok(out)
    }

    /// Facewise product: frontal slices multiply pairwise as matrices.
    pub fn facewise_product(&self, other: &Tensor3<T>) -> Result<Tensor3<T>> {
        if self.n2 != other.n1 || self.n3 != other.n3 {
            return Err(Error::DimensionMismatch(format!(
                "facewise product of {}x{}x{} with {}x{}x{}",
                self.n1, self.n2, self.n3, other.n1, other.n2, other.n3
            )));
        }
        let mut out = Tensor3::zeros(self.n1, other.n2, self.n3);
        for k in 0..self.n3 {
            let c = self.slice_mat(k).mul(&other.slice_mat(k));
            out.set_slice(k, &c);
        }
        Ok(out)
    }

    /// Block-diagonal matrix with the frontal slices along the diagonal.
    pub fn bdiag(&self) -> Mat<T> {
        let mut out = Mat::zeros(self.n1 * self.n3, self.n2 * self.n3);
        for k in 0..self.n3 {
            out.set_block(k * self.n1, k * self.n2, &self.slice_mat(k));
        }
        out
    }

    /// Matricization into an `n1` x `n2` grid of diagonal blocks
    /// `diag(M vec(a_ij))`.
    pub fn mat_m(&self, m: &Mat<T>) -> Result<Mat<T>> {
        if !m.is_square() || m.rows() != self.n3 {
            return Err(Error::DimensionMismatch(format!(
                "matricization transform is {}x{} but tensor has {} slices",
                m.rows(),
                m.cols(),
                self.n3
            )));
        }
        let n3 = self.n3;
        let mut out = Mat::zeros(self.n1 * n3, self.n2 * n3);
        for i in 0..self.n1 {
            for j in 0..self.n2 {
                let d = m.matvec(&self.tube_vec(i, j));
                for k in 0..n3 {
                    out[(i * n3 + k, j * n3 + k)] = d[k];
                }
            }
        }
        Ok(out)
    }

    /// Entrywise inner product.
    pub fn inner_product(&self, other: &Tensor3<T>) -> Result<T> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch(format!(
                "inner product of {:?} with {:?}",
                self.shape(),
                other.shape()
            )));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| a * b)
            .sum())
    }

    /// Frobenius norm.
    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|&x| x * x).sum::<T>().sqrt()
    }

    /// Largest absolute entry (zero for empty tensors).
    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, &x| T::max(acc, x.abs()))
    }

    /// Transpose every frontal slice; extents become `(n2, n1, n3)`.
    pub fn facewise_transpose(&self) -> Tensor3<T> {
        Tensor3::from_fn(self.n2, self.n1, self.n3, |i, j, k| self[(j, i, k)])
    }

    /// Entrywise difference.
    pub fn sub(&self, other: &Tensor3<T>) -> Result<Tensor3<T>> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch(format!(
                "difference of {:?} with {:?}",
                self.shape(),
                other.shape()
            )));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| a - b)
            .collect();
        Ok(Tensor3 {
            n1: self.n1,
            n2: self.n2,
            n3: self.n3,
            data,
        })
    }

    /// Entrywise sum.
    pub fn add(&self, other: &Tensor3<T>) -> Result<Tensor3<T>> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch(format!(
                "sum of {:?} with {:?}",
                self.shape(),
                other.shape()
            )));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| a + b)
            .collect();
        Ok(Tensor3 {
            n1: self.n1,
            n2: self.n2,
            n3: self.n3,
            data,
        })
    }

    /// Entrywise scaling.
    pub fn scale(&self, factor: T) -> Tensor3<T> {
        Tensor3 {
            n1: self.n1,
            n2: self.n2,
            n3: self.n3,
            data: self.data.iter().map(|&x| x * factor).collect(),
        }
    }

    /// Mode-3 unfolding: row `k` lists slice `k` in row-major scan order, so
    /// the result is `n3 x (n1 n2)`.
    pub fn unfold3(&self) -> Mat<T> {
        Mat::from_fn(self.n3, self.n1 * self.n2, |k, c| {
            self[(c / self.n2, c % self.n2, k)]
        })
    }

    /// True when all frontal slices are symmetric to within `tol` (largest
    /// absolute asymmetry).
    pub fn slices_symmetric_within(&self, tol: T) -> bool {
        if self.n1 != self.n2 {
            return false;
        }
        (0..self.n3).all(|k| self.slice_mat(k).symmetry_defect() <= tol)
    }

    /// Approximate elementwise equality with the crate-default mixed
    /// absolute/relative tolerance.
    pub fn approx_eq(&self, other: &Tensor3<T>) -> bool {
        self.approx_eq_tol(other, crate::scalar::sc(1e-10), crate::scalar::sc(1e-8))
    }

    /// Approximate elementwise equality: entries must satisfy
    /// `|a - b| <= abs_tol + rel_tol * max(|a|, |b|)`.
    pub fn approx_eq_tol(&self, other: &Tensor3<T>, abs_tol: T, rel_tol: T) -> bool {
        self.shape() == other.shape()
            && self.data.iter().zip(&other.data).all(|(&a, &b)| {
                (a - b).abs() <= abs_tol + rel_tol * T::max(a.abs(), b.abs())
            })
    }
}

impl<T: Scalar> std::ops::Index<(usize, usize, usize)> for Tensor3<T> {
    type Output = T;
    fn index(&self, (i, j, k): (usize, usize, usize)) -> &T {
        &self.data[self.idx(i, j, k)]
    }
}

impl<T: Scalar> std::ops::IndexMut<(usize, usize, usize)> for Tensor3<T> {
    fn index_mut(&mut self, (i, j, k): (usize, usize, usize)) -> &mut T {
        let n = self.idx(i, j, k);
        &mut self.data[n]
    }
}

impl<T: Scalar> Tube<T> {
    /// Wrap a vector as a tube. Empty input is rejected.
    pub fn new(v: Vec<T>) -> Result<Self> {
        if v.is_empty() {
            return Err(Error::InvalidArgument("tube must have positive length".into()));
        }
        if let Some(pos) = v.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        Ok(Tube { data: v })
    }

    /// All-zero tube.
    pub fn zeros(n3: usize) -> Self {
        assert!(n3 > 0, "tube must have positive length");
        Tube {
            data: vec![T::zero(); n3],
        }
    }

    pub fn n3(&self) -> usize {
        self.data.len()
    }

    /// The underlying coefficients (the `vec` side of the tube/vec pair).
    pub fn as_vec(&self) -> &[T] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    /// View as a 1x1xn3 tensor.
    pub fn to_tensor(&self) -> Tensor3<T> {
        Tensor3 {
            n1: 1,
            n2: 1,
            n3: self.data.len(),
            data: self.data.clone(),
        }
    }

    /// Extract the tube of a 1x1xn3 tensor.
    pub fn from_tensor(t: &Tensor3<T>) -> Result<Self> {
        if t.n1() != 1 || t.n2() != 1 {
            return Err(Error::DimensionMismatch(format!(
                "expected a 1x1x{} tensor, got {:?}",
                t.n3(),
                t.shape()
            )));
        }
        Ok(Tube {
            data: t.data.clone(),
        })
    }

    pub fn norm(&self) -> T {
        self.data.iter().map(|&x| x * x).sum::<T>().sqrt()
    }
}

/// Convert a vector into a tube (`tube` direction of the tube/vec pair).
pub fn tube<T: Scalar>(v: &[T]) -> Result<Tube<T>> {
    Tube::new(v.to_vec())
}

/// Read a tube's coefficients back out (`vec` direction).
pub fn vec_of<T: Scalar>(t: &Tube<T>) -> Vec<T> {
    t.as_vec().to_vec()
}

/// Partition a length `n*n3` vector into `n` tubes stacked as an `n x 1 x n3`
/// lateral slice.
pub fn fold_n3<T: Scalar>(v: &[T], n3: usize) -> Result<Tensor3<T>> {
    if n3 == 0 {
        return Err(Error::InvalidArgument("fold requires n3 > 0".into()));
    }
    if v.len() % n3 != 0 {
        return Err(Error::DimensionMismatch(format!(
            "vector length {} is not divisible by {}",
            v.len(),
            n3
        )));
    }
    let n = v.len() / n3;
    let mut t = Tensor3::zeros(n, 1, n3);
    for i in 0..n {
        t.set_tube(i, 0, &v[i * n3..(i + 1) * n3]);
    }
    Ok(t)
}

/// Inverse of [`fold_n3`]: scan tubes in row-major order into one vector.
pub fn unfold<T: Scalar>(t: &Tensor3<T>) -> Vec<T> {
    let mut v = Vec::with_capacity(t.n1() * t.n2() * t.n3());
    for i in 0..t.n1() {
        for j in 0..t.n2() {
            v.extend(t.tube_vec(i, j));
        }
    }
    v
}
