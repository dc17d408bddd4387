//! Construction and validation of the mode-3 transform matrix.
//!
//! All built-in families (identity, DCT, Haar, data-dependent, random) are
//! real orthogonal. Matrices loaded from user files may be merely invertible;
//! the cone, solver, and certification layers check orthogonality at their
//! own entry points because their guarantees need it.

use crate::error::{Error, Result};
use crate::linalg::{eigh, qr, Mat};
use crate::rng::{normal, rng_from_seed};
use crate::scalar::{sc, Scalar};
use crate::tensor::Tensor3;

/// Named transform families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformKind {
    Identity,
    Dct,
    Haar,
    DataDependent,
    Random,
    User,
}

impl std::fmt::Display for TransformKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            TransformKind::Identity => "identity",
            TransformKind::Dct => "dct",
            TransformKind::Haar => "haar",
            TransformKind::DataDependent => "data",
            TransformKind::Random => "random",
            TransformKind::User => "user",
        };
        f.write_str(name)
    }
}

/// Report from [`OrthoTransform::verify_invertible`] /
/// [`OrthoTransform::verify_orthogonal`].
#[derive(Debug, Clone)]
pub struct TransformReport<T> {
    /// One-norm condition estimate (infinite for singular matrices).
    pub condition: T,
    /// `‖MᵀM − I‖_max`.
    pub ortho_defect: T,
    /// Condition estimate below the invertibility limit.
    pub invertible: bool,
    /// Orthogonality defect within tolerance.
    pub orthogonal: bool,
}

/// An invertible mode-3 transform with its precomputed inverse.
#[derive(Debug, Clone)]
pub struct OrthoTransform<T> {
    m: Mat<T>,
    m_inv: Mat<T>,
    kind: TransformKind,
    ortho_tol: T,
    seed: Option<u64>,
}

/// Condition-number ceiling for accepting a transform as invertible.
const COND_LIMIT: f64 = 1e12;

impl<T: Scalar> OrthoTransform<T> {
    /// Wrap a square invertible matrix. Non-user kinds must be orthogonal
    /// within `ortho_tol`.
    pub fn new(m: Mat<T>, kind: TransformKind, ortho_tol: T, seed: Option<u64>) -> Result<Self> {
        if !m.is_square() || m.rows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "transform must be square and nonempty, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        if let Some(pos) = m.data().iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        let cond = m.cond_one();
        if !(cond < sc(COND_LIMIT)) {
            return Err(Error::IllConditioned {
                cond: crate::scalar::as_f64(cond),
                limit: COND_LIMIT,
            });
        }
        let defect = m.ortho_defect();
        if kind != TransformKind::User && defect > ortho_tol {
            return Err(Error::NotOrthogonal {
                defect: crate::scalar::as_f64(defect),
                tol: crate::scalar::as_f64(ortho_tol),
            });
        }
        let m_inv = m
            .inverse()
            .ok_or(Error::IllConditioned {
                cond: f64::INFINITY,
                limit: COND_LIMIT,
            })?;
        Ok(OrthoTransform {
            m,
            m_inv,
            kind,
            ortho_tol,
            seed,
        })
    }

    /// Build a named orthogonal transform of size `n3`.
    ///
    /// `haar` needs `n3` to be a power of two; `random` needs a seed and uses
    /// the orthogonal factor of a QR factorization of a seeded
    /// standard-normal matrix.
    pub fn build(kind: TransformKind, n3: usize, seed: Option<u64>) -> Result<Self> {
        if n3 == 0 {
            return Err(Error::InvalidArgument("transform size must be positive".into()));
        }
        let ortho_tol = sc(1e-10);
        let m = match kind {
            TransformKind::Identity => Mat::identity(n3),
            TransformKind::Dct => dct_matrix(n3),
            TransformKind::Haar => haar_matrix(n3)?,
            TransformKind::Random => {
                let seed = seed.ok_or_else(|| {
                    Error::InvalidArgument("random transform requires a seed".into())
                })?;
                random_orthogonal(n3, seed)
            }
            TransformKind::DataDependent => {
                return Err(Error::InvalidArgument(
                    "data-dependent transform needs a tensor; use build_data_dependent".into(),
                ))
            }
            TransformKind::User => {
                return Err(Error::InvalidArgument(
                    "user transform needs a matrix; use OrthoTransform::new".into(),
                ))
            }
        };
        OrthoTransform::new(m, kind, ortho_tol, seed)
    }

    /// Data-dependent transform `M = U₃ᵀ` from the left-singular factor of
    /// the mode-3 unfolding of `y`. Errors when `y` is identically zero.
    pub fn build_data_dependent(y: &Tensor3<T>) -> Result<Self> {
        if y.max_abs() == T::zero() {
            return Err(Error::InvalidArgument(
                "data-dependent transform needs a nonzero tensor".into(),
            ));
        }
        let unf = y.unfold3();
        // Left-singular vectors of the unfolding are the eigenvectors of the
        // n3 x n3 Gram matrix, which is cheaper than a full SVD when
        // n1*n2 >> n3.
        let gram = unf.mul(&unf.transpose());
        let (_, u) = eigh(&gram);
        // Fix signs so the map is deterministic: make the largest-magnitude
        // entry of each column positive.
        let n3 = y.n3();
        let mut m = Mat::zeros(n3, n3);
        for c in 0..n3 {
            let col = u.col(c);
            let mut best = 0;
            for (i, &x) in col.iter().enumerate() {
                if x.abs() > col[best].abs() {
                    best = i;
                }
            }
            let flip = if col[best] < T::zero() { -T::one() } else { T::one() };
            for r in 0..n3 {
                m[(c, r)] = flip * col[r]; // transpose: rows of M are uᵀ
            }
        }
        OrthoTransform::new(m, TransformKind::DataDependent, sc(1e-10), None)
    }

    pub fn m(&self) -> &Mat<T> {
        &self.m
    }

    pub fn m_inv(&self) -> &Mat<T> {
        &self.m_inv
    }

    pub fn kind(&self) -> TransformKind {
        self.kind
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Transform size `n3`.
    pub fn n3(&self) -> usize {
        self.m.rows()
    }

    /// True when `‖MᵀM − I‖_max` is within the construction tolerance.
    pub fn is_orthogonal(&self) -> bool {
        self.m.ortho_defect() <= self.ortho_tol
    }

    /// Condition estimate and invertibility verdict.
    pub fn verify_invertible(&self) -> TransformReport<T> {
        report(&self.m, self.ortho_tol)
    }

    /// Orthogonality defect and verdict (same report type).
    pub fn verify_orthogonal(&self) -> TransformReport<T> {
        report(&self.m, self.ortho_tol)
    }
}

/// Build the report for an arbitrary square matrix.
pub fn report<T: Scalar>(m: &Mat<T>, ortho_tol: T) -> TransformReport<T> {
    let condition = m.cond_one();
    let ortho_defect = m.ortho_defect();
    TransformReport {
        condition,
        ortho_defect,
        invertible: condition < sc(COND_LIMIT),
        orthogonal: ortho_defect <= ortho_tol,
    }
}

/// Orthonormal type-II discrete cosine transform matrix.
pub fn dct_matrix<T: Scalar>(n: usize) -> Mat<T> {
    let nf = n as f64;
    Mat::from_fn(n, n, |k, j| {
        let scale = if k == 0 { (1.0 / nf).sqrt() } else { (2.0 / nf).sqrt() };
        sc(scale * (std::f64::consts::PI * k as f64 * (2.0 * j as f64 + 1.0) / (2.0 * nf)).cos())
    })
}

/// Orthonormalized Haar wavelet matrix; `n` must be a power of two.
pub fn haar_matrix<T: Scalar>(n: usize) -> Result<Mat<T>> {
    if n == 0 || n & (n - 1) != 0 {
        return Err(Error::InvalidArgument(format!(
            "Haar transform needs a power-of-two size, got {}",
            n
        )));
    }
    // Recursive construction: H_{2n} = [H_n ⊗ (1,1); I_n ⊗ (1,-1)] with rows
    // normalized at the end.
    let mut h = vec![vec![1.0f64]];
    let mut size = 1;
    while size < n {
        let mut next = Vec::with_capacity(2 * size);
        for row in &h {
            let mut r = Vec::with_capacity(2 * size);
            for &x in row {
                r.push(x);
                r.push(x);
            }
            next.push(r);
        }
        for i in 0..size {
            let mut r = vec![0.0; 2 * size];
            r[2 * i] = 1.0;
            r[2 * i + 1] = -1.0;
            next.push(r);
        }
        h = next;
        size *= 2;
    }
    Ok(Mat::from_fn(n, n, |i, j| {
        let norm: f64 = h[i].iter().map(|&x| x * x).sum::<f64>().sqrt();
        sc(h[i][j] / norm)
    }))
}

/// Orthogonal factor of a QR factorization of a seeded standard-normal
/// matrix, with the R-diagonal sign convention fixed so the map from seed to
/// matrix is unambiguous.
pub fn random_orthogonal<T: Scalar>(n: usize, seed: u64) -> Mat<T> {
    let mut rng = rng_from_seed(seed);
    let g: Mat<T> = Mat::from_fn(n, n, |_, _| normal(&mut rng));
    let (q, r) = qr(&g);
    let mut out = q;
    for j in 0..n {
        if r[(j, j)] < T::zero() {
            for i in 0..n {
                out[(i, j)] = -out[(i, j)];
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_build() {
        let t = OrthoTransform::<f64>::build(TransformKind::Identity, 4, None).unwrap();
        assert!(t.m().sub(&Mat::identity(4)).max_abs() == 0.0);
        let rep = t.verify_orthogonal();
        assert!(rep.orthogonal && rep.invertible);
        assert!((rep.condition - 1.0).abs() < 1e-14);
    }

    #[test]
    fn haar_two_matches_hand_value() {
        let t = OrthoTransform::<f64>::build(TransformKind::Haar, 2, None).unwrap();
        let s = 1.0 / 2.0f64.sqrt();
        let want = Mat::from_rows(&[vec![s, s], vec![s, -s]]);
        assert!(t.m().sub(&want).max_abs() < 1e-15);
        assert!(OrthoTransform::<f64>::build(TransformKind::Haar, 3, None).is_err());
    }

    #[test]
    fn dct_is_orthogonal() {
        for n in [1usize, 2, 3, 8] {
            let m = dct_matrix::<f64>(n);
            assert!(m.ortho_defect() <= 1e-12, "n = {}", n);
        }
    }

    #[test]
    fn haar_is_orthogonal() {
        for n in [1usize, 2, 4, 8, 16] {
            let m = haar_matrix::<f64>(n).unwrap();
            assert!(m.ortho_defect() <= 1e-12, "n = {}", n);
        }
    }

    #[test]
    fn random_is_deterministic_and_orthogonal() {
        let a = random_orthogonal::<f64>(5, 42);
        let b = random_orthogonal::<f64>(5, 42);
        let c = random_orthogonal::<f64>(5, 43);
        assert!(a.sub(&b).max_abs() == 0.0);
        assert!(a.sub(&c).max_abs() > 1e-3);
        assert!(a.ortho_defect() <= 1e-12);
        assert!(OrthoTransform::<f64>::build(TransformKind::Random, 5, None).is_err());
    }

    #[test]
    fn nonorthogonal_user_matrix_admitted() {
        let m = Mat::from_rows(&[
            vec![1.0, 1.0, 1.0],
            vec![1.0, -1.0, 0.0],
            vec![1.0, 0.0, -1.0],
        ]);
        let t = OrthoTransform::new(m.clone(), TransformKind::User, 1e-10, None).unwrap();
        assert!(!t.is_orthogonal());
        let rep = t.verify_invertible();
        assert!(rep.invertible && !rep.orthogonal);
        // The same matrix is rejected when claimed orthogonal.
        assert!(OrthoTransform::new(m, TransformKind::Dct, 1e-10, None).is_err());
    }

    #[test]
    fn singular_matrix_rejected() {
        let m = Mat::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(OrthoTransform::new(m.clone(), TransformKind::User, 1e-10, None).is_err());
        let rep = report(&m, 1e-10);
        assert!(!rep.invertible);
    }

    #[test]
    fn data_dependent_from_constant_slices() {
        // Identical frontal slices make the mode-3 unfolding rank one; the
        // dominant row of M must align with the constant tube direction.
        let y = Tensor3::from_fn(2, 2, 4, |i, j, _| (1 + i * 2 + j) as f64);
        let t = OrthoTransform::build_data_dependent(&y).unwrap();
        assert!(t.is_orthogonal());
        let row = t.m().row(0);
        let half = 0.5f64;
        for &x in row {
            assert!((x - half).abs() < 1e-10);
        }
        assert!(OrthoTransform::build_data_dependent(&Tensor3::<f64>::zeros(2, 2, 3)).is_err());
    }

    #[test]
    fn data_dependent_one_slice() {
        let y = Tensor3::from_fn(2, 2, 1, |i, j, _| (i + j) as f64 - 0.5);
        let t = OrthoTransform::build_data_dependent(&y).unwrap();
        assert!((t.m()[(0, 0)].abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn data_dependent_is_orthogonal_for_random_input() {
        let mut rng = crate::rng::rng_from_seed(17);
        let y = Tensor3::from_fn(3, 4, 5, |_, _, _| crate::rng::normal::<f64>(&mut rng));
        let t = OrthoTransform::build_data_dependent(&y).unwrap();
        assert!(t.m().ortho_defect() <= 1e-10);
    }
}
