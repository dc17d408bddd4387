//! The tubal ring and module structure induced by a mode-3 transform:
//! products, identities, SVD, rank, determinants, minors, and squares.
//!
//! Everything here routes through the same three-step pattern: push the
//! operands into the transform domain with `×₃ M`, act facewise, and pull the
//! result back with `×₃ M⁻¹`.

use crate::error::{Error, Result};
use crate::linalg::{eigh, svd, Mat};
use crate::scalar::{sc, Scalar};
use crate::tensor::{Tensor3, Tube};
use crate::transform::OrthoTransform;

/// A tubal-algebra context: the transform plus its cached inverse.
#[derive(Debug, Clone)]
pub struct StarMContext<T> {
    transform: OrthoTransform<T>,
}

/// Tensor SVD under the context transform: `A = U ⋆M S ⋆M Vᵀ`.
///
/// `u` is n1 x n1 x n3, `s` is n1 x n2 x n3 with f-diagonal structure in the
/// transform domain, `v` is n2 x n2 x n3. `rank` counts singular tubes whose
/// norm exceeds the relative threshold used at construction.
#[derive(Debug, Clone)]
pub struct StarMSVD<T> {
    pub u: Tensor3<T>,
    pub s: Tensor3<T>,
    pub v: Tensor3<T>,
    pub rank: usize,
}

/// Outcome of the tube squareness test.
#[derive(Debug, Clone)]
pub enum SquareTube<T> {
    /// The tube is a square; `root ⋆M root` reproduces it.
    Square { root: Tube<T> },
    /// Not a square: entry `index` of the transformed tube is `value < -tol`.
    NotSquare { index: usize, value: T },
}

impl<T> SquareTube<T> {
    pub fn is_square(&self) -> bool {
        matches!(self, SquareTube::Square { .. })
    }

    pub fn root(&self) -> Option<&Tube<T>> {
        match self {
            SquareTube::Square { root } => Some(root),
            SquareTube::NotSquare { .. } => None,
        }
    }
}

/// Relative threshold below which a singular tube counts as zero.
pub fn default_tube_tol<T: Scalar>() -> T {
    sc(1e-10)
}

impl<T: Scalar> StarMContext<T> {
    pub fn new(transform: OrthoTransform<T>) -> Self {
        StarMContext { transform }
    }

    pub fn transform(&self) -> &OrthoTransform<T> {
        &self.transform
    }

    pub fn m(&self) -> &Mat<T> {
        self.transform.m()
    }

    pub fn m_inv(&self) -> &Mat<T> {
        self.transform.m_inv()
    }

    pub fn n3(&self) -> usize {
        self.transform.n3()
    }

    pub fn is_orthogonal(&self) -> bool {
        self.transform.is_orthogonal()
    }

    /// Error out when the routines that need an orthogonal transform are
    /// called with a merely invertible one.
    pub fn require_orthogonal(&self) -> Result<()> {
        if self.is_orthogonal() {
            Ok(())
        } else {
            Err(Error::NotOrthogonal {
                defect: crate::scalar::as_f64(self.m().ortho_defect()),
                tol: 1e-10,
            })
        }
    }

    fn check_n3(&self, n3: usize) -> Result<()> {
        if n3 != self.n3() {
            return Err(Error::DimensionMismatch(format!(
                "tensor has {} slices but transform is {}x{}",
                n3,
                self.n3(),
                self.n3()
            )));
        }
        Ok(())
    }

    /// Push into the transform domain.
    pub fn to_hat(&self, a: &Tensor3<T>) -> Result<Tensor3<T>> {
        self.check_n3(a.n3())?;
        a.mode3_product(self.m())
    }

    /// Pull back from the transform domain.
    pub fn from_hat(&self, a_hat: &Tensor3<T>) -> Result<Tensor3<T>> {
        self.check_n3(a_hat.n3())?;
        a_hat.mode3_product(self.m_inv())
    }

    /// Tensor-tensor product: transform, multiply facewise, transform back.
    pub fn starm_product(&self, a: &Tensor3<T>, b: &Tensor3<T>) -> Result<Tensor3<T>> {
        self.check_n3(a.n3())?;
        self.check_n3(b.n3())?;
        let a_hat = a.mode3_product(self.m())?;
        let b_hat = b.mode3_product(self.m())?;
        let c_hat = a_hat.facewise_product(&b_hat)?;
        c_hat.mode3_product(self.m_inv())
    }

    /// Tube-tube product in the same ring.
    pub fn tube_product(&self, a: &Tube<T>, b: &Tube<T>) -> Result<Tube<T>> {
        let c = self.starm_product(&a.to_tensor(), &b.to_tensor())?;
        Tube::from_tensor(&c)
    }

    /// The multiplicative identity tube `e = tube(M⁻¹ 1)`.
    pub fn identity_tube(&self) -> Tube<T> {
        let ones = vec![T::one(); self.n3()];
        Tube::new(self.m_inv().matvec(&ones)).expect("identity tube construction")
    }

    /// The n x n identity tensor: identity tubes on the diagonal.
    pub fn identity_tensor(&self, n: usize) -> Tensor3<T> {
        let e = self.identity_tube();
        let mut t = Tensor3::zeros(n, n, self.n3());
        for i in 0..n {
            t.set_tube(i, i, e.as_vec());
        }
        t
    }

    /// The matrix `M⁻¹ diag(M vec(a)) M`, which acts on tube coefficients
    /// exactly as left-multiplication by `a` does in the tube ring.
    pub fn tube_mult_matrix(&self, a: &Tube<T>) -> Result<Mat<T>> {
        self.check_n3(a.n3())?;
        let d = self.m().matvec(a.as_vec());
        let n3 = self.n3();
        // M⁻¹ · diag(d) · M assembled without forming diag explicitly.
        let mut out = Mat::zeros(n3, n3);
        for i in 0..n3 {
            for j in 0..n3 {
                let mut acc = T::zero();
                for k in 0..n3 {
                    acc += self.m_inv()[(i, k)] * d[k] * self.m()[(k, j)];
                }
                out[(i, j)] = acc;
            }
        }
        Ok(out)
    }

    /// Decide whether `a` is a square in the tube ring, returning a root
    /// when it is. Transformed entries in `[-tol, 0)` are clamped to zero;
    /// any entry below `-tol` makes the tube a non-square and is reported.
    pub fn is_square_tube(&self, a: &Tube<T>, tol: T) -> Result<SquareTube<T>> {
        self.check_n3(a.n3())?;
        let hat = self.m().matvec(a.as_vec());
        for (k, &x) in hat.iter().enumerate() {
            if x < -tol {
                return Ok(SquareTube::NotSquare { index: k, value: x });
            }
        }
        let root_hat: Vec<T> = hat
            .iter()
            .map(|&x| if x < T::zero() { T::zero() } else { x.sqrt() })
            .collect();
        let root = Tube::new(self.m_inv().matvec(&root_hat))?;
        Ok(SquareTube::Square { root })
    }

    /// Tensor SVD in the transform domain, one factorization per slice.
    ///
    /// Requires an orthogonal transform so that the facewise transpose of the
    /// factors is their ring adjoint. Symmetric slices are factored through
    /// the eigendecomposition, so PSD inputs come back with `U = V`.
    pub fn starm_svd(&self, a: &Tensor3<T>) -> Result<StarMSVD<T>> {
        self.require_orthogonal()?;
        self.check_n3(a.n3())?;
        let (n1, n2, n3) = a.shape();
        let a_hat = a.mode3_product(self.m())?;

        let mut u_hat = Tensor3::zeros(n1, n1, n3);
        let mut s_hat = Tensor3::zeros(n1, n2, n3);
        let mut v_hat = Tensor3::zeros(n2, n2, n3);
        for k in 0..n3 {
            let slice = a_hat.slice_mat(k);
            let sym_tol = T::epsilon() * sc::<T>(8.0) * T::max(slice.max_abs(), T::one());
            if n1 == n2 && slice.symmetry_defect() <= sym_tol {
                // Eigendecomposition route: singular values are |λ| and the
                // left factor flips sign on negative eigenvalues.
                let (w, vecs) = eigh(&slice);
                let mut order: Vec<usize> = (0..n1).collect();
                order.sort_by(|&i, &j| {
                    w[j].abs()
                        .partial_cmp(&w[i].abs())
                        .expect("finite eigenvalues")
                });
                let mut uk = Mat::zeros(n1, n1);
                let mut sk = Mat::zeros(n1, n2);
                let mut vk = Mat::zeros(n2, n2);
                for (c, &idx) in order.iter().enumerate() {
                    let lam = w[idx];
                    sk[(c, c)] = lam.abs();
                    let flip = if lam < T::zero() { -T::one() } else { T::one() };
                    for r in 0..n1 {
                        vk[(r, c)] = vecs[(r, idx)];
                        uk[(r, c)] = flip * vecs[(r, idx)];
                    }
                }
                u_hat.set_slice(k, &uk);
                s_hat.set_slice(k, &sk);
                v_hat.set_slice(k, &vk);
            } else {
                let dec = svd(&slice, true, true);
                let mut sk = Mat::zeros(n1, n2);
                for (i, &sig) in dec.s.iter().enumerate() {
                    sk[(i, i)] = sig;
                }
                u_hat.set_slice(k, &dec.u);
                s_hat.set_slice(k, &sk);
                v_hat.set_slice(k, &dec.v);
            }
        }

        let u = u_hat.mode3_product(self.m_inv())?;
        let s = s_hat.mode3_product(self.m_inv())?;
        let v = v_hat.mode3_product(self.m_inv())?;
        let rank = rank_from_singular_tubes(&s_hat, default_tube_tol());
        Ok(StarMSVD { u, s, v, rank })
    }

    /// Number of singular tubes with norm above `tube_tol` times the largest
    /// singular tube's norm.
    pub fn starm_rank(&self, a: &Tensor3<T>, tube_tol: T) -> Result<usize> {
        Ok(self.starm_svd_rank_only(a, tube_tol)?)
    }

    fn starm_svd_rank_only(&self, a: &Tensor3<T>, tube_tol: T) -> Result<usize> {
        self.require_orthogonal()?;
        self.check_n3(a.n3())?;
        let a_hat = a.mode3_product(self.m())?;
        let (n1, n2, n3) = a.shape();
        let kmin = n1.min(n2);
        let mut s_hat = Tensor3::zeros(kmin.max(1), kmin.max(1), n3);
        if kmin == 0 {
            return Ok(0);
        }
        for k in 0..n3 {
            let dec = svd(&a_hat.slice_mat(k), false, false);
            for (i, &sig) in dec.s.iter().enumerate() {
                s_hat[(i, i, k)] = sig;
            }
        }
        Ok(rank_from_singular_tubes(&s_hat, tube_tol))
    }

    /// Determinant tube via transformed slice determinants, mapped back with
    /// `M⁻¹` so it matches the permutation-sum definition for any invertible
    /// transform.
    pub fn det_m(&self, a: &Tensor3<T>) -> Result<Tube<T>> {
        self.check_n3(a.n3())?;
        if a.n1() != a.n2() {
            return Err(Error::DimensionMismatch(format!(
                "determinant needs square slices, got {}x{}",
                a.n1(),
                a.n2()
            )));
        }
        let a_hat = a.mode3_product(self.m())?;
        let dets: Vec<T> = (0..a.n3()).map(|k| a_hat.slice_mat(k).det()).collect();
        Tube::new(self.m_inv().matvec(&dets))
    }

    /// Determinant by the explicit signed sum over permutations of tube
    /// products. Exponential in `n`; restricted to `n <= 6` and used as an
    /// independent check of [`Self::det_m`].
    pub fn det_m_oracle(&self, a: &Tensor3<T>) -> Result<Tube<T>> {
        self.check_n3(a.n3())?;
        let n = a.n1();
        if n != a.n2() {
            return Err(Error::DimensionMismatch(format!(
                "determinant needs square slices, got {}x{}",
                n,
                a.n2()
            )));
        }
        if n > 6 {
            return Err(Error::TooLarge {
                what: "permutation-sum determinant",
                n,
                limit: 6,
            });
        }
        let e = self.identity_tube();
        if n == 0 {
            return Ok(e);
        }
        let mut acc = vec![T::zero(); self.n3()];
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = T::one();
        // Heap's algorithm; each swap flips the permutation sign.
        let mut c = vec![0usize; n];
        let add_term = |perm: &[usize], sign: T, acc: &mut Vec<T>| -> Result<()> {
            let mut prod = e.clone();
            for (i, &pi) in perm.iter().enumerate() {
                prod = self.tube_product(&prod, &a.tube_at(i, pi))?;
            }
            for (dst, &src) in acc.iter_mut().zip(prod.as_vec()) {
                *dst += sign * src;
            }
            Ok(())
        };
        add_term(&perm, sign, &mut acc)?;
        let mut i = 0;
        while i < n {
            if c[i] < i {
                if i % 2 == 0 {
                    perm.swap(0, i);
                } else {
                    perm.swap(c[i], i);
                }
                sign = -sign;
                add_term(&perm, sign, &mut acc)?;
                c[i] += 1;
                i = 0;
            } else {
                c[i] = 0;
                i += 1;
            }
        }
        Tube::new(acc)
    }

    /// Determinant of the subtensor on the rows and columns in `j`.
    pub fn principal_minor(&self, a: &Tensor3<T>, j: &[usize]) -> Result<Tube<T>> {
        if a.n1() != a.n2() {
            return Err(Error::DimensionMismatch(format!(
                "principal minor needs square slices, got {}x{}",
                a.n1(),
                a.n2()
            )));
        }
        if j.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "minor index set must be strictly increasing".into(),
            ));
        }
        if let Some(&bad) = j.iter().find(|&&i| i >= a.n1()) {
            return Err(Error::InvalidArgument(format!(
                "minor index {} out of range for size {}",
                bad,
                a.n1()
            )));
        }
        let sub = Tensor3::from_fn(j.len(), j.len(), a.n3(), |r, c, k| a[(j[r], j[c], k)]);
        self.det_m(&sub)
    }

    /// Check `Qᵀ ⋆M Q = Q ⋆M Qᵀ = I` within `tol` (max-abs entry error).
    pub fn is_orthogonal_tensor(&self, q: &Tensor3<T>, tol: T) -> Result<bool> {
        if q.n1() != q.n2() {
            return Ok(false);
        }
        let qt = q.facewise_transpose();
        let eye = self.identity_tensor(q.n1());
        let left = self.starm_product(&qt, q)?;
        let right = self.starm_product(q, &qt)?;
        Ok(left.sub(&eye)?.max_abs() <= tol && right.sub(&eye)?.max_abs() <= tol)
    }

    /// Verify that the transform intertwines this ring's tube product with
    /// the facewise (identity-transform) product.
    pub fn algebra_hom_check(&self, a: &Tube<T>, b: &Tube<T>) -> Result<bool> {
        self.check_n3(a.n3())?;
        self.check_n3(b.n3())?;
        let prod = self.tube_product(a, b)?;
        let lhs = self.m().matvec(prod.as_vec());
        let a_hat = self.m().matvec(a.as_vec());
        let b_hat = self.m().matvec(b.as_vec());
        let tol_abs: T = sc(1e-10);
        let tol_rel: T = sc(1e-8);
        Ok(lhs
            .iter()
            .zip(a_hat.iter().zip(&b_hat))
            .all(|(&l, (&x, &y))| {
                let r = x * y;
                (l - r).abs() <= tol_abs + tol_rel * T::max(l.abs(), r.abs())
            }))
    }
}

fn rank_from_singular_tubes<T: Scalar>(s_hat: &Tensor3<T>, tube_tol: T) -> usize {
    let kmin = s_hat.n1().min(s_hat.n2());
    let norms: Vec<T> = (0..kmin)
        .map(|i| {
            (0..s_hat.n3())
                .map(|k| s_hat[(i, i, k)] * s_hat[(i, i, k)])
                .sum::<T>()
                .sqrt()
        })
        .collect();
    let largest = norms.first().copied().unwrap_or_else(T::zero);
    if largest <= T::zero() {
        return 0;
    }
    norms.iter().filter(|&&n| n > tube_tol * largest).count()
}

impl<T: Scalar> StarMSVD<T> {
    /// Multiply the factors back together.
    pub fn reconstruct(&self, ctx: &StarMContext<T>) -> Result<Tensor3<T>> {
        let us = ctx.starm_product(&self.u, &self.s)?;
        ctx.starm_product(&us, &self.v.facewise_transpose())
    }

    /// Singular tube `i` of the middle factor.
    pub fn singular_tube(&self, i: usize) -> Tube<T> {
        self.s.tube_at(i, i)
    }
}
