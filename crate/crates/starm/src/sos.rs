//! Sum-of-squares certificates for quadratic forms through the tube
//! algebra.
//!
//! A quadratic form in `m` groups of `n3` variables is certified when its
//! Gram matrix is the matrix representative of a semidefinite Gram tensor.
//! For quadratic forms the Gram matrix is unique, so certification is a
//! direct structural check, with no semidefinite search: every transformed
//! block must be diagonal and the Gram matrix must be PSD.

use crate::algebra::StarMContext;
use crate::equivariance::{tube_in_subspace, EquivariantSubspace, GroupRep};
use crate::error::{Error, Result};
use crate::linalg::{eigh, svd, Mat};
use crate::rng::{normal, rng_from_seed};
use crate::scalar::{sc, Scalar};
use crate::tensor::{fold_n3, Tensor3, Tube};

/// A quadratic form `f(ξ) = ξᵀ Q ξ` in `m·n3` variables, ordered group by
/// group: `ξ = (x_{1,1}, …, x_{1,n3}, x_{2,1}, …, x_{m,n3})`.
#[derive(Debug, Clone)]
pub struct QuadraticForm<T> {
    m: usize,
    n3: usize,
    gram: Mat<T>,
}

impl<T: Scalar> QuadraticForm<T> {
    pub fn new(m: usize, n3: usize, gram: Mat<T>) -> Result<Self> {
        let n = m * n3;
        if m == 0 || n3 == 0 {
            return Err(Error::InvalidArgument(
                "quadratic form needs positive group count and tube length".into(),
            ));
        }
        if gram.rows() != n || gram.cols() != n {
            return Err(Error::DimensionMismatch(format!(
                "Gram matrix is {}x{} but m·n3 = {}",
                gram.rows(),
                gram.cols(),
                n
            )));
        }
        let defect = gram.symmetry_defect();
        if defect > sc::<T>(1e-10) * T::max(T::one(), gram.max_abs()) {
            return Err(Error::NotSymmetric(crate::scalar::as_f64(defect)));
        }
        Ok(QuadraticForm { m, n3, gram })
    }

    pub fn num_groups(&self) -> usize {
        self.m
    }

    pub fn tube_len(&self) -> usize {
        self.n3
    }

    pub fn num_vars(&self) -> usize {
        self.m * self.n3
    }

    pub fn gram(&self) -> &Mat<T> {
        &self.gram
    }

    /// The `n3 x n3` coefficient block coupling variable groups `i` and `j`.
    pub fn block(&self, i: usize, j: usize) -> Mat<T> {
        self.gram.block(i * self.n3, j * self.n3, self.n3, self.n3)
    }

    /// Evaluate `ξᵀ Q ξ`.
    pub fn evaluate(&self, x: &[T]) -> Result<T> {
        if x.len() != self.num_vars() {
            return Err(Error::DimensionMismatch(format!(
                "point has {} coordinates, form has {}",
                x.len(),
                self.num_vars()
            )));
        }
        let qx = self.gram.matvec(x);
        Ok(x.iter().zip(&qx).map(|(&a, &b)| a * b).sum())
    }
}

/// Why certification failed.
#[derive(Debug, Clone, PartialEq)]
pub enum MsosFailure<T> {
    /// Some transformed coefficient block is not diagonal.
    OffDiagonal { block: (usize, usize), magnitude: T },
    /// The Gram matrix has a negative eigenvalue.
    NotPsd { eigenvalue: T },
    /// A recovered Gram tube falls outside the required subspace.
    TubeOutsideSubspace { block: (usize, usize), residual: T },
}

/// Certification outcome; `gram_tensor` is populated exactly on success.
#[derive(Debug, Clone)]
pub struct MsosVerdict<T> {
    pub is_msos: bool,
    pub gram_tensor: Option<Tensor3<T>>,
    pub failure: Option<MsosFailure<T>>,
}

fn check_form_dims<T: Scalar>(ctx: &StarMContext<T>, f: &QuadraticForm<T>) -> Result<()> {
    if f.tube_len() != ctx.n3() {
        return Err(Error::DimensionMismatch(format!(
            "form has tube length {} but the transform is {}-dimensional",
            f.tube_len(),
            ctx.n3()
        )));
    }
    Ok(())
}

/// Decide whether the form admits a semidefinite Gram tensor. This holds
/// exactly when every conjugated block `M Q_{i,j} Mᵀ` is diagonal (each
/// block then comes from a single tube) and the Gram matrix is PSD. On
/// success the Gram tensor is assembled from the block diagonals and
/// revalidated against the form on random points.
pub fn msos_certify<T: Scalar>(
    ctx: &StarMContext<T>,
    f: &QuadraticForm<T>,
    tol: T,
) -> Result<MsosVerdict<T>> {
    ctx.require_orthogonal()?;
    check_form_dims(ctx, f)?;
    let (m, n3) = (f.num_groups(), f.tube_len());
    let mm = ctx.m();
    let mt = ctx.m_inv();

    // Diagonality of every conjugated block.
    let mut diagonals: Vec<Vec<T>> = Vec::with_capacity(m * m);
    let mut worst: Option<((usize, usize), T)> = None;
    for i in 0..m {
        for j in 0..m {
            let q_ij = f.block(i, j);
            let conj = mm.mul(&q_ij).mul(&mm.transpose());
            let mut off = T::zero();
            for r in 0..n3 {
                for c in 0..n3 {
                    if r != c {
                        off = T::max(off, conj[(r, c)].abs());
                    }
                }
            }
            let spectral = svd(&q_ij, false, false).s.first().copied().unwrap_or_else(T::zero);
            if off > tol * (T::one() + spectral)
                && worst.map_or(true, |(_, w)| off > w)
            {
                worst = Some(((i, j), off));
            }
            diagonals.push((0..n3).map(|r| conj[(r, r)]).collect());
        }
    }
    if let Some((block, magnitude)) = worst {
        return Ok(MsosVerdict {
            is_msos: false,
            gram_tensor: None,
            failure: Some(MsosFailure::OffDiagonal { block, magnitude }),
        });
    }

    // Semidefiniteness of the full Gram matrix.
    let (w, _) = eigh(f.gram());
    let top = w.first().copied().unwrap_or_else(T::zero).abs();
    let min_eig = w.last().copied().unwrap_or_else(T::zero);
    if min_eig < -tol * (T::one() + top) {
        return Ok(MsosVerdict {
            is_msos: false,
            gram_tensor: None,
            failure: Some(MsosFailure::NotPsd { eigenvalue: min_eig }),
        });
    }

    // Assemble the Gram tensor: tube (i,j) is Mᵀ times the block diagonal.
    let mut gram_tensor = Tensor3::zeros(m, m, n3);
    for i in 0..m {
        for j in 0..m {
            let tube = mt.matvec(&diagonals[i * m + j]);
            gram_tensor.set_tube(i, j, &tube);
        }
    }

    // Revalidate on random points; a mismatch indicates numerical breakdown.
    let mut rng = rng_from_seed(0x505);
    for _ in 0..20 {
        let x: Vec<T> = (0..f.num_vars()).map(|_| normal(&mut rng)).collect();
        let direct = f.evaluate(&x)?;
        let via_tensor = evaluate_msos(ctx, &gram_tensor, &x)?;
        if (direct - via_tensor).abs() > sc::<T>(1e-8) * (T::one() + direct.abs()) {
            return Err(Error::InvalidArgument(format!(
                "recovered Gram tensor disagrees with the form: {} vs {}",
                crate::scalar::as_f64(direct),
                crate::scalar::as_f64(via_tensor)
            )));
        }
    }

    Ok(MsosVerdict {
        is_msos: true,
        gram_tensor: Some(gram_tensor),
        failure: None,
    })
}

/// Evaluate `⟨X, Q ⋆ X⟩` where `X` folds the point into an `m x 1 x n3`
/// tensor, one tube per variable group.
pub fn evaluate_msos<T: Scalar>(ctx: &StarMContext<T>, q: &Tensor3<T>, x: &[T]) -> Result<T> {
    let (m, m2, n3) = q.shape();
    if m != m2 || n3 != ctx.n3() {
        return Err(Error::DimensionMismatch(format!(
            "Gram tensor shape {:?} is not square over the transform dimension {}",
            q.shape(),
            ctx.n3()
        )));
    }
    if x.len() != m * n3 {
        return Err(Error::DimensionMismatch(format!(
            "point has {} coordinates, expected {}",
            x.len(),
            m * n3
        )));
    }
    let folded = fold_n3(x, n3)?;
    let qx = ctx.starm_product(q, &folded)?;
    folded.inner_product(&qx)
}

/// Randomized invariance test: `f((I_m ⊗ ρ(g)) ξ) = f(ξ)` for every
/// generator on random points. The context fixes the expected tube length.
pub fn check_invariance<T: Scalar>(
    rep: &GroupRep<T>,
    ctx: &StarMContext<T>,
    f: &QuadraticForm<T>,
    trials: usize,
    seed: u64,
    tol: T,
) -> Result<bool> {
    check_form_dims(ctx, f)?;
    if rep.n3() != f.tube_len() {
        return Err(Error::DimensionMismatch(format!(
            "representation acts on {} dimensions but tubes have length {}",
            rep.n3(),
            f.tube_len()
        )));
    }
    let (m, n3) = (f.num_groups(), f.tube_len());
    let mut rng = rng_from_seed(seed);
    for _ in 0..trials.max(1) {
        let x: Vec<T> = (0..m * n3).map(|_| normal(&mut rng)).collect();
        let fx = f.evaluate(&x)?;
        for g in rep.generators() {
            let mut gx = vec![T::zero(); m * n3];
            for group in 0..m {
                let seg = &x[group * n3..(group + 1) * n3];
                let moved = g.matvec(seg);
                gx[group * n3..(group + 1) * n3].copy_from_slice(&moved);
            }
            let fgx = f.evaluate(&gx)?;
            if (fx - fgx).abs() > tol * (T::one() + fx.abs()) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Certify and additionally require every recovered Gram tube to lie in the
/// given subspace. Under a multiplicity-one decomposition this captures
/// exactly the invariant sums of squares; with repeated irreducibles an
/// invariant SOS form can still fail (the block-diagonality check rejects
/// it first).
pub fn msos_with_subspace<T: Scalar>(
    ctx: &StarMContext<T>,
    f: &QuadraticForm<T>,
    w: &EquivariantSubspace<T>,
    tol: T,
) -> Result<MsosVerdict<T>> {
    let base = msos_certify(ctx, f, tol)?;
    if !base.is_msos {
        return Ok(base);
    }
    let gram_tensor = base
        .gram_tensor
        .as_ref()
        .expect("successful certification carries a Gram tensor");
    for i in 0..f.num_groups() {
        for j in 0..f.num_groups() {
            let t = Tube::new(gram_tensor.tube_vec(i, j))?;
            if !tube_in_subspace(w, &t, tol) {
                let proj = w.project(&t);
                let residual: T = t
                    .as_vec()
                    .iter()
                    .zip(proj.as_vec())
                    .map(|(&a, &b)| (a - b) * (a - b))
                    .sum::<T>()
                    .sqrt();
                return Ok(MsosVerdict {
                    is_msos: false,
                    gram_tensor: None,
                    failure: Some(MsosFailure::TubeOutsideSubspace {
                        block: (i, j),
                        residual,
                    }),
                });
            }
        }
    }
    Ok(base)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equivariance::{equivariant_subspace, IrrepDims};
    use crate::semidefinite::matrix_representative;
    use crate::transform::{OrthoTransform, TransformKind};

    fn user_ctx(m: Mat<f64>) -> StarMContext<f64> {
        StarMContext::new(OrthoTransform::new(m, TransformKind::User, 1e-10, None).unwrap())
    }

    /// Orthogonal transform whose rows split ℝ³ into two copies of the
    /// trivial representation of the swap (2 3) plus the sign line.
    fn multiplicity_ctx() -> StarMContext<f64> {
        let a = 1.0 / 2.0_f64.sqrt();
        user_ctx(Mat::from_rows(&[
            vec![1.0, 0.0, 0.0],
            vec![0.0, a, a],
            vec![0.0, a, -a],
        ]))
    }

    /// Symmetry-adapted orthogonal transform for the permutation action on
    /// three letters: the normalized ones row, then a standard 2-block.
    fn permutation_ctx() -> StarMContext<f64> {
        let r3 = 3.0_f64.sqrt();
        let r2 = 2.0_f64.sqrt();
        let r6 = 6.0_f64.sqrt();
        user_ctx(Mat::from_rows(&[
            vec![-1.0 / r3, -1.0 / r3, -1.0 / r3],
            vec![1.0 / r2, 0.0, -1.0 / r2],
            vec![1.0 / r6, -2.0 / r6, 1.0 / r6],
        ]))
    }

    fn swap23_rep() -> GroupRep<f64> {
        GroupRep::new(
            vec![Mat::from_rows(&[
                vec![1.0, 0.0, 0.0],
                vec![0.0, 0.0, 1.0],
                vec![0.0, 1.0, 0.0],
            ])],
            true,
        )
        .unwrap()
    }

    fn s3_rep() -> GroupRep<f64> {
        let swap = Mat::from_rows(&[
            vec![0.0, 1.0, 0.0],
            vec![1.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ]);
        let cycle = Mat::from_rows(&[
            vec![0.0, 0.0, 1.0],
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
        ]);
        GroupRep::new(vec![swap, cycle], true).unwrap()
    }

    #[test]
    fn repeated_irreducible_blocks_certification() {
        // f = (x1+x2+x3)² + (x2−x3)² has the unique Gram matrix below; it is
        // SOS and swap-invariant, yet admits no Gram tensor because the
        // conjugated Gram matrix picks up a √2 off-diagonal entry.
        let ctx = multiplicity_ctx();
        let gram = Mat::from_rows(&[
            vec![1.0, 1.0, 1.0],
            vec![1.0, 2.0, 0.0],
            vec![1.0, 0.0, 2.0],
        ]);
        let f = QuadraticForm::new(1, 3, gram.clone()).unwrap();
        let verdict = msos_certify(&ctx, &f, 1e-8).unwrap();
        assert!(!verdict.is_msos);
        match verdict.failure {
            Some(MsosFailure::OffDiagonal { block, magnitude }) => {
                assert_eq!(block, (0, 0));
                assert!((magnitude - 2.0_f64.sqrt()).abs() < 1e-9);
            }
            other => panic!("unexpected failure {:?}", other),
        }

        // The same form is SOS (PSD Gram matrix) and swap-invariant.
        let (w, _) = eigh(&gram);
        assert!(w.iter().all(|&x| x > -1e-12));
        assert!(check_invariance(&swap23_rep(), &ctx, &f, 50, 7, 1e-10).unwrap());

        // The strengthened check fails the same way.
        let rep = swap23_rep();
        let subspace = equivariant_subspace(
            &rep,
            ctx.transform(),
            &IrrepDims::new(vec![1, 1, 1]).unwrap(),
            1e-8,
        )
        .unwrap();
        let strengthened = msos_with_subspace(&ctx, &f, &subspace, 1e-8).unwrap();
        assert!(!strengthened.is_msos);
        assert!(matches!(
            strengthened.failure,
            Some(MsosFailure::OffDiagonal { .. })
        ));
    }

    /// The expansion of the worked permutation-invariant form into three
    /// explicit squares, used as an independent oracle.
    fn three_squares(x: &[f64]) -> f64 {
        let r2 = 2.0_f64.sqrt();
        let diag_x = -3.0 - r2;
        let off_x = 3.0 - r2;
        let diag_y = -(4.0 + r2);
        let off_y = 2.0 - r2;
        (0..3)
            .map(|l| {
                let mut s = 0.0;
                for i in 0..3 {
                    s += if i == l { diag_x } else { off_x } * x[i];
                    s += if i == l { diag_y } else { off_y } * x[3 + i];
                }
                s * s
            })
            .sum()
    }

    #[test]
    fn worked_permutation_form_is_certified() {
        let ctx = permutation_ctx();
        let r3 = 3.0_f64.sqrt();
        let s18 = 18.0_f64.sqrt();
        let q1: Vec<f64> = vec![-r3, -r3, -r3];
        let q2: Vec<f64> = vec![-s18, s18 * r3, s18];
        let q1_plus_q2: Vec<f64> = q1.iter().zip(&q2).map(|(a, b)| a + b).collect();

        let mut b = Tensor3::zeros(2, 1, 3);
        b.set_tube(0, 0, &q1_plus_q2);
        b.set_tube(1, 0, &q2);
        let q_tensor = ctx
            .starm_product(&b, &b.facewise_transpose())
            .unwrap();

        let gram = matrix_representative(&ctx, &q_tensor).unwrap();
        let f = QuadraticForm::new(2, 3, gram.symmetrized()).unwrap();

        let verdict = msos_certify(&ctx, &f, 1e-8).unwrap();
        assert!(verdict.is_msos);
        let recovered = verdict.gram_tensor.unwrap();
        assert!(recovered.sub(&q_tensor).unwrap().max_abs() < 1e-9);

        // The certified form matches the printed three-squares expansion.
        let mut rng = rng_from_seed(41);
        for _ in 0..50 {
            let x: Vec<f64> = (0..6).map(|_| normal::<f64>(&mut rng)).collect();
            let via_form = f.evaluate(&x).unwrap();
            let via_squares = three_squares(&x);
            assert!(
                (via_form - via_squares).abs() <= 1e-9 * (1.0 + via_squares.abs()),
                "{} vs {}",
                via_form,
                via_squares
            );
        }

        // Invariant under simultaneous permutation of both variable groups,
        // and certified with all tubes in the equivariant subspace.
        assert!(check_invariance(&s3_rep(), &ctx, &f, 50, 13, 1e-9).unwrap());
        let subspace = equivariant_subspace(
            &s3_rep(),
            ctx.transform(),
            &IrrepDims::new(vec![1, 2]).unwrap(),
            1e-8,
        )
        .unwrap();
        let strengthened = msos_with_subspace(&ctx, &f, &subspace, 1e-8).unwrap();
        assert!(strengthened.is_msos);
    }

    #[test]
    fn construct_then_certify_round_trip() {
        let ctx = StarMContext::new(
            OrthoTransform::build(TransformKind::Dct, 4, None).unwrap(),
        );
        let mut rng = rng_from_seed(19);
        let b = Tensor3::from_fn(2, 3, 4, |_, _, _| normal::<f64>(&mut rng));
        let q_tensor = ctx
            .starm_product(&b.facewise_transpose(), &b)
            .unwrap();
        let gram = matrix_representative(&ctx, &q_tensor).unwrap();
        let f = QuadraticForm::new(3, 4, gram.symmetrized()).unwrap();
        let verdict = msos_certify(&ctx, &f, 1e-8).unwrap();
        assert!(verdict.is_msos);
        let recovered = verdict.gram_tensor.unwrap();
        for _ in 0..50 {
            let x: Vec<f64> = (0..12).map(|_| normal::<f64>(&mut rng)).collect();
            let direct = f.evaluate(&x).unwrap();
            let via_tensor = evaluate_msos(&ctx, &recovered, &x).unwrap();
            assert!((direct - via_tensor).abs() <= 1e-10 * (1.0 + direct.abs()));
        }
    }

    #[test]
    fn zero_form_is_certified_with_zero_tensor() {
        let ctx = multiplicity_ctx();
        let f = QuadraticForm::new(2, 3, Mat::zeros(6, 6)).unwrap();
        let verdict = msos_certify(&ctx, &f, 1e-8).unwrap();
        assert!(verdict.is_msos);
        assert!(verdict.gram_tensor.unwrap().max_abs() == 0.0);
    }

    #[test]
    fn negative_form_fails_psd_check() {
        let ctx = multiplicity_ctx();
        let mut gram = Mat::zeros(3, 3);
        for i in 0..3 {
            gram[(i, i)] = -1.0;
        }
        let f = QuadraticForm::new(1, 3, gram).unwrap();
        let verdict = msos_certify(&ctx, &f, 1e-8).unwrap();
        assert!(!verdict.is_msos);
        match verdict.failure {
            Some(MsosFailure::NotPsd { eigenvalue }) => {
                assert!((eigenvalue + 1.0).abs() < 1e-12)
            }
            other => panic!("unexpected failure {:?}", other),
        }
    }

    #[test]
    fn identity_gram_tensor_evaluates_to_norm() {
        let ctx = StarMContext::new(
            OrthoTransform::build(TransformKind::Dct, 3, None).unwrap(),
        );
        let q = ctx.identity_tensor(2);
        let mut rng = rng_from_seed(29);
        for _ in 0..20 {
            let x: Vec<f64> = (0..6).map(|_| normal::<f64>(&mut rng)).collect();
            let norm2: f64 = x.iter().map(|v| v * v).sum();
            let val = evaluate_msos(&ctx, &q, &x).unwrap();
            assert!((val - norm2).abs() < 1e-12 * (1.0 + norm2));
        }
        assert_eq!(evaluate_msos(&ctx, &q, &vec![0.0; 6]).unwrap(), 0.0);
    }

    #[test]
    fn psd_gram_tensor_is_pointwise_nonnegative() {
        let ctx = StarMContext::new(
            OrthoTransform::build(TransformKind::Haar, 2, None).unwrap(),
        );
        let mut rng = rng_from_seed(53);
        let b = Tensor3::from_fn(2, 2, 2, |_, _, _| normal::<f64>(&mut rng));
        let q = ctx.starm_product(&b.facewise_transpose(), &b).unwrap();
        for _ in 0..10_000 {
            let x: Vec<f64> = (0..4).map(|_| normal::<f64>(&mut rng)).collect();
            let val = evaluate_msos(&ctx, &q, &x).unwrap();
            assert!(val >= -1e-10 * (1.0 + val.abs()));
        }
    }

    #[test]
    fn evaluation_matches_matrix_representative() {
        let ctx = StarMContext::new(
            OrthoTransform::build(TransformKind::Random, 3, Some(2)).unwrap(),
        );
        let mut rng = rng_from_seed(59);
        let raw = Tensor3::from_fn(2, 2, 3, |_, _, _| normal::<f64>(&mut rng));
        let q = raw.add(&raw.facewise_transpose()).unwrap().scale(0.5);
        let rep = matrix_representative(&ctx, &q).unwrap();
        for _ in 0..20 {
            let x: Vec<f64> = (0..6).map(|_| normal::<f64>(&mut rng)).collect();
            let via_tensor = evaluate_msos(&ctx, &q, &x).unwrap();
            let qx = rep.matvec(&x);
            let via_rep: f64 = x.iter().zip(&qx).map(|(&a, &b)| a * b).sum();
            assert!((via_tensor - via_rep).abs() < 1e-11 * (1.0 + via_rep.abs()));
        }
    }

    #[test]
    fn invariance_negative_and_trivial_controls() {
        // Asymmetric diagonal form is not swap-invariant.
        let ctx = StarMContext::new(
            OrthoTransform::build(TransformKind::Haar, 2, None).unwrap(),
        );
        let swap = GroupRep::new(
            vec![Mat::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]])],
            true,
        )
        .unwrap();
        let gram = Mat::from_rows(&[vec![1.0, 0.0], vec![0.0, 2.0]]);
        let f = QuadraticForm::new(1, 2, gram).unwrap();
        assert!(!check_invariance(&swap, &ctx, &f, 20, 61, 1e-10).unwrap());

        // Any form is invariant under the trivial group.
        let trivial = GroupRep::new(vec![Mat::<f64>::identity(2)], true).unwrap();
        assert!(check_invariance(&trivial, &ctx, &f, 20, 67, 1e-10).unwrap());
    }
}
