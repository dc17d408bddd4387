//! Group actions on the tube algebra: which tube multiplications commute
//! with a representation, the subspace of such tubes, and the linear
//! constraints that pin a tensor variable to that subspace.
//!
//! Groups enter only through generator images. Diagonality, block
//! diagonality, and commutation are all preserved by matrix products and
//! inverses, so a condition verified on generators holds on the whole
//! generated group.

use crate::algebra::StarMContext;
use crate::error::{Error, Result};
use crate::linalg::{complete_orthonormal, null_space, Mat};
use crate::rng::{normal, rng_from_seed};
use crate::scalar::{sc, Scalar};
use crate::semidefinite::matrix_representative;
use crate::tensor::{Tensor3, Tube};
use crate::transform::OrthoTransform;

/// A finite group acting linearly on tube space, given by the images of a
/// generating set under a representation.
#[derive(Debug, Clone)]
pub struct GroupRep<T> {
    n3: usize,
    generators: Vec<Mat<T>>,
    orthogonal: bool,
}

impl<T: Scalar> GroupRep<T> {
    /// Wrap generator images. Every matrix must be square of one common
    /// size and invertible; with `orthogonal` set, each must satisfy
    /// `ρᵀρ = I` within `1e-10`.
    pub fn new(generators: Vec<Mat<T>>, orthogonal: bool) -> Result<Self> {
        let first = generators
            .first()
            .ok_or_else(|| Error::InvalidArgument("at least one generator required".into()))?;
        let n3 = first.rows();
        for (k, g) in generators.iter().enumerate() {
            if !g.is_square() || g.rows() != n3 {
                return Err(Error::DimensionMismatch(format!(
                    "generator {} is {}x{}, expected {2}x{2}",
                    k,
                    g.rows(),
                    g.cols()
                )));
            }
            if g.inverse().is_none() {
                return Err(Error::InvalidArgument(format!(
                    "generator {} is singular",
                    k
                )));
            }
            if orthogonal {
                let defect = g.ortho_defect();
                if defect > sc(1e-10) {
                    return Err(Error::NotOrthogonal {
                        defect: crate::scalar::as_f64(defect),
                        tol: 1e-10,
                    });
                }
            }
        }
        Ok(GroupRep {
            n3,
            generators,
            orthogonal,
        })
    }

    pub fn n3(&self) -> usize {
        self.n3
    }

    pub fn generators(&self) -> &[Mat<T>] {
        &self.generators
    }

    pub fn is_orthogonal(&self) -> bool {
        self.orthogonal
    }
}

/// Sizes of the irreducible blocks exposed by a symmetry-adapted transform,
/// in the row order of the transform matrix.
#[derive(Debug, Clone)]
pub struct IrrepDims {
    dims: Vec<usize>,
}

impl IrrepDims {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() || dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidArgument(
                "irreducible block sizes must be positive".into(),
            ));
        }
        Ok(IrrepDims { dims })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Number of blocks.
    pub fn count(&self) -> usize {
        self.dims.len()
    }

    pub fn total(&self) -> usize {
        self.dims.iter().sum()
    }
}

/// Orthonormal basis of the tubes whose multiplication operator commutes
/// with every group generator.
#[derive(Debug, Clone)]
pub struct EquivariantSubspace<T> {
    n3: usize,
    basis: Vec<Tube<T>>,
}

impl<T: Scalar> EquivariantSubspace<T> {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn n3(&self) -> usize {
        self.n3
    }

    pub fn basis(&self) -> &[Tube<T>] {
        &self.basis
    }

    /// Orthogonal projection of a tube onto the subspace.
    pub fn project(&self, a: &Tube<T>) -> Tube<T> {
        let av = a.as_vec();
        let mut out = vec![T::zero(); self.n3];
        for b in &self.basis {
            let bv = b.as_vec();
            let coef: T = av.iter().zip(bv).map(|(&x, &y)| x * y).sum();
            for (o, &y) in out.iter_mut().zip(bv) {
                *o += coef * y;
            }
        }
        Tube::new(out).expect("projection of a finite tube is finite")
    }

    /// The basis as columns of an `n3 x dim` matrix.
    pub fn basis_matrix(&self) -> Mat<T> {
        Mat::from_fn(self.n3, self.basis.len(), |i, j| self.basis[j].as_vec()[i])
    }

    /// Orthonormal basis of the orthogonal complement within tube space.
    pub fn complement_basis(&self) -> Vec<Vec<T>> {
        let full = complete_orthonormal(&self.basis_matrix(), self.n3);
        (self.dim()..self.n3)
            .map(|j| (0..self.n3).map(|i| full[(i, j)]).collect())
            .collect()
    }
}

/// Outcome of the all-tubes equivariance test.
#[derive(Debug, Clone)]
pub struct EquivarianceCheck<T> {
    /// True when every conjugated generator is diagonal within tolerance.
    pub all_equivariant: bool,
    /// Largest off-diagonal magnitude of `M ρ(g) M⁻¹`, per generator.
    pub max_off_diagonal: Vec<T>,
}

fn check_dims<T: Scalar>(rep: &GroupRep<T>, transform: &OrthoTransform<T>) -> Result<()> {
    if rep.n3() != transform.n3() {
        return Err(Error::DimensionMismatch(format!(
            "representation acts on {} dimensions but the transform is {}x{}",
            rep.n3(),
            transform.n3(),
            transform.n3()
        )));
    }
    Ok(())
}

/// Test whether every tube multiplication commutes with the group action:
/// true exactly when `M ρ(g) M⁻¹` is diagonal for each generator. Checking
/// generators suffices because diagonal matrices are closed under products
/// and inverses.
pub fn check_all_tubes_equivariant<T: Scalar>(
    rep: &GroupRep<T>,
    transform: &OrthoTransform<T>,
    tol: T,
) -> Result<EquivarianceCheck<T>> {
    check_dims(rep, transform)?;
    let n3 = rep.n3();
    let mut max_off_diagonal = Vec::with_capacity(rep.generators().len());
    for g in rep.generators() {
        let conj = transform.m().mul(g).mul(transform.m_inv());
        let mut off = T::zero();
        for r in 0..n3 {
            for c in 0..n3 {
                if r != c {
                    off = T::max(off, conj[(r, c)].abs());
                }
            }
        }
        max_off_diagonal.push(off);
    }
    let all_equivariant = max_off_diagonal.iter().all(|&x| x <= tol);
    Ok(EquivarianceCheck {
        all_equivariant,
        max_off_diagonal,
    })
}

/// Compute the subspace of tubes whose multiplication operator commutes
/// with the group action, given that the transform rows form a
/// symmetry-adapted basis with irreducible blocks of the stated sizes.
///
/// The subspace is `{a : M vec(a) ∈ range(V)}` where `V` stacks the ones
/// vectors of the blocks; it is computed from the null space of `[M | -V]`
/// projected to the `a` coordinates and then orthonormalized. Its dimension
/// always equals the number of blocks.
///
/// The symmetry-adaptedness itself is the caller's claim; it is validated
/// here by checking that each `M ρ(g) M⁻¹` is block diagonal with the given
/// block sizes within `tol`, and an error is returned otherwise.
pub fn equivariant_subspace<T: Scalar>(
    rep: &GroupRep<T>,
    transform: &OrthoTransform<T>,
    dims: &IrrepDims,
    tol: T,
) -> Result<EquivariantSubspace<T>> {
    check_dims(rep, transform)?;
    let n3 = rep.n3();
    if dims.total() != n3 {
        return Err(Error::DimensionMismatch(format!(
            "block sizes sum to {} but the transform is {}-dimensional",
            dims.total(),
            n3
        )));
    }

    // Validate the symmetry-adapted claim: conjugated generators must be
    // block diagonal with the stated block sizes.
    let mut starts = Vec::with_capacity(dims.count() + 1);
    let mut acc = 0;
    for &d in dims.dims() {
        starts.push(acc);
        acc += d;
    }
    starts.push(acc);
    let block_of = |r: usize| starts.iter().rposition(|&s| s <= r).unwrap();
    for (k, g) in rep.generators().iter().enumerate() {
        let conj = transform.m().mul(g).mul(transform.m_inv());
        let mut defect = T::zero();
        for r in 0..n3 {
            for c in 0..n3 {
                if block_of(r) != block_of(c) {
                    defect = T::max(defect, conj[(r, c)].abs());
                }
            }
        }
        if defect > tol {
            return Err(Error::InvalidArgument(format!(
                "transform rows are not symmetry-adapted to blocks {:?}: \
                 conjugated generator {} has off-block magnitude {:e}",
                dims.dims(),
                k,
                crate::scalar::as_f64(defect)
            )));
        }
    }

    // Multiplicity matrix: column i is the indicator of block i's rows.
    let m_blocks = dims.count();
    let v = Mat::from_fn(n3, m_blocks, |r, i| {
        if r >= starts[i] && r < starts[i + 1] {
            T::one()
        } else {
            T::zero()
        }
    });

    // Null space of [M | -V]: pairs (a, c) with M a = V c.
    let aug = Mat::from_fn(n3, n3 + m_blocks, |r, c| {
        if c < n3 {
            transform.m()[(r, c)]
        } else {
            -v[(r, c - n3)]
        }
    });
    let kernel = null_space(&aug, sc(1e-10));
    if kernel.cols() != m_blocks {
        return Err(Error::InvalidArgument(format!(
            "kernel dimension {} does not match block count {}",
            kernel.cols(),
            m_blocks
        )));
    }

    // Project to the a coordinates and orthonormalize. The projection is
    // injective because M is invertible, so no candidate degenerates.
    let mut basis: Vec<Vec<T>> = Vec::with_capacity(m_blocks);
    for j in 0..m_blocks {
        let mut w: Vec<T> = (0..n3).map(|i| kernel[(i, j)]).collect();
        for _ in 0..2 {
            for b in &basis {
                let coef: T = w.iter().zip(b).map(|(&x, &y)| x * y).sum();
                for (wi, &bi) in w.iter_mut().zip(b) {
                    *wi -= coef * bi;
                }
            }
        }
        let norm: T = w.iter().map(|&x| x * x).sum::<T>().sqrt();
        if norm <= sc(1e-12) {
            return Err(Error::InvalidArgument(
                "degenerate kernel basis in subspace computation".into(),
            ));
        }
        for wi in &mut w {
            *wi /= norm;
        }
        basis.push(w);
    }

    Ok(EquivariantSubspace {
        n3,
        basis: basis
            .into_iter()
            .map(|w| Tube::new(w).expect("orthonormalized basis tube is finite"))
            .collect(),
    })
}

/// Membership test by projection residual: `‖a − proj(a)‖ ≤ tol·(1 + ‖a‖)`.
pub fn tube_in_subspace<T: Scalar>(w: &EquivariantSubspace<T>, a: &Tube<T>, tol: T) -> bool {
    if a.n3() != w.n3() {
        return false;
    }
    let proj = w.project(a);
    let res: T = a
        .as_vec()
        .iter()
        .zip(proj.as_vec())
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum::<T>()
        .sqrt();
    res <= tol * (T::one() + a.norm())
}

/// Randomized direct test that multiplication by `a` commutes with the
/// group action: for each generator `g` and random tube `x`, compare
/// `a ⋆ (x ×₃ ρ(g))` with `(a ⋆ x) ×₃ ρ(g)`.
pub fn verify_tube_equivariance<T: Scalar>(
    rep: &GroupRep<T>,
    ctx: &StarMContext<T>,
    a: &Tube<T>,
    trials: usize,
    seed: u64,
    tol: T,
) -> Result<bool> {
    if rep.n3() != ctx.n3() || a.n3() != ctx.n3() {
        return Err(Error::DimensionMismatch(format!(
            "representation ({}), tube ({}), and transform ({}) dimensions differ",
            rep.n3(),
            a.n3(),
            ctx.n3()
        )));
    }
    let n3 = ctx.n3();
    let mut rng = rng_from_seed(seed);
    for _ in 0..trials.max(1) {
        let x = Tube::new((0..n3).map(|_| normal::<T>(&mut rng)).collect())?;
        for g in rep.generators() {
            let gx = Tube::new(g.matvec(x.as_vec()))?;
            let lhs = ctx.tube_product(a, &gx)?;
            let ax = ctx.tube_product(a, &x)?;
            let rhs = Tube::new(g.matvec(ax.as_vec()))?;
            let diff: T = lhs
                .as_vec()
                .iter()
                .zip(rhs.as_vec())
                .map(|(&p, &q)| (p - q) * (p - q))
                .sum::<T>()
                .sqrt();
            if diff > tol * (T::one() + rhs.norm()) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Linear constraints forcing every tube of a symmetric `n x n x n3` tensor
/// variable into the subspace: one constraint tensor per tube position
/// `(i, j)` with `i ≤ j` and per complement direction `u`, each paired with
/// a zero right-hand side.
pub fn invariant_constraints<T: Scalar>(
    w: &EquivariantSubspace<T>,
    n: usize,
) -> Result<Vec<(Tensor3<T>, T)>> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "constraint generation needs n >= 1".into(),
        ));
    }
    let n3 = w.n3();
    let complement = w.complement_basis();
    let mut out = Vec::with_capacity(n * (n + 1) / 2 * complement.len());
    let half = sc::<T>(0.5);
    for i in 0..n {
        for j in i..n {
            for u in &complement {
                let mut t = Tensor3::zeros(n, n, n3);
                if i == j {
                    t.set_tube(i, i, u);
                } else {
                    let scaled: Vec<T> = u.iter().map(|&x| x * half).collect();
                    t.set_tube(i, j, &scaled);
                    t.set_tube(j, i, &scaled);
                }
                out.push((t, T::zero()));
            }
        }
    }
    Ok(out)
}

/// Check that the matrix representative of `x` is fixed by conjugation with
/// `Iₙ ⊗ ρ(g)` for every generator, the defining property of an invariant
/// semidefinite variable.
pub fn verify_invariant_msdp<T: Scalar>(
    rep: &GroupRep<T>,
    ctx: &StarMContext<T>,
    x: &Tensor3<T>,
    tol: T,
) -> Result<bool> {
    if rep.n3() != ctx.n3() {
        return Err(Error::DimensionMismatch(format!(
            "representation acts on {} dimensions but the transform is {}-dimensional",
            rep.n3(),
            ctx.n3()
        )));
    }
    let n = x.n1();
    let n3 = ctx.n3();
    let rep_x = matrix_representative(ctx, x)?;
    let scale = T::one() + rep_x.max_abs();
    for g in rep.generators() {
        // (Iₙ⊗ρ)ᵀ rep(X) (Iₙ⊗ρ) acts blockwise as ρᵀ · block · ρ.
        let gt = g.transpose();
        for bi in 0..n {
            for bj in 0..n {
                let block = rep_x.block(bi * n3, bj * n3, n3, n3);
                let conj = gt.mul(&block).mul(g);
                if conj.sub(&block).max_abs() > tol * scale {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}
