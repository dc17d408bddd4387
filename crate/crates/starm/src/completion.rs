//! Tubal nuclear norm and tensor completion.
//!
//! The nuclear norm of a tensor under an orthogonal transform is the sum of
//! matrix nuclear norms of its transformed slices. Minimizing it subject to
//! observed tubes recovers low tubal-rank tensors; because observations are
//! tubal (each observed `(i, j)` pins every slice entry), the problem
//! splits into one small matrix SDP per transformed slice.

use std::collections::HashSet;

use rayon::prelude::*;

use crate::algebra::StarMContext;
use crate::error::{Error, Result};
use crate::linalg::{svd, Mat};
use crate::rng::{normal, rng_from_seed};
use crate::scalar::{sc, Scalar};
use crate::sdp::{
    solve_matrix_sdp, solve_msdp_sliced, MatrixSDP, MSDPProblem, Residuals, SDPSolution, Sense,
    SolveStatus, SolverConfig,
};
use crate::tensor::Tensor3;

/// A completion instance: observed values, the tubal observation pattern,
/// the ring context, and optionally the ground truth for error reporting.
#[derive(Debug, Clone)]
pub struct CompletionTask<T> {
    y: Tensor3<T>,
    omega: Vec<(usize, usize)>,
    ctx: StarMContext<T>,
    truth: Option<Tensor3<T>>,
}

impl<T: Scalar> CompletionTask<T> {
    /// Observation indices are 0-based `(row, column)` pairs, each pinning
    /// the whole tube at that position. Duplicates and out-of-range pairs
    /// are rejected.
    pub fn new(
        y: Tensor3<T>,
        omega: Vec<(usize, usize)>,
        ctx: StarMContext<T>,
    ) -> Result<Self> {
        if y.n3() != ctx.n3() {
            return Err(Error::DimensionMismatch(format!(
                "tensor has {} slices but the transform is {}-dimensional",
                y.n3(),
                ctx.n3()
            )));
        }
        if omega.is_empty() {
            return Err(Error::InvalidArgument(
                "observation set must be nonempty".into(),
            ));
        }
        let mut seen = HashSet::new();
        for &(i, j) in &omega {
            if i >= y.n1() || j >= y.n2() {
                return Err(Error::InvalidArgument(format!(
                    "observed index ({}, {}) outside a {}x{} grid",
                    i,
                    j,
                    y.n1(),
                    y.n2()
                )));
            }
            if !seen.insert((i, j)) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate observed index ({}, {})",
                    i, j
                )));
            }
        }
        Ok(CompletionTask {
            y,
            omega,
            ctx,
            truth: None,
        })
    }

    /// Attach a ground-truth tensor; the result then reports the relative
    /// max-norm error against it.
    pub fn with_truth(mut self, truth: Tensor3<T>) -> Result<Self> {
        if truth.shape() != self.y.shape() {
            return Err(Error::DimensionMismatch(format!(
                "truth shape {:?} does not match observations {:?}",
                truth.shape(),
                self.y.shape()
            )));
        }
        self.truth = Some(truth);
        Ok(self)
    }

    pub fn observations(&self) -> &Tensor3<T> {
        &self.y
    }

    pub fn omega(&self) -> &[(usize, usize)] {
        &self.omega
    }

    pub fn ctx(&self) -> &StarMContext<T> {
        &self.ctx
    }
}

/// Output of a completion run.
#[derive(Debug, Clone)]
pub struct CompletionResult<T> {
    /// The completed tensor.
    pub a: Tensor3<T>,
    /// Nuclear norm of the completed tensor.
    pub m_nuclear: T,
    /// Termination state of each slice subproblem.
    pub per_slice_status: Vec<SolveStatus>,
    /// Worst residuals across slices.
    pub residuals: Residuals<T>,
    /// Relative max-norm error against the attached truth, when present.
    pub fit: Option<T>,
}

/// Sum of matrix nuclear norms of the transformed slices.
pub fn m_nuclear_norm<T: Scalar>(ctx: &StarMContext<T>, a: &Tensor3<T>) -> Result<T> {
    ctx.require_orthogonal()?;
    let a_hat = ctx.to_hat(a)?;
    let mut total = T::zero();
    for k in 0..a_hat.n3() {
        let s = svd(&a_hat.slice_mat(k), false, false).s;
        total += s.iter().copied().sum();
    }
    Ok(total)
}

/// Symmetric indicator pinning entry `(i, j)` of a symmetric matrix
/// variable: `⟨E, X⟩ = X[i, j]` for `i ≠ j`.
fn pin_entry<T: Scalar>(dim: usize, i: usize, j: usize) -> Mat<T> {
    let mut e = Mat::zeros(dim, dim);
    let half = sc::<T>(0.5);
    e[(i, j)] = half;
    e[(j, i)] = half;
    e
}

/// Cost `(1/2)·I` on the `(n1+n2)`-dimensional block variable
/// `[[W1, A], [Aᵀ, W2]]`, whose optimum value is the matrix nuclear norm.
fn half_identity<T: Scalar>(dim: usize) -> Mat<T> {
    let mut c = Mat::zeros(dim, dim);
    let half = sc::<T>(0.5);
    for i in 0..dim {
        c[(i, i)] = half;
    }
    c
}

/// Compute the nuclear norm by solving its semidefinite formulation as a
/// tensor program over the block variable `[[W1, A], [Aᵀ, W2]]`, routed
/// through the slice-separable solver. Agrees with [`m_nuclear_norm`]
/// within solver tolerance.
pub fn nuclear_norm_via_msdp<T: Scalar>(
    ctx: &StarMContext<T>,
    a: &Tensor3<T>,
    cfg: &SolverConfig<T>,
) -> Result<T> {
    ctx.require_orthogonal()?;
    let (n1, n2, n3) = a.shape();
    let dim = n1 + n2;
    let a_hat = ctx.to_hat(a)?;

    let cost = ctx.identity_tensor(dim).scale(sc(0.5));
    let mut constraints = Vec::with_capacity(n1 * n2 * n3);
    for k in 0..n3 {
        for i in 0..n1 {
            for j in 0..n2 {
                let mut e_hat = Tensor3::zeros(dim, dim, n3);
                e_hat.set_slice(k, &pin_entry(dim, i, n1 + j));
                constraints.push((ctx.from_hat(&e_hat)?, a_hat[(i, j, k)]));
            }
        }
    }
    let p = MSDPProblem {
        ctx: ctx.clone(),
        cost,
        constraints,
        sense: Sense::Min,
    };
    let sol = solve_msdp_sliced(&p, cfg)?;
    match sol.status {
        SolveStatus::Optimal | SolveStatus::MaxIters => Ok(sol.objective),
        status => Err(Error::InvalidArgument(format!(
            "nuclear norm program terminated with status {}",
            status
        ))),
    }
}

/// Complete a partially observed tensor by nuclear norm minimization: one
/// `(n1+n2)`-dimensional matrix SDP per transformed slice, with the
/// observed tubes transformed once up front and pinned as equalities.
pub fn complete_tensor<T: Scalar>(
    task: &CompletionTask<T>,
    cfg: &SolverConfig<T>,
) -> Result<CompletionResult<T>> {
    let ctx = task.ctx();
    ctx.require_orthogonal()?;
    let (n1, n2, n3) = task.y.shape();
    let dim = n1 + n2;
    let m = ctx.m();

    // Transform only the observed tubes.
    let y_hat: Vec<((usize, usize), Vec<T>)> = task
        .omega
        .iter()
        .map(|&(i, j)| ((i, j), m.matvec(&task.y.tube_vec(i, j))))
        .collect();

    let slice_solutions: Vec<Result<SDPSolution<Mat<T>, T>>> = (0..n3)
        .into_par_iter()
        .map(|k| {
            let constraints: Vec<(Mat<T>, T)> = y_hat
                .iter()
                .map(|&((i, j), ref tube)| (pin_entry(dim, i, n1 + j), tube[k]))
                .collect();
            let p = MatrixSDP {
                dim,
                cost: half_identity(dim),
                constraints,
                sense: Sense::Min,
            };
            solve_matrix_sdp(&p, cfg)
        })
        .collect();

    let mut a_hat = Tensor3::zeros(n1, n2, n3);
    let mut per_slice_status = Vec::with_capacity(n3);
    let mut residuals = Residuals {
        primal: T::zero(),
        dual: T::zero(),
        gap: T::zero(),
    };
    for (k, sol) in slice_solutions.into_iter().enumerate() {
        let sol = sol?;
        a_hat.set_slice(k, &sol.x.block(0, n1, n1, n2));
        per_slice_status.push(sol.status);
        residuals.primal = T::max(residuals.primal, sol.residuals.primal);
        residuals.dual = T::max(residuals.dual, sol.residuals.dual);
        residuals.gap = T::max(residuals.gap, sol.residuals.gap);
    }
    let a = ctx.from_hat(&a_hat)?;
    let m_nuclear = m_nuclear_norm(ctx, &a)?;
    let fit = match &task.truth {
        Some(truth) => Some(relative_error_max(&a, truth)?),
        None => None,
    };
    Ok(CompletionResult {
        a,
        m_nuclear,
        per_slice_status,
        residuals,
        fit,
    })
}

/// Relative error in the entrywise max norm, `‖A − Y‖_max / ‖Y‖_max`.
pub fn relative_error_max<T: Scalar>(a: &Tensor3<T>, y: &Tensor3<T>) -> Result<T> {
    if a.shape() != y.shape() {
        return Err(Error::DimensionMismatch(format!(
            "shapes {:?} and {:?} differ",
            a.shape(),
            y.shape()
        )));
    }
    let denom = y.max_abs();
    if denom == T::zero() {
        return Err(Error::InvalidArgument(
            "reference tensor is identically zero".into(),
        ));
    }
    Ok(a.sub(y)?.max_abs() / denom)
}

/// Product of two seeded Gaussian factors: an `n1 x r x n3` times an
/// `r x n2 x n3` tensor, giving tubal rank `r` generically.
pub fn make_synthetic_low_rank<T: Scalar>(
    ctx: &StarMContext<T>,
    n1: usize,
    n2: usize,
    r: usize,
    seed: u64,
) -> Result<Tensor3<T>> {
    if r > n1.min(n2) {
        return Err(Error::InvalidArgument(format!(
            "rank {} exceeds min({}, {})",
            r, n1, n2
        )));
    }
    let n3 = ctx.n3();
    let mut rng = rng_from_seed(seed);
    let b = Tensor3::from_fn(n1, r, n3, |_, _, _| normal(&mut rng));
    let c = Tensor3::from_fn(r, n2, n3, |_, _, _| normal(&mut rng));
    if r == 0 {
        return Ok(Tensor3::zeros(n1, n2, n3));
    }
    ctx.starm_product(&b, &c)
}
