//! Semidefinite programming over matrices and tensors.
//!
//! One operator-splitting core drives everything: the variable is a stack of
//! symmetric PSD blocks in scaled-vector form, constraints are dense rows
//! over that stack, and iterations alternate a cached affine projection with
//! a per-block PSD projection. Matrix SDPs use a single block; tensor
//! problems in the transform domain use one block per frontal slice, either
//! coupled (general route) or as independent subproblems (sliced route).

use rayon::prelude::*;

use crate::algebra::StarMContext;
use crate::error::{Error, Result};
use crate::linalg::{eigh, Mat};
use crate::scalar::{sc, Scalar};
use crate::tensor::Tensor3;

/// Optimization direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Min,
    Max,
}

/// Termination state of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// All residuals below tolerance; the iterate is feasible and stationary.
    Optimal,
    /// Iteration budget exhausted; the best iterate seen is returned.
    MaxIters,
    /// Equality constraints are mutually inconsistent (detected in presolve)
    /// or the cone and the affine space appear disjoint.
    InfeasibleSuspected,
    /// The iterates diverge along a cost-improving ray.
    UnboundedSuspected,
}

impl SolveStatus {
    fn severity(self) -> u8 {
        match self {
            SolveStatus::Optimal => 0,
            SolveStatus::MaxIters => 1,
            SolveStatus::UnboundedSuspected => 2,
            SolveStatus::InfeasibleSuspected => 3,
        }
    }

    /// The worse of two statuses, used when combining slice subproblems.
    pub fn worst(self, other: SolveStatus) -> SolveStatus {
        if self.severity() >= other.severity() {
            self
        } else {
            other
        }
    }
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::MaxIters => "max_iters",
            SolveStatus::InfeasibleSuspected => "infeasible_suspected",
            SolveStatus::UnboundedSuspected => "unbounded_suspected",
        };
        f.write_str(name)
    }
}

/// Relative residuals of the returned iterate.
#[derive(Debug, Clone, Copy)]
pub struct Residuals<T> {
    /// Equality-constraint violation, max-norm, relative to `1 + ‖b‖∞`.
    pub primal: T,
    /// Dual residual estimate `ρ‖z − z_prev‖ / (1 + ‖z‖)`.
    pub dual: T,
    /// Splitting gap `‖x − z‖ / (1 + ‖z‖)` between the affine and cone
    /// iterates.
    pub gap: T,
}

impl<T: Scalar> Residuals<T> {
    fn max(&self) -> T {
        T::max(self.primal, T::max(self.dual, self.gap))
    }

    fn combine(&self, other: &Residuals<T>) -> Residuals<T> {
        Residuals {
            primal: T::max(self.primal, other.primal),
            dual: T::max(self.dual, other.dual),
            gap: T::max(self.gap, other.gap),
        }
    }
}

/// Solver parameters.
#[derive(Debug, Clone)]
pub struct SolverConfig<T> {
    /// Relative tolerance on all three residuals.
    pub eps_rel: T,
    /// Absolute floor below which a residual always passes.
    pub eps_abs: T,
    /// Iteration budget.
    pub max_iters: usize,
    /// Over-relaxation factor in `(0, 2)`.
    pub over_relaxation: T,
    /// Normalize the cost vector before iterating.
    pub scaling: bool,
}

impl<T: Scalar> Default for SolverConfig<T> {
    fn default() -> Self {
        SolverConfig {
            eps_rel: sc(1e-6),
            eps_abs: sc(1e-8),
            max_iters: 50_000,
            over_relaxation: sc(1.5),
            scaling: true,
        }
    }
}

impl<T: Scalar> SolverConfig<T> {
    fn validate(&self) -> Result<()> {
        if !(self.eps_rel > T::zero() && self.eps_abs > T::zero()) {
            return Err(Error::InvalidArgument("solver tolerances must be positive".into()));
        }
        if !(self.over_relaxation > T::zero() && self.over_relaxation < sc(2.0)) {
            return Err(Error::InvalidArgument(
                "over-relaxation must lie in (0, 2)".into(),
            ));
        }
        Ok(())
    }
}

/// A matrix semidefinite program
/// `min/max ⟨C, X⟩ s.t. ⟨Aₗ, X⟩ = bₗ, X ⪰ 0`.
#[derive(Debug, Clone)]
pub struct MatrixSDP<T> {
    pub dim: usize,
    pub cost: Mat<T>,
    pub constraints: Vec<(Mat<T>, T)>,
    pub sense: Sense,
}

/// A tensor semidefinite program over the cone of the context transform.
#[derive(Debug, Clone)]
pub struct MSDPProblem<T> {
    pub ctx: StarMContext<T>,
    pub cost: Tensor3<T>,
    pub constraints: Vec<(Tensor3<T>, T)>,
    pub sense: Sense,
}

/// Solver output; `x` is the primal iterate (a matrix or a tensor).
#[derive(Debug, Clone)]
pub struct SDPSolution<P, T> {
    pub x: P,
    /// `⟨C, X⟩` of the returned iterate, in the problem's original data
    /// (not the internally scaled cost), regardless of sense.
    pub objective: T,
    pub status: SolveStatus,
    pub residuals: Residuals<T>,
    pub iterations: usize,
}

/// Length of the scaled-vector form of a symmetric `n x n` matrix.
pub fn svec_len(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Scaled vectorization of a symmetric matrix: diagonal entries verbatim,
/// off-diagonal entries times `√2`, upper triangle in row scan order. The
/// Euclidean inner product of two svecs equals the Frobenius inner product
/// of the matrices.
pub fn svec<T: Scalar>(a: &Mat<T>) -> Vec<T> {
    let n = a.rows();
    debug_assert!(a.is_square());
    let root2 = sc::<T>(2.0).sqrt();
    let mut v = Vec::with_capacity(svec_len(n));
    for i in 0..n {
        v.push(a[(i, i)]);
        for j in (i + 1)..n {
            v.push(root2 * a[(i, j)]);
        }
    }
    v
}

/// Inverse of [`svec`].
pub fn smat<T: Scalar>(v: &[T], n: usize) -> Mat<T> {
    debug_assert_eq!(v.len(), svec_len(n));
    let inv_root2 = T::one() / sc::<T>(2.0).sqrt();
    let mut a = Mat::zeros(n, n);
    let mut pos = 0;
    for i in 0..n {
        a[(i, i)] = v[pos];
        pos += 1;
        for j in (i + 1)..n {
            let x = v[pos] * inv_root2;
            a[(i, j)] = x;
            a[(j, i)] = x;
            pos += 1;
        }
    }
    a
}

/// Nearest PSD matrix in Frobenius norm: symmetrize, eigendecompose, clamp
/// negative eigenvalues to zero.
pub fn project_psd<T: Scalar>(s: &Mat<T>) -> Mat<T> {
    let n = s.rows();
    let (w, v) = eigh(&s.symmetrized());
    let mut out = Mat::zeros(n, n);
    for (k, &lam) in w.iter().enumerate() {
        if lam <= T::zero() {
            break; // eigenvalues are sorted descending
        }
        for i in 0..n {
            let vik = v[(i, k)] * lam;
            for j in 0..n {
                out[(i, j)] += vik * v[(j, k)];
            }
        }
    }
    out
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

fn norm2<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

fn norm_inf<T: Scalar>(a: &[T]) -> T {
    a.iter().fold(T::zero(), |acc, &x| T::max(acc, x.abs()))
}

/// Blockwise PSD projection of a stacked svec variable.
fn project_blocks<T: Scalar>(v: &[T], dims: &[usize]) -> Vec<T> {
    let mut out = Vec::with_capacity(v.len());
    let mut off = 0;
    for &n in dims {
        let len = svec_len(n);
        let block = smat(&v[off..off + len], n);
        out.extend(svec(&project_psd(&block)));
        off += len;
    }
    out
}

struct Presolve<T> {
    /// Orthonormalized constraint rows.
    q: Vec<Vec<T>>,
    /// Right-hand side in the orthonormalized row basis.
    beta: Vec<T>,
    inconsistent: bool,
}

/// Orthonormalize the constraint rows with two passes of modified
/// Gram-Schmidt, carrying the right-hand side through the identical
/// operations. Dependent rows either vanish consistently (dropped) or leave
/// a nonzero right-hand residue (the system is infeasible).
fn presolve_rows<T: Scalar>(rows: &[Vec<T>], b: &[T]) -> Presolve<T> {
    let mut q: Vec<Vec<T>> = Vec::with_capacity(rows.len());
    let mut beta: Vec<T> = Vec::with_capacity(rows.len());
    let mut dropped = 0;
    let mut inconsistent = false;
    for (row, &bl) in rows.iter().zip(b) {
        let orig_norm = norm2(row);
        let mut v = row.clone();
        let mut bb = bl;
        for _ in 0..2 {
            for (qa, &ba) in q.iter().zip(&beta) {
                let coef = dot(qa, &v);
                for (vi, &qi) in v.iter_mut().zip(qa) {
                    *vi -= coef * qi;
                }
                bb -= coef * ba;
            }
        }
        let nq = norm2(&v);
        if nq > sc::<T>(1e-10) * T::max(T::one(), orig_norm) {
            for vi in &mut v {
                *vi /= nq;
            }
            q.push(v);
            beta.push(bb / nq);
        } else if bb.abs() > sc::<T>(1e-8) * (T::one() + bl.abs()) {
            inconsistent = true;
            break;
        } else {
            dropped += 1;
        }
    }
    if dropped > 0 {
        log::warn!("presolve dropped {} dependent constraint row(s)", dropped);
    }
    Presolve {
        q,
        beta,
        inconsistent,
    }
}

struct ConicOutcome<T> {
    z: Vec<T>,
    status: SolveStatus,
    residuals: Residuals<T>,
    iterations: usize,
}

/// Core splitting iteration over stacked PSD blocks: minimize `⟨c, x⟩`
/// subject to the presolved equality rows and blockwise semidefiniteness.
fn solve_conic<T: Scalar>(
    dims: &[usize],
    cost: &[T],
    rows: &[Vec<T>],
    b: &[T],
    cfg: &SolverConfig<T>,
) -> Result<ConicOutcome<T>> {
    cfg.validate()?;
    let d: usize = dims.iter().map(|&n| svec_len(n)).sum();
    debug_assert_eq!(cost.len(), d);

    let pre = presolve_rows(rows, b);
    if pre.inconsistent {
        return Ok(ConicOutcome {
            z: vec![T::zero(); d],
            status: SolveStatus::InfeasibleSuspected,
            residuals: Residuals {
                primal: T::infinity(),
                dual: T::zero(),
                gap: T::zero(),
            },
            iterations: 0,
        });
    }
    let q = pre.q;
    let beta = pre.beta;

    let c_scale = if cfg.scaling {
        T::max(T::one(), norm2(cost))
    } else {
        T::one()
    };
    let c: Vec<T> = cost.iter().map(|&x| x / c_scale).collect();

    // Affine projection onto {x : Qx = β} for orthonormal rows Q.
    let project_affine = |v: &mut Vec<T>| {
        for (qa, &ba) in q.iter().zip(&beta) {
            let coef = dot(qa, v) - ba;
            for (vi, &qi) in v.iter_mut().zip(qa) {
                *vi -= coef * qi;
            }
        }
    };

    // Start from the minimum-norm affine-feasible point.
    let mut z = vec![T::zero(); d];
    project_affine(&mut z);
    let init_norm = norm2(&z);
    let mut u = vec![T::zero(); d];
    let mut rho: T = T::one();
    let alpha = cfg.over_relaxation;
    let beta_inf = norm_inf(&beta);

    let mut best_score = T::infinity();
    let mut best_z = z.clone();
    let mut best_res = Residuals {
        primal: T::infinity(),
        dual: T::infinity(),
        gap: T::infinity(),
    };
    let mut status = SolveStatus::MaxIters;
    let mut iterations = cfg.max_iters;

    let mut x = vec![T::zero(); d];
    let mut xt = vec![T::zero(); d];
    for it in 0..cfg.max_iters {
        // x-update: affine projection of z - u - c/ρ.
        for i in 0..d {
            x[i] = z[i] - u[i] - c[i] / rho;
        }
        project_affine(&mut x);
        // Over-relaxation.
        for i in 0..d {
            xt[i] = alpha * x[i] + (T::one() - alpha) * z[i];
        }
        // z-update: blockwise PSD projection of x̃ + u.
        let z_prev = std::mem::take(&mut z);
        let mut arg = vec![T::zero(); d];
        for i in 0..d {
            arg[i] = xt[i] + u[i];
        }
        z = project_blocks(&arg, dims);
        // Dual update.
        for i in 0..d {
            u[i] += xt[i] - z[i];
        }

        if (it + 1) % 25 == 0 || it + 1 == cfg.max_iters {
            let z_norm = norm2(&z);
            let mut qz_minus_beta = T::zero();
            for (qa, &ba) in q.iter().zip(&beta) {
                qz_minus_beta = T::max(qz_minus_beta, (dot(qa, &z) - ba).abs());
            }
            let diff_xz: T = x
                .iter()
                .zip(&z)
                .map(|(&a, &b)| (a - b) * (a - b))
                .sum::<T>()
                .sqrt();
            let diff_zz: T = z
                .iter()
                .zip(&z_prev)
                .map(|(&a, &b)| (a - b) * (a - b))
                .sum::<T>()
                .sqrt();
            let res = Residuals {
                primal: qz_minus_beta / (T::one() + beta_inf),
                gap: diff_xz / (T::one() + z_norm),
                dual: rho * diff_zz / (T::one() + z_norm),
            };
            let score = res.max();
            if score < best_score {
                best_score = score;
                best_z.copy_from_slice(&z);
                best_res = res;
            }
            let pass = |r: T| r <= cfg.eps_rel || r <= cfg.eps_abs;
            if pass(res.primal) && pass(res.gap) && pass(res.dual) {
                status = SolveStatus::Optimal;
                iterations = it + 1;
                best_z.copy_from_slice(&z);
                best_res = res;
                break;
            }
            if z_norm > sc::<T>(1e7) * (T::one() + init_norm) {
                status = SolveStatus::UnboundedSuspected;
                iterations = it + 1;
                best_z.copy_from_slice(&z);
                best_res = res;
                break;
            }
            // Balance the splitting and dual residuals by rescaling ρ.
            let r_abs = diff_xz;
            let s_abs = rho * diff_zz;
            if r_abs > sc::<T>(10.0) * s_abs && rho < sc(1e6) {
                rho *= sc(2.0);
                for ui in &mut u {
                    *ui /= sc(2.0);
                }
            } else if s_abs > sc::<T>(10.0) * r_abs && rho > sc(1e-6) {
                rho /= sc(2.0);
                for ui in &mut u {
                    *ui *= sc(2.0);
                }
            }
        }
    }

    Ok(ConicOutcome {
        z: best_z,
        status,
        residuals: best_res,
        iterations,
    })
}

fn check_symmetric_mat<T: Scalar>(m: &Mat<T>, what: &str) -> Result<()> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "{} must be square, got {}x{}",
            what,
            m.rows(),
            m.cols()
        )));
    }
    let defect = m.symmetry_defect();
    if defect > sc::<T>(1e-12) * T::max(T::one(), m.max_abs()) {
        return Err(Error::NotSymmetric(crate::scalar::as_f64(defect)));
    }
    Ok(())
}

/// Solve a matrix SDP.
pub fn solve_matrix_sdp<T: Scalar>(
    p: &MatrixSDP<T>,
    cfg: &SolverConfig<T>,
) -> Result<SDPSolution<Mat<T>, T>> {
    let n = p.dim;
    check_symmetric_mat(&p.cost, "cost matrix")?;
    if p.cost.rows() != n {
        return Err(Error::DimensionMismatch(format!(
            "cost is {}x{} but dim = {}",
            p.cost.rows(),
            p.cost.cols(),
            n
        )));
    }
    let mut rows = Vec::with_capacity(p.constraints.len());
    let mut b = Vec::with_capacity(p.constraints.len());
    for (a, bl) in &p.constraints {
        check_symmetric_mat(a, "constraint matrix")?;
        if a.rows() != n {
            return Err(Error::DimensionMismatch(format!(
                "constraint is {}x{} but dim = {}",
                a.rows(),
                a.cols(),
                n
            )));
        }
        rows.push(svec(a));
        b.push(*bl);
    }
    let mut cost = svec(&p.cost);
    if p.sense == Sense::Max {
        for ci in &mut cost {
            *ci = -*ci;
        }
    }
    let out = solve_conic(&[n], &cost, &rows, &b, cfg)?;
    let x = smat(&out.z, n);
    let objective = p.cost.dot(&x);
    Ok(SDPSolution {
        x,
        objective,
        status: out.status,
        residuals: out.residuals,
        iterations: out.iterations,
    })
}

fn validate_msdp<T: Scalar>(p: &MSDPProblem<T>) -> Result<(usize, usize)> {
    p.ctx.require_orthogonal()?;
    let (n, n2, n3) = p.cost.shape();
    if n != n2 {
        return Err(Error::DimensionMismatch(format!(
            "cost tensor must have square slices, got {}x{}",
            n, n2
        )));
    }
    if n3 != p.ctx.n3() {
        return Err(Error::DimensionMismatch(format!(
            "cost tensor has {} slices but the transform is {}-dimensional",
            n3,
            p.ctx.n3()
        )));
    }
    let sym_tol = sc::<T>(1e-12) * T::max(T::one(), p.cost.max_abs());
    if !p.cost.slices_symmetric_within(sym_tol) {
        return Err(Error::NotSymmetric(crate::scalar::as_f64(sym_tol)));
    }
    for (a, _) in &p.constraints {
        if a.shape() != (n, n, n3) {
            return Err(Error::DimensionMismatch(format!(
                "constraint tensor shape {:?} does not match cost {:?}",
                a.shape(),
                p.cost.shape()
            )));
        }
        let tol = sc::<T>(1e-12) * T::max(T::one(), a.max_abs());
        if !a.slices_symmetric_within(tol) {
            return Err(Error::NotSymmetric(crate::scalar::as_f64(tol)));
        }
    }
    Ok((n, n3))
}

fn hat_svec_concat<T: Scalar>(a_hat: &Tensor3<T>) -> Vec<T> {
    let mut v = Vec::with_capacity(a_hat.n3() * svec_len(a_hat.n1()));
    for k in 0..a_hat.n3() {
        v.extend(svec(&a_hat.slice_mat(k).symmetrized()));
    }
    v
}

fn tensor_from_blocks<T: Scalar>(z: &[T], n: usize, n3: usize) -> Tensor3<T> {
    let len = svec_len(n);
    let mut t = Tensor3::zeros(n, n, n3);
    for k in 0..n3 {
        t.set_slice(k, &smat(&z[k * len..(k + 1) * len], n));
    }
    t
}

/// Solve a tensor SDP by block-diagonalizing in the transform domain: one
/// coupled problem whose variable is the stack of transformed slices.
pub fn solve_msdp_general<T: Scalar>(
    p: &MSDPProblem<T>,
    cfg: &SolverConfig<T>,
) -> Result<SDPSolution<Tensor3<T>, T>> {
    let (n, n3) = validate_msdp(p)?;
    let cost_hat = p.ctx.to_hat(&p.cost)?;
    let mut cost = hat_svec_concat(&cost_hat);
    if p.sense == Sense::Max {
        for ci in &mut cost {
            *ci = -*ci;
        }
    }
    let mut rows = Vec::with_capacity(p.constraints.len());
    let mut b = Vec::with_capacity(p.constraints.len());
    for (a, bl) in &p.constraints {
        rows.push(hat_svec_concat(&p.ctx.to_hat(a)?));
        b.push(*bl);
    }
    let dims = vec![n; n3];
    let out = solve_conic(&dims, &cost, &rows, &b, cfg)?;
    let x_hat = tensor_from_blocks(&out.z, n, n3);
    let x = p.ctx.from_hat(&x_hat)?;
    let objective = p.cost.inner_product(&x)?;
    Ok(SDPSolution {
        x,
        objective,
        status: out.status,
        residuals: out.residuals,
        iterations: out.iterations,
    })
}

/// Solve a tensor SDP whose every constraint touches exactly one transformed
/// slice, as independent per-slice matrix SDPs solved in parallel.
///
/// Errors with [`Error::NotSliceSeparable`] when some constraint couples
/// slices; use [`solve_msdp_general`] for those problems.
pub fn solve_msdp_sliced<T: Scalar>(
    p: &MSDPProblem<T>,
    cfg: &SolverConfig<T>,
) -> Result<SDPSolution<Tensor3<T>, T>> {
    let (n, n3) = validate_msdp(p)?;
    let cost_hat = p.ctx.to_hat(&p.cost)?;

    // Group constraints by their single nonzero transformed slice.
    let mut groups: Vec<Vec<(Mat<T>, T)>> = vec![Vec::new(); n3];
    for (idx, (a, bl)) in p.constraints.iter().enumerate() {
        let a_hat = p.ctx.to_hat(a)?;
        let global = a_hat.max_abs();
        let cut = sc::<T>(1e-12) * global;
        let mut nonzero = Vec::new();
        for k in 0..n3 {
            if a_hat.slice_mat(k).max_abs() > cut {
                nonzero.push(k);
            }
        }
        match nonzero.as_slice() {
            [k] => groups[*k].push((a_hat.slice_mat(*k).symmetrized(), *bl)),
            [] => {
                // A zero constraint tensor: consistent iff b is zero.
                if bl.abs() > sc::<T>(1e-12) {
                    return Ok(SDPSolution {
                        x: Tensor3::zeros(n, n, n3),
                        objective: T::zero(),
                        status: SolveStatus::InfeasibleSuspected,
                        residuals: Residuals {
                            primal: T::infinity(),
                            dual: T::zero(),
                            gap: T::zero(),
                        },
                        iterations: 0,
                    });
                }
                log::warn!("constraint {} is identically zero; dropped", idx);
            }
            more => {
                return Err(Error::NotSliceSeparable(format!(
                    "constraint {} has {} nonzero transformed slices {:?}; \
                     use the general solver",
                    idx,
                    more.len(),
                    more
                )));
            }
        }
    }

    // One matrix SDP per slice, independent and order-deterministic.
    let slice_solutions: Vec<Result<SDPSolution<Mat<T>, T>>> = (0..n3)
        .into_par_iter()
        .map(|k| {
            let sub = MatrixSDP {
                dim: n,
                cost: cost_hat.slice_mat(k).symmetrized(),
                constraints: groups[k].clone(),
                sense: p.sense,
            };
            solve_matrix_sdp(&sub, cfg)
        })
        .collect();

    let mut x_hat = Tensor3::zeros(n, n, n3);
    let mut objective = T::zero();
    let mut status = SolveStatus::Optimal;
    let mut residuals = Residuals {
        primal: T::zero(),
        dual: T::zero(),
        gap: T::zero(),
    };
    let mut iterations = 0;
    for (k, sol) in slice_solutions.into_iter().enumerate() {
        let sol = sol?;
        x_hat.set_slice(k, &sol.x);
        objective += sol.objective;
        status = status.worst(sol.status);
        residuals = residuals.combine(&sol.residuals);
        iterations = iterations.max(sol.iterations);
    }
    let x = p.ctx.from_hat(&x_hat)?;
    Ok(SDPSolution {
        x,
        objective,
        status,
        residuals,
        iterations,
    })
}
