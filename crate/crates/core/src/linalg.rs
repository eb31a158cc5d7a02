//! Linear algebra backends: sparse direct solves and dense rank/nullspace
//! queries.  Sparse factorization is delegated to faer; dense spectral work
//! to nalgebra.

use faer::dyn_stack::{MemBuffer, MemStack, StackReq};
use faer::prelude::*;
use faer::sparse::linalg::cholesky::{
    factorize_symbolic_cholesky, CholeskySymbolicParams, SymmetricOrdering,
};
use faer::sparse::{SparseColMat, Triplet};
use faer::{Conj, Par, Side};

use crate::assembly::SparseMatrix;
use crate::error::{Error, Result};

/// Relative residual threshold a direct solve must satisfy.
pub const RESIDUAL_TOL: f64 = 1e-10;

fn to_faer(a: &SparseMatrix) -> Result<SparseColMat<usize, f64>> {
    let trips: Vec<Triplet<usize, usize, f64>> = a
        .triplets()
        .into_iter()
        .map(|(i, j, v)| Triplet::new(i, j, v))
        .collect();
    SparseColMat::<usize, f64>::try_new_from_triplets(a.nrows, a.ncols, &trips)
        .map_err(|e| Error::SingularSystem(format!("triplet conversion: {:?}", e)))
}

fn check_residual(a: &SparseMatrix, x: &[f64], b: &[f64]) -> Result<()> {
    let r = a.matvec(x);
    let res_norm: f64 = r
        .iter()
        .zip(b)
        .map(|(ri, bi)| (ri - bi) * (ri - bi))
        .sum::<f64>()
        .sqrt();
    let b_norm: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let rel = res_norm / b_norm.max(1.0);
    if !rel.is_finite() || rel > RESIDUAL_TOL {
        return Err(Error::SingularSystem(format!(
            "direct solve residual {:.3e} exceeds {:.1e}",
            rel, RESIDUAL_TOL
        )));
    }
    Ok(())
}

fn check_square(a: &SparseMatrix, b: &[f64]) -> Result<()> {
    if a.nrows != a.ncols {
        return Err(Error::DimensionMismatch(format!(
            "direct solve needs a square matrix, got {}x{}",
            a.nrows, a.ncols
        )));
    }
    if b.len() != a.nrows {
        return Err(Error::DimensionMismatch(format!(
            "rhs length {} vs matrix order {}",
            b.len(),
            a.nrows
        )));
    }
    Ok(())
}

/// Solve a *symmetric* (possibly indefinite) system A x = b via a sparse
/// LDL^T factorization with a fill-reducing AMD ordering, statically
/// regularized and polished by iterative refinement.
///
/// Saddle-point blocks with zero diagonal blocks cause catastrophic fill
/// under LU partial pivoting, so symmetric systems should prefer this path.
/// Pivots with magnitude below a small threshold are perturbed (static
/// pivoting); the perturbation is then removed from the solution by
/// iterative refinement.  If refinement fails to reach the residual
/// contract, we fall back to sparse LU.
pub fn sparse_symmetric_solve(a: &SparseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    check_square(a, b)?;
    match ldlt_solve(a, b) {
        Ok(x) => Ok(x),
        Err(_) => sparse_direct_solve(a, b),
    }
}

fn ldlt_solve(a: &SparseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.nrows;
    let mat = to_faer(a)?;
    let symbolic = factorize_symbolic_cholesky(
        mat.symbolic(),
        Side::Lower,
        SymmetricOrdering::Amd,
        CholeskySymbolicParams::default(),
    )
    .map_err(|e| Error::SingularSystem(format!("symbolic factorization: {:?}", e)))?;

    let mut l_values = vec![0.0f64; symbolic.len_val()];
    let req = StackReq::any_of(&[
        symbolic.factorize_numeric_ldlt_scratch::<f64>(Par::Seq, Default::default()),
        symbolic.solve_in_place_scratch::<f64>(1, Par::Seq),
    ]);
    let mut mem = MemBuffer::try_new(req)
        .map_err(|_| Error::SingularSystem("factorization workspace allocation failed".into()))?;
    let stack = MemStack::new(&mut mem);

    let amax = a.vals.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let reg = faer::linalg::cholesky::ldlt::factor::LdltRegularization {
        dynamic_regularization_signs: None,
        dynamic_regularization_delta: 1e-10 * amax,
        dynamic_regularization_epsilon: 1e-10 * amax,
    };
    let ldlt = symbolic
        .factorize_numeric_ldlt(&mut l_values, mat.rb(), Side::Lower, reg, Par::Seq, stack, Default::default())
        .map_err(|e| Error::SingularSystem(format!("LDLT factorization: {:?}", e)))?;

    // The static regularization perturbs a handful of pivots; iterative
    // refinement removes that perturbation from the solution.
    let b_norm = norm(b).max(1.0);
    let mut x = vec![0.0f64; n];
    let mut r = b.to_vec();
    let mut prev_rel = f64::INFINITY;
    for _ in 0..100 {
        let mut rhs = faer::Mat::from_fn(n, 1, |i, _| r[i]);
        ldlt.solve_in_place_with_conj(Conj::No, rhs.as_mut(), Par::Seq, stack);
        for i in 0..n {
            x[i] += rhs[(i, 0)];
        }
        let ax = a.matvec(&x);
        for i in 0..n {
            r[i] = b[i] - ax[i];
        }
        let rel = norm(&r) / b_norm;
        // Stop at (near) machine precision or once refinement stagnates.
        if rel <= 1e-15 || rel >= 0.9 * prev_rel {
            break;
        }
        prev_rel = rel;
    }
    check_residual(a, &x, b)?;
    Ok(x)
}

/// Solve A x = b by sparse LU.  Fails if factorization breaks down or the
/// relative residual ||Ax-b|| / max(||b||, 1) exceeds `RESIDUAL_TOL`.
pub fn sparse_direct_solve(a: &SparseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    check_square(a, b)?;
    let mat = to_faer(a)?;
    let lu = mat
        .sp_lu()
        .map_err(|e| Error::SingularSystem(format!("sparse LU failed: {:?}", e)))?;
    let rhs = faer::Mat::from_fn(b.len(), 1, |i, _| b[i]);
    let sol = lu.solve(&rhs);
    let x: Vec<f64> = (0..b.len()).map(|i| sol[(i, 0)]).collect();
    check_residual(a, &x, b)?;
    Ok(x)
}

/// Numerical rank and an orthonormal nullspace basis of a dense matrix,
/// using an SVD cutoff of `1e-10 * sigma_max`.
pub fn dense_rank_and_nullspace(a: &nalgebra::DMatrix<f64>) -> (usize, Vec<Vec<f64>>) {
    let ncols = a.ncols();
    let svd = a.clone().svd(false, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let tol = 1e-10 * smax.max(1e-300);
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    let vt = svd.v_t.expect("svd requested v_t");
    let mut null = Vec::new();
    for k in rank..ncols.min(vt.nrows()) {
        null.push(vt.row(k).iter().cloned().collect());
    }
    // If A has fewer rows than columns, V^T rows below min(m,n) are not
    // produced by the thin SVD; the remaining nullspace directions are not
    // needed by callers (we only use square or tall systems).
    (rank, null)
}

/// Euclidean norm helper.
pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Dot product helper.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
