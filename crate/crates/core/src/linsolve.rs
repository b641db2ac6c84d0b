//! Sparse direct solvers for the per-step linear systems.
//!
//! SPD systems (elasticity, `C + tau B`) use a supernodal Cholesky factor;
//! the coupled block system of the Picard iteration is symmetrized to a
//! quasi-definite matrix and factorized as `L D L^T` after diagonal
//! equilibration. Every solve is checked
//! afterwards with an independent matrix-vector product and polished by a
//! few steps of iterative refinement if needed.

use std::sync::Arc;

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::cholesky::ldlt::factor::LdltRegularization;
use faer::linalg::solvers::Solve;
use faer::sparse::linalg::cholesky::{factorize_symbolic_cholesky, LdltRef, SymbolicCholesky};
use faer::sparse::linalg::solvers::{Llt, SymbolicLlt};
use faer::sparse::{SparseColMat, SymbolicSparseColMat};
use faer::{Conj, Mat, Par, Side};

use crate::error::{Error, Result};
use crate::sparse::{norm2, SparseOperator};

/// Default relative residual tolerance for linear solves.
pub const DEFAULT_TOL: f64 = 1e-12;

const MAX_REFINEMENTS: usize = 4;

fn to_faer(op: &SparseOperator) -> Result<SparseColMat<usize, f64>> {
    // CSR arrays of A are the CSC arrays of A^T
    let t = op.transpose();
    let symbolic = SymbolicSparseColMat::new_checked(
        op.nrows(),
        op.ncols(),
        t.row_offsets().to_vec(),
        None,
        t.col_indices().to_vec(),
    );
    Ok(SparseColMat::new(symbolic, t.values().to_vec()))
}

fn solve_with(rhs: &[f64], solver: &impl Solve<f64>) -> Vec<f64> {
    let mut b = Mat::<f64>::zeros(rhs.len(), 1);
    for (i, v) in rhs.iter().enumerate() {
        b[(i, 0)] = *v;
    }
    solver.solve_in_place(b.as_mut());
    (0..rhs.len()).map(|i| b[(i, 0)]).collect()
}

fn residual(op: &SparseOperator, x: &[f64], rhs: &[f64]) -> Vec<f64> {
    let ax = op.mul_vec(x);
    rhs.iter().zip(ax).map(|(b, a)| b - a).collect()
}

fn check_len(op: &SparseOperator, rhs: &[f64]) -> Result<()> {
    if op.nrows() != op.ncols() {
        return Err(Error::invalid(format!("operator is {}x{}, not square", op.nrows(), op.ncols())));
    }
    if rhs.len() != op.nrows() {
        return Err(Error::invalid(format!(
            "right-hand side has length {}, operator has {} rows",
            rhs.len(),
            op.nrows()
        )));
    }
    Ok(())
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("tolerance must lie in (0, 1), got {tol}")))
    }
}

/// Cholesky factor of an SPD operator, kept together with the operator for
/// residual checks.
pub struct SpdFactor {
    op: SparseOperator,
    llt: Llt<usize, f64>,
}

impl std::fmt::Debug for SpdFactor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpdFactor").field("n", &self.op.nrows()).finish()
    }
}

impl SpdFactor {
    pub fn new(op: &SparseOperator) -> Result<Self> {
        Self::with_symbolic(op, None).map(|(f, _)| f)
    }

    /// Factorizes `op`, reusing a symbolic analysis of the same pattern when given.
    pub fn with_symbolic(
        op: &SparseOperator,
        symbolic: Option<&SymbolicLlt<usize>>,
    ) -> Result<(Self, SymbolicLlt<usize>)> {
        if op.nrows() != op.ncols() {
            return Err(Error::invalid("Cholesky needs a square operator"));
        }
        let mat = to_faer(op)?;
        let symbolic = match symbolic {
            Some(s) => s.clone(),
            None => SymbolicLlt::try_new(mat.symbolic(), Side::Lower)
                .map_err(|e| Error::Factorization(format!("symbolic Cholesky: {e:?}")))?,
        };
        let llt = Llt::try_new_with_symbolic(symbolic.clone(), mat.as_ref(), Side::Lower)
            .map_err(|e| Error::Factorization(format!("Cholesky: {e:?}")))?;
        Ok((SpdFactor { op: op.clone(), llt }, symbolic))
    }

    pub fn operator(&self) -> &SparseOperator {
        &self.op
    }

    pub fn solve(&self, rhs: &[f64], tol: f64) -> Result<Vec<f64>> {
        check_tol(tol)?;
        check_len(&self.op, rhs)?;
        let rhs_norm = norm2(rhs);
        if rhs_norm == 0.0 {
            return Ok(vec![0.0; rhs.len()]);
        }
        let mut x = solve_with(rhs, &self.llt);
        let mut rel = norm2(&residual(&self.op, &x, rhs)) / rhs_norm;
        for _ in 0..MAX_REFINEMENTS {
            if rel <= tol {
                break;
            }
            let r = residual(&self.op, &x, rhs);
            let dx = solve_with(&r, &self.llt);
            x.iter_mut().zip(&dx).for_each(|(a, d)| *a += d);
            rel = norm2(&residual(&self.op, &x, rhs)) / rhs_norm;
        }
        if rel <= tol && rel.is_finite() {
            Ok(x)
        } else {
            Err(Error::SolverFailure { context: "SPD solve".into(), residual: rel })
        }
    }
}

/// One-shot SPD solve with relative residual `||op x - rhs|| / ||rhs|| <= tol`.
pub fn solve_spd(op: &SparseOperator, rhs: &[f64], tol: f64) -> Result<Vec<f64>> {
    check_tol(tol)?;
    check_len(op, rhs)?;
    if norm2(rhs) == 0.0 {
        return Ok(vec![0.0; rhs.len()]);
    }
    SpdFactor::new(op)?.solve(rhs, tol)
}

/// Coupled system `[A, -D^T; D, C + tau B] (u, p) = (rhs_u, rhs_p)`.
#[derive(Debug, Clone)]
pub struct BlockSystem {
    pub elasticity: SparseOperator,
    pub coupling: SparseOperator,
    pub pressure_block: SparseOperator,
    pub tau: f64,
}

impl BlockSystem {
    pub fn validate(&self) -> Result<()> {
        let nu = self.elasticity.nrows();
        let np = self.pressure_block.nrows();
        if self.elasticity.ncols() != nu
            || self.pressure_block.ncols() != np
            || self.coupling.nrows() != np
            || self.coupling.ncols() != nu
        {
            return Err(Error::invalid("inconsistent block dimensions"));
        }
        if !(self.tau > 0.0) {
            return Err(Error::invalid(format!("tau must be positive, got {}", self.tau)));
        }
        Ok(())
    }

    pub fn monolithic(&self) -> Result<SparseOperator> {
        self.validate()?;
        let coupling_t = self.coupling.transpose().scaled(-1.0);
        SparseOperator::block(&self.elasticity, &coupling_t, &self.coupling, &self.pressure_block)
    }
}

/// Symmetric diagonal equilibration `S = diag(|k_ii|)^{-1/2}`; rows without a
/// usable diagonal keep unit scale.
pub fn equilibration(op: &SparseOperator) -> Vec<f64> {
    op.diagonal()
        .into_iter()
        .map(|d| if d.abs() > 0.0 && d.is_finite() { 1.0 / d.abs().sqrt() } else { 1.0 })
        .collect()
}

/// `||S r|| / ||S b||` for the residual `r = b - K x`; zero when `S b` is zero
/// and `r` is zero.
pub fn scaled_relative_residual(scale: &[f64], residual: &[f64], rhs: &[f64]) -> f64 {
    let weighted = |v: &[f64]| v.iter().zip(scale).map(|(a, s)| (a * s) * (a * s)).sum::<f64>().sqrt();
    let r = weighted(residual);
    let b = weighted(rhs);
    if b == 0.0 {
        if r == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        r / b
    }
}

/// Shared symbolic analysis of a block operator pattern.
pub type BlockSymbolic = Arc<SymbolicCholesky<usize>>;

/// Factor of a coupled operator `K = [A, -D^T; D, P]` with `A` and `P`
/// symmetric positive definite.
///
/// Negating the second block row gives the symmetric quasi-definite matrix
/// `[A, -D^T; -D, -P]`, which admits an `L D L^T` factorization for every
/// symmetric ordering. The factorization runs on the diagonally equilibrated
/// matrix with the pivot signs of the two blocks prescribed.
pub struct BlockFactor {
    op: SparseOperator,
    split: usize,
    scale: Vec<f64>,
    symbolic: BlockSymbolic,
    values: Vec<f64>,
}

impl std::fmt::Debug for BlockFactor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BlockFactor").field("n", &self.op.nrows()).field("split", &self.split).finish()
    }
}

impl BlockFactor {
    /// Factorizes `op`, whose first `split` unknowns form the displacement
    /// block, reusing a symbolic analysis of the same pattern when given.
    pub fn with_symbolic(
        op: &SparseOperator,
        split: usize,
        symbolic: Option<&BlockSymbolic>,
    ) -> Result<(Self, BlockSymbolic)> {
        let n = op.nrows();
        if op.ncols() != n {
            return Err(Error::invalid("block factorization needs a square operator"));
        }
        if split > n {
            return Err(Error::invalid(format!("block split {split} exceeds dimension {n}")));
        }
        let scale = equilibration(op);
        let mut sym = op.clone();
        {
            let offsets = op.row_offsets().to_vec();
            let cols = op.col_indices().to_vec();
            let values = sym.values_mut();
            for i in 0..n {
                let sign = if i < split { 1.0 } else { -1.0 };
                for k in offsets[i]..offsets[i + 1] {
                    values[k] *= sign * scale[i] * scale[cols[k]];
                }
            }
        }
        let mat = to_faer(&sym)?;
        let symbolic = match symbolic {
            Some(s) if s.nrows() == n => s.clone(),
            Some(_) => return Err(Error::invalid("symbolic analysis belongs to a different pattern")),
            None => Arc::new(
                factorize_symbolic_cholesky(mat.symbolic(), Side::Lower, Default::default(), Default::default())
                    .map_err(|e| Error::Factorization(format!("symbolic LDL^T: {e:?}")))?,
            ),
        };
        let signs: Vec<i8> = (0..n).map(|i| if i < split { 1 } else { -1 }).collect();
        let regularization = LdltRegularization {
            dynamic_regularization_signs: Some(&signs),
            dynamic_regularization_delta: 1e-10,
            dynamic_regularization_epsilon: 1e-14,
        };
        let mut values = vec![0.0; symbolic.len_val()];
        let mut buffer = MemBuffer::new(symbolic.factorize_numeric_ldlt_scratch::<f64>(Par::Seq, Default::default()));
        symbolic
            .factorize_numeric_ldlt(
                &mut values,
                mat.as_ref(),
                Side::Lower,
                regularization,
                Par::Seq,
                MemStack::new(&mut buffer),
                Default::default(),
            )
            .map_err(|e| Error::Factorization(format!("LDL^T: {e:?}")))?;
        Ok((BlockFactor { op: op.clone(), split, scale, symbolic: symbolic.clone(), values }, symbolic))
    }

    pub fn operator(&self) -> &SparseOperator {
        &self.op
    }

    pub fn scale(&self) -> &[f64] {
        &self.scale
    }

    fn apply(&self, rhs: &[f64]) -> Vec<f64> {
        let n = rhs.len();
        let mut b = Mat::<f64>::zeros(n, 1);
        for i in 0..n {
            let sign = if i < self.split { 1.0 } else { -1.0 };
            b[(i, 0)] = sign * rhs[i] * self.scale[i];
        }
        let mut buffer = MemBuffer::new(self.symbolic.solve_in_place_scratch::<f64>(1, Par::Seq));
        LdltRef::new(&self.symbolic, &self.values).solve_in_place_with_conj(
            Conj::No,
            b.as_mut(),
            Par::Seq,
            MemStack::new(&mut buffer),
        );
        (0..n).map(|i| b[(i, 0)] * self.scale[i]).collect()
    }

    /// Solves with the residual measured in the equilibrated norm,
    /// `||S (b - K x)|| / ||S b|| <= tol`.
    pub fn solve(&self, rhs: &[f64], tol: f64) -> Result<Vec<f64>> {
        check_tol(tol)?;
        check_len(&self.op, rhs)?;
        if rhs.iter().all(|v| *v == 0.0) {
            return Ok(vec![0.0; rhs.len()]);
        }
        let mut x = self.apply(rhs);
        let mut r = residual(&self.op, &x, rhs);
        let mut rel = scaled_relative_residual(&self.scale, &r, rhs);
        for _ in 0..MAX_REFINEMENTS {
            if rel <= tol {
                break;
            }
            let dx = self.apply(&r);
            x.iter_mut().zip(&dx).for_each(|(a, d)| *a += d);
            r = residual(&self.op, &x, rhs);
            rel = scaled_relative_residual(&self.scale, &r, rhs);
        }
        if rel <= tol && rel.is_finite() {
            Ok(x)
        } else {
            Err(Error::SolverFailure { context: "block solve".into(), residual: rel })
        }
    }
}

/// Solves the coupled block system; returns `(u, p)`.
pub fn solve_block(sys: &BlockSystem, rhs_u: &[f64], rhs_p: &[f64], tol: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let k = sys.monolithic()?;
    let (factor, _) = BlockFactor::with_symbolic(&k, sys.elasticity.nrows(), None)?;
    let mut rhs = Vec::with_capacity(rhs_u.len() + rhs_p.len());
    rhs.extend_from_slice(rhs_u);
    rhs.extend_from_slice(rhs_p);
    let x = factor.solve(&rhs, tol)?;
    let nu = sys.elasticity.nrows();
    Ok((x[..nu].to_vec(), x[nu..].to_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_two_by_two() {
        let r = vec![1.0, -2.0, 3.0];
        let x = solve_spd(&SparseOperator::identity(3), &r, 1e-12).unwrap();
        assert_eq!(x, r);

        let a = SparseOperator::from_dense(2, 2, &[2.0, 1.0, 1.0, 2.0]).unwrap();
        let x = solve_spd(&a, &[3.0, 3.0], 1e-12).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let a = SparseOperator::from_dense(2, 2, &[2.0, 1.0, 1.0, 2.0]).unwrap();
        assert_eq!(solve_spd(&a, &[0.0, 0.0], 1e-12).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn bad_inputs() {
        let a = SparseOperator::identity(2);
        assert!(matches!(solve_spd(&a, &[1.0], 1e-12), Err(Error::InvalidArgument(_))));
        assert!(matches!(solve_spd(&a, &[1.0, 1.0], 0.0), Err(Error::InvalidArgument(_))));
        let indefinite = SparseOperator::from_dense(2, 2, &[1.0, 2.0, 2.0, 1.0]).unwrap();
        assert!(solve_spd(&indefinite, &[1.0, 0.0], 1e-12).is_err());
    }

    #[test]
    fn block_with_zero_coupling_decouples() {
        let a = SparseOperator::from_dense(2, 2, &[4.0, 1.0, 1.0, 3.0]).unwrap();
        let c = SparseOperator::from_dense(1, 1, &[2.0]).unwrap();
        let sys = BlockSystem { elasticity: a.clone(), coupling: SparseOperator::zeros(1, 2), pressure_block: c.clone(), tau: 0.5 };
        let (u, p) = solve_block(&sys, &[1.0, 2.0], &[3.0], 1e-12).unwrap();
        let u_ref = solve_spd(&a, &[1.0, 2.0], 1e-12).unwrap();
        for (x, y) in u.iter().zip(&u_ref) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!((p[0] - 1.5).abs() < 1e-12);

        let (u, p) = solve_block(&sys, &[0.0, 0.0], &[0.0], 1e-12).unwrap();
        assert!(u.iter().chain(&p).all(|v| *v == 0.0));
    }
}
