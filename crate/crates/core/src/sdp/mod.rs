//! Standard-form semidefinite programming:
//! minimize a linear functional of one or more PSD matrix blocks (plus free
//! scalar variables) subject to linear equality constraints.
//!
//! The solver is a first-order operator-splitting method on the homogeneous
//! self-dual embedding: each iteration projects onto the affine subspace
//! through a cached linear-system solve and onto the PSD cone through an
//! eigendecomposition. See [`solver`] for the engine, [`scaling`] for the
//! Ruiz equilibration applied before iterating.

mod linsolve;
mod scaling;
mod solver;

use nalgebra::DMatrix;
use thiserror::Error;

pub use solver::solve;

#[derive(Debug, Error)]
pub enum SdpError {
    #[error("block index {0} out of range")]
    BadBlock(usize),
    #[error("entry ({i},{j}) out of range for block {block} of dimension {dim}")]
    BadEntry { block: usize, i: usize, j: usize, dim: usize },
    #[error("free variable index {0} out of range")]
    BadFreeVar(usize),
    #[error("problem data contains NaN or infinite values")]
    NonFiniteData,
    #[error("solution shape does not match problem: {0}")]
    ShapeMismatch(String),
}

/// Sparse linear functional over the upper triangles of the PSD blocks and
/// the free variables. An entry `(block, i, j, c)` with `i ≤ j` contributes
/// `c · X_ij` (the symmetric mirror entry is implicit).
#[derive(Debug, Clone, Default)]
pub struct LinearForm {
    pub(crate) mat_entries: Vec<(usize, usize, usize, f64)>,
    pub(crate) free_entries: Vec<(usize, f64)>,
}

impl LinearForm {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `c · X_ij` on the given block; indices are normalized to `i ≤ j`.
    pub fn mat(mut self, block: usize, i: usize, j: usize, c: f64) -> Self {
        self.push_mat(block, i, j, c);
        self
    }

    pub fn free(mut self, index: usize, c: f64) -> Self {
        self.push_free(index, c);
        self
    }

    pub fn push_mat(&mut self, block: usize, i: usize, j: usize, c: f64) {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        self.mat_entries.push((block, i, j, c));
    }

    pub fn push_free(&mut self, index: usize, c: f64) {
        self.free_entries.push((index, c));
    }

    pub fn is_zero(&self) -> bool {
        self.mat_entries.iter().all(|&(_, _, _, c)| c == 0.0)
            && self.free_entries.iter().all(|&(_, c)| c == 0.0)
    }

    /// Evaluates the functional on concrete block matrices and free values.
    pub fn evaluate(&self, blocks: &[DMatrix<f64>], free: &[f64]) -> f64 {
        let mat: f64 = self
            .mat_entries
            .iter()
            .map(|&(b, i, j, c)| c * blocks[b][(i, j)])
            .sum();
        let fr: f64 = self.free_entries.iter().map(|&(k, c)| c * free[k]).sum();
        mat + fr
    }

    fn is_finite(&self) -> bool {
        self.mat_entries.iter().all(|&(_, _, _, c)| c.is_finite())
            && self.free_entries.iter().all(|&(_, c)| c.is_finite())
    }
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub lhs: LinearForm,
    pub rhs: f64,
}

/// Equality-constrained SDP over PSD blocks and free scalar variables.
#[derive(Debug, Clone)]
pub struct SdpProblem {
    pub name: String,
    blocks: Vec<usize>,
    free_dim: usize,
    constraints: Vec<Constraint>,
    objective: LinearForm,
}

impl SdpProblem {
    pub fn new(name: impl Into<String>) -> Self {
        SdpProblem {
            name: name.into(),
            blocks: Vec::new(),
            free_dim: 0,
            constraints: Vec::new(),
            objective: LinearForm::new(),
        }
    }

    /// Declares a PSD block of the given dimension; returns its index.
    pub fn add_psd_block(&mut self, dim: usize) -> usize {
        assert!(dim > 0, "PSD block dimension must be positive");
        self.blocks.push(dim);
        self.blocks.len() - 1
    }

    /// Declares `count` free scalar variables; returns the index of the first.
    pub fn add_free_vars(&mut self, count: usize) -> usize {
        let first = self.free_dim;
        self.free_dim += count;
        first
    }

    pub fn add_constraint(&mut self, lhs: LinearForm, rhs: f64) {
        self.constraints.push(Constraint { lhs, rhs });
    }

    pub fn set_objective(&mut self, objective: LinearForm) {
        self.objective = objective;
    }

    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    pub fn free_dim(&self) -> usize {
        self.free_dim
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective(&self) -> &LinearForm {
        &self.objective
    }

    /// Shape and finiteness validation, run before any iteration.
    pub fn validate(&self) -> Result<(), SdpError> {
        let check_form = |f: &LinearForm| -> Result<(), SdpError> {
            for &(b, i, j, _) in &f.mat_entries {
                let dim = *self.blocks.get(b).ok_or(SdpError::BadBlock(b))?;
                if i > j || j >= dim {
                    return Err(SdpError::BadEntry { block: b, i, j, dim });
                }
            }
            for &(k, _) in &f.free_entries {
                if k >= self.free_dim {
                    return Err(SdpError::BadFreeVar(k));
                }
            }
            if !f.is_finite() {
                return Err(SdpError::NonFiniteData);
            }
            Ok(())
        };
        check_form(&self.objective)?;
        for c in &self.constraints {
            check_form(&c.lhs)?;
            if !c.rhs.is_finite() {
                return Err(SdpError::NonFiniteData);
            }
        }
        Ok(())
    }

    /// Writes the problem in a sparse text format for cross-checking against
    /// external solvers. Layout:
    ///
    /// ```text
    /// name <name>
    /// blocks <d1> <d2> ...
    /// free <count>
    /// objective
    /// m <block> <i> <j> <coeff>      # one line per matrix entry
    /// f <index> <coeff>              # one line per free-variable entry
    /// constraint <rhs>               # then entries as above, repeated
    /// ```
    pub fn write_text(&self, w: &mut impl std::io::Write) -> std::io::Result<()> {
        writeln!(w, "name {}", self.name)?;
        write!(w, "blocks")?;
        for d in &self.blocks {
            write!(w, " {d}")?;
        }
        writeln!(w)?;
        writeln!(w, "free {}", self.free_dim)?;
        let dump = |w: &mut dyn std::io::Write, f: &LinearForm| -> std::io::Result<()> {
            for &(b, i, j, c) in &f.mat_entries {
                writeln!(w, "m {b} {i} {j} {c:?}")?;
            }
            for &(k, c) in &f.free_entries {
                writeln!(w, "f {k} {c:?}")?;
            }
            Ok(())
        };
        writeln!(w, "objective")?;
        dump(w, &self.objective)?;
        for c in &self.constraints {
            writeln!(w, "constraint {:?}", c.rhs)?;
            dump(w, &c.lhs)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    /// Objective problem solved to tolerance.
    Optimal,
    /// Feasibility problem (zero objective) solved to tolerance.
    Feasible,
    /// An approximate improving-ray certificate of primal infeasibility was found.
    Infeasible,
    /// A certificate of dual infeasibility (primal unboundedness) was found.
    Unbounded,
    /// Iteration budget exhausted: the outcome is undetermined, callers must
    /// not treat this as a refutation.
    MaxIterations,
    /// NaN/Inf appeared during iteration.
    NumericalFailure,
}

impl SdpStatus {
    pub fn is_solved(self) -> bool {
        matches!(self, SdpStatus::Optimal | SdpStatus::Feasible)
    }
}

/// Approximate improving ray `y` certifying primal infeasibility:
/// `‖Aᵀy‖ ≤ tol`, `bᵀy = -1`, `y` in the dual cone.
#[derive(Debug, Clone)]
pub struct InfeasibilityCertificate {
    /// Multiplier per equality constraint.
    pub y_eq: Vec<f64>,
    /// PSD dual block per problem block.
    pub y_blocks: Vec<DMatrix<f64>>,
    /// Residual `‖Aᵀy‖₂` of the normalized ray.
    pub ray_residual: f64,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub status: SdpStatus,
    pub block_values: Vec<DMatrix<f64>>,
    pub free_values: Vec<f64>,
    pub objective_value: f64,
    /// Max absolute equality-constraint violation of the returned values.
    pub primal_residual: f64,
    /// Relative dual residual `‖Aᵀy + c‖ / (1 + ‖c‖)`.
    pub dual_residual: f64,
    /// Relative duality gap.
    pub gap: f64,
    pub iterations: usize,
    /// Equality-constraint multipliers of the returned (approximate) dual.
    pub dual_eq: Vec<f64>,
    pub certificate: Option<InfeasibilityCertificate>,
}

/// Independent residual recomputation from problem data and a candidate
/// solution; shares no state with the solver.
#[derive(Debug, Clone, Copy)]
pub struct ResidualReport {
    pub max_violation: f64,
    pub min_eigenvalue: f64,
    pub objective_value: f64,
}

pub fn check_solution(prob: &SdpProblem, sol: &SdpSolution) -> Result<ResidualReport, SdpError> {
    check_values(prob, &sol.block_values, &sol.free_values)
}

/// Residuals for explicit block matrices / free values.
pub fn check_values(
    prob: &SdpProblem,
    blocks: &[DMatrix<f64>],
    free: &[f64],
) -> Result<ResidualReport, SdpError> {
    if blocks.len() != prob.blocks.len() {
        return Err(SdpError::ShapeMismatch(format!(
            "expected {} blocks, got {}",
            prob.blocks.len(),
            blocks.len()
        )));
    }
    for (b, m) in blocks.iter().enumerate() {
        let d = prob.blocks[b];
        if m.nrows() != d || m.ncols() != d {
            return Err(SdpError::ShapeMismatch(format!(
                "block {b}: expected {d}x{d}, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
    }
    if free.len() != prob.free_dim {
        return Err(SdpError::ShapeMismatch(format!(
            "expected {} free values, got {}",
            prob.free_dim,
            free.len()
        )));
    }
    let max_violation = prob
        .constraints
        .iter()
        .map(|c| (c.lhs.evaluate(blocks, free) - c.rhs).abs())
        .fold(0.0, f64::max);
    let min_eigenvalue = blocks
        .iter()
        .map(|m| min_eig_sym(m))
        .fold(f64::INFINITY, f64::min);
    let min_eigenvalue = if min_eigenvalue.is_finite() {
        min_eigenvalue
    } else {
        0.0 // no blocks
    };
    Ok(ResidualReport {
        max_violation,
        min_eigenvalue,
        objective_value: prob.objective.evaluate(blocks, free),
    })
}

pub(crate) fn min_eig_sym(m: &DMatrix<f64>) -> f64 {
    match m.nrows() {
        0 => 0.0,
        1 => m[(0, 0)],
        2 => {
            let (a, b, c) = (m[(0, 0)], m[(0, 1)], m[(1, 1)]);
            let t = 0.5 * (a + c);
            let d = (0.25 * (a - c) * (a - c) + b * b).sqrt();
            t - d
        }
        _ => {
            let es = m.clone().symmetric_eigen();
            es.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
        }
    }
}

/// Options controlling [`solve`].
#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Feasibility tolerance: max constraint violation and eigenvalue floor
    /// of a returned solution, and the improving-ray residual bound.
    pub feas_tol: f64,
    /// Relative duality-gap tolerance.
    pub gap_tol: f64,
    pub max_iters: usize,
    /// Convergence/certificate checks run every this many iterations.
    pub check_interval: usize,
    /// Over-relaxation parameter in (0, 2).
    pub relaxation: f64,
    /// Ruiz equilibration sweeps (0 disables scaling).
    pub scaling_iters: usize,
    /// Alternating-projection refinement of feasibility solutions.
    pub polish: bool,
    /// Dense Cholesky below this variable count, conjugate gradient above.
    pub dense_threshold: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            feas_tol: 1e-7,
            gap_tol: 1e-7,
            max_iters: 100_000,
            check_interval: 25,
            relaxation: 1.5,
            scaling_iters: 10,
            polish: true,
            dense_threshold: 900,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validate_rejects_bad_shapes_and_nan() {
        let mut p = SdpProblem::new("bad");
        let b = p.add_psd_block(2);
        p.add_constraint(LinearForm::new().mat(b, 0, 1, 1.0), 1.0);
        assert!(p.validate().is_ok());
        p.add_constraint(LinearForm::new().mat(b, 0, 5, 1.0), 1.0);
        assert!(matches!(p.validate(), Err(SdpError::BadEntry { .. })));

        let mut q = SdpProblem::new("nan");
        let b = q.add_psd_block(1);
        q.add_constraint(LinearForm::new().mat(b, 0, 0, f64::NAN), 1.0);
        assert!(matches!(q.validate(), Err(SdpError::NonFiniteData)));
    }

    #[test]
    fn check_values_reports_violation() {
        let mut p = SdpProblem::new("check");
        let b = p.add_psd_block(2);
        p.add_constraint(LinearForm::new().mat(b, 0, 0, 1.0), 1.0);
        p.add_constraint(LinearForm::new().mat(b, 0, 1, 1.0), 2.0);
        p.set_objective(LinearForm::new().mat(b, 1, 1, 1.0));

        // Hand-built feasible point: X = [[1,2],[2,4]].
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        let r = check_values(&p, &[x.clone()], &[]).unwrap();
        assert!(r.max_violation <= 1e-12);
        assert!(r.min_eigenvalue >= -1e-12);
        assert!((r.objective_value - 4.0).abs() <= 1e-12);

        // Perturbed X11 reports exactly the injected violation.
        let mut bad = x;
        bad[(0, 0)] += 1e-3;
        let r = check_values(&p, &[bad], &[]).unwrap();
        assert!((r.max_violation - 1e-3).abs() <= 1e-9);

        // Shape mismatch is a usage error.
        let wrong = DMatrix::zeros(3, 3);
        assert!(check_values(&p, &[wrong], &[]).is_err());
    }
}
