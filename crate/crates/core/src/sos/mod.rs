//! Sum-of-squares programming: membership checks, programs over unknown
//! polynomial/scalar decision variables, and quadratic-module (multiplier)
//! certificates of positivity on basic semialgebraic sets.
//!
//! Every constraint `expr ∈ Σ` is compiled to a Gram PSD block plus
//! coefficient-matching equality rows; SOS-kind decisions get their own Gram
//! blocks, free polynomials and scalars become free SDP variables. One
//! [`SosProgram`] therefore maps to exactly one [`SdpProblem`].

mod compile;
mod expr;

pub use expr::{PolyVarId, ScalarVarId, SosExpr};

use nalgebra::DMatrix;
use thiserror::Error;

use crate::poly::{Monomial, Polynomial, VarSet};
use crate::sdp::{self, InfeasibilityCertificate, SdpStatus, SolverOptions};

/// Default margin coefficient for strict inequalities: strict positivity is
/// encoded as `p − λ‖x‖² ∈ Σ`.
pub const DEFAULT_MARGIN: f64 = 1e-6;

/// Max allowed `max |coeff(p − zᵀQz)| / (1 + max |coeff(p)|)` for a returned
/// Gram certificate.
pub const GRAM_RECONSTRUCTION_TOL: f64 = 1e-6;

/// Min allowed eigenvalue of a returned Gram matrix.
pub const GRAM_EIGEN_FLOOR: f64 = -1e-7;

#[derive(Debug, Error)]
pub enum SosError {
    #[error("degree must be even, got {0}")]
    OddDegree(u32),
    #[error("products of two decision variables are not allowed (program must stay affine)")]
    NonAffine,
    #[error("expression uses a decision variable from another program")]
    ForeignDecision,
    #[error("region must contain at least one constraint polynomial")]
    EmptyRegion,
    #[error("sdp backend error: {0}")]
    Sdp(#[from] sdp::SdpError),
}

/// PSD Gram factorization `p(x) = z(x)ᵀ Q z(x)` witnessing SOS membership.
#[derive(Debug, Clone)]
pub struct GramCertificate {
    pub basis: Vec<Monomial>,
    pub gram: DMatrix<f64>,
    pub eigen_floor: f64,
}

impl GramCertificate {
    /// Rebuilds `zᵀQz` as a polynomial over `vars`.
    pub fn reconstruct(&self, vars: &VarSet) -> Polynomial {
        let n = self.basis.len();
        let mut terms = Vec::new();
        for a in 0..n {
            for b in a..n {
                let c = if a == b {
                    self.gram[(a, b)]
                } else {
                    2.0 * self.gram[(a, b)]
                };
                if c != 0.0 {
                    terms.push((self.basis[a].mul(&self.basis[b]), c));
                }
            }
        }
        Polynomial::from_terms(vars.clone(), terms)
    }

    /// Max absolute coefficient of `p − zᵀQz`.
    pub fn reconstruction_residual(&self, p: &Polynomial) -> f64 {
        let diff = p - &self.reconstruct(p.varset());
        diff.max_abs_coeff()
    }
}

/// Result of a plain SOS membership check.
#[derive(Debug)]
pub enum SosCheck {
    Sos(GramCertificate),
    /// Not a sum of squares; carries the solver's improving-ray certificate
    /// when one was produced.
    NotSos(Option<InfeasibilityCertificate>),
    /// The backend could not decide (iteration cap, numerical failure).
    /// Never to be treated as a refutation.
    Undetermined(String),
}

/// All monomials in the given variables of total degree ≤ `degree`/2, in
/// graded-lex order — the Gram basis for an SOS polynomial of that degree.
pub fn monomial_basis(
    vars: &[usize],
    degree: u32,
) -> Result<Vec<Monomial>, SosError> {
    if degree % 2 != 0 {
        return Err(SosError::OddDegree(degree));
    }
    Ok(monomials_in_range(vars, 0, degree / 2))
}

/// All monomials over `vars` with total degree in `[lo, hi]`, grlex-sorted.
pub(crate) fn monomials_in_range(vars: &[usize], lo: u32, hi: u32) -> Vec<Monomial> {
    let mut out = Vec::new();
    let mut stack: Vec<(usize, u32)> = Vec::new();
    fn rec(
        vars: &[usize],
        pos: usize,
        remaining: u32,
        lo: u32,
        used: u32,
        stack: &mut Vec<(usize, u32)>,
        out: &mut Vec<Monomial>,
    ) {
        if pos == vars.len() {
            if used >= lo {
                out.push(Monomial::from_pairs(stack.iter().copied()));
            }
            return;
        }
        for e in 0..=remaining {
            if e > 0 {
                stack.push((vars[pos], e));
            }
            rec(vars, pos + 1, remaining - e, lo, used + e, stack, out);
            if e > 0 {
                stack.pop();
            }
        }
    }
    rec(vars, 0, hi, lo, 0, &mut stack, &mut out);
    out.sort();
    out
}

/// Options shared by the SOS entry points.
#[derive(Debug, Clone)]
pub struct SosOptions {
    pub solver: SolverOptions,
    /// Basis selection: degree bounds only (default), or an additional
    /// iterative diagonal-consistency filter on the achievable support.
    pub support_filter: bool,
}

impl Default for SosOptions {
    fn default() -> Self {
        SosOptions {
            solver: SolverOptions::default(),
            support_filter: false,
        }
    }
}

/// `λ · Σ x_i²` over the given variable indices.
pub fn strictness_margin(vars: &VarSet, indices: &[usize], lambda: f64) -> Polynomial {
    vars.norm_squared(indices).scale(lambda)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolyKind {
    /// Constrained to be a sum of squares (Gram-parameterized).
    Sos,
    /// Unconstrained coefficients.
    Free,
}

pub(crate) struct DecisionDef {
    pub name: String,
    pub basis: Vec<Monomial>,
    pub kind: PolyKind,
}

/// A sum-of-squares feasibility/optimization program: SOS constraints that
/// are affine in polynomial and scalar decision variables, with an optional
/// linear objective over the scalars and optional quadratic coefficient
/// regularization (via an epigraph block).
pub struct SosProgram {
    vars: VarSet,
    decisions: Vec<DecisionDef>,
    scalars: Vec<String>,
    constraints: Vec<SosExpr>,
    objective: Vec<(ScalarVarId, f64)>,
    /// Groups of free-poly coefficients whose squared sum is minimized.
    quad_costs: Vec<(Vec<(PolyVarId, usize)>, f64)>,
}

impl SosProgram {
    pub fn new(vars: VarSet) -> SosProgram {
        SosProgram {
            vars,
            decisions: Vec::new(),
            scalars: Vec::new(),
            constraints: Vec::new(),
            objective: Vec::new(),
            quad_costs: Vec::new(),
        }
    }

    pub fn varset(&self) -> &VarSet {
        &self.vars
    }

    pub fn add_sos_poly(&mut self, name: impl Into<String>, basis: Vec<Monomial>) -> PolyVarId {
        self.decisions.push(DecisionDef {
            name: name.into(),
            basis,
            kind: PolyKind::Sos,
        });
        PolyVarId(self.decisions.len() - 1)
    }

    pub fn add_free_poly(&mut self, name: impl Into<String>, basis: Vec<Monomial>) -> PolyVarId {
        self.decisions.push(DecisionDef {
            name: name.into(),
            basis,
            kind: PolyKind::Free,
        });
        PolyVarId(self.decisions.len() - 1)
    }

    pub fn add_scalar(&mut self, name: impl Into<String>) -> ScalarVarId {
        self.scalars.push(name.into());
        ScalarVarId(self.scalars.len() - 1)
    }

    /// The decision polynomial as an expression.
    pub fn poly(&self, id: PolyVarId) -> SosExpr {
        let vars = self.vars.clone();
        self.poly_map(id, move |w| {
            Polynomial::from_terms(vars.clone(), [(w.clone(), 1.0)])
        })
    }

    /// A linear image of a decision polynomial: the coefficient at each value
    /// monomial `w` is scaled by the known polynomial `f(w)`. With
    /// `f(w) = Σ_j (∂w/∂x_j)·field_j` this yields `∇p · field` for an
    /// unknown `p`.
    pub fn poly_map(&self, id: PolyVarId, f: impl Fn(&Monomial) -> Polynomial) -> SosExpr {
        let def = &self.decisions[id.0];
        let monos: std::collections::BTreeSet<Monomial> = match def.kind {
            PolyKind::Free => def.basis.iter().cloned().collect(),
            PolyKind::Sos => {
                let mut s = std::collections::BTreeSet::new();
                for a in 0..def.basis.len() {
                    for b in a..def.basis.len() {
                        s.insert(def.basis[a].mul(&def.basis[b]));
                    }
                }
                s
            }
        };
        SosExpr::from_terms(
            self.vars.zero(),
            monos
                .into_iter()
                .map(|w| ((expr::DecisionRef::Poly(id), w.clone()), f(&w))),
        )
    }

    /// The scalar decision as a (constant-polynomial) expression.
    pub fn scalar(&self, id: ScalarVarId) -> SosExpr {
        SosExpr::from_terms(
            self.vars.zero(),
            [(
                (expr::DecisionRef::Scalar(id), Monomial::one()),
                self.vars.constant(1.0),
            )],
        )
    }

    pub fn known(&self, p: Polynomial) -> SosExpr {
        SosExpr::from_poly(p)
    }

    /// Requires `expr ∈ Σ`.
    pub fn constrain_sos(&mut self, expr: SosExpr) {
        self.constraints.push(expr);
    }

    /// Adds `weight · s` to the minimized objective.
    pub fn minimize_scalar(&mut self, s: ScalarVarId, weight: f64) {
        self.objective.push((s, weight));
    }

    /// Adds `weight · Σ c²` over all coefficients of the given free
    /// polynomials to the minimized objective.
    pub fn minimize_coeff_norm(&mut self, polys: &[PolyVarId], weight: f64) {
        let mut coeffs = Vec::new();
        for &p in polys {
            assert!(
                self.decisions[p.0].kind == PolyKind::Free,
                "coefficient regularization applies to free polynomials"
            );
            for k in 0..self.decisions[p.0].basis.len() {
                coeffs.push((p, k));
            }
        }
        if !coeffs.is_empty() {
            self.quad_costs.push((coeffs, weight));
        }
    }

    pub(crate) fn decisions(&self) -> &[DecisionDef] {
        &self.decisions
    }

    pub(crate) fn scalars(&self) -> &[String] {
        &self.scalars
    }

    pub(crate) fn constraints(&self) -> &[SosExpr] {
        &self.constraints
    }

    pub(crate) fn objective_terms(&self) -> &[(ScalarVarId, f64)] {
        &self.objective
    }

    pub(crate) fn quad_costs(&self) -> &[(Vec<(PolyVarId, usize)>, f64)] {
        &self.quad_costs
    }

    /// Compiles and solves the program with the built-in backend.
    pub fn solve(&self, opts: &SosOptions) -> Result<SosOutcome, SosError> {
        compile::solve_program(self, opts)
    }

    /// Debug dump of the assembled SDP (decision layout and constraint
    /// matrices) as text.
    pub fn dump(&self, opts: &SosOptions) -> Result<String, SosError> {
        compile::dump_program(self, opts)
    }
}

/// Assignment returned by a feasible [`SosProgram::solve`].
pub struct SosAssignment {
    /// Value of every polynomial decision, by id order.
    pub poly_values: Vec<Polynomial>,
    /// Gram certificate for every SOS-kind decision (`None` for free polys).
    pub poly_certificates: Vec<Option<GramCertificate>>,
    pub scalar_values: Vec<f64>,
    /// Gram certificate per SOS constraint, in declaration order.
    pub constraint_certificates: Vec<GramCertificate>,
    pub objective_value: Option<f64>,
    pub solver_iterations: usize,
}

pub enum SosOutcome {
    Solved(SosAssignment),
    Infeasible(Option<InfeasibilityCertificate>),
    Undetermined(String),
}

impl SosOutcome {
    pub fn is_solved(&self) -> bool {
        matches!(self, SosOutcome::Solved(_))
    }
}

/// SOS membership check for a concrete polynomial.
pub fn check_sos(p: &Polynomial, opts: &SosOptions) -> Result<SosCheck, SosError> {
    if p.degree() % 2 != 0 {
        return Err(SosError::OddDegree(p.degree()));
    }
    if p.is_zero() {
        return Ok(SosCheck::Sos(GramCertificate {
            basis: vec![],
            gram: DMatrix::zeros(0, 0),
            eigen_floor: 0.0,
        }));
    }
    let mut prog = SosProgram::new(p.varset().clone());
    prog.constrain_sos(SosExpr::from_poly(p.clone()));
    match prog.solve(opts)? {
        SosOutcome::Solved(mut a) => Ok(SosCheck::Sos(a.constraint_certificates.remove(0))),
        SosOutcome::Infeasible(cert) => Ok(SosCheck::NotSos(cert)),
        SosOutcome::Undetermined(why) => Ok(SosCheck::Undetermined(why)),
    }
}

/// Quadratic-module membership: searches `σ₀, σ_j ∈ Σ` with
/// `p = σ₀ + Σ_j σ_j g_j`, certifying positivity of `p` on `{g ≥ 0}`.
pub struct PutinarCertificate {
    pub sigma0: Polynomial,
    pub sigma0_gram: GramCertificate,
    pub multipliers: Vec<Polynomial>,
    pub multiplier_grams: Vec<GramCertificate>,
}

pub enum PutinarOutcome {
    Certified(PutinarCertificate),
    /// Infeasible at the given multiplier degree; retry with a higher one.
    Infeasible,
    Undetermined(String),
}

pub fn putinar_certificate(
    p: &Polynomial,
    region: &[Polynomial],
    multiplier_degree: u32,
    opts: &SosOptions,
) -> Result<PutinarOutcome, SosError> {
    if region.is_empty() {
        return Err(SosError::EmptyRegion);
    }
    if multiplier_degree % 2 != 0 {
        return Err(SosError::OddDegree(multiplier_degree));
    }
    let mut vars: std::collections::BTreeSet<usize> = p.support_vars().into_iter().collect();
    for g in region {
        vars.extend(g.support_vars());
    }
    let vars: Vec<usize> = vars.into_iter().collect();
    let basis = monomial_basis(&vars, multiplier_degree)?;

    let mut prog = SosProgram::new(p.varset().clone());
    let sigmas: Vec<PolyVarId> = (0..region.len())
        .map(|j| prog.add_sos_poly(format!("sigma_{}", j + 1), basis.clone()))
        .collect();
    // p − Σ σ_j g_j ∈ Σ; the constraint Gram is σ₀.
    let mut expr = SosExpr::from_poly(p.clone());
    for (j, &s) in sigmas.iter().enumerate() {
        expr = expr.sub(&prog.poly(s).mul_poly(&region[j]));
    }
    prog.constrain_sos(expr);
    match prog.solve(opts)? {
        SosOutcome::Solved(mut a) => {
            let sigma0_gram = a.constraint_certificates.remove(0);
            let sigma0 = sigma0_gram.reconstruct(p.varset());
            let multiplier_grams: Vec<GramCertificate> = a
                .poly_certificates
                .into_iter()
                .map(|c| c.expect("multipliers are SOS-kind"))
                .collect();
            Ok(PutinarOutcome::Certified(PutinarCertificate {
                sigma0,
                sigma0_gram,
                multipliers: a.poly_values,
                multiplier_grams,
            }))
        }
        SosOutcome::Infeasible(_) => Ok(PutinarOutcome::Infeasible),
        SosOutcome::Undetermined(why) => Ok(PutinarOutcome::Undetermined(why)),
    }
}

#[cfg(test)]
mod tests;
