//! Lowering of an [`SosProgram`] to a single [`SdpProblem`] and extraction of
//! the assignment from the solver output.
//!
//! Per constraint `expr ∈ Σ`: one Gram PSD block over a monomial basis chosen
//! from degree bounds on the achievable support, plus one coefficient-matching
//! equality row per monomial in the achievable degree range. SOS-kind
//! decisions contribute their own Gram blocks (a coefficient of such a
//! decision is a linear functional of its Gram entries); free polynomials and
//! scalars map to free SDP variables. Quadratic coefficient costs become
//! epigraph blocks `[[t, qᵀ],[q, I]] ⪰ 0` with `t` minimized.

use std::collections::{BTreeMap, BTreeSet};

use crate::poly::{Monomial, Polynomial};
use crate::sdp::{self, min_eig_sym, LinearForm, SdpProblem, SdpStatus};

use super::expr::{DecisionRef, SosExpr};
use super::{
    monomials_in_range, GramCertificate, PolyKind, SosAssignment, SosError, SosOptions,
    SosOutcome, SosProgram, GRAM_EIGEN_FLOOR, GRAM_RECONSTRUCTION_TOL,
};

struct Compiled {
    sdp: SdpProblem,
    /// SOS decision id → Gram block; free decision id → first free column.
    poly_block: Vec<Option<usize>>,
    poly_free: Vec<Option<usize>>,
    scalar_free: Vec<usize>,
    constraint_block: Vec<Option<usize>>,
    constraint_basis: Vec<Vec<Monomial>>,
    has_objective: bool,
}

/// Gram positions contributing to each value monomial of an SOS decision:
/// `coeff_w(σ) = Σ G[a,b]·c` over the stored `(a, b, c)` with `c ∈ {1, 2}`.
type ProductMap = BTreeMap<Monomial, Vec<(usize, usize, f64)>>;

fn products_of(basis: &[Monomial]) -> ProductMap {
    let mut map: ProductMap = BTreeMap::new();
    for a in 0..basis.len() {
        for b in a..basis.len() {
            let prod = basis[a].mul(&basis[b]);
            let coeff = if a == b { 1.0 } else { 2.0 };
            map.entry(prod).or_default().push((a, b, coeff));
        }
    }
    map
}

fn compile(prog: &SosProgram, opts: &SosOptions) -> Result<Compiled, SosError> {
    let mut sdp = SdpProblem::new("sos");
    let mut poly_block = vec![None; prog.decisions().len()];
    let mut poly_free = vec![None; prog.decisions().len()];
    let mut products = vec![None; prog.decisions().len()];
    for (i, def) in prog.decisions().iter().enumerate() {
        assert!(!def.basis.is_empty(), "decision `{}` has empty basis", def.name);
        match def.kind {
            PolyKind::Sos => {
                poly_block[i] = Some(sdp.add_psd_block(def.basis.len()));
                products[i] = Some(products_of(&def.basis));
            }
            PolyKind::Free => poly_free[i] = Some(sdp.add_free_vars(def.basis.len())),
        }
    }
    let scalar_free: Vec<usize> = prog.scalars().iter().map(|_| sdp.add_free_vars(1)).collect();

    let mut constraint_block = Vec::new();
    let mut constraint_basis = Vec::new();
    for expr in prog.constraints() {
        validate_refs(prog, expr)?;
        let (basis, rows) = constraint_layout(expr, opts)?;
        let block_id = if basis.is_empty() {
            None
        } else {
            Some(sdp.add_psd_block(basis.len()))
        };
        let gram_products = products_of(&basis);

        // Assemble one coefficient-matching row per achievable monomial:
        // Gram(α) − Σ decision contributions(α) = constant(α).
        let mut row_forms: BTreeMap<&Monomial, LinearForm> =
            rows.iter().map(|m| (m, LinearForm::new())).collect();
        for ((d, w), mult) in &expr.linear {
            for (alpha, mc) in mult.terms() {
                let Some(form) = row_forms.get_mut(alpha) else {
                    unreachable!("multiplier support outside enumerated rows");
                };
                match d {
                    DecisionRef::Poly(id) => match prog.decisions()[id.0].kind {
                        PolyKind::Sos => {
                            let bid = poly_block[id.0].unwrap();
                            if let Some(entries) = products[id.0].as_ref().unwrap().get(w) {
                                for &(a, b, c) in entries {
                                    form.push_mat(bid, a, b, -mc * c);
                                }
                            }
                        }
                        PolyKind::Free => {
                            let off = poly_free[id.0].unwrap();
                            if let Some(k) =
                                prog.decisions()[id.0].basis.iter().position(|m| m == w)
                            {
                                form.push_free(off + k, -mc);
                            }
                        }
                    },
                    DecisionRef::Scalar(id) => {
                        form.push_free(scalar_free[id.0], -mc);
                    }
                }
            }
        }
        for alpha in &rows {
            let mut lhs = row_forms.remove(alpha).unwrap();
            if let (Some(bid), Some(entries)) = (block_id, gram_products.get(alpha)) {
                for &(a, b, c) in entries {
                    lhs.push_mat(bid, a, b, c);
                }
            }
            sdp.add_constraint(lhs, expr.constant.coefficient(alpha));
        }
        constraint_block.push(block_id);
        constraint_basis.push(basis);
    }

    // Objective: linear terms over scalars, plus epigraph blocks for the
    // quadratic coefficient costs.
    let mut objective = LinearForm::new();
    for &(s, w) in prog.objective_terms() {
        objective.push_free(scalar_free[s.0], w);
    }
    for (coeffs, weight) in prog.quad_costs() {
        let k = coeffs.len();
        let epi = sdp.add_psd_block(k + 1);
        for i in 0..k {
            for j in i..k {
                let rhs = if i == j { 1.0 } else { 0.0 };
                sdp.add_constraint(LinearForm::new().mat(epi, i + 1, j + 1, 1.0), rhs);
            }
        }
        for (i, &(pid, ci)) in coeffs.iter().enumerate() {
            let off = poly_free[pid.0].expect("quad cost over free polynomials");
            sdp.add_constraint(
                LinearForm::new().mat(epi, 0, i + 1, 1.0).free(off + ci, -1.0),
                0.0,
            );
        }
        objective.push_mat(epi, 0, 0, *weight);
    }
    let has_objective = !prog.objective_terms().is_empty() || !prog.quad_costs().is_empty();
    sdp.set_objective(objective);

    Ok(Compiled {
        sdp,
        poly_block,
        poly_free,
        scalar_free,
        constraint_block,
        constraint_basis,
        has_objective,
    })
}

fn validate_refs(prog: &SosProgram, expr: &SosExpr) -> Result<(), SosError> {
    for (d, _) in expr.linear.keys() {
        match d {
            DecisionRef::Poly(id) if id.0 >= prog.decisions().len() => {
                return Err(SosError::ForeignDecision)
            }
            DecisionRef::Scalar(id) if id.0 >= prog.scalars().len() => {
                return Err(SosError::ForeignDecision)
            }
            _ => {}
        }
    }
    Ok(())
}

/// Gram basis and coefficient-matching row monomials for one constraint.
fn constraint_layout(
    expr: &SosExpr,
    opts: &SosOptions,
) -> Result<(Vec<Monomial>, Vec<Monomial>), SosError> {
    let mut vars: BTreeSet<usize> = BTreeSet::new();
    let mut dmin = u32::MAX;
    let mut dmax = 0u32;
    let mut feed = |p: &Polynomial| {
        if !p.is_zero() {
            vars.extend(p.support_vars());
            dmin = dmin.min(p.min_degree());
            dmax = dmax.max(p.degree());
        }
    };
    feed(&expr.constant);
    for mult in expr.linear.values() {
        feed(mult);
    }
    if dmin == u32::MAX {
        // expression is identically zero
        return Ok((Vec::new(), Vec::new()));
    }
    let vars: Vec<usize> = vars.into_iter().collect();
    let mut basis = monomials_in_range(&vars, dmin.div_ceil(2), dmax / 2);
    if opts.support_filter {
        basis = filter_basis(expr, basis);
    }
    let rows = monomials_in_range(&vars, dmin, dmax);
    Ok((basis, rows))
}

/// Iterative diagonal-consistency filter: drop a basis monomial `m` whenever
/// `m²` can appear neither in the achievable support of the expression nor as
/// a cross product of two other remaining basis monomials.
fn filter_basis(expr: &SosExpr, mut basis: Vec<Monomial>) -> Vec<Monomial> {
    let mut support: BTreeSet<Monomial> = expr.constant.terms().map(|(m, _)| m.clone()).collect();
    for mult in expr.linear.values() {
        support.extend(mult.terms().map(|(m, _)| m.clone()));
    }
    loop {
        let mut cross: BTreeSet<Monomial> = BTreeSet::new();
        for a in 0..basis.len() {
            for b in (a + 1)..basis.len() {
                cross.insert(basis[a].mul(&basis[b]));
            }
        }
        let before = basis.len();
        basis.retain(|m| {
            let sq = m.mul(m);
            support.contains(&sq) || cross.contains(&sq)
        });
        if basis.len() == before {
            return basis;
        }
    }
}

pub(super) fn solve_program(prog: &SosProgram, opts: &SosOptions) -> Result<SosOutcome, SosError> {
    let compiled = compile(prog, opts)?;
    let sol = sdp::solve(&compiled.sdp, &opts.solver)?;
    match sol.status {
        SdpStatus::Feasible | SdpStatus::Optimal => extract(prog, &compiled, &sol),
        SdpStatus::Infeasible => Ok(SosOutcome::Infeasible(sol.certificate)),
        SdpStatus::Unbounded => Ok(SosOutcome::Undetermined(
            "sdp reports an unbounded objective".into(),
        )),
        SdpStatus::MaxIterations => Ok(SosOutcome::Undetermined(format!(
            "iteration cap reached (primal residual {:.2e}, dual {:.2e}, gap {:.2e})",
            sol.primal_residual, sol.dual_residual, sol.gap
        ))),
        SdpStatus::NumericalFailure => {
            Ok(SosOutcome::Undetermined("numerical failure in sdp".into()))
        }
    }
}

fn extract(
    prog: &SosProgram,
    compiled: &Compiled,
    sol: &sdp::SdpSolution,
) -> Result<SosOutcome, SosError> {
    let vars = prog.varset();
    let mut poly_values = Vec::with_capacity(prog.decisions().len());
    let mut poly_certificates = Vec::with_capacity(prog.decisions().len());
    for (i, def) in prog.decisions().iter().enumerate() {
        match def.kind {
            PolyKind::Sos => {
                let gram = sol.block_values[compiled.poly_block[i].unwrap()].clone();
                let cert = GramCertificate {
                    basis: def.basis.clone(),
                    eigen_floor: min_eig_sym(&gram),
                    gram,
                };
                poly_values.push(cert.reconstruct(vars));
                poly_certificates.push(Some(cert));
            }
            PolyKind::Free => {
                let off = compiled.poly_free[i].unwrap();
                let p = Polynomial::from_terms(
                    vars.clone(),
                    def.basis
                        .iter()
                        .enumerate()
                        .map(|(k, m)| (m.clone(), sol.free_values[off + k])),
                );
                poly_values.push(p);
                poly_certificates.push(None);
            }
        }
    }
    let scalar_values: Vec<f64> = compiled
        .scalar_free
        .iter()
        .map(|&k| sol.free_values[k])
        .collect();

    let mut constraint_certificates = Vec::with_capacity(prog.constraints().len());
    for (ci, expr) in prog.constraints().iter().enumerate() {
        let cert = match compiled.constraint_block[ci] {
            Some(bid) => {
                let gram = sol.block_values[bid].clone();
                GramCertificate {
                    basis: compiled.constraint_basis[ci].clone(),
                    eigen_floor: min_eig_sym(&gram),
                    gram,
                }
            }
            None => GramCertificate {
                basis: Vec::new(),
                gram: nalgebra::DMatrix::zeros(0, 0),
                eigen_floor: 0.0,
            },
        };
        // Certificate invariants: a solve that cannot back its constraints
        // with sound Gram data is reported as undetermined, not as solved.
        let concrete = expr.substitute(|d| match d {
            DecisionRef::Poly(id) => poly_values[id.0].clone(),
            DecisionRef::Scalar(id) => vars.constant(scalar_values[id.0]),
        });
        let residual = cert.reconstruction_residual(&concrete);
        let tol = GRAM_RECONSTRUCTION_TOL * (1.0 + concrete.max_abs_coeff());
        if residual > tol {
            return Ok(SosOutcome::Undetermined(format!(
                "constraint {ci}: Gram reconstruction residual {residual:.3e} exceeds {tol:.3e}"
            )));
        }
        if cert.eigen_floor < GRAM_EIGEN_FLOOR {
            return Ok(SosOutcome::Undetermined(format!(
                "constraint {ci}: Gram eigenvalue floor {:.3e} below {GRAM_EIGEN_FLOOR:.1e}",
                cert.eigen_floor
            )));
        }
        constraint_certificates.push(cert);
    }

    Ok(SosOutcome::Solved(SosAssignment {
        poly_values,
        poly_certificates,
        scalar_values,
        constraint_certificates,
        objective_value: compiled.has_objective.then_some(sol.objective_value),
        solver_iterations: sol.iterations,
    }))
}

pub(super) fn dump_program(prog: &SosProgram, opts: &SosOptions) -> Result<String, SosError> {
    let compiled = compile(prog, opts)?;
    let mut out = Vec::new();
    use std::io::Write;
    for (i, def) in prog.decisions().iter().enumerate() {
        let kind = match def.kind {
            PolyKind::Sos => "sos",
            PolyKind::Free => "free",
        };
        writeln!(out, "decision {i} {kind} `{}` basis_size {}", def.name, def.basis.len()).unwrap();
    }
    for (i, name) in prog.scalars().iter().enumerate() {
        writeln!(out, "scalar {i} `{name}`").unwrap();
    }
    for (ci, basis) in compiled.constraint_basis.iter().enumerate() {
        writeln!(out, "constraint {ci} gram_basis_size {}", basis.len()).unwrap();
    }
    compiled.sdp.write_text(&mut out).unwrap();
    Ok(String::from_utf8(out).unwrap())
}
