use super::*;
use crate::poly::{lie_derivative, PolyVec};

fn opts() -> SosOptions {
    SosOptions::default()
}

fn vs2() -> VarSet {
    VarSet::new(["x", "y"]).unwrap()
}

#[test]
fn monomial_basis_sizes() {
    let vs = vs2();
    let b = monomial_basis(&[0], 2).unwrap();
    assert_eq!(b.len(), 2); // [1, x]
    assert!(b[0].is_one());

    let b = monomial_basis(&[0, 1], 4).unwrap();
    assert_eq!(b.len(), 6); // C(2+2,2)

    let vs4 = VarSet::new(["a", "b", "c", "d"]).unwrap();
    let b = monomial_basis(&[0, 1, 2, 3], 2).unwrap();
    assert_eq!(b.len(), 5); // 1 + 4
    drop((vs, vs4));

    assert!(matches!(monomial_basis(&[0], 3), Err(SosError::OddDegree(3))));
}

#[test]
fn check_sos_perfect_square() {
    let vs = vs2();
    let p = (&vs.var(0) + &vs.var(1)).pow(2);
    match check_sos(&p, &opts()).unwrap() {
        SosCheck::Sos(cert) => {
            assert_eq!(cert.basis.len(), 2);
            // Q = [[1,1],[1,1]] over {x, y} up to numerical symmetry.
            for i in 0..2 {
                for j in 0..2 {
                    assert!((cert.gram[(i, j)] - 1.0).abs() < 1e-5, "{:?}", cert.gram);
                }
            }
            assert!(cert.reconstruction_residual(&p) <= 1e-6 * (1.0 + p.max_abs_coeff()));
            assert!(cert.eigen_floor >= -1e-7);
        }
        other => panic!("expected SOS, got {other:?}"),
    }
}

#[test]
fn check_sos_rejects_indefinite() {
    let vs = VarSet::new(["x"]).unwrap();
    let p = &(&vs.var(0) * &vs.var(0)) - &vs.constant(1.0); // x² − 1, negative at 0
    match check_sos(&p, &opts()).unwrap() {
        SosCheck::NotSos(cert) => {
            let c = cert.expect("improving ray");
            assert!(c.ray_residual <= 1e-7);
        }
        other => panic!("expected NotSos, got {other:?}"),
    }
}

#[test]
fn check_sos_odd_degree_is_usage_error() {
    let vs = VarSet::new(["x"]).unwrap();
    assert!(matches!(
        check_sos(&vs.var(0).pow(3), &opts()),
        Err(SosError::OddDegree(3))
    ));
}

/// The classic nonnegative-but-not-SOS witness. The grid scan is the
/// independent nonnegativity oracle; the solver must still refuse a Gram
/// certificate.
#[test]
fn motzkin_polynomial_is_nonnegative_but_not_sos() {
    let vs = vs2();
    let (x, y) = (vs.var(0), vs.var(1));
    let motzkin = &(&(&x.pow(4) * &y.pow(2)) + &(&x.pow(2) * &y.pow(4)))
        - &(&(&x.pow(2) * &y.pow(2)).scale(3.0) - &vs.constant(1.0));
    // oracle: min over a dense grid is ≥ 0 (equality at |x| = |y| = 1)
    let mut min_val = f64::INFINITY;
    for i in 0..=160 {
        for j in 0..=160 {
            let px = -2.0 + 4.0 * (i as f64) / 160.0;
            let py = -2.0 + 4.0 * (j as f64) / 160.0;
            min_val = min_val.min(motzkin.evaluate(&[px, py]));
        }
    }
    assert!(min_val >= -1e-9, "grid min {min_val}");
    assert!((motzkin.evaluate(&[1.0, 1.0])).abs() < 1e-12);

    match check_sos(&motzkin, &opts()).unwrap() {
        SosCheck::NotSos(_) => {}
        other => panic!("expected NotSos, got {other:?}"),
    }
}

#[test]
fn motzkin_with_support_filter_shrinks_basis_and_still_rejects() {
    let vs = vs2();
    let (x, y) = (vs.var(0), vs.var(1));
    let motzkin = &(&(&x.pow(4) * &y.pow(2)) + &(&x.pow(2) * &y.pow(4)))
        - &(&(&x.pow(2) * &y.pow(2)).scale(3.0) - &vs.constant(1.0));
    let mut o = opts();
    o.support_filter = true;
    match check_sos(&motzkin, &o).unwrap() {
        SosCheck::NotSos(_) => {}
        other => panic!("expected NotSos, got {other:?}"),
    }
}

#[test]
fn squares_are_certified() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let vs = VarSet::new(["x", "y", "z"]).unwrap();
    for _ in 0..10 {
        let mut q = vs.zero();
        for m in monomials_in_range(&[0, 1, 2], 0, 2) {
            let c: f64 = rng.random_range(-1.0..1.0);
            q = &q + &Polynomial::from_terms(vs.clone(), [(m, c)]);
        }
        let p = &q * &q;
        match check_sos(&p, &opts()).unwrap() {
            SosCheck::Sos(cert) => {
                let tol = 1e-6 * (1.0 + p.max_abs_coeff());
                assert!(cert.reconstruction_residual(&p) <= tol);
            }
            other => panic!("q² must certify, got {other:?} for {p}"),
        }
    }
}

#[test]
fn multiplier_search_scalar_example() {
    // find σ ∈ Σ₁ with (−2x²) − σ·(−x²) ∈ Σ₁; σ = 2 works.
    let vs = VarSet::new(["x"]).unwrap();
    let x2 = &vs.var(0) * &vs.var(0);
    let mut prog = SosProgram::new(vs.clone());
    let sigma = prog.add_sos_poly("sigma", monomial_basis(&[0], 2).unwrap());
    let expr = prog
        .known(x2.scale(-2.0))
        .sub(&prog.poly(sigma).mul_poly(&x2.scale(-1.0)));
    prog.constrain_sos(expr);
    match prog.solve(&opts()).unwrap() {
        SosOutcome::Solved(a) => {
            let sv = &a.poly_values[0];
            // σ(x) ≥ 2 at x = 0 is not required; σ must make −2x² + σx² SOS,
            // hence σ's value at every x must be ≥ 2 on the support of x².
            assert!(sv.evaluate(&[1.0]) >= 2.0 - 1e-5, "sigma = {sv}");
        }
        SosOutcome::Infeasible(_) => panic!("feasible program reported infeasible"),
        SosOutcome::Undetermined(why) => panic!("undetermined: {why}"),
    }
}

#[test]
fn lyapunov_style_coefficient_search() {
    // For ẋ = −x: find V = c·x² with V − 1e-6x² ∈ Σ and −V̇ − 1e-6x² ∈ Σ.
    let vs = VarSet::new(["x"]).unwrap();
    let x2 = &vs.var(0) * &vs.var(0);
    let field = PolyVec::new(vec![vs.var(0).scale(-1.0)]);
    let mut prog = SosProgram::new(vs.clone());
    let v = prog.add_free_poly("V", vec![Monomial::from_pairs([(0, 2)])]);
    let margin = strictness_margin(&vs, &[0], 1e-6);
    prog.constrain_sos(prog.poly(v).sub(&prog.known(margin.clone())));
    let vdot = prog.poly_map(v, |w| {
        lie_derivative(&Polynomial::from_terms(vs.clone(), [(w.clone(), 1.0)]), &field)
    });
    prog.constrain_sos(vdot.scale(-1.0).sub(&prog.known(margin.clone())));
    // pin the scale: minimize nothing, just check feasibility
    match prog.solve(&opts()).unwrap() {
        SosOutcome::Solved(a) => {
            let vp = &a.poly_values[0];
            let c = vp.coefficient(&Monomial::from_pairs([(0, 2)]));
            assert!(c > 0.0, "V = {vp}");
            // V̇ = −2c x² must be negative away from 0
            assert!((&x2 * &vs.constant(-2.0 * c)).evaluate(&[1.0]) < 0.0);
        }
        SosOutcome::Infeasible(_) => panic!("ẋ = −x admits V = x²"),
        SosOutcome::Undetermined(why) => panic!("undetermined: {why}"),
    }
}

#[test]
fn affine_violation_rejected() {
    let vs = VarSet::new(["x"]).unwrap();
    let mut prog = SosProgram::new(vs.clone());
    let a = prog.add_free_poly("a", vec![Monomial::var(0)]);
    let b = prog.add_free_poly("b", vec![Monomial::var(0)]);
    let ea = prog.poly(a);
    let eb = prog.poly(b);
    assert!(matches!(ea.mul(&eb), Err(SosError::NonAffine)));
}

#[test]
fn putinar_affine_region() {
    // p = x on {x − 1 ≥ 0} at degree 0: x = σ₀ + σ₁(x−1) forces σ₁ = 1, σ₀ = 1.
    let vs = VarSet::new(["x"]).unwrap();
    let x = vs.var(0);
    let g = &x - &vs.constant(1.0);
    match putinar_certificate(&x, &[g.clone()], 0, &opts()).unwrap() {
        PutinarOutcome::Certified(c) => {
            assert!((c.multipliers[0].evaluate(&[0.0]) - 1.0).abs() < 1e-5);
            assert!((c.sigma0.evaluate(&[0.0]) - 1.0).abs() < 1e-5);
            // identity: σ₀ + Σ σ_j g_j − p ≈ 0
            let lhs = &(&c.sigma0 + &(&c.multipliers[0] * &g)) - &x;
            assert!(lhs.max_abs_coeff() <= 1e-6 * (1.0 + x.max_abs_coeff()));
        }
        PutinarOutcome::Infeasible => panic!("degree-0 certificate exists"),
        PutinarOutcome::Undetermined(why) => panic!("undetermined: {why}"),
    }
}

#[test]
fn putinar_already_sos() {
    // p = 1 + x² is already SOS: σ₀ = p, σ₁ = 0 is feasible for any region.
    let vs = VarSet::new(["x"]).unwrap();
    let p = &vs.constant(1.0) + &(&vs.var(0) * &vs.var(0));
    let g = &vs.constant(1.0) - &vs.var(0);
    match putinar_certificate(&p, &[g.clone()], 0, &opts()).unwrap() {
        PutinarOutcome::Certified(c) => {
            let lhs = &(&c.sigma0 + &(&c.multipliers[0] * &g)) - &p;
            assert!(lhs.max_abs_coeff() <= 1e-6 * (1.0 + p.max_abs_coeff()));
        }
        other => {
            let why = match other {
                PutinarOutcome::Undetermined(w) => w,
                _ => "infeasible".into(),
            };
            panic!("expected certificate: {why}");
        }
    }
}

#[test]
fn putinar_ball_region() {
    // p = 2 − x² on {1 − x² ≥ 0}: 2 − x² = 1 + 1·(1 − x²).
    let vs = VarSet::new(["x"]).unwrap();
    let x2 = &vs.var(0) * &vs.var(0);
    let p = &vs.constant(2.0) - &x2;
    let g = &vs.constant(1.0) - &x2;
    match putinar_certificate(&p, &[g.clone()], 0, &opts()).unwrap() {
        PutinarOutcome::Certified(c) => {
            let lhs = &(&c.sigma0 + &(&c.multipliers[0] * &g)) - &p;
            assert!(lhs.max_abs_coeff() <= 1e-6 * (1.0 + p.max_abs_coeff()));
            // σ₀ must be SOS-certified and the multiplier nonnegative.
            assert!(c.sigma0_gram.eigen_floor >= -1e-7);
            assert!(c.multiplier_grams[0].eigen_floor >= -1e-7);
        }
        PutinarOutcome::Infeasible => panic!("degree-0 certificate exists"),
        PutinarOutcome::Undetermined(why) => panic!("undetermined: {why}"),
    }
}

#[test]
fn putinar_empty_region_is_usage_error() {
    let vs = VarSet::new(["x"]).unwrap();
    assert!(matches!(
        putinar_certificate(&vs.var(0), &[], 2, &opts()),
        Err(SosError::EmptyRegion)
    ));
}

#[test]
fn scalar_objective_is_minimized() {
    // minimize t s.t. t − 1 ∈ Σ (i.e. t ≥ 1 via constant SOS) → t = 1.
    let vs = VarSet::new(["x"]).unwrap();
    let mut prog = SosProgram::new(vs.clone());
    let t = prog.add_scalar("t");
    prog.constrain_sos(prog.scalar(t).sub(&prog.known(vs.constant(1.0))));
    prog.minimize_scalar(t, 1.0);
    match prog.solve(&opts()).unwrap() {
        SosOutcome::Solved(a) => {
            assert!((a.scalar_values[0] - 1.0).abs() < 1e-5);
            assert!((a.objective_value.unwrap() - 1.0).abs() < 1e-5);
        }
        SosOutcome::Infeasible(_) => panic!("feasible"),
        SosOutcome::Undetermined(why) => panic!("undetermined: {why}"),
    }
}

#[test]
fn quadratic_coefficient_cost_picks_small_solution() {
    // F = a·x with constraint a ≥ 2 (via (a−2) ∈ Σ as a scalar-free trick):
    // minimizing a² must return a ≈ 2.
    let vs = VarSet::new(["x"]).unwrap();
    let mut prog = SosProgram::new(vs.clone());
    let f = prog.add_free_poly("F", vec![Monomial::var(0)]);
    // (coeff of x in F) − 2 ∈ Σ  (a constant-polynomial SOS constraint)
    let coeff_expr = prog.poly_map(f, |_| vs.constant(1.0));
    prog.constrain_sos(coeff_expr.sub(&prog.known(vs.constant(2.0))));
    prog.minimize_coeff_norm(&[f], 1.0);
    match prog.solve(&opts()).unwrap() {
        SosOutcome::Solved(a) => {
            let c = a.poly_values[0].coefficient(&Monomial::var(0));
            assert!((c - 2.0).abs() < 1e-4, "coefficient {c}");
            assert!((a.objective_value.unwrap() - 4.0).abs() < 1e-3);
        }
        SosOutcome::Infeasible(_) => panic!("feasible"),
        SosOutcome::Undetermined(why) => panic!("undetermined: {why}"),
    }
}

#[test]
fn dump_program_lists_layout() {
    let vs = VarSet::new(["x"]).unwrap();
    let mut prog = SosProgram::new(vs.clone());
    let s = prog.add_sos_poly("sigma", monomial_basis(&[0], 2).unwrap());
    prog.constrain_sos(prog.poly(s).sub(&prog.known(vs.constant(1.0))));
    let text = prog.dump(&opts()).unwrap();
    assert!(text.contains("decision 0 sos `sigma`"));
    assert!(text.contains("constraint 0"));
    assert!(text.contains("blocks"));
}
