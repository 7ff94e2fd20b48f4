//! First-order operator-splitting engine.
//!
//! The problem is posed on the homogeneous self-dual embedding: an iterate
//! alternates a projection onto an affine subspace (one cached linear-system
//! solve per iteration, reduced to the normal equations `I + AᵀA`) with a
//! projection onto the cone product (eigenvalue clamp per PSD block). A
//! solution is read off when the scaling variable τ stays positive; an
//! improving ray certifying infeasibility or unboundedness is read off when
//! it collapses. Feasibility solutions are optionally polished by plain
//! alternating projections.

use nalgebra::DMatrix;

use super::linsolve::{cg_aat, dot, norm2, Csr, NormalSolver};
use super::scaling::{ruiz, Scaling};
use super::{
    min_eig_sym, InfeasibilityCertificate, SdpError, SdpProblem, SdpSolution, SdpStatus,
    SolverOptions,
};

const SQRT2: f64 = std::f64::consts::SQRT_2;

#[derive(Debug, Clone)]
struct Layout {
    blocks: Vec<usize>,
    svec_off: Vec<usize>,
    svec_total: usize,
    n: usize,
    m_eq: usize,
}

fn tri(d: usize) -> usize {
    d * (d + 1) / 2
}

fn svec_idx(i: usize, j: usize) -> usize {
    debug_assert!(i <= j);
    j * (j + 1) / 2 + i
}

fn svec_to_mat(seg: &[f64], d: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(d, d);
    let mut k = 0;
    for j in 0..d {
        for i in 0..=j {
            let v = seg[k];
            k += 1;
            if i == j {
                m[(i, j)] = v;
            } else {
                let w = v / SQRT2;
                m[(i, j)] = w;
                m[(j, i)] = w;
            }
        }
    }
    m
}

fn mat_to_svec(m: &DMatrix<f64>, seg: &mut [f64]) {
    let d = m.nrows();
    let mut k = 0;
    for j in 0..d {
        for i in 0..=j {
            seg[k] = if i == j { m[(i, j)] } else { SQRT2 * m[(i, j)] };
            k += 1;
        }
    }
}

/// Projects an svec segment onto the PSD cone in place.
fn project_psd(seg: &mut [f64], d: usize) {
    if d == 1 {
        seg[0] = seg[0].max(0.0);
        return;
    }
    let m = svec_to_mat(seg, d);
    let es = m.symmetric_eigen();
    let min_l = es.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min_l >= 0.0 {
        return;
    }
    let mut scaled = es.eigenvectors.clone();
    for (c, &l) in es.eigenvalues.iter().enumerate() {
        let f = l.max(0.0).sqrt();
        scaled.column_mut(c).scale_mut(f);
    }
    let proj = &scaled * scaled.transpose();
    mat_to_svec(&proj, seg);
}

struct Engine<'p> {
    layout: Layout,
    /// Unscaled data, used for all reported residuals.
    a0: Csr,
    b0: Vec<f64>,
    c0: Vec<f64>,
    /// Equilibrated data driving the iteration.
    a: Csr,
    b: Vec<f64>,
    c: Vec<f64>,
    scaling: Scaling,
    normal: NormalSolver,
    /// M2⁻¹ (c, b) and 1 + hᵀ M2⁻¹ h for the rank-one update.
    p_x: Vec<f64>,
    p_y: Vec<f64>,
    den: f64,
    kept_rows: Vec<usize>,
    prob: &'p SdpProblem,
    opts: SolverOptions,
    c_is_zero: bool,
}

/// Values reconstructed from an iterate: the candidate solution in original
/// (unscaled) coordinates, with residuals measured on the returned blocks.
struct Candidate {
    z: Vec<f64>,
    y_eq: Vec<f64>,
    viol: f64,
    dual_res: f64,
    gap: f64,
    pobj: f64,
}

pub fn solve(prob: &SdpProblem, opts: &SolverOptions) -> Result<SdpSolution, SdpError> {
    prob.validate()?;
    let blocks = prob.blocks().to_vec();
    let mut svec_off = Vec::with_capacity(blocks.len());
    let mut acc = 0usize;
    for &d in &blocks {
        svec_off.push(acc);
        acc += tri(d);
    }
    let svec_total = acc;
    let n = svec_total + prob.free_dim();

    // Assemble equality rows, dropping empty ones. An empty row with nonzero
    // right-hand side is an exact infeasibility certificate.
    let mut trip: Vec<(usize, usize, f64)> = Vec::new();
    let mut b0 = Vec::new();
    let mut kept_rows = Vec::new();
    for (ri, con) in prob.constraints().iter().enumerate() {
        let row = b0.len();
        let mut nonempty = false;
        for &(bk, i, j, cf) in &con.lhs.mat_entries {
            if cf != 0.0 {
                let col = svec_off[bk] + svec_idx(i, j);
                let v = if i == j { cf } else { cf / SQRT2 };
                trip.push((row, col, v));
                nonempty = true;
            }
        }
        for &(k, cf) in &con.lhs.free_entries {
            if cf != 0.0 {
                trip.push((row, svec_total + k, cf));
                nonempty = true;
            }
        }
        if nonempty {
            b0.push(con.rhs);
            kept_rows.push(ri);
        } else {
            trip.retain(|&(r, _, _)| r != row);
            if con.rhs.abs() > 1e-12 {
                return Ok(trivially_infeasible(prob, ri, con.rhs, &blocks));
            }
        }
    }
    let m_eq = b0.len();
    let a0 = Csr::from_triplets(m_eq, n, trip);

    let mut c0 = vec![0.0; n];
    for &(bk, i, j, cf) in &prob.objective().mat_entries {
        let col = svec_off[bk] + svec_idx(i, j);
        c0[col] += if i == j { cf } else { cf / SQRT2 };
    }
    for &(k, cf) in &prob.objective().free_entries {
        c0[svec_total + k] += cf;
    }

    let mut a = a0.clone();
    let mut b = b0.clone();
    let mut c = c0.clone();
    let block_ranges: Vec<(usize, usize)> = blocks
        .iter()
        .zip(&svec_off)
        .map(|(&d, &o)| (o, o + tri(d)))
        .collect();
    let scaling = ruiz(&mut a, &mut b, &mut c, &block_ranges, opts.scaling_iters);

    let layout = Layout {
        blocks,
        svec_off,
        svec_total,
        n,
        m_eq,
    };
    let mut normal = NormalSolver::new(&a, svec_total, n, opts.dense_threshold);

    // h = (c, b_full); p = M2⁻¹ h.
    let m_total = m_eq + svec_total;
    let mut b_full = vec![0.0; m_total];
    b_full[..m_eq].copy_from_slice(&b);
    let mut p_x = vec![0.0; n];
    let mut p_y = vec![0.0; m_total];
    solve_m2(
        &a,
        svec_total,
        &mut normal,
        &c,
        &b_full,
        &mut p_x,
        &mut p_y,
        1e-13,
    );
    let den = 1.0 + dot(&c, &p_x) + dot(&b_full, &p_y);

    let c_is_zero = c0.iter().all(|&v| v == 0.0);
    let mut engine = Engine {
        layout,
        a0,
        b0,
        c0,
        a,
        b: b_full,
        c,
        scaling,
        normal,
        p_x,
        p_y,
        den,
        kept_rows,
        prob,
        opts: opts.clone(),
        c_is_zero,
    };
    Ok(engine.run())
}

fn trivially_infeasible(
    prob: &SdpProblem,
    row: usize,
    rhs: f64,
    blocks: &[usize],
) -> SdpSolution {
    let mut y_eq = vec![0.0; prob.num_constraints()];
    y_eq[row] = -1.0 / rhs;
    SdpSolution {
        status: SdpStatus::Infeasible,
        block_values: blocks.iter().map(|&d| DMatrix::zeros(d, d)).collect(),
        free_values: vec![0.0; prob.free_dim()],
        objective_value: 0.0,
        primal_residual: f64::INFINITY,
        dual_residual: 0.0,
        gap: f64::INFINITY,
        iterations: 0,
        dual_eq: vec![0.0; prob.num_constraints()],
        certificate: Some(InfeasibilityCertificate {
            y_eq,
            y_blocks: blocks.iter().map(|&d| DMatrix::zeros(d, d)).collect(),
            ray_residual: 0.0,
        }),
    }
}

/// Solves `M2 (zx, zy) = (rx, ry)` where `M2 = [[I, Aᵀ], [-A, I]]` with the
/// full (cone rows included) matrix, via the normal equations.
#[allow(clippy::too_many_arguments)]
fn solve_m2(
    a: &Csr,
    svec_total: usize,
    normal: &mut NormalSolver,
    rx: &[f64],
    ry: &[f64],
    zx: &mut [f64],
    zy: &mut [f64],
    tol: f64,
) {
    let n = rx.len();
    let m_eq = a.m;
    // t = rx − Aᵀ ry  (A = [A_eq; -I on svec cols])
    let mut t = rx.to_vec();
    for (i, ti) in t.iter_mut().enumerate().take(svec_total) {
        *ti += ry[m_eq + i];
    }
    let neg: Vec<f64> = ry[..m_eq].to_vec();
    let mut tneg = vec![0.0; n];
    a.matvec_t_add(&neg, &mut tneg);
    for i in 0..n {
        t[i] -= tneg[i];
    }
    normal.solve(a, svec_total, &t, zx, tol);
    // zy = ry + A zx
    a.matvec(zx, &mut zy[..m_eq]);
    for i in 0..m_eq {
        zy[i] += ry[i];
    }
    for i in 0..svec_total {
        zy[m_eq + i] = ry[m_eq + i] - zx[i];
    }
}

impl Engine<'_> {
    fn run(&mut self) -> SdpSolution {
        let n = self.layout.n;
        let m_eq = self.layout.m_eq;
        let m_total = m_eq + self.layout.svec_total;
        let alpha = self.opts.relaxation;

        let mut u_x = vec![0.0; n];
        let mut u_y = vec![0.0; m_total];
        let mut u_tau = 1.0f64;
        let mut v_y = vec![0.0; m_total];
        let mut v_tau = 1.0f64;

        let mut zx = vec![0.0; n];
        let mut zy = vec![0.0; m_total];
        let mut w_y = vec![0.0; m_total];

        let mut best: Option<Candidate> = None;
        let mut iters_done = 0;

        for it in 0..self.opts.max_iters {
            iters_done = it + 1;
            let cg_tol = (1e-5 / ((it + 1) as f64).powf(1.3)).clamp(5e-13, 1e-5);

            // w = u + v (v_x ≡ 0)
            for i in 0..m_total {
                w_y[i] = u_y[i] + v_y[i];
            }
            let w_tau = u_tau + v_tau;
            solve_m2(
                &self.a,
                self.layout.svec_total,
                &mut self.normal,
                &u_x,
                &w_y,
                &mut zx,
                &mut zy,
                cg_tol,
            );
            let ttau = (w_tau + dot(&self.c, &zx) + dot(&self.b, &zy)) / self.den;

            // relaxed affine point r = α ũ + (1-α) u
            let mut numerical_failure = false;
            for i in 0..n {
                let txi = zx[i] - ttau * self.p_x[i];
                u_x[i] = alpha * txi + (1.0 - alpha) * u_x[i];
                if !u_x[i].is_finite() {
                    numerical_failure = true;
                }
            }
            let mut r_tau = 0.0;
            let mut r_y = vec![0.0; m_total];
            for i in 0..m_total {
                let tyi = zy[i] - ttau * self.p_y[i];
                r_y[i] = alpha * tyi + (1.0 - alpha) * u_y[i];
            }
            r_tau += alpha * ttau + (1.0 - alpha) * u_tau;
            if numerical_failure || !r_tau.is_finite() {
                return self.finish(SdpStatus::NumericalFailure, best, iters_done);
            }

            // cone projection u⁺ = Π(r − v); y eq-rows are free (dual of {0})
            for i in 0..m_eq {
                u_y[i] = r_y[i] - v_y[i];
            }
            for i in m_eq..m_total {
                u_y[i] = r_y[i] - v_y[i];
            }
            for (bi, &d) in self.layout.blocks.iter().enumerate() {
                let s = m_eq + self.layout.svec_off[bi];
                project_psd(&mut u_y[s..s + tri(d)], d);
            }
            u_tau = (r_tau - v_tau).max(0.0);

            // v⁺ = v + u⁺ − r
            for i in 0..m_total {
                v_y[i] += u_y[i] - r_y[i];
            }
            v_tau += u_tau - r_tau;

            if (it + 1) % self.opts.check_interval == 0 || it + 1 == self.opts.max_iters {
                if u_tau > 1e-12 {
                    let cand = self.extract(&u_x, &u_y, &v_y, u_tau);
                    let solved = cand.viol <= self.opts.feas_tol
                        && (self.c_is_zero
                            || (cand.dual_res <= self.opts.feas_tol
                                && cand.gap <= self.opts.gap_tol));
                    let better = best
                        .as_ref()
                        .map(|b| cand.viol + cand.dual_res + cand.gap < b.viol + b.dual_res + b.gap)
                        .unwrap_or(true);
                    if better {
                        best = Some(cand);
                    }
                    if solved {
                        let status = if self.c_is_zero {
                            SdpStatus::Feasible
                        } else {
                            SdpStatus::Optimal
                        };
                        return self.finish(status, best, iters_done);
                    }
                }
                if let Some(sol) = self.try_infeasibility(&u_y, iters_done) {
                    return sol;
                }
                if !self.c_is_zero {
                    if let Some(sol) = self.try_unbounded(&u_x, iters_done) {
                        return sol;
                    }
                }
            }
        }
        self.finish(SdpStatus::MaxIterations, best, iters_done)
    }

    /// Rebuilds the unscaled candidate from an iterate. The PSD blocks of the
    /// returned point come from the slack (cone-projected) variables, so the
    /// eigenvalue floor holds by construction and the primal residual is
    /// measured on exactly what the caller receives.
    fn extract(&self, u_x: &[f64], u_y: &[f64], v_y: &[f64], tau: f64) -> Candidate {
        let lay = &self.layout;
        let m_eq = lay.m_eq;
        let sc = &self.scaling;
        let mut z = vec![0.0; lay.n];
        // svec part: s_psd unscaled = e_b * ŝ / (sb τ)
        for (bi, &d) in lay.blocks.iter().enumerate() {
            let off = lay.svec_off[bi];
            let e_b = sc.e[off];
            for k in 0..tri(d) {
                z[off + k] = e_b * v_y[m_eq + off + k] / (sc.sb * tau);
            }
        }
        for i in lay.svec_total..lay.n {
            z[i] = sc.e[i] * u_x[i] / (sc.sb * tau);
        }
        let mut ax = vec![0.0; m_eq];
        self.a0.matvec(&z, &mut ax);
        let viol = ax
            .iter()
            .zip(&self.b0)
            .map(|(l, r)| (l - r).abs())
            .fold(0.0, f64::max);

        let mut y_eq = vec![0.0; m_eq];
        for i in 0..m_eq {
            y_eq[i] = sc.d[i] * u_y[i] / (sc.sc * tau);
        }
        let mut y_psd = vec![0.0; lay.svec_total];
        for (bi, &d) in lay.blocks.iter().enumerate() {
            let off = lay.svec_off[bi];
            let e_b = sc.e[off];
            for k in 0..tri(d) {
                y_psd[off + k] = u_y[m_eq + off + k] / (e_b * sc.sc * tau);
            }
        }
        // dual residual Aᵀy + c over x coordinates
        let mut dres = self.c0.clone();
        self.a0.matvec_t_add(&y_eq, &mut dres);
        for i in 0..lay.svec_total {
            dres[i] -= y_psd[i];
        }
        let dual_res = norm2(&dres) / (1.0 + norm2(&self.c0));
        let pobj = dot(&self.c0, &z);
        let bty = dot(&self.b0, &y_eq);
        let gap = (pobj + bty).abs() / (1.0 + pobj.abs() + bty.abs());
        Candidate {
            z,
            y_eq,
            viol,
            dual_res,
            gap,
            pobj,
        }
    }

    fn try_infeasibility(&self, u_y: &[f64], iters: usize) -> Option<SdpSolution> {
        let lay = &self.layout;
        let m_eq = lay.m_eq;
        let sc = &self.scaling;
        if m_eq == 0 {
            return None;
        }
        let mut y_eq = vec![0.0; m_eq];
        for i in 0..m_eq {
            y_eq[i] = sc.d[i] * u_y[i] / sc.sc;
        }
        let bty = dot(&self.b0, &y_eq);
        if !(bty < -1e-11 * (1.0 + norm2(&y_eq)) || bty < -1e-6) {
            return None;
        }
        let s = -1.0 / bty;
        for v in y_eq.iter_mut() {
            *v *= s;
        }
        let mut y_psd = vec![0.0; lay.svec_total];
        for (bi, &d) in lay.blocks.iter().enumerate() {
            let off = lay.svec_off[bi];
            let e_b = sc.e[off];
            for k in 0..tri(d) {
                y_psd[off + k] = s * u_y[m_eq + off + k] / (e_b * sc.sc);
            }
        }
        let mut res = vec![0.0; lay.n];
        self.a0.matvec_t_add(&y_eq, &mut res);
        for i in 0..lay.svec_total {
            res[i] -= y_psd[i];
        }
        let ray_residual = norm2(&res);
        if ray_residual > self.opts.feas_tol {
            return None;
        }
        // expand multipliers back over the original constraint list
        let mut y_full = vec![0.0; self.prob.num_constraints()];
        for (k, &orig) in self.kept_rows.iter().enumerate() {
            y_full[orig] = y_eq[k];
        }
        let y_blocks = lay
            .blocks
            .iter()
            .enumerate()
            .map(|(bi, &d)| {
                let off = lay.svec_off[bi];
                svec_to_mat(&y_psd[off..off + tri(d)], d)
            })
            .collect();
        Some(SdpSolution {
            status: SdpStatus::Infeasible,
            block_values: lay.blocks.iter().map(|&d| DMatrix::zeros(d, d)).collect(),
            free_values: vec![0.0; self.prob.free_dim()],
            objective_value: 0.0,
            primal_residual: f64::INFINITY,
            dual_residual: 0.0,
            gap: f64::INFINITY,
            iterations: iters,
            dual_eq: vec![0.0; self.prob.num_constraints()],
            certificate: Some(InfeasibilityCertificate {
                y_eq: y_full,
                y_blocks,
                ray_residual,
            }),
        })
    }

    fn try_unbounded(&self, u_x: &[f64], iters: usize) -> Option<SdpSolution> {
        let lay = &self.layout;
        let sc = &self.scaling;
        let mut x = vec![0.0; lay.n];
        for i in 0..lay.n {
            x[i] = sc.e[i] * u_x[i] / sc.sb;
        }
        let ctx = dot(&self.c0, &x);
        if !(ctx < -1e-11 * (1.0 + norm2(&x)) || ctx < -1e-6) {
            return None;
        }
        let s = -1.0 / ctx;
        for v in x.iter_mut() {
            *v *= s;
        }
        let mut ax = vec![0.0; lay.m_eq];
        self.a0.matvec(&x, &mut ax);
        if norm2(&ax) > self.opts.feas_tol {
            return None;
        }
        for (bi, &d) in lay.blocks.iter().enumerate() {
            let off = lay.svec_off[bi];
            let m = svec_to_mat(&x[off..off + tri(d)], d);
            if min_eig_sym(&m) < -self.opts.feas_tol {
                return None;
            }
        }
        Some(SdpSolution {
            status: SdpStatus::Unbounded,
            block_values: lay.blocks.iter().map(|&d| DMatrix::zeros(d, d)).collect(),
            free_values: vec![0.0; self.prob.free_dim()],
            objective_value: 0.0,
            primal_residual: f64::INFINITY,
            dual_residual: f64::INFINITY,
            gap: f64::INFINITY,
            iterations: iters,
            dual_eq: vec![0.0; self.prob.num_constraints()],
            certificate: None,
        })
    }

    fn finish(
        &mut self,
        status: SdpStatus,
        best: Option<Candidate>,
        iters: usize,
    ) -> SdpSolution {
        let lay = self.layout.clone();
        let mut cand = best.unwrap_or_else(|| Candidate {
            z: vec![0.0; lay.n],
            y_eq: vec![0.0; lay.m_eq],
            viol: f64::INFINITY,
            dual_res: f64::INFINITY,
            gap: f64::INFINITY,
            pobj: 0.0,
        });
        let mut status = status;

        // Feasibility problems: refine by alternating projections between the
        // affine set and the PSD cone; keep the result only if it improves.
        if self.c_is_zero
            && self.opts.polish
            && matches!(status, SdpStatus::Feasible | SdpStatus::MaxIterations)
            && cand.viol.is_finite()
        {
            let polished = self.polish(cand.z.clone());
            let (pviol, pmineig) = self.measure(&polished);
            let (oviol, omineig) = self.measure(&cand.z);
            if pviol.max(-pmineig) < oviol.max(-omineig) {
                cand.z = polished;
                cand.viol = pviol;
            }
            if status == SdpStatus::MaxIterations && cand.viol <= self.opts.feas_tol {
                let (_, mineig) = self.measure(&cand.z);
                if mineig >= -self.opts.feas_tol {
                    status = SdpStatus::Feasible;
                }
            }
        }

        let block_values: Vec<DMatrix<f64>> = lay
            .blocks
            .iter()
            .enumerate()
            .map(|(bi, &d)| {
                let off = lay.svec_off[bi];
                svec_to_mat(&cand.z[off..off + tri(d)], d)
            })
            .collect();
        let free_values = cand.z[lay.svec_total..].to_vec();
        let mut dual_eq = vec![0.0; self.prob.num_constraints()];
        for (k, &orig) in self.kept_rows.iter().enumerate() {
            dual_eq[orig] = cand.y_eq[k];
        }
        SdpSolution {
            status,
            block_values,
            free_values,
            objective_value: cand.pobj,
            primal_residual: cand.viol,
            dual_residual: cand.dual_res,
            gap: cand.gap,
            iterations: iters,
            dual_eq,
            certificate: None,
        }
    }

    /// Max constraint violation and min block eigenvalue of a candidate `z`.
    fn measure(&self, z: &[f64]) -> (f64, f64) {
        let lay = &self.layout;
        let mut ax = vec![0.0; lay.m_eq];
        self.a0.matvec(z, &mut ax);
        let viol = ax
            .iter()
            .zip(&self.b0)
            .map(|(l, r)| (l - r).abs())
            .fold(0.0, f64::max);
        let mut mineig = f64::INFINITY;
        for (bi, &d) in lay.blocks.iter().enumerate() {
            let off = lay.svec_off[bi];
            let m = svec_to_mat(&z[off..off + tri(d)], d);
            mineig = mineig.min(min_eig_sym(&m));
        }
        if !mineig.is_finite() {
            mineig = 0.0;
        }
        (viol, mineig)
    }

    fn polish(&self, mut z: Vec<f64>) -> Vec<f64> {
        let lay = &self.layout;
        let m_eq = lay.m_eq;
        if m_eq == 0 {
            for (bi, &d) in lay.blocks.iter().enumerate() {
                let off = lay.svec_off[bi];
                project_psd(&mut z[off..off + tri(d)], d);
            }
            return z;
        }
        let mut lam = vec![0.0; m_eq];
        let mut r = vec![0.0; m_eq];
        for _sweep in 0..40 {
            for (bi, &d) in lay.blocks.iter().enumerate() {
                let off = lay.svec_off[bi];
                project_psd(&mut z[off..off + tri(d)], d);
            }
            self.a0.matvec(&z, &mut r);
            for i in 0..m_eq {
                r[i] -= self.b0[i];
            }
            cg_aat(&self.a0, &r, &mut lam, 1e-13, 4 * m_eq + 200);
            let mut corr = vec![0.0; lay.n];
            self.a0.matvec_t_add(&lam, &mut corr);
            for i in 0..lay.n {
                z[i] -= corr[i];
            }
            let (_, mineig) = self.measure(&z);
            if mineig >= -1e-10 {
                break;
            }
        }
        z
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdp::LinearForm;

    fn default_opts() -> SolverOptions {
        SolverOptions::default()
    }

    #[test]
    fn minimize_trace_1x1() {
        // min tr(X), X ∈ S¹, X₁₁ = 1 → objective 1.
        let mut p = SdpProblem::new("tr1");
        let b = p.add_psd_block(1);
        p.add_constraint(LinearForm::new().mat(b, 0, 0, 1.0), 1.0);
        p.set_objective(LinearForm::new().mat(b, 0, 0, 1.0));
        let sol = solve(&p, &default_opts()).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!((sol.objective_value - 1.0).abs() < 1e-6, "{sol:?}");
        assert!((sol.block_values[0][(0, 0)] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn infeasible_negative_diagonal() {
        // X ∈ S¹, X₁₁ = −1, X ⪰ 0 → infeasible.
        let mut p = SdpProblem::new("inf1");
        let b = p.add_psd_block(1);
        p.add_constraint(LinearForm::new().mat(b, 0, 0, 1.0), -1.0);
        let sol = solve(&p, &default_opts()).unwrap();
        assert_eq!(sol.status, SdpStatus::Infeasible);
        let cert = sol.certificate.expect("certificate");
        assert!(cert.ray_residual <= 1e-7);
    }

    #[test]
    fn infeasible_negative_trace() {
        // tr(X) = −1 over a 3-block, X ⪰ 0.
        let mut p = SdpProblem::new("negtrace");
        let b = p.add_psd_block(3);
        let mut f = LinearForm::new();
        for i in 0..3 {
            f.push_mat(b, i, i, 1.0);
        }
        p.add_constraint(f, -1.0);
        let sol = solve(&p, &default_opts()).unwrap();
        assert_eq!(sol.status, SdpStatus::Infeasible);
    }

    #[test]
    fn schur_complement_2x2() {
        // min X₂₂ s.t. X₁₁ = 1, X₁₂ = 2, X ⪰ 0 → X₂₂ = 4.
        let mut p = SdpProblem::new("schur");
        let b = p.add_psd_block(2);
        p.add_constraint(LinearForm::new().mat(b, 0, 0, 1.0), 1.0);
        p.add_constraint(LinearForm::new().mat(b, 0, 1, 1.0), 2.0);
        p.set_objective(LinearForm::new().mat(b, 1, 1, 1.0));
        let sol = solve(&p, &default_opts()).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!((sol.objective_value - 4.0).abs() < 1e-5, "{}", sol.objective_value);
    }

    #[test]
    fn feasibility_with_free_vars() {
        // X₁₁ + t = 2, t = 1 → X₁₁ = 1 ⪰ 0 feasible.
        let mut p = SdpProblem::new("free");
        let b = p.add_psd_block(1);
        let t = p.add_free_vars(1);
        p.add_constraint(LinearForm::new().mat(b, 0, 0, 1.0).free(t, 1.0), 2.0);
        p.add_constraint(LinearForm::new().free(t, 1.0), 1.0);
        let sol = solve(&p, &default_opts()).unwrap();
        assert_eq!(sol.status, SdpStatus::Feasible);
        assert!((sol.free_values[0] - 1.0).abs() < 1e-6);
        assert!((sol.block_values[0][(0, 0)] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn empty_row_with_nonzero_rhs_is_infeasible() {
        let mut p = SdpProblem::new("zero-row");
        let _ = p.add_psd_block(1);
        p.add_constraint(LinearForm::new(), 3.0);
        let sol = solve(&p, &default_opts()).unwrap();
        assert_eq!(sol.status, SdpStatus::Infeasible);
        assert_eq!(sol.certificate.unwrap().ray_residual, 0.0);
    }

    #[test]
    fn unbounded_free_objective() {
        // min t with t free and no constraints touching it.
        let mut p = SdpProblem::new("unb");
        let t = p.add_free_vars(1);
        p.set_objective(LinearForm::new().free(t, 1.0));
        let sol = solve(&p, &default_opts()).unwrap();
        assert_eq!(sol.status, SdpStatus::Unbounded);
    }
}
