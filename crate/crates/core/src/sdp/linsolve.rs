//! Sparse matrix plumbing and the cached normal-equation solver used by the
//! splitting iteration: `S = I + AᵀA` is factored once (dense Cholesky) for
//! small problems and applied via Jacobi-preconditioned conjugate gradients
//! for large ones.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

/// Compressed sparse row matrix.
#[derive(Debug, Clone)]
pub(crate) struct Csr {
    pub m: usize,
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl Csr {
    /// Builds from triplets; duplicate positions are summed.
    pub fn from_triplets(m: usize, n: usize, mut trip: Vec<(usize, usize, f64)>) -> Csr {
        trip.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut rows = Vec::with_capacity(trip.len());
        let mut cols = Vec::with_capacity(trip.len());
        let mut vals: Vec<f64> = Vec::with_capacity(trip.len());
        for &(r, c, v) in &trip {
            debug_assert!(r < m && c < n);
            if rows.last() == Some(&r) && cols.last() == Some(&c) {
                *vals.last_mut().unwrap() += v;
            } else {
                rows.push(r);
                cols.push(c);
                vals.push(v);
            }
        }
        let mut row_ptr = vec![0usize; m + 1];
        for &r in &rows {
            row_ptr[r + 1] += 1;
        }
        for i in 0..m {
            row_ptr[i + 1] += row_ptr[i];
        }
        Csr { m, n, row_ptr, cols, vals }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let (s, e) = (self.row_ptr[r], self.row_ptr[r + 1]);
        (&self.cols[s..e], &self.vals[s..e])
    }

    /// `y = A x`
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.m);
        for r in 0..self.m {
            let (cols, vals) = self.row(r);
            let mut acc = 0.0;
            for (c, v) in cols.iter().zip(vals) {
                acc += v * x[*c];
            }
            y[r] = acc;
        }
    }

    /// `x += Aᵀ y`
    pub fn matvec_t_add(&self, y: &[f64], x: &mut [f64]) {
        debug_assert_eq!(y.len(), self.m);
        debug_assert_eq!(x.len(), self.n);
        for r in 0..self.m {
            let yr = y[r];
            if yr == 0.0 {
                continue;
            }
            let (cols, vals) = self.row(r);
            for (c, v) in cols.iter().zip(vals) {
                x[*c] += v * yr;
            }
        }
    }
}

/// Applies `S w = w + Aᵀ(A w) + 1_{svec} ∘ w` where the indicator covers the
/// leading `svec_total` coordinates (the implicit `-I` cone rows).
pub(crate) fn normal_apply(a: &Csr, svec_total: usize, w: &[f64], out: &mut [f64], tmp_m: &mut [f64]) {
    out.copy_from_slice(w);
    for i in 0..svec_total.min(out.len()) {
        out[i] += w[i];
    }
    a.matvec(w, tmp_m);
    a.matvec_t_add(tmp_m, out);
}

pub(crate) enum NormalSolver {
    Dense(Box<Cholesky<f64, Dyn>>),
    Cg {
        diag: Vec<f64>,
        warm: Vec<f64>,
        max_iters: usize,
    },
}

impl NormalSolver {
    pub fn new(a: &Csr, svec_total: usize, n: usize, dense_threshold: usize) -> NormalSolver {
        if n <= dense_threshold {
            let mut s = DMatrix::<f64>::identity(n, n);
            for i in 0..svec_total {
                s[(i, i)] += 1.0;
            }
            for r in 0..a.m {
                let (cols, vals) = a.row(r);
                for (ia, &ca) in cols.iter().enumerate() {
                    let va = vals[ia];
                    for (ib, &cb) in cols.iter().enumerate() {
                        s[(ca, cb)] += va * vals[ib];
                    }
                }
            }
            let chol = Cholesky::new(s).expect("I + AᵀA is positive definite");
            NormalSolver::Dense(Box::new(chol))
        } else {
            let mut diag = vec![1.0f64; n];
            for d in diag.iter_mut().take(svec_total) {
                *d += 1.0;
            }
            for r in 0..a.m {
                let (cols, vals) = a.row(r);
                for (c, v) in cols.iter().zip(vals) {
                    diag[*c] += v * v;
                }
            }
            NormalSolver::Cg {
                diag,
                warm: vec![0.0; n],
                max_iters: 10 * n + 100,
            }
        }
    }

    /// Solves `S x = rhs` to relative tolerance `tol` (ignored by the dense
    /// path, which is exact to rounding).
    pub fn solve(&mut self, a: &Csr, svec_total: usize, rhs: &[f64], out: &mut [f64], tol: f64) {
        match self {
            NormalSolver::Dense(chol) => {
                let mut v = DVector::from_column_slice(rhs);
                chol.solve_mut(&mut v);
                out.copy_from_slice(v.as_slice());
            }
            NormalSolver::Cg { diag, warm, max_iters } => {
                let n = rhs.len();
                let mut tmp_m = vec![0.0; a.m];
                let mut x = std::mem::take(warm);
                if x.len() != n {
                    x = vec![0.0; n];
                }
                let mut r = vec![0.0; n];
                let mut sx = vec![0.0; n];
                normal_apply(a, svec_total, &x, &mut sx, &mut tmp_m);
                for i in 0..n {
                    r[i] = rhs[i] - sx[i];
                }
                let bnorm = norm2(rhs).max(1e-300);
                let target = tol * bnorm;
                let mut z: Vec<f64> = r.iter().zip(diag.iter()).map(|(ri, di)| ri / di).collect();
                let mut p = z.clone();
                let mut rz = dot(&r, &z);
                let mut it = 0;
                while norm2(&r) > target && it < *max_iters {
                    normal_apply(a, svec_total, &p, &mut sx, &mut tmp_m);
                    let psp = dot(&p, &sx);
                    if psp <= 0.0 || !psp.is_finite() {
                        break;
                    }
                    let alpha = rz / psp;
                    for i in 0..n {
                        x[i] += alpha * p[i];
                        r[i] -= alpha * sx[i];
                    }
                    for i in 0..n {
                        z[i] = r[i] / diag[i];
                    }
                    let rz_new = dot(&r, &z);
                    let beta = rz_new / rz;
                    rz = rz_new;
                    for i in 0..n {
                        p[i] = z[i] + beta * p[i];
                    }
                    it += 1;
                }
                out.copy_from_slice(&x);
                *warm = x;
            }
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// CG on `G λ = A zᵀ…`-style systems: solves `(A Aᵀ + δI) λ = rhs` without
/// forming the product, used by the feasibility polish.
pub(crate) fn cg_aat(a: &Csr, rhs: &[f64], out: &mut [f64], tol: f64, max_iters: usize) {
    let m = rhs.len();
    let delta = 1e-12;
    let apply = |x: &[f64], y: &mut [f64], tmp_n: &mut [f64]| {
        tmp_n.iter_mut().for_each(|v| *v = 0.0);
        a.matvec_t_add(x, tmp_n);
        a.matvec(tmp_n, y);
        for i in 0..m {
            y[i] += delta * x[i];
        }
    };
    let mut tmp_n = vec![0.0; a.n];
    let mut x = vec![0.0; m];
    let mut r = rhs.to_vec();
    let mut p = r.clone();
    let mut gp = vec![0.0; m];
    let mut rr = dot(&r, &r);
    let target = tol * norm2(rhs).max(1e-300);
    let mut it = 0;
    while rr.sqrt() > target && it < max_iters {
        apply(&p, &mut gp, &mut tmp_n);
        let pgp = dot(&p, &gp);
        if pgp <= 0.0 || !pgp.is_finite() {
            break;
        }
        let alpha = rr / pgp;
        for i in 0..m {
            x[i] += alpha * p[i];
            r[i] -= alpha * gp[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..m {
            p[i] = r[i] + beta * p[i];
        }
        it += 1;
    }
    out.copy_from_slice(&x);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csr_products() {
        // A = [[1,0,2],[0,3,0]]
        let a = Csr::from_triplets(2, 3, vec![(0, 0, 1.0), (0, 2, 2.0), (1, 1, 3.0)]);
        assert_eq!(a.nnz(), 3);
        let mut y = vec![0.0; 2];
        a.matvec(&[1.0, 1.0, 1.0], &mut y);
        assert_eq!(y, vec![3.0, 3.0]);
        let mut x = vec![0.0; 3];
        a.matvec_t_add(&[1.0, 2.0], &mut x);
        assert_eq!(x, vec![1.0, 6.0, 2.0]);
    }

    #[test]
    fn csr_duplicate_triplets_accumulate() {
        let a = Csr::from_triplets(1, 2, vec![(0, 1, 1.0), (0, 1, 2.5)]);
        assert_eq!(a.nnz(), 1);
        let mut y = vec![0.0; 1];
        a.matvec(&[0.0, 2.0], &mut y);
        assert_eq!(y, vec![7.0]);
    }

    #[test]
    fn dense_and_cg_agree() {
        let trip = vec![
            (0, 0, 1.0),
            (0, 3, -2.0),
            (1, 1, 3.0),
            (1, 2, 0.5),
            (2, 2, -1.0),
            (2, 4, 2.0),
        ];
        let a = Csr::from_triplets(3, 5, trip);
        let rhs = [1.0, -2.0, 0.5, 3.0, -1.0];
        let mut dense = NormalSolver::new(&a, 3, 5, 100);
        let mut cg = NormalSolver::new(&a, 3, 5, 0);
        let mut xd = vec![0.0; 5];
        let mut xc = vec![0.0; 5];
        dense.solve(&a, 3, &rhs, &mut xd, 1e-12);
        cg.solve(&a, 3, &rhs, &mut xc, 1e-12);
        for i in 0..5 {
            assert!((xd[i] - xc[i]).abs() < 1e-8, "{xd:?} vs {xc:?}");
        }
        // verify S xd = rhs
        let mut tmp = vec![0.0; 3];
        let mut sx = vec![0.0; 5];
        normal_apply(&a, 3, &xd, &mut sx, &mut tmp);
        for i in 0..5 {
            assert!((sx[i] - rhs[i]).abs() < 1e-9);
        }
    }
}
