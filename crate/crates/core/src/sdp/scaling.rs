//! Ruiz-style row/column equilibration of the constraint matrix.
//!
//! Column scales are forced uniform within each PSD block (geometric mean of
//! the member columns) so the cone is preserved, and the implicit `-I` cone
//! rows get the reciprocal factor, keeping them exactly `-I` in scaled space.
//! Residuals are always reported unscaled by the solver.

use super::linsolve::Csr;

#[derive(Debug, Clone)]
pub(crate) struct Scaling {
    /// Per equality-row scale.
    pub d: Vec<f64>,
    /// Per x-coordinate scale (uniform within each PSD block's svec range).
    pub e: Vec<f64>,
    /// Scalar applied to `b` after row scaling.
    pub sb: f64,
    /// Scalar applied to `c` after column scaling.
    pub sc: f64,
}

const SCALE_MIN: f64 = 1e-6;
const SCALE_MAX: f64 = 1e6;

fn clamp(x: f64) -> f64 {
    x.clamp(SCALE_MIN, SCALE_MAX)
}

/// Equilibrates `a` in place and scales `b`, `c` accordingly.
/// `block_ranges` lists the svec column range of each PSD block.
pub(crate) fn ruiz(
    a: &mut Csr,
    b: &mut [f64],
    c: &mut [f64],
    block_ranges: &[(usize, usize)],
    iters: usize,
) -> Scaling {
    let (m, n) = (a.m, a.n);
    let mut d = vec![1.0f64; m];
    let mut e = vec![1.0f64; n];

    for _ in 0..iters {
        let mut row_max = vec![0.0f64; m];
        let mut col_max = vec![0.0f64; n];
        for r in 0..m {
            let (cols, vals) = a.row(r);
            for (cc, vv) in cols.iter().zip(vals) {
                let av = vv.abs();
                row_max[r] = row_max[r].max(av);
                col_max[*cc] = col_max[*cc].max(av);
            }
        }
        // Cone rows contribute |−1| = 1 to their svec columns.
        for &(s, t) in block_ranges {
            for cm in col_max.iter_mut().take(t).skip(s) {
                *cm = cm.max(1.0);
            }
        }
        let dr: Vec<f64> = row_max
            .iter()
            .map(|&v| if v > 0.0 { 1.0 / v.sqrt() } else { 1.0 })
            .collect();
        let mut dc: Vec<f64> = col_max
            .iter()
            .map(|&v| if v > 0.0 { 1.0 / v.sqrt() } else { 1.0 })
            .collect();
        // Uniform scale per PSD block: geometric mean over its columns.
        for &(s, t) in block_ranges {
            if t > s {
                let log_mean: f64 =
                    dc[s..t].iter().map(|v| v.ln()).sum::<f64>() / (t - s) as f64;
                let g = log_mean.exp();
                for v in dc.iter_mut().take(t).skip(s) {
                    *v = g;
                }
            }
        }
        for r in 0..m {
            let (s, t) = (a.row_ptr[r], a.row_ptr[r + 1]);
            for k in s..t {
                a.vals[k] *= dr[r] * dc[a.cols[k]];
            }
        }
        for (di, dri) in d.iter_mut().zip(&dr) {
            *di = clamp(*di * dri);
        }
        for (ei, dci) in e.iter_mut().zip(&dc) {
            *ei = clamp(*ei * dci);
        }
    }

    for (bi, di) in b.iter_mut().zip(&d) {
        *bi *= di;
    }
    for (ci, ei) in c.iter_mut().zip(&e) {
        *ci *= ei;
    }

    let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let cnorm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
    let sb = if bnorm > 1.0 { 1.0 / bnorm } else { 1.0 };
    let sc = if cnorm > 1.0 { 1.0 / cnorm } else { 1.0 };
    for bi in b.iter_mut() {
        *bi *= sb;
    }
    for ci in c.iter_mut() {
        *ci *= sc;
    }

    Scaling { d, e, sb, sc }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equilibration_balances_extreme_rows() {
        // Row 0 has entries ~1e4, row 1 ~1e-3.
        let mut a = Csr::from_triplets(
            2,
            3,
            vec![(0, 0, 2e4), (0, 1, 1e4), (1, 1, 1e-3), (1, 2, 5e-3)],
        );
        let mut b = vec![1.0, 1.0];
        let mut c = vec![0.0, 0.0, 1.0];
        let s = ruiz(&mut a, &mut b, &mut c, &[], 10);
        let mut maxabs: f64 = 0.0;
        let mut minmax = f64::INFINITY;
        for r in 0..2 {
            let (_, vals) = a.row(r);
            let rm = vals.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            maxabs = maxabs.max(rm);
            minmax = minmax.min(rm);
        }
        assert!(maxabs / minmax < 10.0, "rows stay unbalanced: {a:?}");
        // scaled entry = d_r * original * e_c
        let (cols, vals) = a.row(0);
        for (c_, v) in cols.iter().zip(vals) {
            let orig = match c_ {
                0 => 2e4,
                1 => 1e4,
                _ => unreachable!(),
            };
            assert!((v - s.d[0] * orig * s.e[*c_]).abs() < 1e-9 * v.abs());
        }
    }

    #[test]
    fn block_columns_share_one_scale() {
        let mut a = Csr::from_triplets(
            2,
            4,
            vec![(0, 0, 100.0), (0, 1, 0.01), (1, 2, 1.0), (1, 3, 1.0)],
        );
        let mut b = vec![0.0, 0.0];
        let mut c = vec![0.0; 4];
        let s = ruiz(&mut a, &mut b, &mut c, &[(0, 2)], 8);
        assert!((s.e[0] - s.e[1]).abs() < 1e-12);
    }
}
