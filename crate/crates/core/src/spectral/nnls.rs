//! Nonnegative least squares, `min ‖A x − b‖₂` subject to `x ≥ 0`
//! (Lawson–Hanson active set).

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct NnlsSolution {
    pub x: DVector<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
}

fn solve_passive(a: &DMatrix<f64>, b: &DVector<f64>, passive: &[usize]) -> Result<DVector<f64>> {
    let sub = a.select_columns(passive);
    let svd = sub.svd(true, true);
    let eps = 1e-14 * svd.singular_values.max();
    svd.solve(b, eps).map_err(|msg| Error::Domain(format!("NNLS subproblem: {msg}")))
}

/// Columns are rescaled to unit norm internally, which keeps the active-set
/// tests meaningful when kernel columns differ by many orders of magnitude.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>, max_iter: usize) -> Result<NnlsSolution> {
    let (m, n) = a.shape();
    if b.len() != m {
        return Err(Error::DimensionMismatch(format!("A is {m}x{n} but b has {}", b.len())));
    }
    if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite NNLS input".into()));
    }
    let norms: Vec<f64> = (0..n).map(|j| a.column(j).norm()).collect();
    let scaled = DMatrix::from_fn(m, n, |i, j| if norms[j] > 0.0 { a[(i, j)] / norms[j] } else { 0.0 });
    let usable: Vec<bool> = norms.iter().map(|&v| v > 0.0).collect();

    let mut x = DVector::<f64>::zeros(n);
    let mut passive = vec![false; n];
    let tol = 1e-12 * b.norm().max(f64::MIN_POSITIVE);
    let mut iterations = 0;

    loop {
        let resid = b - &scaled * &x;
        let w = scaled.transpose() * &resid;
        let candidate = (0..n).filter(|&j| !passive[j] && usable[j]).max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j) = candidate.filter(|&j| w[j] > tol) else { break };
        passive[j] = true;

        loop {
            iterations += 1;
            if iterations > max_iter {
                return Err(Error::NumericalBreakdown(resid.norm()));
            }
            let idx: Vec<usize> = (0..n).filter(|&k| passive[k]).collect();
            let s_p = solve_passive(&scaled, b, &idx)?;
            if s_p.iter().all(|&v| v > 0.0) {
                x.fill(0.0);
                for (k, &col) in idx.iter().enumerate() {
                    x[col] = s_p[k];
                }
                break;
            }
            let mut alpha = f64::INFINITY;
            for (k, &col) in idx.iter().enumerate() {
                if s_p[k] <= 0.0 {
                    let denom = x[col] - s_p[k];
                    if denom > 0.0 {
                        alpha = alpha.min(x[col] / denom);
                    }
                }
            }
            if !alpha.is_finite() {
                alpha = 0.0;
            }
            for (k, &col) in idx.iter().enumerate() {
                x[col] += alpha * (s_p[k] - x[col]);
                if x[col] <= 1e-300 {
                    x[col] = 0.0;
                    passive[col] = false;
                }
            }
            if idx.iter().all(|&c| !passive[c]) {
                break;
            }
        }
    }

    let residual_norm = (b - &scaled * &x).norm();
    for j in 0..n {
        if norms[j] > 0.0 {
            x[j] /= norms[j];
        }
    }
    Ok(NnlsSolution { x, residual_norm, iterations })
}
