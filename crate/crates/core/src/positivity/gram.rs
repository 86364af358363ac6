use serde::{Deserialize, Serialize};

use crate::linalg::{self, RMatrix};
use crate::modular::PurifiedState;
use crate::reflected::{self, ReflectedDensity, SubsystemSplit};
use crate::{Error, Result};

/// Relative tolerance for the theorem-level PSD check of integer-`n` Gram
/// matrices.
pub const THEOREM_TOL: f64 = 1e-10;
/// Symmetry tolerance for Gram matrices built from states.
pub const SYMMETRY_TOL: f64 = 1e-9;

/// Matrix of `e^{-λ S_n(A_i Ā_j)}` with spectral diagnostics.
///
/// With the default `λ = n - 1` the entries are the trace powers
/// `tr ρ_{A_i Ā_j}^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramRecord {
    pub n: u32,
    pub lambda: f64,
    #[serde(with = "crate::json::real_matrix")]
    pub entries: RMatrix,
    pub min_eigenvalue: f64,
    pub spectral_norm: f64,
    pub leading_minors: Vec<f64>,
}

impl GramRecord {
    /// Wrap an arbitrary square matrix and compute its diagnostics.
    pub fn from_entries(entries: RMatrix, n: u32, lambda: f64) -> Result<Self> {
        let (rows, cols) = entries.shape();
        if rows != cols || rows == 0 {
            return Err(Error::NotSquare { rows, cols });
        }
        let (vals, _) = linalg::symmetric_eigen(&entries);
        let spectral_norm = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        Ok(Self {
            n,
            lambda,
            min_eigenvalue: vals[0],
            spectral_norm,
            leading_minors: linalg::leading_minors(&entries),
            entries,
        })
    }

    pub fn size(&self) -> usize {
        self.entries.nrows()
    }

    /// `min eigenvalue / ‖G‖₂`, the scale-free PSD slack.
    pub fn relative_slack(&self) -> f64 {
        if self.spectral_norm > 0.0 {
            self.min_eigenvalue / self.spectral_norm
        } else {
            0.0
        }
    }
}

/// Table of `S_n(A_i Ā_j)`; `n = 1` is the von Neumann entropy.
pub fn entropy_table(table: &[Vec<ReflectedDensity>], n: u32) -> Result<RMatrix> {
    let size = table.len();
    let mut out = RMatrix::zeros(size, size);
    for (i, row) in table.iter().enumerate() {
        for (j, rho) in row.iter().enumerate() {
            out[(i, j)] = rho.renyi(n)?;
        }
    }
    Ok(out)
}

/// Gram matrix from precomputed reflected densities.
///
/// `lambda = None` selects the proven coefficient `λ = n - 1`, whose entries
/// are `tr ρⁿ`; `n = 1` requires an explicit `lambda`.
pub fn gram_from_reflected(table: &[Vec<ReflectedDensity>], n: u32, lambda: Option<f64>) -> Result<GramRecord> {
    if n == 0 {
        return Err(Error::InvalidIndex(0));
    }
    let lambda = match (n, lambda) {
        (1, None) => {
            return Err(Error::Config("the entropy case n = 1 needs an explicit lambda".into()));
        }
        (_, Some(l)) if !(l > 0.0 && l.is_finite()) => {
            return Err(Error::Config(format!("lambda must be positive, got {l}")));
        }
        (_, Some(l)) => l,
        (_, None) => (n - 1) as f64,
    };
    let size = table.len();
    let mut entries = RMatrix::zeros(size, size);
    for (i, row) in table.iter().enumerate() {
        for (j, rho) in row.iter().enumerate() {
            entries[(i, j)] = if n == 1 {
                (-lambda * rho.von_neumann()?).exp()
            } else {
                (rho.log_trace_power(n as f64)? * lambda / (n - 1) as f64).exp()
            };
        }
    }
    let asym = linalg::symmetric_deviation(&entries);
    if asym > SYMMETRY_TOL {
        return Err(Error::NotSymmetric(asym));
    }
    if let Some(bad) = entries.iter().find(|&&x| !(x > 0.0 && x <= 1.0 + 1e-12)) {
        return Err(Error::Domain(format!("Gram entry {bad} outside (0, 1]")));
    }
    GramRecord::from_entries(entries, n, lambda)
}

/// Gram matrix of `tr ρ_{A_i Ā_j}^n` (or `e^{-λ S_n}`) for the given splits.
pub fn gram_matrix(psi: &PurifiedState, splits: &[SubsystemSplit], n: u32, lambda: Option<f64>) -> Result<GramRecord> {
    let table = reflected::reflected_table(psi, splits)?;
    gram_from_reflected(&table, n, lambda)
}

/// Outcome of a positive-semidefiniteness check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsdVerdict {
    pub passed: bool,
    pub min_eigenvalue: f64,
    pub spectral_norm: f64,
    /// `-tol * ‖G‖₂`.
    pub threshold: f64,
    pub leading_minors: Vec<f64>,
    pub minors_passed: bool,
    /// Unit eigenvector of the smallest eigenvalue when the check fails:
    /// coefficients `α_i` of the combination `Σ α_i O_{A_i}` that breaks
    /// positivity.
    pub witness: Option<Vec<f64>>,
}

/// PASS iff the smallest eigenvalue is at least `-tol·‖G‖₂` and every
/// leading `k x k` minor is at least `-tol·‖G‖₂^k`.
pub fn check_psd(g: &GramRecord, tol: f64) -> Result<PsdVerdict> {
    check_psd_matrix(&g.entries, tol)
}

pub fn check_psd_matrix(m: &RMatrix, tol: f64) -> Result<PsdVerdict> {
    let (rows, cols) = m.shape();
    if rows != cols || rows == 0 {
        return Err(Error::NotSquare { rows, cols });
    }
    let (vals, vecs) = linalg::symmetric_eigen(m);
    let norm = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let asym = linalg::symmetric_deviation(m);
    if asym > SYMMETRY_TOL * norm.max(1.0) {
        return Err(Error::NotSymmetric(asym));
    }
    let threshold = -tol * norm;
    let leading_minors = linalg::leading_minors(m);
    let minors_passed = leading_minors.iter().enumerate().all(|(k, &det)| det >= -tol * norm.powi(k as i32 + 1));
    let passed = vals[0] >= threshold && minors_passed;
    let witness = (!passed).then(|| {
        let mut w: Vec<f64> = vecs.column(0).iter().copied().collect();
        if w.iter().find(|x| x.abs() > 1e-12).is_some_and(|&x| x < 0.0) {
            w.iter_mut().for_each(|x| *x = -*x);
        }
        w
    });
    Ok(PsdVerdict {
        passed,
        min_eigenvalue: vals[0],
        spectral_norm: norm,
        threshold,
        leading_minors,
        minors_passed,
        witness,
    })
}

/// Entrywise `s`-th power; PSD is preserved for integer `s` (Schur product
/// theorem).
pub fn schur_power(g: &GramRecord, s: u32) -> Result<GramRecord> {
    if s == 0 {
        return Err(Error::Domain("Schur power needs s ≥ 1".into()));
    }
    if s == 1 {
        return Ok(g.clone());
    }
    let entries = g.entries.map(|x| x.powi(s as i32));
    GramRecord::from_entries(entries, g.n, g.lambda * s as f64)
}

/// Entrywise real power `s > 0`; PSD is not guaranteed unless the matrix is
/// infinitely divisible.
pub fn fractional_power(g: &GramRecord, s: f64) -> Result<GramRecord> {
    if !(s > 0.0) {
        return Err(Error::Domain(format!("fractional power needs s > 0, got {s}")));
    }
    GramRecord::from_entries(g.entries.map(|x| x.powf(s)), g.n, g.lambda * s)
}
