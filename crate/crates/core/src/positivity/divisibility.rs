use serde::{Deserialize, Serialize};

use crate::linalg::{self, RMatrix};
use crate::{Error, Result};

/// Symmetry tolerance for entropy tables, relative to the largest entry.
pub const TABLE_SYMMETRY_TOL: f64 = 1e-9;
/// Agreement required between the entropy and mutual-information forms of `B`.
pub const FORM_AGREEMENT_TOL: f64 = 1e-10;

/// `B_{ij} = S(A_iĀ_{j+1}) + S(A_{i+1}Ā_j) − S(A_iĀ_j) − S(A_{i+1}Ā_{j+1})`
/// for `i, j = 0..m`, with its determinant and the cross-check against the
/// mutual-information form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivisibilityRecord {
    #[serde(with = "crate::json::real_matrix")]
    pub b_matrix: RMatrix,
    pub det_b: f64,
    /// Smallest eigenvalue of `B`; negative iff some subfamily violates
    /// the `λ → 0` inequalities.
    pub min_eigenvalue: f64,
    pub spectral_norm: f64,
    /// `B` rebuilt from `I(A_i, Ā_j)`; present when single-set entropies
    /// were supplied.
    #[serde(with = "option_matrix")]
    pub b_from_mutual_information: Option<RMatrix>,
    /// Max entrywise difference between the two forms, relative to `‖B‖`.
    pub form_discrepancy: Option<f64>,
}

mod option_matrix {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &Option<RMatrix>, s: S) -> std::result::Result<S::Ok, S::Error> {
        m.as_ref().map(crate::json::real_rows).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<RMatrix>, D::Error> {
        Option::<Vec<Vec<f64>>>::deserialize(d)?
            .map(|rows| crate::json::real_from_rows(&rows).map_err(serde::de::Error::custom))
            .transpose()
    }
}

impl DivisibilityRecord {
    pub fn m(&self) -> usize {
        self.b_matrix.nrows()
    }

    /// `min eigenvalue / ‖B‖₂` (0 for the zero matrix).
    pub fn relative_slack(&self) -> f64 {
        if self.spectral_norm > 0.0 {
            self.min_eigenvalue / self.spectral_norm
        } else {
            0.0
        }
    }
}

fn check_table(table: &RMatrix) -> Result<usize> {
    let (rows, cols) = table.shape();
    if rows != cols || rows < 2 {
        return Err(Error::NotSquare { rows, cols });
    }
    if table.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("entropy table has non-finite entries".into()));
    }
    let scale = table.amax().max(1.0);
    let asym = linalg::symmetric_deviation(table);
    if asym > TABLE_SYMMETRY_TOL * scale {
        return Err(Error::NotSymmetric(asym));
    }
    Ok(rows - 1)
}

fn second_difference(s: &RMatrix, m: usize, sign: f64) -> RMatrix {
    RMatrix::from_fn(m, m, |i, j| sign * (s[(i, j + 1)] + s[(i + 1, j)] - s[(i, j)] - s[(i + 1, j + 1)]))
}

/// Build the divisibility matrix from an `(m+1)×(m+1)` table of
/// `S(A_iĀ_j)`. `singles[i] = S(A_i)` enables the mutual-information
/// cross-check.
pub fn divisibility_matrix(table: &RMatrix, singles: Option<&[f64]>) -> Result<DivisibilityRecord> {
    let m = check_table(table)?;
    // symmetrise so that B is exactly symmetric
    let s = (table + table.transpose()) * 0.5;
    let b = second_difference(&s, m, 1.0);
    let (vals, _) = linalg::symmetric_eigen(&b);
    let spectral_norm = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));

    let (b_mi, discrepancy) = match singles {
        None => (None, None),
        Some(single) => {
            if single.len() != m + 1 {
                return Err(Error::DimensionMismatch(format!(
                    "{} single entropies for {} subsystems",
                    single.len(),
                    m + 1
                )));
            }
            let mi = RMatrix::from_fn(m + 1, m + 1, |i, j| single[i] + single[j] - s[(i, j)]);
            let b_mi = second_difference(&mi, m, -1.0);
            let scale = b.amax().max(table.amax()).max(f64::MIN_POSITIVE);
            let d = (&b_mi - &b).amax() / scale;
            if d > FORM_AGREEMENT_TOL {
                return Err(Error::NumericalBreakdown(d));
            }
            (Some(b_mi), Some(d))
        }
    };

    Ok(DivisibilityRecord {
        det_b: b.determinant(),
        min_eigenvalue: vals[0],
        spectral_norm,
        b_matrix: b,
        b_from_mutual_information: b_mi,
        form_discrepancy: discrepancy,
    })
}

/// Slack of the explicit three-set `λ → 0` inequality, LHS − RHS.
pub fn three_set_inequality(s_ab: f64, s_ac: f64, s_bc: f64, s_aa: f64, s_bb: f64, s_cc: f64) -> f64 {
    let lhs = 2.0 * s_ab * s_ac + 2.0 * s_ab * s_bc + 2.0 * s_bc * s_ac + s_aa * s_bb + s_aa * s_cc + s_bb * s_cc;
    let rhs = s_ab * s_ab + s_ac * s_ac + s_bc * s_bc + 2.0 * s_ab * s_cc + 2.0 * s_ac * s_bb + 2.0 * s_bc * s_aa;
    lhs - rhs
}

/// `det B` and `min eig B` for one ordering of the subsystems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderingResult {
    pub order: Vec<usize>,
    pub det_b: f64,
    pub min_eigenvalue: f64,
}

/// Fixed-order and best-order results over all orderings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderingScan {
    pub fixed: OrderingResult,
    pub best: OrderingResult,
    /// Largest `|det B(σ) − det B(id)|` relative to `max(|det B|, ‖B‖^m)`.
    pub det_spread: f64,
    pub orderings: usize,
}

/// Largest table size for which all orderings are scanned.
pub const MAX_SCAN_SUBSYSTEMS: usize = 4;

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for k in 0..used.len() {
            if !used[k] {
                used[k] = true;
                prefix.push(k);
                rec(prefix, used, out);
                prefix.pop();
                used[k] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(n), &mut vec![false; n], &mut out);
    out
}

/// Evaluate `B` for every reordering of the subsystems (`m ≤ 3`).
///
/// "Best" maximises `det B`. Reordering only changes the basis of the
/// zero-sum subspace by an integer unimodular matrix, so `det B` is the same
/// for every order up to roundoff and the spread is reported as a check.
pub fn ordering_scan(table: &RMatrix) -> Result<OrderingScan> {
    let m = check_table(table)?;
    if m + 1 > MAX_SCAN_SUBSYSTEMS {
        return Err(Error::Domain(format!(
            "ordering scan supports at most {MAX_SCAN_SUBSYSTEMS} subsystems, got {}",
            m + 1
        )));
    }
    let mut results = Vec::new();
    for order in permutations(m + 1) {
        let permuted = RMatrix::from_fn(m + 1, m + 1, |i, j| table[(order[i], order[j])]);
        let rec = divisibility_matrix(&permuted, None)?;
        results.push(OrderingResult { order, det_b: rec.det_b, min_eigenvalue: rec.min_eigenvalue });
    }
    let fixed = results[0].clone();
    let norm = divisibility_matrix(table, None)?.spectral_norm;
    let scale = fixed.det_b.abs().max(norm.powi(m as i32)).max(f64::MIN_POSITIVE);
    let det_spread = results.iter().map(|r| (r.det_b - fixed.det_b).abs() / scale).fold(0.0, f64::max);
    let best =
        results.iter().cloned().reduce(|a, b| if b.det_b > a.det_b { b } else { a }).expect("at least one ordering");
    Ok(OrderingScan { fixed, best, det_spread, orderings: results.len() })
}
