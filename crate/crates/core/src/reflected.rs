//! Reflected reduced density matrices `ρ_{A_i Ā_j}` and their entropies.
//!
//! A subsystem `A` of `H₁` is a factorization `H₁ = H_A ⊗ H_B` given by a
//! unitary frame whose columns are the product vectors `|k l⟩`. Relative to
//! a purified state the frame defines the coefficients
//! `β^p_{kl} = ⟨k l|p⟩`, and
//!
//! ```text
//! O^{pq}_A = (λ_p λ_q)^{1/4} Σ_{k,k',l} β^p_{kl} (β^q_{k'l})* |k⟩⟨k'|
//! ρ_{A_i Ā_j} = Σ_{pq} O^{pq}_{A_i} ⊗ Ō^{pq}_{A_j},   Ō^{pq} = (O^{pq})*
//! ```
//!
//! where the reflected factor `Ā_j` lives in `H₂` with basis
//! `|k l⟩‾ = Σ_p β^p_{kl} |p̃⟩`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::{self, CMatrix, C64, ZERO};
use crate::modular::{self, DensityMatrix, ModularData, PurifiedState};
use crate::random;
use crate::{Error, Result};

/// Trace tolerance for reflected densities.
pub const TRACE_TOL: f64 = 1e-10;
/// Most negative eigenvalue accepted as roundoff.
pub const NEGATIVITY_TOL: f64 = 1e-12;

/// A tensor factorization `H₁ = H_A ⊗ H_B`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsystemSplit {
    pub label: String,
    pub dim_a: usize,
    pub dim_b: usize,
    /// Columns are `|k l⟩` (flat index `k * dim_b + l`) in the computational
    /// basis of `H₁`.
    #[serde(with = "crate::json::complex_matrix")]
    pub frame: CMatrix,
}

impl SubsystemSplit {
    pub fn new(label: impl Into<String>, dim_a: usize, dim_b: usize, frame: CMatrix) -> Result<Self> {
        let d = dim_a * dim_b;
        if dim_a == 0 || dim_b == 0 || frame.shape() != (d, d) {
            return Err(Error::DimensionMismatch(format!(
                "split {dim_a}x{dim_b} with a {}x{} frame",
                frame.nrows(),
                frame.ncols()
            )));
        }
        let defect = linalg::unitarity_defect(&frame);
        if defect > 1e-10 {
            return Err(Error::NotUnitary(defect));
        }
        Ok(Self { label: label.into(), dim_a, dim_b, frame })
    }

    /// Split along the computational basis, `|k l⟩ = e_{k dim_b + l}`.
    pub fn axis_aligned(label: impl Into<String>, dim_a: usize, dim_b: usize) -> Self {
        Self { label: label.into(), dim_a, dim_b, frame: linalg::identity(dim_a * dim_b) }
    }

    /// Split whose coefficients relative to `psi` are the given `β`
    /// (`beta[(k * dim_b + l, p)] = β^p_{kl}`).
    pub fn from_beta(
        label: impl Into<String>,
        psi: &PurifiedState,
        dim_a: usize,
        dim_b: usize,
        beta: &CMatrix,
    ) -> Result<Self> {
        if beta.shape() != (psi.dim, psi.dim) {
            return Err(Error::DimensionMismatch("beta must be d x d".into()));
        }
        Self::new(label, dim_a, dim_b, &psi.eigenbasis * beta.adjoint())
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R, label: impl Into<String>, dim_a: usize, dim_b: usize) -> Self {
        Self { label: label.into(), dim_a, dim_b, frame: random::haar_unitary(rng, dim_a * dim_b) }
    }

    pub fn dim(&self) -> usize {
        self.dim_a * self.dim_b
    }

    /// `β^p_{kl} = ⟨k l|p⟩` as a matrix with rows `kl` and columns `p`.
    pub fn beta(&self, psi: &PurifiedState) -> Result<CMatrix> {
        self.check_against(psi)?;
        Ok(self.frame.adjoint() * &psi.eigenbasis)
    }

    /// Projector-free embedding of an operator on `H_A` into `H₁`.
    pub fn embed(&self, op_a: &CMatrix) -> CMatrix {
        let local = linalg::kron(op_a, &linalg::identity(self.dim_b));
        &self.frame * local * self.frame.adjoint()
    }

    /// `tr_B` of an operator on `H₁`, in the `|k⟩` basis of `H_A`.
    pub fn reduce(&self, op: &CMatrix) -> CMatrix {
        let local = self.frame.adjoint() * op * &self.frame;
        linalg::partial_trace_second(&local, self.dim_a, self.dim_b)
    }

    fn check_against(&self, psi: &PurifiedState) -> Result<()> {
        if self.dim() != psi.dim {
            return Err(Error::DimensionMismatch(format!(
                "split '{}' has dimension {} but the state has {}",
                self.label,
                self.dim(),
                psi.dim
            )));
        }
        Ok(())
    }
}

/// The family `O^{pq}_A`, stored at flat index `p * d + q`.
#[derive(Debug, Clone)]
pub struct TwistOperatorSet {
    pub dim: usize,
    pub dim_a: usize,
    pub operators: Vec<CMatrix>,
}

impl TwistOperatorSet {
    pub fn get(&self, p: usize, q: usize) -> &CMatrix {
        &self.operators[p * self.dim + q]
    }

    /// `Σ_{pq} tr O^{pq} · tr Ō^{pq}`, the trace of `ρ_{AĀ}`.
    pub fn reconstructed_trace(&self) -> f64 {
        self.operators.iter().map(|o| linalg::trace(o).norm_sqr()).sum()
    }

    /// `Σ_{pq} tr(O^{pq} O^{pq†})`.
    pub fn total_weight(&self) -> f64 {
        self.operators.iter().map(|o| linalg::frobenius(o).powi(2)).sum()
    }
}

pub fn twist_operators(psi: &PurifiedState, split: &SubsystemSplit) -> Result<TwistOperatorSet> {
    let beta = split.beta(psi)?;
    let (d, da, db) = (psi.dim, split.dim_a, split.dim_b);
    // blocks[p][(k, l)] = β^p_{kl}
    let blocks: Vec<CMatrix> = (0..d).map(|p| CMatrix::from_fn(da, db, |k, l| beta[(k * db + l, p)])).collect();
    let quarter: Vec<f64> = psi.schmidt_values.iter().map(|l| l.powf(0.25)).collect();
    let mut operators = Vec::with_capacity(d * d);
    for p in 0..d {
        for q in 0..d {
            let pref = C64::new(quarter[p] * quarter[q], 0.0);
            operators.push(&blocks[p] * blocks[q].adjoint() * pref);
        }
    }
    Ok(TwistOperatorSet { dim: d, dim_a: da, operators })
}

/// `ρ_{A_i Ā_j}` on `H_{A_i} ⊗ H_{Ā_j}` with its spectrum.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReflectedDensity {
    pub labels: (String, String),
    pub dim_a_i: usize,
    pub dim_a_j: usize,
    #[serde(with = "crate::json::complex_matrix")]
    pub matrix: CMatrix,
    /// Ascending eigenvalues.
    pub eigenvalues: Vec<f64>,
}

impl ReflectedDensity {
    /// Validate Hermiticity, trace and positivity, and cache the spectrum.
    pub fn new(labels: (String, String), dim_a_i: usize, dim_a_j: usize, matrix: CMatrix) -> Result<Self> {
        let n = dim_a_i * dim_a_j;
        if matrix.shape() != (n, n) {
            return Err(Error::DimensionMismatch(format!("reflected density must be {n}x{n}")));
        }
        let dev = linalg::hermitian_deviation(&matrix);
        if dev > modular::HERMITICITY_TOL {
            return Err(Error::NotHermitian(dev));
        }
        let tr = linalg::trace(&matrix);
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidTrace(tr.re));
        }
        let eigenvalues = linalg::hermitian_eigenvalues(&matrix);
        if eigenvalues[0] < -NEGATIVITY_TOL {
            return Err(Error::NotPositive(eigenvalues[0]));
        }
        Ok(Self { labels, dim_a_i, dim_a_j, matrix, eigenvalues })
    }

    pub fn renyi(&self, n: u32) -> Result<f64> {
        renyi_entropy(&self.eigenvalues, n)
    }

    pub fn von_neumann(&self) -> Result<f64> {
        von_neumann(&self.eigenvalues)
    }

    /// `log tr ρⁿ` for real `n > 0`.
    pub fn log_trace_power(&self, n: f64) -> Result<f64> {
        log_trace_power(&self.eigenvalues, n)
    }
}

fn labels(split_i: &SubsystemSplit, split_j: &SubsystemSplit) -> (String, String) {
    (split_i.label.clone(), split_j.label.clone())
}

/// `ρ_{A_i Ā_j} = Σ_{pq} O^{pq}_{A_i} ⊗ Ō^{pq}_{A_j}`.
pub fn reflected_density(
    psi: &PurifiedState,
    split_i: &SubsystemSplit,
    split_j: &SubsystemSplit,
) -> Result<ReflectedDensity> {
    let ti = twist_operators(psi, split_i)?;
    let tj = if split_i == split_j { ti.clone() } else { twist_operators(psi, split_j)? };
    reflected_from_twists(&ti, &tj, labels(split_i, split_j))
}

/// Assemble `Σ_{pq} O^{pq}_i ⊗ (O^{pq}_j)*` from precomputed twist families.
pub fn reflected_from_twists(
    ti: &TwistOperatorSet,
    tj: &TwistOperatorSet,
    labels: (String, String),
) -> Result<ReflectedDensity> {
    if ti.dim != tj.dim {
        return Err(Error::DimensionMismatch("twist families over different states".into()));
    }
    let (ai, aj) = (ti.dim_a, tj.dim_a);
    let terms = ti.operators.len();
    // Rows (k, m) of O_i, rows (k', m') of conj(O_j); columns run over (p, q).
    let x = CMatrix::from_fn(ai * ai, terms, |r, t| ti.operators[t][(r / ai, r % ai)]);
    let z = CMatrix::from_fn(aj * aj, terms, |r, t| tj.operators[t][(r / aj, r % aj)].conj());
    let f = x * z.transpose();
    let n = ai * aj;
    let mut rho = CMatrix::zeros(n, n);
    for k in 0..ai {
        for m in 0..ai {
            for kp in 0..aj {
                for mp in 0..aj {
                    rho[(k * aj + kp, m * aj + mp)] = f[(k * ai + m, kp * aj + mp)];
                }
            }
        }
    }
    ReflectedDensity::new(labels, ai, aj, rho)
}

/// Independent construction of `ρ_{A_i Ā_j}`: write `|0⟩` in the mixed basis
/// `|k_i l_i⟩ ⊗ |k_j l_j⟩‾`, form `|0⟩⟨0|` and trace out `B_i` and `B̄_j`
/// by explicit index summation.
pub fn brute_force_reflected(
    psi: &PurifiedState,
    split_i: &SubsystemSplit,
    split_j: &SubsystemSplit,
) -> Result<ReflectedDensity> {
    let d = psi.dim;
    split_i.check_against(psi)?;
    let beta_j = split_j.beta(psi)?;
    // |k l⟩‾ = Σ_p β^p_{kl} |p̃⟩ in the computational basis of H₂.
    let h2_frame = &psi.h2_basis * beta_j.transpose();
    let mixed = linalg::kron(&split_i.frame, &h2_frame);
    let coeffs = mixed.adjoint() * psi.vector();

    let outer = &coeffs * coeffs.adjoint();
    let (ai, bi, aj, bj) = (split_i.dim_a, split_i.dim_b, split_j.dim_a, split_j.dim_b);
    let idx = |k: usize, l: usize, kb: usize, lb: usize| (k * bi + l) * d + (kb * bj + lb);
    let n = ai * aj;
    let mut rho = CMatrix::zeros(n, n);
    for k in 0..ai {
        for kb in 0..aj {
            for m in 0..ai {
                for mb in 0..aj {
                    let mut acc = ZERO;
                    for l in 0..bi {
                        for lb in 0..bj {
                            acc += outer[(idx(k, l, kb, lb), idx(m, l, mb, lb))];
                        }
                    }
                    rho[(k * aj + kb, m * aj + mb)] = acc;
                }
            }
        }
    }
    ReflectedDensity::new(labels(split_i, split_j), ai, aj, rho)
}

/// Third construction through the modular conjugation itself:
/// `ρ[(k,k'),(m,m')] = ⟨0| E^{A_i}_{mk} ⊗ J E^{A_j}_{m'k'} J |0⟩`.
///
/// Depends on the chosen basis of `H₂` only through `J`, so it exercises
/// the purification independence of the entropies.
pub fn reflected_via_conjugation(
    psi: &PurifiedState,
    md: &ModularData,
    split_i: &SubsystemSplit,
    split_j: &SubsystemSplit,
) -> Result<ReflectedDensity> {
    split_i.check_against(psi)?;
    split_j.check_against(psi)?;
    let d = psi.dim;
    let v = psi.vector();
    // ⟨0|A ⊗ B|0⟩ = tr(Ψ† A Ψ Bᵀ) with Ψ the d x d coefficient matrix of |0⟩.
    let psi_mat = CMatrix::from_fn(d, d, |r, c| v[r * d + c]);
    let (ai, aj) = (split_i.dim_a, split_j.dim_a);
    let unit = |n: usize, a: usize, b: usize| {
        let mut e = CMatrix::zeros(n, n);
        e[(a, b)] = C64::new(1.0, 0.0);
        e
    };
    let mut left = Vec::with_capacity(ai * ai);
    for m in 0..ai {
        for k in 0..ai {
            left.push(psi_mat.adjoint() * split_i.embed(&unit(ai, m, k)) * &psi_mat);
        }
    }
    let mut right = Vec::with_capacity(aj * aj);
    for mp in 0..aj {
        for kp in 0..aj {
            let bar = modular::reflect_operator(md, &split_j.embed(&unit(aj, mp, kp)))?;
            right.push(bar.transpose());
        }
    }
    let n = ai * aj;
    let mut rho = CMatrix::zeros(n, n);
    for k in 0..ai {
        for m in 0..ai {
            let l = &left[m * ai + k];
            for kp in 0..aj {
                for mp in 0..aj {
                    let r = &right[mp * aj + kp];
                    let val: C64 = l.iter().zip(r.transpose().iter()).map(|(a, b)| a * b).sum();
                    rho[(k * aj + kp, m * aj + mp)] = val;
                }
            }
        }
    }
    ReflectedDensity::new(labels(split_i, split_j), ai, aj, linalg::hermitian_part(&rho))
}

/// `log tr ρⁿ` from eigenvalues via log-sum-exp. Eigenvalues in
/// `[-1e-12, 0]` are treated as zero.
pub fn log_trace_power(eigenvalues: &[f64], n: f64) -> Result<f64> {
    check_nonnegative(eigenvalues)?;
    let logs: Vec<f64> = eigenvalues.iter().filter(|&&x| x > 0.0).map(|x| n * x.ln()).collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::NumericalBreakdown(0.0));
    }
    let sum: f64 = logs.iter().map(|l| (l - max).exp()).sum();
    Ok(max + sum.ln())
}

/// `S_n = -log(tr ρⁿ)/(n-1)` for `n ≥ 2`; `n = 1` gives the von Neumann entropy.
pub fn renyi_entropy(eigenvalues: &[f64], n: u32) -> Result<f64> {
    match n {
        0 => Err(Error::InvalidIndex(0)),
        1 => von_neumann(eigenvalues),
        _ => {
            let ltp = log_trace_power(eigenvalues, n as f64)?;
            if ltp > 1e-12 {
                return Err(Error::NumericalBreakdown(ltp.exp()));
            }
            Ok((-ltp / (n - 1) as f64).max(0.0))
        }
    }
}

/// `S = -Σ λ log λ` in nats, with `0 log 0 = 0`.
pub fn von_neumann(eigenvalues: &[f64]) -> Result<f64> {
    check_nonnegative(eigenvalues)?;
    Ok(-eigenvalues.iter().filter(|&&x| x > 0.0).map(|x| x * x.ln()).sum::<f64>())
}

pub fn mutual_information(s_a: f64, s_b: f64, s_ab: f64) -> f64 {
    s_a + s_b - s_ab
}

fn check_nonnegative(eigenvalues: &[f64]) -> Result<()> {
    match eigenvalues.iter().copied().reduce(f64::min) {
        Some(min) if min < -NEGATIVITY_TOL => Err(Error::NotPositive(min)),
        None => Err(Error::DimensionMismatch("empty spectrum".into())),
        _ => Ok(()),
    }
}

impl DensityMatrix {
    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::hermitian_eigenvalues(self.entries())
    }

    pub fn renyi(&self, n: u32) -> Result<f64> {
        renyi_entropy(&self.eigenvalues(), n)
    }

    pub fn von_neumann(&self) -> Result<f64> {
        von_neumann(&self.eigenvalues())
    }
}

/// Entropy `S_n(A)` of the reduced state `tr_B ρ` of a single subsystem.
pub fn subsystem_entropy(rho: &DensityMatrix, split: &SubsystemSplit, n: u32) -> Result<f64> {
    if split.dim() != rho.dim() {
        return Err(Error::DimensionMismatch("split does not match the state".into()));
    }
    let reduced = split.reduce(rho.entries());
    renyi_entropy(&linalg::hermitian_eigenvalues(&reduced), n)
}

/// All `ρ_{A_i Ā_j}` for a list of splits, row `i`, column `j`.
pub fn reflected_table(psi: &PurifiedState, splits: &[SubsystemSplit]) -> Result<Vec<Vec<ReflectedDensity>>> {
    let twists = splits.iter().map(|s| twist_operators(psi, s)).collect::<Result<Vec<_>>>()?;
    splits
        .iter()
        .enumerate()
        .map(|(i, si)| {
            splits
                .iter()
                .enumerate()
                .map(|(j, sj)| reflected_from_twists(&twists[i], &twists[j], labels(si, sj)))
                .collect()
        })
        .collect()
}
