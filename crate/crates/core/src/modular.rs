//! Finite-dimensional modular theory for a purified density matrix.
//!
//! A full-rank state `ρ` on `H₁` is purified into `|0⟩ = Σ_p √λ_p |p p̃⟩`
//! on `H₁ ⊗ H₂`, where `|p⟩` are the eigenvectors of `ρ` and `|p̃⟩` an
//! orthonormal basis of the copy `H₂`. For the algebra of operators on `H₁`
//! the modular operator is diagonal in the product basis,
//! `Δ = Σ_{pq} (λ_p/λ_q) |p q̃⟩⟨p q̃|`, and the modular conjugation swaps
//! the two labels, `J = Σ_{pq} |p q̃⟩⟨q p̃| ∗`, with `∗` complex conjugation
//! of components in that basis.
//!
//! Vectors of `H₁ ⊗ H₂` use the flat index `i₁ * d + i₂` over the
//! computational bases of both factors.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::json::ComplexMatrixJson;
use crate::linalg::{self, CMatrix, CVector, C64, ONE, ZERO};
use crate::random;
use crate::{Error, Result};

pub const HERMITICITY_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
/// Eigenvalues of `ρ` below this value make the state non-invertible.
pub const RANK_FLOOR: f64 = 1e-12;

/// Full-rank Hermitian unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: CMatrix,
}

impl DensityMatrix {
    pub fn new(entries: CMatrix) -> Result<Self> {
        let (rows, cols) = entries.shape();
        if rows != cols || rows == 0 {
            return Err(Error::NotSquare { rows, cols });
        }
        let dev = linalg::hermitian_deviation(&entries);
        if dev > HERMITICITY_TOL {
            return Err(Error::NotHermitian(dev));
        }
        let tr = linalg::trace(&entries);
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidTrace(tr.re));
        }
        let min = linalg::hermitian_eigenvalues(&entries)[0];
        if min < RANK_FLOOR {
            return Err(Error::NotInvertible(min));
        }
        Ok(Self { entries })
    }

    pub fn diagonal(probabilities: &[f64]) -> Result<Self> {
        Self::new(linalg::diagonal(probabilities))
    }

    /// `U diag(spectrum) U†`.
    pub fn from_spectrum(spectrum: &[f64], unitary: &CMatrix) -> Result<Self> {
        if unitary.nrows() != spectrum.len() || unitary.ncols() != spectrum.len() {
            return Err(Error::DimensionMismatch(format!(
                "spectrum of length {} with {}x{} unitary",
                spectrum.len(),
                unitary.nrows(),
                unitary.ncols()
            )));
        }
        let m = unitary * linalg::diagonal(spectrum) * unitary.adjoint();
        Self::new(linalg::hermitian_part(&m))
    }

    /// Flat-Dirichlet spectrum (re-drawn below `spectrum_floor`) and Haar
    /// eigenvectors.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, dim: usize, spectrum_floor: f64) -> Result<Self> {
        let spectrum = random::full_rank_spectrum(rng, dim, spectrum_floor.max(RANK_FLOOR));
        let u = random::haar_unitary(rng, dim);
        Self::from_spectrum(&spectrum, &u)
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }
}

/// Schmidt data of the purification `|0⟩ = Σ_p √λ_p |p p̃⟩`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PurifiedState {
    pub dim: usize,
    /// `λ_p`, descending.
    pub schmidt_values: Vec<f64>,
    /// Columns are the eigenvectors `|p⟩` of `ρ` in the computational basis of `H₁`.
    #[serde(with = "crate::json::complex_matrix")]
    pub eigenbasis: CMatrix,
    /// Columns are `|p̃⟩` in the computational basis of `H₂`. The canonical
    /// copy is the identity.
    #[serde(with = "crate::json::complex_matrix")]
    pub h2_basis: CMatrix,
}

/// Eigen-decompose `ρ` and build its canonical purification.
pub fn purify(rho: &DensityMatrix) -> Result<PurifiedState> {
    let (values, vectors) = linalg::hermitian_eigen(rho.entries());
    let min = values.last().copied().unwrap_or(0.0);
    if min < RANK_FLOOR {
        return Err(Error::NotInvertible(min));
    }
    let dim = rho.dim();
    Ok(PurifiedState { dim, schmidt_values: values, eigenbasis: vectors, h2_basis: linalg::identity(dim) })
}

impl PurifiedState {
    /// Same state of `H₁`, purified with a different basis `|p̃⟩` of `H₂`.
    pub fn with_h2_basis(&self, h2_basis: CMatrix) -> Result<Self> {
        if h2_basis.shape() != (self.dim, self.dim) {
            return Err(Error::DimensionMismatch(format!("H2 basis must be {0}x{0}", self.dim)));
        }
        let defect = linalg::unitarity_defect(&h2_basis);
        if defect > 1e-10 {
            return Err(Error::NotUnitary(defect));
        }
        Ok(Self { h2_basis, ..self.clone() })
    }

    /// The vector `|0⟩` in the computational basis of `H₁ ⊗ H₂`.
    pub fn vector(&self) -> CVector {
        let d = self.dim;
        let mut out = CVector::zeros(d * d);
        for (p, &lam) in self.schmidt_values.iter().enumerate() {
            let amp = C64::new(lam.sqrt(), 0.0);
            for i in 0..d {
                let a = self.eigenbasis[(i, p)] * amp;
                if a == ZERO {
                    continue;
                }
                for j in 0..d {
                    out[i * d + j] += a * self.h2_basis[(j, p)];
                }
            }
        }
        out
    }

    /// `tr_{H₂} |0⟩⟨0|`, which reproduces the source state.
    pub fn reduced_first(&self) -> CMatrix {
        let d = self.dim;
        let v = self.vector();
        CMatrix::from_fn(d, d, |i, k| (0..d).map(|j| v[i * d + j] * v[k * d + j].conj()).sum())
    }

    /// The product basis `|p q̃⟩` as columns of a `d² x d²` unitary.
    pub fn product_frame(&self) -> CMatrix {
        linalg::kron(&self.eigenbasis, &self.h2_basis)
    }
}

/// Modular operator and conjugation of `|0⟩` for the algebra on `H₁`.
#[derive(Debug, Clone)]
pub struct ModularData {
    pub dim: usize,
    /// Eigenvalue `λ_p/λ_q` of `Δ` on `|p q̃⟩`, at flat index `p * d + q`.
    pub delta_spectrum: Vec<f64>,
    /// Columns `|p q̃⟩` in the computational basis.
    pub frame: CMatrix,
    /// `J x = j_matrix * conj(x)` in the computational basis.
    pub j_matrix: CMatrix,
    eigenbasis: CMatrix,
    h2_basis: CMatrix,
}

pub fn modular_operators(psi: &PurifiedState) -> ModularData {
    let d = psi.dim;
    let lam = &psi.schmidt_values;
    let delta_spectrum = (0..d * d).map(|k| lam[k / d] / lam[k % d]).collect();
    let frame = psi.product_frame();

    // Label swap |p q̃⟩ -> |q p̃⟩ in the product basis.
    let mut swap = CMatrix::zeros(d * d, d * d);
    for p in 0..d {
        for q in 0..d {
            swap[(q * d + p, p * d + q)] = ONE;
        }
    }
    let j_matrix = &frame * swap * frame.transpose();
    ModularData {
        dim: d,
        delta_spectrum,
        frame,
        j_matrix,
        eigenbasis: psi.eigenbasis.clone(),
        h2_basis: psi.h2_basis.clone(),
    }
}

impl ModularData {
    /// `Δ^t` as a dense matrix in the computational basis.
    pub fn delta_power(&self, t: f64) -> CMatrix {
        let diag: Vec<f64> = self.delta_spectrum.iter().map(|r| r.powf(t)).collect();
        &self.frame * linalg::diagonal(&diag) * self.frame.adjoint()
    }

    pub fn delta(&self) -> CMatrix {
        self.delta_power(1.0)
    }

    pub fn apply_delta_power(&self, x: &CVector, t: f64) -> CVector {
        let mut coords = self.frame.adjoint() * x;
        for (c, r) in coords.iter_mut().zip(&self.delta_spectrum) {
            *c *= r.powf(t);
        }
        &self.frame * coords
    }

    pub fn apply_j(&self, x: &CVector) -> CVector {
        &self.j_matrix * linalg::conj_vec(x)
    }

    /// The linear operator `J A J` for a linear `A` on `H₁ ⊗ H₂`.
    pub fn conjugate_by_j(&self, a: &CMatrix) -> CMatrix {
        &self.j_matrix * linalg::conj(a) * linalg::conj(&self.j_matrix)
    }

    /// `J J` as a linear operator; the identity for a genuine conjugation.
    pub fn j_squared(&self) -> CMatrix {
        &self.j_matrix * linalg::conj(&self.j_matrix)
    }

    /// Tomita map `S = J Δ^{1/2}` applied to a vector.
    pub fn apply_tomita(&self, x: &CVector) -> CVector {
        self.apply_j(&self.apply_delta_power(x, 0.5))
    }
}

/// Reflect an operator on `H₁` into the commutant: returns `Ō` acting on
/// `H₂` such that `J (O ⊗ 1) J = 1 ⊗ Ō`.
pub fn reflect_operator(md: &ModularData, op: &CMatrix) -> Result<CMatrix> {
    let d = md.dim;
    if op.shape() != (d, d) {
        return Err(Error::DimensionMismatch(format!("operator is {}x{}, expected {d}x{d}", op.nrows(), op.ncols())));
    }
    let in_eigenbasis = md.eigenbasis.adjoint() * op * &md.eigenbasis;
    Ok(&md.h2_basis * linalg::conj(&in_eigenbasis) * md.h2_basis.adjoint())
}

/// `O ⊗ 1` on `H₁ ⊗ H₂`.
pub fn on_first(op: &CMatrix) -> CMatrix {
    linalg::kron(op, &linalg::identity(op.nrows()))
}

/// `1 ⊗ O` on `H₁ ⊗ H₂`.
pub fn on_second(op: &CMatrix) -> CMatrix {
    linalg::kron(&linalg::identity(op.nrows()), op)
}

/// The reflection-positive scalar `⟨0|O Ō|0⟩` evaluated two ways.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectionPair {
    /// `⟨0|(O ⊗ 1)(1 ⊗ Ō)|0⟩` with `Ō` from the conjugation.
    pub via_conjugation: C64,
    /// `⟨0|O Δ^{1/2} O†|0⟩`.
    pub via_modular: C64,
}

pub fn reflection_positivity(psi: &PurifiedState, md: &ModularData, op: &CMatrix) -> Result<ReflectionPair> {
    let reflected = reflect_operator(md, op)?;
    let v = psi.vector();
    // ⟨o_dag_v| X⟩ = ⟨0|(O ⊗ 1) X⟩
    let o_dag_v = on_first(&op.adjoint()) * &v;
    let via_conjugation = o_dag_v.dotc(&(on_second(&reflected) * &v));
    let via_modular = o_dag_v.dotc(&md.apply_delta_power(&o_dag_v, 0.5));
    Ok(ReflectionPair { via_conjugation, via_modular })
}

/// Result of checking `J Δ^{1/2} O|0⟩ = O†|0⟩` over a family of operators.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TomitaReport {
    pub trials: usize,
    pub tolerance: f64,
    pub max_residual: f64,
    pub passed: bool,
    /// Operator with the largest residual, when it exceeded the tolerance.
    pub offending_operator: Option<ComplexMatrixJson>,
}

pub fn check_tomita_relation(
    psi: &PurifiedState,
    md: &ModularData,
    operators: &[CMatrix],
    tolerance: f64,
) -> Result<TomitaReport> {
    let v = psi.vector();
    let mut max_residual = 0.0f64;
    let mut worst: Option<&CMatrix> = None;
    for op in operators {
        if op.shape() != (psi.dim, psi.dim) {
            return Err(Error::DimensionMismatch("Tomita check operator".into()));
        }
        let lhs = md.apply_tomita(&(on_first(op) * &v));
        let rhs = on_first(&op.adjoint()) * &v;
        let residual = (lhs - rhs).norm();
        if residual > max_residual || worst.is_none() {
            max_residual = max_residual.max(residual);
            worst = Some(op);
        }
    }
    let passed = max_residual <= tolerance;
    Ok(TomitaReport {
        trials: operators.len(),
        tolerance,
        max_residual,
        passed,
        offending_operator: if passed { None } else { worst.map(ComplexMatrixJson::from) },
    })
}

/// Ginibre operators on `H₁`, normalized to unit Frobenius norm.
pub fn random_operators<R: Rng + ?Sized>(rng: &mut R, dim: usize, count: usize) -> Vec<CMatrix> {
    (0..count)
        .map(|_| {
            let g = random::ginibre(rng, dim, dim);
            let n = linalg::frobenius(&g);
            g / C64::new(n, 0.0)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{haar_unitary, trial_rng};

    fn psi_of(p: &[f64]) -> PurifiedState {
        purify(&DensityMatrix::diagonal(p).unwrap()).unwrap()
    }

    #[test]
    fn maximally_mixed_purification() {
        let psi = psi_of(&[0.5, 0.5]);
        assert_eq!(psi.schmidt_values, vec![0.5, 0.5]);
        assert!(linalg::frobenius(&(&psi.eigenbasis - linalg::identity(2))) < 1e-15);
    }

    #[test]
    fn two_thirds_one_third_schmidt_values() {
        let psi = psi_of(&[1.0 / 3.0, 2.0 / 3.0]);
        assert!((psi.schmidt_values[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((psi.schmidt_values[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn singular_state_is_rejected() {
        let err = DensityMatrix::diagonal(&[1.0, 0.0]).unwrap_err();
        assert!(matches!(err, Error::NotInvertible(_)));
    }

    #[test]
    fn non_hermitian_and_bad_trace_are_rejected() {
        let mut m = linalg::diagonal(&[0.5, 0.5]);
        m[(0, 1)] = C64::new(0.1, 0.0);
        assert!(matches!(DensityMatrix::new(m), Err(Error::NotHermitian(_))));
        assert!(matches!(DensityMatrix::diagonal(&[0.5, 0.6]), Err(Error::InvalidTrace(_))));
    }

    #[test]
    fn delta_spectrum_of_two_state() {
        let md = modular_operators(&psi_of(&[2.0 / 3.0, 1.0 / 3.0]));
        let mut spec = md.delta_spectrum.clone();
        spec.sort_by(f64::total_cmp);
        let expected = [0.5, 1.0, 1.0, 2.0];
        for (a, b) in spec.iter().zip(expected) {
            assert!((a - b).abs() < 1e-14);
        }
        let dense = linalg::hermitian_eigenvalues(&md.delta());
        for (a, b) in dense.iter().zip(expected) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn maximally_mixed_delta_is_identity() {
        let md = modular_operators(&psi_of(&[0.25; 4]));
        assert!(linalg::frobenius(&(md.delta() - linalg::identity(16))) < 1e-13);
    }

    #[test]
    fn vacuum_is_fixed_by_delta_and_j() {
        let mut rng = trial_rng(5, 0);
        for d in 2..6 {
            let rho = DensityMatrix::random(&mut rng, d, 1e-6).unwrap();
            let psi = purify(&rho).unwrap();
            let md = modular_operators(&psi);
            let v = psi.vector();
            assert!((v.norm() - 1.0).abs() < 1e-13);
            assert!((md.apply_j(&v) - &v).norm() < 1e-12);
            assert!((md.apply_delta_power(&v, 1.0) - &v).norm() < 1e-12);
            assert!(linalg::frobenius(&(md.j_squared() - linalg::identity(d * d))) < 1e-12);
            let jdj = md.conjugate_by_j(&md.delta());
            let inv = md.delta_power(-1.0);
            assert!(linalg::frobenius(&(jdj - &inv)) < 1e-9 * linalg::frobenius(&inv));
            assert!(linalg::frobenius(&(psi.reduced_first() - rho.entries())) < 1e-12);
        }
    }

    #[test]
    fn identity_operator_has_zero_tomita_residual() {
        let psi = psi_of(&[0.7, 0.2, 0.1]);
        let md = modular_operators(&psi);
        let rep = check_tomita_relation(&psi, &md, &[linalg::identity(3)], 1e-12).unwrap();
        assert!(rep.max_residual < 1e-14);
    }

    #[test]
    fn projector_on_maximally_mixed_state() {
        let psi = psi_of(&[0.5, 0.5]);
        let md = modular_operators(&psi);
        let h = 0.5 * std::f64::consts::SQRT_2;
        let v = CVector::from_vec(vec![C64::new(h, 0.0), C64::new(0.0, h)]);
        let proj = &v * v.adjoint();
        let rep = check_tomita_relation(&psi, &md, &[proj], 1e-12).unwrap();
        assert!(rep.passed, "{}", rep.max_residual);
    }

    #[test]
    fn failing_report_carries_operator() {
        let psi = psi_of(&[0.6, 0.4]);
        let mut md = modular_operators(&psi);
        // Corrupt J so the relation fails.
        md.j_matrix = linalg::identity(4);
        let ops = random_operators(&mut trial_rng(1, 1), 2, 3);
        let rep = check_tomita_relation(&psi, &md, &ops, 1e-10).unwrap();
        assert!(!rep.passed);
        assert!(rep.offending_operator.is_some());
    }

    #[test]
    fn reflected_identity_is_identity() {
        let md = modular_operators(&psi_of(&[0.6, 0.3, 0.1]));
        let bar = reflect_operator(&md, &linalg::identity(3)).unwrap();
        assert!(linalg::frobenius(&(bar - linalg::identity(3))) < 1e-14);
    }

    #[test]
    fn reflection_matches_full_space_conjugation() {
        let mut rng = trial_rng(9, 2);
        let rho = DensityMatrix::random(&mut rng, 3, 1e-6).unwrap();
        let w = haar_unitary(&mut rng, 3);
        let psi = purify(&rho).unwrap().with_h2_basis(w).unwrap();
        let md = modular_operators(&psi);
        let op = random_operators(&mut rng, 3, 1).pop().unwrap();
        let full = md.conjugate_by_j(&on_first(&op));
        let bar = on_second(&reflect_operator(&md, &op).unwrap());
        assert!(linalg::frobenius(&(full - bar)) < 1e-12);
    }

    #[test]
    fn reflection_positivity_two_routes() {
        let mut rng = trial_rng(11, 0);
        let rho = DensityMatrix::random(&mut rng, 3, 1e-6).unwrap();
        let psi = purify(&rho).unwrap();
        let md = modular_operators(&psi);
        for op in random_operators(&mut rng, 3, 20) {
            let pair = reflection_positivity(&psi, &md, &op).unwrap();
            assert!(pair.via_conjugation.re >= -1e-12);
            assert!(pair.via_conjugation.im.abs() <= 1e-12);
            assert!((pair.via_conjugation - pair.via_modular).norm() < 1e-10);
        }
    }

    #[test]
    fn j_is_antiunitary() {
        let mut rng = trial_rng(3, 3);
        let psi = purify(&DensityMatrix::random(&mut rng, 3, 1e-6).unwrap()).unwrap();
        let md = modular_operators(&psi);
        let x = random::ginibre(&mut rng, 9, 1).column(0).clone_owned();
        let y = random::ginibre(&mut rng, 9, 1).column(0).clone_owned();
        let lhs = md.apply_j(&x).dotc(&md.apply_j(&y));
        assert!((lhs - x.dotc(&y).conj()).norm() < 1e-12);
    }
}
