//! Exact entropies of the free massless fermion on a line and the
//! correlator identities they satisfy.
//!
//! For `p` disjoint intervals `(a_i, b_i)` with cutoff `ε`
//!
//! ```text
//! S = (1/6) (Σ_{ij} log|a_i − b_j| − Σ_{i<j} log|a_i − a_j| − Σ_{i<j} log|b_i − b_j| − p log ε)
//! ```
//!
//! and `c^p e^{−6S}` (`c = 1/(2πε)`) is both a Cauchy product and a signed
//! permutation sum. Everything is evaluated in log space.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::RMatrix;
use crate::positivity::gram::{check_psd_matrix, GramRecord, PsdVerdict};
use crate::{Error, Result};

/// Smallest allowed distance between any two endpoints.
pub const MIN_GAP: f64 = 1e-9;
/// Largest `p` accepted by the permutation sum.
pub const MAX_WICK_INTERVALS: usize = 8;

/// Disjoint intervals `a_1 < b_1 < a_2 < … < b_p` with a UV cutoff.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalSet {
    endpoints: Vec<(f64, f64)>,
    cutoff: f64,
}

impl IntervalSet {
    pub fn new(endpoints: Vec<(f64, f64)>, cutoff: f64) -> Result<Self> {
        if endpoints.is_empty() {
            return Err(Error::InvalidIntervals("no intervals".into()));
        }
        if !(cutoff > 0.0 && cutoff.is_finite()) {
            return Err(Error::InvalidIntervals(format!("cutoff must be positive, got {cutoff}")));
        }
        let flat: Vec<f64> = endpoints.iter().flat_map(|&(a, b)| [a, b]).collect();
        if flat.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidIntervals("non-finite endpoint".into()));
        }
        for w in flat.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::InvalidIntervals(format!(
                    "endpoints must satisfy a_i < b_i < a_(i+1): {} ≥ {}",
                    w[0], w[1]
                )));
            }
            if w[1] - w[0] < MIN_GAP {
                return Err(Error::CoincidentPoints { a: w[0], b: w[1], min_gap: MIN_GAP });
            }
        }
        Ok(Self { endpoints, cutoff })
    }

    /// One interval `(a, b)`.
    pub fn single(a: f64, b: f64, cutoff: f64) -> Result<Self> {
        Self::new(vec![(a, b)], cutoff)
    }

    pub fn endpoints(&self) -> &[(f64, f64)] {
        &self.endpoints
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn len(&self) -> usize {
        self.endpoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.endpoints.is_empty()
    }

    /// `c = 1/(2πε)`.
    pub fn c(&self) -> f64 {
        1.0 / (2.0 * PI * self.cutoff)
    }

    pub fn left_ends(&self) -> impl Iterator<Item = f64> + '_ {
        self.endpoints.iter().map(|e| e.0)
    }

    pub fn right_ends(&self) -> impl Iterator<Item = f64> + '_ {
        self.endpoints.iter().map(|e| e.1)
    }

    /// Image under `x → −x`.
    pub fn reflected(&self) -> Self {
        let endpoints = self.endpoints.iter().rev().map(|&(a, b)| (-b, -a)).collect();
        Self { endpoints, cutoff: self.cutoff }
    }

    /// Union of two sets whose intervals do not overlap.
    pub fn union(&self, other: &Self) -> Result<Self> {
        if self.cutoff != other.cutoff {
            return Err(Error::InvalidIntervals("union of sets with different cutoffs".into()));
        }
        let mut all: Vec<(f64, f64)> = self.endpoints.iter().chain(&other.endpoints).copied().collect();
        all.sort_by(|x, y| x.0.total_cmp(&y.0));
        Self::new(all, self.cutoff)
    }

    /// `p` intervals with endpoints drawn uniformly in `(lo, hi)`, redrawn
    /// until all gaps are at least `min_gap`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, p: usize, lo: f64, hi: f64, min_gap: f64, cutoff: f64) -> Result<Self> {
        if p == 0 || !(hi > lo) || (2 * p + 1) as f64 * min_gap >= hi - lo {
            return Err(Error::InvalidIntervals(format!("cannot place {p} intervals in ({lo}, {hi})")));
        }
        loop {
            let mut pts: Vec<f64> = (0..2 * p).map(|_| rng.random_range(lo..hi)).collect();
            pts.sort_by(f64::total_cmp);
            let ok = pts.windows(2).all(|w| w[1] - w[0] >= min_gap) && pts[0] - lo >= min_gap;
            if ok {
                let endpoints = pts.chunks(2).map(|c| (c[0], c[1])).collect();
                return Self::new(endpoints, cutoff);
            }
        }
    }
}

/// `Σ_{ij} log|a_i − b_j| − Σ_{i<j} log|a_i − a_j| − Σ_{i<j} log|b_i − b_j|`.
fn log_cross_ratio_sum(set: &IntervalSet) -> f64 {
    let a: Vec<f64> = set.left_ends().collect();
    let b: Vec<f64> = set.right_ends().collect();
    let mut total = 0.0;
    for &ai in &a {
        for &bj in &b {
            total += (ai - bj).abs().ln();
        }
    }
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            total -= (a[i] - a[j]).abs().ln() + (b[i] - b[j]).abs().ln();
        }
    }
    total
}

/// Entanglement entropy of the union of intervals.
pub fn entropy(set: &IntervalSet) -> f64 {
    (log_cross_ratio_sum(set) - set.len() as f64 * set.cutoff.ln()) / 6.0
}

/// `(1 + n)/(2n)`; `n = ∞` gives `1/2`.
pub fn renyi_factor(n: f64) -> Result<f64> {
    if n.is_infinite() && n > 0.0 {
        return Ok(0.5);
    }
    if !(n > 0.0) {
        return Err(Error::Domain(format!("Renyi index must be positive, got {n}")));
    }
    Ok((1.0 + n) / (2.0 * n))
}

pub fn renyi(set: &IntervalSet, n: f64) -> Result<f64> {
    Ok(renyi_factor(n)? * entropy(set))
}

/// `log` of the Cauchy product `(2π)^{−p} Π_{i<j}|a_i−a_j||b_i−b_j| / Π_{ij}|a_i−b_j|`.
pub fn log_correlator_cauchy(set: &IntervalSet) -> f64 {
    -(set.len() as f64) * (2.0 * PI).ln() - log_cross_ratio_sum(set)
}

pub fn correlator_cauchy(set: &IntervalSet) -> f64 {
    log_correlator_cauchy(set).exp()
}

/// Signed permutation sum `((−1)^p/(2π)^p) Σ_P σ(P) Π_i 1/(a_i − b_{P(i)})`.
pub fn correlator_wick(set: &IntervalSet) -> Result<f64> {
    let p = set.len();
    if p > MAX_WICK_INTERVALS {
        return Err(Error::Domain(format!("permutation sum limited to p ≤ {MAX_WICK_INTERVALS}, got {p}")));
    }
    let a: Vec<f64> = set.left_ends().collect();
    let b: Vec<f64> = set.right_ends().collect();
    let mut total = 0.0;
    for_each_permutation(p, |perm, sign| {
        let term: f64 = perm.iter().enumerate().map(|(i, &j)| 1.0 / (a[i] - b[j])).product();
        total += sign * term;
    });
    let prefactor = if p.is_multiple_of(2) { 1.0 } else { -1.0 } / (2.0 * PI).powi(p as i32);
    Ok(prefactor * total)
}

/// Heap's algorithm; the signature flips with every swap.
fn for_each_permutation(n: usize, mut visit: impl FnMut(&[usize], f64)) {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut c = vec![0usize; n];
    let mut sign = 1.0;
    visit(&perm, sign);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            sign = -sign;
            visit(&perm, sign);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// Residual of `log correlator_cauchy + 6 S − p log c`.
pub fn duality_residual(set: &IntervalSet) -> f64 {
    log_correlator_cauchy(set) + 6.0 * entropy(set) - set.len() as f64 * set.c().ln()
}

/// Point charges of a free massless scalar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChargeConfiguration {
    points: Vec<f64>,
    charges: Vec<f64>,
    lambda: f64,
}

/// Charge magnitude `√(2πλ/3)`.
pub fn vertex_charge(lambda: f64) -> f64 {
    (2.0 * PI * lambda / 3.0).sqrt()
}

impl ChargeConfiguration {
    pub fn new(points: Vec<f64>, charges: Vec<f64>, lambda: f64) -> Result<Self> {
        if points.len() != charges.len() || points.is_empty() {
            return Err(Error::DimensionMismatch(format!("{} points with {} charges", points.len(), charges.len())));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Domain(format!("lambda must be positive, got {lambda}")));
        }
        let net: f64 = charges.iter().sum();
        let scale = charges.iter().map(|q| q.abs()).sum::<f64>().max(1.0);
        if net.abs() > 1e-12 * scale {
            return Err(Error::NotNeutral(net));
        }
        let mut sorted = points.clone();
        sorted.sort_by(f64::total_cmp);
        for w in sorted.windows(2) {
            if w[1] - w[0] < MIN_GAP {
                return Err(Error::CoincidentPoints { a: w[0], b: w[1], min_gap: MIN_GAP });
            }
        }
        Ok(Self { points, charges, lambda })
    }

    /// Charge `+q` at every `a_i` and `−q` at every `b_i`, `q = √(2πλ/3)`.
    pub fn from_intervals(set: &IntervalSet, lambda: f64) -> Result<Self> {
        let q = vertex_charge(lambda);
        let mut points = Vec::with_capacity(2 * set.len());
        let mut charges = Vec::with_capacity(2 * set.len());
        for &(a, b) in set.endpoints() {
            points.extend([a, b]);
            charges.extend([q, -q]);
        }
        Self::new(points, charges, lambda)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn charges(&self) -> &[f64] {
        &self.charges
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

/// `(1/8π) Σ_{i≠j} q_i q_j log|x_i − x_j|`, with the self-energy terms
/// dropped (normal ordering).
pub fn gaussian_vertex_correlator(cfg: &ChargeConfiguration) -> f64 {
    let (x, q) = (&cfg.points, &cfg.charges);
    let mut total = 0.0;
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            total += q[i] * q[j] * (x[i] - x[j]).abs().ln();
        }
    }
    total / (4.0 * PI)
}

/// Per-interval constant `log c̃` fixed from the single interval `(0, 1)`.
pub fn calibrate_vertex_constant(lambda: f64, cutoff: f64) -> Result<f64> {
    let unit = IntervalSet::single(0.0, 1.0, cutoff)?;
    let cfg = ChargeConfiguration::from_intervals(&unit, lambda)?;
    Ok(gaussian_vertex_correlator(&cfg) + lambda * entropy(&unit))
}

/// `log⟨vertex⟩ − p log c̃ + λS`, which vanishes identically.
pub fn vertex_residual(set: &IntervalSet, lambda: f64, log_c_tilde: f64) -> Result<f64> {
    let cfg = ChargeConfiguration::from_intervals(set, lambda)?;
    Ok(gaussian_vertex_correlator(&cfg) - set.len() as f64 * log_c_tilde + lambda * entropy(set))
}

/// Residuals of the three correlator identities on one interval set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityResiduals {
    pub intervals: usize,
    pub entropy: f64,
    /// `|wick / cauchy − 1|`.
    pub wick_vs_cauchy: f64,
    /// `|cauchy / (c^p e^{−6S}) − 1|`.
    pub cauchy_vs_entropy: f64,
    /// `max_λ |vertex_residual|` over the calibrated `λ` values.
    pub vertex: f64,
}

/// `calibration` holds `(λ, log c̃)` pairs from [`calibrate_vertex_constant`].
pub fn identity_residuals(set: &IntervalSet, calibration: &[(f64, f64)]) -> Result<IdentityResiduals> {
    let cauchy = correlator_cauchy(set);
    let wick = correlator_wick(set)?;
    let mut vertex: f64 = 0.0;
    for &(lambda, log_c) in calibration {
        vertex = vertex.max(vertex_residual(set, lambda, log_c)?.abs());
    }
    Ok(IdentityResiduals {
        intervals: set.len(),
        entropy: entropy(set),
        wick_vs_cauchy: (wick / cauchy - 1.0).abs(),
        cauchy_vs_entropy: duality_residual(set).exp_m1().abs(),
        vertex,
    })
}

/// Reflection-positivity Gram matrix of a family of half-line sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessRecord {
    pub lambda: f64,
    /// `S(A_i ∪ Ā_j)` with `Ā = −A`.
    #[serde(with = "crate::json::real_matrix")]
    pub entropies: RMatrix,
    /// `e^{−λ S(A_i ∪ Ā_j)}` rescaled by `e^{λ (S_ii + S_jj)/2}` so the
    /// diagonal is 1; a congruence, so positivity is unchanged.
    pub gram: GramRecord,
    pub verdict: PsdVerdict,
}

/// Build and check the Gram matrix of `e^{−λ S(A_i ∪ Ā_j)}`.
pub fn divisibility_witness(sets: &[IntervalSet], lambda: f64, tol: f64) -> Result<WitnessRecord> {
    if sets.is_empty() {
        return Err(Error::InvalidIntervals("no sets".into()));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!("lambda must be positive, got {lambda}")));
    }
    for s in sets {
        let left = s.endpoints()[0].0;
        if left < MIN_GAP {
            return Err(Error::InvalidIntervals(format!("set starting at {left} is not inside the half-line x > 0")));
        }
    }
    let m = sets.len();
    let reflected: Vec<IntervalSet> = sets.iter().map(IntervalSet::reflected).collect();
    let mut entropies = RMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            entropies[(i, j)] = entropy(&sets[i].union(&reflected[j])?);
        }
    }
    let s = &entropies;
    let entries = RMatrix::from_fn(m, m, |i, j| (-lambda * (s[(i, j)] - 0.5 * (s[(i, i)] + s[(j, j)]))).exp());
    let gram = GramRecord::from_entries(entries, 1, lambda)?;
    let verdict = check_psd_matrix(&gram.entries, tol)?;
    Ok(WitnessRecord { lambda, entropies, gram, verdict })
}

/// A family of `count` sets of 1 to `max_intervals` intervals inside `(0, length)`.
pub fn random_half_line_family<R: Rng + ?Sized>(
    rng: &mut R,
    count: usize,
    max_intervals: usize,
    length: f64,
    cutoff: f64,
) -> Result<Vec<IntervalSet>> {
    (0..count)
        .map(|_| {
            let p = rng.random_range(1..=max_intervals.max(1));
            IntervalSet::random(rng, p, 0.0, length, 1e-3 * length, cutoff)
        })
        .collect()
}
