//! Källén–Lehmann representation of `e^{−λS(x)}` for a single interval:
//!
//! ```text
//! e^{−λ S(x)} = ∫ dp² g(p²) K₀(p x),   g ≥ 0
//! ```
//!
//! with a discretised forward map, a nonnegative inverse fit, decay and
//! power-law estimators, and finite-difference sign checks.

pub mod bessel;
pub mod derivatives;
pub mod nnls;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub use bessel::k0;
pub use derivatives::{derivative_checks, DerivativeReport, Sign};

use crate::{Error, Result};

/// Point masses `weights[j]` at `p² = grid[j]` (quadrature weights times
/// `g`), plus an optional mass standing in for `δ(p²)`.
///
/// `K₀(p x)` diverges as `p → 0`, so the `δ(p²)` mass is placed at the small
/// momentum `delta_regulator` instead of at zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralDensity {
    pub grid: Vec<f64>,
    pub weights: Vec<f64>,
    #[serde(default)]
    pub delta_mass: f64,
    #[serde(default = "default_regulator")]
    pub delta_regulator: f64,
}

fn default_regulator() -> f64 {
    1e-6
}

impl SpectralDensity {
    pub fn new(grid: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        Self::with_delta(grid, weights, 0.0, default_regulator())
    }

    pub fn with_delta(grid: Vec<f64>, weights: Vec<f64>, delta_mass: f64, delta_regulator: f64) -> Result<Self> {
        let g = Self { grid, weights, delta_mass, delta_regulator };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.len() != self.weights.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} grid points with {} weights",
                self.grid.len(),
                self.weights.len()
            )));
        }
        if self.grid.iter().any(|&p2| !(p2 > 0.0 && p2.is_finite())) {
            return Err(Error::Domain("grid values p² must be positive and finite".into()));
        }
        if self.grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("grid must be strictly increasing".into()));
        }
        if let Some(w) = self.weights.iter().find(|&&w| !(w >= 0.0 && w.is_finite())) {
            return Err(Error::NotPositive(*w));
        }
        if !(self.delta_mass >= 0.0) || !(self.delta_regulator > 0.0) {
            return Err(Error::Domain("delta mass must be ≥ 0 with a positive regulator".into()));
        }
        Ok(())
    }

    /// Unit masses at the given momenta `p` (not `p²`).
    pub fn spikes(momenta_and_weights: &[(f64, f64)]) -> Result<Self> {
        let mut pairs: Vec<(f64, f64)> = momenta_and_weights.iter().map(|&(p, w)| (p * p, w)).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self::new(pairs.iter().map(|p| p.0).collect(), pairs.iter().map(|p| p.1).collect())
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum::<f64>() + self.delta_mass
    }

    /// Smallest `p` carrying weight above `threshold · total`.
    pub fn support_start(&self, threshold: f64) -> Option<f64> {
        let total = self.weights.iter().sum::<f64>();
        self.grid.iter().zip(&self.weights).find(|(_, &w)| w > threshold * total).map(|(&p2, _)| p2.sqrt())
    }
}

/// Samples `(x, S(x))` of a single-interval entropy and the `λ` used in
/// `e^{−λS}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyCurve {
    samples: Vec<(f64, f64)>,
    lambda: f64,
}

impl EntropyCurve {
    pub fn new(samples: Vec<(f64, f64)>, lambda: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Domain("empty entropy curve".into()));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Domain(format!("lambda must be positive, got {lambda}")));
        }
        if samples.iter().any(|&(x, s)| !(x > 0.0 && x.is_finite() && s.is_finite())) {
            return Err(Error::Domain("curve samples need finite x > 0 and finite S".into()));
        }
        let mut xs: Vec<f64> = samples.iter().map(|s| s.0).collect();
        xs.sort_by(f64::total_cmp);
        if xs.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Domain("duplicate x in entropy curve".into()));
        }
        Ok(Self { samples, lambda })
    }

    /// Curve whose `e^{−λS}` equals the given values (`y > 0`).
    pub fn from_correlator(xs: &[f64], ys: &[f64], lambda: f64) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::DimensionMismatch("x and y lengths differ".into()));
        }
        if ys.iter().any(|&y| !(y > 0.0)) {
            return Err(Error::Domain("correlator values must be positive".into()));
        }
        Self::new(xs.iter().zip(ys).map(|(&x, &y)| (x, -y.ln() / lambda)).collect(), lambda)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn xs(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.0).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.1).collect()
    }

    /// `y = e^{−λ S}`.
    pub fn correlator(&self) -> Vec<f64> {
        self.samples.iter().map(|&(_, s)| (-self.lambda * s).exp()).collect()
    }
}

/// `Σ_j w_j K₀(√p²_j x)` plus the regulated `δ` term.
pub fn forward(g: &SpectralDensity, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("forward transform needs x > 0, got {x}")));
    }
    let mut total = 0.0;
    for (&p2, &w) in g.grid.iter().zip(&g.weights) {
        if w > 0.0 {
            total += w * k0(p2.sqrt() * x)?;
        }
    }
    if g.delta_mass > 0.0 {
        total += g.delta_mass * k0(g.delta_regulator * x)?;
    }
    Ok(total)
}

pub fn forward_many(g: &SpectralDensity, xs: &[f64]) -> Result<Vec<f64>> {
    xs.iter().map(|&x| forward(g, x)).collect()
}

/// `K_{ij} = K₀(p_j x_i)` for a grid of `p²` values.
pub fn kernel_matrix(xs: &[f64], grid: &[f64]) -> Result<DMatrix<f64>> {
    let mut k = DMatrix::zeros(xs.len(), grid.len());
    for (i, &x) in xs.iter().enumerate() {
        for (j, &p2) in grid.iter().enumerate() {
            k[(i, j)] = k0(p2.sqrt() * x)?;
        }
    }
    Ok(k)
}

/// `n` values of `p²` whose momenta `p` are log-spaced on `[p_min, p_max]`.
pub fn log_p2_grid(p_min: f64, p_max: f64, n: usize) -> Result<Vec<f64>> {
    if !(p_min > 0.0 && p_max > p_min) || n < 2 {
        return Err(Error::Domain(format!("bad momentum grid [{p_min}, {p_max}] x {n}")));
    }
    let ratio = (p_max / p_min).ln();
    Ok((0..n)
        .map(|i| {
            let p = p_min * (ratio * i as f64 / (n - 1) as f64).exp();
            p * p
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Weight rows by `1/y` so the fit minimises relative error.
    pub relative_rows: bool,
    /// Ridge penalty `ρ ‖w‖²` on the column-scaled problem; 0 disables.
    pub ridge: f64,
    /// Add a `δ(p²)` column at this small momentum.
    pub delta_regulator: Option<f64>,
    /// Relative size of the deterministic data perturbation used by the
    /// conditioning diagnostic.
    pub perturbation: f64,
    pub max_iterations: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { relative_rows: true, ridge: 0.0, delta_regulator: None, perturbation: 1e-8, max_iterations: 10_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub density: SpectralDensity,
    /// `‖K w − y‖₂ / ‖y‖₂`.
    pub relative_residual: f64,
    /// `max_i |K w − y|_i / |y_i|`.
    pub max_relative_error: f64,
    /// Relative residual after refitting perturbed data.
    pub perturbed_residual: f64,
    /// `(‖Δ(Kw)‖/‖Kw‖) / (‖Δy‖/‖y‖)` under the perturbation.
    pub fit_sensitivity: f64,
    /// `(‖Δw‖/‖w‖) / (‖Δy‖/‖y‖)`; large values mean the weights are not
    /// determined by the data.
    pub weight_sensitivity: f64,
    /// The residual is within the perturbation's own reach of zero, so
    /// conditioning (not positivity) limits the fit.
    pub conditioning_limited: bool,
    pub nonzero_weights: usize,
    pub iterations: usize,
}

fn solve_fit(xs: &[f64], ys: &[f64], grid: &[f64], opts: &FitOptions) -> Result<(Vec<f64>, f64, usize)> {
    let mut k = kernel_matrix(xs, grid)?;
    if let Some(p0) = opts.delta_regulator {
        k = k.insert_column(grid.len(), 0.0);
        for (i, &x) in xs.iter().enumerate() {
            k[(i, grid.len())] = k0(p0 * x)?;
        }
    }
    let mut b = DVector::from_column_slice(ys);
    if opts.relative_rows {
        for i in 0..xs.len() {
            let s = 1.0 / ys[i];
            k.row_mut(i).scale_mut(s);
            b[i] *= s;
        }
    }
    let ncols = k.ncols();
    let (k, b) = if opts.ridge > 0.0 {
        let norms: Vec<f64> = (0..ncols).map(|j| k.column(j).norm()).collect();
        let mut aug = k.clone().resize_vertically(xs.len() + ncols, 0.0);
        for j in 0..ncols {
            aug[(xs.len() + j, j)] = opts.ridge.sqrt() * norms[j];
        }
        (aug, b.resize_vertically(xs.len() + ncols, 0.0))
    } else {
        (k, b)
    };
    let sol = nnls::nnls(&k, &b, opts.max_iterations)?;
    Ok((sol.x.iter().copied().collect(), sol.residual_norm, sol.iterations))
}

fn assemble(grid: &[f64], w: &[f64], opts: &FitOptions) -> Result<SpectralDensity> {
    let (weights, delta) = match opts.delta_regulator {
        Some(_) => (w[..grid.len()].to_vec(), w[grid.len()]),
        None => (w.to_vec(), 0.0),
    };
    SpectralDensity::with_delta(grid.to_vec(), weights, delta, opts.delta_regulator.unwrap_or_else(default_regulator))
}

fn rel_norm(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den.max(f64::MIN_POSITIVE)
}

/// Nonnegative fit of `y = e^{−λS}` on a `p²` grid.
pub fn fit_spectral(curve: &EntropyCurve, grid: &[f64], opts: &FitOptions) -> Result<FitReport> {
    let xs = curve.xs();
    let ys = curve.correlator();
    if ys.iter().any(|y| !(*y > 0.0 && y.is_finite())) {
        return Err(Error::Domain("e^(-λS) must be positive and finite".into()));
    }
    let (w, _, iterations) = solve_fit(&xs, &ys, grid, opts)?;
    let density = assemble(grid, &w, opts)?;
    let model = forward_many(&density, &xs)?;
    let relative_residual = rel_norm(&model, &ys);
    let max_relative_error = model.iter().zip(&ys).map(|(m, y)| ((m - y) / y).abs()).fold(0.0, f64::max);

    // deterministic ±ε pattern
    let eps = opts.perturbation;
    let ys_p: Vec<f64> = ys.iter().enumerate().map(|(i, y)| y * (1.0 + if i % 2 == 0 { eps } else { -eps })).collect();
    let data_change = rel_norm(&ys_p, &ys).max(f64::MIN_POSITIVE);
    let (w_p, _, _) = solve_fit(&xs, &ys_p, grid, opts)?;
    let density_p = assemble(grid, &w_p, opts)?;
    let model_p = forward_many(&density_p, &xs)?;
    let perturbed_residual = rel_norm(&model_p, &ys_p);
    let fit_sensitivity = rel_norm(&model_p, &model) / data_change;
    let weight_sensitivity = rel_norm(&w_p, &w) / data_change;

    Ok(FitReport {
        conditioning_limited: relative_residual <= 10.0 * data_change,
        nonzero_weights: w.iter().filter(|&&v| v > 0.0).count(),
        density,
        relative_residual,
        max_relative_error,
        perturbed_residual,
        fit_sensitivity,
        weight_sensitivity,
        iterations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolutionPoint {
    pub grid_size: usize,
    pub relative_residual: f64,
    pub max_relative_error: f64,
}

/// Residual of the constrained fit against grid resolution on `[p_min, p_max]`.
pub fn resolution_sweep(
    curve: &EntropyCurve,
    p_min: f64,
    p_max: f64,
    sizes: &[usize],
    opts: &FitOptions,
) -> Result<Vec<ResolutionPoint>> {
    sizes
        .iter()
        .map(|&n| {
            let r = fit_spectral(curve, &log_p2_grid(p_min, p_max, n)?, opts)?;
            Ok(ResolutionPoint {
                grid_size: n,
                relative_residual: r.relative_residual,
                max_relative_error: r.max_relative_error,
            })
        })
        .collect()
}

fn least_squares(rows: &[Vec<f64>], rhs: &[f64]) -> Result<Vec<f64>> {
    let a = DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j]);
    let b = DVector::from_column_slice(rhs);
    let svd = a.svd(true, true);
    let x = svd.solve(&b, 1e-14).map_err(|msg| Error::Domain(format!("regression failed: {msg}")))?;
    Ok(x.iter().copied().collect())
}

/// Exponential decay rate of `y(x)` from `log y = c − r x − a log x` fitted
/// over the samples; the `log x` column absorbs the power-law prefactor of
/// `K₀` and of threshold behaviour.
pub fn decay_rate(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 4 {
        return Err(Error::Domain("decay-rate regression needs at least 4 samples".into()));
    }
    if ys.iter().any(|&y| !(y > 0.0)) || xs.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::Domain("decay-rate regression needs positive x and y".into()));
    }
    let rows: Vec<Vec<f64>> = xs.iter().map(|&x| vec![1.0, x, x.ln()]).collect();
    let rhs: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    Ok(-least_squares(&rows, &rhs)?[1])
}

/// Decay rate of the forward transform sampled on `[x_lo, x_hi]`.
pub fn density_decay_rate(g: &SpectralDensity, x_lo: f64, x_hi: f64, samples: usize) -> Result<f64> {
    let xs: Vec<f64> = (0..samples).map(|i| x_lo + (x_hi - x_lo) * i as f64 / (samples - 1).max(1) as f64).collect();
    decay_rate(&xs, &forward_many(g, &xs)?)
}

/// Exponent `γ` of `g(p²) ∝ p^γ` over `[p_lo, p_hi]`.
///
/// Point weights of a fit are spiky, so the estimate regresses the
/// cumulative mass `W(P) = Σ_{p_j ≤ P} w_j ∝ P^{γ+2}` on log–log axes at the
/// grid points inside the window.
pub fn power_law_exponent(g: &SpectralDensity, p_lo: f64, p_hi: f64) -> Result<f64> {
    let mut cumulative = 0.0;
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for (&p2, &w) in g.grid.iter().zip(&g.weights) {
        cumulative += w;
        let p = p2.sqrt();
        if p >= p_lo && p <= p_hi && cumulative > 0.0 {
            rows.push(vec![1.0, p.ln()]);
            rhs.push(cumulative.ln());
        }
    }
    if rows.len() < 3 {
        return Err(Error::Domain(format!("too few weighted grid points in [{p_lo}, {p_hi}]")));
    }
    Ok(least_squares(&rows, &rhs)?[1] - 2.0)
}

/// `γ = λ (n+1) C / (6n) − 2`.
pub fn expected_exponent(lambda: f64, n: f64, central_charge: f64) -> f64 {
    lambda * (n + 1.0) * central_charge / (6.0 * n) - 2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GappedDecayCheck {
    pub mass: f64,
    pub expected_rate: f64,
    pub estimated_rate: f64,
    pub relative_error: f64,
}

/// Density `g(p²) ∝ 1/p²` supported from the two-particle threshold `p = 2M`;
/// the decay rate of `e^{−λS}` is regressed over `x ∈ [20/M, 60/M]`.
pub fn gapped_decay_check(mass: f64) -> Result<GappedDecayCheck> {
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(Error::Domain(format!("mass must be positive, got {mass}")));
    }
    let grid = log_p2_grid(2.0 * mass, 12.0 * mass, 40)?;
    let weights = grid.iter().map(|p2| 1.0 / p2).collect();
    let g = SpectralDensity::new(grid, weights)?;
    let estimated_rate = density_decay_rate(&g, 20.0 / mass, 60.0 / mass, 40)?;
    let expected_rate = 2.0 * mass;
    Ok(GappedDecayCheck {
        mass,
        expected_rate,
        estimated_rate,
        relative_error: (estimated_rate / expected_rate - 1.0).abs(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLawCheck {
    pub lambda: f64,
    pub n: f64,
    pub central_charge: f64,
    /// Decay power `a` of `y = x^{-a}`.
    pub correlator_power: f64,
    pub expected_gamma: f64,
    pub fitted_gamma: f64,
    pub relative_error: f64,
    pub fit_residual: f64,
}

/// Fits `y = x^{-a}` with `a = λ(n+1)C/(6n)` on `x ∈ [0.02, 50]` and reads
/// the exponent off the fitted weights for `p ∈ [3/50, 1/0.06]`.
///
/// The continuum density exists only for `a > 0`; `γ` near zero makes the
/// relative error meaningless, so `|γ| < 0.5` is rejected.
pub fn power_law_check(lambda: f64, n: f64, central_charge: f64) -> Result<PowerLawCheck> {
    let expected_gamma = expected_exponent(lambda, n, central_charge);
    let a = expected_gamma + 2.0;
    if !(a > 0.0) || expected_gamma.abs() < 0.5 {
        return Err(Error::Domain(format!("power-law check needs a > 0 and |γ| ≥ 0.5, got γ = {expected_gamma}")));
    }
    let (x_lo, x_hi): (f64, f64) = (0.02, 50.0);
    let xs: Vec<f64> = (0..80).map(|i| x_lo * (x_hi / x_lo).powf(i as f64 / 79.0)).collect();
    let ys: Vec<f64> = xs.iter().map(|x| x.powf(-a)).collect();
    let curve = EntropyCurve::from_correlator(&xs, &ys, lambda)?;
    let fit = fit_spectral(&curve, &log_p2_grid(0.005, 500.0, 160)?, &FitOptions::default())?;
    let fitted_gamma = power_law_exponent(&fit.density, 3.0 / x_hi, 1.0 / (3.0 * x_lo))?;
    Ok(PowerLawCheck {
        lambda,
        n,
        central_charge,
        correlator_power: a,
        expected_gamma,
        fitted_gamma,
        relative_error: ((fitted_gamma - expected_gamma) / expected_gamma).abs(),
        fit_residual: fit.relative_residual,
    })
}
