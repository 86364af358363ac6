//! Two-interval Renyi entropies in a 1+1 CFT,
//!
//! ```text
//! e^{−(n−1) S_n} = k² (x (a₂−b₁)(b₂−a₁))^{−q} F_n(x),   q = (C/6)(n − 1/n)
//! ```
//!
//! and the two positivity inequalities on `G(x) = F(x)/(1−x)^q`:
//! `G′ ≥ 0` and `G(x) G(y) ≥ G(z)²` at the point `z(x, y)`.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Relative finite-difference step.
pub const FD_STEP: f64 = 1e-5;

fn default_k() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoIntervalConfig {
    pub a1: f64,
    pub b1: f64,
    pub a2: f64,
    pub b2: f64,
    pub central_charge: f64,
    pub n: u32,
    /// Cutoff-dependent normalisation; never enters an asserted quantity.
    #[serde(default = "default_k")]
    pub k_constant: f64,
}

impl TwoIntervalConfig {
    pub fn new(endpoints: [f64; 4], central_charge: f64, n: u32) -> Result<Self> {
        let [a1, b1, a2, b2] = endpoints;
        let cfg = Self { a1, b1, a2, b2, central_charge, n, k_constant: 1.0 };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let e = [self.a1, self.b1, self.a2, self.b2];
        if e.iter().any(|v| !v.is_finite()) || !(e[0] < e[1] && e[1] < e[2] && e[2] < e[3]) {
            return Err(Error::InvalidIntervals(format!("need a1 < b1 < a2 < b2, got {e:?}")));
        }
        if !(self.central_charge > 0.0 && self.central_charge.is_finite()) {
            return Err(Error::Domain(format!("central charge must be positive, got {}", self.central_charge)));
        }
        if self.n < 2 {
            return Err(Error::InvalidIndex(self.n));
        }
        if !(self.k_constant > 0.0 && self.k_constant.is_finite()) {
            return Err(Error::Domain(format!("k must be positive, got {}", self.k_constant)));
        }
        Ok(())
    }

    /// `q = (C/6)(n − 1/n)`.
    pub fn q(&self) -> f64 {
        let n = self.n as f64;
        self.central_charge / 6.0 * (n - 1.0 / n)
    }

    pub fn scaled(&self, sigma: f64) -> Self {
        Self { a1: self.a1 * sigma, b1: self.b1 * sigma, a2: self.a2 * sigma, b2: self.b2 * sigma, ..self.clone() }
    }
}

/// `x = (b₁−a₁)(b₂−a₂) / ((a₂−a₁)(b₂−b₁))`.
pub fn cross_ratio(cfg: &TwoIntervalConfig) -> Result<f64> {
    cfg.validate()?;
    Ok((cfg.b1 - cfg.a1) * (cfg.b2 - cfg.a2) / ((cfg.a2 - cfg.a1) * (cfg.b2 - cfg.b1)))
}

/// Monotone piecewise-cubic Hermite interpolant (Fritsch–Carlson slopes).
#[derive(Debug, Clone, PartialEq)]
struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    fn new(mut points: Vec<(f64, f64)>) -> Result<Self> {
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        if points.len() < 2 {
            return Err(Error::Domain("a table needs at least two points".into()));
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::Domain("duplicate x in table".into()));
        }
        if let Some(&(x, y)) = points.iter().find(|&&(x, y)| !(x.is_finite() && y.is_finite() && y > 0.0)) {
            return Err(Error::Domain(format!("table entries must be finite with F > 0, got ({x}, {y})")));
        }
        let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
        let m = xs.len();
        let delta: Vec<f64> = (0..m - 1).map(|i| (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i])).collect();
        let mut slopes = vec![0.0; m];
        slopes[0] = delta[0];
        slopes[m - 1] = delta[m - 2];
        for i in 1..m - 1 {
            slopes[i] = if delta[i - 1] * delta[i] <= 0.0 { 0.0 } else { 0.5 * (delta[i - 1] + delta[i]) };
        }
        for i in 0..m - 1 {
            if delta[i] == 0.0 {
                slopes[i] = 0.0;
                slopes[i + 1] = 0.0;
                continue;
            }
            let a = slopes[i] / delta[i];
            let b = slopes[i + 1] / delta[i];
            let r = a * a + b * b;
            if r > 9.0 {
                let t = 3.0 / r.sqrt();
                slopes[i] = t * a * delta[i];
                slopes[i + 1] = t * b * delta[i];
            }
        }
        Ok(Self { xs, ys, slopes })
    }

    fn eval(&self, x: f64) -> Option<f64> {
        let (lo, hi) = (self.xs[0], *self.xs.last()?);
        if !(x >= lo && x <= hi) {
            return None;
        }
        let i = self.xs.partition_point(|&v| v <= x).clamp(1, self.xs.len() - 1) - 1;
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        Some(
            (2.0 * t3 - 3.0 * t2 + 1.0) * self.ys[i]
                + (t3 - 2.0 * t2 + t) * h * self.slopes[i]
                + (-2.0 * t3 + 3.0 * t2) * self.ys[i + 1]
                + (t3 - t2) * h * self.slopes[i + 1],
        )
    }
}

type Evaluator = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Kind {
    Unit,
    Table(MonotoneCubic),
    Custom(Evaluator),
}

/// A positive function of the cross ratio on `(0, 1)`.
#[derive(Clone)]
pub struct CrossRatioFunction {
    name: String,
    kind: Kind,
}

impl fmt::Debug for CrossRatioFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            Kind::Unit => "unit",
            Kind::Table(_) => "table",
            Kind::Custom(_) => "custom",
        };
        f.debug_struct("CrossRatioFunction").field("name", &self.name).field("kind", &kind).finish()
    }
}

/// Outcome of the structural checks `F(x) = F(1−x)` and `F(0⁺) = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionValidation {
    pub max_asymmetry: f64,
    pub value_near_zero: f64,
    pub symmetric: bool,
    pub normalised: bool,
}

impl CrossRatioFunction {
    /// `F ≡ 1`, the free-fermion value.
    pub fn unit() -> Self {
        Self { name: "unit".into(), kind: Kind::Unit }
    }

    /// Interpolated table of `(x, F(x))`; evaluation outside the tabulated
    /// range is a domain error.
    pub fn tabulated(name: impl Into<String>, points: Vec<(f64, f64)>) -> Result<Self> {
        Ok(Self { name: name.into(), kind: Kind::Table(MonotoneCubic::new(points)?) })
    }

    /// Table from two-column CSV text (`x,F`); a non-numeric first row is
    /// taken as a header.
    pub fn from_csv(name: impl Into<String>, text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let mut points = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| Error::Config(format!("F table: {e}")))?;
            if rec.len() != 2 {
                return Err(Error::Config(format!("F table row {} has {} columns, expected 2", i + 1, rec.len())));
            }
            match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
                (Ok(x), Ok(f)) => points.push((x, f)),
                _ if i == 0 => continue,
                _ => return Err(Error::Config(format!("F table row {}: cannot parse {:?}", i + 1, rec))),
            }
        }
        Self::tabulated(name, points)
    }

    pub fn custom(name: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { name: name.into(), kind: Kind::Custom(Arc::new(f)) }
    }

    /// `F(x) = (1−x)^{2q}`, for which `G = (1−x)^q` decreases.
    pub fn synthetic_violator(q: f64) -> Self {
        Self::custom(format!("violator(q={q})"), move |x| (1.0 - x).powf(2.0 * q))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(x > 0.0 && x < 1.0) {
            return Err(Error::Domain(format!("cross ratio must lie in (0, 1), got {x}")));
        }
        let v = match &self.kind {
            Kind::Unit => 1.0,
            Kind::Table(t) => {
                t.eval(x).ok_or_else(|| Error::Domain(format!("x = {x} outside the table of {}", self.name)))?
            }
            Kind::Custom(f) => f(x),
        };
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Domain(format!("{}({x}) = {v} is not positive", self.name)));
        }
        Ok(v)
    }

    /// Symmetry on `points` interior grid nodes, and the value at the first
    /// node as the `x → 0` limit.
    pub fn validate(&self, points: usize, tolerance: f64) -> Result<FunctionValidation> {
        let grid = interior_grid(points)?;
        let mut max_asymmetry: f64 = 0.0;
        for &x in &grid {
            max_asymmetry = max_asymmetry.max((self.eval(x)? - self.eval(1.0 - x)?).abs());
        }
        let value_near_zero = self.eval(grid[0])?;
        Ok(FunctionValidation {
            max_asymmetry,
            value_near_zero,
            symmetric: max_asymmetry <= tolerance,
            normalised: (value_near_zero - 1.0).abs() <= (grid[0] * 10.0).max(tolerance),
        })
    }
}

/// `S_n = −[2 log k − q log(x (a₂−b₁)(b₂−a₁)) + log F(x)] / (n−1)`.
///
/// The absolute value depends on `k` and the units of length and can be
/// negative; only differences are physical.
pub fn renyi_two_interval(cfg: &TwoIntervalConfig, f: &CrossRatioFunction) -> Result<f64> {
    let x = cross_ratio(cfg)?;
    let arg = x * (cfg.a2 - cfg.b1) * (cfg.b2 - cfg.a1);
    let inner = 2.0 * cfg.k_constant.ln() - cfg.q() * arg.ln() + f.eval(x)?.ln();
    Ok(-inner / (cfg.n as f64 - 1.0))
}

/// `G(x) = F(x) / (1−x)^q`.
pub fn g_value(f: &CrossRatioFunction, q: f64, x: f64) -> Result<f64> {
    Ok(f.eval(x)? / (1.0 - x).powf(q))
}

/// `points` nodes `i/(points+1)`, strictly inside `(0, 1)`.
pub fn interior_grid(points: usize) -> Result<Vec<f64>> {
    if points == 0 {
        return Err(Error::Domain("grid needs at least one point".into()));
    }
    Ok((1..=points).map(|i| i as f64 / (points + 1) as f64).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeSample {
    pub x: f64,
    pub g: f64,
    /// Richardson-extrapolated `G′(x)`.
    pub derivative: f64,
    /// `|D(h) − D(h/2)|`, the cross-check between step sizes.
    pub step_discrepancy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeInequalityReport {
    pub function: String,
    pub q: f64,
    pub tolerance: f64,
    pub samples: Vec<DerivativeSample>,
    pub min_slack: f64,
    pub min_slack_x: f64,
    pub passed: bool,
}

/// Checks `d/dx [F(x)/(1−x)^q] ≥ −tolerance` at every grid point.
///
/// Central differences with `h = 1e-5 · min(x, 1−x)` and `h/2`, combined as
/// `(4 D(h/2) − D(h))/3`.
pub fn check_derivative_inequality(
    f: &CrossRatioFunction,
    q: f64,
    grid: &[f64],
    tolerance: f64,
) -> Result<DerivativeInequalityReport> {
    if grid.is_empty() {
        return Err(Error::Domain("empty grid".into()));
    }
    if !q.is_finite() {
        return Err(Error::Domain(format!("q must be finite, got {q}")));
    }
    let mut samples = Vec::with_capacity(grid.len());
    for &x in grid {
        if !(x > 0.0 && x < 1.0) {
            return Err(Error::Domain(format!("grid point {x} not inside (0, 1)")));
        }
        let h = FD_STEP * x.min(1.0 - x);
        let central = |h: f64| -> Result<f64> { Ok((g_value(f, q, x + h)? - g_value(f, q, x - h)?) / (2.0 * h)) };
        let (d1, d2) = (central(h)?, central(0.5 * h)?);
        samples.push(DerivativeSample {
            x,
            g: g_value(f, q, x)?,
            derivative: (4.0 * d2 - d1) / 3.0,
            step_discrepancy: (d1 - d2).abs(),
        });
    }
    let worst = samples.iter().min_by(|a, b| a.derivative.total_cmp(&b.derivative)).expect("non-empty");
    let (min_slack, min_slack_x) = (worst.derivative, worst.x);
    Ok(DerivativeInequalityReport {
        function: f.name().to_string(),
        q,
        tolerance,
        passed: min_slack >= -tolerance,
        samples,
        min_slack,
        min_slack_x,
    })
}

/// `z = 2√(xy) / (1 + √(1−x)√(1−y) + √(xy))`, which lies between `x` and
/// `y`; `z(x, x) = x` exactly.
pub fn z_point(x: f64, y: f64) -> Result<f64> {
    if !(x > 0.0 && x < 1.0 && y > 0.0 && y < 1.0) {
        return Err(Error::Domain(format!("z needs x, y in (0, 1), got ({x}, {y})")));
    }
    if x == y {
        return Ok(x);
    }
    let r = (x * y).sqrt();
    let z = 2.0 * r / (1.0 + (1.0 - x).sqrt() * (1.0 - y).sqrt() + r);
    let (lo, hi) = (x.min(y), x.max(y));
    // a few ulps of rounding may land just outside; anything more is a bug
    let slop = 8.0 * f64::EPSILON * hi;
    if z < lo - slop || z > hi + slop {
        return Err(Error::NumericalBreakdown(z));
    }
    Ok(z.clamp(lo, hi))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MidpointSample {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    /// `1 − G(z)² / (G(x) G(y))`.
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MidpointInequalityReport {
    pub function: String,
    pub q: f64,
    pub tolerance: f64,
    pub samples: Vec<MidpointSample>,
    pub min_slack: f64,
    pub passed: bool,
}

/// Checks `G(x) G(y) ≥ G(z)²` for each pair, with relative slack.
pub fn check_midpoint_inequality(
    f: &CrossRatioFunction,
    q: f64,
    pairs: &[(f64, f64)],
    tolerance: f64,
) -> Result<MidpointInequalityReport> {
    if pairs.is_empty() {
        return Err(Error::Domain("no (x, y) pairs".into()));
    }
    let samples = pairs
        .iter()
        .map(|&(x, y)| {
            let z = z_point(x, y)?;
            let gz = g_value(f, q, z)?;
            let slack = 1.0 - gz * gz / (g_value(f, q, x)? * g_value(f, q, y)?);
            Ok(MidpointSample { x, y, z, slack })
        })
        .collect::<Result<Vec<_>>>()?;
    let min_slack = samples.iter().map(|s| s.slack).fold(f64::INFINITY, f64::min);
    Ok(MidpointInequalityReport {
        function: f.name().to_string(),
        q,
        tolerance,
        passed: min_slack >= -tolerance,
        samples,
        min_slack,
    })
}

/// Uniform pairs in `[margin, 1 − margin]²`.
pub fn random_pairs<R: Rng + ?Sized>(rng: &mut R, count: usize, margin: f64) -> Vec<(f64, f64)> {
    (0..count).map(|_| (rng.random_range(margin..1.0 - margin), rng.random_range(margin..1.0 - margin))).collect()
}
