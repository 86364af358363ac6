use serde::{Deserialize, Serialize};

use super::EntropyCurve;
use crate::{Error, Result};

/// Three-point weights for the first and second derivative at `x1` from
/// samples at `x0 < x1 < x2`; exact for quadratics.
fn three_point(x0: f64, x1: f64, x2: f64, f0: f64, f1: f64, f2: f64) -> (f64, f64) {
    let h1 = x1 - x0;
    let h2 = x2 - x1;
    let d1 = (-h2 / (h1 * (h1 + h2))) * f0 + ((h2 - h1) / (h1 * h2)) * f1 + (h1 / (h2 * (h1 + h2))) * f2;
    let d2 = 2.0 * (f0 / (h1 * (h1 + h2)) - f1 / (h1 * h2) + f2 / (h2 * (h1 + h2)));
    (d1, d2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Positive,
    Zero,
    Negative,
}

impl Sign {
    fn of(v: f64, tol: f64) -> Self {
        if v > tol {
            Sign::Positive
        } else if v < -tol {
            Sign::Negative
        } else {
            Sign::Zero
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativePoint {
    pub x: f64,
    pub s1: f64,
    pub s2: f64,
    /// `x S″ + S′`.
    pub c_combination: f64,
    /// Stride-1 minus stride-2 estimate of `S′`, a local error gauge.
    pub s1_spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeReport {
    pub points: Vec<DerivativePoint>,
    /// Sign threshold: `tolerance * max(max |x S′|, max |S|)`.
    pub threshold: f64,
    pub tolerance: f64,
    /// `S′ ≥ −threshold` everywhere.
    pub nondecreasing: bool,
    /// `S″ ≤ threshold / x` everywhere.
    pub concave: bool,
    /// `x S″ + S′ ≤ threshold / x` everywhere (reported, not implied by
    /// reflection positivity).
    pub c_theorem: bool,
    pub s1_sign: Sign,
    pub s2_sign: Sign,
    pub c_sign: Sign,
}

impl DerivativeReport {
    /// Positivity-compatible (`S′ ≥ 0`, `S″ ≤ 0`) while the c-theorem
    /// combination is strictly positive somewhere.
    pub fn rp_compatible_but_c_violating(&self) -> bool {
        self.nondecreasing && self.concave && !self.c_theorem
    }
}

fn overall(signs: impl Iterator<Item = Sign>) -> Sign {
    let (mut pos, mut neg) = (false, false);
    for s in signs {
        pos |= s == Sign::Positive;
        neg |= s == Sign::Negative;
    }
    match (pos, neg) {
        (true, false) => Sign::Positive,
        (false, true) => Sign::Negative,
        (false, false) => Sign::Zero,
        // mixed signs: report the one that breaks the expected pattern
        (true, true) => Sign::Negative,
    }
}

/// Central differences at every sample with two neighbours on each side.
///
/// The stride-1 and stride-2 three-point estimates are combined as
/// `(4 D₁ − D₂)/3`, which keeps quadratics exact and removes the leading
/// error on geometric grids. Signs are decided against
/// `tolerance · max(max_i |x_i S′_i|, max_i |S_i|)`, with `S″` and `xS″ + S′` compared after
/// multiplying by `x`.
pub fn derivative_checks(curve: &EntropyCurve, tolerance: f64) -> Result<DerivativeReport> {
    let (xs, ss) = (curve.xs(), curve.values());
    let n = xs.len();
    if n < 5 {
        return Err(Error::Domain(format!("derivative checks need at least 5 samples, got {n}")));
    }
    if xs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("x grid must be strictly increasing".into()));
    }
    let mut points = Vec::with_capacity(n - 4);
    for i in 2..n - 2 {
        let (a1, b1) = three_point(xs[i - 1], xs[i], xs[i + 1], ss[i - 1], ss[i], ss[i + 1]);
        let (a2, b2) = three_point(xs[i - 2], xs[i], xs[i + 2], ss[i - 2], ss[i], ss[i + 2]);
        let s1 = (4.0 * a1 - a2) / 3.0;
        let s2 = (4.0 * b1 - b2) / 3.0;
        points.push(DerivativePoint { x: xs[i], s1, s2, c_combination: xs[i] * s2 + s1, s1_spread: a1 - a2 });
    }
    let slope = points.iter().map(|p| (p.x * p.s1).abs()).fold(0.0, f64::max);
    let scale = slope.max(ss.iter().map(|s| s.abs()).fold(0.0, f64::max));
    let threshold = tolerance * scale.max(f64::MIN_POSITIVE);
    let s1_sign = overall(points.iter().map(|p| Sign::of(p.x * p.s1, threshold)));
    let s2_sign = overall(points.iter().map(|p| Sign::of(p.x * p.x * p.s2, threshold)));
    let c_sign = overall(points.iter().map(|p| Sign::of(p.x * p.c_combination, threshold)));
    Ok(DerivativeReport {
        nondecreasing: points.iter().all(|p| p.x * p.s1 >= -threshold),
        concave: points.iter().all(|p| p.x * p.x * p.s2 <= threshold),
        c_theorem: points.iter().all(|p| p.x * p.c_combination <= threshold),
        points,
        threshold,
        tolerance,
        s1_sign,
        s2_sign,
        c_sign,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
    }

    fn curve(f: impl Fn(f64) -> f64) -> EntropyCurve {
        let xs = log_grid(0.5, 50.0, 120);
        EntropyCurve::new(xs.iter().map(|&x| (x, f(x))).collect(), 1.0).unwrap()
    }

    #[test]
    fn exact_on_quadratics() {
        let xs = log_grid(0.3, 7.0, 9);
        for i in 1..xs.len() - 1 {
            let f = |x: f64| 2.0 - 3.0 * x + 0.5 * x * x;
            let (d1, d2) = three_point(xs[i - 1], xs[i], xs[i + 1], f(xs[i - 1]), f(xs[i]), f(xs[i + 1]));
            assert!((d1 - (-3.0 + xs[i])).abs() < 1e-12);
            assert!((d2 - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn logarithm_saturates_c_theorem() {
        let r = derivative_checks(&curve(|x| x.ln() / 6.0), 1e-6).unwrap();
        assert_eq!((r.s1_sign, r.s2_sign, r.c_sign), (Sign::Positive, Sign::Negative, Sign::Zero));
        assert!(r.nondecreasing && r.concave && r.c_theorem);
    }

    #[test]
    fn linear_growth_is_flagged() {
        let r = derivative_checks(&curve(|x| x), 1e-6).unwrap();
        assert_eq!((r.s1_sign, r.s2_sign, r.c_sign), (Sign::Positive, Sign::Zero, Sign::Positive));
        assert!(r.rp_compatible_but_c_violating());
    }

    #[test]
    fn constant_curve() {
        let r = derivative_checks(&curve(|_| 0.7), 1e-6).unwrap();
        assert_eq!((r.s1_sign, r.s2_sign, r.c_sign), (Sign::Zero, Sign::Zero, Sign::Zero));
    }

    #[test]
    fn too_few_samples() {
        let c = EntropyCurve::new(vec![(1.0, 0.0), (2.0, 0.1), (3.0, 0.2), (4.0, 0.3)], 1.0).unwrap();
        assert!(derivative_checks(&c, 1e-6).is_err());
    }
}
