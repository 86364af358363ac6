//! Modified Bessel function `K₀` for real positive arguments.
//!
//! Power series up to `x = 2`, Steed's continued fraction up to
//! [`ASYMPTOTIC_FROM`], Hankel asymptotic series beyond.

use std::f64::consts::PI;

use crate::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
pub const SERIES_UP_TO: f64 = 2.0;
pub const ASYMPTOTIC_FROM: f64 = 25.0;

/// `K₀(x)`; `x ≤ 0` is a domain error.
pub fn k0(x: f64) -> Result<f64> {
    if !(x > 0.0) || x.is_nan() {
        return Err(Error::Domain(format!("K0 needs x > 0, got {x}")));
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    Ok(if x <= SERIES_UP_TO { k0_series(x) } else { k0_scaled_large(x) * (-x).exp() })
}

/// `eˣ K₀(x)`, finite for large `x`.
pub fn k0_scaled(x: f64) -> Result<f64> {
    if !(x > 0.0) || x.is_nan() {
        return Err(Error::Domain(format!("K0 needs x > 0, got {x}")));
    }
    Ok(if x <= SERIES_UP_TO { k0_series(x) * x.exp() } else { k0_scaled_large(x) })
}

fn k0_scaled_large(x: f64) -> f64 {
    if x < ASYMPTOTIC_FROM {
        k0_steed_scaled(x)
    } else {
        k0_asymptotic_scaled(x)
    }
}

/// `K₀(x) = −(ln(x/2) + γ) I₀(x) + Σ_k H_k (x²/4)^k / (k!)²`.
pub fn k0_series(x: f64) -> f64 {
    let y = 0.25 * x * x;
    let lead = -((0.5 * x).ln() + EULER_GAMMA);
    let mut term = 1.0;
    let mut harmonic = 0.0;
    let mut i0 = 1.0;
    let mut tail = 0.0;
    for k in 1..60 {
        let kf = k as f64;
        term *= y / (kf * kf);
        harmonic += 1.0 / kf;
        i0 += term;
        tail += term * harmonic;
        if term * harmonic.max(1.0) < 1e-17 * (i0 * lead.abs() + tail) {
            break;
        }
    }
    lead * i0 + tail
}

/// Steed's method for the continued fraction CF2 of `K_ν`, `ν = 0`.
fn k0_steed_scaled(x: f64) -> f64 {
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut h = d;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let a1 = 0.25;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..100_000 {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < 1e-17 {
            break;
        }
    }
    let _ = h;
    (PI / (2.0 * x)).sqrt() / s
}

/// `√(π/2x) Σ_k a_k x^{-k}` with `a_k = Π_{j≤k} (−(2j−1)²) / (k! 8^k)`.
fn k0_asymptotic_scaled(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..40 {
        let odd = (2 * k - 1) as f64;
        let next = term * -(odd * odd) / (k as f64 * 8.0 * x);
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    (PI / (2.0 * x)).sqrt() * sum
}

/// `∫₀^∞ e^{−x cosh t} dt` by the trapezoid rule, which converges
/// geometrically for this integrand. Used as an independent oracle.
pub fn k0_quadrature(x: f64) -> f64 {
    let h: f64 = 1.0 / 64.0;
    let mut total = 0.5 * (-x).exp();
    let mut t: f64 = h;
    loop {
        let v = (-x * t.cosh()).exp();
        total += v;
        if v < 1e-300 || v < 1e-18 * total {
            break;
        }
        t += h;
    }
    total * h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        let cases = [
            (0.1, 2.427_069_024_702_017),
            (1.0, 0.421_024_438_240_708_34),
            (2.0, 0.113_893_872_749_533_44),
            (5.0, 3.691_098_334_042_594_4e-3),
            (10.0, 1.778_006_231_616_917_5e-5),
        ];
        for (x, v) in cases {
            let got = k0(x).unwrap();
            assert!((got / v - 1.0).abs() < 1e-13, "K0({x}) = {got}, want {v}");
        }
    }

    #[test]
    fn regimes_match_quadrature() {
        let mut x = 0.01;
        while x < 60.0 {
            let q = k0_quadrature(x);
            let v = k0(x).unwrap();
            assert!((v / q - 1.0).abs() < 1e-12, "x = {x}: {v} vs {q}");
            x *= 1.07;
        }
    }

    #[test]
    fn crossovers_are_continuous() {
        let e = SERIES_UP_TO;
        assert!((k0_series(e) / (k0_steed_scaled(e) * (-e).exp()) - 1.0).abs() < 1e-14);
        let e = ASYMPTOTIC_FROM;
        assert!((k0_steed_scaled(e) / k0_asymptotic_scaled(e) - 1.0).abs() < 1e-14);
        assert!((k0_series(3.0) / k0_steed_scaled(3.0) / (-3f64).exp() - 1.0).abs() < 1e-13);
        assert!((k0_steed_scaled(30.0) / k0_asymptotic_scaled(30.0) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn large_argument_asymptotics() {
        for x in [50.0, 200.0, 1000.0] {
            let ratio = k0_scaled(x).unwrap() * (2.0 * x / PI).sqrt();
            assert!((ratio - 1.0).abs() < 0.2 / x);
        }
        assert_eq!(k0(f64::INFINITY).unwrap(), 0.0);
    }

    #[test]
    fn domain() {
        assert!(k0(0.0).is_err());
        assert!(k0(-1.0).is_err());
        assert!(k0(f64::NAN).is_err());
    }
}
