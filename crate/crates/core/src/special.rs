//! Special functions at the orders the outage expressions need: gamma and
//! beta at half-integers, the error function, and the lower incomplete gamma
//! function of order one half.

use std::f64::consts::PI;

use crate::error::{invalid_input, Result};

const SQRT_PI: f64 = 1.772_453_850_905_516;
const FRAC_2_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;

/// Returns `2x` if `x` is a positive half-integer.
fn twice_half_integer(x: f64) -> Result<u32> {
    let t = 2.0 * x;
    if x > 0.0 && t == t.round() && t <= 340.0 {
        Ok(t as u32)
    } else {
        Err(invalid_input(format!(
            "{x} is not a supported half-integer order"
        )))
    }
}

/// `Gamma(x)` for `x` in `{1/2, 1, 3/2, ...}` via `Gamma(x + 1) = x Gamma(x)`.
pub fn gamma_half_integer(x: f64) -> Result<f64> {
    let t = twice_half_integer(x)?;
    // start from Gamma(1/2) or Gamma(1) and climb
    let (mut g, mut k) = if t % 2 == 1 { (SQRT_PI, 1) } else { (1.0, 2) };
    while k < t {
        g *= k as f64 / 2.0;
        k += 2;
    }
    Ok(g)
}

/// `ln Gamma(x)` at half-integers; stays finite where `gamma_half_integer` overflows.
pub fn ln_gamma_half_integer(x: f64) -> Result<f64> {
    let t = twice_half_integer(x)?;
    let (mut g, mut k) = if t % 2 == 1 { (SQRT_PI.ln(), 1) } else { (0.0, 2) };
    while k < t {
        g += (k as f64 / 2.0).ln();
        k += 2;
    }
    Ok(g)
}

/// `B(a, b) = Gamma(a) Gamma(b) / Gamma(a + b)` for half-integer `a`, `b`.
pub fn beta(a: f64, b: f64) -> Result<f64> {
    Ok((ln_gamma_half_integer(a)? + ln_gamma_half_integer(b)? - ln_gamma_half_integer(a + b)?).exp())
}

/// `ln n!`.
pub fn ln_factorial(n: u32) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Error function, accurate to about 1e-15 absolute.
pub fn erf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let a = x.abs();
    let v = if a < 3.0 { erf_series(a) } else { 1.0 - erfc_cf(a) };
    v.copysign(x)
}

/// Complementary error function `1 - erf(x)`.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    if x < 3.0 {
        1.0 - erf_series(x)
    } else {
        erfc_cf(x)
    }
}

// erf(x) = 2/sqrt(pi) e^{-x^2} sum_n 2^n x^{2n+1} / (2n+1)!!
// Every term is positive, so there is no cancellation.
fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut n = 0u32;
    while term > sum * 1e-17 {
        n += 1;
        term *= 2.0 * x2 / (2 * n + 1) as f64;
        sum += term;
    }
    FRAC_2_SQRT_PI * (-x2).exp() * sum
}

// erfc(x) = e^{-x^2}/sqrt(pi) / (x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))), modified Lentz.
fn erfc_cf(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for n in 1..500 {
        let an = n as f64 / 2.0;
        d = x + an * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = x + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x * x).exp() / (PI.sqrt() * f)
}

/// Lower incomplete gamma function `gamma(1/2, x) = sqrt(pi) erf(sqrt(x))`.
pub fn lower_incomplete_gamma_half(x: f64) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(invalid_input(format!("gamma(1/2, x) needs x >= 0, got {x}")));
    }
    Ok(SQRT_PI * erf(x.sqrt()))
}
