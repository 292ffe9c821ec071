//! The limiting law of `T/n`.
//!
//! The limit is the law of `Σ_{k>=2} E_k` with independent exponential
//! `E_k` of rate `C(k,2)`. Its density and distribution function are
//! alternating series in `k`:
//!
//! ```text
//! f(x) = Σ_{k>=2} (-1)^k C(k,2) (2k-1) e^{-C(k,2) x}
//! F(x) = 1 - Σ_{k>=2} (-1)^k (2k-1) e^{-C(k,2) x}
//! ```
//!
//! and its characteristic function has the closed form
//! `-2πit / cos((π/2) sqrt(1 + 8it))`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::prob::NeumaierSum;

const MAX_TERMS: u64 = 10_000_000;
const CLOSED_FORM_MIN_T: f64 = 1e-3;
/// Series values of `F` below this are checked against the Chernoff bound.
const CHERNOFF_TRIGGER: f64 = 1e-9;
const CHERNOFF_MAX_LOG_THETA: f64 = 20.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LimitError {
    #[error("x = {x} is below x_min = {x_min}; the series error bound is not guaranteed there")]
    BelowXMin { x: f64, x_min: f64 },
    #[error("argument {0} is outside the domain")]
    Domain(f64),
    #[error("invalid configuration: {0}")]
    Config(&'static str),
    #[error("series did not reach tolerance within {0} terms")]
    NoConvergence(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitLawConfig {
    pub tol: f64,
    pub x_min: f64,
    pub product_k: u64,
}

impl Default for LimitLawConfig {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            x_min: 1e-3,
            product_k: 100_000,
        }
    }
}

impl LimitLawConfig {
    pub fn validate(&self) -> Result<(), LimitError> {
        if !(self.tol > 0.0) {
            return Err(LimitError::Config("tol must be positive"));
        }
        if !(self.x_min > 0.0) {
            return Err(LimitError::Config("x_min must be positive"));
        }
        if self.product_k < 2 {
            return Err(LimitError::Config("product_k must be at least 2"));
        }
        Ok(())
    }
}

/// A truncated series value with a bound on the truncation error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesEval {
    pub value: f64,
    pub terms_used: u64,
    pub error_bound: f64,
}

fn pair_count(k: u64) -> f64 {
    (k * (k - 1) / 2) as f64
}

/// Sums `Σ_{k>=2} (-1)^k magnitude(k)` until the magnitudes are decreasing
/// and the next one is below `tol`.
///
/// For both series here the ratio `magnitude(k+1) / magnitude(k)` is
/// decreasing in `k`, so a single decreasing step means the magnitudes
/// decrease from there on and the first omitted term bounds the remainder.
fn alternating_sum(magnitude: impl Fn(u64) -> f64, tol: f64) -> Result<SeriesEval, LimitError> {
    let mut sum = NeumaierSum::default();
    let mut k = 2u64;
    let mut current = magnitude(k);
    loop {
        if k.is_multiple_of(2) {
            sum.add(current);
        } else {
            sum.add(-current);
        }
        let next = magnitude(k + 1);
        if next <= current && next < tol {
            return Ok(SeriesEval {
                value: sum.value(),
                terms_used: k - 1,
                error_bound: next,
            });
        }
        k += 1;
        if k > MAX_TERMS {
            return Err(LimitError::NoConvergence(MAX_TERMS));
        }
        current = next;
    }
}

/// Limit density `f(x)`, defined for `x >= cfg.x_min`.
pub fn density(x: f64, cfg: &LimitLawConfig) -> Result<SeriesEval, LimitError> {
    cfg.validate()?;
    if x.is_nan() {
        return Err(LimitError::Domain(x));
    }
    if x < cfg.x_min {
        return Err(LimitError::BelowXMin { x, x_min: cfg.x_min });
    }
    alternating_sum(
        |k| {
            let c = pair_count(k);
            (-c * x + (c * (2 * k - 1) as f64).ln()).exp()
        },
        cfg.tol,
    )
}

/// `P(Σ_k E_k <= x) <= ∏_k P(E_k <= x) <= ∏_k min(1, C(k,2) x)`.
fn small_x_cdf_bound(x: f64) -> f64 {
    let mut bound = 1.0;
    let mut k = 2u64;
    loop {
        let p = pair_count(k) * x;
        if p >= 1.0 || bound == 0.0 {
            return bound;
        }
        bound *= p;
        k += 1;
    }
}

/// Chernoff bound `F(x) <= e^{θx} ∏_k C(k,2) / (C(k,2) + θ)`, minimized over
/// `θ` by ternary search on `ln θ`. Any `θ > 0` and any truncation of the
/// product give a valid bound.
fn chernoff_cdf_bound(x: f64) -> f64 {
    let log_bound = |theta: f64| {
        let mut acc = NeumaierSum::default();
        acc.add(theta * x);
        let mut k = 2u64;
        loop {
            let c = pair_count(k);
            if c > 1e2 * theta.max(1.0) {
                return acc.value();
            }
            acc.add(-(theta / c).ln_1p());
            k += 1;
        }
    };
    let (mut lo, mut hi) = (0.0f64, CHERNOFF_MAX_LOG_THETA);
    for _ in 0..50 {
        let a = lo + (hi - lo) / 3.0;
        let b = hi - (hi - lo) / 3.0;
        if log_bound(a.exp()) < log_bound(b.exp()) {
            hi = b;
        } else {
            lo = a;
        }
    }
    log_bound((0.5 * (lo + hi)).exp()).min(0.0).exp()
}

/// Limit distribution function `F(x) = ∫_0^x f`.
///
/// Wherever a rigorous upper bound on `F(x)` is within `cfg.tol` the value
/// is reported as 0 with that bound as its error; this covers everything
/// below `cfg.x_min` and the region above it where the series cancels badly.
pub fn cdf(x: f64, cfg: &LimitLawConfig) -> Result<SeriesEval, LimitError> {
    cfg.validate()?;
    if !(x >= 0.0) {
        return Err(LimitError::Domain(x));
    }
    let zero_with = |bound: f64| SeriesEval {
        value: 0.0,
        terms_used: 0,
        error_bound: bound,
    };
    let bound = small_x_cdf_bound(x);
    if bound <= cfg.tol {
        return Ok(zero_with(bound));
    }
    if x < cfg.x_min {
        return Err(LimitError::BelowXMin { x, x_min: cfg.x_min });
    }
    let survival = alternating_sum(
        |k| (-pair_count(k) * x + ((2 * k - 1) as f64).ln()).exp(),
        cfg.tol,
    )?;
    let value = 1.0 - survival.value;
    if value < CHERNOFF_TRIGGER {
        let bound = chernoff_cdf_bound(x);
        if bound <= cfg.tol {
            return Ok(zero_with(bound));
        }
    }
    Ok(SeriesEval {
        value: value.clamp(0.0, 1.0),
        ..survival
    })
}

/// Convenience for callers that only need the value; `x < 0` maps to 0.
pub fn cdf_value(x: f64, cfg: &LimitLawConfig) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    cdf(x, cfg).map(|e| e.value).unwrap_or(0.0)
}

/// `∏_{m=2}^{K} C(m,2) / (C(m,2) - it)`.
pub fn charfn_product(t: f64, k: u64) -> Complex64 {
    let mut value = Complex64::new(1.0, 0.0);
    for m in 2..=k.max(1) {
        let c = pair_count(m);
        value *= c / Complex64::new(c, -t);
    }
    value
}

/// `-2πit / cos((π/2) sqrt(1 + 8it))` on the principal branch of the square
/// root; near `t = 0`, where numerator and denominator both vanish, the
/// truncated product is used instead.
pub fn charfn_closed(t: f64, cfg: &LimitLawConfig) -> Complex64 {
    if t.abs() < CLOSED_FORM_MIN_T {
        return charfn_product(t, cfg.product_k);
    }
    let root = Complex64::new(1.0, 8.0 * t).sqrt();
    let numerator = Complex64::new(0.0, -2.0 * PI * t);
    numerator / (root * (PI / 2.0)).cos()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitMoments {
    pub mean: f64,
    pub variance: f64,
}

/// `Σ_{k>=2} term(k)` for a positive decreasing `term`, using the partial
/// sum to `K` plus the midpoint of the integral bracket
/// `∫_{K+1}^∞ ≤ tail ≤ ∫_K^∞`.
fn sum_with_integral_tail(
    term: impl Fn(f64) -> f64,
    tail_integral: impl Fn(f64) -> f64,
    cutoff: u64,
) -> f64 {
    let mut sum = NeumaierSum::default();
    for k in (2..=cutoff).rev() {
        sum.add(term(k as f64));
    }
    let k = cutoff as f64;
    sum.add(0.5 * (tail_integral(k) + tail_integral(k + 1.0)));
    sum.value()
}

/// Mean and variance of the limit law: `Σ 1/C(k,2)` and `Σ 1/C(k,2)^2`.
pub fn limit_moments(cfg: &LimitLawConfig) -> LimitMoments {
    let tol = cfg.tol.max(1e-15);
    // bracket half-widths are about 1/K^2 and 2/K^4
    let mean_cutoff = (1.0 / tol).sqrt().ceil().min(1e8) as u64;
    let var_cutoff = (2.0 / tol).powf(0.25).ceil().max(10.0) as u64;
    // -ln(1 - 1/a) = ln(a / (a - 1))
    let log_ratio = |a: f64| -(-1.0 / a).ln_1p();
    let mean = sum_with_integral_tail(
        |k| 2.0 / (k * (k - 1.0)),
        |a| 2.0 * log_ratio(a),
        mean_cutoff,
    );
    let variance = sum_with_integral_tail(
        |k| 4.0 / (k * k * (k - 1.0) * (k - 1.0)),
        |a| 4.0 * (1.0 / (a - 1.0) + 1.0 / a - 2.0 * log_ratio(a)),
        var_cutoff,
    );
    LimitMoments { mean, variance }
}

/// `F^{-1}(u)` by bisection to an interval width of `1e-10`.
pub fn inverse_cdf(u: f64, cfg: &LimitLawConfig) -> Result<f64, LimitError> {
    if !(u > 0.0 && u < 1.0) {
        return Err(LimitError::Domain(u));
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while cdf(hi, cfg)?.value < u {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if cdf_value(mid, cfg) < u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
