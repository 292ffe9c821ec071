//! Goodness-of-fit between simulated `T/n` and the limit law.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::limitlaw::{cdf_value, LimitError, LimitLawConfig};
use crate::montecarlo::{SimSummary, TimeSamples};

/// Mean of the limit law, `Σ_{k>=2} 1/C(k,2)`.
pub const LIMIT_MEAN: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("sample is empty")]
    EmptySample,
    #[error("alpha = {0} must lie in (0, 1)")]
    Alpha(f64),
    #[error("sample count must be positive")]
    ZeroCount,
    #[error(transparent)]
    Limit(#[from] LimitError),
}

/// One-sample Kolmogorov–Smirnov statistic
/// `max_i max(|i/N - F(x_i)|, |(i-1)/N - F(x_i)|)` over sorted samples.
pub fn ks_statistic(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64, AnalysisError> {
    if sorted.is_empty() {
        return Err(AnalysisError::EmptySample);
    }
    debug_assert!(sorted.windows(2).all(|w| w[0] <= w[1]));
    let total = sorted.len() as f64;
    let mut sup: f64 = 0.0;
    let mut last: Option<(f64, f64)> = None;
    for (i, &x) in sorted.iter().enumerate() {
        let fx = match last {
            Some((px, fx)) if px == x => fx,
            _ => cdf(x),
        };
        last = Some((x, fx));
        let above = (i + 1) as f64 / total - fx;
        let below = fx - i as f64 / total;
        sup = sup.max(above.abs()).max(below.abs());
    }
    Ok(sup)
}

/// Dvoretzky–Kiefer–Wolfowitz half-width `sqrt(ln(2/α) / (2N))`.
///
/// Not clamped: values above 1 mean the band is vacuous.
pub fn dkw_epsilon(num_samples: u64, alpha: f64) -> Result<f64, AnalysisError> {
    if num_samples == 0 {
        return Err(AnalysisError::ZeroCount);
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(AnalysisError::Alpha(alpha));
    }
    Ok(((2.0 / alpha).ln() / (2.0 * num_samples as f64)).sqrt())
}

/// Two-sample KS statistic `sup_x |F_a(x) - F_b(x)|` for sorted inputs.
pub fn two_sample_ks(a: &[f64], b: &[f64]) -> Result<f64, AnalysisError> {
    if a.is_empty() || b.is_empty() {
        return Err(AnalysisError::EmptySample);
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut sup: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        sup = sup.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(sup)
}

/// Asymptotic two-sample KS rejection threshold at level `alpha`.
pub fn two_sample_threshold(na: u64, nb: u64, alpha: f64) -> Result<f64, AnalysisError> {
    if na == 0 || nb == 0 {
        return Err(AnalysisError::ZeroCount);
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(AnalysisError::Alpha(alpha));
    }
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    Ok(c * ((na + nb) as f64 / (na as f64 * nb as f64)).sqrt())
}

/// `sup_t |ECDF(t) - F(t)|` for integer-valued samples against an integer
/// CDF, checked at every integer up to `last`.
pub fn discrete_ecdf_distance(
    sorted: &[u64],
    cdf: impl Fn(u64) -> f64,
    last: u64,
) -> Result<f64, AnalysisError> {
    if sorted.is_empty() {
        return Err(AnalysisError::EmptySample);
    }
    let total = sorted.len() as f64;
    let end = last.max(*sorted.last().expect("nonempty"));
    let mut idx = 0;
    let mut sup: f64 = 0.0;
    for t in 0..=end {
        while idx < sorted.len() && sorted[idx] <= t {
            idx += 1;
        }
        sup = sup.max((idx as f64 / total - cdf(t)).abs());
    }
    Ok(sup)
}

/// KS measurement from stored samples; `resolution` is how far a
/// sketch-based bound can overshoot the exact statistic (0 for full stores).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsMeasurement {
    pub statistic: f64,
    pub resolution: f64,
}

pub fn ks_from_samples(
    samples: &TimeSamples,
    cdf: impl Fn(f64) -> f64,
) -> Result<KsMeasurement, AnalysisError> {
    match samples {
        TimeSamples::Full { .. } => {
            let sorted = samples.sorted_scaled().expect("full store");
            Ok(KsMeasurement {
                statistic: ks_statistic(&sorted, cdf)?,
                resolution: 0.0,
            })
        }
        TimeSamples::Sketch(sketch) => {
            let total = sketch.len();
            if total == 0 {
                return Err(AnalysisError::EmptySample);
            }
            let total = total as f64;
            let mut cum = 0u64;
            let mut sup: f64 = 0.0;
            let mut resolution: f64 = 0.0;
            for (lo, hi, count) in sketch.bins() {
                let f_lo = cdf(lo);
                let f_hi = if hi.is_finite() { cdf(hi) } else { 1.0 };
                let before = cum as f64 / total;
                cum += count;
                let after = cum as f64 / total;
                sup = sup.max(after - f_lo).max(f_hi - before);
                resolution = resolution.max(f_hi - f_lo);
            }
            Ok(KsMeasurement {
                statistic: sup,
                resolution,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Check {
    Ks,
    Mean,
    En,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub alpha: f64,
    /// Added to the DKW half-width to allow for the distance between the
    /// finite-`n` law and its limit.
    pub finite_n_allowance: f64,
    /// Largest accepted `|mean T/n - 2|`.
    pub mean_tolerance: f64,
    /// Accepted range of `mean N / sqrt(2πn)`.
    pub en_band: (f64, f64),
    pub checks: Vec<Check>,
}

impl FitConfig {
    pub fn with_alpha(alpha: f64) -> Self {
        Self {
            alpha,
            finite_n_allowance: 0.04,
            mean_tolerance: 0.15,
            en_band: (0.85, 1.15),
            checks: vec![Check::Ks, Check::Mean],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub check: Check,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub pass: bool,
}

impl Verdict {
    fn within(check: Check, value: f64, lower: f64, upper: f64) -> Self {
        Self {
            check,
            value,
            lower,
            upper,
            pass: value >= lower && value <= upper,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub n: usize,
    pub samples: u64,
    pub seed: u64,
    pub alpha: f64,
    pub ks_statistic: f64,
    /// DKW half-width, clamped to 1.
    pub dkw_epsilon: f64,
    /// The unclamped half-width exceeded 1.
    pub dkw_vacuous: bool,
    pub sketch_resolution: f64,
    pub ks_threshold: f64,
    pub mean_t_over_n: f64,
    pub mean_error: f64,
    pub en_ratio: f64,
    pub verdicts: Vec<Verdict>,
}

impl FitReport {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }
}

/// Compares a simulation with the limit law using the default checks
/// (KS and mean).
pub fn fit_report(
    summary: &SimSummary,
    law: &LimitLawConfig,
    alpha: f64,
) -> Result<FitReport, AnalysisError> {
    fit_report_with(summary, law, &FitConfig::with_alpha(alpha))
}

pub fn fit_report_with(
    summary: &SimSummary,
    law: &LimitLawConfig,
    cfg: &FitConfig,
) -> Result<FitReport, AnalysisError> {
    law.validate()?;
    let stats = &summary.stats;
    let raw_eps = dkw_epsilon(stats.samples, cfg.alpha)?;
    let ks = ks_from_samples(&summary.samples, |x| cdf_value(x, law))?;
    let ks_threshold = raw_eps + cfg.finite_n_allowance + ks.resolution;
    let mean_error = (stats.mean_t_over_n - LIMIT_MEAN).abs();
    let en_ratio = stats.mean_visited / (2.0 * std::f64::consts::PI * stats.n as f64).sqrt();
    let verdicts = cfg
        .checks
        .iter()
        .map(|check| match check {
            Check::Ks => Verdict::within(Check::Ks, ks.statistic, 0.0, ks_threshold),
            Check::Mean => Verdict::within(Check::Mean, mean_error, 0.0, cfg.mean_tolerance),
            Check::En => Verdict::within(Check::En, en_ratio, cfg.en_band.0, cfg.en_band.1),
        })
        .collect();
    Ok(FitReport {
        n: stats.n,
        samples: stats.samples,
        seed: stats.seed,
        alpha: cfg.alpha,
        ks_statistic: ks.statistic,
        dkw_epsilon: raw_eps.min(1.0),
        dkw_vacuous: raw_eps > 1.0,
        sketch_resolution: ks.resolution,
        ks_threshold,
        mean_t_over_n: stats.mean_t_over_n,
        mean_error,
        en_ratio,
        verdicts,
    })
}
