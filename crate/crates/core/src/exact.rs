//! Exact finite-`n` laws derived from the range-size chain.
//!
//! All operations are generic over [`Prob`], so the same code runs in exact
//! rational arithmetic for small `n` and in compensated `f64` arithmetic
//! where rational denominators would explode.

use num_complex::Complex64;
use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{lambda_leave, lambda_stay, ChainError, RangeChain, Rational};
use crate::prob::{Arithmetic, Prob};

/// Default truncation tolerance for rational computations.
pub const DEFAULT_EXACT_TAIL_TOL: f64 = 1e-12;
/// Default truncation tolerance for float computations.
pub const DEFAULT_FLOAT_TAIL_TOL: f64 = 1e-9;
/// Largest truncated convolution support evaluated in rationals by
/// [`conditional_t1_pmf_auto`].
pub const EXACT_CONVOLUTION_LIMIT: usize = 512;

const MAX_STEPS: u64 = 50_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExactError {
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error("tail tolerance {0} must lie in (0, 1)")]
    TailTolerance(f64),
    #[error("split threshold xi = {xi} must satisfy 2 <= xi <= n = {n}")]
    Split { xi: usize, n: usize },
    #[error("state {m} is outside [2, {n}]")]
    State { m: usize, n: usize },
    #[error("sojourn length must be at least 1")]
    SojournLength,
    #[error("no convergence after {0} steps")]
    StepLimit(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitSource {
    LogLog,
    Override,
}

/// Threshold `ξ` splitting `T` into `T1 = Σ_{m=2}^{ξ} τ_m` and
/// `T2 = Σ_{m>ξ} τ_m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub xi: usize,
    pub source: SplitSource,
}

impl SplitSpec {
    /// `max(2, floor(ln ln n))`.
    pub fn log_log(n: usize) -> Self {
        let nf = n as f64;
        let xi = if nf > std::f64::consts::E {
            nf.ln().ln().floor().max(2.0) as usize
        } else {
            2
        };
        Self {
            xi,
            source: SplitSource::LogLog,
        }
    }

    pub fn with_xi(xi: usize) -> Self {
        Self {
            xi,
            source: SplitSource::Override,
        }
    }

    pub fn validate(&self, n: usize) -> Result<(), ExactError> {
        if self.xi < 2 || self.xi > n {
            return Err(ExactError::Split { xi: self.xi, n });
        }
        Ok(())
    }
}

/// Probability mass function on `offset, offset + 1, ...` with the mass not
/// enumerated carried in `tail_mass`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePmf<P> {
    offset: u64,
    masses: Vec<P>,
    tail_mass: P,
}

impl<P: Prob> DiscretePmf<P> {
    pub fn new(offset: u64, masses: Vec<P>, tail_mass: P) -> Self {
        Self {
            offset,
            masses,
            tail_mass,
        }
    }

    pub fn arithmetic(&self) -> Arithmetic {
        P::ARITHMETIC
    }

    pub fn offset(&self) -> u64 {
        self.offset
    }

    pub fn masses(&self) -> &[P] {
        &self.masses
    }

    pub fn tail_mass(&self) -> &P {
        &self.tail_mass
    }

    /// Last enumerated support point.
    pub fn support_end(&self) -> u64 {
        self.offset + self.masses.len().saturating_sub(1) as u64
    }

    pub fn prob(&self, t: u64) -> P {
        if t < self.offset {
            return P::zero();
        }
        self.masses
            .get((t - self.offset) as usize)
            .cloned()
            .unwrap_or_else(P::zero)
    }

    /// `P(X <= t)` over the enumerated support.
    pub fn cdf(&self, t: u64) -> P {
        if t < self.offset {
            return P::zero();
        }
        let upto = ((t - self.offset) as usize + 1).min(self.masses.len());
        P::sum_all(self.masses[..upto].iter().cloned())
    }

    /// Cumulative masses as floats, indexed like `masses`.
    pub fn cdf_table_f64(&self) -> Vec<f64> {
        let mut acc = crate::prob::NeumaierSum::default();
        self.masses
            .iter()
            .map(|p| {
                acc.add(p.to_f64());
                acc.value()
            })
            .collect()
    }

    pub fn total_mass(&self) -> P {
        P::sum_all(self.masses.iter().cloned()) + self.tail_mass.clone()
    }

    /// Mean over the enumerated support (ignores `tail_mass`).
    pub fn mean_f64(&self) -> f64 {
        f64::sum_all(
            self.masses
                .iter()
                .enumerate()
                .map(|(i, p)| (self.offset + i as u64) as f64 * p.to_f64()),
        )
    }

    pub fn to_f64(&self) -> DiscretePmf<f64> {
        DiscretePmf {
            offset: self.offset,
            masses: self.masses.iter().map(Prob::to_f64).collect(),
            tail_mass: self.tail_mass.to_f64(),
        }
    }

    /// `Σ_k P(X = k) e^{ikt}` over the enumerated support.
    pub fn characteristic(&self, t: f64) -> Complex64 {
        let mut re = crate::prob::NeumaierSum::default();
        let mut im = crate::prob::NeumaierSum::default();
        for (i, p) in self.masses.iter().enumerate() {
            let k = (self.offset + i as u64) as f64;
            let p = p.to_f64();
            let (s, c) = (k * t).sin_cos();
            re.add(p * c);
            im.add(p * s);
        }
        Complex64::new(re.value(), im.value())
    }
}

/// A pmf in whichever arithmetic was used to compute it.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyPmf {
    Exact(DiscretePmf<Rational>),
    Float(DiscretePmf<f64>),
}

impl AnyPmf {
    pub fn arithmetic(&self) -> Arithmetic {
        match self {
            AnyPmf::Exact(_) => Arithmetic::Exact,
            AnyPmf::Float(_) => Arithmetic::Float,
        }
    }

    pub fn to_f64(&self) -> DiscretePmf<f64> {
        match self {
            AnyPmf::Exact(p) => p.to_f64(),
            AnyPmf::Float(p) => p.clone(),
        }
    }
}

fn check_tail_tol(tail_tol: f64) -> Result<(), ExactError> {
    if !(tail_tol > 0.0 && tail_tol < 1.0) {
        return Err(ExactError::TailTolerance(tail_tol));
    }
    Ok(())
}

fn rows_as<P: Prob>(chain: &RangeChain) -> Vec<Vec<P>> {
    (1..=chain.n())
        .map(|m| {
            let (nums, den) = chain.row_numerators(m).expect("state in range");
            nums.iter().map(|num| P::from_ratio(num, den)).collect()
        })
        .collect()
}

/// Law of the coalescence time `T`.
///
/// Step 1 draws `|Range(g_1)|` from row `n`, so `P(T = 1)` is the mass that
/// lands on state 1 immediately. The sub-distribution on states `>= 2` is
/// then pushed through the chain until the unabsorbed mass drops below
/// `tail_tol`.
pub fn time_to_constant_pmf<P: Prob>(
    chain: &RangeChain,
    tail_tol: f64,
) -> Result<DiscretePmf<P>, ExactError> {
    check_tail_tol(tail_tol)?;
    if P::ARITHMETIC == Arithmetic::Exact {
        let exact = time_to_constant_pmf_integer(chain, tail_tol)?;
        let masses = exact.masses.iter().map(P::from_rational).collect();
        return Ok(DiscretePmf::new(1, masses, P::from_rational(&exact.tail_mass)));
    }
    let n = chain.n();
    let rows = rows_as::<P>(chain);
    // dist[s] = P(|Range(g_t)| = s) for s >= 2
    let mut dist: Vec<P> = vec![P::zero(); n + 1];
    for (r, p) in rows[n - 1].iter().enumerate().skip(1) {
        dist[r + 1] = p.clone();
    }
    let mut masses = vec![rows[n - 1][0].clone()];
    let mut next: Vec<P> = vec![P::zero(); n + 1];
    let mut steps = 1u64;
    loop {
        let remaining = P::sum_all(dist[2..].iter().cloned());
        if remaining.to_f64() < tail_tol {
            return Ok(DiscretePmf::new(1, masses, remaining));
        }
        if steps >= MAX_STEPS {
            return Err(ExactError::StepLimit(steps));
        }
        for slot in next.iter_mut() {
            *slot = P::zero();
        }
        let mut absorbed = Vec::with_capacity(n);
        for s in 2..=n {
            if dist[s].is_zero() {
                continue;
            }
            let row = &rows[s - 1];
            absorbed.push(dist[s].clone() * &row[0]);
            for r in 2..=s {
                let flow = dist[s].clone() * &row[r - 1];
                next[r] += flow;
            }
        }
        for slot in next.iter_mut() {
            *slot = std::mem::replace(slot, P::zero()).prune();
        }
        std::mem::swap(&mut dist, &mut next);
        masses.push(P::sum_all(absorbed));
        steps += 1;
    }
}

/// Exact law of `T` with every mass at step `t` kept as an integer over the
/// common denominator `n^{nt}`; reduced to lowest terms only on output.
fn time_to_constant_pmf_integer(
    chain: &RangeChain,
    tail_tol: f64,
) -> Result<DiscretePmf<Rational>, ExactError> {
    let n = chain.n();
    // numerators of P(s -> r) rescaled to the denominator n^n
    let rows: Vec<Vec<BigUint>> = (1..=n)
        .map(|s| {
            let (nums, _) = chain.row_numerators(s).expect("state in range");
            let scale = BigUint::from(n).pow((n - s) as u32);
            nums.iter().map(|x| x * &scale).collect()
        })
        .collect();
    let step_den = BigUint::from(n).pow(n as u32);
    let (start, _) = chain.row_numerators(n).expect("state in range");
    let mut dist: Vec<BigUint> = vec![BigUint::zero(); n + 1];
    dist[2..].clone_from_slice(&start[1..]);
    let mut den = step_den.clone();
    let mut masses = vec![Rational::new(start[0].clone().into(), den.clone().into())];
    let mut steps = 1u64;
    loop {
        let remaining: BigUint = dist[2..].iter().sum();
        if crate::chain::ratio_to_f64(&remaining, &den) < tail_tol {
            let tail = Rational::new(remaining.into(), den.into());
            return Ok(DiscretePmf::new(1, masses, tail));
        }
        if steps >= MAX_STEPS {
            return Err(ExactError::StepLimit(steps));
        }
        let mut next: Vec<BigUint> = vec![BigUint::zero(); n + 1];
        let mut absorbed = BigUint::zero();
        for s in 2..=n {
            if dist[s].is_zero() {
                continue;
            }
            let row = &rows[s - 1];
            absorbed += &dist[s] * &row[0];
            for r in 2..=s {
                next[r] += &dist[s] * &row[r - 1];
            }
        }
        den *= &step_den;
        masses.push(Rational::new(absorbed.into(), den.clone().into()));
        dist = next;
        steps += 1;
    }
}

/// `P(τ_m = k | τ_m > 0) = λ_m^{k-1} (1 - λ_m)`.
pub fn tau_conditional_pmf(n: usize, m: usize, k: u64) -> Result<Rational, ExactError> {
    if m < 2 || m > n {
        return Err(ExactError::State { m, n });
    }
    if k < 1 {
        return Err(ExactError::SojournLength);
    }
    let stay = lambda_stay(n, m)?;
    let leave = Rational::one() - &stay;
    Ok(num_traits::pow(stay, (k - 1) as usize) * leave)
}

/// Number of leading terms of a geometric law with ratio `stay` needed so
/// that the omitted tail `stay^K` is at most `tol`.
fn geometric_cutoff(stay: f64, tol: f64) -> usize {
    if stay <= 0.0 {
        return 1;
    }
    let mut k = (tol.ln() / stay.ln()).ceil().max(1.0) as usize;
    while stay.powi(k as i32) > tol {
        k += 1;
    }
    // one spare term covers rounding in the float power
    k + 1
}

fn convolve<P: Prob>(a: &[P], b: &[P]) -> Vec<P> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let len = a.len() + b.len() - 1;
    (0..len)
        .map(|k| {
            let lo = k.saturating_sub(b.len() - 1);
            let hi = k.min(a.len() - 1);
            P::sum_all((lo..=hi).map(|i| a[i].clone() * &b[k - i]))
        })
        .collect()
}

fn t1_cutoffs(n: usize, split: &SplitSpec, tail_tol: f64) -> Result<Vec<usize>, ExactError> {
    split.validate(n)?;
    check_tail_tol(tail_tol)?;
    let factors = (split.xi - 1) as f64;
    (2..=split.xi)
        .map(|m| {
            let stay = <f64 as Prob>::from_rational(&lambda_stay(n, m)?);
            Ok(geometric_cutoff(stay, tail_tol / factors))
        })
        .collect()
}

/// Law of `T1 = Σ_{m=2}^{ξ} τ_m` given that every state in `[2, ξ]` is
/// visited, with the `τ_m` independent geometrics.
///
/// Each factor is truncated so that its omitted tail is at most
/// `tail_tol / (ξ - 1)`; the convolution of the truncated factors then
/// misses `1 - ∏(1 - tail_m) < tail_tol`.
pub fn conditional_t1_pmf<P: Prob>(
    n: usize,
    split: &SplitSpec,
    tail_tol: f64,
) -> Result<DiscretePmf<P>, ExactError> {
    let cutoffs = t1_cutoffs(n, split, tail_tol)?;
    let mut acc: Vec<P> = vec![P::one()];
    let mut kept = P::one();
    for (m, &len) in (2..=split.xi).zip(&cutoffs) {
        let stay = P::from_rational(&lambda_stay(n, m)?);
        let leave = P::from_rational(&lambda_leave(n, m)?);
        let mut factor = Vec::with_capacity(len);
        let mut power = P::one();
        for _ in 0..len {
            factor.push(power.clone() * &leave);
            power *= &stay;
        }
        kept *= P::one() - power;
        acc = convolve(&acc, &factor);
    }
    let tail = P::one() - kept;
    Ok(DiscretePmf::new((split.xi - 1) as u64, acc, tail))
}

/// [`conditional_t1_pmf`] in rationals when the truncated support is at most
/// [`EXACT_CONVOLUTION_LIMIT`] points, in floats otherwise.
pub fn conditional_t1_pmf_auto(
    n: usize,
    split: &SplitSpec,
    tail_tol: f64,
) -> Result<AnyPmf, ExactError> {
    let support: usize = t1_cutoffs(n, split, tail_tol)?.iter().sum();
    if support <= EXACT_CONVOLUTION_LIMIT {
        conditional_t1_pmf::<Rational>(n, split, tail_tol).map(AnyPmf::Exact)
    } else {
        conditional_t1_pmf::<f64>(n, split, tail_tol).map(AnyPmf::Float)
    }
}

/// `E(e^{itT1} | A) = e^{it(ξ-1)} ∏_{k=2}^{ξ} (1 - λ_k) / (1 - λ_k e^{it})`.
pub fn conditional_t1_charfn(n: usize, split: &SplitSpec, t: f64) -> Result<Complex64, ExactError> {
    split.validate(n)?;
    let phase = Complex64::new(0.0, t).exp();
    let mut value = Complex64::new(0.0, t * (split.xi - 1) as f64).exp();
    for k in 2..=split.xi {
        let stay = <f64 as Prob>::from_rational(&lambda_stay(n, k)?);
        let leave = <f64 as Prob>::from_rational(&lambda_leave(n, k)?);
        // 1 - λ e^{it} = (1 - λ) + λ (1 - e^{it}), kept accurate for λ near 1
        let denom = Complex64::new(leave, 0.0) + stay * (Complex64::new(1.0, 0.0) - phase);
        value *= leave / denom;
    }
    Ok(value)
}

fn check_visit_state(n: usize, m: usize) -> Result<(), ExactError> {
    if m < 2 || m > n {
        return Err(ExactError::State { m, n });
    }
    Ok(())
}

/// `P(τ_m > 0)`: the probability that the range ever has exactly `m`
/// elements.
///
/// Downward recursion on the starting state: `v(m) = 1`, and for `s > m`
/// `v(s) = Σ_{r=m}^{s-1} P(s -> r) v(r) / (1 - P(s -> s))`; the answer
/// averages `v` over the law of `|Range(g_1)|`.
pub fn visit_probability<P: Prob>(chain: &RangeChain, m: usize) -> Result<P, ExactError> {
    let n = chain.n();
    check_visit_state(n, m)?;
    let rows = rows_as::<P>(chain);
    let mut v: Vec<P> = vec![P::zero(); n + 1];
    v[m] = P::one();
    for s in (m + 1)..=n {
        let row = &rows[s - 1];
        let inflow = P::sum_all((m..s).map(|r| row[r - 1].clone() * &v[r]));
        let leave = P::one() - row[s - 1].clone();
        v[s] = inflow / leave;
    }
    let start = &rows[n - 1];
    Ok(P::sum_all((m..=n).map(|s| start[s - 1].clone() * &v[s])))
}

/// All visit probabilities at once, indexed by state (`0` and `1` unused).
///
/// Forward pass over states in decreasing order: the mass entering `s` is
/// the start mass at `s` plus, for every higher state `u`, the probability
/// of visiting `u` times the chance its sojourn exits into `s`.
pub fn visit_probabilities<P: Prob>(chain: &RangeChain) -> Vec<P> {
    let n = chain.n();
    let rows = rows_as::<P>(chain);
    let mut visit: Vec<P> = vec![P::zero(); n + 1];
    let mut exit_rate: Vec<P> = vec![P::zero(); n + 1];
    for u in (2..=n).rev() {
        let row_u = &rows[u - 1];
        let from_above = P::sum_all(((u + 1)..=n).map(|w| exit_rate[w].clone() * &rows[w - 1][u - 1]));
        visit[u] = rows[n - 1][u - 1].clone() + from_above;
        let leave = P::one() - row_u[u - 1].clone();
        exit_rate[u] = visit[u].clone() / leave;
    }
    visit
}

/// `E(N)` where `N` counts the states `m >= 2` ever visited.
pub fn expected_visited_count<P: Prob>(chain: &RangeChain) -> P {
    P::sum_all(visit_probabilities::<P>(chain).into_iter().skip(2))
}

/// `E(T) = 1 + Σ_{m>=2} P(τ_m > 0) / (1 - λ_m)`.
pub fn expected_time_to_constant<P: Prob>(chain: &RangeChain) -> P {
    let visits = visit_probabilities::<P>(chain);
    let sojourns = (2..=chain.n()).map(|m| {
        let (nums, den) = chain.row_numerators(m).expect("state in range");
        let leave = P::one() - P::from_ratio(&nums[m - 1], den);
        visits[m].clone() / leave
    });
    P::one() + P::sum_all(sojourns)
}
