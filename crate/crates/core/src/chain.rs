//! Exact combinatorics of the range-size process.
//!
//! If `g_{t-1}` has an `m`-element range, the range of `g_t = f_t ∘ g_{t-1}`
//! is the set of distinct values among the `m` independent uniform images
//! `f_t(r_1), ..., f_t(r_m)`. The range size is therefore a Markov chain on
//! `{1, ..., n}` whose row `m` is the occupancy law of `m` balls thrown into
//! `n` bins:
//!
//! ```text
//! P(m -> r) = S(m, r) * n (n-1) ... (n-r+1) / n^m
//! ```
//!
//! Everything here is exact. Rows keep their numerators over the common
//! denominator `n^m`, so the row-sum invariant is a single integer equality.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

/// Exact rational number in lowest terms with a positive denominator.
pub type Rational = BigRational;

/// Largest `n` for which [`build_chain`] materializes the exact chain.
pub const DEFAULT_EXACT_CEILING: usize = 400;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChainError {
    #[error("ground set size must be positive")]
    EmptyGroundSet,
    #[error("state {m} is outside [1, {n}]")]
    StateOutOfRange { n: usize, m: usize },
    #[error("target state {r} is outside [1, {m}]")]
    TargetOutOfRange { m: usize, r: usize },
    #[error("n = {n} exceeds the exact-arithmetic ceiling of {ceiling}; use Monte Carlo instead")]
    CeilingExceeded { n: usize, ceiling: usize },
}

fn check_state(n: usize, m: usize) -> Result<(), ChainError> {
    if n == 0 {
        return Err(ChainError::EmptyGroundSet);
    }
    if m == 0 || m > n {
        return Err(ChainError::StateOutOfRange { n, m });
    }
    Ok(())
}

fn big(x: usize) -> BigUint {
    BigUint::from(x)
}

fn ratio(num: BigUint, den: BigUint) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Converts `num / den` to the nearest `f64` without overflowing on huge
/// operands.
pub(crate) fn ratio_to_f64(num: &BigUint, den: &BigUint) -> f64 {
    Rational::new_raw(BigInt::from(num.clone()), BigInt::from(den.clone()))
        .to_f64()
        .unwrap_or(0.0)
}

/// `λ_m = ∏_{j=1}^{m-1} (1 - j/n)`: the probability that an `m`-element range
/// keeps its size under one more composition.
pub fn lambda_stay(n: usize, m: usize) -> Result<Rational, ChainError> {
    check_state(n, m)?;
    let num = falling_factorial(n - 1, m - 1);
    let den = big(n).pow((m - 1) as u32);
    Ok(ratio(num, den))
}

/// `1 - λ_m`, exactly.
pub fn lambda_leave(n: usize, m: usize) -> Result<Rational, ChainError> {
    Ok(Rational::one() - lambda_stay(n, m)?)
}

/// `n (n-1) ... (n-r+1)`; equals 1 for `r = 0` and 0 for `r > n`.
pub fn falling_factorial(n: usize, r: usize) -> BigUint {
    if r > n {
        return BigUint::zero();
    }
    ((n - r + 1)..=n).fold(BigUint::one(), |acc, k| acc * big(k))
}

/// Stirling number of the second kind `S(m, r)`.
///
/// Computes a single row of the triangle `S(i, j) = j S(i-1, j) + S(i-1, j-1)`
/// truncated at column `r`.
pub fn stirling2(m: usize, r: usize) -> BigUint {
    if r > m {
        return BigUint::zero();
    }
    if m == 0 {
        return BigUint::one();
    }
    if r == 0 {
        return BigUint::zero();
    }
    let mut row = vec![BigUint::zero(); r + 1];
    row[0] = BigUint::one();
    for i in 1..=m {
        for j in (1..=r.min(i)).rev() {
            let carried = std::mem::take(&mut row[j]) * big(j);
            row[j] = carried + &row[j - 1];
        }
        row[0] = BigUint::zero();
    }
    std::mem::take(&mut row[r])
}

/// Memoized triangle of Stirling numbers of the second kind, keyed on `(m, r)`.
#[derive(Debug, Clone)]
pub struct Stirling2Table {
    rows: Vec<Vec<BigUint>>,
}

impl Stirling2Table {
    /// Builds rows `0..=max_m`.
    pub fn up_to(max_m: usize) -> Self {
        let mut rows: Vec<Vec<BigUint>> = Vec::with_capacity(max_m + 1);
        rows.push(vec![BigUint::one()]);
        for m in 1..=max_m {
            let prev = &rows[m - 1];
            let mut row = vec![BigUint::zero(); m + 1];
            for r in 1..=m {
                let mut s = prev.get(r - 1).cloned().unwrap_or_default();
                if let Some(p) = prev.get(r) {
                    s += p * big(r);
                }
                row[r] = s;
            }
            rows.push(row);
        }
        Self { rows }
    }

    pub fn max_m(&self) -> usize {
        self.rows.len() - 1
    }

    /// `S(m, r)`, or `None` when `m` lies beyond the table.
    pub fn get(&self, m: usize, r: usize) -> Option<BigUint> {
        let row = self.rows.get(m)?;
        Some(row.get(r).cloned().unwrap_or_default())
    }

    /// Row `m` as a slice indexed by `r` in `0..=m`.
    pub fn row(&self, m: usize) -> Option<&[BigUint]> {
        self.rows.get(m).map(Vec::as_slice)
    }
}

/// Probability that `m` independent uniform values in `[n]` take exactly `r`
/// distinct values.
pub fn transition_prob(n: usize, m: usize, r: usize) -> Result<Rational, ChainError> {
    check_state(n, m)?;
    if r == 0 || r > m {
        return Err(ChainError::TargetOutOfRange { m, r });
    }
    let num = stirling2(m, r) * falling_factorial(n, r);
    let den = big(n).pow(m as u32);
    Ok(ratio(num, den))
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Row {
    /// Numerators for targets `r = 1..=m`, over `denominator`.
    numerators: Vec<BigUint>,
    denominator: BigUint,
}

/// The range-size Markov chain for a fixed ground-set size `n`.
///
/// Row `m` holds `P(m -> r)` for `r = 1..=m`; the chain is lower-triangular
/// and state 1 is absorbing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RangeChain {
    n: usize,
    rows: Vec<Row>,
}

/// Builds the exact chain, refusing `n` above [`DEFAULT_EXACT_CEILING`].
pub fn build_chain(n: usize) -> Result<RangeChain, ChainError> {
    RangeChain::build_with_ceiling(n, DEFAULT_EXACT_CEILING)
}

impl RangeChain {
    pub fn build_with_ceiling(n: usize, ceiling: usize) -> Result<Self, ChainError> {
        if n == 0 {
            return Err(ChainError::EmptyGroundSet);
        }
        if n > ceiling {
            return Err(ChainError::CeilingExceeded { n, ceiling });
        }
        let falling: Vec<BigUint> = {
            let mut acc = Vec::with_capacity(n + 1);
            acc.push(BigUint::one());
            for r in 1..=n {
                let next = &acc[r - 1] * big(n - r + 1);
                acc.push(next);
            }
            acc
        };
        let n_big = big(n);
        let mut rows = Vec::with_capacity(n);
        let mut stirling = vec![BigUint::one()];
        let mut denominator = BigUint::one();
        for m in 1..=n {
            let mut next = vec![BigUint::zero(); m + 1];
            for r in 1..=m {
                let mut s = stirling[r - 1].clone();
                if let Some(p) = stirling.get(r) {
                    s += p * big(r);
                }
                next[r] = s;
            }
            stirling = next;
            denominator *= &n_big;
            let numerators = (1..=m).map(|r| &stirling[r] * &falling[r]).collect();
            rows.push(Row {
                numerators,
                denominator: denominator.clone(),
            });
        }
        Ok(Self { n, rows })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn row_ref(&self, m: usize) -> Result<&Row, ChainError> {
        check_state(self.n, m)?;
        Ok(&self.rows[m - 1])
    }

    /// `P(m -> r)` in lowest terms.
    pub fn prob(&self, m: usize, r: usize) -> Result<Rational, ChainError> {
        let row = self.row_ref(m)?;
        if r == 0 || r > m {
            return Err(ChainError::TargetOutOfRange { m, r });
        }
        Ok(ratio(row.numerators[r - 1].clone(), row.denominator.clone()))
    }

    /// Row `m` as rationals indexed by `r - 1`.
    pub fn row(&self, m: usize) -> Result<Vec<Rational>, ChainError> {
        let row = self.row_ref(m)?;
        Ok(row
            .numerators
            .iter()
            .map(|num| ratio(num.clone(), row.denominator.clone()))
            .collect())
    }

    /// Numerators of row `m` over their shared denominator `n^m`.
    pub fn row_numerators(&self, m: usize) -> Result<(&[BigUint], &BigUint), ChainError> {
        let row = self.row_ref(m)?;
        Ok((&row.numerators, &row.denominator))
    }

    /// `P(m -> m)`, which equals `λ_m`.
    pub fn stay(&self, m: usize) -> Result<Rational, ChainError> {
        self.prob(m, m)
    }

    /// True when every row sums to exactly 1.
    pub fn rows_sum_to_one(&self) -> bool {
        self.rows.iter().all(|row| {
            let total: BigUint = row.numerators.iter().sum();
            total == row.denominator
        })
    }

    /// Row `m` converted to `f64`.
    pub fn row_f64(&self, m: usize) -> Result<Vec<f64>, ChainError> {
        let row = self.row_ref(m)?;
        Ok(row
            .numerators
            .iter()
            .map(|num| ratio_to_f64(num, &row.denominator))
            .collect())
    }
}
