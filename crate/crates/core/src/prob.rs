//! Scalar types that can carry probabilities: exact rationals or `f64`.

use std::fmt::Debug;

use num_bigint::BigUint;
use num_traits::{NumAssignRef, NumRef, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::chain::{ratio_to_f64, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arithmetic {
    Exact,
    Float,
}

pub trait Prob: NumRef + NumAssignRef + Clone + PartialOrd + Debug + Send + Sync {
    const ARITHMETIC: Arithmetic;

    fn from_rational(value: &Rational) -> Self;

    fn from_ratio(num: &BigUint, den: &BigUint) -> Self;

    fn to_f64(&self) -> f64;

    /// Sum used for accumulating many small masses. Compensated for floats.
    fn sum_all<I: IntoIterator<Item = Self>>(items: I) -> Self {
        items.into_iter().fold(Self::zero(), |acc, x| acc + x)
    }

    /// Drops values too small to matter; keeps float loops out of subnormals.
    fn prune(self) -> Self {
        self
    }
}

impl Prob for Rational {
    const ARITHMETIC: Arithmetic = Arithmetic::Exact;

    fn from_rational(value: &Rational) -> Self {
        value.clone()
    }

    fn from_ratio(num: &BigUint, den: &BigUint) -> Self {
        Rational::new(num.clone().into(), den.clone().into())
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(0.0)
    }
}

impl Prob for f64 {
    const ARITHMETIC: Arithmetic = Arithmetic::Float;

    fn from_rational(value: &Rational) -> Self {
        ToPrimitive::to_f64(value).unwrap_or(0.0)
    }

    fn from_ratio(num: &BigUint, den: &BigUint) -> Self {
        ratio_to_f64(num, den)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn sum_all<I: IntoIterator<Item = Self>>(items: I) -> Self {
        let mut sum = NeumaierSum::default();
        for x in items {
            sum.add(x);
        }
        sum.value()
    }

    fn prune(self) -> Self {
        if self.abs() < 1e-300 {
            0.0
        } else {
            self
        }
    }
}

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}
