//! Coalescence time of iterated uniform random functions on `[n]`.
//!
//! Compose independent uniform random maps `f_1, f_2, ...` on `[n]` and let
//! `T` be the first `t` at which `g_t = f_t ∘ ... ∘ f_1` is constant. This
//! crate provides
//!
//! - [`chain`]: exact combinatorics of the range-size Markov chain,
//! - [`exact`]: exact finite-`n` laws of `T`, the sojourn counts and the
//!   number of visited range sizes,
//! - [`montecarlo`]: seed-reproducible samplers and a parallel driver,
//! - [`limitlaw`]: the limiting law of `T/n`,
//! - [`analysis`]: goodness-of-fit checks tying the simulations to the limit.

pub mod analysis;
pub mod chain;
pub mod exact;
pub mod limitlaw;
pub mod montecarlo;
pub mod prob;

#[cfg(feature = "oracles")]
pub mod oracle;

pub use chain::{build_chain, RangeChain, Rational};
pub use exact::{DiscretePmf, SplitSpec};
pub use prob::{Arithmetic, Prob};
