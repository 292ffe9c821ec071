//! Trajectory samplers and a seed-reproducible experiment driver.
//!
//! Two samplers produce the same law for `T`:
//!
//! - [`sample_direct`] draws whole function tables and composes them,
//! - [`sample_chain`] tracks only the range size, throwing `m` balls into
//!   `n` bins per step.
//!
//! [`run_experiment`] gives trajectory `i` its own ChaCha8 stream
//! (`stream = i` under the experiment seed) and reduces per-chunk results in
//! chunk order, so the summary does not depend on the number of workers.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::SplitSpec;

/// Largest `n` accepted by the table-composing sampler.
pub const DIRECT_CEILING: usize = 100_000;
/// Largest `n` accepted by the range-size sampler.
pub const CHAIN_CEILING: usize = 100_000_000;
/// Experiments with more samples keep a [`QuantileSketch`] instead of every `T`.
pub const FULL_STORE_LIMIT: u64 = 1_000_000;
/// Per-state visit frequencies are reported for `2 <= m <= VISIT_TRACK_MAX`.
pub const VISIT_TRACK_MAX: usize = 64;

const CHUNK_LEN: u64 = 1024;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("ground set size must be positive")]
    EmptyGroundSet,
    #[error("n = {n} exceeds the {sampler} sampler ceiling of {ceiling}")]
    Ceiling {
        sampler: SamplerKind,
        n: usize,
        ceiling: usize,
    },
    #[error("sample count must be positive")]
    NoSamples,
    #[error("worker count must be positive")]
    NoWorkers,
    #[error("split threshold xi = {xi} must satisfy 2 <= xi <= max(2, n) with n = {n}")]
    Split { xi: usize, n: usize },
    #[error("worker failed: {0}")]
    WorkerFailed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    Direct,
    Chain,
}

impl std::fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SamplerKind::Direct => "direct",
            SamplerKind::Chain => "chain",
        })
    }
}

/// Counts distinct values among uniform draws from `[n]`.
///
/// Membership is an epoch stamp per bin, so no clearing is needed between
/// calls.
#[derive(Debug, Clone)]
pub struct DistinctCounter {
    stamps: Vec<u32>,
    epoch: u32,
    draws: u64,
}

impl DistinctCounter {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1 && n <= u32::MAX as usize, "n out of range: {n}");
        Self {
            stamps: vec![0; n],
            epoch: 0,
            draws: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.stamps.len()
    }

    /// Total number of uniform draws made so far.
    pub fn draws(&self) -> u64 {
        self.draws
    }

    fn next_epoch(&mut self) -> u32 {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamps.fill(0);
            self.epoch = 1;
        }
        self.epoch
    }

    /// Number of distinct values among `m` independent uniform draws.
    pub fn sample<R: Rng + ?Sized>(&mut self, m: usize, rng: &mut R) -> usize {
        debug_assert!(m >= 1 && m <= self.n());
        let epoch = self.next_epoch();
        let n = self.stamps.len() as u32;
        let mut distinct = 0;
        for _ in 0..m {
            let bin = rng.random_range(0..n) as usize;
            let stamp = &mut self.stamps[bin];
            if *stamp != epoch {
                *stamp = epoch;
                distinct += 1;
            }
        }
        self.draws += m as u64;
        distinct
    }
}

/// One-shot [`DistinctCounter::sample`]. Panics unless `1 <= m <= n`.
pub fn distinct_count_sample<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> usize {
    assert!(m >= 1 && m <= n, "need 1 <= m <= n, got m = {m}, n = {n}");
    DistinctCounter::new(n).sample(m, rng)
}

/// Per-trajectory bookkeeping shared by both samplers. Each state `m >= 2`
/// occupies one contiguous run, reported once.
#[derive(Debug, Clone, Copy)]
struct Tally {
    xi: usize,
    t1: u64,
    t2: u64,
    visited: u64,
    split_hits: usize,
    low_mask: u64,
}

impl Tally {
    fn new(xi: usize) -> Self {
        Self {
            xi,
            t1: 0,
            t2: 0,
            visited: 0,
            split_hits: 0,
            low_mask: 0,
        }
    }

    fn record(&mut self, state: usize, run: u64) {
        self.visited += 1;
        if state <= self.xi {
            self.t1 += run;
            self.split_hits += 1;
        } else {
            self.t2 += run;
        }
        if state <= VISIT_TRACK_MAX {
            self.low_mask |= 1 << (state - 1);
        }
    }

    fn a_occurred(&self, n: usize) -> bool {
        self.split_hits == self.xi.min(n).saturating_sub(1)
    }
}

/// Walks the range-size chain to absorption, reporting `(state, run)` for
/// every state `>= 2` it sits in. Returns `T`.
fn walk_chain<R: Rng + ?Sized>(
    counter: &mut DistinctCounter,
    rng: &mut R,
    mut visit: impl FnMut(usize, u64),
) -> u64 {
    let n = counter.n();
    let mut state = counter.sample(n, rng);
    let mut time = 1;
    while state > 1 {
        let mut run = 1;
        loop {
            let next = counter.sample(state, rng);
            time += 1;
            if next == state {
                run += 1;
            } else {
                visit(state, run);
                state = next;
                break;
            }
        }
    }
    time
}

/// Scratch space for composing explicit function tables.
#[derive(Debug, Clone)]
struct DirectScratch {
    f: Vec<u32>,
    g: Vec<u32>,
    seen: DistinctCounter,
}

impl DirectScratch {
    fn new(n: usize) -> Self {
        Self {
            f: vec![0; n],
            g: vec![0; n],
            seen: DistinctCounter::new(n),
        }
    }

    fn image_size(&mut self) -> usize {
        let epoch = self.seen.next_epoch();
        let mut distinct = 0;
        for &v in &self.g {
            let stamp = &mut self.seen.stamps[v as usize];
            if *stamp != epoch {
                *stamp = epoch;
                distinct += 1;
            }
        }
        distinct
    }
}

/// Samples `f_t` as full tables, sets `g_t = f_t ∘ g_{t-1}` by lookup and
/// stops when the image of `g_t` is a singleton. Returns `(T, draws)`.
fn walk_direct<R: Rng + ?Sized>(
    scratch: &mut DirectScratch,
    rng: &mut R,
    mut visit: impl FnMut(usize, u64),
) -> (u64, u64) {
    let n = scratch.f.len() as u32;
    for v in scratch.g.iter_mut() {
        *v = rng.random_range(0..n);
    }
    let mut draws = n as u64;
    let mut time = 1;
    let mut state = scratch.image_size();
    let mut run = 0;
    while state > 1 {
        run += 1;
        for v in scratch.f.iter_mut() {
            *v = rng.random_range(0..n);
        }
        draws += n as u64;
        for v in scratch.g.iter_mut() {
            *v = scratch.f[*v as usize];
        }
        time += 1;
        let next = scratch.image_size();
        if next != state {
            visit(state, run);
            run = 0;
            state = next;
        }
    }
    (time, draws)
}

/// A single simulated trajectory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrajectorySample {
    /// First `t` with `g_t` constant.
    pub time: u64,
    /// `τ_m` for every visited state `m >= 2`.
    pub sojourns: BTreeMap<usize, u64>,
    pub visited: BTreeSet<usize>,
    /// `N = |visited|`.
    pub visited_count: usize,
    pub t1: u64,
    pub t2: u64,
    /// Every state in `[2, min(ξ, n)]` was visited.
    pub a_occurred: bool,
    /// Uniform draws consumed.
    pub draws: u64,
}

impl TrajectorySample {
    fn assemble(n: usize, split: &SplitSpec, time: u64, runs: Vec<(usize, u64)>, draws: u64) -> Self {
        let mut tally = Tally::new(split.xi);
        for &(state, run) in &runs {
            tally.record(state, run);
        }
        let sojourns: BTreeMap<usize, u64> = runs.into_iter().collect();
        let visited: BTreeSet<usize> = sojourns.keys().copied().collect();
        let sample = Self {
            time,
            visited_count: visited.len(),
            sojourns,
            visited,
            t1: tally.t1,
            t2: tally.t2,
            a_occurred: tally.a_occurred(n),
            draws,
        };
        debug_assert!(sample.identities_hold(split));
        sample
    }

    /// `T = 1 + Σ_{m>=2} τ_m`, `T1 + T2 = Σ τ_m` and `N = |visited|`.
    pub fn identities_hold(&self, split: &SplitSpec) -> bool {
        let total: u64 = self.sojourns.values().sum();
        let t1: u64 = self.sojourns.range(..=split.xi).map(|(_, v)| v).sum();
        self.time == 1 + total
            && self.t1 + self.t2 == total
            && self.t1 == t1
            && self.visited_count == self.visited.len()
            && self.sojourns.values().all(|&v| v > 0)
    }
}

fn check_split(n: usize, split: &SplitSpec) -> Result<(), SimError> {
    if split.xi < 2 || split.xi > n.max(2) {
        return Err(SimError::Split { xi: split.xi, n });
    }
    Ok(())
}

fn check_ceiling(sampler: SamplerKind, n: usize) -> Result<(), SimError> {
    if n == 0 {
        return Err(SimError::EmptyGroundSet);
    }
    let ceiling = match sampler {
        SamplerKind::Direct => DIRECT_CEILING,
        SamplerKind::Chain => CHAIN_CEILING,
    };
    if n > ceiling {
        return Err(SimError::Ceiling { sampler, n, ceiling });
    }
    Ok(())
}

/// One trajectory by explicit function composition.
pub fn sample_direct<R: Rng + ?Sized>(
    n: usize,
    split: &SplitSpec,
    rng: &mut R,
) -> Result<TrajectorySample, SimError> {
    check_ceiling(SamplerKind::Direct, n)?;
    check_split(n, split)?;
    let mut scratch = DirectScratch::new(n);
    let mut runs = Vec::new();
    let (time, draws) = walk_direct(&mut scratch, rng, |s, r| runs.push((s, r)));
    Ok(TrajectorySample::assemble(n, split, time, runs, draws))
}

/// One trajectory of the range-size chain.
pub fn sample_chain<R: Rng + ?Sized>(
    n: usize,
    split: &SplitSpec,
    rng: &mut R,
) -> Result<TrajectorySample, SimError> {
    check_ceiling(SamplerKind::Chain, n)?;
    check_split(n, split)?;
    let mut counter = DistinctCounter::new(n);
    let mut runs = Vec::new();
    let time = walk_chain(&mut counter, rng, |s, r| runs.push((s, r)));
    Ok(TrajectorySample::assemble(n, split, time, runs, counter.draws()))
}

/// Random stream of trajectory `index` under `seed`.
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n: usize,
    pub samples: u64,
    pub seed: u64,
    pub sampler: SamplerKind,
    pub split: SplitSpec,
    pub workers: usize,
}

impl ExperimentConfig {
    /// Chain sampler, default split, one worker.
    pub fn new(n: usize, samples: u64, seed: u64) -> Self {
        Self {
            n,
            samples,
            seed,
            sampler: SamplerKind::Chain,
            split: SplitSpec::log_log(n),
            workers: 1,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        check_ceiling(self.sampler, self.n)?;
        if self.samples == 0 {
            return Err(SimError::NoSamples);
        }
        if self.workers == 0 {
            return Err(SimError::NoWorkers);
        }
        check_split(self.n, &self.split)
    }
}

/// Fixed-grid histogram of `T/n` used above [`FULL_STORE_LIMIT`] samples.
///
/// Bins have width `1/256` on `[0, 64)` plus one overflow bin. A KS bound
/// computed from the bins can overshoot the exact statistic by at most the
/// largest increase of the reference CDF across one bin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantileSketch {
    counts: Vec<u64>,
    overflow: u64,
}

impl QuantileSketch {
    pub const BIN_WIDTH: f64 = 1.0 / 256.0;
    pub const BINS: usize = 64 * 256;

    pub fn new() -> Self {
        Self {
            counts: vec![0; Self::BINS],
            overflow: 0,
        }
    }

    pub fn insert(&mut self, value: f64) {
        let bin = (value / Self::BIN_WIDTH).floor();
        if bin >= 0.0 && (bin as usize) < Self::BINS {
            self.counts[bin as usize] += 1;
        } else {
            self.overflow += 1;
        }
    }

    fn merge(&mut self, other: &QuantileSketch) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.overflow += other.overflow;
    }

    pub fn len(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.overflow
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Bin counts in order, followed by the overflow count.
    pub fn bins(&self) -> impl Iterator<Item = (f64, f64, u64)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .map(|(i, &c)| (i as f64 * Self::BIN_WIDTH, (i + 1) as f64 * Self::BIN_WIDTH, c))
            .chain(std::iter::once((64.0, f64::INFINITY, self.overflow)))
    }

    /// Upper edge of the first bin whose cumulative count reaches `p`.
    pub fn quantile(&self, p: f64) -> f64 {
        let target = (p * self.len() as f64).ceil().max(1.0) as u64;
        let mut cum = 0;
        for (_, hi, count) in self.bins() {
            cum += count;
            if cum >= target {
                return hi;
            }
        }
        f64::INFINITY
    }
}

impl Default for QuantileSketch {
    fn default() -> Self {
        Self::new()
    }
}

/// Stored `T` values of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub enum TimeSamples {
    Full {
        n: usize,
        /// `T` in trajectory order.
        in_order: Vec<u64>,
        sorted: Vec<u64>,
    },
    Sketch(QuantileSketch),
}

impl TimeSamples {
    pub fn len(&self) -> u64 {
        match self {
            TimeSamples::Full { in_order, .. } => in_order.len() as u64,
            TimeSamples::Sketch(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Sorted `T/n`, when every sample is kept.
    pub fn sorted_scaled(&self) -> Option<Vec<f64>> {
        match self {
            TimeSamples::Full { n, sorted, .. } => {
                Some(sorted.iter().map(|&t| t as f64 / *n as f64).collect())
            }
            TimeSamples::Sketch(_) => None,
        }
    }

    /// `T/n` in trajectory order, when every sample is kept.
    pub fn scaled_in_order(&self) -> Option<Vec<f64>> {
        match self {
            TimeSamples::Full { n, in_order, .. } => {
                Some(in_order.iter().map(|&t| t as f64 / *n as f64).collect())
            }
            TimeSamples::Sketch(_) => None,
        }
    }

    pub fn quantile(&self, p: f64) -> f64 {
        match self {
            TimeSamples::Full { n, sorted, .. } => {
                let idx = ((p * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len()) - 1;
                sorted[idx] as f64 / *n as f64
            }
            TimeSamples::Sketch(s) => s.quantile(p),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantile {
    pub p: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StoreKind {
    Full,
    Sketch,
}

/// Scalar results of an experiment; this is what gets serialized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub n: usize,
    pub samples: u64,
    pub seed: u64,
    pub sampler: SamplerKind,
    pub xi: usize,
    pub mean_t_over_n: f64,
    pub var_t_over_n: f64,
    pub mean_t2_over_n: f64,
    pub a_frequency: f64,
    pub mean_visited: f64,
    pub var_visited: f64,
    /// Frequency of visiting `m`, for `m = 2, 3, ..., min(n, 64)`.
    pub visit_frequencies: Vec<f64>,
    pub mean_draws: f64,
    pub quantiles: Vec<Quantile>,
    pub store: StoreKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimSummary {
    pub stats: SummaryStats,
    pub samples: TimeSamples,
}

#[derive(Debug, Clone)]
struct ChunkSummary {
    index: u64,
    times: Vec<u64>,
    sketch: Option<QuantileSketch>,
    sum_t: u128,
    sum_t_sq: u128,
    sum_t2: u128,
    a_count: u64,
    sum_visited: u128,
    sum_visited_sq: u128,
    visit_counts: [u64; VISIT_TRACK_MAX + 1],
    draws: u128,
}

impl ChunkSummary {
    fn new(index: u64, capacity: usize, sketch: bool) -> Self {
        Self {
            index,
            times: if sketch { Vec::new() } else { Vec::with_capacity(capacity) },
            sketch: sketch.then(QuantileSketch::new),
            sum_t: 0,
            sum_t_sq: 0,
            sum_t2: 0,
            a_count: 0,
            sum_visited: 0,
            sum_visited_sq: 0,
            visit_counts: [0; VISIT_TRACK_MAX + 1],
            draws: 0,
        }
    }
}

enum Sampler {
    Chain(DistinctCounter),
    Direct(DirectScratch),
}

impl Sampler {
    fn new(kind: SamplerKind, n: usize) -> Self {
        match kind {
            SamplerKind::Chain => Sampler::Chain(DistinctCounter::new(n)),
            SamplerKind::Direct => Sampler::Direct(DirectScratch::new(n)),
        }
    }

    /// Returns `(T, draws)`.
    fn run<R: Rng + ?Sized>(&mut self, rng: &mut R, visit: impl FnMut(usize, u64)) -> (u64, u64) {
        match self {
            Sampler::Chain(counter) => {
                let before = counter.draws();
                let time = walk_chain(counter, rng, visit);
                (time, counter.draws() - before)
            }
            Sampler::Direct(scratch) => walk_direct(scratch, rng, visit),
        }
    }
}

fn run_chunk(cfg: &ExperimentConfig, sampler: &mut Sampler, index: u64, sketch: bool) -> ChunkSummary {
    let start = index * CHUNK_LEN;
    let end = (start + CHUNK_LEN).min(cfg.samples);
    let mut chunk = ChunkSummary::new(index, (end - start) as usize, sketch);
    for trajectory in start..end {
        let mut rng = trajectory_rng(cfg.seed, trajectory);
        let mut tally = Tally::new(cfg.split.xi);
        let (time, draws) = sampler.run(&mut rng, |s, r| tally.record(s, r));
        debug_assert_eq!(time, 1 + tally.t1 + tally.t2);

        let t = time as u128;
        chunk.sum_t += t;
        chunk.sum_t_sq += t * t;
        chunk.sum_t2 += tally.t2 as u128;
        chunk.a_count += tally.a_occurred(cfg.n) as u64;
        chunk.sum_visited += tally.visited as u128;
        chunk.sum_visited_sq += (tally.visited as u128).pow(2);
        chunk.draws += draws as u128;
        let mut mask = tally.low_mask;
        while mask != 0 {
            let bit = mask.trailing_zeros() as usize;
            chunk.visit_counts[bit + 1] += 1;
            mask &= mask - 1;
        }
        match chunk.sketch.as_mut() {
            Some(s) => s.insert(time as f64 / cfg.n as f64),
            None => chunk.times.push(time),
        }
    }
    chunk
}

/// Unbiased variance from integer power sums, scaled by `1/scale^2`.
fn variance_from_sums(count: u64, sum: u128, sum_sq: u128, scale: f64) -> f64 {
    if count < 2 {
        return 0.0;
    }
    let k = count as u128;
    let numerator = k
        .checked_mul(sum_sq)
        .and_then(|a| sum.checked_mul(sum).and_then(|b| a.checked_sub(b)));
    let var = match numerator {
        Some(num) => num as f64 / (k * (k - 1)) as f64,
        None => {
            let mean = sum as f64 / count as f64;
            (sum_sq as f64 - count as f64 * mean * mean) / (count - 1) as f64
        }
    };
    var / (scale * scale)
}

/// Runs `cfg.samples` trajectories on `cfg.workers` threads.
///
/// Trajectory `i` always uses [`trajectory_rng`]`(cfg.seed, i)` and all
/// aggregates are integer sums or index-ordered, so identical configurations
/// give identical summaries for every worker count.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<SimSummary, SimError> {
    cfg.validate()?;
    let use_sketch = cfg.samples > FULL_STORE_LIMIT;
    let chunk_count = cfg.samples.div_ceil(CHUNK_LEN);
    let next = AtomicU64::new(0);
    let workers = cfg.workers.min(chunk_count as usize).max(1);

    let mut chunks: Vec<ChunkSummary> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                scope.spawn(|| {
                    let mut sampler = Sampler::new(cfg.sampler, cfg.n);
                    let mut done = Vec::new();
                    loop {
                        let index = next.fetch_add(1, Ordering::Relaxed);
                        if index >= chunk_count {
                            break;
                        }
                        done.push(run_chunk(cfg, &mut sampler, index, use_sketch));
                    }
                    done
                })
            })
            .collect();
        let mut all = Vec::with_capacity(chunk_count as usize);
        for handle in handles {
            match handle.join() {
                Ok(done) => all.extend(done),
                Err(panic) => {
                    let msg = panic
                        .downcast_ref::<&str>()
                        .map(|s| s.to_string())
                        .or_else(|| panic.downcast_ref::<String>().cloned())
                        .unwrap_or_else(|| "worker panicked".to_string());
                    return Err(SimError::WorkerFailed(msg));
                }
            }
        }
        Ok(all)
    })?;
    chunks.sort_by_key(|c| c.index);
    if chunks.len() as u64 != chunk_count {
        return Err(SimError::WorkerFailed("missing chunk results".to_string()));
    }
    Ok(summarize(cfg, chunks, use_sketch))
}

fn summarize(cfg: &ExperimentConfig, chunks: Vec<ChunkSummary>, use_sketch: bool) -> SimSummary {
    let count = cfg.samples;
    let nf = cfg.n as f64;
    let mut sum_t = 0u128;
    let mut sum_t_sq = 0u128;
    let mut sum_t2 = 0u128;
    let mut a_count = 0u64;
    let mut sum_visited = 0u128;
    let mut sum_visited_sq = 0u128;
    let mut draws = 0u128;
    let mut visit_counts = [0u64; VISIT_TRACK_MAX + 1];
    let mut in_order = Vec::new();
    let mut sketch = QuantileSketch::new();
    for chunk in chunks {
        sum_t += chunk.sum_t;
        sum_t_sq += chunk.sum_t_sq;
        sum_t2 += chunk.sum_t2;
        a_count += chunk.a_count;
        sum_visited += chunk.sum_visited;
        sum_visited_sq += chunk.sum_visited_sq;
        draws += chunk.draws;
        for (a, b) in visit_counts.iter_mut().zip(chunk.visit_counts) {
            *a += b;
        }
        match &chunk.sketch {
            Some(s) => sketch.merge(s),
            None => in_order.extend_from_slice(&chunk.times),
        }
    }
    let samples = if use_sketch {
        TimeSamples::Sketch(sketch)
    } else {
        let mut sorted = in_order.clone();
        sorted.sort_unstable();
        TimeSamples::Full {
            n: cfg.n,
            in_order,
            sorted,
        }
    };
    let k = count as f64;
    let quantiles = [0.05, 0.25, 0.5, 0.75, 0.95]
        .into_iter()
        .map(|p| Quantile {
            p,
            value: samples.quantile(p),
        })
        .collect();
    let stats = SummaryStats {
        n: cfg.n,
        samples: count,
        seed: cfg.seed,
        sampler: cfg.sampler,
        xi: cfg.split.xi,
        mean_t_over_n: sum_t as f64 / k / nf,
        var_t_over_n: variance_from_sums(count, sum_t, sum_t_sq, nf),
        mean_t2_over_n: sum_t2 as f64 / k / nf,
        a_frequency: a_count as f64 / k,
        mean_visited: sum_visited as f64 / k,
        var_visited: variance_from_sums(count, sum_visited, sum_visited_sq, 1.0),
        visit_frequencies: (2..=cfg.n.min(VISIT_TRACK_MAX))
            .map(|m| visit_counts[m] as f64 / k)
            .collect(),
        mean_draws: draws as f64 / k,
        quantiles,
        store: if use_sketch { StoreKind::Sketch } else { StoreKind::Full },
    };
    SimSummary { stats, samples }
}
