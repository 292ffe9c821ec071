//! Independent reference computations for the test suites.
//!
//! Nothing here goes through the range-size chain: functions are enumerated
//! as explicit tables, integrals are computed by adaptive quadrature.

use std::collections::HashMap;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, Zero};

use crate::chain::Rational;

fn decode(mut code: usize, n: usize, out: &mut [usize]) {
    for slot in out.iter_mut().take(n) {
        *slot = code % n;
        code /= n;
    }
}

fn encode(table: &[usize], n: usize) -> usize {
    table.iter().rev().fold(0, |acc, &v| acc * n + v)
}

fn image_size(table: &[usize], n: usize) -> usize {
    let mut seen = vec![false; n];
    table.iter().filter(|&&v| !std::mem::replace(&mut seen[v], true)).count()
}

/// Number of functions `[n] -> [n]` with each image size, indexed by size.
pub fn image_size_counts(n: usize) -> Vec<u64> {
    let total = n.pow(n as u32);
    let mut counts = vec![0u64; n + 1];
    let mut table = vec![0usize; n];
    for code in 0..total {
        decode(code, n, &mut table);
        counts[image_size(&table, n)] += 1;
    }
    counts
}

/// `S(m, r) = (1/r!) Σ_j (-1)^j C(r, j) (r - j)^m`.
pub fn stirling2_explicit(m: usize, r: usize) -> BigUint {
    let mut sum = BigInt::zero();
    let mut binom = BigInt::one();
    for j in 0..=r {
        let term = &binom * BigInt::from(r - j).pow(m as u32);
        if j % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
        binom = binom * BigInt::from(r - j) / BigInt::from(j + 1);
    }
    let factorial: BigInt = (1..=r).map(BigInt::from).product();
    let value = sum / factorial;
    assert!(!value.is_negative());
    value.to_biguint().expect("nonnegative")
}

/// `P(T = t)` for `t = 1..=t_max` by enumerating every sequence
/// `(f_1, ..., f_{t_max})`. Feasible only for tiny `n`.
pub fn time_pmf_brute_force(n: usize, t_max: usize) -> Vec<Rational> {
    let functions = n.pow(n as u32);
    let sequences = functions.pow(t_max as u32);
    let mut hits = vec![0u64; t_max + 1];
    let mut f = vec![0usize; n];
    let mut g = vec![0usize; n];
    for seq in 0..sequences {
        let mut code = seq;
        g.iter_mut().enumerate().for_each(|(i, v)| *v = i);
        for t in 1..=t_max {
            decode(code % functions, n, &mut f);
            code /= functions;
            for v in g.iter_mut() {
                *v = f[*v];
            }
            if image_size(&g, n) == 1 {
                hits[t] += 1;
                break;
            }
        }
    }
    (1..=t_max)
        .map(|t| Rational::new(hits[t].into(), (sequences as u64).into()))
        .collect()
}

/// Same quantity as [`time_pmf_brute_force`], grouping sequences by the
/// table of `g_t`; exact and fast enough for `n <= 5`.
pub fn time_pmf_by_tables(n: usize, t_max: usize) -> Vec<Rational> {
    let functions = n.pow(n as u32);
    let identity: Vec<usize> = (0..n).collect();
    let mut dist: HashMap<usize, u128> = HashMap::from([(encode(&identity, n), 1)]);
    let mut f = vec![0usize; n];
    let mut g = vec![0usize; n];
    let mut h = vec![0usize; n];
    let mut total: u128 = 1;
    let mut out = Vec::with_capacity(t_max);
    for _ in 1..=t_max {
        total *= functions as u128;
        let mut next: HashMap<usize, u128> = HashMap::new();
        let mut absorbed: u128 = 0;
        for (&code, &weight) in &dist {
            decode(code, n, &mut g);
            for fc in 0..functions {
                decode(fc, n, &mut f);
                for i in 0..n {
                    h[i] = f[g[i]];
                }
                if image_size(&h, n) == 1 {
                    absorbed += weight;
                } else {
                    *next.entry(encode(&h, n)).or_default() += weight;
                }
            }
        }
        out.push(Rational::new(
            BigInt::from(absorbed),
            BigInt::from(total),
        ));
        dist = next;
    }
    out
}

/// `P(τ_m > 0)` for `m = 2..=n` (index `m`) by evolving the joint law of
/// the image set and the set of image sizes seen so far, for `depth` steps.
/// Returns the lower bounds together with the unabsorbed mass left over,
/// which bounds their error.
pub fn visit_probabilities_by_image_sets(n: usize, depth: usize) -> (Vec<f64>, f64) {
    assert!(n <= 8);
    let full = (1usize << n) - 1;
    // image-set transition counts: for each set R, the law of f(R)
    let mut transitions: Vec<Vec<(usize, f64)>> = vec![Vec::new(); full + 1];
    for set in 1..=full {
        let members: Vec<usize> = (0..n).filter(|i| set >> i & 1 == 1).collect();
        let k = members.len();
        let assignments = n.pow(k as u32);
        let mut counts: HashMap<usize, u64> = HashMap::new();
        let mut images = vec![0usize; k];
        for code in 0..assignments {
            decode(code, n, &mut images);
            let image = images.iter().take(k).fold(0, |acc, &v| acc | 1 << v);
            *counts.entry(image).or_default() += 1;
        }
        let mut list: Vec<(usize, f64)> = counts
            .into_iter()
            .map(|(s, c)| (s, c as f64 / assignments as f64))
            .collect();
        list.sort_by_key(|&(s, _)| s);
        transitions[set] = list;
    }
    let size_bit = |set: usize| 1usize << (set.count_ones() as usize);
    // state: (image set, mask of sizes seen)
    let mut dist: HashMap<(usize, usize), f64> = HashMap::from([((full, 0), 1.0)]);
    let mut visits = vec![0.0; n + 1];
    for _ in 0..depth {
        let mut next: HashMap<(usize, usize), f64> = HashMap::new();
        for (&(set, mask), &p) in &dist {
            for &(image, q) in &transitions[set] {
                let mass = p * q;
                if image.count_ones() == 1 {
                    for (m, v) in visits.iter_mut().enumerate().skip(2) {
                        if mask >> m & 1 == 1 {
                            *v += mass;
                        }
                    }
                } else {
                    *next.entry((image, mask | size_bit(image))).or_default() += mass;
                }
            }
        }
        dist = next;
    }
    let remaining: f64 = dist.values().sum();
    // paths still running have already recorded some visits
    for (&(_, mask), &p) in &dist {
        for (m, v) in visits.iter_mut().enumerate().skip(2) {
            if mask >> m & 1 == 1 {
                *v += p;
            }
        }
    }
    (visits, remaining)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
pub fn integrate(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = simpson(fa, fm, fb, a, b);
    recurse(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Upper bound on `F(x)` from `T ≥ E_2 + ... + E_K`:
/// `F(x) ≤ ∏_k min(1, C(k,2) x)`.
pub fn limit_cdf_small_x_bound(x: f64) -> f64 {
    let mut bound: f64 = 1.0;
    for k in 2u64.. {
        let p = (k * (k - 1) / 2) as f64 * x;
        if p >= 1.0 || bound == 0.0 {
            break;
        }
        bound *= p;
    }
    bound
}

/// First `count` points of the base-2 van der Corput sequence, all in `(0, 1)`.
pub fn van_der_corput(count: usize) -> Vec<f64> {
    (1..=count as u64)
        .map(|mut i| {
            let mut x = 0.0;
            let mut scale = 0.5;
            while i > 0 {
                if i & 1 == 1 {
                    x += scale;
                }
                i >>= 1;
                scale *= 0.5;
            }
            x
        })
        .collect()
}
