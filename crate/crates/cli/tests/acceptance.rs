//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::f64::consts::PI;
use std::time::Instant;

use coalesce_cli::record::{
    CompareConfig, ComparePayload, OutputRecord, SimulateConfig, SimulatePayload,
};
use coalesce_cli::{execute, Outcome, EXIT_OK, EXIT_VERDICT};
use coalesce_core::analysis::{discrete_ecdf_distance, dkw_epsilon};
use coalesce_core::chain::lambda_stay;
use coalesce_core::exact::{conditional_t1_charfn, conditional_t1_pmf_auto, time_to_constant_pmf};
use coalesce_core::limitlaw::{
    cdf, cdf_value, charfn_closed, charfn_product, density, limit_moments, LimitLawConfig,
};
use coalesce_core::montecarlo::{run_experiment, ExperimentConfig, TimeSamples};
use coalesce_core::oracle::{image_size_counts, integrate, limit_cdf_small_x_bound};
use coalesce_core::{build_chain, Rational, SplitSpec};
use num_bigint::BigInt;
use num_traits::One;

struct CriterionResult {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> CriterionResult {
    CriterionResult {
        pass,
        detail: detail.into(),
    }
}

type Criterion = (&'static str, fn() -> CriterionResult);

fn cli(args: &str) -> Outcome {
    execute(std::iter::once("coalesce").chain(args.split_whitespace()))
}

fn exact_anchors() -> CriterionResult {
    let pmf = time_to_constant_pmf::<Rational>(&build_chain(2).unwrap(), 1e-13).unwrap();
    let mut power = Rational::one();
    let mut geometric = true;
    for t in 1..=40u64 {
        power /= BigInt::from(2);
        geometric &= pmf.prob(t) == power;
    }
    let counts = image_size_counts(3);
    let row = build_chain(3).unwrap().row(3).unwrap();
    let enumerated = (1..=3).all(|r| row[r - 1] == Rational::new(counts[r].into(), 27.into()));
    verdict(
        geometric && enumerated,
        format!("n=2 geometric to t=40: {geometric}; row (3,3) vs 27 functions: {enumerated}"),
    )
}

fn lambda_identity() -> CriterionResult {
    let mut mismatches = 0;
    for n in 1..=50 {
        let chain = build_chain(n).unwrap();
        for m in 1..=n {
            if chain.prob(m, m).unwrap() != lambda_stay(n, m).unwrap() {
                mismatches += 1;
            }
        }
    }
    verdict(mismatches == 0, format!("{mismatches} mismatches over 1 <= m <= n <= 50"))
}

fn simulation_vs_exact() -> CriterionResult {
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for n in [3, 5, 8] {
        let summary = run_experiment(&ExperimentConfig::new(n, 100_000, 1000 + n as u64)).unwrap();
        let TimeSamples::Full { sorted, .. } = &summary.samples else {
            return verdict(false, "expected a full sample store");
        };
        let pmf = time_to_constant_pmf::<f64>(&build_chain(n).unwrap(), 1e-12).unwrap();
        let table = pmf.cdf_table_f64();
        let cdf = |t: u64| if t == 0 { 0.0 } else { table[((t - 1) as usize).min(table.len() - 1)] };
        let d = discrete_ecdf_distance(sorted, cdf, pmf.support_end()).unwrap();
        worst = worst.max(d);
        parts.push(format!("n={n}: {d:.5}"));
    }
    let eps = dkw_epsilon(100_000, 0.01).unwrap();
    verdict(
        worst <= 0.007,
        format!("{} (DKW {eps:.4}, threshold 0.007)", parts.join(", ")),
    )
}

fn split_time_charfn() -> CriterionResult {
    let mut worst: f64 = 0.0;
    for (n, xi) in [(50, 3), (100, 4), (200, 5)] {
        let split = SplitSpec::with_xi(xi);
        let pmf = conditional_t1_pmf_auto(n, &split, 1e-13).unwrap().to_f64();
        for j in 0..64 {
            let t = -PI + 2.0 * PI * j as f64 / 63.0;
            let closed = conditional_t1_charfn(n, &split, t).unwrap();
            worst = worst.max((pmf.characteristic(t) - closed).norm());
        }
    }
    verdict(worst <= 1e-10, format!("max |DFT - charfn| = {worst:.3e}"))
}

fn limit_consistency() -> CriterionResult {
    let law = LimitLawConfig::default();
    let right = (cdf(50.0, &law).unwrap().value - 1.0).abs();
    let f = |x: f64| density(x, &law).unwrap().value;
    let below = limit_cdf_small_x_bound(law.x_min);
    let quad = [0.2, 0.5, 1.0, 2.0, 5.0]
        .into_iter()
        .map(|x| (integrate(&f, law.x_min, x, 1e-10) - cdf_value(x, &law)).abs() + below)
        .fold(0.0, f64::max);
    let charfn_ok = [0.1, 0.5, 1.0, 2.0, 5.0].into_iter().flat_map(|t| [t, -t]).all(|t| {
        (charfn_closed(t, &law) - charfn_product(t, 100_000)).norm() <= 3e-5 * t.abs().max(1.0)
    });
    let m = limit_moments(&law);
    let mean_err = (m.mean - 2.0).abs();
    let var_err = (m.variance - 4.0 * (PI * PI / 3.0 - 3.0)).abs();
    let pass = right <= 1e-10 && quad <= 1e-6 && charfn_ok && mean_err <= 1e-10 && var_err <= 1e-10;
    verdict(
        pass,
        format!(
            "|F(50)-1|={right:.1e}, quadrature gap {quad:.1e}, charfn ok: {charfn_ok}, \
             mean err {mean_err:.1e}, variance err {var_err:.1e}"
        ),
    )
}

fn desk_scale_reproduction() -> CriterionResult {
    let out = cli("compare --n 2000 --samples 20000 --seed 7 --alpha 0.01 --format json");
    let record: OutputRecord<CompareConfig, ComparePayload> =
        serde_json::from_str(&out.stdout).unwrap();
    let r = &record.payload;
    let control = cli("compare --n 2 --samples 20000 --seed 7 --alpha 0.01");
    let pass = out.code == EXIT_OK
        && r.ks_statistic <= 0.05
        && (1.85..=2.15).contains(&r.mean_t_over_n)
        && control.code == EXIT_VERDICT;
    verdict(
        pass,
        format!(
            "n=2000: KS {:.4}, mean T/n {:.4}, exit {}; n=2 control exit {}",
            r.ks_statistic, r.mean_t_over_n, out.code, control.code
        ),
    )
}

fn visited_count_growth() -> CriterionResult {
    let out = cli("compare --n 10000 --samples 1000 --check en --format json");
    let record: OutputRecord<CompareConfig, ComparePayload> =
        serde_json::from_str(&out.stdout).unwrap();
    let ratio = record.payload.en_ratio;
    verdict(
        (0.85..=1.15).contains(&ratio) && out.code == EXIT_OK,
        format!("mean N / sqrt(2 pi n) = {ratio:.4}"),
    )
}

fn split_trends() -> CriterionResult {
    let n = 10_000;
    let a_freq = run_experiment(&ExperimentConfig::new(n, 10_000, 8)).unwrap().stats.a_frequency;
    let t2 = |xi| {
        let cfg = ExperimentConfig {
            split: SplitSpec::with_xi(xi),
            ..ExperimentConfig::new(n, 1_000, 9)
        };
        run_experiment(&cfg).unwrap().stats.mean_t2_over_n
    };
    let (t2_10, t2_20) = (t2(10), t2(20));
    verdict(
        a_freq >= 0.999 && (0.14..=0.26).contains(&t2_10) && t2_20 < t2_10,
        format!("A frequency {a_freq:.4}; mean T2/n at xi=10 {t2_10:.4}, at xi=20 {t2_20:.4}"),
    )
}

fn determinism() -> CriterionResult {
    let base = "simulate --n 500 --samples 20000 --seed 11 --format json";
    let first = cli(base);
    let parsed: Result<OutputRecord<SimulateConfig, SimulatePayload>, _> =
        serde_json::from_str(&first.stdout);
    let repeat = cli(base) == first;
    let across = [1, 4, 8]
        .into_iter()
        .all(|w| cli(&format!("{base} --workers {w}")) == first);
    verdict(
        first.code == EXIT_OK && parsed.is_ok() && repeat && across,
        format!("repeat identical: {repeat}; workers 1/4/8 identical: {across}"),
    )
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("exact-law anchors", exact_anchors),
        ("stay-probability identity", lambda_identity),
        ("simulation vs exact law", simulation_vs_exact),
        ("split-time characteristic function", split_time_charfn),
        ("limit-law consistency", limit_consistency),
        ("desk-scale limit reproduction", desk_scale_reproduction),
        ("visited-count growth", visited_count_growth),
        ("split trends", split_trends),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        failed += usize::from(!result.pass);
        println!(
            "criterion {}: {} [{name}] {} ({:.1}s)",
            i + 1,
            if result.pass { "PASS" } else { "FAIL" },
            result.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of 9 passed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
