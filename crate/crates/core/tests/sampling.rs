use coalesce_core::analysis::{
    discrete_ecdf_distance, dkw_epsilon, two_sample_ks, two_sample_threshold,
};
use coalesce_core::exact::{time_to_constant_pmf, visit_probabilities};
use coalesce_core::montecarlo::{
    distinct_count_sample, run_experiment, sample_chain, sample_direct, trajectory_rng,
    DistinctCounter, ExperimentConfig, QuantileSketch, SamplerKind, SimError, StoreKind, TimeSamples,
    DIRECT_CEILING,
};
use coalesce_core::{build_chain, SplitSpec};
use proptest::prelude::*;

fn frequencies(n: usize, m: usize, draws: u64, seed: u64) -> Vec<f64> {
    let mut rng = trajectory_rng(seed, 0);
    let mut counter = DistinctCounter::new(n);
    let mut counts = vec![0u64; m + 1];
    for _ in 0..draws {
        counts[counter.sample(m, &mut rng)] += 1;
    }
    counts.iter().map(|&c| c as f64 / draws as f64).collect()
}

#[test]
fn distinct_counts_follow_transition_rows() {
    let f = frequencies(3, 3, 1_000_000, 11);
    for (got, want) in f[1..].iter().zip([1.0 / 9.0, 2.0 / 3.0, 2.0 / 9.0]) {
        assert!((got - want).abs() < 2e-3, "{got} vs {want}");
    }
    let f = frequencies(2, 2, 1_000_000, 12);
    assert!((f[1] - 0.5).abs() < 2e-3);
    let mut rng = trajectory_rng(1, 1);
    for n in [1, 5, 1000] {
        assert_eq!(distinct_count_sample(n, 1, &mut rng), 1);
    }
}

fn chain_times(n: usize, samples: u64, seed: u64, sampler: SamplerKind) -> Vec<u64> {
    let mut cfg = ExperimentConfig::new(n, samples, seed);
    cfg.sampler = sampler;
    match run_experiment(&cfg).unwrap().samples {
        TimeSamples::Full { sorted, .. } => sorted,
        TimeSamples::Sketch(_) => panic!("expected full store"),
    }
}

#[test]
fn trivial_ground_set() {
    let split = SplitSpec::with_xi(2);
    let mut rng = trajectory_rng(3, 0);
    for _ in 0..100 {
        assert_eq!(sample_direct(1, &split, &mut rng).unwrap().time, 1);
        assert_eq!(sample_chain(1, &split, &mut rng).unwrap().time, 1);
    }
}

#[test]
fn direct_two_point_mean() {
    let times = chain_times(2, 100_000, 5, SamplerKind::Direct);
    let mean = times.iter().sum::<u64>() as f64 / times.len() as f64;
    assert!((mean - 2.0).abs() < 0.06, "mean {mean}");
}

#[test]
fn empirical_law_within_dkw_band() {
    let eps = dkw_epsilon(100_000, 0.01).unwrap();
    for (n, sampler) in [
        (2, SamplerKind::Chain),
        (3, SamplerKind::Chain),
        (5, SamplerKind::Chain),
        (5, SamplerKind::Direct),
    ] {
        let times = chain_times(n, 100_000, 100 + n as u64, sampler);
        let pmf = time_to_constant_pmf::<f64>(&build_chain(n).unwrap(), 1e-12).unwrap();
        let cdf = pmf.cdf_table_f64();
        let distance = discrete_ecdf_distance(
            &times,
            |t| if t == 0 { 0.0 } else { cdf[((t - 1) as usize).min(cdf.len() - 1)] },
            pmf.support_end(),
        )
        .unwrap();
        assert!(distance < eps, "n={n} {sampler}: {distance} vs {eps}");
    }
}

#[test]
fn samplers_agree_in_distribution() {
    let threshold = two_sample_threshold(100_000, 100_000, 0.01).unwrap();
    for n in [3, 5, 8] {
        let as_f64 = |v: Vec<u64>| v.into_iter().map(|t| t as f64).collect::<Vec<_>>();
        let chain = as_f64(chain_times(n, 100_000, 21, SamplerKind::Chain));
        let direct = as_f64(chain_times(n, 100_000, 22, SamplerKind::Direct));
        let d = two_sample_ks(&chain, &direct).unwrap();
        assert!(d < threshold, "n={n}: {d} vs {threshold}");
    }
}

#[test]
fn visit_frequencies_match_exact() {
    let mut cfg = ExperimentConfig::new(8, 1_000_000, 8);
    cfg.sampler = SamplerKind::Direct;
    let summary = run_experiment(&cfg).unwrap();
    let exact = visit_probabilities::<f64>(&build_chain(8).unwrap());
    assert_eq!(summary.stats.visit_frequencies.len(), 7);
    for (m, freq) in (2..=8).zip(&summary.stats.visit_frequencies) {
        assert!((freq - exact[m]).abs() < 3e-3, "m={m}: {freq} vs {}", exact[m]);
    }
}

#[test]
fn two_point_experiment() {
    let cfg = ExperimentConfig::new(2, 100_000, 42);
    let first = run_experiment(&cfg).unwrap();
    let mean_t = first.stats.mean_t_over_n * 2.0;
    assert!((1.94..=2.06).contains(&mean_t), "mean {mean_t}");
    assert_eq!(first, run_experiment(&cfg).unwrap());
    let spread = ExperimentConfig { workers: 3, ..cfg };
    assert_eq!(first, run_experiment(&spread).unwrap());
}

#[test]
fn late_phase_share_at_xi_10() {
    let mut cfg = ExperimentConfig::new(10_000, 1_000, 3);
    cfg.split = SplitSpec::with_xi(10);
    let stats = run_experiment(&cfg).unwrap().stats;
    assert!((0.14..=0.26).contains(&stats.mean_t2_over_n), "{}", stats.mean_t2_over_n);
}

#[test]
fn large_runs_switch_to_sketch() {
    let summary = run_experiment(&ExperimentConfig::new(2, 1_100_000, 9)).unwrap();
    assert_eq!(summary.stats.store, StoreKind::Sketch);
    assert_eq!(summary.samples.len(), 1_100_000);
    assert!(summary.samples.sorted_scaled().is_none());
    // P(T = 1) = 1/2, reported as the upper edge of the bin holding 1/2
    assert_eq!(summary.samples.quantile(0.4), 0.5 + QuantileSketch::BIN_WIDTH);
    assert!((summary.stats.mean_t_over_n - 1.0).abs() < 0.01);
}

#[test]
fn guards() {
    let mut cfg = ExperimentConfig::new(DIRECT_CEILING + 1, 10, 1);
    cfg.sampler = SamplerKind::Direct;
    assert!(matches!(run_experiment(&cfg), Err(SimError::Ceiling { .. })));
    assert!(matches!(
        run_experiment(&ExperimentConfig::new(5, 0, 1)),
        Err(SimError::NoSamples)
    ));
    assert!(matches!(
        run_experiment(&ExperimentConfig::new(0, 1, 1)),
        Err(SimError::EmptyGroundSet)
    ));
    let mut cfg = ExperimentConfig::new(5, 10, 1);
    cfg.split = SplitSpec::with_xi(6);
    assert!(matches!(run_experiment(&cfg), Err(SimError::Split { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn trajectory_bookkeeping(n in 2usize..300, seed in any::<u64>(), xi_frac in 0.0f64..1.0, direct in any::<bool>()) {
        let xi = 2 + ((n - 2) as f64 * xi_frac) as usize;
        let split = SplitSpec::with_xi(xi);
        let mut rng = trajectory_rng(seed, 0);
        let sample = if direct {
            sample_direct(n, &split, &mut rng).unwrap()
        } else {
            sample_chain(n, &split, &mut rng).unwrap()
        };
        prop_assert!(sample.identities_hold(&split));
        prop_assert!(sample.visited.iter().all(|&m| (2..=n).contains(&m)));
        let expected_a = (2..=xi.min(n)).all(|m| sample.visited.contains(&m));
        prop_assert_eq!(sample.a_occurred, expected_a);
        prop_assert!(sample.draws >= n as u64);
    }
}
