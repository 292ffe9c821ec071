use coalesce_core::chain::{
    falling_factorial, lambda_stay, stirling2, transition_prob, Stirling2Table,
};
use coalesce_core::oracle::{image_size_counts, stirling2_explicit};
use coalesce_core::{build_chain, Rational};
use num_bigint::BigUint;
use num_traits::{One, Zero};
use proptest::prelude::*;

#[test]
fn image_size_law_matches_enumeration() {
    for n in 1..=8usize {
        let counts = image_size_counts(n);
        let total = BigUint::from(n).pow(n as u32);
        let chain = build_chain(n).unwrap();
        for r in 1..=n {
            let expected = Rational::new(BigUint::from(counts[r]).into(), total.clone().into());
            assert_eq!(chain.prob(n, r).unwrap(), expected, "n={n} r={r}");
        }
    }
}

#[test]
fn n3_full_row() {
    let row = build_chain(3).unwrap().row(3).unwrap();
    let expected: Vec<Rational> = [(1, 9), (2, 3), (2, 9)]
        .iter()
        .map(|&(p, q)| Rational::new(p.into(), q.into()))
        .collect();
    assert_eq!(row, expected);
}

#[test]
fn recurrence_matches_explicit_sum() {
    let table = Stirling2Table::up_to(20);
    for m in 0..=20 {
        for r in 0..=m {
            let explicit = stirling2_explicit(m, r);
            assert_eq!(table.get(m, r).unwrap(), explicit, "S({m},{r})");
            assert_eq!(stirling2(m, r), explicit);
        }
    }
}

#[test]
fn stay_probability_is_diagonal_up_to_50() {
    for n in 1..=50 {
        let chain = build_chain(n).unwrap();
        for m in 1..=n {
            assert_eq!(chain.stay(m).unwrap(), lambda_stay(n, m).unwrap());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rows_are_lower_triangular_laws(n in 1usize..=50) {
        let chain = build_chain(n).unwrap();
        prop_assert!(chain.rows_sum_to_one());
        for m in 1..=n {
            let row = chain.row(m).unwrap();
            prop_assert_eq!(row.len(), m);
            let total: Rational = row.iter().sum();
            prop_assert!(total.is_one());
            prop_assert!(row.iter().all(|p| *p >= Rational::zero()));
            prop_assert!(chain.prob(m, m + 1).is_err());
        }
        prop_assert!(chain.prob(1, 1).unwrap().is_one());
    }

    #[test]
    fn transition_counts_partition_functions(n in 1usize..=30, m_frac in 0.0f64..1.0) {
        let m = 1 + ((n - 1) as f64 * m_frac) as usize;
        // Σ_r S(m, r) n^(r) = n^m
        let total: BigUint = (1..=m).map(|r| stirling2(m, r) * falling_factorial(n, r)).sum();
        prop_assert_eq!(total, BigUint::from(n).pow(m as u32));
        let direct = transition_prob(n, m, m).unwrap();
        prop_assert_eq!(direct, lambda_stay(n, m).unwrap());
    }

    #[test]
    fn staying_gets_likelier_as_n_grows(n in 2usize..=40, m in 2usize..=40) {
        prop_assume!(m <= n);
        let here = lambda_stay(n, m).unwrap();
        let bigger = lambda_stay(n + 1, m).unwrap();
        prop_assert!(bigger > here);
    }
}
