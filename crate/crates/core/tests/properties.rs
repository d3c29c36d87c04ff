use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{Binomial, Discrete};

use contagion::balancesheet::BalanceSheet;
use contagion::cascade::run_cascade;
use contagion::oracle::SmallInstance;
use contagion::randgraph::{gen_gnp_digraph, gen_iid_outdegree_digraph, DiGraph};
use contagion::singlehit::{build_single_hit, forward_reach, truncated_outdegree_sampler};
use contagion::stats::chi_square_two_sample;
use contagion::Rational;

fn small_graph() -> impl Strategy<Value = DiGraph> {
    (2usize..14).prop_flat_map(|n| {
        proptest::collection::vec((0..n, 0..n), 0..3 * n).prop_map(move |pairs| {
            let mut edges: Vec<(usize, usize)> = pairs.into_iter().filter(|(u, v)| u != v).collect();
            edges.sort_unstable();
            edges.dedup();
            DiGraph::from_edges(n, edges).unwrap()
        })
    })
}

fn leverage() -> impl Strategy<Value = (i64, i64)> {
    prop_oneof![Just((3, 2)), Just((2, 1)), Just((5, 2)), Just((4, 1)), Just((7, 3)), Just((11, 2))]
}

fn histogram(values: impl Iterator<Item = usize>, bins: usize) -> Vec<u64> {
    let mut h = vec![0u64; bins];
    for v in values {
        h[v.min(bins - 1)] += 1;
    }
    h
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn reach_is_monotone_in_sources(g in small_graph(), a in any::<u16>(), b in any::<u16>()) {
        let n = g.n();
        let small: Vec<usize> = (0..n).filter(|v| a & (1 << v) != 0).collect();
        let large: Vec<usize> = (0..n).filter(|v| (a | b) & (1 << v) != 0).collect();
        let r_small = forward_reach(&g, &small).unwrap();
        let r_large = forward_reach(&g, &large).unwrap();
        prop_assert!(r_large.is_superset_of(&r_small.to_sorted_vec()));
        prop_assert!(r_small.is_superset_of(&small));
    }

    #[test]
    fn cascade_rounds_partition_the_terminal_set(
        g in small_graph(),
        lev in leverage(),
        shock_bits in 1u16..,
    ) {
        let n = g.n();
        let mut shock: Vec<usize> = (0..n).filter(|v| shock_bits & (1 << v) != 0).collect();
        if shock.is_empty() {
            shock.push(0);
        }
        let bs = BalanceSheet::with_leverage(Rational::new(lev.0, lev.1)).unwrap();
        let trace = run_cascade(&g, &bs, &shock).unwrap();

        let mut union = shock.clone();
        for round in trace.rounds() {
            prop_assert!(!round.is_empty());
            union.extend_from_slice(round);
        }
        let total = union.len();
        union.sort_unstable();
        union.dedup();
        prop_assert_eq!(union.len(), total, "rounds overlap each other or the shock");
        prop_assert_eq!(union.as_slice(), trace.terminal_set());

        let inst = SmallInstance { n, edges: g.edges().collect(), liabilities: (1, 1), leverage: lev };
        prop_assert_eq!(inst.least_closed_superset(&shock), trace.terminal_set().to_vec());

        let reach = forward_reach(&build_single_hit(&g, bs.d_star()), &shock).unwrap();
        prop_assert!(reach.to_sorted_vec().iter().all(|v| trace.terminal_set().binary_search(v).is_ok()));
    }

    #[test]
    fn cascade_scales_with_liabilities(g in small_graph(), lev in leverage(), scale in 1i64..50) {
        let c = Rational::new(lev.0, lev.1);
        let base = BalanceSheet::with_leverage(c.clone()).unwrap();
        let scaled = BalanceSheet::new(Rational::new(scale, 7), c).unwrap();
        let a = run_cascade(&g, &base, &[0]).unwrap();
        let b = run_cascade(&g, &scaled, &[0]).unwrap();
        prop_assert_eq!(a.rounds(), b.rounds());
    }

    #[test]
    fn csv_round_trip_is_byte_exact(g in small_graph()) {
        let mut first = Vec::new();
        g.write_csv(&mut first).unwrap();
        let back = DiGraph::read_csv(first.as_slice(), Some(g.n())).unwrap();
        prop_assert_eq!(&back, &g);
        let mut second = Vec::new();
        back.write_csv(&mut second).unwrap();
        prop_assert_eq!(first, second);
    }
}

#[test]
fn gnp_outdegrees_follow_the_binomial_law() {
    let n = 100_000;
    let lambda = 2.0;
    let g = gen_gnp_digraph(n, lambda, &mut ChaCha8Rng::seed_from_u64(31)).unwrap();
    let law = Binomial::new(lambda / n as f64, (n - 1) as u64).unwrap();
    let observed = histogram(g.out_degrees().into_iter(), 8);
    for (k, &count) in observed.iter().enumerate().take(7) {
        let p = law.pmf(k as u64);
        let expected = p * n as f64;
        let sd = (n as f64 * p * (1.0 - p)).sqrt();
        assert!(
            (count as f64 - expected).abs() <= 4.0 * sd,
            "k = {k}: {count} vs {expected:.1}"
        );
    }
}

#[test]
fn iid_outdegrees_follow_the_truncated_law() {
    let n = 100_000;
    let law = truncated_outdegree_sampler(n, 2.0, 3).unwrap();
    let g = gen_iid_outdegree_digraph(n, &law, &mut ChaCha8Rng::seed_from_u64(32)).unwrap();
    let observed = histogram(g.out_degrees().into_iter(), 5);
    assert_eq!(observed[4], 0);
    for (k, &count) in observed.iter().enumerate().take(4) {
        let p = law.pmf(k);
        let expected = p * n as f64;
        let sd = (n as f64 * p * (1.0 - p)).sqrt();
        assert!(
            (count as f64 - expected).abs() <= 4.0 * sd,
            "k = {k}: {count} vs {expected:.1}"
        );
    }
}

#[test]
fn truncated_gnp_and_iid_degrees_are_indistinguishable() {
    let n = 50_000;
    let law = truncated_outdegree_sampler(n, 2.0, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let sh = build_single_hit(&gen_gnp_digraph(n, 2.0, &mut rng).unwrap(), 2);
    let iid = gen_iid_outdegree_digraph(n, &law, &mut rng).unwrap();
    let a = histogram(sh.out_degrees().into_iter(), 3);
    let b = histogram(iid.out_degrees().into_iter(), 3);
    let test = chi_square_two_sample(&a, &b);
    assert!(test.p_value > 0.001, "{test:?}");

    // A different cutoff is detected.
    let other = truncated_outdegree_sampler(n, 2.0, 1).unwrap();
    let iid1 = gen_iid_outdegree_digraph(n, &other, &mut rng).unwrap();
    let c = histogram(iid1.out_degrees().into_iter(), 3);
    assert!(chi_square_two_sample(&a, &c).p_value < 1e-6);
}
