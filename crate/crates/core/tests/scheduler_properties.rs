mod common;

use bass::baselines::{matcha_policy, matching_decomposition, MatchingSampler};
use bass::rng::seeded;
use bass::scheduler::{
    sample_round, solve_probabilities, solve_probabilities_with_floor, BroadcastSampler,
    RoundSampler, SchedulingPolicy,
};
use bass::greedy_partition;
use common::{random_connected, star, two_stars};
use num_rational::Rational64;
use proptest::prelude::*;

fn weights_and_budget() -> impl Strategy<Value = (Vec<f64>, f64)> {
    prop::collection::vec(prop_oneof![Just(0.0), 0.0f64..1.0], 1..25).prop_flat_map(|b| {
        let q = b.len() as f64;
        (Just(b), 0.0..=q)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn probabilities_meet_budget_and_form((b, budget) in weights_and_budget()) {
        let sol = solve_probabilities(&b, budget).unwrap();
        prop_assert!(sol.probs.iter().all(|&p| (0.0..=1.0).contains(&p)));
        prop_assert!((sol.total() - budget).abs() <= 1e-9, "{} vs {}", sol.total(), budget);
        if let Some(g) = sol.gamma {
            for (&p, &w) in sol.probs.iter().zip(&b) {
                prop_assert_eq!(p, (g * w).min(1.0));
            }
        }
        // Larger weight never gets a smaller probability among weighted subsets.
        for i in 0..b.len() {
            for j in 0..b.len() {
                if b[i] > b[j] && b[j] > 0.0 {
                    prop_assert!(sol.probs[i] >= sol.probs[j]);
                }
            }
        }
    }

    #[test]
    fn probabilities_grow_with_budget((b, budget) in weights_and_budget(), frac in 0.0f64..1.0) {
        let lo = solve_probabilities(&b, budget * frac).unwrap();
        let hi = solve_probabilities(&b, budget).unwrap();
        for (l, h) in lo.probs.iter().zip(&hi.probs) {
            prop_assert!(l <= &(h + 1e-12));
        }
    }

    #[test]
    fn floor_is_respected((b, budget) in weights_and_budget(), floor in 0.0f64..0.9) {
        let q = b.len() as f64;
        prop_assume!(q * floor <= budget);
        let sol = solve_probabilities_with_floor(&b, budget, floor).unwrap();
        prop_assert!(sol.probs.iter().all(|&p| p >= floor - 1e-12 && p <= 1.0 + 1e-12));
        prop_assert!((sol.total() - budget).abs() <= 1e-9);
    }

    #[test]
    fn sampled_rounds_are_valid_mixing(n in 2usize..16, extra in 0.0f64..0.4, seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let t = random_connected(n, extra, &mut rng);
        let part = greedy_partition(&t);
        let budget = part.len() as f64 * 0.5;
        let policy = SchedulingPolicy::<f64>::bass(&t, &part, budget, 0.0).unwrap().with_epsilon(0.3);
        for _ in 0..20 {
            let r = sample_round(&policy, &part, &t, &mut rng);
            let w = &r.mixing_matrix;
            prop_assert_eq!(w.asymmetry(), 0.0);
            prop_assert!(w.row_sums().iter().all(|s| (s - 1.0).abs() <= 1e-12));
            prop_assert!(w.col_sums().iter().all(|s| (s - 1.0).abs() <= 1e-12));
            for i in 0..n {
                for j in 0..n {
                    let link = r.effective_adjacency[(i, j)];
                    let expect = t.has_edge(i, j) && r.node_mask[i] && r.node_mask[j];
                    prop_assert_eq!(link, if expect { 1.0 } else { 0.0 });
                    if i != j && !t.has_edge(i, j) {
                        prop_assert_eq!(w[(i, j)], 0.0);
                    }
                }
            }
            prop_assert_eq!(r.slots_used, r.active_subsets.iter().filter(|&&a| a).count());
        }
    }
}

#[test]
fn reference_solutions_are_exact() {
    let b = [Rational64::new(1, 2), Rational64::new(3, 10), Rational64::new(1, 5)];
    let sol = solve_probabilities(&b, Rational64::new(3, 2)).unwrap();
    assert_eq!(sol.probs, vec![Rational64::new(3, 4), Rational64::new(9, 20), Rational64::new(3, 10)]);
    assert_eq!(sol.gamma, Some(Rational64::new(3, 2)));
    let sol = solve_probabilities(&b, Rational64::new(12, 5)).unwrap();
    assert_eq!(sol.probs, vec![Rational64::from_integer(1), Rational64::new(21, 25), Rational64::new(14, 25)]);
    assert_eq!(sol.gamma, Some(Rational64::new(14, 5)));
    assert_eq!(sol.total(), Rational64::new(12, 5));
}

#[test]
fn star_budget_reaches_leaves_through_fill() {
    let t = star(4);
    let part = greedy_partition(&t);
    let policy = SchedulingPolicy::<Rational64>::bass(&t, &part, Rational64::from_integer(2), Rational64::from_integer(0)).unwrap();
    let q = Rational64::new(1, 4);
    assert_eq!(policy.subset_probs(), &[Rational64::from_integer(1), q, q, q, q]);
}

fn mean_and_se(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[test]
fn slot_usage_matches_budget_on_average() {
    let rounds = 100_000;
    for t in [two_stars(4, 4), two_stars(6, 6), star(6)] {
        let part = greedy_partition(&t);
        let budget = part.len() as f64 * 0.5;
        let policy = SchedulingPolicy::bass(&t, &part, budget, 0.0).unwrap();
        let sampler = BroadcastSampler::new(t.clone(), part, policy);
        let mut rng = seeded(11);
        let slots: Vec<f64> = (0..rounds).map(|_| sampler.draw(&mut rng).slots_used as f64).collect();
        let (mean, se) = mean_and_se(&slots);
        assert!((mean - budget).abs() <= 3.0 * se, "BASS {mean} vs {budget} (se {se})");

        let md = matching_decomposition(&t);
        let slots_budget = md.len() as f64;
        let sampler = MatchingSampler::new(&t, md.clone(), matcha_policy(&md, slots_budget).unwrap());
        let slots: Vec<f64> = (0..rounds).map(|_| sampler.draw(&mut rng).slots_used as f64).collect();
        let (mean, se) = mean_and_se(&slots);
        assert!((mean - slots_budget).abs() <= 3.0 * se, "MATCHA {mean} vs {slots_budget} (se {se})");
    }
}

#[test]
fn sampling_is_deterministic_per_seed() {
    let t = two_stars(4, 4);
    let part = greedy_partition(&t);
    let policy = SchedulingPolicy::<f64>::bass(&t, &part, 3.0, 0.0).unwrap();
    let run = |seed| {
        let mut rng = seeded(seed);
        (0..50).map(|_| sample_round(&policy, &part, &t, &mut rng).active_subsets).collect::<Vec<_>>()
    };
    assert_eq!(run(3), run(3));
    assert_ne!(run(3), run(4));
}
