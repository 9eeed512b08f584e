mod common;

use bass::baselines::matching_decomposition;
use bass::rng::seeded;
use bass::{greedy_partition, validate_partition, CollisionFreePartition, Topology};
use common::random_connected;
use proptest::prelude::*;

fn graph_strategy(max_n: usize) -> impl Strategy<Value = Topology> {
    (1usize..=max_n, 0.0f64..0.5, any::<u64>())
        .prop_map(|(n, extra, seed)| random_connected(n, extra, &mut seeded(seed)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn greedy_partition_is_collision_free(t in graph_strategy(30)) {
        let p = greedy_partition(&t);
        prop_assert!(validate_partition(&t, p.subsets()));
        // Matrix form: no direct link and no common neighbor inside a subset.
        let a = t.adjacency::<i64>();
        let a2 = &a * &a;
        for s in p.subsets() {
            for &i in s {
                for &j in s {
                    if i != j {
                        prop_assert_eq!(a[(i, j)], 0);
                        prop_assert_eq!(a2[(i, j)], 0);
                    }
                }
            }
        }
    }

    #[test]
    fn greedy_partition_respects_degree_bound(t in graph_strategy(30)) {
        let p = greedy_partition(&t);
        prop_assert!(p.len() <= 1 + t.auxiliary_graph().max_degree());
        let mut seen: Vec<usize> = p.subsets().concat();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..t.n()).collect::<Vec<_>>());
        for (k, s) in p.subsets().iter().enumerate() {
            prop_assert!(!s.is_empty());
            prop_assert!(s.iter().all(|&i| p.subset_of(i) == k));
        }
    }

    #[test]
    fn partition_text_round_trips(t in graph_strategy(30)) {
        let p = greedy_partition(&t);
        prop_assert_eq!(CollisionFreePartition::parse_text(&t, &p.to_text()).unwrap(), p);
    }

    #[test]
    fn matchings_cover_edges_exactly(t in graph_strategy(30)) {
        let md = matching_decomposition(&t);
        let mut all: Vec<(usize, usize)> = md.matchings().concat();
        all.sort_unstable();
        prop_assert_eq!(&all, t.edges());
        for m in md.matchings() {
            let mut ends: Vec<usize> = m.iter().flat_map(|&(i, j)| [i, j]).collect();
            let before = ends.len();
            ends.sort_unstable();
            ends.dedup();
            prop_assert_eq!(ends.len(), before, "matching shares an endpoint");
        }
        if t.num_edges() > 0 {
            prop_assert!(md.len() <= 2 * t.max_degree() - 1);
        }
    }
}

#[test]
fn validate_rejects_bad_groupings() {
    let p3 = Topology::new(3, &[(0, 1), (1, 2)]).unwrap();
    // Adjacent pair, two-hop pair, missing node, duplicated node.
    assert!(!validate_partition(&p3, &[vec![0, 1], vec![2]]));
    assert!(!validate_partition(&p3, &[vec![0, 2], vec![1]]));
    assert!(!validate_partition(&p3, &[vec![0], vec![1]]));
    assert!(!validate_partition(&p3, &[vec![0], vec![1], vec![2], vec![2]]));
    assert!(validate_partition(&p3, &[vec![2], vec![0], vec![1]]));
    assert!(CollisionFreePartition::from_subsets(&p3, vec![vec![0, 2], vec![1]]).is_err());
}

#[test]
fn greedy_partition_of_paths_and_rings() {
    let ring = |n: usize| {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Topology::new(n, &edges).unwrap()
    };
    assert_eq!(greedy_partition(&ring(6)).subsets(), &[vec![0, 3], vec![1, 4], vec![2, 5]]);
    // Rings of length divisible by 3 need exactly 3 subsets.
    for n in [9, 12, 30] {
        assert_eq!(greedy_partition(&ring(n)).len(), 3);
    }
}
