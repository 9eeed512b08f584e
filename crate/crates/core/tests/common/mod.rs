#![allow(dead_code)]

use bass::rng::{seeded, SimRng};
use bass::Topology;
use rand::Rng;

/// Random spanning tree (each node attaches to a uniform earlier node) plus
/// each remaining pair independently with probability `extra`.
pub fn random_connected(n: usize, extra: f64, rng: &mut SimRng) -> Topology {
    let mut edges = Vec::new();
    for v in 1..n {
        edges.push((rng.gen_range(0..v), v));
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.gen::<f64>() < extra {
                edges.push((i, j));
            }
        }
    }
    let t = Topology::new(n, &edges).unwrap();
    assert!(t.is_connected());
    t
}

pub fn random_tree(n: usize, rng: &mut SimRng) -> Topology {
    random_connected(n, 0.0, rng)
}

pub fn fixture_rng(seed: u64) -> SimRng {
    seeded(seed)
}

pub fn path(n: usize) -> Topology {
    let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
    Topology::new(n, &edges).unwrap()
}

pub fn ring(n: usize) -> Topology {
    let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
    Topology::new(n, &edges).unwrap()
}

pub fn star(leaves: usize) -> Topology {
    let edges: Vec<_> = (1..=leaves).map(|l| (0, l)).collect();
    Topology::new(leaves + 1, &edges).unwrap()
}

/// Two stars of `n1` and `n2` nodes (centers included) whose centers 0 and 1
/// are joined.
pub fn two_stars(n1: usize, n2: usize) -> Topology {
    let mut edges = vec![(0, 1)];
    let mut next = 2;
    for (center, size) in [(0, n1), (1, n2)] {
        for _ in 1..size {
            edges.push((center, next));
            next += 1;
        }
    }
    Topology::new(n1 + n2, &edges).unwrap()
}
