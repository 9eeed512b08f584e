//! Collision-free broadcast subsets via greedy coloring of the auxiliary
//! graph.
//!
//! Nodes in one subset can broadcast in the same slot: no two of them are
//! adjacent and no two share a neighbor, so every receiver hears at most one
//! transmitter. Each subset costs one transmission slot when activated.

use std::fmt::Write as _;

use crate::error::PartitionError;
use crate::graph::Topology;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CollisionFreePartition {
    subsets: Vec<Vec<usize>>,
    subset_of: Vec<usize>,
}

impl CollisionFreePartition {
    /// Wraps explicit subsets after checking cover, disjointness and
    /// collision-freedom against `t`. Empty subsets are dropped.
    pub fn from_subsets(t: &Topology, subsets: Vec<Vec<usize>>) -> Result<Self, PartitionError> {
        check_partition(t, &subsets)?;
        let mut subsets: Vec<Vec<usize>> = subsets.into_iter().filter(|s| !s.is_empty()).collect();
        let mut subset_of = vec![0; t.n()];
        for (k, s) in subsets.iter_mut().enumerate() {
            s.sort_unstable();
            for &i in s.iter() {
                subset_of[i] = k;
            }
        }
        Ok(Self { subsets, subset_of })
    }

    /// Number of subsets `q`, the slot cost of full communication.
    pub fn len(&self) -> usize {
        self.subsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsets.is_empty()
    }

    pub fn num_nodes(&self) -> usize {
        self.subset_of.len()
    }

    pub fn subsets(&self) -> &[Vec<usize>] {
        &self.subsets
    }

    pub fn subset(&self, k: usize) -> &[usize] {
        &self.subsets[k]
    }

    pub fn subset_of(&self, node: usize) -> usize {
        self.subset_of[node]
    }

    pub fn same_subset(&self, i: usize, j: usize) -> bool {
        self.subset_of[i] == self.subset_of[j]
    }

    /// Dump format: one subset per line, space-separated node indices.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for s in &self.subsets {
            let line: Vec<String> = s.iter().map(usize::to_string).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }

    pub fn parse_text(t: &Topology, text: &str) -> Result<Self, PartitionError> {
        let mut subsets = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let subset = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<usize>().map_err(|e| PartitionError::Parse {
                        line: idx + 1,
                        msg: format!("{tok:?}: {e}"),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            subsets.push(subset);
        }
        Self::from_subsets(t, subsets)
    }
}

/// Greedy coloring of the auxiliary graph. Nodes are visited by descending
/// auxiliary degree, ties by ascending index; each takes the smallest color
/// unused among its already-colored auxiliary neighbors.
pub fn greedy_partition(t: &Topology) -> CollisionFreePartition {
    let aux = t.auxiliary_graph();
    let n = t.n();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| (std::cmp::Reverse(aux.degree(i)), i));

    let mut color = vec![usize::MAX; n];
    let mut used = Vec::new();
    for &v in &order {
        used.clear();
        used.resize(aux.degree(v) + 1, false);
        for &w in aux.neighbors(v) {
            if let Some(slot) = used.get_mut(color[w]) {
                *slot = true;
            }
        }
        color[v] = used.iter().position(|&u| !u).expect("degree + 1 slots");
    }

    let q = color.iter().map(|&c| c + 1).max().unwrap_or(0);
    let mut subsets = vec![Vec::new(); q];
    for (v, &c) in color.iter().enumerate() {
        subsets[c].push(v);
    }
    CollisionFreePartition {
        subsets,
        subset_of: color,
    }
}

/// Brute-force check over all node pairs: the subsets cover every node of
/// `t` exactly once and no two members of one subset are adjacent or share a
/// neighbor.
pub fn validate_partition(t: &Topology, subsets: &[Vec<usize>]) -> bool {
    check_partition(t, subsets).is_ok()
}

fn check_partition(t: &Topology, subsets: &[Vec<usize>]) -> Result<(), PartitionError> {
    let n = t.n();
    let mut owner = vec![None; n];
    for (k, s) in subsets.iter().enumerate() {
        for &i in s {
            if i >= n {
                return Err(PartitionError::OutOfRange(i));
            }
            if owner[i].replace(k).is_some() {
                return Err(PartitionError::Overlap(i));
            }
        }
    }
    if let Some(i) = owner.iter().position(Option::is_none) {
        return Err(PartitionError::Uncovered(i));
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if owner[i] == owner[j] && (t.has_edge(i, j) || t.share_neighbor(i, j)) {
                return Err(PartitionError::Collision(i, j));
            }
        }
    }
    Ok(())
}
