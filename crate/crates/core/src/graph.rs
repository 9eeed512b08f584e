//! Base communication topology and the graph analytics built on it.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;

use crate::error::GraphError;
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Undirected simple graph on nodes `0..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Topology {
    n: usize,
    /// Sorted, `i < j`, no duplicates.
    edges: Vec<(usize, usize)>,
    /// Sorted neighbor lists.
    neighbors: Vec<Vec<usize>>,
}

impl Topology {
    /// Builds a topology from an edge list. Symmetric duplicates collapse to
    /// one undirected edge.
    pub fn new(n: usize, edge_list: &[(usize, usize)]) -> Result<Self, GraphError> {
        let mut set = BTreeSet::new();
        for &(a, b) in edge_list {
            if a >= n || b >= n {
                return Err(GraphError::OutOfRange(a, b, n));
            }
            if a == b {
                return Err(GraphError::SelfLoop(a));
            }
            set.insert((a.min(b), a.max(b)));
        }
        let edges: Vec<_> = set.into_iter().collect();
        let mut neighbors = vec![Vec::new(); n];
        for &(a, b) in &edges {
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        Ok(Self {
            n,
            edges,
            neighbors,
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.neighbors.iter().map(Vec::len).collect()
    }

    pub fn max_degree(&self) -> usize {
        self.neighbors.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i < self.n && self.neighbors[i].binary_search(&j).is_ok()
    }

    /// True when `i` and `j` have at least one neighbor in common.
    pub fn share_neighbor(&self, i: usize, j: usize) -> bool {
        let (a, b) = (&self.neighbors[i], &self.neighbors[j]);
        let (mut x, mut y) = (0, 0);
        while x < a.len() && y < b.len() {
            match a[x].cmp(&b[y]) {
                std::cmp::Ordering::Less => x += 1,
                std::cmp::Ordering::Greater => y += 1,
                std::cmp::Ordering::Equal => return true,
            }
        }
        false
    }

    pub fn adjacency<T: Scalar>(&self) -> Matrix<T> {
        let mut a = Matrix::zeros(self.n, self.n);
        for &(i, j) in &self.edges {
            a[(i, j)] = T::one();
            a[(j, i)] = T::one();
        }
        a
    }

    /// `L = diag(d) − A`.
    pub fn laplacian<T: Scalar>(&self) -> Matrix<T> {
        let mut l = self.adjacency::<T>().map(|v| -v);
        for i in 0..self.n {
            l[(i, i)] = T::of_usize(self.degree(i));
        }
        l
    }

    /// Breadth-first reachability from node 0. A single node is connected.
    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return false;
        }
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for &w in &self.neighbors[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    queue.push_back(w);
                }
            }
        }
        count == self.n
    }

    /// Same node set; edges are the original ones plus every pair of nodes
    /// with a common neighbor. Two nodes may broadcast in the same slot only
    /// if they are non-adjacent here.
    pub fn auxiliary_graph(&self) -> Topology {
        let mut extra = self.edges.clone();
        for nbrs in &self.neighbors {
            for (k, &a) in nbrs.iter().enumerate() {
                for &b in &nbrs[k + 1..] {
                    extra.push((a, b));
                }
            }
        }
        Topology::new(self.n, &extra).expect("auxiliary edges stay in range")
    }

    /// Unnormalized shortest-path betweenness over ordered source/target
    /// pairs, endpoints excluded (so each unordered pair contributes twice).
    /// Ties between shortest paths split credit fractionally.
    pub fn raw_betweenness<T: Scalar>(&self) -> Vec<T> {
        let n = self.n;
        let mut score = vec![T::zero(); n];
        let mut sigma = vec![T::zero(); n];
        let mut dist = vec![usize::MAX; n];
        let mut delta = vec![T::zero(); n];
        let mut order = Vec::with_capacity(n);
        let mut queue = VecDeque::new();

        for s in 0..n {
            sigma.iter_mut().for_each(|v| *v = T::zero());
            delta.iter_mut().for_each(|v| *v = T::zero());
            dist.iter_mut().for_each(|v| *v = usize::MAX);
            order.clear();

            sigma[s] = T::one();
            dist[s] = 0;
            queue.push_back(s);
            while let Some(v) = queue.pop_front() {
                order.push(v);
                for &w in &self.neighbors[v] {
                    if dist[w] == usize::MAX {
                        dist[w] = dist[v] + 1;
                        queue.push_back(w);
                    }
                    if dist[w] == dist[v] + 1 {
                        let sv = sigma[v];
                        sigma[w] += sv;
                    }
                }
            }
            // Dependency accumulation in reverse BFS order.
            for &w in order.iter().rev() {
                for &v in &self.neighbors[w] {
                    if dist[v] != usize::MAX && dist[v] + 1 == dist[w] {
                        let c = sigma[v] / sigma[w] * (T::one() + delta[w]);
                        delta[v] += c;
                    }
                }
                if w != s {
                    score[w] += delta[w];
                }
            }
        }
        score
    }

    /// Betweenness normalized to a probability vector. Falls back to uniform
    /// when no node intermediates any shortest path (complete graphs, K2).
    pub fn betweenness_centrality<T: Scalar>(&self) -> Result<CentralityVector<T>, GraphError> {
        if self.n == 0 {
            return Err(GraphError::Empty);
        }
        if !self.is_connected() {
            return Err(GraphError::Disconnected);
        }
        let raw = self.raw_betweenness::<T>();
        let total = raw.iter().fold(T::zero(), |acc, &v| acc + v);
        let values = if total == T::zero() {
            vec![T::one() / T::of_usize(self.n); self.n]
        } else {
            raw.into_iter().map(|v| v / total).collect()
        };
        Ok(CentralityVector { values })
    }

    /// Parses the plain-text format: first non-comment line is `n`, then one
    /// whitespace-separated `i j` pair per line. Lines starting with `#` and
    /// blank lines are ignored.
    pub fn parse_text(text: &str) -> Result<Self, GraphError> {
        let mut n = None;
        let mut edges = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse = |tok: &str| {
                tok.parse::<usize>().map_err(|e| GraphError::Parse {
                    line: idx + 1,
                    msg: format!("{tok:?}: {e}"),
                })
            };
            let toks: Vec<&str> = line.split_whitespace().collect();
            match (n, toks.as_slice()) {
                (None, [count]) => n = Some(parse(count)?),
                (None, _) => {
                    return Err(GraphError::Parse {
                        line: idx + 1,
                        msg: "expected node count".into(),
                    })
                }
                (Some(_), [a, b]) => edges.push((parse(a)?, parse(b)?)),
                (Some(_), _) => {
                    return Err(GraphError::Parse {
                        line: idx + 1,
                        msg: "expected `i j`".into(),
                    })
                }
            }
        }
        let n = n.ok_or(GraphError::Parse {
            line: 0,
            msg: "missing node count".into(),
        })?;
        Self::new(n, &edges)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.n);
        for &(i, j) in &self.edges {
            let _ = writeln!(out, "{i} {j}");
        }
        out
    }
}

/// Per-node importance weights summing to one.
#[derive(Clone, Debug, PartialEq)]
pub struct CentralityVector<T> {
    values: Vec<T>,
}

impl<T: Scalar> CentralityVector<T> {
    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }
}
