//! Topology specs: `path:n`, `ring:n`, `star:n`, `two-stars:n1,n2`,
//! `er:n,p,seed`, `star-dense:k,m`, `cluster-dense:k,m` and `file:path`.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use bass::rng::{bernoulli, seeded_stream, DATA_STREAM};
use bass::Topology;

use crate::error::CliError;

/// Connectivity retries for `er` before giving up.
pub const ER_ATTEMPTS: usize = 100;

#[derive(Clone, Debug, PartialEq)]
pub enum TopologySpec {
    Path(usize),
    Ring(usize),
    /// `n` nodes in total: center 0 and leaves 1..n.
    Star(usize),
    /// Two stars of `n1` and `n2` nodes whose centers 0 and 1 are joined.
    TwoStars(usize, usize),
    ErdosRenyi { n: usize, p: f64, seed: u64 },
    /// `k` hubs forming a clique, each with `m` private leaves.
    StarDense { hubs: usize, leaves: usize },
    /// `k` cliques of `m` nodes; the first node of each clique is its hub and
    /// the hubs form a clique.
    ClusterDense { clusters: usize, size: usize },
    File(PathBuf),
}

impl TopologySpec {
    pub fn generate(&self) -> Result<Topology, CliError> {
        let t = match *self {
            Self::Path(n) => {
                need(n >= 1, "path needs at least one node")?;
                let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
                Topology::new(n, &edges)?
            }
            Self::Ring(n) => {
                need(n >= 3, "ring needs at least three nodes")?;
                let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
                Topology::new(n, &edges)?
            }
            Self::Star(n) => {
                need(n >= 2, "star needs at least two nodes")?;
                let edges: Vec<_> = (1..n).map(|l| (0, l)).collect();
                Topology::new(n, &edges)?
            }
            Self::TwoStars(n1, n2) => {
                need(n1 >= 1 && n2 >= 1, "each star needs a center")?;
                let mut edges = vec![(0, 1)];
                let mut next = 2;
                for (center, size) in [(0, n1), (1, n2)] {
                    for _ in 1..size {
                        edges.push((center, next));
                        next += 1;
                    }
                }
                Topology::new(n1 + n2, &edges)?
            }
            Self::StarDense { hubs, leaves } => {
                need(hubs >= 1, "star-dense needs at least one hub")?;
                let mut edges = Vec::new();
                for i in 0..hubs {
                    for j in (i + 1)..hubs {
                        edges.push((i, j));
                    }
                }
                let mut next = hubs;
                for h in 0..hubs {
                    for _ in 0..leaves {
                        edges.push((h, next));
                        next += 1;
                    }
                }
                Topology::new(hubs * (1 + leaves), &edges)?
            }
            Self::ClusterDense { clusters, size } => {
                need(clusters >= 1 && size >= 1, "cluster-dense needs clusters of at least one node")?;
                let mut edges = Vec::new();
                for c in 0..clusters {
                    let base = c * size;
                    for i in 0..size {
                        for j in (i + 1)..size {
                            edges.push((base + i, base + j));
                        }
                    }
                    for d in (c + 1)..clusters {
                        edges.push((base, d * size));
                    }
                }
                Topology::new(clusters * size, &edges)?
            }
            Self::ErdosRenyi { n, p, seed } => erdos_renyi(n, p, seed)?,
            Self::File(ref path) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
                    path: path.clone(),
                    source: e,
                })?;
                Topology::parse_text(&text)?
            }
        };
        if !t.is_connected() {
            return Err(bass::error::GraphError::Disconnected.into());
        }
        Ok(t)
    }
}

fn need(ok: bool, msg: &str) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Spec(msg.into()))
    }
}

/// G(n, p) with pairs visited in lexicographic order, one uniform draw per
/// pair, resampled until connected.
fn erdos_renyi(n: usize, p: f64, seed: u64) -> Result<Topology, CliError> {
    need(n >= 1, "er needs at least one node")?;
    need((0.0..=1.0).contains(&p), "er edge probability must lie in [0, 1]")?;
    let mut rng = seeded_stream(seed, DATA_STREAM);
    for _ in 0..ER_ATTEMPTS {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if bernoulli(&mut rng, p) {
                    edges.push((i, j));
                }
            }
        }
        let t = Topology::new(n, &edges)?;
        if t.is_connected() {
            return Ok(t);
        }
    }
    Err(CliError::Spec(format!(
        "er:{n},{p},{seed} stayed disconnected after {ER_ATTEMPTS} draws; use a larger edge probability"
    )))
}

impl FromStr for TopologySpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (kind, args) = s.split_once(':').unwrap_or((s, ""));
        let bad = || CliError::Spec(format!("cannot parse topology `{s}`"));
        let nums = |want: usize| -> Result<Vec<&str>, CliError> {
            let parts: Vec<&str> = args.split(',').map(str::trim).collect();
            if parts.len() == want && parts.iter().all(|p| !p.is_empty()) {
                Ok(parts)
            } else {
                Err(bad())
            }
        };
        let int = |v: &str| v.parse::<usize>().map_err(|_| bad());
        Ok(match kind {
            "path" => Self::Path(int(nums(1)?[0])?),
            "ring" => Self::Ring(int(nums(1)?[0])?),
            "star" => Self::Star(int(nums(1)?[0])?),
            "two-stars" => {
                let v = nums(2)?;
                Self::TwoStars(int(v[0])?, int(v[1])?)
            }
            "star-dense" => {
                let v = nums(2)?;
                Self::StarDense {
                    hubs: int(v[0])?,
                    leaves: int(v[1])?,
                }
            }
            "cluster-dense" => {
                let v = nums(2)?;
                Self::ClusterDense {
                    clusters: int(v[0])?,
                    size: int(v[1])?,
                }
            }
            "er" => {
                let v = nums(3)?;
                Self::ErdosRenyi {
                    n: int(v[0])?,
                    p: v[1].parse().map_err(|_| bad())?,
                    seed: v[2].parse().map_err(|_| bad())?,
                }
            }
            "file" if !args.is_empty() => Self::File(PathBuf::from(args)),
            _ => return Err(bad()),
        })
    }
}

impl fmt::Display for TopologySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Path(n) => write!(f, "path:{n}"),
            Self::Ring(n) => write!(f, "ring:{n}"),
            Self::Star(n) => write!(f, "star:{n}"),
            Self::TwoStars(a, b) => write!(f, "two-stars:{a},{b}"),
            Self::StarDense { hubs, leaves } => write!(f, "star-dense:{hubs},{leaves}"),
            Self::ClusterDense { clusters, size } => write!(f, "cluster-dense:{clusters},{size}"),
            Self::ErdosRenyi { n, p, seed } => write!(f, "er:{n},{p},{seed}"),
            Self::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}
