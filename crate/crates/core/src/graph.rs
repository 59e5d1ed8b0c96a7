//! Undirected simple graphs, Erdős–Rényi sampling and the symmetric
//! normalized adjacency `A = D^{-1/2} E D^{-1/2}`.
//!
//! Isolated nodes are kept; their rows and columns of `A` are zero.

use std::sync::OnceLock;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng;

/// Node signals: an `N x C` matrix with one row per node.
pub type Signal = Matrix;

/// Undirected simple graph with cached normalization weights.
#[derive(Debug)]
pub struct Graph {
    num_nodes: usize,
    edges: Vec<(usize, usize)>,
    degrees: Vec<usize>,
    /// Sorted neighbor lists with the weight `1/sqrt(d_u d_v)`.
    neighbors: Vec<Vec<(usize, f64)>>,
    dense: OnceLock<Matrix>,
}

impl Clone for Graph {
    fn clone(&self) -> Self {
        Self {
            num_nodes: self.num_nodes,
            edges: self.edges.clone(),
            degrees: self.degrees.clone(),
            neighbors: self.neighbors.clone(),
            dense: OnceLock::new(),
        }
    }
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.num_nodes == other.num_nodes && self.edges == other.edges
    }
}

impl Graph {
    /// Builds a graph from unordered pairs. Pairs may be given in either
    /// orientation; self-loops, duplicates and out-of-range endpoints are
    /// rejected.
    pub fn new(num_nodes: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if num_nodes == 0 {
            return Err(Error::Parameter("graph needs at least one node".into()));
        }
        let mut list = Vec::new();
        for (u, v) in edges {
            if u == v {
                return Err(Error::Parameter(format!("self-loop at node {u}")));
            }
            if u >= num_nodes || v >= num_nodes {
                return Err(Error::Parameter(format!(
                    "edge ({u}, {v}) out of range for {num_nodes} nodes"
                )));
            }
            list.push((u.min(v), u.max(v)));
        }
        list.sort_unstable();
        let before = list.len();
        list.dedup();
        if list.len() != before {
            return Err(Error::Parameter("duplicate edge".into()));
        }

        let mut degrees = vec![0usize; num_nodes];
        for &(u, v) in &list {
            degrees[u] += 1;
            degrees[v] += 1;
        }
        let mut neighbors: Vec<Vec<(usize, f64)>> = degrees.iter().map(|&d| Vec::with_capacity(d)).collect();
        for &(u, v) in &list {
            let w = 1.0 / ((degrees[u] * degrees[v]) as f64).sqrt();
            neighbors[u].push((v, w));
            neighbors[v].push((u, w));
        }
        for adj in &mut neighbors {
            adj.sort_unstable_by_key(|&(n, _)| n);
        }

        Ok(Self {
            num_nodes,
            edges: list,
            degrees,
            neighbors,
            dense: OnceLock::new(),
        })
    }

    pub fn empty(num_nodes: usize) -> Result<Self> {
        Self::new(num_nodes, [])
    }

    pub fn complete(num_nodes: usize) -> Result<Self> {
        let edges = (0..num_nodes).flat_map(|u| (u + 1..num_nodes).map(move |v| (u, v)));
        Self::new(num_nodes, edges)
    }

    pub fn path(num_nodes: usize) -> Result<Self> {
        Self::new(num_nodes, (1..num_nodes).map(|v| (v - 1, v)))
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Sorted `(u, v)` pairs with `u < v`.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn neighbors(&self, v: usize) -> &[(usize, f64)] {
        &self.neighbors[v]
    }

    /// Dense normalized adjacency, built once and cached.
    pub fn norm_adjacency(&self) -> &Matrix {
        self.dense.get_or_init(|| {
            let n = self.num_nodes;
            let mut a = Matrix::zeros(n, n);
            for (u, adj) in self.neighbors.iter().enumerate() {
                for &(v, w) in adj {
                    a[(u, v)] = w;
                }
            }
            a
        })
    }

    /// One hop of normalized message passing: returns `A x` by neighbor
    /// traversal.
    pub fn aggregate(&self, x: &Signal) -> Result<Signal> {
        if x.rows() != self.num_nodes {
            return Err(Error::shape(
                "aggregate",
                format!("{} rows", self.num_nodes),
                format!("{} rows", x.rows()),
            ));
        }
        let c = x.cols();
        let mut out = Matrix::zeros(self.num_nodes, c);
        for (v, adj) in self.neighbors.iter().enumerate() {
            let row = out.row_mut(v);
            for &(u, w) in adj {
                for (o, &xu) in row.iter_mut().zip(x.row(u)) {
                    *o += w * xu;
                }
            }
        }
        Ok(out)
    }
}

/// Samples `G(n, p)`: every unordered pair is kept independently with
/// probability `p`, visiting pairs in lexicographic order.
pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Result<Graph> {
    let mut rng = rng::seeded(seed);
    erdos_renyi_with(n, p, &mut rng)
}

pub fn erdos_renyi_with(n: usize, p: f64, rng: &mut rng::Rng) -> Result<Graph> {
    if n == 0 {
        return Err(Error::Parameter("n must be positive".into()));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Parameter(format!("edge probability {p} not in (0, 1)")));
    }
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    Graph::new(n, edges)
}

pub fn normalize_adjacency(graph: &Graph) -> Matrix {
    graph.norm_adjacency().clone()
}

pub fn aggregate_once(graph: &Graph, x: &Signal) -> Result<Signal> {
    graph.aggregate(x)
}
