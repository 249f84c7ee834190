//! Undirected communication graphs and switched networks.
//!
//! Vertices are interceptor indices `0..n`. Laplacians and incidence matrices
//! are exact integer matrices; spectra are computed in the caller's scalar.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::{symmetric_eigenvalues, Matrix};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TopologyError {
    #[error("edge ({0}, {1}) is a self-loop")]
    SelfLoop(usize, usize),
    #[error("edge ({0}, {1}) appears more than once")]
    DuplicateEdge(usize, usize),
    #[error("edge ({0}, {1}) references a vertex outside 0..{2}")]
    VertexOutOfRange(usize, usize, usize),
    #[error("graph {0} is disconnected")]
    Disconnected(usize),
    #[error("graph {index} has {found} vertices, expected {expected}")]
    VertexCountMismatch { index: usize, expected: usize, found: usize },
    #[error("network has no graphs")]
    NoGraphs,
    #[error("switching schedule is empty")]
    EmptySchedule,
    #[error("switch times must be strictly increasing (entry {0})")]
    NonIncreasingSchedule(usize),
    #[error("schedule entry {entry} references graph {graph}, but only {count} graphs exist")]
    UnknownGraph { entry: usize, graph: usize, count: usize },
    #[error("invalid dwell range [{0}, {1}]")]
    DwellRange(f64, f64),
}

/// Simple undirected graph on vertices `0..n`, edges stored with `i < j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    /// Checks for self-loops, duplicates and out-of-range vertices.
    /// Connectivity is checked separately (see [`Graph::is_connected`]).
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, TopologyError> {
        let mut out: Vec<(usize, usize)> = Vec::new();
        for (a, b) in edges {
            if a == b {
                return Err(TopologyError::SelfLoop(a, b));
            }
            if a >= n || b >= n {
                return Err(TopologyError::VertexOutOfRange(a, b, n));
            }
            let e = (a.min(b), a.max(b));
            if out.contains(&e) {
                return Err(TopologyError::DuplicateEdge(a, b));
            }
            out.push(e);
        }
        out.sort_unstable();
        Ok(Self { n, edges: out })
    }

    /// Cycle `0-1-…-(n-1)-0`.
    pub fn cycle(n: usize) -> Self {
        Self::new(n, (0..n).map(|i| (i, (i + 1) % n))).expect("cycle needs n >= 3")
    }

    /// Path `0-1-…-(n-1)`.
    pub fn path(n: usize) -> Self {
        Self::new(n, (1..n).map(|i| (i - 1, i))).expect("valid path")
    }

    pub fn complete(n: usize) -> Self {
        Self::new(n, (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j)))).expect("valid complete graph")
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.iter().filter_map(move |&(a, b)| {
            if a == i {
                Some(b)
            } else if b == i {
                Some(a)
            } else {
                None
            }
        })
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors(i).count()
    }

    pub fn is_connected(&self) -> bool {
        self.is_connected_within(&vec![true; self.n])
    }

    /// Connectivity of the subgraph induced by the vertices flagged `true`.
    /// An induced subgraph with at most one vertex counts as connected.
    pub fn is_connected_within(&self, keep: &[bool]) -> bool {
        let Some(start) = keep.iter().position(|&k| k) else {
            return true;
        };
        let mut seen = vec![false; self.n];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(v) = stack.pop() {
            for w in self.neighbors(v) {
                if keep[w] && !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        keep.iter().zip(&seen).all(|(&k, &s)| !k || s)
    }

    /// `l_ii = deg(i)`, `l_ij = -1` for edges, zero elsewhere.
    pub fn laplacian(&self) -> Matrix<i64> {
        let mut l = Matrix::zeros(self.n, self.n);
        for &(i, j) in &self.edges {
            l[(i, i)] += 1;
            l[(j, j)] += 1;
            l[(i, j)] -= 1;
            l[(j, i)] -= 1;
        }
        l
    }

    /// `n × E` incidence matrix; in each edge column the lower-index vertex gets `+1`.
    pub fn incidence(&self) -> Matrix<i64> {
        let mut f = Matrix::zeros(self.n, self.edges.len());
        for (col, &(i, j)) in self.edges.iter().enumerate() {
            f[(i, col)] = 1;
            f[(j, col)] = -1;
        }
        f
    }

    /// All Laplacian eigenvalues, ascending.
    pub fn laplacian_spectrum<T: Scalar>(&self) -> Vec<T> {
        symmetric_eigenvalues(&self.laplacian().cast::<T>())
    }

    /// Second-smallest Laplacian eigenvalue (0 for graphs with fewer than two vertices).
    pub fn algebraic_connectivity<T: Scalar>(&self) -> T {
        if self.n < 2 {
            return T::zero();
        }
        self.laplacian_spectrum::<T>()[1].max(T::zero())
    }
}

/// Piecewise-constant switching signal entry: from `time` on, graph `graph` is active.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Switch {
    pub time: f64,
    pub graph: usize,
}

/// Finite family of connected graphs on one vertex set plus a switching schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchedNetwork {
    graphs: Vec<Graph>,
    schedule: Vec<Switch>,
}

/// Smallest edge count and smallest algebraic connectivity over a graph family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TopologyBounds<T> {
    pub min_edges: usize,
    pub min_lambda2: T,
}

impl SwitchedNetwork {
    pub fn new(graphs: Vec<Graph>, schedule: Vec<Switch>) -> Result<Self, TopologyError> {
        let first = graphs.first().ok_or(TopologyError::NoGraphs)?;
        let n = first.vertex_count();
        for (index, g) in graphs.iter().enumerate() {
            if g.vertex_count() != n {
                return Err(TopologyError::VertexCountMismatch { index, expected: n, found: g.vertex_count() });
            }
            if !g.is_connected() {
                return Err(TopologyError::Disconnected(index));
            }
        }
        if schedule.is_empty() {
            return Err(TopologyError::EmptySchedule);
        }
        for (entry, sw) in schedule.iter().enumerate() {
            if sw.graph >= graphs.len() {
                return Err(TopologyError::UnknownGraph { entry, graph: sw.graph, count: graphs.len() });
            }
            if entry > 0 && !(sw.time > schedule[entry - 1].time) {
                return Err(TopologyError::NonIncreasingSchedule(entry));
            }
        }
        Ok(Self { graphs, schedule })
    }

    /// A network that never switches.
    pub fn fixed(graph: Graph) -> Result<Self, TopologyError> {
        Self::new(vec![graph], vec![Switch { time: 0.0, graph: 0 }])
    }

    pub fn graphs(&self) -> &[Graph] {
        &self.graphs
    }

    pub fn schedule(&self) -> &[Switch] {
        &self.schedule
    }

    pub fn vertex_count(&self) -> usize {
        self.graphs[0].vertex_count()
    }

    /// Index of the graph active at `t` (right-continuous). Times before the
    /// first switch map to the first scheduled graph.
    pub fn active_graph(&self, t: f64) -> usize {
        let idx = self.schedule.partition_point(|sw| sw.time <= t);
        self.schedule[idx.saturating_sub(1)].graph
    }

    pub fn graph_at(&self, t: f64) -> &Graph {
        &self.graphs[self.active_graph(t)]
    }

    /// Number of schedule entries with `t0 < time <= t1` that change the active graph.
    pub fn switches_within(&self, t0: f64, t1: f64) -> usize {
        self.schedule.windows(2).filter(|w| w[1].time > t0 && w[1].time <= t1 && w[1].graph != w[0].graph).count()
    }
}

/// Minimum edge count and minimum `λ₂` across the network's graphs.
pub fn topology_bounds<T: Scalar>(net: &SwitchedNetwork) -> Result<TopologyBounds<T>, TopologyError> {
    let mut min_edges = usize::MAX;
    let mut min_lambda2 = T::infinity();
    for (index, g) in net.graphs().iter().enumerate() {
        let lambda2 = g.algebraic_connectivity::<T>();
        if !(lambda2 > T::zero()) || g.edge_count() == 0 {
            return Err(TopologyError::Disconnected(index));
        }
        min_edges = min_edges.min(g.edge_count());
        min_lambda2 = min_lambda2.min(lambda2);
    }
    Ok(TopologyBounds { min_edges, min_lambda2 })
}

/// Seeded switching schedule over `[0, horizon]` with dwell times drawn
/// uniformly from `[dwell_min, dwell_max]`. Consecutive entries always
/// select a different graph when more than one is available.
pub fn random_schedule(
    graph_count: usize,
    horizon: f64,
    dwell_min: f64,
    dwell_max: f64,
    seed: u64,
) -> Result<Vec<Switch>, TopologyError> {
    if graph_count == 0 {
        return Err(TopologyError::NoGraphs);
    }
    if !(dwell_min > 0.0 && dwell_max >= dwell_min && dwell_max.is_finite()) {
        return Err(TopologyError::DwellRange(dwell_min, dwell_max));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut graph = rng.gen_range(0..graph_count);
    let mut t = 0.0;
    let mut out = Vec::new();
    while t <= horizon {
        out.push(Switch { time: t, graph });
        t += if dwell_max > dwell_min { rng.gen_range(dwell_min..=dwell_max) } else { dwell_min };
        if graph_count > 1 {
            graph = (graph + rng.gen_range(1..graph_count)) % graph_count;
        }
    }
    Ok(out)
}
