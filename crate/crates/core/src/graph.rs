//! Finite weighted multigraphs, the gluing (quotient) construction and
//! hop-metric utilities.
//!
//! Graphs are immutable after construction. Parallel edges are kept
//! explicitly; self-loops are rejected (gluing drops the ones it creates).

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::sync::atomic::{AtomicU64, Ordering};

use crate::field::HarmonicField;

static NEXT_GRAPH_ID: AtomicU64 = AtomicU64::new(1);

/// Dense nonnegative vertex index, stable within one [`Graph`].
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct VertexId(pub usize);

impl VertexId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One undirected weighted edge. Endpoints are unordered; `u != v`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub u: VertexId,
    pub v: VertexId,
    pub conductance: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum GraphError {
    /// The edge list does not connect all vertices.
    DisconnectedGraph,
    /// Self-loop, endpoint out of range, or nonpositive conductance.
    InvalidEdge { index: usize },
    /// A vertex-set argument that must be nonempty was empty.
    EmptySet,
    /// A field indexed by a different graph or of the wrong length.
    DimensionMismatch,
}

impl fmt::Display for GraphError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphError::DisconnectedGraph => write!(f, "graph is not connected"),
            GraphError::InvalidEdge { index } => write!(
                f,
                "invalid edge at position {index}: self-loop, out-of-range endpoint or nonpositive conductance"
            ),
            GraphError::EmptySet => write!(f, "vertex set must be nonempty"),
            GraphError::DimensionMismatch => {
                write!(f, "field does not index this graph")
            }
        }
    }
}

/// Finite connected weighted multigraph.
#[derive(Clone, Debug)]
pub struct Graph {
    id: u64,
    vertex_count: usize,
    edges: Vec<Edge>,
    /// Per-vertex incident half-edges `(neighbor, conductance)`, one entry
    /// per parallel edge.
    adjacency: Vec<Vec<(VertexId, f64)>>,
    /// Weighted degree: sum of incident conductances.
    degrees: Vec<f64>,
}

impl Graph {
    /// Builds a connected graph from `(u, v, conductance)` triples.
    pub fn build(
        vertex_count: usize,
        weighted_edges: &[(usize, usize, f64)],
    ) -> Result<Graph, GraphError> {
        let mut edges = Vec::with_capacity(weighted_edges.len());
        let mut adjacency = vec![Vec::new(); vertex_count];
        let mut degrees = vec![0.0f64; vertex_count];
        for (index, &(u, v, c)) in weighted_edges.iter().enumerate() {
            if u >= vertex_count || v >= vertex_count || u == v || !(c > 0.0) || !c.is_finite() {
                return Err(GraphError::InvalidEdge { index });
            }
            edges.push(Edge {
                u: VertexId(u),
                v: VertexId(v),
                conductance: c,
            });
            adjacency[u].push((VertexId(v), c));
            adjacency[v].push((VertexId(u), c));
            degrees[u] += c;
            degrees[v] += c;
        }
        let g = Graph {
            id: NEXT_GRAPH_ID.fetch_add(1, Ordering::Relaxed),
            vertex_count,
            edges,
            adjacency,
            degrees,
        };
        if !g.is_connected() {
            return Err(GraphError::DisconnectedGraph);
        }
        Ok(g)
    }

    /// Identifier used to detect fields applied to the wrong graph.
    #[inline]
    pub fn id(&self) -> u64 {
        self.id
    }

    #[inline]
    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    #[inline]
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Incident half-edges of `v`, parallel edges listed separately.
    #[inline]
    pub fn neighbors(&self, v: VertexId) -> &[(VertexId, f64)] {
        &self.adjacency[v.0]
    }

    /// Weighted degree `deg(v) = sum of incident conductances`.
    #[inline]
    pub fn degree(&self, v: VertexId) -> f64 {
        self.degrees[v.0]
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> {
        (0..self.vertex_count).map(VertexId)
    }

    fn is_connected(&self) -> bool {
        if self.vertex_count == 0 {
            return false;
        }
        let mut seen = vec![false; self.vertex_count];
        let mut queue = VecDeque::new();
        seen[0] = true;
        queue.push_back(VertexId(0));
        let mut count = 1;
        while let Some(x) = queue.pop_front() {
            for &(y, _) in self.neighbors(x) {
                if !seen[y.0] {
                    seen[y.0] = true;
                    count += 1;
                    queue.push_back(y);
                }
            }
        }
        count == self.vertex_count
    }

    /// Hop distances from `source` (conductances ignored).
    pub fn bfs_distances(&self, source: VertexId) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.vertex_count];
        let mut queue = VecDeque::new();
        dist[source.0] = 0;
        queue.push_back(source);
        while let Some(x) = queue.pop_front() {
            for &(y, _) in self.neighbors(x) {
                if dist[y.0] == usize::MAX {
                    dist[y.0] = dist[x.0] + 1;
                    queue.push_back(y);
                }
            }
        }
        dist
    }

    /// Connected components of the subgraph induced on `!excluded`.
    /// Returns a component index per vertex (`usize::MAX` on excluded ones).
    pub fn components_excluding(&self, excluded: &[bool]) -> (Vec<usize>, usize) {
        let mut comp = vec![usize::MAX; self.vertex_count];
        let mut n_comp = 0;
        for s in 0..self.vertex_count {
            if excluded[s] || comp[s] != usize::MAX {
                continue;
            }
            comp[s] = n_comp;
            let mut queue = VecDeque::new();
            queue.push_back(VertexId(s));
            while let Some(x) = queue.pop_front() {
                for &(y, _) in self.neighbors(x) {
                    if !excluded[y.0] && comp[y.0] == usize::MAX {
                        comp[y.0] = n_comp;
                        queue.push_back(y);
                    }
                }
            }
            n_comp += 1;
        }
        (comp, n_comp)
    }
}

/// Surjective vertex map induced by gluing a set into a single vertex.
#[derive(Clone, Debug)]
pub struct QuotientMap {
    /// `map[source] = quotient vertex`.
    pub map: Vec<VertexId>,
    /// The vertex all glued sources collapse onto.
    pub glued_block: VertexId,
}

impl QuotientMap {
    #[inline]
    pub fn image(&self, v: VertexId) -> VertexId {
        self.map[v.0]
    }
}

/// Glues all vertices of `block` into one vertex. Edges internal to the
/// block disappear; edges leaving it are kept with their conductances, so
/// parallel edges accumulate and the cut conductance is preserved.
pub fn glue(g: &Graph, block: &[VertexId]) -> Result<(Graph, QuotientMap), GraphError> {
    if block.is_empty() {
        return Err(GraphError::EmptySet);
    }
    let mut in_block = vec![false; g.vertex_count()];
    for &v in block {
        if v.0 >= g.vertex_count() {
            return Err(GraphError::InvalidEdge { index: v.0 });
        }
        in_block[v.0] = true;
    }
    // Quotient ids keep the relative order of untouched vertices; the block
    // takes the slot of its smallest member.
    let mut map = vec![VertexId(0); g.vertex_count()];
    let mut next = 0usize;
    let mut block_id = None;
    for v in 0..g.vertex_count() {
        if in_block[v] {
            if block_id.is_none() {
                block_id = Some(VertexId(next));
                next += 1;
            }
            map[v] = block_id.unwrap();
        } else {
            map[v] = VertexId(next);
            next += 1;
        }
    }
    let block_id = block_id.unwrap();
    let mut quotient_edges = Vec::with_capacity(g.edges().len());
    for e in g.edges() {
        let qu = map[e.u.0];
        let qv = map[e.v.0];
        if qu != qv {
            quotient_edges.push((qu.0, qv.0, e.conductance));
        }
    }
    let quotient = Graph::build(next, &quotient_edges)?;
    Ok((
        quotient,
        QuotientMap {
            map,
            glued_block: block_id,
        },
    ))
}

/// Vertices within hop distance `radius` of `center`, sorted by id.
pub fn metric_ball(g: &Graph, center: VertexId, radius: usize) -> Vec<VertexId> {
    let dist = g.bfs_distances(center);
    let mut ball: Vec<VertexId> = g.vertices().filter(|v| dist[v.0] <= radius).collect();
    ball.sort();
    ball
}

/// Unnormalized graph Laplacian `(Δf)(x) = Σ_{y~x} c(x,y) (f(y) - f(x))`,
/// with parallel edges counted separately.
pub fn laplacian_apply(g: &Graph, f: &HarmonicField) -> Result<HarmonicField, GraphError> {
    if f.len() != g.vertex_count() || f.domain_tag() != g.id() {
        return Err(GraphError::DimensionMismatch);
    }
    let mut out = vec![0.0f64; g.vertex_count()];
    for e in g.edges() {
        let diff = f[e.v] - f[e.u];
        out[e.u.0] += e.conductance * diff;
        out[e.v.0] -= e.conductance * diff;
    }
    Ok(HarmonicField::new(g, out))
}
