//! Loop erasure, Wilson's algorithm (wired and rooted at infinity),
//! oriented-tree queries and one-endedness diagnostics.
//!
//! Trees are stored as parent maps. Wilson's sampler keeps only per-vertex
//! last-exit pointers, so loops pop implicitly when a pointer is
//! overwritten; retracing the pointers after the walk lands on the tree
//! yields the loop-erased branch.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;

use crate::crw::{run_chain, ConditionedChain, CrwError, StopRule};
use crate::dirichlet::{hitting_field, DirichletError};
use crate::graph::{Graph, VertexId};
use crate::models::{Exhaustion, ExhaustionLevel};
use crate::rng::stream;

#[derive(Clone, Debug, PartialEq)]
pub enum UstError {
    /// The ordering does not cover every non-root vertex.
    IncompleteOrdering,
    /// The conditioned chain lives on a different graph than the level.
    ChainGraphMismatch,
    /// Past/future queries need an oriented tree.
    UnorientedTree,
    /// Exact path enumeration would blow up.
    TooLarge,
    Crw(CrwError),
    Dirichlet(DirichletError),
}

impl fmt::Display for UstError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UstError::IncompleteOrdering => write!(f, "ordering must cover all non-root vertices"),
            UstError::ChainGraphMismatch => write!(f, "chain and level graphs differ"),
            UstError::UnorientedTree => write!(f, "tree carries no orientation"),
            UstError::TooLarge => write!(f, "graph too large for exact path enumeration"),
            UstError::Crw(e) => write!(f, "{e}"),
            UstError::Dirichlet(e) => write!(f, "{e}"),
        }
    }
}

impl From<CrwError> for UstError {
    fn from(e: CrwError) -> Self {
        UstError::Crw(e)
    }
}

impl From<DirichletError> for UstError {
    fn from(e: DirichletError) -> Self {
        UstError::Dirichlet(e)
    }
}

/// Chronological loop erasure: revisiting a vertex removes the cycle since
/// its first occurrence.
pub fn loop_erase(path: &[VertexId]) -> Vec<VertexId> {
    let max_id = path.iter().map(|v| v.0).max().unwrap_or(0);
    let mut pos: Vec<usize> = vec![usize::MAX; max_id + 1];
    let mut out: Vec<VertexId> = Vec::new();
    for &v in path {
        if pos[v.0] != usize::MAX {
            for dropped in out.drain(pos[v.0] + 1..) {
                pos[dropped.0] = usize::MAX;
            }
        } else {
            pos[v.0] = out.len();
            out.push(v);
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orientation {
    TowardRoot,
    TowardInfinity,
    Unoriented,
}

/// A spanning tree as a parent map; the root is the unique vertex without
/// a parent.
#[derive(Clone, Debug)]
pub struct SpanningTree {
    pub parent: Vec<Option<VertexId>>,
    pub root: VertexId,
    pub orientation: Orientation,
    pub graph_id: u64,
}

impl SpanningTree {
    /// Checks the parent map spans the graph, uses only real edges and has
    /// no cycles.
    pub fn validate(&self, g: &Graph) -> bool {
        if self.graph_id != g.id() || self.parent.len() != g.vertex_count() {
            return false;
        }
        if self.parent[self.root.0].is_some() {
            return false;
        }
        let mut depth = vec![usize::MAX; g.vertex_count()];
        depth[self.root.0] = 0;
        for v in g.vertices() {
            // walk to the root, must terminate
            let mut chain = Vec::new();
            let mut cur = v;
            while depth[cur.0] == usize::MAX {
                chain.push(cur);
                match self.parent[cur.0] {
                    None => return false,
                    Some(p) => {
                        if !g.neighbors(cur).iter().any(|&(u, _)| u == p) {
                            return false;
                        }
                        if chain.len() > g.vertex_count() {
                            return false;
                        }
                        cur = p;
                    }
                }
            }
            let base = depth[cur.0];
            for (i, &w) in chain.iter().rev().enumerate() {
                depth[w.0] = base + i + 1;
            }
        }
        true
    }

    /// Depth of each vertex (edge count to the root).
    pub fn depths(&self) -> Vec<usize> {
        let n = self.parent.len();
        let mut depth = vec![usize::MAX; n];
        depth[self.root.0] = 0;
        for v in 0..n {
            let mut chain = Vec::new();
            let mut cur = VertexId(v);
            while depth[cur.0] == usize::MAX {
                chain.push(cur);
                cur = self.parent[cur.0].expect("tree is rooted");
            }
            let base = depth[cur.0];
            for (i, &w) in chain.iter().rev().enumerate() {
                depth[w.0] = base + i + 1;
            }
        }
        depth
    }

    /// Undirected edge set in canonical order, for law comparisons.
    pub fn edge_key(&self) -> Vec<(usize, usize)> {
        let mut edges: Vec<(usize, usize)> = self
            .parent
            .iter()
            .enumerate()
            .filter_map(|(v, p)| p.map(|p| (v.min(p.0), v.max(p.0))))
            .collect();
        edges.sort();
        edges
    }

    /// Drops the orientation marker (the parent map stays, but past/future
    /// queries refuse to answer).
    pub fn unoriented(mut self) -> SpanningTree {
        self.orientation = Orientation::Unoriented;
        self
    }
}

/// Wilson's algorithm on a finite graph, rooted at `root`.
///
/// The tree law does not depend on `ordering`; the sampled tree for a
/// fixed seed does, which the ordering-invariance tests exploit.
pub fn wilson_wired(
    g: &Graph,
    root: VertexId,
    ordering: &[VertexId],
    rng: &mut impl Rng,
) -> Result<SpanningTree, UstError> {
    let n = g.vertex_count();
    let mut covered = vec![false; n];
    covered[root.0] = true;
    for &v in ordering {
        if v.0 < n {
            covered[v.0] = true;
        }
    }
    if covered.iter().any(|&c| !c) {
        return Err(UstError::IncompleteOrdering);
    }
    // cumulative neighbor weights for conductance-proportional steps
    let cum: Vec<Vec<(VertexId, f64)>> = g
        .vertices()
        .map(|v| {
            let mut acc = 0.0;
            g.neighbors(v)
                .iter()
                .map(|&(u, c)| {
                    acc += c;
                    (u, acc)
                })
                .collect()
        })
        .collect();
    let step = |v: VertexId, rng: &mut dyn rand::RngCore| -> VertexId {
        let row = &cum[v.0];
        let total = row.last().unwrap().1;
        let u = rand::Rng::random::<f64>(rng) * total;
        let mut lo = 0usize;
        let mut hi = row.len();
        while lo < hi {
            let mid = (lo + hi) / 2;
            if row[mid].1 <= u {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        row[lo.min(row.len() - 1)].0
    };

    let mut in_tree = vec![false; n];
    let mut next: Vec<Option<VertexId>> = vec![None; n];
    in_tree[root.0] = true;
    for &start in ordering {
        let mut v = start;
        while !in_tree[v.0] {
            let u = step(v, rng);
            next[v.0] = Some(u); // cycle popping: overwrite the last exit
            v = u;
        }
        let mut v = start;
        while !in_tree[v.0] {
            in_tree[v.0] = true;
            v = next[v.0].unwrap();
        }
    }
    Ok(SpanningTree {
        parent: next,
        root,
        orientation: Orientation::TowardRoot,
        graph_id: g.id(),
    })
}

/// Wilson's algorithm rooted at infinity on a wired truncation: the first
/// branch is the loop erasure of a conditioned walk from the anchor run to
/// the wired vertex, later branches are plain loop-erased walks stopped on
/// the growing forest. Edges point the way the branches were traversed,
/// toward the wired vertex.
pub fn wilson_infinity(
    level: &ExhaustionLevel,
    chain: &ConditionedChain<'_>,
    ordering: &[VertexId],
    rng: &mut impl Rng,
) -> Result<SpanningTree, UstError> {
    if chain.graph().id() != level.graph.id() {
        return Err(UstError::ChainGraphMismatch);
    }
    let g = &level.graph;
    let n = g.vertex_count();
    let root = level.boundary;
    let start = ordering.first().copied().ok_or(UstError::IncompleteOrdering)?;
    if start != chain.anchor() {
        return Err(UstError::ChainGraphMismatch);
    }
    let mut covered = vec![false; n];
    covered[root.0] = true;
    for &v in ordering {
        if v.0 < n {
            covered[v.0] = true;
        }
    }
    if covered.iter().any(|&c| !c) {
        return Err(UstError::IncompleteOrdering);
    }

    let mut in_tree = vec![false; n];
    let mut next: Vec<Option<VertexId>> = vec![None; n];
    in_tree[root.0] = true;

    // first branch: loop-erased conditioned walk to the wired vertex
    let (path, _) = run_chain(chain, start, &StopRule::BoundaryHit, rng);
    let branch = loop_erase(&path);
    for w in branch.windows(2) {
        next[w[0].0] = Some(w[1]);
        in_tree[w[0].0] = true;
    }

    // the rest is plain Wilson against the current forest
    let cum: Vec<Vec<(VertexId, f64)>> = g
        .vertices()
        .map(|v| {
            let mut acc = 0.0;
            g.neighbors(v)
                .iter()
                .map(|&(u, c)| {
                    acc += c;
                    (u, acc)
                })
                .collect()
        })
        .collect();
    for &start in &ordering[1..] {
        let mut v = start;
        while !in_tree[v.0] {
            let row = &cum[v.0];
            let total = row.last().unwrap().1;
            let u = rng.random::<f64>() * total;
            let mut lo = 0usize;
            let mut hi = row.len();
            while lo < hi {
                let mid = (lo + hi) / 2;
                if row[mid].1 <= u {
                    lo = mid + 1;
                } else {
                    hi = mid;
                }
            }
            let u = row[lo.min(row.len() - 1)].0;
            next[v.0] = Some(u);
            v = u;
        }
        let mut v = start;
        while !in_tree[v.0] {
            in_tree[v.0] = true;
            v = next[v.0].unwrap();
        }
    }
    Ok(SpanningTree {
        parent: next,
        root,
        orientation: Orientation::TowardInfinity,
        graph_id: g.id(),
    })
}

/// Canonical ordering for level samplers: anchor first, everything else by
/// id.
pub fn default_ordering(level: &ExhaustionLevel, anchor: VertexId) -> Vec<VertexId> {
    let mut ordering = vec![anchor];
    ordering.extend(
        level
            .graph
            .vertices()
            .filter(|&v| v != anchor && v != level.boundary),
    );
    ordering
}

/// All vertices whose forward path passes through `v` (including `v`).
pub fn past(tree: &SpanningTree, v: VertexId) -> Result<Vec<VertexId>, UstError> {
    if tree.orientation == Orientation::Unoriented {
        return Err(UstError::UnorientedTree);
    }
    let n = tree.parent.len();
    let mut children: Vec<Vec<VertexId>> = vec![Vec::new(); n];
    for (w, p) in tree.parent.iter().enumerate() {
        if let Some(p) = p {
            children[p.0].push(VertexId(w));
        }
    }
    let mut out = vec![v];
    let mut stack = vec![v];
    while let Some(x) = stack.pop() {
        for &c in &children[x.0] {
            out.push(c);
            stack.push(c);
        }
    }
    out.sort();
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct LevelEndStats {
    pub level: u32,
    /// Fraction of sampled trees whose past of the anchor reaches hop
    /// distance `ceil(inner_fraction * level)`.
    pub reach_prob: f64,
    pub mean_past: f64,
    pub max_past: usize,
    pub samples: usize,
}

#[derive(Clone, Debug)]
pub struct EndDiagnostic {
    pub per_level: Vec<LevelEndStats>,
    /// Raised when the reach probability fails to decrease (margin 0.02)
    /// across at least three levels: the two-ended signature.
    pub two_ended_suspect: bool,
}

/// Samples oriented trees at every level of the exhaustion and watches how
/// far the past of the anchor reaches.
pub fn end_diagnostic(
    exh: &Exhaustion,
    n_samples: usize,
    inner_fraction: f64,
    seed: u64,
) -> Result<EndDiagnostic, UstError> {
    let mut per_level = Vec::with_capacity(exh.levels.len());
    for (li, lvl) in exh.levels.iter().enumerate() {
        let anchor = exh.anchor_vertex(lvl);
        let chain = ConditionedChain::from_level(lvl, anchor)?;
        let ordering = default_ordering(lvl, anchor);
        let dist = lvl.graph.bfs_distances(anchor.into());
        let threshold = libm::ceil(inner_fraction * lvl.level as f64) as usize;
        let mut reached = 0usize;
        let mut total_past = 0usize;
        let mut max_past = 0usize;
        for i in 0..n_samples {
            let mut rng = stream(seed, (li as u64) << 32 | i as u64);
            let tree = wilson_infinity(lvl, &chain, &ordering, &mut rng)?;
            let p = past(&tree, anchor)?;
            if p.iter().any(|&w| dist[w.0] >= threshold && w != lvl.boundary) {
                reached += 1;
            }
            total_past += p.len();
            max_past = max_past.max(p.len());
        }
        per_level.push(LevelEndStats {
            level: lvl.level,
            reach_prob: reached as f64 / n_samples as f64,
            mean_past: total_past as f64 / n_samples as f64,
            max_past,
            samples: n_samples,
        });
    }
    let two_ended_suspect = per_level.len() >= 3
        && per_level
            .windows(2)
            .all(|w| w[1].reach_prob >= w[0].reach_prob - 0.02);
    Ok(EndDiagnostic {
        per_level,
        two_ended_suspect,
    })
}

/// Exact reach probability of the anchor's past on a wired line level,
/// by enumerating the uniform deleted edge of the underlying cycle.
pub fn line_reach_exact(level: &ExhaustionLevel, inner_fraction: f64) -> Result<f64, UstError> {
    let g = &level.graph;
    let anchor = level.vertex((0, 0)).ok_or(UstError::ChainGraphMismatch)?;
    let dist = g.bfs_distances(anchor);
    let threshold = libm::ceil(inner_fraction * level.level as f64) as usize;
    let m = g.edges().len();
    let mut reach = 0usize;
    for skip in 0..m {
        // spanning tree = cycle minus one edge, oriented toward the root
        let mut adj: Vec<Vec<VertexId>> = vec![Vec::new(); g.vertex_count()];
        for (i, e) in g.edges().iter().enumerate() {
            if i == skip {
                continue;
            }
            adj[e.u.0].push(e.v);
            adj[e.v.0].push(e.u);
        }
        let mut parent: Vec<Option<VertexId>> = vec![None; g.vertex_count()];
        let mut order = vec![level.boundary];
        let mut seen = vec![false; g.vertex_count()];
        seen[level.boundary.0] = true;
        let mut qi = 0;
        while qi < order.len() {
            let x = order[qi];
            qi += 1;
            for &y in &adj[x.0] {
                if !seen[y.0] {
                    seen[y.0] = true;
                    parent[y.0] = Some(x);
                    order.push(y);
                }
            }
        }
        let tree = SpanningTree {
            parent,
            root: level.boundary,
            orientation: Orientation::TowardInfinity,
            graph_id: g.id(),
        };
        let p = past(&tree, anchor)?;
        if p.iter().any(|&w| dist[w.0] >= threshold && w != level.boundary) {
            reach += 1;
        }
    }
    Ok(reach as f64 / m as f64)
}

/// Total-variation distance between the law of the walk from `u` stopped
/// at `o` conditioned to get there before returning to `u`, and the
/// reversal of the corresponding walk from `o`, by exact enumeration of
/// all paths up to `max_len` steps. Longer paths are lumped into one
/// remainder cell per side.
pub fn path_reversal_check(
    g: &Graph,
    u: VertexId,
    o: VertexId,
    max_len: usize,
) -> Result<f64, UstError> {
    if u == o {
        return Err(UstError::TooLarge);
    }
    if g.vertex_count() > 8 && max_len > 12 {
        return Err(UstError::TooLarge);
    }

    // all paths start -> stop avoiding a return to start, P = Π c/deg
    fn enumerate(
        g: &Graph,
        start: VertexId,
        stop: VertexId,
        max_len: usize,
    ) -> BTreeMap<Vec<VertexId>, f64> {
        let mut out = BTreeMap::new();
        let mut path = vec![start];
        fn go(
            g: &Graph,
            start: VertexId,
            stop: VertexId,
            max_len: usize,
            path: &mut Vec<VertexId>,
            p: f64,
            out: &mut BTreeMap<Vec<VertexId>, f64>,
        ) {
            let v = *path.last().unwrap();
            if path.len() > max_len {
                return;
            }
            let deg = g.degree(v);
            for &(w, c) in g.neighbors(v) {
                if w == start {
                    continue; // returning to the start loses the race
                }
                let q = p * c / deg;
                path.push(w);
                if w == stop {
                    *out.entry(path.clone()).or_insert(0.0) += q;
                } else {
                    go(g, start, stop, max_len, path, q, out);
                }
                path.pop();
            }
        }
        go(g, start, stop, max_len, &mut path, 1.0, &mut out);
        out
    }

    // exact conditioning normalizers via one solve each
    let norm = |from: VertexId, to: VertexId| -> Result<f64, UstError> {
        let field = hitting_field(g, &[to], &[from])?;
        let mut p = 0.0;
        for &(w, c) in g.neighbors(from) {
            p += c * if w == to { 1.0 } else { field[w] };
        }
        Ok(p / g.degree(from))
    };
    let z_forward = norm(u, o)?;
    let z_backward = norm(o, u)?;

    let forward = enumerate(g, u, o, max_len);
    let backward = enumerate(g, o, u, max_len);

    let mut tv = 0.0f64;
    let mut mass_f = 0.0f64;
    let mut mass_b = 0.0f64;
    for (path, p) in &forward {
        let mut rev = path.clone();
        rev.reverse();
        let q = backward.get(&rev).copied().unwrap_or(0.0);
        let pf = p / z_forward;
        let pb = q / z_backward;
        tv += (pf - pb).abs();
        mass_f += pf;
        mass_b += pb;
    }
    for (path, q) in &backward {
        let mut rev = path.clone();
        rev.reverse();
        if !forward.contains_key(&rev) {
            let pb = q / z_backward;
            tv += pb;
            mass_b += pb;
        }
    }
    tv += ((1.0 - mass_f) - (1.0 - mass_b)).abs();
    Ok(0.5 * tv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{make_exhaustion, Model, Variant};

    // chi-square 0.999 quantiles (reject uniformity below p = 0.001)
    const CHI2_999_DOF2: f64 = 13.8155;
    const CHI2_999_DOF3: f64 = 16.2662;
    const CHI2_999_DOF15: f64 = 37.6973;

    fn chi_square(counts: &BTreeMap<Vec<(usize, usize)>, usize>, cells: usize, n: usize) -> f64 {
        let expected = n as f64 / cells as f64;
        let mut stat = 0.0;
        let mut seen = 0usize;
        for &c in counts.values() {
            stat += (c as f64 - expected) * (c as f64 - expected) / expected;
            seen += 1;
        }
        // cells never hit still contribute their expectation
        stat += (cells - seen) as f64 * expected;
        stat
    }

    #[test]
    fn loop_erase_examples() {
        let p = |ids: &[usize]| ids.iter().map(|&i| VertexId(i)).collect::<Vec<_>>();
        assert_eq!(loop_erase(&p(&[0, 1, 2, 1, 3])), p(&[0, 1, 3]));
        assert_eq!(loop_erase(&p(&[0, 1, 2])), p(&[0, 1, 2]));
        assert_eq!(loop_erase(&p(&[0, 1, 0, 2])), p(&[0, 2]));
    }

    #[test]
    fn loop_erasure_is_simple_and_adjacent() {
        let exh = make_exhaustion(Model::Grid2d, Variant::Default, &[6]).unwrap();
        let lvl = exh.top();
        let o = lvl.vertex((0, 0)).unwrap();
        let chain = ConditionedChain::from_level(lvl, o).unwrap();
        let mut rng = stream(5, 0);
        let (path, _) = run_chain(&chain, o, &StopRule::BoundaryHit, &mut rng);
        let le = loop_erase(&path);
        let mut sorted = le.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), le.len(), "not a simple path");
        for w in le.windows(2) {
            assert!(lvl.graph.neighbors(w[0]).iter().any(|&(x, _)| x == w[1]));
        }
        assert_eq!(le[0], o);
        assert_eq!(*le.last().unwrap(), lvl.boundary);
    }

    #[test]
    fn wilson_tree_is_spanning_and_deterministic() {
        let exh = make_exhaustion(Model::Grid2d, Variant::Default, &[4]).unwrap();
        let g = &exh.top().graph;
        let root = exh.top().boundary;
        let ordering: Vec<VertexId> = g.vertices().filter(|&v| v != root).collect();
        let t1 = wilson_wired(g, root, &ordering, &mut stream(3, 1)).unwrap();
        let t2 = wilson_wired(g, root, &ordering, &mut stream(3, 1)).unwrap();
        assert!(t1.validate(g));
        assert_eq!(t1.edge_key(), t2.edge_key());
    }

    #[test]
    fn wilson_on_tree_returns_it() {
        // a path graph has a single spanning tree
        let g = Graph::build(5, &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 4, 1.0)]).unwrap();
        let ordering: Vec<VertexId> = (1..5).map(VertexId).collect();
        let t = wilson_wired(&g, VertexId(0), &ordering, &mut stream(1, 0)).unwrap();
        assert_eq!(t.edge_key(), vec![(0, 1), (1, 2), (2, 3), (3, 4)]);
    }

    #[test]
    fn wilson_rejects_incomplete_ordering() {
        let g = Graph::build(3, &[(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        assert_eq!(
            wilson_wired(&g, VertexId(0), &[VertexId(1)], &mut stream(0, 0)).unwrap_err(),
            UstError::IncompleteOrdering
        );
    }

    #[test]
    fn wilson_triangle_is_uniform() {
        let g = Graph::build(3, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap();
        let ordering = [VertexId(1), VertexId(2)];
        let mut counts: BTreeMap<Vec<(usize, usize)>, usize> = BTreeMap::new();
        let n = 3000;
        for i in 0..n {
            let t = wilson_wired(&g, VertexId(0), &ordering, &mut stream(17, i)).unwrap();
            *counts.entry(t.edge_key()).or_insert(0) += 1;
        }
        assert_eq!(counts.len(), 3);
        let stat = chi_square(&counts, 3, n as usize);
        assert!(stat < CHI2_999_DOF2, "chi-square {stat}");
    }

    #[test]
    fn wilson_cycle_is_uniform() {
        let g = Graph::build(4, &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0)]).unwrap();
        let ordering = [VertexId(1), VertexId(2), VertexId(3)];
        let mut counts: BTreeMap<Vec<(usize, usize)>, usize> = BTreeMap::new();
        let n = 3000;
        for i in 0..n {
            let t = wilson_wired(&g, VertexId(0), &ordering, &mut stream(19, i)).unwrap();
            *counts.entry(t.edge_key()).or_insert(0) += 1;
        }
        assert_eq!(counts.len(), 4);
        let stat = chi_square(&counts, 4, n as usize);
        assert!(stat < CHI2_999_DOF3, "chi-square {stat}");
    }

    #[test]
    fn wilson_k4_ordering_invariance() {
        let g = Graph::build(
            4,
            &[
                (0, 1, 1.0),
                (0, 2, 1.0),
                (0, 3, 1.0),
                (1, 2, 1.0),
                (1, 3, 1.0),
                (2, 3, 1.0),
            ],
        )
        .unwrap();
        let orderings = [
            [VertexId(1), VertexId(2), VertexId(3)],
            [VertexId(3), VertexId(1), VertexId(2)],
        ];
        let n = 10_000;
        for (oi, ordering) in orderings.iter().enumerate() {
            let mut counts: BTreeMap<Vec<(usize, usize)>, usize> = BTreeMap::new();
            for i in 0..n {
                let t =
                    wilson_wired(&g, VertexId(0), ordering, &mut stream(23 + oi as u64, i as u64))
                        .unwrap();
                *counts.entry(t.edge_key()).or_insert(0) += 1;
            }
            // 16 spanning trees of the complete graph on 4 vertices
            assert_eq!(counts.len(), 16);
            let stat = chi_square(&counts, 16, n);
            assert!(stat < CHI2_999_DOF15, "ordering {oi}: chi-square {stat}");
        }
    }

    #[test]
    fn wilson_infinity_line_first_branch_is_a_ray() {
        let exh = make_exhaustion(Model::Line, Variant::Symmetric, &[12]).unwrap();
        let lvl = exh.top();
        let o = lvl.vertex((0, 0)).unwrap();
        let chain = ConditionedChain::from_level(lvl, o).unwrap();
        let ordering = default_ordering(lvl, o);
        for i in 0..20 {
            let mut rng = stream(29, i);
            let tree = wilson_infinity(lvl, &chain, &ordering, &mut rng).unwrap();
            assert!(tree.validate(&lvl.graph));
            // follow the anchor's forward path: strictly monotone walk to
            // one of the two ends
            let mut cur = o;
            let mut coords = Vec::new();
            while let Some(p) = tree.parent[cur.0] {
                if let Some(c) = lvl.coord(cur) {
                    coords.push(c.0);
                }
                cur = p;
            }
            assert_eq!(cur, lvl.boundary);
            let increasing = coords.windows(2).all(|w| w[1] == w[0] + 1);
            let decreasing = coords.windows(2).all(|w| w[1] == w[0] - 1);
            assert!(increasing || decreasing, "not a ray: {coords:?}");
        }
    }

    #[test]
    fn wilson_infinity_matches_wired_law_on_cycle() {
        // the unoriented tree of the infinity-rooted sampler has the plain
        // wired-tree law: on a cycle both are "delete one uniform edge"
        let exh = make_exhaustion(Model::Line, Variant::Symmetric, &[3]).unwrap();
        let lvl = exh.top();
        let o = lvl.vertex((0, 0)).unwrap();
        let chain = ConditionedChain::from_level(lvl, o).unwrap();
        let ordering = default_ordering(lvl, o);
        let m = lvl.graph.edges().len() as f64;
        let mut counts: BTreeMap<Vec<(usize, usize)>, usize> = BTreeMap::new();
        let n = 4000;
        for i in 0..n {
            let mut rng = stream(31, i);
            let t = wilson_infinity(lvl, &chain, &ordering, &mut rng).unwrap();
            *counts.entry(t.edge_key()).or_insert(0) += 1;
        }
        assert_eq!(counts.len(), m as usize);
        let expected = n as f64 / m;
        for &c in counts.values() {
            let z = (c as f64 - expected) / libm::sqrt(expected);
            assert!(z.abs() < 4.0, "cell deviates: {c} vs {expected}");
        }
    }

    #[test]
    fn past_cases() {
        // path oriented toward one end: 0 <- 1 <- 2 <- 3
        let g = Graph::build(4, &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)]).unwrap();
        let tree = SpanningTree {
            parent: vec![None, Some(VertexId(0)), Some(VertexId(1)), Some(VertexId(2))],
            root: VertexId(0),
            orientation: Orientation::TowardRoot,
            graph_id: g.id(),
        };
        assert_eq!(past(&tree, VertexId(3)).unwrap(), vec![VertexId(3)]);
        assert_eq!(
            past(&tree, VertexId(1)).unwrap(),
            vec![VertexId(1), VertexId(2), VertexId(3)]
        );
        // Σ_v |past(v)| = Σ_w (depth(w) + 1)
        let total: usize = (0..4)
            .map(|v| past(&tree, VertexId(v)).unwrap().len())
            .sum();
        let depth_sum: usize = tree.depths().iter().map(|&d| d + 1).sum();
        assert_eq!(total, depth_sum);
        // unoriented trees refuse
        let t2 = tree.clone().unoriented();
        assert_eq!(past(&t2, VertexId(1)).unwrap_err(), UstError::UnorientedTree);
    }

    #[test]
    fn past_partition_on_sampled_tree() {
        let exh = make_exhaustion(Model::Grid2d, Variant::Default, &[4]).unwrap();
        let lvl = exh.top();
        let o = lvl.vertex((0, 0)).unwrap();
        let chain = ConditionedChain::from_level(lvl, o).unwrap();
        let ordering = default_ordering(lvl, o);
        let mut rng = stream(37, 0);
        let tree = wilson_infinity(lvl, &chain, &ordering, &mut rng).unwrap();
        let total: usize = lvl
            .graph
            .vertices()
            .map(|v| past(&tree, v).unwrap().len())
            .sum();
        let depth_sum: usize = tree.depths().iter().map(|&d| d + 1).sum();
        assert_eq!(total, depth_sum);
    }

    #[test]
    fn line_end_diagnostic_matches_exact_enumeration() {
        let exh = make_exhaustion(Model::Line, Variant::Symmetric, &[8, 16]).unwrap();
        let f = 0.5;
        let diag = end_diagnostic(&exh, 400, f, 41).unwrap();
        for (lvl, stats) in exh.levels.iter().zip(&diag.per_level) {
            let exact = line_reach_exact(lvl, f).unwrap();
            let sigma = libm::sqrt(exact * (1.0 - exact) / stats.samples as f64);
            assert!(
                (stats.reach_prob - exact).abs() < 3.5 * sigma,
                "level {}: {} vs exact {exact}",
                lvl.level,
                stats.reach_prob
            );
            assert!(exact > 0.3, "line reach must not vanish");
        }
    }

    #[test]
    fn grid_reach_probability_decreases() {
        let exh = make_exhaustion(Model::Grid2d, Variant::Default, &[4, 8, 16]).unwrap();
        let diag = end_diagnostic(&exh, 300, 0.5, 43).unwrap();
        let p: Vec<f64> = diag.per_level.iter().map(|s| s.reach_prob).collect();
        assert!(p[0] > p[1] && p[1] > p[2], "reach probs {p:?}");
        assert!(!diag.two_ended_suspect);
    }

    #[test]
    fn line_two_ended_flag_fires() {
        let exh = make_exhaustion(Model::Line, Variant::Symmetric, &[8, 16, 32]).unwrap();
        let diag = end_diagnostic(&exh, 300, 0.5, 47).unwrap();
        assert!(diag.two_ended_suspect, "{:?}", diag.per_level);
    }

    #[test]
    fn path_reversal_exact_cases() {
        let p3 = Graph::build(3, &[(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        let tv = path_reversal_check(&p3, VertexId(2), VertexId(0), 6).unwrap();
        assert!(tv < 1e-12, "path tv {tv}");

        let k3 = Graph::build(3, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap();
        let tv = path_reversal_check(&k3, VertexId(0), VertexId(1), 10).unwrap();
        assert!(tv < 1e-10, "triangle tv {tv}");

        assert_eq!(
            path_reversal_check(&k3, VertexId(0), VertexId(0), 5).unwrap_err(),
            UstError::TooLarge
        );
    }

    #[test]
    fn path_reversal_on_weighted_cube() {
        // 3-cube with one heavier edge; i xor 2^k adjacency
        let mut edges = Vec::new();
        for v in 0..8usize {
            for b in 0..3 {
                let w = v ^ (1 << b);
                if v < w {
                    let c = if v == 0 && w == 1 { 2.5 } else { 1.0 };
                    edges.push((v, w, c));
                }
            }
        }
        let g = Graph::build(8, &edges).unwrap();
        let tv = path_reversal_check(&g, VertexId(6), VertexId(0), 12).unwrap();
        assert!(tv < 1e-10, "cube tv {tv}");
    }
}
