//! The walk conditioned to never hit an anchor vertex: the Doob transform
//! of the simple random walk by the truncated potential kernel `a(·, o)`.
//!
//! On a wired truncation the transform is substochastic exactly at the
//! wired vertex: the missing mass is the probability of escaping past the
//! truncation for good, so the chain dies there instead of being absorbed.
//! Equivalently the chain is the random walk of the conductance network
//! `ĉ(x, y) = a(x) a(y)` extended by one grave edge of conductance `a(bd)`
//! at the wired vertex; both descriptions are used below, one for
//! sampling and one for independent linear-solve cross-checks.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;

use crate::dirichlet::{green_kernel_column, hitting_prob, DirichletError, DirichletSystem};
use crate::field::HarmonicField;
use crate::graph::{Graph, GraphError, VertexId};
use crate::kernel::{kernel_column, KernelError};
use crate::models::ExhaustionLevel;
use crate::rng::stream;
use crate::ust::loop_erase;

#[derive(Clone, Debug, PartialEq)]
pub enum CrwError {
    /// The kernel table is not harmonic off the anchor, so some row of the
    /// transformed kernel does not sum to one.
    NonStochasticRow(VertexId),
    /// An operation needs kernel entries (or a wired boundary) that the
    /// chain cannot provide.
    MissingKernelEntry,
    /// Paths or chains built over different graphs.
    GraphMismatch,
    Kernel(KernelError),
    Dirichlet(DirichletError),
    Graph(GraphError),
}

impl fmt::Display for CrwError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CrwError::NonStochasticRow(v) => write!(f, "transition row at {v} does not sum to 1"),
            CrwError::MissingKernelEntry => write!(f, "missing kernel entry or wired boundary"),
            CrwError::GraphMismatch => write!(f, "objects live on different graphs"),
            CrwError::Kernel(e) => write!(f, "{e}"),
            CrwError::Dirichlet(e) => write!(f, "{e}"),
            CrwError::Graph(e) => write!(f, "{e}"),
        }
    }
}

impl From<KernelError> for CrwError {
    fn from(e: KernelError) -> Self {
        CrwError::Kernel(e)
    }
}

impl From<DirichletError> for CrwError {
    fn from(e: DirichletError) -> Self {
        CrwError::Dirichlet(e)
    }
}

impl From<GraphError> for CrwError {
    fn from(e: GraphError) -> Self {
        CrwError::Graph(e)
    }
}

const ROW_SUM_TOL: f64 = 1e-10;

/// Hard default cap on sampled path length.
pub const DEFAULT_STEP_CAP: usize = 1_000_000;

/// The conditioned walk on one finite (usually wired) graph.
#[derive(Debug)]
pub struct ConditionedChain<'g> {
    graph: &'g Graph,
    anchor: VertexId,
    boundary: Option<VertexId>,
    a: HarmonicField,
    /// Per-vertex cumulative transition weights `c(x, y) a(y)`.
    cum: Vec<Vec<(VertexId, f64)>>,
    /// Row normalizer `deg(x) a(x)`; at the wired vertex the cumulative
    /// weight falls short of this, the gap being the escape-for-good mass.
    total: Vec<f64>,
    /// Anchor-start law: cumulative masses proportional to `c(o, x) a(x)`.
    first_step: Vec<(VertexId, f64)>,
}

/// Builds the conditioned chain from a kernel table `a(·, anchor)`.
///
/// `boundary` marks the wired vertex whose row is allowed (and expected)
/// to be substochastic; every other row must sum to one within `1e-10`.
pub fn build_crw<'g>(
    g: &'g Graph,
    anchor: VertexId,
    boundary: Option<VertexId>,
    kernel_values: &HarmonicField,
) -> Result<ConditionedChain<'g>, CrwError> {
    if !kernel_values.indexes(g) {
        return Err(CrwError::GraphMismatch);
    }
    if kernel_values[anchor] != 0.0 {
        return Err(CrwError::NonStochasticRow(anchor));
    }
    let n = g.vertex_count();
    let mut cum = Vec::with_capacity(n);
    let mut total = vec![0.0f64; n];
    for x in g.vertices() {
        let ax = kernel_values[x];
        if x != anchor && !(ax > 0.0) {
            // a vanishing kernel value off the anchor makes the row degenerate
            return Err(CrwError::NonStochasticRow(x));
        }
        let mut row = Vec::with_capacity(g.neighbors(x).len());
        let mut acc = 0.0f64;
        for &(y, c) in g.neighbors(x) {
            let w = c * kernel_values[y];
            if w > 0.0 {
                acc += w;
                row.push((y, acc));
            }
        }
        cum.push(row);
        total[x.0] = g.degree(x) * ax;
        if x == anchor || Some(x) == boundary {
            continue;
        }
        if (acc / total[x.0] - 1.0).abs() > ROW_SUM_TOL {
            return Err(CrwError::NonStochasticRow(x));
        }
    }
    // anchor-start law: masses c(o, x) a(x); their sum is the Laplacian of
    // the kernel at the anchor and equals 1 up to solver error
    let mut first_step = Vec::new();
    let mut acc = 0.0f64;
    for &(y, c) in g.neighbors(anchor) {
        let w = c * kernel_values[y];
        if w > 0.0 {
            acc += w;
            first_step.push((y, acc));
        }
    }
    if (acc - 1.0).abs() > 1e-8 {
        return Err(CrwError::NonStochasticRow(anchor));
    }
    Ok(ConditionedChain {
        graph: g,
        anchor,
        boundary,
        a: kernel_values.clone(),
        cum,
        total,
        first_step,
    })
}

impl<'g> ConditionedChain<'g> {
    /// Convenience: kernel column plus chain for a wired level.
    pub fn from_level(
        level: &'g ExhaustionLevel,
        anchor: VertexId,
    ) -> Result<ConditionedChain<'g>, CrwError> {
        let a = kernel_column(level, anchor)?;
        build_crw(&level.graph, anchor, Some(level.boundary), &a)
    }

    #[inline]
    pub fn graph(&self) -> &'g Graph {
        self.graph
    }

    #[inline]
    pub fn anchor(&self) -> VertexId {
        self.anchor
    }

    #[inline]
    pub fn boundary(&self) -> Option<VertexId> {
        self.boundary
    }

    /// Kernel value `a(x) = a(x, anchor)`.
    #[inline]
    pub fn a(&self, x: VertexId) -> f64 {
        self.a[x]
    }

    pub fn kernel(&self) -> &HarmonicField {
        &self.a
    }

    /// Transition probabilities out of `x` (the defect at the wired vertex
    /// is the amount by which they sum below one).
    pub fn transition_row(&self, x: VertexId) -> Vec<(VertexId, f64)> {
        let mut out = Vec::new();
        let mut prev = 0.0;
        for &(y, acc) in &self.cum[x.0] {
            out.push((y, (acc - prev) / self.total[x.0]));
            prev = acc;
        }
        out
    }

    /// Conductances `ĉ(x, y) = a(x) a(y)` per edge of the base graph.
    pub fn conductances_hat(&self) -> Vec<(VertexId, VertexId, f64)> {
        self.graph
            .edges()
            .iter()
            .map(|e| (e.u, e.v, e.conductance * self.a[e.u] * self.a[e.v]))
            .collect()
    }

    /// Law of the first step out of the anchor.
    pub fn anchor_start_law(&self) -> Vec<(VertexId, f64)> {
        let z = self.first_step.last().map(|&(_, acc)| acc).unwrap_or(1.0);
        let mut out = Vec::new();
        let mut prev = 0.0;
        for &(y, acc) in &self.first_step {
            out.push((y, (acc - prev) / z));
            prev = acc;
        }
        out
    }

    fn step(&self, x: VertexId, rng: &mut impl Rng) -> Option<VertexId> {
        let u = rng.random::<f64>() * self.total[x.0];
        let row = &self.cum[x.0];
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
        if lo < row.len() {
            Some(row[lo].0)
        } else {
            None // fell into the escape mass at the wired vertex
        }
    }

    fn first_step_sample(&self, rng: &mut impl Rng) -> VertexId {
        let z = self.first_step.last().map(|&(_, acc)| acc).unwrap_or(1.0);
        let u = rng.random::<f64>() * z;
        for &(y, acc) in &self.first_step {
            if u < acc {
                return y;
            }
        }
        self.first_step.last().unwrap().0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    HitTarget,
    /// Reached the wired vertex (or died in its escape mass).
    HitBoundary,
    StepCap,
}

/// When to stop a sampled path.
pub enum StopRule<'a> {
    /// Stop on arrival in the set.
    TargetSet(&'a [VertexId]),
    /// Run a fixed number of steps.
    StepCap(usize),
    /// Stop on first arrival at the wired vertex.
    BoundaryHit,
}

#[derive(Clone, Debug)]
pub struct WalkPath {
    pub vertices: Vec<VertexId>,
    pub graph_id: u64,
    pub seed: u64,
    pub stream_index: u64,
    pub stop_reason: StopReason,
}

/// Samples one conditioned-walk path on the stream `(seed, stream_index)`.
///
/// Starting at the anchor uses the anchor-start law for the first step;
/// afterwards the anchor is unreachable. Dying in the wired vertex's
/// escape mass reports [`StopReason::HitBoundary`]: that mass is the
/// truncation's stand-in for escape to infinity. Every rule is also capped
/// at [`DEFAULT_STEP_CAP`] steps.
pub fn sample_crw(
    chain: &ConditionedChain<'_>,
    start: VertexId,
    rule: &StopRule<'_>,
    seed: u64,
    stream_index: u64,
) -> WalkPath {
    let mut rng = stream(seed, stream_index);
    let (vertices, stop_reason) = run_chain(chain, start, rule, &mut rng);
    WalkPath {
        vertices,
        graph_id: chain.graph.id(),
        seed,
        stream_index,
        stop_reason,
    }
}

/// Same as [`sample_crw`] but drawing from a caller-provided generator.
pub fn run_chain(
    chain: &ConditionedChain<'_>,
    start: VertexId,
    rule: &StopRule<'_>,
    rng: &mut impl Rng,
) -> (Vec<VertexId>, StopReason) {
    let mut vertices = vec![start];
    let mut current = start;
    let cap = match *rule {
        StopRule::StepCap(c) => c.min(DEFAULT_STEP_CAP),
        _ => DEFAULT_STEP_CAP,
    };
    let target_hit = |v: VertexId| match *rule {
        StopRule::TargetSet(set) => set.contains(&v),
        StopRule::BoundaryHit => Some(v) == chain.boundary,
        StopRule::StepCap(_) => false,
    };
    let stop_kind = |_: VertexId| {
        if matches!(rule, StopRule::BoundaryHit) {
            StopReason::HitBoundary
        } else {
            StopReason::HitTarget
        }
    };
    if target_hit(current) {
        return (vertices, stop_kind(current));
    }
    let mut reason = StopReason::StepCap;
    for _ in 0..cap {
        let next = if current == chain.anchor {
            Some(chain.first_step_sample(rng))
        } else {
            chain.step(current, rng)
        };
        match next {
            None => {
                reason = StopReason::HitBoundary;
                break;
            }
            Some(v) => {
                vertices.push(v);
                current = v;
                if target_hit(v) {
                    reason = stop_kind(v);
                    break;
                }
            }
        }
    }
    (vertices, reason)
}

/// Normalized two-variable kernel column `a(·, y)` on the chain's graph.
fn two_variable_column(
    chain: &ConditionedChain<'_>,
    y: VertexId,
) -> Result<HarmonicField, CrwError> {
    let bd = chain.boundary.ok_or(CrwError::MissingKernelEntry)?;
    if y == bd {
        return Err(CrwError::MissingKernelEntry);
    }
    let col = green_kernel_column(chain.graph, &[bd], y)?;
    let gyy = col[y];
    let values = col.values().iter().map(|&v| gyy - v).collect();
    Ok(HarmonicField::new(chain.graph, values))
}

/// Green function of the conditioned walk through the kernel identity
/// `Ĝ(x, y)/deg(y) = (a(y)/a(x)) (a(x) - a(x, y) + a(o, y))`.
pub fn crw_green_analytic(
    chain: &ConditionedChain<'_>,
    x: VertexId,
    y: VertexId,
) -> Result<f64, CrwError> {
    if x == chain.anchor || y == chain.anchor {
        return Err(CrwError::MissingKernelEntry);
    }
    let col_y = two_variable_column(chain, y)?;
    let value = (chain.a(y) / chain.a(x)) * (chain.a(x) - col_y[x] + col_y[chain.anchor]);
    Ok(value * chain.graph.degree(y))
}

#[derive(Clone, Debug)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub paths: usize,
    /// Fraction of paths stopped by the step cap rather than by dying.
    pub capped_fraction: f64,
}

/// Monte-Carlo estimate of `Ĝ(x, y)`: expected visits to `y`, paths run
/// until they die at the truncation boundary or hit the cap.
pub fn crw_green_mc(
    chain: &ConditionedChain<'_>,
    x: VertexId,
    y: VertexId,
    n_paths: usize,
    step_cap: usize,
    seed: u64,
) -> McEstimate {
    let mut sum = 0.0f64;
    let mut sum_sq = 0.0f64;
    let mut capped = 0usize;
    for i in 0..n_paths {
        let path = sample_crw(chain, x, &StopRule::StepCap(step_cap), seed, i as u64);
        let visits = path.vertices.iter().filter(|&&v| v == y).count() as f64;
        sum += visits;
        sum_sq += visits * visits;
        if path.stop_reason == StopReason::StepCap {
            capped += 1;
        }
    }
    let n = n_paths as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0);
    McEstimate {
        mean,
        std_error: libm::sqrt(var / n),
        paths: n_paths,
        capped_fraction: capped as f64 / n,
    }
}

/// The `ĉ`-network of the chain: vertices minus the anchor plus a grave
/// vertex wired to the truncation boundary, with `ĉ(x, y) = c(x,y) a(x) a(y)`
/// and grave conductance `a(bd)`. Returns the network, the vertex map (old
/// to new, anchor unmapped) and the grave vertex.
pub fn chat_network(
    chain: &ConditionedChain<'_>,
) -> Result<(Graph, Vec<Option<VertexId>>, VertexId), CrwError> {
    let bd = chain.boundary.ok_or(CrwError::MissingKernelEntry)?;
    let g = chain.graph;
    let n = g.vertex_count();
    let mut map: Vec<Option<VertexId>> = vec![None; n];
    let mut next = 0usize;
    for v in g.vertices() {
        if v != chain.anchor {
            map[v.0] = Some(VertexId(next));
            next += 1;
        }
    }
    let grave = VertexId(next);
    let mut edges = Vec::with_capacity(g.edges().len() + 1);
    for e in g.edges() {
        let (Some(u), Some(v)) = (map[e.u.0], map[e.v.0]) else {
            continue;
        };
        let chat = e.conductance * chain.a(e.u) * chain.a(e.v);
        if chat > 0.0 {
            edges.push((u.0, v.0, chat));
        }
    }
    edges.push((map[bd.0].unwrap().0, grave.0, chain.a(bd)));
    let graph = Graph::build(next + 1, &edges)?;
    Ok((graph, map, grave))
}

/// Green function of the conditioned walk by a direct linear solve on the
/// `ĉ`-network grounded at the grave: the route independent of the kernel
/// identity.
pub fn crw_green_solve(
    chain: &ConditionedChain<'_>,
    x: VertexId,
    y: VertexId,
) -> Result<f64, CrwError> {
    if x == chain.anchor || y == chain.anchor {
        return Err(CrwError::MissingKernelEntry);
    }
    let (net, map, grave) = chat_network(chain)?;
    let xq = map[x.0].unwrap();
    let yq = map[y.0].unwrap();
    let col = green_kernel_column(&net, &[grave], yq)?;
    Ok(col[xq] * net.degree(yq))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HitRoute {
    /// Harmonic-measure expression from kernel and hitting tables.
    Analytic,
    /// Absorption probability of the chain on the truncation.
    Solve,
}

#[derive(Clone, Debug)]
pub struct HitProbReport {
    pub value: f64,
    /// Probability that the chain sees the wired vertex before `y`; the
    /// truncated answer can differ from the infinite-graph one by at most
    /// (roughly) this times the return chance from beyond the boundary.
    pub leakage: f64,
}

/// `P_x(T̂_y < ∞)` for the conditioned walk.
pub fn crw_hit_prob(
    chain: &ConditionedChain<'_>,
    x: VertexId,
    y: VertexId,
    route: HitRoute,
) -> Result<HitProbReport, CrwError> {
    if x == chain.anchor || y == chain.anchor || x == y {
        return Err(CrwError::MissingKernelEntry);
    }
    let bd = chain.boundary.ok_or(CrwError::MissingKernelEntry)?;
    let o = chain.anchor;
    let g = chain.graph;
    let value = match route {
        HitRoute::Analytic => {
            let hm_y = hitting_prob(g, bd, &[y], &[o])?;
            let hm_x = hitting_prob(g, bd, &[x], &[o])?;
            let p_yx = hitting_prob(g, y, &[x], &[o])?;
            hm_y * p_yx / hm_x
        }
        HitRoute::Solve => {
            let (net, map, grave) = chat_network(chain)?;
            hitting_prob(&net, map[x.0].unwrap(), &[map[y.0].unwrap()], &[grave])?
        }
    };
    // chance of reaching the truncation edge before y
    let leakage = {
        let (net, map, _) = chat_network(chain)?;
        if x == bd {
            1.0
        } else {
            hitting_prob(
                &net,
                map[x.0].unwrap(),
                &[map[bd.0].unwrap()],
                &[map[y.0].unwrap()],
            )?
        }
    };
    Ok(HitProbReport { value, leakage })
}

#[derive(Clone, Debug)]
pub struct AnnulusStats {
    pub radius: usize,
    /// `(vertex, q̂(y))` over the sampled annulus vertices.
    pub values: Vec<(VertexId, f64)>,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Clone, Debug)]
pub struct QhatProfile {
    pub per_radius: Vec<AnnulusStats>,
}

/// Hitting probabilities `q̂(y) = P_o(T̂_y < ∞)` over hop-distance annuli.
///
/// On a wired truncation `q̂(y)` collapses to the two-point harmonic
/// measure `a(y, o) / R_eff(o ↔ y)`, computed here per vertex from Green
/// columns. Annuli larger than `max_per_annulus` are subsampled
/// deterministically. Per-annulus min/max expose the spread of
/// subsequential limits.
pub fn qhat_profile(
    chain: &ConditionedChain<'_>,
    radii: &[usize],
    max_per_annulus: usize,
) -> Result<QhatProfile, CrwError> {
    let bd = chain.boundary.ok_or(CrwError::MissingKernelEntry)?;
    let g = chain.graph;
    let o = chain.anchor;
    let dist = g.bfs_distances(o);
    let sys = DirichletSystem::new(g, &[bd])?;
    let o_col = sys.solve(&[], &[(o, 1.0)])?;
    let g_oo = o_col[o];
    let mut per_radius = Vec::new();
    for &r in radii {
        let mut ys: Vec<VertexId> = g
            .vertices()
            .filter(|&v| v != bd && dist[v.0] == r)
            .collect();
        ys.sort();
        if ys.len() > max_per_annulus {
            let step = ys.len().div_ceil(max_per_annulus);
            ys = ys.into_iter().step_by(step).collect();
        }
        let mut values = Vec::with_capacity(ys.len());
        for &y in &ys {
            let y_col = sys.solve(&[], &[(y, 1.0)])?;
            let a_yo = g_oo - o_col[y];
            let a_oy = y_col[y] - y_col[o];
            values.push((y, a_yo / (a_yo + a_oy)));
        }
        let k = values.len() as f64;
        let mean = values.iter().map(|&(_, q)| q).sum::<f64>() / k;
        let min = values.iter().map(|&(_, q)| q).fold(f64::INFINITY, f64::min);
        let max = values
            .iter()
            .map(|&(_, q)| q)
            .fold(f64::NEG_INFINITY, f64::max);
        per_radius.push(AnnulusStats {
            radius: r,
            values,
            mean,
            min,
            max,
        });
    }
    Ok(QhatProfile { per_radius })
}

#[derive(Clone, Debug)]
pub struct MartingaleReport {
    /// Max deviation of the exact one-step identity
    /// `Σ_y p̂(x, y)/a(y) = 1/a(x)` over vertices away from the anchor.
    pub one_step_max_dev: f64,
    /// `|mean of 1/a(X̂ stopped) - 1/a(start)|` over sampled paths.
    pub mc_residual: f64,
    pub std_error: f64,
}

/// Checks that `1/a(X̂)` stopped at the anchor's neighborhood is a
/// martingale: exactly on one step, empirically over paths. Paths dying in
/// the escape mass contribute `1/a(∞) = 0`, which is what keeps the
/// identity exact on the truncation.
pub fn martingale_residual(
    chain: &ConditionedChain<'_>,
    x: VertexId,
    n_steps: usize,
    n_paths: usize,
    seed: u64,
) -> Result<MartingaleReport, CrwError> {
    if x == chain.anchor || chain.a(x) <= 0.0 {
        return Err(CrwError::MissingKernelEntry);
    }
    let g = chain.graph;
    let anchor_ring: Vec<VertexId> = g.neighbors(chain.anchor).iter().map(|&(u, _)| u).collect();
    let mut one_step = 0.0f64;
    for v in g.vertices() {
        if v == chain.anchor || anchor_ring.contains(&v) {
            continue;
        }
        // Σ_y p̂(v, y)/a(y), the escape mass counting as 1/a(∞) = 0
        let mut acc = 0.0f64;
        for (y, p) in chain.transition_row(v) {
            acc += p / chain.a(y);
        }
        one_step = one_step.max((acc - 1.0 / chain.a(v)).abs() * chain.a(v));
    }

    let mut sum = 0.0f64;
    let mut sum_sq = 0.0f64;
    for i in 0..n_paths {
        let path = sample_crw(
            chain,
            x,
            &StopRule::TargetSet(&anchor_ring),
            seed,
            i as u64,
        );
        let len = path.vertices.len().min(n_steps + 1);
        let died = path.stop_reason == StopReason::HitBoundary && len == path.vertices.len();
        let v = if died {
            0.0
        } else {
            1.0 / chain.a(path.vertices[len - 1])
        };
        sum += v;
        sum_sq += v * v;
    }
    let n = n_paths as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0);
    Ok(MartingaleReport {
        one_step_max_dev: one_step,
        mc_residual: (mean - 1.0 / chain.a(x)).abs(),
        std_error: libm::sqrt(var / n),
    })
}

/// Exact intersection counts of two paths: distinct common vertices, and
/// distinct common vertices with the loop erasure of the second path.
pub fn trace_intersections(p1: &WalkPath, p2: &WalkPath) -> Result<(usize, usize), CrwError> {
    if p1.graph_id != p2.graph_id {
        return Err(CrwError::GraphMismatch);
    }
    let max_id = p1
        .vertices
        .iter()
        .chain(&p2.vertices)
        .map(|v| v.0)
        .max()
        .unwrap_or(0);
    let count_common = |trace: &[VertexId]| {
        let mut in_trace = vec![false; max_id + 1];
        for &v in trace {
            in_trace[v.0] = true;
        }
        let mut seen = vec![false; max_id + 1];
        let mut common = 0usize;
        for &v in &p1.vertices {
            if in_trace[v.0] && !seen[v.0] {
                seen[v.0] = true;
                common += 1;
            }
        }
        common
    };
    let common = count_common(&p2.vertices);
    let le = loop_erase(&p2.vertices);
    let common_le = count_common(&le);
    Ok((common, common_le))
}

#[derive(Clone, Debug)]
pub struct VisitStats {
    /// Distinct vertices of the set hit, per path.
    pub counts: Vec<usize>,
    pub mean: f64,
}

/// Distribution of how many distinct vertices of `a_set` the chain visits
/// within a step horizon.
pub fn set_recurrence_stat(
    chain: &ConditionedChain<'_>,
    a_set: &[VertexId],
    horizon: usize,
    n_paths: usize,
    start: VertexId,
    seed: u64,
) -> Result<VisitStats, CrwError> {
    if a_set.is_empty() {
        return Err(CrwError::Graph(GraphError::EmptySet));
    }
    let n = chain.graph.vertex_count();
    let mut in_set = vec![false; n];
    for &v in a_set {
        in_set[v.0] = true;
    }
    let mut counts = Vec::with_capacity(n_paths);
    for i in 0..n_paths {
        let path = sample_crw(chain, start, &StopRule::StepCap(horizon), seed, i as u64);
        let mut seen = vec![false; n];
        let mut k = 0usize;
        for &v in &path.vertices {
            if in_set[v.0] && !seen[v.0] {
                seen[v.0] = true;
                k += 1;
            }
        }
        counts.push(k);
    }
    let mean = counts.iter().sum::<usize>() as f64 / n_paths as f64;
    Ok(VisitStats { counts, mean })
}

/// Total-variation distance between length-`m` prefixes of the walk
/// conditioned on reaching the kernel shell `∂Λ_a(r)` before the anchor,
/// and the conditioned-walk prefixes, enumerated exactly.
///
/// Prefixes leaving `Λ_a(r) \ {o}` early are lumped into one remainder
/// cell on both sides.
pub fn conditioned_law_tv(
    chain: &ConditionedChain<'_>,
    x: VertexId,
    prefix_len: usize,
    r: f64,
) -> Result<f64, CrwError> {
    let g = chain.graph;
    let o = chain.anchor;
    let mut is_inside = vec![false; g.vertex_count()];
    let mut any = false;
    for v in g.vertices() {
        if v != o && Some(v) != chain.boundary && chain.a(v) <= r {
            is_inside[v.0] = true;
            any = true;
        }
    }
    if !any || !is_inside[x.0] {
        return Err(CrwError::MissingKernelEntry);
    }
    let mut shell: Vec<VertexId> = Vec::new();
    let mut seen = vec![false; g.vertex_count()];
    for v in g.vertices() {
        if !is_inside[v.0] {
            continue;
        }
        for &(u, _) in g.neighbors(v) {
            if !is_inside[u.0] && u != o && !seen[u.0] {
                seen[u.0] = true;
                shell.push(u);
            }
        }
    }
    let reach = crate::dirichlet::hitting_field(g, &shell, &[o])?;

    struct Walker<'c, 'g> {
        chain: &'c ConditionedChain<'g>,
        reach: &'c HarmonicField,
        is_inside: &'c [bool],
        m: usize,
        norm: f64,
        tv_acc: f64,
        mass_cond: f64,
        mass_crw: f64,
    }
    impl Walker<'_, '_> {
        fn go(&mut self, v: VertexId, p_srw: f64, p_crw: f64, depth: usize) {
            if depth == self.m {
                let cond = p_srw * self.reach[v] / self.norm;
                self.tv_acc += (cond - p_crw).abs();
                self.mass_cond += cond;
                self.mass_crw += p_crw;
                return;
            }
            let g = self.chain.graph;
            let deg = g.degree(v);
            for &(u, c) in g.neighbors(v) {
                if !self.is_inside[u.0] {
                    continue;
                }
                let step_srw = c / deg;
                let step_crw = step_srw * self.chain.a(u) / self.chain.a(v);
                self.go(u, p_srw * step_srw, p_crw * step_crw, depth + 1);
            }
        }
    }
    let norm = reach[x];
    let mut w = Walker {
        chain,
        reach: &reach,
        is_inside: &is_inside,
        m: prefix_len,
        norm,
        tv_acc: 0.0,
        mass_cond: 0.0,
        mass_crw: 0.0,
    };
    w.go(x, 1.0, 1.0, 0);
    Ok(0.5 * (w.tv_acc + (w.mass_cond - w.mass_crw).abs()))
}
