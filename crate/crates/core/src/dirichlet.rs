//! Dirichlet problems, Green functions, hitting probabilities, exit
//! measures and effective resistance on finite weighted graphs.
//!
//! All probabilities come out of linear solves against the conductance
//! Laplacian. Systems with at most [`linalg::DENSE_LIMIT`] unknowns are
//! factorized densely once per absorbing set and reused across right-hand
//! sides; larger systems go through preconditioned conjugate gradients.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::field::{HarmonicField, ProbabilityTable};
use crate::graph::{glue, Graph, GraphError, VertexId};
use crate::linalg::{cg_solve, DenseLu, SolveError, CG_REL_TOL, DENSE_LIMIT};

#[derive(Clone, Debug, PartialEq)]
pub enum DirichletError {
    /// No boundary condition reaches some part of the graph.
    SingularSystem,
    /// Iterative solve missed its residual target.
    NonConvergence,
    DimensionMismatch,
    /// Target and taboo sets intersect.
    OverlappingSets,
    StartOutsideDomain,
    SameVertex,
    /// The queried vertex lies inside the set it must avoid.
    VertexInSet,
    /// Last-exit arguments do not satisfy `A ⊆ B`, `x ∈ A`, `b ∈ ∂B`.
    MalformedNesting,
    Graph(GraphError),
}

impl fmt::Display for DirichletError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DirichletError::SingularSystem => write!(f, "singular system: empty boundary"),
            DirichletError::NonConvergence => write!(f, "solver did not reach its tolerance"),
            DirichletError::DimensionMismatch => write!(f, "field does not index this graph"),
            DirichletError::OverlappingSets => write!(f, "target and taboo sets overlap"),
            DirichletError::StartOutsideDomain => write!(f, "start vertex outside the domain"),
            DirichletError::SameVertex => write!(f, "the two vertices must differ"),
            DirichletError::VertexInSet => write!(f, "vertex lies inside the avoided set"),
            DirichletError::MalformedNesting => write!(f, "need A ⊆ B, x ∈ A and b ∈ ∂B"),
            DirichletError::Graph(e) => write!(f, "{e}"),
        }
    }
}

impl From<GraphError> for DirichletError {
    fn from(e: GraphError) -> Self {
        DirichletError::Graph(e)
    }
}

impl From<SolveError> for DirichletError {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::Singular => DirichletError::SingularSystem,
            SolveError::NonConvergence => DirichletError::NonConvergence,
        }
    }
}

/// Residual contract of [`DirichletSystem::solve`]: the ∞-norm of
/// `Δu + source` off the boundary stays below `1e-10 * (1 + ‖source‖∞)`.
pub const RESIDUAL_TOL: f64 = 1e-10;

enum Backend {
    Dense(DenseLu),
    /// Interior adjacency in compressed form for the CG operator.
    Sparse {
        offsets: Vec<usize>,
        entries: Vec<(usize, f64)>,
        diag: Vec<f64>,
    },
}

/// A factorized Dirichlet problem for one absorbing (boundary) set.
///
/// Holds everything needed to solve `Δu = -source` off the boundary with
/// prescribed boundary values, for many right-hand sides.
pub struct DirichletSystem<'g> {
    g: &'g Graph,
    is_boundary: Vec<bool>,
    interior: Vec<VertexId>,
    interior_pos: Vec<usize>,
    backend: Backend,
}

impl<'g> DirichletSystem<'g> {
    pub fn new(g: &'g Graph, boundary: &[VertexId]) -> Result<DirichletSystem<'g>, DirichletError> {
        if boundary.is_empty() {
            return Err(DirichletError::SingularSystem);
        }
        let n = g.vertex_count();
        let mut is_boundary = vec![false; n];
        for &v in boundary {
            if v.0 >= n {
                return Err(DirichletError::DimensionMismatch);
            }
            is_boundary[v.0] = true;
        }
        let interior: Vec<VertexId> = g.vertices().filter(|v| !is_boundary[v.0]).collect();
        let mut interior_pos = vec![usize::MAX; n];
        for (i, &v) in interior.iter().enumerate() {
            interior_pos[v.0] = i;
        }
        let m = interior.len();
        let backend = if m <= DENSE_LIMIT {
            let mut a = vec![0.0f64; m * m];
            for (i, &v) in interior.iter().enumerate() {
                a[i * m + i] = g.degree(v);
                for &(u, c) in g.neighbors(v) {
                    let j = interior_pos[u.0];
                    if j != usize::MAX {
                        a[i * m + j] -= c;
                    }
                }
            }
            Backend::Dense(DenseLu::factor(m, a)?)
        } else {
            let mut offsets = Vec::with_capacity(m + 1);
            let mut entries = Vec::new();
            let mut diag = Vec::with_capacity(m);
            offsets.push(0);
            for &v in &interior {
                diag.push(g.degree(v));
                for &(u, c) in g.neighbors(v) {
                    let j = interior_pos[u.0];
                    if j != usize::MAX {
                        entries.push((j, c));
                    }
                }
                offsets.push(entries.len());
            }
            Backend::Sparse {
                offsets,
                entries,
                diag,
            }
        };
        Ok(DirichletSystem {
            g,
            is_boundary,
            interior,
            interior_pos,
            backend,
        })
    }

    #[inline]
    pub fn graph(&self) -> &'g Graph {
        self.g
    }

    #[inline]
    pub fn is_boundary(&self, v: VertexId) -> bool {
        self.is_boundary[v.0]
    }

    pub fn interior(&self) -> &[VertexId] {
        &self.interior
    }

    /// Solves for `u` with `u = boundary_values` on the boundary and
    /// `Δu(x) = -source(x)` elsewhere. Missing boundary entries default to 0.
    pub fn solve(
        &self,
        boundary_values: &[(VertexId, f64)],
        source: &[(VertexId, f64)],
    ) -> Result<HarmonicField, DirichletError> {
        let n = self.g.vertex_count();
        let m = self.interior.len();
        let mut bval = vec![0.0f64; n];
        for &(v, val) in boundary_values {
            if v.0 >= n {
                return Err(DirichletError::DimensionMismatch);
            }
            bval[v.0] = val;
        }
        let mut src_norm = 0.0f64;
        let mut rhs = vec![0.0f64; m];
        for &(v, s) in source {
            if v.0 >= n {
                return Err(DirichletError::DimensionMismatch);
            }
            src_norm = src_norm.max(s.abs());
            let i = self.interior_pos[v.0];
            // boundary wins where the two prescriptions overlap
            if i != usize::MAX {
                rhs[i] += s;
            }
        }
        for (i, &v) in self.interior.iter().enumerate() {
            for &(u, c) in self.g.neighbors(v) {
                if self.is_boundary[u.0] {
                    rhs[i] += c * bval[u.0];
                }
            }
        }

        let mut x = vec![0.0f64; m];
        match &self.backend {
            Backend::Dense(lu) => {
                x.copy_from_slice(&rhs);
                lu.solve(&mut x);
            }
            Backend::Sparse {
                offsets,
                entries,
                diag,
            } => {
                let apply = |v: &[f64], out: &mut [f64]| {
                    for i in 0..m {
                        let mut acc = diag[i] * v[i];
                        for &(j, c) in &entries[offsets[i]..offsets[i + 1]] {
                            acc -= c * v[j];
                        }
                        out[i] = acc;
                    }
                };
                cg_solve(apply, diag, &rhs, &mut x, CG_REL_TOL, 10 * m.max(100))?;
            }
        }

        let mut values = bval;
        for (i, &v) in self.interior.iter().enumerate() {
            values[v.0] = x[i];
        }
        let field = HarmonicField::new(self.g, values);

        // enforce the residual contract
        let tol = RESIDUAL_TOL * (1.0 + src_norm);
        let mut src_full = vec![0.0f64; n];
        for &(v, s) in source {
            if self.interior_pos[v.0] != usize::MAX {
                src_full[v.0] += s;
            }
        }
        let lap = crate::graph::laplacian_apply(self.g, &field)?;
        for &v in &self.interior {
            if (lap[v] + src_full[v.0]).abs() > tol {
                return Err(DirichletError::NonConvergence);
            }
        }
        Ok(field)
    }
}

/// One-shot Dirichlet solve; see [`DirichletSystem::solve`].
pub fn solve_dirichlet(
    g: &Graph,
    boundary: &[(VertexId, f64)],
    source: &[(VertexId, f64)],
) -> Result<HarmonicField, DirichletError> {
    let bset: Vec<VertexId> = boundary.iter().map(|&(v, _)| v).collect();
    DirichletSystem::new(g, &bset)?.solve(boundary, source)
}

/// Normalized Green column `g_A(·, y) = Gr_A(·, y) / deg(y)`: solves
/// `Δu = -δ_y` off `A`, `u = 0` on `A`. Symmetric in its two arguments.
pub fn green_kernel_column(
    g: &Graph,
    a_set: &[VertexId],
    y: VertexId,
) -> Result<HarmonicField, DirichletError> {
    if a_set.is_empty() {
        return Err(DirichletError::Graph(GraphError::EmptySet));
    }
    if a_set.contains(&y) {
        return Ok(HarmonicField::constant(g, 0.0));
    }
    let sys = DirichletSystem::new(g, a_set)?;
    sys.solve(&[], &[(y, 1.0)])
}

/// Expected visits to `y` before hitting `A`, starting from `x`:
/// `Gr_A(x, y) = g_A(x, y) · deg(y)`.
pub fn green(g: &Graph, a_set: &[VertexId], x: VertexId, y: VertexId) -> Result<f64, DirichletError> {
    if a_set.contains(&x) || a_set.contains(&y) {
        return Ok(0.0);
    }
    let col = green_kernel_column(g, a_set, y)?;
    Ok(col[x] * g.degree(y))
}

fn clamp_unit(p: f64) -> f64 {
    p.clamp(0.0, 1.0)
}

/// `P_start(T_target < T_taboo)`. An empty taboo set gives 1 on a
/// connected graph.
pub fn hitting_prob(
    g: &Graph,
    start: VertexId,
    target: &[VertexId],
    taboo: &[VertexId],
) -> Result<f64, DirichletError> {
    if target.is_empty() {
        return Err(DirichletError::Graph(GraphError::EmptySet));
    }
    if target.iter().any(|t| taboo.contains(t)) {
        return Err(DirichletError::OverlappingSets);
    }
    if target.contains(&start) {
        return Ok(1.0);
    }
    if taboo.contains(&start) {
        return Ok(0.0);
    }
    if taboo.is_empty() {
        return Ok(1.0);
    }
    let field = hitting_field(g, target, taboo)?;
    Ok(clamp_unit(field[start]))
}

/// The full harmonic field `x ↦ P_x(T_target < T_taboo)`.
pub fn hitting_field(
    g: &Graph,
    target: &[VertexId],
    taboo: &[VertexId],
) -> Result<HarmonicField, DirichletError> {
    if target.iter().any(|t| taboo.contains(t)) {
        return Err(DirichletError::OverlappingSets);
    }
    let mut boundary: Vec<(VertexId, f64)> = target.iter().map(|&v| (v, 1.0)).collect();
    boundary.extend(taboo.iter().map(|&v| (v, 0.0)));
    solve_dirichlet(g, &boundary, &[])
}

/// Law of the first vertex outside `domain` (or in `taboo`) seen by a walk
/// from `start`. The support is the outer boundary of `domain` plus the
/// taboo atoms, so the masses account for everything and sum to one.
pub fn exit_measure(
    g: &Graph,
    domain: &[VertexId],
    start: VertexId,
    taboo: Option<&[VertexId]>,
) -> Result<ProbabilityTable, DirichletError> {
    let n = g.vertex_count();
    let mut in_domain = vec![false; n];
    for &v in domain {
        in_domain[v.0] = true;
    }
    if !in_domain[start.0] {
        return Err(DirichletError::StartOutsideDomain);
    }
    let taboo = taboo.unwrap_or(&[]);
    for &t in taboo {
        if !in_domain[t.0] {
            return Err(DirichletError::StartOutsideDomain);
        }
    }
    let mut is_taboo = vec![false; n];
    for &t in taboo {
        is_taboo[t.0] = true;
    }
    // outer boundary of the domain
    let mut atoms: Vec<VertexId> = Vec::new();
    let mut seen = vec![false; n];
    for &v in domain {
        for &(u, _) in g.neighbors(v) {
            if !in_domain[u.0] && !seen[u.0] {
                seen[u.0] = true;
                atoms.push(u);
            }
        }
    }
    atoms.sort();
    let mut support = atoms.clone();
    support.extend(taboo.iter().copied());

    if is_taboo[start.0] {
        let masses = support
            .iter()
            .map(|&v| if v == start { 1.0 } else { 0.0 })
            .collect();
        return Ok(ProbabilityTable::new(support, masses));
    }

    let absorbing: Vec<VertexId> = support.clone();
    let sys = DirichletSystem::new(g, &absorbing)?;
    let mut masses = Vec::with_capacity(support.len());
    for &b in &support {
        let field = sys.solve(&[(b, 1.0)], &[])?;
        masses.push(clamp_unit(field[start]));
    }
    Ok(ProbabilityTable::new(support, masses))
}

/// Effective resistance `R_eff(x ↔ y) = Gr_x(y, y) / deg(y)`.
pub fn eff_resistance(g: &Graph, x: VertexId, y: VertexId) -> Result<f64, DirichletError> {
    if x == y {
        return Err(DirichletError::SameVertex);
    }
    let col = green_kernel_column(g, &[x], y)?;
    Ok(col[y])
}

/// Effective resistance from `x` to the whole set `A`, computed on the
/// quotient graph where `A` is glued into one vertex.
pub fn eff_resistance_to_set(
    g: &Graph,
    x: VertexId,
    a_set: &[VertexId],
) -> Result<f64, DirichletError> {
    if a_set.is_empty() {
        return Err(DirichletError::Graph(GraphError::EmptySet));
    }
    if a_set.contains(&x) {
        return Err(DirichletError::VertexInSet);
    }
    let (q, map) = glue(g, a_set)?;
    eff_resistance(&q, map.image(x), map.glued_block)
}

/// Closed effective-resistance ball around `z` together with its hull.
///
/// The hull adds every component of the complement that does not contain
/// `outside` (when given) or, failing that, the largest complement
/// component. On graphs with more than [`DENSE_LIMIT`] vertices the scan
/// expands hop shells outward and stops once two consecutive shells lie
/// entirely beyond `R`; resistance is not monotone in hop distance, so on
/// adversarial graphs that early stop is a heuristic.
pub fn reff_ball(
    g: &Graph,
    z: VertexId,
    r: f64,
    outside: Option<VertexId>,
) -> Result<(Vec<VertexId>, Vec<VertexId>), DirichletError> {
    let n = g.vertex_count();
    let sys = DirichletSystem::new(g, &[z])?;
    let reff_of = |y: VertexId| -> Result<f64, DirichletError> {
        let col = sys.solve(&[], &[(y, 1.0)])?;
        Ok(col[y])
    };

    let mut in_ball = vec![false; n];
    in_ball[z.0] = true;
    if n <= 600 {
        for y in g.vertices() {
            if y != z && reff_of(y)? <= r {
                in_ball[y.0] = true;
            }
        }
    } else {
        let dist = g.bfs_distances(z);
        let max_d = dist.iter().copied().filter(|&d| d != usize::MAX).max().unwrap_or(0);
        let mut misses = 0usize;
        for d in 1..=max_d {
            let shell: Vec<VertexId> = g.vertices().filter(|v| dist[v.0] == d).collect();
            let mut any_in = false;
            for &y in &shell {
                if reff_of(y)? <= r {
                    in_ball[y.0] = true;
                    any_in = true;
                }
            }
            if any_in {
                misses = 0;
            } else {
                misses += 1;
                if misses >= 2 {
                    break;
                }
            }
        }
    }

    let mut ball: Vec<VertexId> = g.vertices().filter(|v| in_ball[v.0]).collect();
    ball.sort();

    let (comp, n_comp) = g.components_excluding(&in_ball);
    let mut hull = ball.clone();
    if n_comp > 0 {
        let outside_comp = match outside {
            Some(o) if !in_ball[o.0] => comp[o.0],
            _ => {
                // largest complement component, lowest index on ties
                let mut sizes = vec![0usize; n_comp];
                for v in g.vertices() {
                    if comp[v.0] != usize::MAX {
                        sizes[comp[v.0]] += 1;
                    }
                }
                let mut best = 0usize;
                for (i, &s) in sizes.iter().enumerate() {
                    if s > sizes[best] {
                        best = i;
                    }
                }
                best
            }
        };
        for v in g.vertices() {
            if comp[v.0] != usize::MAX && comp[v.0] != outside_comp {
                hull.push(v);
            }
        }
        hull.sort();
    }
    Ok((ball, hull))
}

/// Residual of the last-exit decomposition
/// `P_x(X_{T_{B^c}} = b) = Σ_{z∈A} Gr_{B^c}(x,z) P_z(T_{B^c} < T_A^+, X_{T_{B^c}} = b)`,
/// both sides from independent solves.
pub fn last_exit_check(
    g: &Graph,
    a_set: &[VertexId],
    b_set: &[VertexId],
    x: VertexId,
    b: VertexId,
) -> Result<f64, DirichletError> {
    let n = g.vertex_count();
    let mut in_b = vec![false; n];
    for &v in b_set {
        in_b[v.0] = true;
    }
    if a_set.iter().any(|v| !in_b[v.0]) || !a_set.contains(&x) {
        return Err(DirichletError::MalformedNesting);
    }
    // outer boundary of B
    let mut boundary: Vec<VertexId> = Vec::new();
    let mut seen = vec![false; n];
    for &v in b_set {
        for &(u, _) in g.neighbors(v) {
            if !in_b[u.0] && !seen[u.0] {
                seen[u.0] = true;
                boundary.push(u);
            }
        }
    }
    boundary.sort();
    if !boundary.contains(&b) {
        return Err(DirichletError::MalformedNesting);
    }

    // left side: exit law of B evaluated at b
    let sys = DirichletSystem::new(g, &boundary)?;
    let exit_at_b = sys.solve(&[(b, 1.0)], &[])?;
    let lhs = exit_at_b[x];

    // right side: Green column at x killed on ∂B ...
    let gcol = green_kernel_column(g, &boundary, x)?;
    // ... and the taboo-return exit field: absorbed on A (value 0) and ∂B (e_b)
    let mut taboo_boundary: Vec<(VertexId, f64)> = a_set.iter().map(|&v| (v, 0.0)).collect();
    taboo_boundary.extend(boundary.iter().map(|&v| (v, if v == b { 1.0 } else { 0.0 })));
    let w = solve_dirichlet(g, &taboo_boundary, &[])?;

    let mut rhs = 0.0f64;
    for &z in a_set {
        // Gr_{B^c}(x, z) = g_{∂B}(z, x) deg(z); one-step decomposition for
        // the conditioned exit out of z
        let mut pz = 0.0f64;
        for &(u, c) in g.neighbors(z) {
            pz += c * w[u];
        }
        pz /= g.degree(z);
        rhs += gcol[z] * g.degree(z) * pz;
    }
    Ok((lhs - rhs).abs())
}
