//! Truncated potential kernels over exhaustions, limit and
//! sequence-dependence diagnostics, harmonic measure from infinity via
//! gluing, kernel sublevel sets and δ-good censuses.
//!
//! The truncated kernel on a wired level graph is
//! `a_n(x, y) = g_A(y, y) - g_A(x, y)` with `A` the wired boundary vertex.
//! It is nonnegative, vanishes at `y`, satisfies `Δ a_n(·, y) = δ_y` on the
//! interior and `a_n(x, y) = R_eff(y ↔ A) P_x(T_A < T_y)` exactly, which the
//! tests exercise as an independent route.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::dirichlet::{
    eff_resistance, green_kernel_column, hitting_prob, DirichletError, DirichletSystem,
};
use crate::field::{HarmonicField, ProbabilityTable};
use crate::graph::{glue, VertexId};
use crate::models::{Coord, Exhaustion, ExhaustionLevel};

#[derive(Clone, Debug, PartialEq)]
pub enum KernelError {
    /// A queried coordinate is not an interior vertex of the level.
    NotInterior,
    /// Limit detection needs at least three levels.
    InsufficientLevels,
    /// A kernel table does not match the level graph.
    IncompleteTable,
    Dirichlet(DirichletError),
}

impl fmt::Display for KernelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelError::NotInterior => write!(f, "coordinate is not interior at this level"),
            KernelError::InsufficientLevels => write!(f, "need at least three levels"),
            KernelError::IncompleteTable => write!(f, "kernel table does not index this level"),
            KernelError::Dirichlet(e) => write!(f, "{e}"),
        }
    }
}

impl From<DirichletError> for KernelError {
    fn from(e: DirichletError) -> Self {
        KernelError::Dirichlet(e)
    }
}

/// Truncated kernel column `a_n(·, y)` on one wired level.
///
/// The value at the wired vertex equals `R_eff(y ↔ boundary)`.
pub fn kernel_column(level: &ExhaustionLevel, y: VertexId) -> Result<HarmonicField, KernelError> {
    if y == level.boundary {
        return Err(KernelError::NotInterior);
    }
    let col = green_kernel_column(&level.graph, &[level.boundary], y)?;
    let gyy = col[y];
    let values = col.values().iter().map(|&v| gyy - v).collect();
    Ok(HarmonicField::new(&level.graph, values))
}

/// `a_n(x, y)` for model coordinates on one level.
pub fn truncated_kernel(level: &ExhaustionLevel, x: Coord, y: Coord) -> Result<f64, KernelError> {
    let xv = level.vertex(x).ok_or(KernelError::NotInterior)?;
    let yv = level.vertex(y).ok_or(KernelError::NotInterior)?;
    if xv == yv {
        return Ok(0.0);
    }
    let col = kernel_column(level, yv)?;
    Ok(col[xv])
}

/// Kernel (or harmonic-measure) values across the levels of one sequence,
/// with convergence and cross-sequence agreement diagnostics.
#[derive(Clone, Debug)]
pub struct KernelEstimate {
    /// Value at the last level of the primary sequence.
    pub value: f64,
    pub per_level_values: Vec<(u32, f64)>,
    pub sequence_id: String,
    /// Successive-level gap fell below the tolerance (needs >= 3 levels).
    pub converged: bool,
    /// Max pairwise gap between the final values of all sequences tried.
    /// Zero when only the primary sequence is given.
    pub spread_across_sequences: f64,
}

/// Watches `a_n(x, y)` along one or more exhaustion sequences.
///
/// `converged` only reports a small successive-level gap on the primary
/// sequence; `spread_across_sequences` is the uniqueness detector. A spread
/// far above `tol` means different ways of going to infinity disagree, so
/// no sequence-independent kernel limit exists.
pub fn kernel_limit(
    exh: &Exhaustion,
    x: Coord,
    y: Coord,
    tol: f64,
    alt_sequences: &[&Exhaustion],
) -> Result<KernelEstimate, KernelError> {
    if exh.levels.len() < 3 {
        return Err(KernelError::InsufficientLevels);
    }
    let per_level: Vec<(u32, f64)> = exh
        .levels
        .iter()
        .map(|lvl| Ok((lvl.level, truncated_kernel(lvl, x, y)?)))
        .collect::<Result<_, KernelError>>()?;
    finish_estimate(exh, per_level, tol, alt_sequences, |alt| {
        truncated_kernel(alt.top(), x, y)
    })
}

fn finish_estimate(
    exh: &Exhaustion,
    per_level: Vec<(u32, f64)>,
    tol: f64,
    alt_sequences: &[&Exhaustion],
    mut final_of: impl FnMut(&Exhaustion) -> Result<f64, KernelError>,
) -> Result<KernelEstimate, KernelError> {
    let value = per_level.last().map(|&(_, v)| v).unwrap_or(f64::NAN);
    let converged = per_level.len() >= 3 && {
        let k = per_level.len();
        (per_level[k - 1].1 - per_level[k - 2].1).abs() < tol
    };
    let mut finals = vec![value];
    for alt in alt_sequences {
        finals.push(final_of(alt)?);
    }
    let mut spread = 0.0f64;
    for i in 0..finals.len() {
        for j in i + 1..finals.len() {
            spread = spread.max((finals[i] - finals[j]).abs());
        }
    }
    Ok(KernelEstimate {
        value,
        per_level_values: per_level,
        sequence_id: exh.sequence_id(),
        converged,
        spread_across_sequences: spread,
    })
}

/// `P_A(T_x < T_y)` on one wired level: harmonic measure of `{x, y}` seen
/// from the wired boundary, the finite surrogate of two-point harmonic
/// measure from infinity.
pub fn hm_two_point_level(
    level: &ExhaustionLevel,
    x: VertexId,
    y: VertexId,
) -> Result<f64, KernelError> {
    if x == level.boundary || y == level.boundary {
        return Err(KernelError::NotInterior);
    }
    Ok(hitting_prob(&level.graph, level.boundary, &[x], &[y])?)
}

/// Two-point harmonic measure across levels, with the same diagnostics as
/// [`kernel_limit`].
pub fn hm_two_point(
    exh: &Exhaustion,
    x: Coord,
    y: Coord,
    tol: f64,
    alt_sequences: &[&Exhaustion],
) -> Result<KernelEstimate, KernelError> {
    let lookup = |lvl: &ExhaustionLevel| -> Result<f64, KernelError> {
        let xv = lvl.vertex(x).ok_or(KernelError::NotInterior)?;
        let yv = lvl.vertex(y).ok_or(KernelError::NotInterior)?;
        hm_two_point_level(lvl, xv, yv)
    };
    let per_level: Vec<(u32, f64)> = exh
        .levels
        .iter()
        .map(|lvl| Ok((lvl.level, lookup(lvl)?)))
        .collect::<Result<_, KernelError>>()?;
    finish_estimate(exh, per_level, tol, alt_sequences, |alt| lookup(alt.top()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QbRoute {
    /// `R_eff(B ↔ A_n) · P_w(T_{A_n} < T_B)` per level.
    Limit,
    /// `a(w, x) - E_w[a(X_{T_B}, x)]`, averaged over the choice of `x ∈ B`.
    Formula,
}

#[derive(Clone, Debug)]
pub struct QbReport {
    pub route: QbRoute,
    pub per_level: Vec<(u32, f64)>,
    /// Value at the top level.
    pub value: f64,
    /// Spread over the choice of `x ∈ B` (formula route; 0 for the limit
    /// route). Any `x` must give the same value; this is the measured
    /// deviation.
    pub x_independence_dev: f64,
}

fn coords_to_vertices(
    level: &ExhaustionLevel,
    coords: &[Coord],
) -> Result<Vec<VertexId>, KernelError> {
    coords
        .iter()
        .map(|&c| level.vertex(c).ok_or(KernelError::NotInterior))
        .collect()
}

/// Hitting distribution fields `v ↦ P_v(X_{T_B} = z)` for every `z ∈ B`,
/// solved on the wired graph with the boundary vertex left ordinary.
fn hitting_split(
    level: &ExhaustionLevel,
    b: &[VertexId],
) -> Result<Vec<HarmonicField>, KernelError> {
    let sys = DirichletSystem::new(&level.graph, b)?;
    b.iter()
        .map(|&z| Ok(sys.solve(&[(z, 1.0)], &[])?))
        .collect()
}

/// The escape potential of a finite set `B`: the nonnegative function
/// vanishing on `B`, harmonic off `B` away from the wired vertex, whose
/// Laplacian restricted to `B` is the harmonic measure from infinity.
pub fn q_b_field(level: &ExhaustionLevel, b: &[VertexId]) -> Result<HarmonicField, KernelError> {
    let (field, _) = q_b_field_with_dev(level, b)?;
    Ok(field)
}

fn q_b_field_with_dev(
    level: &ExhaustionLevel,
    b: &[VertexId],
) -> Result<(HarmonicField, f64), KernelError> {
    if b.is_empty() {
        return Err(KernelError::NotInterior);
    }
    let splits = hitting_split(level, b)?;
    let n = level.graph.vertex_count();
    let mut acc = vec![0.0f64; n];
    let mut dev = 0.0f64;
    let mut first: Option<Vec<f64>> = None;
    for &x in b {
        let a_col = kernel_column(level, x)?;
        let mut vals = vec![0.0f64; n];
        for v in 0..n {
            let vid = VertexId(v);
            if b.contains(&vid) {
                continue;
            }
            let mut hit_term = 0.0;
            for (zi, &z) in b.iter().enumerate() {
                let az = a_col[z];
                if az != 0.0 {
                    hit_term += splits[zi][vid] * az;
                }
            }
            vals[v] = a_col[vid] - hit_term;
        }
        match &first {
            None => first = Some(vals.clone()),
            Some(f0) => {
                for v in 0..n {
                    dev = dev.max((vals[v] - f0[v]).abs());
                }
            }
        }
        for v in 0..n {
            acc[v] += vals[v];
        }
    }
    let k = b.len() as f64;
    for v in acc.iter_mut() {
        *v /= k;
    }
    Ok((HarmonicField::new(&level.graph, acc), dev))
}

/// `q_B(w)` through either of its two defining routes.
pub fn q_b(
    exh: &Exhaustion,
    b: &[Coord],
    w: Coord,
    route: QbRoute,
) -> Result<QbReport, KernelError> {
    let mut per_level = Vec::with_capacity(exh.levels.len());
    let mut dev = 0.0f64;
    for lvl in &exh.levels {
        let bv = coords_to_vertices(lvl, b)?;
        let wv = lvl.vertex(w).ok_or(KernelError::NotInterior)?;
        let value = if bv.contains(&wv) {
            0.0
        } else {
            match route {
                QbRoute::Limit => {
                    let (quotient, map) = glue(&lvl.graph, &bv).map_err(DirichletError::from)?;
                    let reff =
                        eff_resistance(&quotient, map.glued_block, map.image(lvl.boundary))?;
                    let p = hitting_prob(&lvl.graph, wv, &[lvl.boundary], &bv)?;
                    reff * p
                }
                QbRoute::Formula => {
                    let (field, level_dev) = q_b_field_with_dev(lvl, &bv)?;
                    dev = dev.max(level_dev);
                    field[wv]
                }
            }
        };
        per_level.push((lvl.level, value));
    }
    let value = per_level.last().map(|&(_, v)| v).unwrap_or(f64::NAN);
    Ok(QbReport {
        route,
        per_level,
        value,
        x_independence_dev: dev,
    })
}

#[derive(Clone, Debug)]
pub struct HmInfinityReport {
    pub table: ProbabilityTable,
    /// Vertices of `B` cut off from the wired boundary by the rest of `B`;
    /// their mass is exactly zero.
    pub shielded: Vec<VertexId>,
}

/// Harmonic measure from infinity of a finite interior set `B`: the law of
/// the first visit to `B` by a walk from the wired boundary, computed as
/// the Laplacian of the escape potential `q_B` restricted to `B`.
pub fn hm_from_infinity(exh: &Exhaustion, b: &[Coord]) -> Result<HmInfinityReport, KernelError> {
    let level = exh.top();
    let bv = coords_to_vertices(level, b)?;
    let field = q_b_field(level, &bv)?;
    let mut masses = Vec::with_capacity(bv.len());
    for &w in &bv {
        let mut lap = 0.0f64;
        for &(u, c) in level.graph.neighbors(w) {
            let qv = if bv.contains(&u) { 0.0 } else { field[u] };
            lap += c * qv;
        }
        masses.push(lap);
    }
    // structural zero detection: w is shielded when B \ {w} disconnects it
    // from the wired boundary
    let mut shielded = Vec::new();
    let n = level.graph.vertex_count();
    for &w in &bv {
        let mut excluded = vec![false; n];
        for &z in &bv {
            if z != w {
                excluded[z.0] = true;
            }
        }
        let (comp, _) = level.graph.components_excluding(&excluded);
        if comp[w.0] != comp[level.boundary.0] {
            shielded.push(w);
        }
    }
    Ok(HmInfinityReport {
        table: ProbabilityTable::new(bv, masses),
        shielded,
    })
}

/// Per-level residual of the Green-function/kernel triangle identity
/// `Gr_z(x, y)/deg(y) = a(x, z) - a(x, y) + a(z, y)`.
///
/// `Gr_z` kills the walk at `z` only; the wired vertex stays an ordinary
/// vertex, which makes the identity exact on every level up to solver
/// tolerance.
pub fn green_pk_identity(
    exh: &Exhaustion,
    x: Coord,
    y: Coord,
    z: Coord,
) -> Result<Vec<(u32, f64)>, KernelError> {
    let mut out = Vec::with_capacity(exh.levels.len());
    for lvl in &exh.levels {
        let xv = lvl.vertex(x).ok_or(KernelError::NotInterior)?;
        let yv = lvl.vertex(y).ok_or(KernelError::NotInterior)?;
        let zv = lvl.vertex(z).ok_or(KernelError::NotInterior)?;
        let lhs = if xv == zv || yv == zv {
            0.0
        } else {
            green_kernel_column(&lvl.graph, &[zv], yv)?[xv]
        };
        let col_y = kernel_column(lvl, yv)?;
        let a_xz = if xv == zv { 0.0 } else { kernel_column(lvl, zv)?[xv] };
        let rhs = a_xz - col_y[xv] + col_y[zv];
        out.push((lvl.level, (lhs - rhs).abs()));
    }
    Ok(out)
}

/// Sublevel set of a kernel column, the natural ball of this theory.
#[derive(Clone, Debug)]
pub struct SublevelSet {
    pub anchor: VertexId,
    pub radius: f64,
    pub members: Vec<VertexId>,
    /// Outer vertex boundary of the member set.
    pub boundary: Vec<VertexId>,
    pub connected: bool,
    /// Complement-component check: `Some(true)` when the complement within
    /// the truncation is a single piece containing the wired vertex. `None`
    /// when the set comes within 2 hops of the wired vertex, where the
    /// truncation distorts the count.
    pub simply_connected: Option<bool>,
}

/// Builds `{x : a(x, anchor) <= radius}` from a kernel column.
pub fn sublevel_set(
    level: &ExhaustionLevel,
    kernel: &HarmonicField,
    anchor: VertexId,
    radius: f64,
) -> Result<SublevelSet, KernelError> {
    if !kernel.indexes(&level.graph) {
        return Err(KernelError::IncompleteTable);
    }
    let n = level.graph.vertex_count();
    let mut in_set = vec![false; n];
    for v in level.graph.vertices() {
        if v != level.boundary && kernel[v] <= radius {
            in_set[v.0] = true;
        }
    }
    let members: Vec<VertexId> = level.graph.vertices().filter(|v| in_set[v.0]).collect();
    let mut boundary = Vec::new();
    let mut seen = vec![false; n];
    for &v in &members {
        for &(u, _) in level.graph.neighbors(v) {
            if !in_set[u.0] && !seen[u.0] {
                seen[u.0] = true;
                boundary.push(u);
            }
        }
    }
    boundary.sort();

    let mut excluded: Vec<bool> = in_set.iter().map(|&b| !b).collect();
    let (comp, _) = level.graph.components_excluding(&excluded);
    let connected = members.windows(2).all(|w| comp[w[0].0] == comp[w[1].0]);

    // complement structure, meaningful only away from the wired vertex
    let dist_to_bd = level.graph.bfs_distances(level.boundary);
    let margin = members
        .iter()
        .map(|v| dist_to_bd[v.0])
        .min()
        .unwrap_or(usize::MAX);
    let simply_connected = if margin >= 2 {
        for v in level.graph.vertices() {
            excluded[v.0] = in_set[v.0];
        }
        let (comp_c, n_comp) = level.graph.components_excluding(&excluded);
        let bd_comp = comp_c[level.boundary.0];
        let single = n_comp == 1 && (0..n).all(|v| excluded[v] || comp_c[v] == bd_comp);
        Some(single)
    } else {
        None
    };

    Ok(SublevelSet {
        anchor,
        radius,
        members,
        boundary,
        connected,
        simply_connected,
    })
}

/// δ-good census over hop-distance annuli.
#[derive(Clone, Debug)]
pub struct DeltaGoodCensus {
    pub thresholds: Vec<f64>,
    /// `(vertex, hop distance from the anchor, hm_{x,o}(x))`.
    pub values: Vec<(VertexId, usize, f64)>,
    /// Per hop distance: `(distance, annulus size, count >= δ per threshold)`.
    pub annuli: Vec<(usize, usize, Vec<usize>)>,
}

/// Measures `hm_{x,o}(x)` for every interior vertex of the top level and
/// counts the δ-good ones per annulus.
///
/// Needs one solve per vertex for the diagonal Green values, so keep the
/// top level desk-sized (a few thousand vertices).
pub fn delta_good_census(
    exh: &Exhaustion,
    thresholds: &[f64],
) -> Result<DeltaGoodCensus, KernelError> {
    let level = exh.top();
    let o = exh.anchor_vertex(level);
    let g = &level.graph;
    let sys = DirichletSystem::new(g, &[level.boundary])?;
    let o_col = sys.solve(&[], &[(o, 1.0)])?; // g(·, o)
    let g_oo = o_col[o];
    let dist = g.bfs_distances(o);
    let mut values = Vec::new();
    for x in g.vertices() {
        if x == level.boundary || x == o {
            continue;
        }
        let x_col = sys.solve(&[], &[(x, 1.0)])?;
        let a_xo = g_oo - o_col[x];
        let a_ox = x_col[x] - x_col[o];
        let hm = a_xo / (a_xo + a_ox);
        values.push((x, dist[x.0], hm));
    }
    let max_d = values.iter().map(|&(_, d, _)| d).max().unwrap_or(0);
    let mut annuli = Vec::new();
    for d in 1..=max_d {
        let ring: Vec<f64> = values
            .iter()
            .filter(|&&(_, vd, _)| vd == d)
            .map(|&(_, _, hm)| hm)
            .collect();
        if ring.is_empty() {
            continue;
        }
        let counts: Vec<usize> = thresholds
            .iter()
            .map(|&t| ring.iter().filter(|&&hm| hm >= t).count())
            .collect();
        annuli.push((d, ring.len(), counts));
    }
    Ok(DeltaGoodCensus {
        thresholds: thresholds.to_vec(),
        values,
        annuli,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::laplacian_apply;
    use crate::models::{make_exhaustion, Model, Variant};

    fn line(levels: &[u32]) -> Exhaustion {
        make_exhaustion(Model::Line, Variant::Symmetric, levels).unwrap()
    }

    #[test]
    fn line_symmetric_kernel_is_half_distance() {
        let exh = line(&[6]);
        let lvl = &exh.levels[0];
        for k in -6i64..=6 {
            let v = truncated_kernel(lvl, (k, 0), (0, 0)).unwrap();
            assert!(
                (v - (k.abs() as f64) / 2.0).abs() < 1e-10,
                "a({k}, 0) = {v}"
            );
        }
        assert_eq!(truncated_kernel(lvl, (3, 0), (3, 0)).unwrap(), 0.0);
    }

    #[test]
    fn one_sided_kernel_is_positive_part() {
        let exh = make_exhaustion(Model::Line, Variant::OneSidedRight, &[5]).unwrap();
        let lvl = &exh.levels[0];
        for k in -5i64..=5 {
            let v = truncated_kernel(lvl, (k, 0), (0, 0)).unwrap();
            let want = k.max(0) as f64;
            assert!((v - want).abs() < 1e-9, "a({k}, 0) = {v}, want {want}");
        }
    }

    #[test]
    fn kernel_is_nonnegative_and_harmonic_off_pole() {
        let exh = make_exhaustion(Model::Grid2d, Variant::Default, &[4]).unwrap();
        let lvl = &exh.levels[0];
        let y = lvl.vertex((1, -1)).unwrap();
        let col = kernel_column(lvl, y).unwrap();
        assert_eq!(col[y], 0.0);
        for v in lvl.graph.vertices() {
            assert!(col[v] >= -1e-12);
        }
        // Δ a(·,y) = δ_y on the interior
        let lap = laplacian_apply(&lvl.graph, &col).unwrap();
        for v in lvl.graph.vertices() {
            if v == lvl.boundary {
                continue;
            }
            let want = if v == y { 1.0 } else { 0.0 };
            assert!((lap[v] - want).abs() < 1e-8, "Δa at {v}: {}", lap[v]);
        }
    }

    #[test]
    fn kernel_equals_resistance_times_escape() {
        // a_n(x,y) = R_eff(y <-> bd) P_x(T_bd < T_y), and the two-route
        // probability form of the same statement
        let exh = make_exhaustion(Model::Grid2d, Variant::Default, &[3]).unwrap();
        let lvl = &exh.levels[0];
        let y = lvl.vertex((0, 0)).unwrap();
        let col = kernel_column(lvl, y).unwrap();
        for &c in &[(1i64, 0i64), (2, 2), (-3, 1)] {
            let x = lvl.vertex(c).unwrap();
            let reff = eff_resistance(&lvl.graph, y, lvl.boundary).unwrap();
            let p = hitting_prob(&lvl.graph, x, &[lvl.boundary], &[y]).unwrap();
            assert!((col[x] - reff * p).abs() < 1e-9);
        }
    }

    #[test]
    fn kernel_limit_line_sequence_dependence() {
        let sym = line(&[4, 8, 16, 32]);
        let right = make_exhaustion(Model::Line, Variant::OneSidedRight, &[4, 8, 16, 32]).unwrap();
        let left = make_exhaustion(Model::Line, Variant::OneSidedLeft, &[4, 8, 16, 32]).unwrap();
        let est = kernel_limit(&sym, (1, 0), (0, 0), 1e-3, &[&right, &left]).unwrap();
        assert!((est.value - 0.5).abs() < 1e-10);
        assert!(est.converged);
        // finals are exactly {1/2, 1, 0}: spread 1
        assert!((est.spread_across_sequences - 1.0).abs() < 1e-9);
    }

    #[test]
    fn kernel_limit_needs_three_levels() {
        let exh = line(&[4, 8]);
        assert_eq!(
            kernel_limit(&exh, (1, 0), (0, 0), 1e-3, &[]).unwrap_err(),
            KernelError::InsufficientLevels
        );
    }

    #[test]
    fn grid_kernel_constants_small_scale() {
        // desk-scale look at the square-lattice kernel; the acceptance
        // suite pushes the levels up and tightens this
        let exh = make_exhaustion(Model::Grid2d, Variant::Default, &[8, 16, 32]).unwrap();
        let est = kernel_limit(&exh, (1, 0), (0, 0), 1e-2, &[]).unwrap();
        assert!((est.value - 0.25).abs() < 0.01, "value {}", est.value);
        let est11 = kernel_limit(&exh, (1, 1), (0, 0), 1e-2, &[]).unwrap();
        assert!(
            (est11.value - core::f64::consts::FRAC_1_PI).abs() < 0.01,
            "value {}",
            est11.value
        );
    }

    #[test]
    fn hm_two_point_line_closed_form() {
        // P_bd(T_x < T_o) on the wired segment [-n, n] for x = (k, 0), k > 0
        // equals (n+1) / (2n + 2 - k); at k = 1 it tends to 1/2.
        let exh = line(&[8, 16, 32]);
        let est = hm_two_point(&exh, (1, 0), (0, 0), 1e-2, &[]).unwrap();
        for &(n, v) in &est.per_level_values {
            let n = n as f64;
            let want = (n + 1.0) / (2.0 * n + 1.0);
            assert!((v - want).abs() < 1e-10, "level {n}: {v} vs {want}");
        }
        assert!((est.value - 0.5).abs() < 1.0 / 32.0);
    }

    #[test]
    fn hm_two_point_one_sided_is_one() {
        let exh = make_exhaustion(Model::Line, Variant::OneSidedRight, &[4, 8, 16]).unwrap();
        let est = hm_two_point(&exh, (1, 0), (0, 0), 1e-3, &[]).unwrap();
        for &(_, v) in &est.per_level_values {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn hm_two_point_grid_symmetry() {
        let exh = make_exhaustion(Model::Grid2d, Variant::Default, &[6]).unwrap();
        let lvl = &exh.levels[0];
        // pair symmetric under a box symmetry: exactly 1/2
        let x = lvl.vertex((1, 0)).unwrap();
        let y = lvl.vertex((-1, 0)).unwrap();
        let hm = hm_two_point_level(lvl, x, y).unwrap();
        assert!((hm - 0.5).abs() < 1e-10);
        // off-center pair: 1/2 only up to the truncation asymmetry
        let o = lvl.vertex((0, 0)).unwrap();
        let hm_off = hm_two_point_level(lvl, o, x).unwrap();
        assert!((hm_off - 0.5).abs() < 0.03, "hm {hm_off}");
    }

    #[test]
    fn qb_singleton_reduces_to_kernel() {
        let exh = make_exhaustion(Model::Grid2d, Variant::Default, &[6]).unwrap();
        let rep = q_b(&exh, &[(0, 0)], (2, 1), QbRoute::Formula).unwrap();
        let want = truncated_kernel(exh.top(), (2, 1), (0, 0)).unwrap();
        assert!((rep.value - want).abs() < 1e-10);
        let rep_l = q_b(&exh, &[(0, 0)], (2, 1), QbRoute::Limit).unwrap();
        assert!((rep_l.value - want).abs() < 1e-10);
    }

    #[test]
    fn qb_routes_agree_and_vanish_on_b() {
        let exh = make_exhaustion(Model::Grid2d, Variant::Default, &[8]).unwrap();
        let b = [(0i64, 0i64), (1, 0), (0, 1)];
        let w = (2, -1);
        let f = q_b(&exh, &b, w, QbRoute::Formula).unwrap();
        let l = q_b(&exh, &b, w, QbRoute::Limit).unwrap();
        assert!(
            (f.value - l.value).abs() < 1e-9,
            "formula {} vs limit {}",
            f.value,
            l.value
        );
        assert!(f.x_independence_dev < 1e-9, "dev {}", f.x_independence_dev);
        assert!(f.value >= 0.0);
        let on_b = q_b(&exh, &b, (1, 0), QbRoute::Formula).unwrap();
        assert_eq!(on_b.value, 0.0);
    }

    #[test]
    fn hm_infinity_two_points_matches_two_point_measure() {
        let exh = make_exhaustion(Model::Grid2d, Variant::Default, &[8]).unwrap();
        let lvl = exh.top();
        let rep = hm_from_infinity(&exh, &[(0, 0), (2, 1)]).unwrap();
        let x = lvl.vertex((0, 0)).unwrap();
        let y = lvl.vertex((2, 1)).unwrap();
        let hm = hm_two_point_level(lvl, x, y).unwrap();
        assert!(rep.table.defect() < 1e-6, "defect {}", rep.table.defect());
        assert!((rep.table.mass_at(x).unwrap() - hm).abs() < 1e-6);
        assert!(rep.shielded.is_empty());
    }

    #[test]
    fn hm_infinity_grid_pair_is_symmetric() {
        let exh = make_exhaustion(Model::Grid2d, Variant::Default, &[6]).unwrap();
        let rep = hm_from_infinity(&exh, &[(1, 0), (-1, 0)]).unwrap();
        for &m in rep.table.masses() {
            assert!((m - 0.5).abs() < 1e-9);
        }
        // the off-center pair picks up only a small truncation asymmetry
        let rep = hm_from_infinity(&exh, &[(0, 0), (1, 0)]).unwrap();
        for &m in rep.table.masses() {
            assert!((m - 0.5).abs() < 0.03);
        }
    }

    #[test]
    fn hm_infinity_shielding_orders_masses() {
        // middle point of a 3-in-a-row is shadowed by its two neighbors
        let exh = make_exhaustion(Model::Grid2d, Variant::Default, &[8]).unwrap();
        let lvl = exh.top();
        let rep = hm_from_infinity(&exh, &[(0, 0), (1, 0), (-1, 0)]).unwrap();
        let m_o = rep.table.mass_at(lvl.vertex((0, 0)).unwrap()).unwrap();
        let m_r = rep.table.mass_at(lvl.vertex((1, 0)).unwrap()).unwrap();
        let m_l = rep.table.mass_at(lvl.vertex((-1, 0)).unwrap()).unwrap();
        assert!((m_r - m_l).abs() < 1e-9, "outer symmetry");
        assert!(m_o < m_r, "shielded center: {m_o} vs {m_r}");
        assert!(rep.table.defect() < 1e-6);
    }

    #[test]
    fn green_pk_identity_line_exact() {
        let exh = line(&[8, 16]);
        let res = green_pk_identity(&exh, (2, 0), (1, 0), (0, 0)).unwrap();
        for &(lvl, r) in &res {
            assert!(r < 1e-9, "level {lvl} residual {r}");
        }
    }

    #[test]
    fn green_pk_identity_degenerate_pole() {
        let exh = line(&[8]);
        let res = green_pk_identity(&exh, (2, 0), (1, 0), (2, 0)).unwrap();
        // x = z: both sides vanish
        assert!(res[0].1 < 1e-10);
    }

    #[test]
    fn green_pk_identity_grid() {
        let exh = make_exhaustion(Model::Grid2d, Variant::Default, &[8, 12]).unwrap();
        let res = green_pk_identity(&exh, (3, 0), (0, 2), (0, 0)).unwrap();
        for &(lvl, r) in &res {
            assert!(r < 1e-9, "level {lvl} residual {r}");
        }
    }

    #[test]
    fn kernel_quasi_triangle_inequality() {
        // a(x,y) <= a(x,z) + a(z,y) exactly on a wired level, since the
        // difference is a Green value
        let exh = make_exhaustion(Model::Grid2d, Variant::Default, &[5]).unwrap();
        let lvl = exh.top();
        let pts = [(0i64, 0i64), (1, 0), (2, 2), (-1, 3), (0, -2)];
        for &x in &pts {
            for &y in &pts {
                for &z in &pts {
                    if x == y || y == z || x == z {
                        continue;
                    }
                    let axy = truncated_kernel(lvl, x, y).unwrap();
                    let axz = truncated_kernel(lvl, x, z).unwrap();
                    let azy = truncated_kernel(lvl, z, y).unwrap();
                    assert!(axy <= axz + azy + 1e-10);
                }
            }
        }
    }

    #[test]
    fn far_pole_differences_shrink() {
        // |a_n(x, y_far) - a_n(z, y_far)| decreases as y_far recedes
        let exh = make_exhaustion(Model::Grid2d, Variant::Default, &[16]).unwrap();
        let lvl = exh.top();
        let x = (0i64, 0i64);
        let z = (1i64, 1i64);
        let mut gaps = Vec::new();
        for d in [3i64, 6, 12] {
            let a_x = truncated_kernel(lvl, x, (d, 0)).unwrap();
            let a_z = truncated_kernel(lvl, z, (d, 0)).unwrap();
            gaps.push((a_x - a_z).abs());
        }
        assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "gaps {gaps:?}");
    }

    #[test]
    fn sublevel_set_line() {
        let exh = line(&[8]);
        let lvl = exh.top();
        let o = lvl.vertex((0, 0)).unwrap();
        let col = kernel_column(lvl, o).unwrap();
        let s = sublevel_set(lvl, &col, o, 1.0).unwrap();
        let want: Vec<VertexId> = (-2i64..=2).map(|k| lvl.vertex((k, 0)).unwrap()).collect();
        let mut got = s.members.clone();
        got.sort();
        let mut want = want;
        want.sort();
        assert_eq!(got, want);
        assert!(s.connected);
        assert_eq!(s.simply_connected, Some(true));
    }

    #[test]
    fn sublevel_set_radius_zero_on_two_connected_graph() {
        let exh = make_exhaustion(Model::Grid2d, Variant::Default, &[4]).unwrap();
        let lvl = exh.top();
        let o = lvl.vertex((0, 0)).unwrap();
        let col = kernel_column(lvl, o).unwrap();
        let s = sublevel_set(lvl, &col, o, 0.0).unwrap();
        assert_eq!(s.members, alloc::vec![o]);
    }

    #[test]
    fn sublevel_sets_nest_and_contain_resistance_hulls() {
        let exh = make_exhaustion(Model::Grid2d, Variant::Default, &[8]).unwrap();
        let lvl = exh.top();
        let o = lvl.vertex((0, 0)).unwrap();
        let col = kernel_column(lvl, o).unwrap();
        let s1 = sublevel_set(lvl, &col, o, 0.3).unwrap();
        let s2 = sublevel_set(lvl, &col, o, 0.5).unwrap();
        for v in &s1.members {
            assert!(s2.members.contains(v));
        }
        let (_, hull) = crate::dirichlet::reff_ball(&lvl.graph, o, 0.3, Some(lvl.boundary)).unwrap();
        for v in &hull {
            assert!(s1.members.contains(v), "hull vertex {v} outside sublevel set");
        }
    }

    #[test]
    fn census_line_is_all_or_nothing_inside_margin() {
        let exh = line(&[12]);
        let census = delta_good_census(&exh, &[0.4, 0.6]).unwrap();
        // inside |x| <= n/3 the measured hm is 1/2 + O(|x|/n): everything is
        // 0.4-good and nothing is 0.6-good
        for &(d, total, ref counts) in &census.annuli {
            if d > 4 {
                continue;
            }
            assert_eq!(counts[0], total, "δ=0.4 at distance {d}");
            assert_eq!(counts[1], 0, "δ=0.6 at distance {d}");
        }
    }

    #[test]
    fn census_grid_has_eightfold_symmetry_at_distance_one() {
        let exh = make_exhaustion(Model::Grid2d, Variant::Default, &[5]).unwrap();
        let census = delta_good_census(&exh, &[0.5]).unwrap();
        let ring: Vec<f64> = census
            .values
            .iter()
            .filter(|&&(_, d, _)| d == 1)
            .map(|&(_, _, hm)| hm)
            .collect();
        assert_eq!(ring.len(), 4);
        for w in ring.windows(2) {
            assert!((w[0] - w[1]).abs() < 1e-9);
        }
    }

    #[test]
    fn census_comb_teeth_are_less_good_than_spine() {
        let exh = make_exhaustion(Model::Comb, Variant::Default, &[8]).unwrap();
        let lvl = exh.top();
        let census = delta_good_census(&exh, &[0.5]).unwrap();
        let hm_of = |c: Coord| {
            let v = lvl.vertex(c).unwrap();
            census
                .values
                .iter()
                .find(|&&(w, _, _)| w == v)
                .map(|&(_, _, hm)| hm)
                .unwrap()
        };
        // at matched hop distance 3 from the origin: tooth tip vs spine
        let tip = hm_of((0, 3));
        let spine = hm_of((3, 0));
        assert!(
            tip < spine,
            "tooth tip hm {tip} should be below spine hm {spine}"
        );
    }
}
