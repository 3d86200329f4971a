//! Built-in lattice models and their wired exhaustions.
//!
//! A level-`n` truncation keeps a finite piece of the model and glues the
//! whole complement into one extra *boundary* vertex, so the walk on the
//! truncation behaves like the walk on the infinite model watched until it
//! travels far away. Vertices are addressed by model coordinates, which
//! stay consistent across levels.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::graph::{Graph, GraphError, VertexId};

/// Model coordinate; one-dimensional models use `(k, 0)`.
pub type Coord = (i64, i64);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Model {
    /// The integer line.
    Line,
    /// A plain cycle of the given size, for calibrating tree samplers.
    CycleCalibration,
    /// The square lattice.
    Grid2d,
    /// The triangular lattice (square lattice plus one diagonal family).
    Triangular,
    /// A spine with a vertical tooth over every spine vertex.
    Comb,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::Line => "line",
            Model::CycleCalibration => "cycle-calibration",
            Model::Grid2d => "grid2d",
            Model::Triangular => "triangular",
            Model::Comb => "comb",
        }
    }

    pub fn parse(s: &str) -> Result<Model, ModelError> {
        match s {
            "line" => Ok(Model::Line),
            "cycle-calibration" => Ok(Model::CycleCalibration),
            "grid2d" => Ok(Model::Grid2d),
            "triangular" => Ok(Model::Triangular),
            "comb" => Ok(Model::Comb),
            _ => Err(ModelError::UnknownModel(String::from(s))),
        }
    }
}

/// How the truncation is wired.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    /// Model default: symmetric wiring for the line, boxes for lattices.
    Default,
    /// Line `[-n, n]` wired at both ends.
    Symmetric,
    /// Line wired only past `+n`; the far side gets a reflecting cutoff at
    /// `-n^2` so the missing tail cannot distort hitting probabilities.
    OneSidedRight,
    /// Mirror image of [`Variant::OneSidedRight`].
    OneSidedLeft,
    /// Lattice truncation along `max(|x|, |y|) <= n`.
    BoxShape,
    /// Lattice truncation along `|x| + |y| <= n`.
    Diamond,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Default => "default",
            Variant::Symmetric => "symmetric",
            Variant::OneSidedRight => "one-sided-right",
            Variant::OneSidedLeft => "one-sided-left",
            Variant::BoxShape => "box",
            Variant::Diamond => "diamond",
        }
    }

    pub fn parse(s: &str) -> Result<Variant, ModelError> {
        match s {
            "default" => Ok(Variant::Default),
            "symmetric" => Ok(Variant::Symmetric),
            "one-sided-right" => Ok(Variant::OneSidedRight),
            "one-sided-left" => Ok(Variant::OneSidedLeft),
            "box" => Ok(Variant::BoxShape),
            "diamond" => Ok(Variant::Diamond),
            _ => Err(ModelError::UnknownVariant(String::from(s))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ModelError {
    UnknownModel(String),
    UnknownVariant(String),
    /// Levels must be strictly increasing and positive.
    InvalidLevels,
    /// Variant does not apply to the model.
    VariantMismatch,
    Graph(GraphError),
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::UnknownModel(s) => write!(f, "unknown model `{s}`"),
            ModelError::UnknownVariant(s) => write!(f, "unknown variant `{s}`"),
            ModelError::InvalidLevels => write!(f, "levels must be positive and strictly increasing"),
            ModelError::VariantMismatch => write!(f, "variant does not apply to this model"),
            ModelError::Graph(e) => write!(f, "{e}"),
        }
    }
}

impl From<GraphError> for ModelError {
    fn from(e: GraphError) -> Self {
        ModelError::Graph(e)
    }
}

/// One wired truncation.
#[derive(Clone, Debug)]
pub struct ExhaustionLevel {
    pub level: u32,
    pub graph: Graph,
    /// The single vertex all of the complement was glued into.
    pub boundary: VertexId,
    embed: BTreeMap<Coord, VertexId>,
    coords: Vec<Option<Coord>>,
}

impl ExhaustionLevel {
    /// Interior vertex for a model coordinate, if it lies in this level.
    pub fn vertex(&self, c: Coord) -> Option<VertexId> {
        self.embed.get(&c).copied()
    }

    /// Model coordinate of an interior vertex (`None` for the boundary).
    pub fn coord(&self, v: VertexId) -> Option<Coord> {
        self.coords.get(v.0).copied().flatten()
    }

    pub fn interior_count(&self) -> usize {
        self.embed.len()
    }

    pub fn interior_coords(&self) -> impl Iterator<Item = (&Coord, &VertexId)> {
        self.embed.iter()
    }
}

/// An increasing family of wired truncations of one model.
#[derive(Clone, Debug)]
pub struct Exhaustion {
    pub model: Model,
    pub variant: Variant,
    pub anchor: Coord,
    pub levels: Vec<ExhaustionLevel>,
}

impl Exhaustion {
    pub fn top(&self) -> &ExhaustionLevel {
        self.levels.last().expect("exhaustion has at least one level")
    }

    pub fn sequence_id(&self) -> String {
        let mut s = String::from(self.model.name());
        s.push('/');
        s.push_str(self.variant.name());
        s
    }

    /// Anchor vertex at a given level.
    pub fn anchor_vertex(&self, level: &ExhaustionLevel) -> VertexId {
        level
            .vertex(self.anchor)
            .expect("anchor lies in every level")
    }
}

fn resolve_variant(model: Model, variant: Variant) -> Result<Variant, ModelError> {
    match (model, variant) {
        (Model::Line, Variant::Default) => Ok(Variant::Symmetric),
        (Model::Line, v @ (Variant::Symmetric | Variant::OneSidedRight | Variant::OneSidedLeft)) => {
            Ok(v)
        }
        (Model::Grid2d | Model::Triangular, Variant::Default) => Ok(Variant::BoxShape),
        (Model::Grid2d | Model::Triangular, v @ (Variant::BoxShape | Variant::Diamond)) => Ok(v),
        (Model::CycleCalibration | Model::Comb, Variant::Default) => Ok(Variant::Default),
        _ => Err(ModelError::VariantMismatch),
    }
}

/// Builds the wired truncations of `model` at the given levels.
pub fn make_exhaustion(
    model: Model,
    variant: Variant,
    levels: &[u32],
) -> Result<Exhaustion, ModelError> {
    if levels.is_empty() || levels.windows(2).any(|w| w[0] >= w[1]) || levels[0] == 0 {
        return Err(ModelError::InvalidLevels);
    }
    let variant = resolve_variant(model, variant)?;
    if model == Model::CycleCalibration && levels[0] < 3 {
        return Err(ModelError::InvalidLevels);
    }
    let mut built = Vec::with_capacity(levels.len());
    for &n in levels {
        built.push(build_level(model, variant, n)?);
    }
    Ok(Exhaustion {
        model,
        variant,
        anchor: (0, 0),
        levels: built,
    })
}

/// Interior coordinates plus the edges of one truncation. Edges with one
/// endpoint outside the interior become boundary edges.
fn assemble(
    level: u32,
    coords: Vec<Coord>,
    adjacent: impl Fn(Coord) -> Vec<Coord>,
    inside: impl Fn(Coord) -> bool,
    wire_outside: impl Fn(Coord, Coord) -> bool,
) -> Result<ExhaustionLevel, ModelError> {
    let mut embed = BTreeMap::new();
    for (i, &c) in coords.iter().enumerate() {
        embed.insert(c, VertexId(i));
    }
    let boundary = VertexId(coords.len());
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    for &c in &coords {
        let u = embed[&c];
        for d in adjacent(c) {
            if inside(d) {
                // interior edge, add once
                let v = embed[&d];
                if u.0 < v.0 {
                    edges.push((u.0, v.0, 1.0));
                }
            } else if wire_outside(c, d) {
                edges.push((u.0, boundary.0, 1.0));
            }
        }
    }
    let graph = Graph::build(coords.len() + 1, &edges)?;
    let mut coord_of = Vec::with_capacity(coords.len() + 1);
    for &c in &coords {
        coord_of.push(Some(c));
    }
    coord_of.push(None);
    Ok(ExhaustionLevel {
        level,
        graph,
        boundary,
        embed,
        coords: coord_of,
    })
}

fn build_level(model: Model, variant: Variant, n: u32) -> Result<ExhaustionLevel, ModelError> {
    let n_i = n as i64;
    match (model, variant) {
        (Model::Line, Variant::Symmetric) => {
            let coords: Vec<Coord> = (-n_i..=n_i).map(|k| (k, 0)).collect();
            assemble(
                n,
                coords,
                |c| alloc::vec![(c.0 - 1, 0), (c.0 + 1, 0)],
                move |c| c.0.abs() <= n_i,
                |_, _| true,
            )
        }
        (Model::Line, Variant::OneSidedRight | Variant::OneSidedLeft) => {
            let sign = if variant == Variant::OneSidedRight { 1 } else { -1 };
            let far = n_i * n_i;
            // interior runs from -far to n (for the right-sided variant);
            // only the near end is wired, the far end is simply cut.
            let lo = -far;
            let hi = n_i;
            let coords: Vec<Coord> = (lo..=hi).map(|k| (sign * k, 0)).collect();
            assemble(
                n,
                coords,
                |c| alloc::vec![(c.0 - 1, 0), (c.0 + 1, 0)],
                move |c| {
                    let k = sign * c.0;
                    (lo..=hi).contains(&k)
                },
                move |_, d| sign * d.0 > hi,
            )
        }
        (Model::CycleCalibration, _) => {
            // a plain cycle on n vertices; the closing vertex is the root.
            let coords: Vec<Coord> = (0..n_i - 1).map(|k| (k, 0)).collect();
            let last = n_i - 2;
            assemble(
                n,
                coords,
                move |c| {
                    if c.0 == 0 {
                        alloc::vec![(1, 0), (-1, 0)]
                    } else {
                        alloc::vec![(c.0 - 1, 0), (c.0 + 1, 0)]
                    }
                },
                move |c| (0..=last).contains(&c.0),
                |_, _| true,
            )
        }
        (Model::Grid2d, shape @ (Variant::BoxShape | Variant::Diamond)) => {
            let inside = move |c: Coord| match shape {
                Variant::BoxShape => c.0.abs() <= n_i && c.1.abs() <= n_i,
                _ => c.0.abs() + c.1.abs() <= n_i,
            };
            let mut coords = Vec::new();
            for x in -n_i..=n_i {
                for y in -n_i..=n_i {
                    if inside((x, y)) {
                        coords.push((x, y));
                    }
                }
            }
            assemble(n, coords, grid_neighbors, inside, |_, _| true)
        }
        (Model::Triangular, shape @ (Variant::BoxShape | Variant::Diamond)) => {
            let inside = move |c: Coord| match shape {
                Variant::BoxShape => c.0.abs() <= n_i && c.1.abs() <= n_i,
                _ => c.0.abs() + c.1.abs() <= n_i,
            };
            let mut coords = Vec::new();
            for x in -n_i..=n_i {
                for y in -n_i..=n_i {
                    if inside((x, y)) {
                        coords.push((x, y));
                    }
                }
            }
            assemble(n, coords, triangular_neighbors, inside, |_, _| true)
        }
        (Model::Comb, _) => {
            let inside = move |c: Coord| c.0.abs() <= n_i && (0..=n_i).contains(&c.1);
            let mut coords = Vec::new();
            for x in -n_i..=n_i {
                for y in 0..=n_i {
                    coords.push((x, y));
                }
            }
            assemble(n, coords, comb_neighbors, inside, |_, _| true)
        }
        _ => Err(ModelError::VariantMismatch),
    }
}

fn grid_neighbors(c: Coord) -> Vec<Coord> {
    alloc::vec![
        (c.0 - 1, c.1),
        (c.0 + 1, c.1),
        (c.0, c.1 - 1),
        (c.0, c.1 + 1),
    ]
}

fn triangular_neighbors(c: Coord) -> Vec<Coord> {
    alloc::vec![
        (c.0 - 1, c.1),
        (c.0 + 1, c.1),
        (c.0, c.1 - 1),
        (c.0, c.1 + 1),
        (c.0 + 1, c.1 + 1),
        (c.0 - 1, c.1 - 1),
    ]
}

fn comb_neighbors(c: Coord) -> Vec<Coord> {
    // horizontal movement only along the spine y = 0; nothing below it
    if c.1 == 0 {
        alloc::vec![(c.0 - 1, 0), (c.0 + 1, 0), (c.0, 1)]
    } else {
        alloc::vec![(c.0, c.1 - 1), (c.0, c.1 + 1)]
    }
}
