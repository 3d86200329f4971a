//! Vertex-indexed value containers shared by all solvers.

use alloc::vec::Vec;
use core::ops::Index;

use crate::graph::{Graph, VertexId};

/// A real-valued function on the vertices of one specific graph.
///
/// The `domain_tag` records which graph the values index so that fields
/// cannot silently be applied to the wrong graph.
#[derive(Clone, Debug)]
pub struct HarmonicField {
    values: Vec<f64>,
    domain_tag: u64,
}

impl HarmonicField {
    pub fn new(g: &Graph, values: Vec<f64>) -> HarmonicField {
        debug_assert_eq!(values.len(), g.vertex_count());
        HarmonicField {
            values,
            domain_tag: g.id(),
        }
    }

    pub fn constant(g: &Graph, value: f64) -> HarmonicField {
        HarmonicField {
            values: alloc::vec![value; g.vertex_count()],
            domain_tag: g.id(),
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn domain_tag(&self) -> u64 {
        self.domain_tag
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn indexes(&self, g: &Graph) -> bool {
        self.domain_tag == g.id() && self.values.len() == g.vertex_count()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl Index<VertexId> for HarmonicField {
    type Output = f64;
    #[inline]
    fn index(&self, v: VertexId) -> &f64 {
        &self.values[v.0]
    }
}

/// Normalized measure over a designated vertex subset.
///
/// Construction clamps tiny negative solver drift to zero and rescales so
/// the masses sum to one exactly; `defect` keeps the pre-normalization
/// deviation `|sum - 1|` and `clamped` the largest negative mass removed,
/// so callers can surface drift instead of hiding it.
#[derive(Clone, Debug)]
pub struct ProbabilityTable {
    support: Vec<VertexId>,
    masses: Vec<f64>,
    defect: f64,
    clamped: f64,
}

impl ProbabilityTable {
    pub fn new(support: Vec<VertexId>, raw_masses: Vec<f64>) -> ProbabilityTable {
        debug_assert_eq!(support.len(), raw_masses.len());
        let mut clamped = 0.0f64;
        let mut masses = raw_masses;
        for m in masses.iter_mut() {
            if *m < 0.0 {
                clamped = clamped.max(-*m);
                *m = 0.0;
            }
        }
        let sum: f64 = masses.iter().sum();
        let defect = (sum - 1.0).abs();
        if sum > 0.0 {
            for m in masses.iter_mut() {
                *m /= sum;
            }
        }
        ProbabilityTable {
            support,
            masses,
            defect,
            clamped,
        }
    }

    #[inline]
    pub fn support(&self) -> &[VertexId] {
        &self.support
    }

    #[inline]
    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    /// `|sum - 1|` of the raw masses before normalization.
    #[inline]
    pub fn defect(&self) -> f64 {
        self.defect
    }

    /// Largest negative raw mass clamped to zero.
    #[inline]
    pub fn clamped(&self) -> f64 {
        self.clamped
    }

    pub fn mass_at(&self, v: VertexId) -> Option<f64> {
        self.support
            .iter()
            .position(|&s| s == v)
            .map(|i| self.masses[i])
    }

    pub fn total(&self) -> f64 {
        self.masses.iter().sum()
    }
}
