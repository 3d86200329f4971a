//! Discrete potential theory on finite truncations of recurrent weighted graphs.
//!
//! The crate works with finite weighted multigraphs, usually *wired
//! truncations* of an infinite lattice model: a finite piece of the model
//! together with one extra vertex standing in for everything outside.
//! On top of that it provides
//!
//! * exact-to-tolerance Dirichlet solvers, Green functions, hitting
//!   probabilities, exit measures and effective resistances ([`dirichlet`]),
//! * truncated potential kernels `a_n(x, y)` over exhaustions, limit and
//!   sequence-dependence diagnostics, harmonic measure from infinity via the
//!   gluing construction, and kernel sublevel sets ([`kernel`]),
//! * the walk conditioned to avoid a vertex forever (Doob transform by the
//!   potential kernel), both as a sampler and through its closed-form Green
//!   function and hitting probabilities ([`crw`]),
//! * loop erasure, Wilson's algorithm on wired graphs and rooted at
//!   infinity, oriented-tree queries and one-endedness diagnostics ([`ust`]),
//! * elliptic and anchored Harnack ratio measurements over resistance hulls
//!   and kernel sublevel sets ([`harnack`]).
//!
//! Everything is deterministic: random-walk samplers take explicit seeded
//! ChaCha streams, and all linear algebra is either dense factorization or
//! conjugate gradients with fixed iteration order.
//!
//! The crate is `no_std` (with `alloc`); IO, file formats and the command
//! line live in the companion `potential-cli` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod crw;
pub mod dirichlet;
pub mod field;
pub mod graph;
pub mod harnack;
pub mod kernel;
pub mod linalg;
pub mod models;
pub mod rng;
pub mod ust;

pub use field::{HarmonicField, ProbabilityTable};
pub use graph::{Graph, QuotientMap, VertexId};
pub use models::{Exhaustion, ExhaustionLevel, Model, Variant};
