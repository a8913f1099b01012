//! Crystal distance functions and the uniqueness / novelty metrics built on
//! them, for evaluating sets of generated inorganic crystals.
//!
//! Five distances are provided:
//!
//! | distance  | kind       | depends on              |
//! |-----------|------------|-------------------------|
//! | `smat`    | discrete   | composition + structure |
//! | `comp`    | discrete   | composition             |
//! | `wyckoff` | discrete   | symmetry labels         |
//! | `magpie`  | continuous | composition             |
//! | `amd`     | continuous | structure               |
//!
//! Discrete distances feed the order-dependent "first occurrence" uniqueness
//! and the all-different novelty; continuous distances feed the mean pairwise
//! uniqueness and the mean nearest-training-neighbour novelty. See
//! [`metrics`] for aggregation, screening, shuffle audits and Pareto fronts.

pub mod amd;
pub mod cache;
pub mod composition;
pub mod element;
mod error;
pub mod matcher;
pub mod metrics;
pub mod structures;
pub mod symmetry;

pub use error::{Error, Result};
