//! Traffic flow fields synthesized from observed vehicle trajectories, and
//! flow-guided path generation through intersections.
//!
//! Pipeline: [`trajectory`] assembles and filters traces, [`grouping`] splits
//! them into channels by entry/exit edge and entry lane, [`field`] rasterizes
//! each channel into a density/direction grid, [`search`] finds candidate
//! paths on that grid, [`smoothing`] refines them with a box-constrained QP
//! and [`evaluation`] scores them against reference centerlines. [`synth`]
//! generates labelled intersection traffic for testing.

// `!(x > 0.0)` is how config checks reject NaN along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cluster;
pub mod error;
pub mod evaluation;
pub mod field;
pub mod geometry;
pub mod grouping;
pub mod io;
pub mod pipeline;
pub mod roi;
pub mod search;
pub mod smoothing;
pub mod synth;
pub mod trajectory;

pub use error::{Error, Result};
