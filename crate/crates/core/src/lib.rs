//! Articulation axis estimation from sequences of part-segmented point clouds.
//!
//! Given the rest-state cloud of an object (static and dynamic parts labeled)
//! and observed clouds of the dynamic part at intermediate articulation states,
//! recover the joint type, axis direction, axis origin and per-frame magnitude.
//!
//! Two estimators are provided:
//! - [`search`]: discrete search over the 7 origins × 6 directions derived from
//!   an oriented bounding box of the moving part, scored by chamfer distance.
//! - [`direct`]: projected gradient descent on the same chamfer objective over
//!   continuous axis parameters.
//!
//! [`synth`] generates articulated objects with known ground truth and
//! degrades them; [`metrics`] scores estimates against that ground truth.

pub mod chamfer;
mod clock;
pub mod direct;
pub mod error;
pub mod geometry;
pub mod io;
pub mod kdtree;
pub mod metrics;
pub mod obb;
mod par;
pub mod report;
pub mod rng;
pub mod search;
pub mod sequence;
pub mod synth;

pub use error::{Error, Result};
