//! Crossing events and maximal crossing widths for planar Poisson Boolean
//! percolation with unit discs.

// `!(x > 0.0)` style checks are meant to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arms;
pub mod conditioned;
pub mod crossing;
pub mod experiments;
pub mod error;
pub mod geometry;
pub mod parallel;
pub mod rng;
pub mod sampler;
pub mod scalar;
pub mod spatial;
pub mod stats;
pub mod union_find;
pub mod widths;

pub use error::{PercolationError, Result};
pub use geometry::Orientation;
pub use scalar::Scalar;

pub type Point = geometry::Point<f64>;
pub type Rect = geometry::Rect<f64>;
pub type PointSample = sampler::PointSample<f64>;
pub type CrossingQuery = crossing::CrossingQuery<f64>;
pub type BottleneckResult = crossing::BottleneckResult<f64>;
pub type MarkedSample = sampler::MarkedSample<f64>;
pub type WidthResult = widths::WidthResult<f64>;
pub type ScalarField = widths::ScalarField<f64>;
pub type ArmQuery = arms::ArmQuery<f64>;
