//! Power-weighted travelling salesman tours on random points in the unit
//! square, with exact and constructive solvers plus Monte Carlo experiments
//! that check how tour weights scale.

pub mod bounds;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod sampling;
pub mod solvers;
pub mod verify;
pub mod weights;

pub use error::{Error, Result};
pub use geometry::{build_tiling, euclidean_distance, Point, Tiling};
pub use weights::{Exponent, WeightFunction, WeightKind, WeightSpec};
