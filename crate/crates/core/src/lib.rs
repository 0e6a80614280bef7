//! Recognition of second-order ODE fields hidden behind an involutive
//! distribution, with the associated connections, curvature tests, and a
//! numerical construction of normalizing coordinates.

pub mod expr;
pub mod par;
pub mod sampling;
pub mod geometry;
pub mod analysis;
pub mod straighten;
pub mod cli;
