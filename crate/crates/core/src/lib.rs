//! Modified ReLU networks: hidden weight matrices pass through a piecewise
//! linear sparsifier before multiplying the layer input, which turns plain
//! convex weight penalties (l1 / squared l2) into sparsity-inducing ones.
//!
//! The crate provides the network engine, the constructive bridge between
//! sparse plain networks and modified networks, closed-form calculators for
//! the class-complexity bounds, penalized proximal-gradient training,
//! certified synthetic regression targets, and a seeded rate-study driver.

pub mod bounds;
pub mod bridge;
pub mod data;
mod error;
pub mod net;
pub mod quadrature;
pub mod seeds;
pub mod study;
pub mod train;

pub use error::{Error, Result};
