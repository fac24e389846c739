//! Physics drivers and analytical reference solutions.

pub mod benchmark;
pub mod common;
pub mod convergence;
pub mod flow;
pub mod mandel;
pub mod poromech;
pub mod sneddon;
pub mod transport;
