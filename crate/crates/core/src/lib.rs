//! Symmetry detection and lifted MAP inference for binary factored
//! exponential families.

pub mod fixtures;
pub mod lift;
pub mod mln;
pub mod model;
pub mod oracle;
pub mod pipeline;
pub mod solve;
pub mod symmetry;

pub use pipeline::Error;
