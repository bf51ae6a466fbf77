//! Test support: fixed notebooks, random cell and notebook generators, and
//! reference oracles written without the analysis crate.

pub mod cells;
pub mod corpus;
pub mod fixtures;
pub mod ipynb;
pub mod notebooks;

pub use fixtures::LEAKY_PIPELINE;
