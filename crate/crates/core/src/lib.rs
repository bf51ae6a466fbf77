//! What-if static analysis for data-science notebooks.
//!
//! Cells are parsed into name-level control-flow graphs, analyzed with
//! abstract interpretation, and explored across hypothetical execution
//! orders to find stale state, isolated cells and ML data leakage before the
//! cells run.

pub mod absint;
pub mod analyses;
pub mod engine;
pub mod frontend;
pub mod notebook;
pub mod stats;
