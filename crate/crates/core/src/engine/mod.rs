//! Event dispatch, global-state maintenance and inter-cell what-if
//! exploration.

mod intercell;
mod report;
mod session;

pub use intercell::{intercell, ExploreCell, ExploreOptions, Exploration};
pub use report::{dedupe, Diagnostic, Metrics, Report, TraceEntry, Warning};
pub use session::{
    EngineError, EventAnalysisMapping, Outcome, Session, SessionMetrics, WhatIfOptions,
};
