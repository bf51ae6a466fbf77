//! Session service, batch runner and wire protocol for the notebook
//! what-if engine.

pub mod batch;
pub mod protocol;
pub mod sarif;
pub mod service;
pub mod transport;

pub use protocol::{WireEvent, WireReport, WireResponse, PROTOCOL_VERSION};
pub use service::Service;
