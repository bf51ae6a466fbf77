//! JSON wire format shared by the stdio and HTTP transports.
//!
//! Version 1. Requests are [`WireEvent`]s, one JSON object per line on
//! stdio or per POST body over HTTP. Every request gets one
//! [`WireResponse`].

use nbprobe_core::analyses::{AnalysisId, KBound};
use nbprobe_core::engine::{Diagnostic, Metrics, Report, Warning};
use nbprobe_core::notebook::{Event, EventKind};
use serde::{Deserialize, Serialize};

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireEvent {
    /// Protocol version the client speaks; absent means the current one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<u32>,
    pub session: String,
    pub event: EventKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cell_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub code: Option<String>,
    /// 1-based insertion position for `create`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<usize>,
    /// Only on `whatif`; other events use the session's event mapping.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analyses: Option<Vec<AnalysisId>>,
    /// A non-negative integer or `"inf"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<KBound>,
    /// Only on `open`: initial cell sources, labelled "1", "2", ...
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cells: Option<Vec<String>>,
    /// Only on `open`: an nbformat 4 document; takes precedence over `cells`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notebook: Option<serde_json::Value>,
    /// Include per-node states in the report.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub trace: bool,
}

impl WireEvent {
    pub fn new(session: impl Into<String>, event: EventKind) -> Self {
        WireEvent {
            v: None,
            session: session.into(),
            event,
            cell_id: None,
            code: None,
            position: None,
            analyses: None,
            k: None,
            cells: None,
            notebook: None,
            trace: false,
        }
    }

    pub fn cell(mut self, id: impl Into<String>) -> Self {
        self.cell_id = Some(id.into());
        self
    }

    pub fn code(mut self, code: impl Into<String>) -> Self {
        self.code = Some(code.into());
        self
    }

    pub fn analyses(mut self, ids: impl IntoIterator<Item = AnalysisId>) -> Self {
        self.analyses = Some(ids.into_iter().collect());
        self
    }

    pub fn k(mut self, k: KBound) -> Self {
        self.k = Some(k);
        self
    }

    pub fn cells<S: Into<String>>(mut self, cells: impl IntoIterator<Item = S>) -> Self {
        self.cells = Some(cells.into_iter().map(Into::into).collect());
        self
    }

    pub fn to_engine(&self) -> Event {
        Event { kind: self.event, cell_id: self.cell_id.clone(), code: self.code.clone(), position: self.position }
    }
}

/// What-if result as sent to clients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireReport {
    pub source_cell: String,
    pub warnings: Vec<WireWarning>,
    pub diagnostics: Vec<WireDiagnostic>,
    pub metrics: WireMetrics,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<serde_json::Value>,
    /// Engine time only, transport excluded.
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireWarning {
    pub analysis: AnalysisId,
    pub source_cell: String,
    pub path: Vec<String>,
    pub cell: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireDiagnostic {
    pub cell: String,
    pub line: u32,
    pub column: u32,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WireMetrics {
    pub nodes_explored: u64,
    pub subsumption_prunes: u64,
    pub max_depth: u32,
    pub k_limit_hits: u64,
    pub phi_evaluations: u64,
    pub phi_successes: u64,
    pub propagation_rate: f64,
}

impl From<&Warning> for WireWarning {
    fn from(w: &Warning) -> Self {
        WireWarning {
            analysis: w.analysis,
            source_cell: w.source_cell.clone(),
            path: w.path.clone(),
            cell: w.cell.clone(),
            message: w.message.clone(),
            line: w.line,
        }
    }
}

impl From<&Diagnostic> for WireDiagnostic {
    fn from(d: &Diagnostic) -> Self {
        WireDiagnostic { cell: d.cell.clone(), line: d.line, column: d.column, message: d.message.clone() }
    }
}

impl From<&Metrics> for WireMetrics {
    fn from(m: &Metrics) -> Self {
        WireMetrics {
            nodes_explored: m.nodes_explored,
            subsumption_prunes: m.subsumption_prunes,
            max_depth: m.max_depth,
            k_limit_hits: m.k_limit_hits,
            phi_evaluations: m.phi_evaluations,
            phi_successes: m.phi_successes,
            propagation_rate: m.propagation_rate,
        }
    }
}

impl WireReport {
    pub fn new(report: &Report, elapsed_ms: f64) -> Self {
        WireReport {
            source_cell: report.source_cell.clone(),
            warnings: report.warnings.iter().map(WireWarning::from).collect(),
            diagnostics: report.diagnostics.iter().map(WireDiagnostic::from).collect(),
            metrics: WireMetrics::from(&report.metrics),
            trace: report.trace.as_ref().map(|t| serde_json::to_value(t).expect("trace serializes")),
            elapsed_ms,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireError {
    pub code: ErrorCode,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    Malformed,
    UnsupportedVersion,
    UnknownSession,
    InvalidEvent,
    Engine,
}

/// Reply to one event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum WireResponse {
    Ack {
        v: u32,
        session: String,
        event: EventKind,
        /// Present for `execute`: the maintenance outcome and cache counters.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        maintenance: Option<Maintenance>,
        elapsed_ms: f64,
    },
    Report {
        v: u32,
        session: String,
        event: EventKind,
        report: WireReport,
    },
    Error {
        v: u32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        session: Option<String>,
        error: WireError,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Maintenance {
    pub cell: String,
    pub cache_hit: bool,
    /// Set when the cell does not parse; the global state is then unchanged.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parse_error: Option<WireDiagnostic>,
    pub parses: u64,
    pub cache_hits: u64,
    pub maintains: u64,
}

impl WireResponse {
    pub fn error(session: Option<String>, code: ErrorCode, message: impl Into<String>) -> Self {
        WireResponse::Error { v: PROTOCOL_VERSION, session, error: WireError { code, message: message.into() } }
    }

    pub fn is_error(&self) -> bool {
        matches!(self, WireResponse::Error { .. })
    }

    pub fn report(&self) -> Option<&WireReport> {
        match self {
            WireResponse::Report { report, .. } => Some(report),
            _ => None,
        }
    }

    /// The same response with every `elapsed_ms` zeroed, for comparing runs.
    pub fn without_timing(&self) -> Self {
        let mut r = self.clone();
        match &mut r {
            WireResponse::Ack { elapsed_ms, .. } => *elapsed_ms = 0.0,
            WireResponse::Report { report, .. } => report.elapsed_ms = 0.0,
            WireResponse::Error { .. } => {}
        }
        r
    }
}
