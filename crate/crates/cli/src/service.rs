//! Long-lived analysis service: one engine session per notebook.

use std::collections::{BTreeSet, HashMap};
use std::sync::{Arc, Mutex, PoisonError};
use std::time::Instant;

use nbprobe_core::analyses::KnowledgeBase;
use nbprobe_core::engine::{EngineError, Outcome, Session, WhatIfOptions};
use nbprobe_core::notebook::{ingest_ipynb, EventKind, Notebook};

use crate::protocol::{ErrorCode, Maintenance, WireDiagnostic, WireEvent, WireReport, WireResponse, PROTOCOL_VERSION};

/// Sessions are independent; events of one session are handled one at a
/// time.
pub struct Service {
    kb: Arc<KnowledgeBase>,
    sessions: Mutex<HashMap<String, Arc<Mutex<Session>>>>,
}

impl Service {
    pub fn new(kb: KnowledgeBase) -> Self {
        Service { kb: Arc::new(kb), sessions: Mutex::new(HashMap::new()) }
    }

    pub fn session_count(&self) -> usize {
        self.sessions.lock().unwrap_or_else(PoisonError::into_inner).len()
    }

    /// Handles one JSON-encoded event and returns the JSON reply.
    pub fn handle_json(&self, line: &str) -> String {
        let response = match serde_json::from_str::<WireEvent>(line) {
            Ok(event) => self.handle(&event),
            Err(e) => WireResponse::error(None, ErrorCode::Malformed, e.to_string()),
        };
        serde_json::to_string(&response).expect("responses serialize")
    }

    pub fn handle(&self, event: &WireEvent) -> WireResponse {
        let session = Some(event.session.clone());
        if let Some(v) = event.v {
            if v != PROTOCOL_VERSION {
                let msg = format!("protocol version {v} is not supported (expected {PROTOCOL_VERSION})");
                return WireResponse::error(session, ErrorCode::UnsupportedVersion, msg);
            }
        }
        if event.analyses.is_some() && event.event != EventKind::Whatif {
            return WireResponse::error(session, ErrorCode::InvalidEvent, "analyses are accepted only on whatif");
        }
        if event.event != EventKind::Open && (event.cells.is_some() || event.notebook.is_some()) {
            return WireResponse::error(session, ErrorCode::InvalidEvent, "cells and notebook are accepted only on open");
        }
        if event.event == EventKind::Open {
            if let Some(reply) = self.open(event) {
                return reply;
            }
        }

        let Some(handle) = self.sessions.lock().unwrap_or_else(PoisonError::into_inner).get(&event.session).cloned()
        else {
            return WireResponse::error(session, ErrorCode::UnknownSession, "unknown session");
        };
        let mut s = handle.lock().unwrap_or_else(PoisonError::into_inner);
        let analyses: Option<BTreeSet<_>> = event.analyses.as_ref().map(|a| a.iter().copied().collect());
        let start = Instant::now();
        let outcome = s.handle_event(&event.to_engine(), analyses.as_ref(), event.k, WhatIfOptions { trace: event.trace });
        let elapsed_ms = start.elapsed().as_secs_f64() * 1000.0;
        match outcome {
            Ok(Outcome::Ack) => WireResponse::Ack {
                v: PROTOCOL_VERSION,
                session: event.session.clone(),
                event: event.event,
                maintenance: None,
                elapsed_ms,
            },
            Ok(Outcome::Maintained { cell, cache_hit, parse_error }) => {
                let m = s.metrics();
                let parse_error = parse_error.map(|e| WireDiagnostic {
                    cell: cell.clone(),
                    line: e.line,
                    column: e.column,
                    message: e.message,
                });
                WireResponse::Ack {
                    v: PROTOCOL_VERSION,
                    session: event.session.clone(),
                    event: event.event,
                    maintenance: Some(Maintenance {
                        cell,
                        cache_hit,
                        parse_error,
                        parses: m.parses,
                        cache_hits: m.cache_hits,
                        maintains: m.maintains,
                    }),
                    elapsed_ms,
                }
            }
            Ok(Outcome::Report(report)) => WireResponse::Report {
                v: PROTOCOL_VERSION,
                session: event.session.clone(),
                event: event.event,
                report: WireReport::new(&report, elapsed_ms),
            },
            Err(EngineError::Event(e)) => WireResponse::error(session, ErrorCode::InvalidEvent, e.to_string()),
            Err(e) => WireResponse::error(session, ErrorCode::Engine, e.to_string()),
        }
    }

    /// Creates or replaces a session when `open` carries content. Returns a
    /// reply when the event is fully handled here.
    fn open(&self, event: &WireEvent) -> Option<WireResponse> {
        let notebook = match (&event.notebook, &event.cells) {
            (Some(doc), _) => {
                let bytes = serde_json::to_vec(doc).expect("values serialize");
                match ingest_ipynb(&bytes) {
                    Ok(mut nb) => {
                        nb.session_id = event.session.clone();
                        nb
                    }
                    Err(e) => {
                        return Some(WireResponse::error(Some(event.session.clone()), ErrorCode::InvalidEvent, e.to_string()))
                    }
                }
            }
            (None, Some(cells)) => Notebook::from_sources(event.session.clone(), cells.iter().cloned()),
            (None, None) => {
                let mut sessions = self.sessions.lock().unwrap_or_else(PoisonError::into_inner);
                if sessions.contains_key(&event.session) {
                    return None;
                }
                let session = Session::open(Notebook::new(event.session.clone()), self.kb.clone());
                sessions.insert(event.session.clone(), Arc::new(Mutex::new(session)));
                return None;
            }
        };
        let start = Instant::now();
        let session = Session::open(notebook, self.kb.clone());
        let elapsed_ms = start.elapsed().as_secs_f64() * 1000.0;
        self.sessions
            .lock()
            .unwrap_or_else(PoisonError::into_inner)
            .insert(event.session.clone(), Arc::new(Mutex::new(session)));
        Some(WireResponse::Ack {
            v: PROTOCOL_VERSION,
            session: event.session.clone(),
            event: EventKind::Open,
            maintenance: None,
            elapsed_ms,
        })
    }
}
