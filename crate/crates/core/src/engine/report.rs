use std::collections::BTreeMap;

use serde::Serialize;

use crate::absint::ProductState;
use crate::analyses::AnalysisId;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Warning {
    pub analysis: AnalysisId,
    pub source_cell: String,
    /// Cells from the source to `cell`, both included.
    pub path: Vec<String>,
    pub cell: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<u32>,
    /// What was found, independent of the path that found it.
    pub identity: String,
}

impl Warning {
    pub fn key(&self) -> (AnalysisId, String, String) {
        (self.analysis, self.cell.clone(), self.identity.clone())
    }
}

/// A problem that kept part of the notebook out of the analysis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub cell: String,
    pub line: u32,
    pub column: u32,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Metrics {
    /// Explored (cell, incoming state) nodes.
    pub nodes_explored: u64,
    /// Successors skipped because that cell was already explored with the
    /// same incoming state.
    pub subsumption_prunes: u64,
    pub max_depth: u32,
    /// φ-successors not explored because K ran out.
    pub k_limit_hits: u64,
    pub phi_evaluations: u64,
    pub phi_successes: u64,
    /// `phi_successes / phi_evaluations`, 0 when nothing was evaluated.
    pub propagation_rate: f64,
}

impl Metrics {
    pub fn absorb(&mut self, other: &Metrics) {
        self.nodes_explored += other.nodes_explored;
        self.subsumption_prunes += other.subsumption_prunes;
        self.max_depth = self.max_depth.max(other.max_depth);
        self.k_limit_hits += other.k_limit_hits;
        self.phi_evaluations += other.phi_evaluations;
        self.phi_successes += other.phi_successes;
        self.finish();
    }

    pub fn finish(&mut self) {
        self.propagation_rate = if self.phi_evaluations == 0 {
            0.0
        } else {
            self.phi_successes as f64 / self.phi_evaluations as f64
        };
    }
}

/// Output state of one explored node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceEntry {
    pub path: Vec<String>,
    pub cell: String,
    pub state: ProductState,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Report {
    pub source_cell: String,
    pub warnings: Vec<Warning>,
    pub diagnostics: Vec<Diagnostic>,
    pub metrics: Metrics,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<TraceEntry>>,
}

impl Report {
    pub fn empty(source: &str) -> Self {
        Report { source_cell: source.to_string(), ..Default::default() }
    }

    pub fn warnings_for(&self, analysis: AnalysisId) -> impl Iterator<Item = &Warning> {
        self.warnings.iter().filter(move |w| w.analysis == analysis)
    }
}

/// Keeps one warning per (analysis, cell, identity), preferring the
/// shortest path and then the first one found, and orders the result by
/// analysis, path length and path.
pub fn dedupe(warnings: Vec<Warning>) -> Vec<Warning> {
    let mut best: BTreeMap<(AnalysisId, String, String), Warning> = BTreeMap::new();
    for w in warnings {
        match best.get(&w.key()) {
            Some(b) if b.path.len() <= w.path.len() => {}
            _ => {
                best.insert(w.key(), w);
            }
        }
    }
    let mut out: Vec<Warning> = best.into_values().collect();
    out.sort_by(|a, b| {
        (a.analysis, a.path.len(), &a.path, &a.identity).cmp(&(b.analysis, b.path.len(), &b.path, &b.identity))
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(cell: &str, path: &[&str], identity: &str) -> Warning {
        Warning {
            analysis: AnalysisId::DataLeakage,
            source_cell: path[0].into(),
            path: path.iter().map(|s| s.to_string()).collect(),
            cell: cell.into(),
            message: String::new(),
            line: None,
            identity: identity.into(),
        }
    }

    #[test]
    fn dedupe_keeps_shortest_path() {
        let out = dedupe(vec![
            w("5", &["1", "2", "4", "5", "4", "5"], "a"),
            w("5", &["1", "2", "4", "5"], "a"),
            w("5", &["1", "3", "4", "5"], "a"),
            w("5", &["1", "2", "4", "5"], "b"),
        ]);
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].path, ["1", "2", "4", "5"]);
        assert_eq!(out[0].identity, "a");
    }

    #[test]
    fn propagation_rate_bounds() {
        let mut m = Metrics::default();
        m.finish();
        assert_eq!(m.propagation_rate, 0.0);
        m.phi_evaluations = 4;
        m.phi_successes = 1;
        m.finish();
        assert_eq!(m.propagation_rate, 0.25);
    }
}
