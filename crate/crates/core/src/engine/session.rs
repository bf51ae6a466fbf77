use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use super::intercell::{intercell, ExploreCell, ExploreOptions};
use super::report::{dedupe, Diagnostic, Metrics, Report, TraceEntry, Warning};
use crate::absint::{run_analyses, AbstractState, ProductState, SolveError};
use crate::analyses::variants::{fresh_cell, isolated_cell, stale_cells, CiaVariantReport};
use crate::analyses::{Abstraction, AnalysisId, CiaState, KBound, KnowledgeBase};
use crate::frontend::{parse_cell, artifacts, CellArtifacts, ParseError};
use crate::notebook::{apply_event, code_hash, Event, EventError, EventKind, Notebook};

/// The event → analyses mapping M.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EventAnalysisMapping {
    pub mapping: BTreeMap<EventKind, BTreeSet<AnalysisId>>,
}

impl Default for EventAnalysisMapping {
    /// `execute` maps to nothing, so executing a cell only maintains the
    /// global state; `whatif` runs every shipped analysis.
    fn default() -> Self {
        let all: BTreeSet<AnalysisId> = AnalysisId::ALL.into_iter().collect();
        Self { mapping: BTreeMap::from([(EventKind::Whatif, all)]) }
    }
}

impl EventAnalysisMapping {
    pub fn get(&self, kind: EventKind) -> BTreeSet<AnalysisId> {
        self.mapping.get(&kind).cloned().unwrap_or_default()
    }

    pub fn set(&mut self, kind: EventKind, analyses: impl IntoIterator<Item = AnalysisId>) {
        self.mapping.insert(kind, analyses.into_iter().collect());
    }
}

#[derive(Debug, Clone)]
struct CacheEntry {
    hash: String,
    artifacts: Result<Arc<CellArtifacts>, ParseError>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SessionMetrics {
    pub parses: u64,
    pub cache_hits: u64,
    pub maintains: u64,
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Event(#[from] EventError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// Result of one event.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Outcome {
    /// Structural change or no-op.
    Ack,
    /// Global state advanced by the executed cell.
    Maintained { cell: String, cache_hit: bool, parse_error: Option<ParseError> },
    Report(Report),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct WhatIfOptions {
    pub trace: bool,
}

/// Per-notebook analysis session: the notebook, the global abstract state
/// σ♯ and per-cell artifacts keyed by code hash.
#[derive(Debug, Clone)]
pub struct Session {
    notebook: Notebook,
    global: ProductState,
    cache: HashMap<String, CacheEntry>,
    pub mapping: EventAnalysisMapping,
    kb: Arc<KnowledgeBase>,
    metrics: SessionMetrics,
}

impl Session {
    pub fn open(notebook: Notebook, kb: Arc<KnowledgeBase>) -> Self {
        let mut s = Session {
            notebook: Notebook::new(""),
            global: ProductState::bottom(Abstraction::ALL),
            cache: HashMap::new(),
            mapping: EventAnalysisMapping::default(),
            kb,
            metrics: SessionMetrics::default(),
        };
        s.reset(notebook);
        s
    }

    fn reset(&mut self, notebook: Notebook) {
        self.notebook = notebook;
        self.global = ProductState::bottom(Abstraction::ALL);
        self.cache.clear();
        let cells: Vec<(String, String)> =
            self.notebook.cells.iter().map(|c| (c.id.clone(), c.code.clone())).collect();
        for (id, code) in cells {
            let _ = self.artifacts_for(&id, &code);
        }
    }

    pub fn notebook(&self) -> &Notebook {
        &self.notebook
    }

    pub fn global_state(&self) -> &ProductState {
        &self.global
    }

    pub fn kb(&self) -> &KnowledgeBase {
        &self.kb
    }

    pub fn set_kb(&mut self, kb: Arc<KnowledgeBase>) {
        self.kb = kb;
    }

    pub fn metrics(&self) -> SessionMetrics {
        self.metrics
    }

    /// Cached artifacts of a cell, if it parses.
    pub fn cell_artifacts(&self, id: &str) -> Option<&CellArtifacts> {
        let cell = self.notebook.cell(id)?;
        let entry = self.cache.get(id)?;
        match &entry.artifacts {
            Ok(a) if entry.hash == cell.code_hash => Some(a),
            _ => None,
        }
    }

    /// Looks up or rebuilds a cell's artifacts, counting parses and hits.
    fn artifacts_for(&mut self, id: &str, code: &str) -> (Result<Arc<CellArtifacts>, ParseError>, bool) {
        let hash = code_hash(code);
        if let Some(entry) = self.cache.get(id) {
            if entry.hash == hash {
                self.metrics.cache_hits += 1;
                return (entry.artifacts.clone(), true);
            }
        }
        self.metrics.parses += 1;
        let result = parse_cell(code).map(|ast| Arc::new(artifacts(ast)));
        match &result {
            Ok(_) => {
                self.cache.insert(id.to_string(), CacheEntry { hash, artifacts: result.clone() });
            }
            Err(_) => {
                self.cache.remove(id);
            }
        }
        (result, false)
    }

    /// Structural events update the notebook, `execute` maintains
    /// the global state when M(execute) is empty, and everything with
    /// attached analyses runs a what-if from the event's cell.
    pub fn handle_event(
        &mut self,
        event: &Event,
        analyses: Option<&BTreeSet<AnalysisId>>,
        k: Option<KBound>,
        opts: WhatIfOptions,
    ) -> Result<Outcome, EngineError> {
        let mut cell_id = event.cell_id.clone().unwrap_or_default();
        match event.kind {
            EventKind::Open => {
                let nb = self.notebook.clone();
                self.reset(nb);
                return Ok(Outcome::Ack);
            }
            EventKind::Create | EventKind::Delete | EventKind::Edit => {
                let next = apply_event(&self.notebook, event)?;
                self.notebook = next;
                let live: BTreeSet<&str> = self.notebook.cells.iter().map(|c| c.id.as_str()).collect();
                self.cache.retain(|id, _| live.contains(id.as_str()));
                if event.kind != EventKind::Delete {
                    if let Some(id) = event.cell_id.clone().or_else(|| self.created_id(event)) {
                        let code = self.notebook.cell(&id).map(|c| c.code.clone()).unwrap_or_default();
                        let _ = self.artifacts_for(&id, &code);
                        cell_id = id;
                    }
                }
            }
            EventKind::Execute | EventKind::Whatif => {
                apply_event(&self.notebook, event)?;
            }
        }

        let attached = match analyses {
            Some(a) if event.kind == EventKind::Whatif => a.clone(),
            _ => self.mapping.get(event.kind),
        };
        if event.kind == EventKind::Execute && attached.is_empty() {
            let code = match &event.code {
                Some(code) => code.clone(),
                None => self.notebook.cell(&cell_id).map(|c| c.code.clone()).unwrap_or_default(),
            };
            return self.maintain(&cell_id, &code);
        }
        if attached.is_empty() || event.kind == EventKind::Delete {
            return Ok(Outcome::Ack);
        }
        Ok(Outcome::Report(self.whatif(&cell_id, &attached, k, opts)?))
    }

    fn created_id(&self, event: &Event) -> Option<String> {
        let pos = event.position.unwrap_or(self.notebook.cells.len());
        self.notebook.cells.get(pos.checked_sub(1)?).map(|c| c.id.clone())
    }

    /// Rebuilds artifacts only when the code changed, then advances
    /// σ♯ by the cell transformer of every registered analysis. A syntax
    /// error clears the cell's cache and leaves σ♯ unchanged.
    pub fn maintain(&mut self, cell_id: &str, code: &str) -> Result<Outcome, EngineError> {
        let idx = self
            .notebook
            .index_of(cell_id)
            .ok_or_else(|| EventError::UnknownCell(cell_id.to_string()))?;
        if self.notebook.cells[idx].code != code {
            let edit = Event::on(EventKind::Edit, cell_id).with_code(code);
            self.notebook = apply_event(&self.notebook, &edit)?;
        }
        self.metrics.maintains += 1;
        let (result, cache_hit) = self.artifacts_for(cell_id, code);
        match result {
            Ok(art) => {
                let all: BTreeSet<Abstraction> = Abstraction::ALL.into_iter().collect();
                self.global = run_analyses(&art.cfg, &self.global, &all, &self.kb)?;
                Ok(Outcome::Maintained { cell: cell_id.to_string(), cache_hit, parse_error: None })
            }
            Err(e) => Ok(Outcome::Maintained { cell: cell_id.to_string(), cache_hit, parse_error: Some(e) }),
        }
    }

    fn explore_cells(&self) -> Vec<ExploreCell<'_>> {
        self.notebook
            .cells
            .iter()
            .filter_map(|c| self.cell_artifacts(&c.id).map(|a| ExploreCell { id: &c.id, artifacts: a }))
            .collect()
    }

    /// What-if exploration from `source`. Analyses sharing an effective K
    /// share one exploration; `k` overrides every analysis's default.
    pub fn whatif(
        &self,
        source: &str,
        analyses: &BTreeSet<AnalysisId>,
        k: Option<KBound>,
        opts: WhatIfOptions,
    ) -> Result<Report, EngineError> {
        let cell = self.notebook.cell(source).ok_or_else(|| EventError::UnknownCell(source.to_string()))?;
        let mut report = Report::empty(source);
        if let Some(e) = &cell.parse_error {
            report.diagnostics.push(Diagnostic {
                cell: source.to_string(),
                line: e.line,
                column: e.column,
                message: e.message.clone(),
            });
            return Ok(report);
        }

        let cells = self.explore_cells();
        let Some(src_idx) = cells.iter().position(|c| c.id == source) else {
            return Ok(report);
        };

        let mut groups: BTreeMap<KBound, BTreeSet<AnalysisId>> = BTreeMap::new();
        for a in analyses {
            groups.entry(k.unwrap_or(a.descriptor().default_k)).or_default().insert(*a);
        }

        let mut warnings = Vec::new();
        let mut trace: Vec<TraceEntry> = Vec::new();
        let mut metrics = Metrics::default();
        for (group_k, ids) in groups {
            let abstractions: BTreeSet<Abstraction> = ids.iter().map(|a| a.descriptor().abstraction).collect();
            let init = self.seed(&cells[src_idx]);
            let ex = intercell(
                &cells,
                &self.kb,
                src_idx,
                &init.restrict(&abstractions),
                group_k,
                &abstractions,
                ExploreOptions { trace: opts.trace, ..Default::default() },
            )?;
            metrics.absorb(&ex.metrics);
            trace.extend(ex.trace);
            for id in ids {
                match id {
                    AnalysisId::DataLeakage => warnings.extend(ex.leak_warnings.iter().cloned()),
                    AnalysisId::Stale => {
                        let found = stale_cells(source, &ex.cia_nodes);
                        warnings.extend(found.into_iter().map(|f| self.variant_warning(id, source, f)));
                    }
                    AnalysisId::Fresh => {
                        let found = fresh_cell(source, &ex.cia_nodes);
                        warnings.extend(found.map(|f| self.variant_warning(id, source, f)));
                    }
                    AnalysisId::Isolated => {
                        let found = isolated_cell(
                            source,
                            &ex.cia_source_successors,
                            cells.iter().map(|c| (c.id, &c.artifacts.def_use, &c.artifacts.pre)),
                        );
                        warnings.extend(found.map(|f| self.variant_warning(id, source, f)));
                    }
                }
            }
        }
        report.warnings = dedupe(warnings);
        report.metrics = metrics;
        if opts.trace {
            report.trace = Some(trace);
        }
        Ok(report)
    }

    /// Initial state of a what-if: σ♯ with everything the source defines
    /// marked as changed for code impact.
    fn seed(&self, source: &ExploreCell<'_>) -> ProductState {
        let mut init = self.global.clone();
        let mut cia = init.get(Abstraction::CodeImpact).as_cia().cloned().unwrap_or_default();
        cia.changed.extend(source.artifacts.def_use.defs.iter().cloned());
        init.set(AbstractState::CodeImpact(CiaState { changed: cia.changed }));
        init
    }

    fn variant_warning(&self, id: AnalysisId, source: &str, f: CiaVariantReport) -> Warning {
        let line = self.cell_artifacts(&f.cell).and_then(|a| {
            a.ud.chains
                .iter()
                .filter(|c| c.may_be_unbound() && f.vars.contains(&c.var))
                .map(|c| c.line)
                .min()
        });
        Warning {
            analysis: id,
            source_cell: source.to_string(),
            path: f.path,
            cell: f.cell,
            message: f.message,
            line,
            identity: id.as_str().to_string(),
        }
    }
}
