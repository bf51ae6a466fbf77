//! Corpus runs: what-if sweeps over a directory of notebooks and the
//! corpus characteristics table.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use nbprobe_core::analyses::{AnalysisId, KBound, KnowledgeBase};
use nbprobe_core::engine::{Report, Session, WhatIfOptions};
use nbprobe_core::notebook::{ingest_ipynb, Notebook};
use nbprobe_core::stats::{characteristics, CharacteristicsTable, NotebookCharacteristics};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BatchError {
    #[error("cannot list {path}: {source}")]
    Dir { path: String, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: String, source: std::io::Error },
    #[error("notebook {path}: {message}")]
    Engine { path: String, message: String },
}

#[derive(Debug, Clone)]
pub struct BatchOptions {
    pub analyses: BTreeSet<AnalysisId>,
    /// Overrides every analysis's default K.
    pub k: Option<KBound>,
    /// Use every parse-ok cell as a source.
    pub sweep: bool,
    /// Source cell id when not sweeping; the first parse-ok cell otherwise.
    pub source: Option<String>,
}

/// Timing and exploration totals of one analysis over a set of what-ifs.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunStats {
    pub whatifs: usize,
    pub avg_ms: f64,
    pub max_ms: f64,
    pub median_ms: f64,
    pub warnings: usize,
    pub nodes_explored: u64,
    pub subsumption_prunes: u64,
    pub max_depth: u32,
    pub k_limit_hits: u64,
    pub phi_evaluations: u64,
    pub phi_successes: u64,
    /// φ successes over φ evaluations, in [0, 1].
    pub propagation_rate: f64,
}

impl RunStats {
    fn of(runs: &[&Run]) -> RunStats {
        let mut s = RunStats { whatifs: runs.len(), ..Default::default() };
        let mut times: Vec<f64> = runs.iter().map(|r| r.elapsed_ms).collect();
        times.sort_by(f64::total_cmp);
        if !times.is_empty() {
            s.avg_ms = times.iter().sum::<f64>() / times.len() as f64;
            s.max_ms = times[times.len() - 1];
            s.median_ms = median(&times);
        }
        for r in runs {
            let m = &r.report.metrics;
            s.warnings += r.report.warnings.len();
            s.nodes_explored += m.nodes_explored;
            s.subsumption_prunes += m.subsumption_prunes;
            s.max_depth = s.max_depth.max(m.max_depth);
            s.k_limit_hits += m.k_limit_hits;
            s.phi_evaluations += m.phi_evaluations;
            s.phi_successes += m.phi_successes;
        }
        if s.phi_evaluations > 0 {
            s.propagation_rate = s.phi_successes as f64 / s.phi_evaluations as f64;
        }
        s
    }
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// One what-if of one analysis from one source cell.
#[derive(Debug, Clone, Serialize)]
pub struct Run {
    pub analysis: AnalysisId,
    pub source: String,
    pub elapsed_ms: f64,
    pub report: Report,
}

#[derive(Debug, Clone, Serialize)]
pub struct NotebookResult {
    pub path: String,
    pub characteristics: NotebookCharacteristics,
    pub per_analysis: BTreeMap<AnalysisId, RunStats>,
    pub runs: Vec<Run>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Unreadable {
    pub path: String,
    pub error: String,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct CorpusStats {
    pub notebooks: usize,
    pub unreadable: Vec<Unreadable>,
    pub characteristics: CharacteristicsTable,
    pub per_analysis: BTreeMap<AnalysisId, RunStats>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct BatchOutput {
    pub stats: CorpusStats,
    pub notebooks: Vec<NotebookResult>,
}

/// `.ipynb` files directly inside `dir`, sorted by name.
pub fn notebook_paths(dir: &Path) -> Result<Vec<PathBuf>, BatchError> {
    let entries = std::fs::read_dir(dir).map_err(|source| BatchError::Dir { path: dir.display().to_string(), source })?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "ipynb"))
        .collect();
    paths.sort();
    Ok(paths)
}

fn load(path: &Path) -> Result<Notebook, String> {
    let bytes = std::fs::read(path).map_err(|e| e.to_string())?;
    let mut nb = ingest_ipynb(&bytes).map_err(|e| e.to_string())?;
    nb.session_id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Ok(nb)
}

/// Analyzes one notebook: one what-if per requested analysis and source.
pub fn analyze_notebook(
    path: &str,
    nb: Notebook,
    kb: Arc<KnowledgeBase>,
    opts: &BatchOptions,
) -> Result<NotebookResult, BatchError> {
    let chars = characteristics(&nb);
    let session = Session::open(nb, kb);
    let ok: Vec<String> = session
        .notebook()
        .cells
        .iter()
        .filter(|c| session.cell_artifacts(&c.id).is_some())
        .map(|c| c.id.clone())
        .collect();
    let sources: Vec<String> = if opts.sweep {
        ok
    } else {
        match &opts.source {
            Some(s) => vec![s.clone()],
            None => ok.into_iter().take(1).collect(),
        }
    };
    let mut runs = Vec::new();
    for source in &sources {
        for analysis in &opts.analyses {
            let start = Instant::now();
            let report = session
                .whatif(source, &BTreeSet::from([*analysis]), opts.k, WhatIfOptions::default())
                .map_err(|e| BatchError::Engine { path: path.to_string(), message: e.to_string() })?;
            let elapsed_ms = start.elapsed().as_secs_f64() * 1000.0;
            runs.push(Run { analysis: *analysis, source: source.clone(), elapsed_ms, report });
        }
    }
    let per_analysis = opts
        .analyses
        .iter()
        .map(|a| (*a, RunStats::of(&runs.iter().filter(|r| r.analysis == *a).collect::<Vec<_>>())))
        .collect();
    Ok(NotebookResult { path: path.to_string(), characteristics: chars, per_analysis, runs })
}

/// Runs the requested what-ifs over every notebook in `dir`, in parallel
/// across notebooks. Unreadable notebooks are reported and skipped.
pub fn analyze_dir(dir: &Path, kb: Arc<KnowledgeBase>, opts: &BatchOptions) -> Result<BatchOutput, BatchError> {
    let paths = notebook_paths(dir)?;
    let results: Vec<Result<NotebookResult, Unreadable>> = paths
        .par_iter()
        .map(|p| {
            let name = p.display().to_string();
            let nb = load(p).map_err(|error| Unreadable { path: name.clone(), error })?;
            analyze_notebook(&name, nb, kb.clone(), opts).map_err(|e| Unreadable { path: name, error: e.to_string() })
        })
        .collect();
    let mut out = BatchOutput::default();
    for r in results {
        match r {
            Ok(nb) => out.notebooks.push(nb),
            Err(u) => {
                eprintln!("skipping {}: {}", u.path, u.error);
                out.stats.unreadable.push(u);
            }
        }
    }
    out.stats.notebooks = out.notebooks.len();
    let rows: Vec<NotebookCharacteristics> = out.notebooks.iter().map(|n| n.characteristics.clone()).collect();
    out.stats.characteristics = CharacteristicsTable::of(&rows);
    let all_runs: Vec<&Run> = out.notebooks.iter().flat_map(|n| &n.runs).collect();
    out.stats.per_analysis = opts
        .analyses
        .iter()
        .map(|a| (*a, RunStats::of(&all_runs.iter().copied().filter(|r| r.analysis == *a).collect::<Vec<_>>())))
        .collect();
    Ok(out)
}

/// Corpus characteristics only.
pub fn stats_dir(dir: &Path) -> Result<(CharacteristicsTable, Vec<Unreadable>), BatchError> {
    let paths = notebook_paths(dir)?;
    let loaded: Vec<Result<NotebookCharacteristics, Unreadable>> = paths
        .par_iter()
        .map(|p| {
            load(p)
                .map(|nb| characteristics(&nb))
                .map_err(|error| Unreadable { path: p.display().to_string(), error })
        })
        .collect();
    let mut rows = Vec::new();
    let mut bad = Vec::new();
    for r in loaded {
        match r {
            Ok(c) => rows.push(c),
            Err(u) => {
                eprintln!("skipping {}: {}", u.path, u.error);
                bad.push(u);
            }
        }
    }
    Ok((CharacteristicsTable::of(&rows), bad))
}

/// Writes `<stem>.report.json` per notebook and `stats.json` into `out`.
pub fn write_reports(out: &Path, batch: &BatchOutput) -> Result<(), BatchError> {
    let werr = |p: &Path| {
        let path = p.display().to_string();
        move |source| BatchError::Write { path, source }
    };
    std::fs::create_dir_all(out).map_err(werr(out))?;
    for nb in &batch.notebooks {
        let stem = Path::new(&nb.path).file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let file = out.join(format!("{stem}.report.json"));
        let text = serde_json::to_string_pretty(nb).expect("results serialize");
        std::fs::write(&file, text).map_err(werr(&file))?;
    }
    let file = out.join("stats.json");
    let text = serde_json::to_string_pretty(&batch.stats).expect("stats serialize");
    std::fs::write(&file, text).map_err(werr(&file))
}

/// Plain-text table of the eight characteristics.
pub fn render_table(table: &CharacteristicsTable) -> String {
    let mut s = format!("{} notebooks\n{:<28}{:>10}{:>10}{:>10}{:>10}\n", table.notebooks, "", "Mean", "SD", "Max", "Min");
    for (label, v) in table.rows() {
        s.push_str(&format!("{label:<28}{:>10.2}{:>10.2}{:>10.2}{:>10.2}\n", v.mean, v.sd, v.max, v.min));
    }
    s
}
