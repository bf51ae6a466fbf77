//! Corpus characteristics: per-notebook counts and mean/SD/max/min
//! summaries across notebooks.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::frontend::{analyze_cell, is_builtin};
use crate::notebook::Notebook;

/// Counts for one notebook. Per-cell averages run over parse-ok cells,
/// except LOC which covers every code cell.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct NotebookCharacteristics {
    pub cells: usize,
    pub loc_per_cell: f64,
    pub branches_per_cell: f64,
    pub functions: usize,
    pub classes: usize,
    pub non_parsing_cells: usize,
    pub variables_per_cell: f64,
    pub unbound_per_cell: f64,
}

/// Non-blank lines that are not comment-only.
pub fn loc(code: &str) -> usize {
    code.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .count()
}

fn mean(total: usize, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        total as f64 / n as f64
    }
}

pub fn characteristics(nb: &Notebook) -> NotebookCharacteristics {
    let mut c = NotebookCharacteristics { cells: nb.cells.len(), ..Default::default() };
    let total_loc: usize = nb.cells.iter().map(|cell| loc(&cell.code)).sum();
    c.loc_per_cell = mean(total_loc, nb.cells.len());

    let (mut parsed, mut branches, mut vars, mut unbound) = (0, 0, 0, 0);
    for cell in &nb.cells {
        let Ok(art) = analyze_cell(&cell.code) else {
            c.non_parsing_cells += 1;
            continue;
        };
        parsed += 1;
        branches += art.ast.counts.branches as usize;
        c.functions += art.ast.counts.functions as usize;
        c.classes += art.ast.counts.classes as usize;
        let names: BTreeSet<&String> = art
            .def_use
            .defs
            .iter()
            .chain(&art.def_use.uses)
            .filter(|v| !is_builtin(v))
            .collect();
        vars += names.len();
        unbound += art.pre.unbound.len();
    }
    c.branches_per_cell = mean(branches, parsed);
    c.variables_per_cell = mean(vars, parsed);
    c.unbound_per_cell = mean(unbound, parsed);
    c
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    /// Population standard deviation.
    pub sd: f64,
    pub max: f64,
    pub min: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Summary {
        if values.is_empty() {
            return Summary::default();
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Summary {
            mean,
            sd: var.sqrt(),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
        }
    }
}

/// The eight characteristics summarized across a corpus.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CharacteristicsTable {
    pub notebooks: usize,
    pub cells: Summary,
    pub loc_per_cell: Summary,
    pub branches_per_cell: Summary,
    pub functions: Summary,
    pub classes: Summary,
    pub non_parsing_cells: Summary,
    pub variables_per_cell: Summary,
    pub unbound_per_cell: Summary,
}

impl CharacteristicsTable {
    pub fn of(rows: &[NotebookCharacteristics]) -> Self {
        let col = |f: fn(&NotebookCharacteristics) -> f64| Summary::of(&rows.iter().map(f).collect::<Vec<_>>());
        CharacteristicsTable {
            notebooks: rows.len(),
            cells: col(|r| r.cells as f64),
            loc_per_cell: col(|r| r.loc_per_cell),
            branches_per_cell: col(|r| r.branches_per_cell),
            functions: col(|r| r.functions as f64),
            classes: col(|r| r.classes as f64),
            non_parsing_cells: col(|r| r.non_parsing_cells as f64),
            variables_per_cell: col(|r| r.variables_per_cell),
            unbound_per_cell: col(|r| r.unbound_per_cell),
        }
    }

    /// Rows of (label, summary) in display order.
    pub fn rows(&self) -> [(&'static str, Summary); 8] {
        [
            ("Cells", self.cells),
            ("LOC per cell", self.loc_per_cell),
            ("Branches per cell", self.branches_per_cell),
            ("Functions", self.functions),
            ("Classes", self.classes),
            ("Non-parsing cells", self.non_parsing_cells),
            ("Variables per cell", self.variables_per_cell),
            ("Unbound variables per cell", self.unbound_per_cell),
        ]
    }
}
