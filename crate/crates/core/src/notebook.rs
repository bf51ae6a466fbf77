//! Notebooks, cells and user events.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::frontend::{parse_cell, ParseError};

/// Hex SHA-256 of a cell's source text.
pub fn code_hash(code: &str) -> String {
    let digest = Sha256::digest(code.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParseStatus {
    Ok,
    SyntaxError,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Cell {
    /// Stable opaque label; survives inserts and deletes of other cells.
    pub id: String,
    pub code: String,
    pub code_hash: String,
    pub parse_status: ParseStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parse_error: Option<ParseError>,
}

impl Cell {
    pub fn new(id: impl Into<String>, code: impl Into<String>) -> Self {
        let code = code.into();
        let (parse_status, parse_error) = match parse_cell(&code) {
            Ok(_) => (ParseStatus::Ok, None),
            Err(e) => (ParseStatus::SyntaxError, Some(e)),
        };
        Cell { id: id.into(), code_hash: code_hash(&code), code, parse_status, parse_error }
    }

    pub fn parses(&self) -> bool {
        self.parse_status == ParseStatus::Ok
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Notebook {
    pub session_id: String,
    pub cells: Vec<Cell>,
}

impl Notebook {
    pub fn new(session_id: impl Into<String>) -> Self {
        Notebook { session_id: session_id.into(), cells: Vec::new() }
    }

    /// Cells labelled "1", "2", … in order.
    pub fn from_sources<I, S>(session_id: impl Into<String>, sources: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let cells = sources
            .into_iter()
            .enumerate()
            .map(|(i, code)| Cell::new((i + 1).to_string(), code))
            .collect();
        Notebook { session_id: session_id.into(), cells }
    }

    pub fn cell(&self, id: &str) -> Option<&Cell> {
        self.cells.iter().find(|c| c.id == id)
    }

    /// 0-based position of a cell in display order.
    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.cells.iter().position(|c| c.id == id)
    }

    pub fn parse_ok_cells(&self) -> impl Iterator<Item = &Cell> {
        self.cells.iter().filter(|c| c.parses())
    }

    /// Smallest positive integer label not yet in use.
    pub fn fresh_id(&self) -> String {
        let used: BTreeSet<&str> = self.cells.iter().map(|c| c.id.as_str()).collect();
        (1..)
            .map(|i: usize| i.to_string())
            .find(|id| !used.contains(id.as_str()))
            .expect("unbounded range")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Open,
    Execute,
    Edit,
    Create,
    Delete,
    Whatif,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Open => "open",
            EventKind::Execute => "execute",
            EventKind::Edit => "edit",
            EventKind::Create => "create",
            EventKind::Delete => "delete",
            EventKind::Whatif => "whatif",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub kind: EventKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cell_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub code: Option<String>,
    /// 1-based insertion position for `create`; defaults to the end.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<usize>,
}

impl Event {
    pub fn new(kind: EventKind) -> Self {
        Event { kind, cell_id: None, code: None, position: None }
    }

    pub fn on(kind: EventKind, cell_id: impl Into<String>) -> Self {
        Event { cell_id: Some(cell_id.into()), ..Event::new(kind) }
    }

    pub fn with_code(mut self, code: impl Into<String>) -> Self {
        self.code = Some(code.into());
        self
    }

    pub fn at(mut self, position: usize) -> Self {
        self.position = Some(position);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EventError {
    #[error("{kind} event requires a cell_id")]
    MissingCellId { kind: EventKind },
    #[error("unknown cell `{0}`")]
    UnknownCell(String),
    #[error("cell `{0}` already exists")]
    DuplicateCell(String),
    #[error("{kind} event requires code")]
    MissingCode { kind: EventKind },
    #[error("position {position} is outside 1..={max}")]
    BadPosition { position: usize, max: usize },
}

/// Applies the structural effect of an event. `open`, `execute` and
/// `whatif` leave the notebook unchanged.
pub fn apply_event(nb: &Notebook, e: &Event) -> Result<Notebook, EventError> {
    let require_id = || e.cell_id.as_deref().ok_or(EventError::MissingCellId { kind: e.kind });
    let require_cell = || {
        let id = require_id()?;
        nb.index_of(id).ok_or_else(|| EventError::UnknownCell(id.to_string()))
    };
    match e.kind {
        EventKind::Open => Ok(nb.clone()),
        EventKind::Execute | EventKind::Whatif => {
            require_cell()?;
            Ok(nb.clone())
        }
        EventKind::Edit => {
            let idx = require_cell()?;
            let code = e.code.as_deref().ok_or(EventError::MissingCode { kind: e.kind })?;
            let mut out = nb.clone();
            let id = out.cells[idx].id.clone();
            out.cells[idx] = Cell::new(id, code);
            Ok(out)
        }
        EventKind::Create => {
            let id = match &e.cell_id {
                Some(id) if nb.cell(id).is_some() => return Err(EventError::DuplicateCell(id.clone())),
                Some(id) => id.clone(),
                None => nb.fresh_id(),
            };
            let max = nb.cells.len() + 1;
            let position = e.position.unwrap_or(max);
            if position == 0 || position > max {
                return Err(EventError::BadPosition { position, max });
            }
            let mut out = nb.clone();
            out.cells.insert(position - 1, Cell::new(id, e.code.clone().unwrap_or_default()));
            Ok(out)
        }
        EventKind::Delete => {
            let idx = require_cell()?;
            let mut out = nb.clone();
            out.cells.remove(idx);
            Ok(out)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid notebook at `{path}`: {message}")]
pub struct IngestError {
    /// JSON path of the offending value, e.g. `$.cells[3].source`.
    pub path: String,
    pub message: String,
}

fn ingest_err(path: impl Into<String>, message: impl Into<String>) -> IngestError {
    IngestError { path: path.into(), message: message.into() }
}

/// Reads the code cells of an nbformat 4 document in order. Cells keep
/// their nbformat `id` when every code cell has a distinct one; otherwise
/// they are labelled "1", "2", … in order.
pub fn ingest_ipynb(bytes: &[u8]) -> Result<Notebook, IngestError> {
    let doc: Value = serde_json::from_slice(bytes).map_err(|e| ingest_err("$", e.to_string()))?;
    let root = doc.as_object().ok_or_else(|| ingest_err("$", "expected a JSON object"))?;

    if let Some(v) = root.get("nbformat") {
        let major = v.as_u64().ok_or_else(|| ingest_err("$.nbformat", "expected an integer"))?;
        if major < 4 {
            return Err(ingest_err("$.nbformat", format!("nbformat {major} is not supported (need 4 or later)")));
        }
    }

    let cells = root
        .get("cells")
        .ok_or_else(|| ingest_err("$.cells", "missing key"))?
        .as_array()
        .ok_or_else(|| ingest_err("$.cells", "expected an array"))?;

    let mut raw: Vec<(Option<String>, String)> = Vec::new();
    for (i, cell) in cells.iter().enumerate() {
        let path = format!("$.cells[{i}]");
        let obj = cell.as_object().ok_or_else(|| ingest_err(&path, "expected an object"))?;
        let kind = obj
            .get("cell_type")
            .and_then(Value::as_str)
            .ok_or_else(|| ingest_err(format!("{path}.cell_type"), "missing or not a string"))?;
        if kind != "code" {
            continue;
        }
        let source = match obj.get("source") {
            None | Some(Value::Null) => String::new(),
            Some(Value::String(s)) => s.clone(),
            Some(Value::Array(lines)) => join_source_lines(lines, &format!("{path}.source"))?,
            Some(_) => return Err(ingest_err(format!("{path}.source"), "expected a string or an array of strings")),
        };
        let id = obj.get("id").and_then(Value::as_str).map(str::to_string);
        raw.push((id, source));
    }

    let ids: Vec<Option<&str>> = raw.iter().map(|(id, _)| id.as_deref()).collect();
    let distinct: BTreeSet<&str> = ids.iter().flatten().copied().collect();
    let keep_ids = ids.iter().all(Option::is_some) && distinct.len() == ids.len();

    let cells = raw
        .into_iter()
        .enumerate()
        .map(|(i, (id, code))| {
            let id = if keep_ids { id.expect("checked above") } else { (i + 1).to_string() };
            Cell::new(id, code)
        })
        .collect();

    let session_id = root
        .get("metadata")
        .and_then(|m| m.get("nbprobe"))
        .and_then(|m| m.get("session_id"))
        .and_then(Value::as_str)
        .map(str::to_string)
        .unwrap_or_else(|| code_hash(&String::from_utf8_lossy(bytes))[..16].to_string());

    Ok(Notebook { session_id, cells })
}

/// nbformat stores sources as line arrays whose elements normally keep
/// their trailing newline; elements without one are joined with a newline.
fn join_source_lines(lines: &[Value], path: &str) -> Result<String, IngestError> {
    let mut out = String::new();
    for (j, line) in lines.iter().enumerate() {
        let s = line
            .as_str()
            .ok_or_else(|| ingest_err(format!("{path}[{j}]"), "expected a string"))?;
        if j > 0 && !out.ends_with('\n') {
            out.push('\n');
        }
        out.push_str(s);
    }
    Ok(out)
}

/// nbformat 4.5 document with one code cell per notebook cell.
pub fn to_ipynb(nb: &Notebook) -> String {
    let cells: Vec<Value> = nb
        .cells
        .iter()
        .map(|c| {
            let source: Vec<&str> = c.code.split_inclusive('\n').collect();
            json!({
                "cell_type": "code",
                "execution_count": null,
                "id": c.id,
                "metadata": {},
                "outputs": [],
                "source": source,
            })
        })
        .collect();
    let doc = json!({
        "cells": cells,
        "metadata": {
            "kernelspec": {"display_name": "Python 3", "language": "python", "name": "python3"},
            "language_info": {"name": "python"},
            "nbprobe": {"session_id": nb.session_id},
        },
        "nbformat": 4,
        "nbformat_minor": 5,
    });
    serde_json::to_string_pretty(&doc).expect("JSON values always serialize")
}
