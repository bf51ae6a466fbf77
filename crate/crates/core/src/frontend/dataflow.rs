use std::collections::BTreeSet;

use serde::Serialize;

use super::cfg::{Cfg, EdgeId};
use super::ir::{CellAst, Stmt, StmtKind};
use crate::absint::{solve, Analysis, Lattice, SolverOptions};

/// `def(c)` and `use(c)` of one cell.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct DefUseSets {
    pub defs: BTreeSet<String>,
    pub uses: BTreeSet<String>,
}

pub fn compute_def_use(ast: &CellAst) -> DefUseSets {
    let mut du = DefUseSets::default();
    for stmt in ast.statements() {
        du.defs.extend(stmt.defs().into_iter().map(str::to_owned));
        du.uses.extend(stmt.uses().iter().cloned());
    }
    du
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DefSite {
    /// No definition inside the cell (⊥).
    Unbound,
    Edge(EdgeId),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UdChain {
    pub var: String,
    pub use_edge: EdgeId,
    pub line: u32,
    pub defs: BTreeSet<DefSite>,
}

impl UdChain {
    pub fn may_be_unbound(&self) -> bool {
        self.defs.contains(&DefSite::Unbound)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct UdChains {
    /// One chain per (variable, using edge), ordered by edge then name.
    pub chains: Vec<UdChain>,
}

impl UdChains {
    pub fn get(&self, var: &str, edge: EdgeId) -> Option<&UdChain> {
        self.chains.iter().find(|c| c.var == var && c.use_edge == edge)
    }
}

/// The set of (variable, definition site) pairs reaching a location.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReachingDefs(pub BTreeSet<(String, DefSite)>);

impl Lattice for ReachingDefs {
    fn bottom() -> Self {
        Self::default()
    }

    fn join(&self, other: &Self) -> Self {
        Self(self.0.union(&other.0).cloned().collect())
    }

    fn leq(&self, other: &Self) -> bool {
        self.0.is_subset(&other.0)
    }
}

struct ReachingDefinitions;

impl Analysis for ReachingDefinitions {
    type State = ReachingDefs;

    fn transfer(&self, edge: EdgeId, stmt: &Stmt, state: &ReachingDefs) -> ReachingDefs {
        let binds = stmt.binds();
        let weak = stmt.weak_defs();
        if binds.is_empty() && weak.is_empty() {
            return state.clone();
        }
        let mut out: BTreeSet<(String, DefSite)> = state
            .0
            .iter()
            .filter(|(v, _)| !binds.contains(&v.as_str()))
            .cloned()
            .collect();
        for v in binds.into_iter().chain(weak) {
            out.insert((v.to_owned(), DefSite::Edge(edge)));
        }
        ReachingDefs(out)
    }
}

/// Use-def chains from a forward may reaching-definitions analysis. Every
/// name used in the cell starts out reaching the entry as `Unbound`.
pub fn compute_ud(cfg: &Cfg) -> UdChains {
    let names: BTreeSet<String> = cfg.edges.iter().flat_map(|e| e.stmt.uses().iter().cloned()).collect();
    let init = ReachingDefs(names.into_iter().map(|v| (v, DefSite::Unbound)).collect());
    // Reaching definitions has finite height; the iteration bound cannot trip.
    let fix = solve(cfg, &init, &ReachingDefinitions, SolverOptions::default())
        .expect("reaching definitions converges");

    let mut chains = Vec::new();
    for (eid, edge) in cfg.edges.iter().enumerate() {
        let reaching = fix.states[edge.from].as_ref();
        for var in edge.stmt.uses() {
            let defs = reaching
                .map(|r| r.0.iter().filter(|(v, _)| v == var).map(|(_, d)| *d).collect())
                .unwrap_or_default();
            chains.push(UdChain { var: var.clone(), use_edge: eid, line: edge.stmt.line, defs });
        }
    }
    UdChains { chains }
}

/// Unbound variables of a cell: the propagation guard input.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PreSummary {
    pub unbound: BTreeSet<String>,
}

impl PreSummary {
    pub fn new<I: IntoIterator<Item = S>, S: Into<String>>(names: I) -> Self {
        Self { unbound: names.into_iter().map(Into::into).collect() }
    }

    pub fn is_empty(&self) -> bool {
        self.unbound.is_empty()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.unbound.contains(name)
    }
}

/// `{ v ∈ use(c) | ⊥ ∈ use-def(v) }`, excluding names the cell imports and
/// Python builtins.
pub fn compute_pre(ud: &UdChains, du: &DefUseSets, imported: &BTreeSet<String>) -> PreSummary {
    let unbound = ud
        .chains
        .iter()
        .filter(|c| c.may_be_unbound())
        .map(|c| &c.var)
        .filter(|v| du.uses.contains(*v) && !imported.contains(*v) && !is_builtin(v))
        .cloned()
        .collect();
    PreSummary { unbound }
}

/// Names bound by import statements anywhere in the cell.
pub fn imported_names(ast: &CellAst) -> BTreeSet<String> {
    ast.statements()
        .into_iter()
        .filter_map(|s| match &s.kind {
            StmtKind::Import { bound } => Some(bound.iter().cloned()),
            _ => None,
        })
        .flatten()
        .collect()
}

pub fn is_builtin(name: &str) -> bool {
    PYTHON_BUILTINS.binary_search(&name).is_ok()
}

/// Sorted; names every Python 3 session (and IPython kernel) provides.
const PYTHON_BUILTINS: &[&str] = &[
    "ArithmeticError", "AssertionError", "AttributeError", "BaseException", "BlockingIOError",
    "BrokenPipeError", "BufferError", "BytesWarning", "ChildProcessError", "ConnectionAbortedError",
    "ConnectionError", "ConnectionRefusedError", "ConnectionResetError", "DeprecationWarning",
    "EOFError", "Ellipsis", "EnvironmentError", "Exception", "False", "FileExistsError",
    "FileNotFoundError", "FloatingPointError", "FutureWarning", "GeneratorExit", "IOError",
    "ImportError", "ImportWarning", "IndentationError", "IndexError", "InterruptedError",
    "IsADirectoryError", "KeyError", "KeyboardInterrupt", "LookupError", "MemoryError",
    "ModuleNotFoundError", "NameError", "None", "NotADirectoryError", "NotImplemented",
    "NotImplementedError", "OSError", "OverflowError", "PendingDeprecationWarning",
    "PermissionError", "ProcessLookupError", "RecursionError", "ReferenceError", "ResourceWarning",
    "RuntimeError", "RuntimeWarning", "StopAsyncIteration", "StopIteration", "SyntaxError",
    "SyntaxWarning", "SystemError", "SystemExit", "TabError", "TimeoutError", "True", "TypeError",
    "UnboundLocalError", "UnicodeDecodeError", "UnicodeEncodeError", "UnicodeError",
    "UnicodeTranslateError", "UnicodeWarning", "UserWarning", "ValueError", "Warning",
    "ZeroDivisionError", "__build_class__", "__debug__", "__doc__", "__import__", "__name__",
    "__spec__", "abs", "aiter", "all", "anext", "any", "ascii", "bin", "bool", "breakpoint",
    "bytearray", "bytes", "callable", "chr", "classmethod", "compile", "complex", "copyright",
    "credits", "delattr", "dict", "dir", "display", "divmod", "enumerate", "eval", "exec", "exit",
    "filter", "float", "format", "frozenset", "get_ipython", "getattr", "globals", "hasattr",
    "hash", "help", "hex", "id", "input", "int", "isinstance", "issubclass", "iter", "len",
    "license", "list", "locals", "map", "max", "memoryview", "min", "next", "object", "oct",
    "open", "ord", "pow", "print", "property", "quit", "range", "repr", "reversed", "round", "set",
    "setattr", "slice", "sorted", "staticmethod", "str", "sum", "super", "tuple", "type", "vars",
    "zip",
];
