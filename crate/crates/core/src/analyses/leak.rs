//! ML data-leakage analysis: each variable maps to the data it points to and
//! whether it was used to train or test a model.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use super::kb::{CallClass, KnowledgeBase};
use crate::absint::{Analysis, Lattice};
use crate::frontend::{EdgeId, PreSummary, Stmt, StmtKind};

/// A data source: a variable name or a literal read by an ingest call.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceToken {
    Var(String),
    Literal(String),
}

impl fmt::Display for SourceToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SourceToken::Var(v) => f.write_str(v),
            SourceToken::Literal(s) => write!(f, "'{s}'"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mark {
    Tr,
    Ts,
}

/// `(sources, marks)`; `(∅, ∅)` is ⊥.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize)]
pub struct LeakValue {
    pub sources: BTreeSet<SourceToken>,
    pub marks: BTreeSet<Mark>,
}

impl LeakValue {
    pub fn is_bottom(&self) -> bool {
        self.sources.is_empty() && self.marks.is_empty()
    }

    pub fn join_with(&mut self, other: &LeakValue) {
        self.sources.extend(other.sources.iter().cloned());
        self.marks.extend(other.marks.iter().copied());
    }

    pub fn leq(&self, other: &LeakValue) -> bool {
        self.sources.is_subset(&other.sources) && self.marks.is_subset(&other.marks)
    }
}

/// Point-wise map; unmapped variables are ⊥ and ⊥ entries are never stored,
/// so structural equality is lattice equality.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize)]
pub struct LeakState {
    pub env: BTreeMap<String, LeakValue>,
}

impl LeakState {
    pub fn get(&self, var: &str) -> Option<&LeakValue> {
        self.env.get(var)
    }

    pub fn set(&mut self, var: &str, value: LeakValue) {
        if value.is_bottom() {
            self.env.remove(var);
        } else {
            self.env.insert(var.to_string(), value);
        }
    }

    fn join_into(&mut self, var: &str, value: &LeakValue) {
        if !value.is_bottom() {
            self.env.entry(var.to_string()).or_default().join_with(value);
        }
    }

    fn mark(&mut self, var: &str, mark: Mark) {
        self.env.entry(var.to_string()).or_default().marks.insert(mark);
    }

    fn lookup_join<'a>(&self, vars: impl IntoIterator<Item = &'a String>) -> LeakValue {
        let mut acc = LeakValue::default();
        for v in vars {
            if let Some(val) = self.env.get(v) {
                acc.join_with(val);
            }
        }
        acc
    }
}

impl Lattice for LeakState {
    fn bottom() -> Self {
        Self::default()
    }

    fn join(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, v) in &other.env {
            out.join_into(k, v);
        }
        out
    }

    fn leq(&self, other: &Self) -> bool {
        self.env
            .iter()
            .all(|(k, v)| other.env.get(k).is_some_and(|o| v.leq(o)))
    }
}

/// Applies the sink, reset and propagate rules for one statement.
///
/// Train/test calls anywhere in the statement first mark their argument
/// variables. Assignment targets are then computed from the marked state:
/// a reset outer call maps every target to its argument variables with no
/// marks, a train/test outer call passes on only the sources of what it
/// reads, and any other right-hand side joins the target's own entry with
/// the entries of every variable read. String literals given to ingest
/// calls join the sources in every case.
pub fn leak_transfer(stmt: &Stmt, s: &LeakState, kb: &KnowledgeBase) -> LeakState {
    let mut out = s.clone();
    for call in stmt.calls() {
        let mark = match kb.classify(call) {
            CallClass::Train => Mark::Tr,
            CallClass::Test => Mark::Ts,
            _ => continue,
        };
        for arg in &call.arg_names {
            out.mark(arg, mark);
        }
    }

    let literals: BTreeSet<SourceToken> = stmt
        .calls()
        .iter()
        .filter(|c| kb.is_ingest(c))
        .flat_map(|c| c.str_args.iter().cloned().map(SourceToken::Literal))
        .collect();

    match &stmt.kind {
        StmtKind::Assign { targets, value } => {
            let class = value.outer_call().map(|c| (c, kb.classify(c)));
            let rhs = match class {
                Some((call, CallClass::Reset)) => Some(LeakValue {
                    sources: call.arg_names.iter().cloned().map(SourceToken::Var).collect(),
                    marks: BTreeSet::new(),
                }),
                Some((_, CallClass::Train | CallClass::Test)) => Some(LeakValue {
                    sources: out.lookup_join(&value.uses).sources,
                    marks: BTreeSet::new(),
                }),
                _ => None,
            };
            let reads = out.lookup_join(&value.uses);
            let mut updated = out.clone();
            for t in targets {
                let mut v = match (&rhs, t.rebinds) {
                    (Some(r), true) => r.clone(),
                    (Some(r), false) => {
                        let mut own = out.get(&t.name).cloned().unwrap_or_default();
                        own.join_with(r);
                        own
                    }
                    (None, _) => {
                        let mut own = out.get(&t.name).cloned().unwrap_or_default();
                        own.join_with(&reads);
                        own
                    }
                };
                v.sources.extend(literals.iter().cloned());
                updated.set(&t.name, v);
            }
            updated
        }
        StmtKind::FunctionDef { name, uses, .. } => {
            let reads = out.lookup_join(uses);
            out.join_into(name, &reads);
            out
        }
        StmtKind::Opaque { stores, value, .. } => {
            let mut reads = out.lookup_join(&value.uses);
            reads.sources.extend(literals);
            for name in stores {
                out.join_into(name, &reads);
            }
            out
        }
        StmtKind::Import { bound } => {
            for name in bound {
                out.env.remove(name);
            }
            out
        }
        StmtKind::Expr(_) | StmtKind::Guard(_) | StmtKind::Return(_) | StmtKind::Nop => out,
    }
}

/// φ: every unbound variable of the successor is reachable (non-⊥), and
/// there is at least one.
pub fn leak_phi(s: &LeakState, pre: &PreSummary) -> bool {
    !pre.is_empty() && pre.unbound.iter().all(|v| s.env.contains_key(v))
}

/// A train-marked and a test-marked variable sharing a data source.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct LeakViolation {
    pub train_var: String,
    pub test_var: String,
    pub shared: BTreeSet<SourceToken>,
}

impl fmt::Display for LeakViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let shared: Vec<String> = self.shared.iter().map(ToString::to_string).collect();
        write!(
            f,
            "{} (train) and {} (test) share data source {{{}}}",
            self.train_var,
            self.test_var,
            shared.join(", ")
        )
    }
}

pub fn leak_check(s: &LeakState) -> Vec<LeakViolation> {
    let mut out = Vec::new();
    for (x, vx) in s.env.iter().filter(|(_, v)| v.marks.contains(&Mark::Tr)) {
        for (y, vy) in s.env.iter().filter(|(_, v)| v.marks.contains(&Mark::Ts)) {
            let shared: BTreeSet<SourceToken> = vx.sources.intersection(&vy.sources).cloned().collect();
            if !shared.is_empty() {
                out.push(LeakViolation { train_var: x.clone(), test_var: y.clone(), shared });
            }
        }
    }
    out
}

pub struct LeakAnalysis<'kb> {
    pub kb: &'kb KnowledgeBase,
}

impl Analysis for LeakAnalysis<'_> {
    type State = LeakState;

    fn transfer(&self, _edge: EdgeId, stmt: &Stmt, state: &LeakState) -> LeakState {
        leak_transfer(stmt, state, self.kb)
    }
}
