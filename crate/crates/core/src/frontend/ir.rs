//! Cell-level intermediate representation.
//!
//! The lowering keeps only what the name-level analyses need: which names a
//! statement reads, which it binds or mutates, and the calls it performs.

use std::collections::BTreeSet;

use serde::Serialize;

/// A call performed somewhere inside an expression.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CallSite {
    /// Unqualified callee name: `fit_transform` for `scaler.fit_transform(d)`.
    pub name: String,
    /// Dotted callee path when it is a plain name/attribute chain
    /// (`pd.read_csv`), otherwise just `name`.
    pub path: String,
    /// Free names read by the positional and keyword arguments.
    pub arg_names: BTreeSet<String>,
    /// String literals passed directly as arguments.
    pub str_args: Vec<String>,
}

/// Summary of one expression (or a group of expressions evaluated together).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ExprInfo {
    /// Free names loaded, including callee bases and receivers.
    pub uses: BTreeSet<String>,
    /// Every call in evaluation-tree order; the outermost call comes first.
    pub calls: Vec<CallSite>,
    /// Index into `calls` when the expression itself is a call.
    pub outer_call: Option<usize>,
    /// Names bound by assignment expressions (`:=`).
    pub walrus: BTreeSet<String>,
}

impl ExprInfo {
    pub fn outer_call(&self) -> Option<&CallSite> {
        self.outer_call.map(|i| &self.calls[i])
    }

    pub fn merge(&mut self, other: ExprInfo) {
        self.uses.extend(other.uses);
        self.calls.extend(other.calls);
        self.walrus.extend(other.walrus);
    }
}

/// A binding produced by an assignment-like statement.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Target {
    pub name: String,
    /// `true` when the statement rebinds the name; `false` when it only
    /// mutates the object the name refers to (`d['a'] = v`, `obj.x = v`).
    pub rebinds: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StmtKind {
    /// `ȳ = rhs`, augmented assignments, for-loop target binding and
    /// walrus-carrying expression statements.
    Assign { targets: Vec<Target>, value: ExprInfo },
    /// Expression evaluated for its effect.
    Expr(ExprInfo),
    /// `def f(x̄): ...`; `uses` holds free names of the body together with
    /// names read by defaults, decorators and annotations.
    FunctionDef { name: String, uses: BTreeSet<String>, calls: Vec<CallSite> },
    Import { bound: Vec<String> },
    /// Branch or loop condition on a CFG edge.
    Guard(ExprInfo),
    Return(ExprInfo),
    /// Construct outside the modelled subset: reads every loaded name and
    /// may (but need not) write every stored name.
    Opaque { label: &'static str, stores: BTreeSet<String>, value: ExprInfo },
    Nop,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Stmt {
    pub kind: StmtKind,
    /// 1-based source line.
    pub line: u32,
}

impl Stmt {
    pub fn new(kind: StmtKind, line: u32) -> Self {
        Self { kind, line }
    }

    pub fn nop(line: u32) -> Self {
        Self::new(StmtKind::Nop, line)
    }

    /// Names this statement definitely rebinds (kills prior definitions).
    pub fn binds(&self) -> Vec<&str> {
        match &self.kind {
            StmtKind::Assign { targets, .. } => targets
                .iter()
                .filter(|t| t.rebinds)
                .map(|t| t.name.as_str())
                .collect(),
            StmtKind::FunctionDef { name, .. } => vec![name.as_str()],
            StmtKind::Import { bound } => bound.iter().map(String::as_str).collect(),
            _ => Vec::new(),
        }
    }

    /// Names this statement may write without killing earlier definitions.
    pub fn weak_defs(&self) -> Vec<&str> {
        match &self.kind {
            StmtKind::Assign { targets, .. } => targets
                .iter()
                .filter(|t| !t.rebinds)
                .map(|t| t.name.as_str())
                .collect(),
            StmtKind::Opaque { stores, .. } => stores.iter().map(String::as_str).collect(),
            _ => Vec::new(),
        }
    }

    /// All names written, strongly or weakly.
    pub fn defs(&self) -> BTreeSet<&str> {
        self.binds().into_iter().chain(self.weak_defs()).collect()
    }

    /// Names read before any binding performed by this statement.
    pub fn uses(&self) -> &BTreeSet<String> {
        static EMPTY: BTreeSet<String> = BTreeSet::new();
        match &self.kind {
            StmtKind::Assign { value, .. }
            | StmtKind::Expr(value)
            | StmtKind::Guard(value)
            | StmtKind::Return(value)
            | StmtKind::Opaque { value, .. } => &value.uses,
            StmtKind::FunctionDef { uses, .. } => uses,
            StmtKind::Import { .. } | StmtKind::Nop => &EMPTY,
        }
    }

    pub fn calls(&self) -> &[CallSite] {
        match &self.kind {
            StmtKind::Assign { value, .. }
            | StmtKind::Expr(value)
            | StmtKind::Guard(value)
            | StmtKind::Return(value)
            | StmtKind::Opaque { value, .. } => &value.calls,
            StmtKind::FunctionDef { calls, .. } => calls,
            StmtKind::Import { .. } | StmtKind::Nop => &[],
        }
    }
}

/// Structured statement tree; the CFG builder flattens it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Simple(Stmt),
    If { test: Stmt, then: Vec<Node>, orelse: Vec<Node> },
    While { test: Stmt, body: Vec<Node>, orelse: Vec<Node> },
    For { bind: Stmt, body: Vec<Node>, orelse: Vec<Node> },
    Break { line: u32 },
    Continue { line: u32 },
}

/// Lowered cell body.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CellAst {
    pub body: Vec<Node>,
    pub counts: SyntaxCounts,
}

impl CellAst {
    pub fn is_empty(&self) -> bool {
        self.body.is_empty()
    }

    /// Pre-order walk over every lowered statement, guards included.
    pub fn statements(&self) -> Vec<&Stmt> {
        fn walk<'a>(nodes: &'a [Node], out: &mut Vec<&'a Stmt>) {
            for node in nodes {
                match node {
                    Node::Simple(s) => out.push(s),
                    Node::If { test, then, orelse } | Node::While { test, body: then, orelse } => {
                        out.push(test);
                        walk(then, out);
                        walk(orelse, out);
                    }
                    Node::For { bind, body, orelse } => {
                        out.push(bind);
                        walk(body, out);
                        walk(orelse, out);
                    }
                    Node::Break { .. } | Node::Continue { .. } => {}
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.body, &mut out);
        out
    }
}

/// Syntactic tallies used for corpus characteristics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SyntaxCounts {
    /// `if`/`elif`/`while`/`for` headers, at any nesting depth.
    pub branches: u32,
    pub functions: u32,
    pub classes: u32,
}
