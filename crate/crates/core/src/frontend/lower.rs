use std::collections::BTreeSet;

use rustpython_parser::ast::{
    self, Arguments, Comprehension, Constant, Expr, ExprCall, ExprContext, Pattern, Ranged,
    Stmt as PyStmt,
};

use super::ir::{CallSite, CellAst, ExprInfo, Node, Stmt, StmtKind, SyntaxCounts, Target};

/// Byte offset → line/column lookup for one source text.
pub(crate) struct LineIndex {
    starts: Vec<usize>,
}

impl LineIndex {
    pub(crate) fn new(src: &str) -> Self {
        let mut starts = vec![0];
        starts.extend(src.match_indices('\n').map(|(i, _)| i + 1));
        Self { starts }
    }

    /// 1-based (line, column) of a byte offset.
    pub(crate) fn position(&self, offset: usize) -> (u32, u32) {
        let line = match self.starts.binary_search(&offset) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        (line as u32 + 1, (offset - self.starts[line]) as u32 + 1)
    }

    pub(crate) fn line(&self, offset: usize) -> u32 {
        self.position(offset).0
    }
}

pub(crate) fn lower_suite(suite: &[PyStmt], lines: &LineIndex) -> CellAst {
    let mut lowerer = Lowerer { lines };
    let body = lowerer.block(suite);
    let mut counts = SyntaxCounts::default();
    count_syntax(suite, &mut counts);
    CellAst { body, counts }
}

struct Lowerer<'a> {
    lines: &'a LineIndex,
}

impl Lowerer<'_> {
    fn line_of(&self, node: &impl Ranged) -> u32 {
        self.lines.line(node.start().to_usize())
    }

    fn block(&mut self, stmts: &[PyStmt]) -> Vec<Node> {
        let mut out = Vec::with_capacity(stmts.len());
        for s in stmts {
            self.stmt(s, &mut out);
        }
        out
    }

    fn simple(&self, out: &mut Vec<Node>, kind: StmtKind, line: u32) {
        out.push(Node::Simple(Stmt::new(kind, line)));
    }

    fn stmt(&mut self, s: &PyStmt, out: &mut Vec<Node>) {
        let line = self.line_of(s);
        match s {
            PyStmt::FunctionDef(f) => {
                let (uses, calls) = function_uses(&f.args, &f.body, &f.decorator_list, f.returns.as_deref());
                self.simple(out, StmtKind::FunctionDef { name: f.name.to_string(), uses, calls }, line);
            }
            PyStmt::AsyncFunctionDef(f) => {
                let (uses, calls) = function_uses(&f.args, &f.body, &f.decorator_list, f.returns.as_deref());
                self.simple(out, StmtKind::FunctionDef { name: f.name.to_string(), uses, calls }, line);
            }
            PyStmt::ClassDef(c) => {
                let mut value = ExprInfo::default();
                for e in c.bases.iter().chain(&c.decorator_list) {
                    value.merge(expr_info(e));
                }
                for kw in &c.keywords {
                    value.merge(expr_info(&kw.value));
                }
                let mut body = StmtNames::default();
                body.block(&c.body);
                let locals: BTreeSet<String> = body.stores.clone();
                value.uses.extend(body.loads.difference(&locals).cloned());
                let stores = BTreeSet::from([c.name.to_string()]);
                self.simple(out, StmtKind::Opaque { label: "class", stores, value }, line);
            }
            PyStmt::Return(r) => {
                let value = r.value.as_deref().map(expr_info).unwrap_or_default();
                self.simple(out, StmtKind::Return(value), line);
            }
            PyStmt::Delete(d) => {
                let mut value = ExprInfo::default();
                for t in &d.targets {
                    value.merge(expr_info(t));
                }
                self.simple(out, StmtKind::Opaque { label: "del", stores: BTreeSet::new(), value }, line);
            }
            PyStmt::Assign(a) => {
                let mut value = expr_info(&a.value);
                let mut targets = Vec::new();
                for t in &a.targets {
                    assign_targets(t, &mut targets, &mut value);
                }
                self.simple(out, assignment(targets, value), line);
            }
            PyStmt::AugAssign(a) => {
                let mut value = expr_info(&a.value);
                let mut targets = Vec::new();
                assign_targets(&a.target, &mut targets, &mut value);
                // `x += y` reads x first.
                for t in &targets {
                    value.uses.insert(t.name.clone());
                }
                self.simple(out, assignment(targets, value), line);
            }
            PyStmt::AnnAssign(a) => match &a.value {
                Some(v) => {
                    let mut value = expr_info(v);
                    value.merge(expr_info(&a.annotation));
                    let mut targets = Vec::new();
                    assign_targets(&a.target, &mut targets, &mut value);
                    self.simple(out, assignment(targets, value), line);
                }
                None => self.simple(out, StmtKind::Expr(expr_info(&a.annotation)), line),
            },
            PyStmt::TypeAlias(_) => {
                let mut names = StmtNames::default();
                names.stmt(s);
                self.opaque(out, "type", names, line);
            }
            PyStmt::For(f) => {
                let bind = self.for_bind(&f.target, &f.iter, line);
                let body = self.block(&f.body);
                let orelse = self.block(&f.orelse);
                out.push(Node::For { bind, body, orelse });
            }
            PyStmt::AsyncFor(f) => {
                let bind = self.for_bind(&f.target, &f.iter, line);
                let body = self.block(&f.body);
                let orelse = self.block(&f.orelse);
                out.push(Node::For { bind, body, orelse });
            }
            PyStmt::While(w) => {
                let test = Stmt::new(StmtKind::Guard(expr_info(&w.test)), line);
                let body = self.block(&w.body);
                let orelse = self.block(&w.orelse);
                out.push(Node::While { test, body, orelse });
            }
            PyStmt::If(i) => {
                let test = Stmt::new(StmtKind::Guard(expr_info(&i.test)), line);
                let then = self.block(&i.body);
                let orelse = self.block(&i.orelse);
                out.push(Node::If { test, then, orelse });
            }
            PyStmt::With(_)
            | PyStmt::AsyncWith(_)
            | PyStmt::Match(_)
            | PyStmt::Try(_)
            | PyStmt::TryStar(_) => {
                let label = match s {
                    PyStmt::With(_) | PyStmt::AsyncWith(_) => "with",
                    PyStmt::Match(_) => "match",
                    _ => "try",
                };
                let mut names = StmtNames::default();
                names.stmt(s);
                self.opaque(out, label, names, line);
            }
            PyStmt::Raise(r) => {
                let mut value = ExprInfo::default();
                for e in r.exc.iter().chain(&r.cause) {
                    value.merge(expr_info(e));
                }
                self.simple(out, StmtKind::Expr(value), line);
            }
            PyStmt::Assert(a) => {
                let mut value = expr_info(&a.test);
                if let Some(m) = &a.msg {
                    value.merge(expr_info(m));
                }
                self.simple(out, StmtKind::Expr(value), line);
            }
            PyStmt::Import(i) => {
                let bound = i
                    .names
                    .iter()
                    .map(|a| match &a.asname {
                        Some(n) => n.to_string(),
                        None => a.name.split('.').next().unwrap_or_default().to_string(),
                    })
                    .collect();
                self.simple(out, StmtKind::Import { bound }, line);
            }
            PyStmt::ImportFrom(i) => {
                let bound = i
                    .names
                    .iter()
                    .filter(|a| a.name.as_str() != "*")
                    .map(|a| a.asname.as_ref().unwrap_or(&a.name).to_string())
                    .collect();
                self.simple(out, StmtKind::Import { bound }, line);
            }
            PyStmt::Global(_) | PyStmt::Nonlocal(_) | PyStmt::Pass(_) => {}
            PyStmt::Expr(e) => {
                let value = expr_info(&e.value);
                if value.walrus.is_empty() {
                    self.simple(out, StmtKind::Expr(value), line);
                } else {
                    self.simple(out, assignment(Vec::new(), value), line);
                }
            }
            PyStmt::Break(_) => out.push(Node::Break { line }),
            PyStmt::Continue(_) => out.push(Node::Continue { line }),
        }
    }

    fn for_bind(&self, target: &Expr, iter: &Expr, line: u32) -> Stmt {
        let mut value = expr_info(iter);
        let mut targets = Vec::new();
        assign_targets(target, &mut targets, &mut value);
        Stmt::new(assignment(targets, value), line)
    }

    fn opaque(&self, out: &mut Vec<Node>, label: &'static str, names: StmtNames, line: u32) {
        let mut stores = names.stores;
        stores.extend(names.mutated);
        let value = ExprInfo {
            uses: names.loads,
            calls: names.calls,
            outer_call: None,
            walrus: BTreeSet::new(),
        };
        self.simple(out, StmtKind::Opaque { label, stores, value }, line);
    }
}

/// Builds an assignment, folding walrus bindings into the targets.
fn assignment(mut targets: Vec<Target>, value: ExprInfo) -> StmtKind {
    for w in &value.walrus {
        targets.push(Target { name: w.clone(), rebinds: true });
    }
    let mut seen = BTreeSet::new();
    targets.retain(|t| seen.insert((t.name.clone(), t.rebinds)));
    StmtKind::Assign { targets, value }
}

/// Flattens an assignment target. Subscript and attribute targets mutate
/// their base name and read the base and index expressions.
fn assign_targets(target: &Expr, out: &mut Vec<Target>, reads: &mut ExprInfo) {
    match target {
        Expr::Name(n) => out.push(Target { name: n.id.to_string(), rebinds: true }),
        Expr::Tuple(t) => t.elts.iter().for_each(|e| assign_targets(e, out, reads)),
        Expr::List(l) => l.elts.iter().for_each(|e| assign_targets(e, out, reads)),
        Expr::Starred(s) => assign_targets(&s.value, out, reads),
        Expr::Subscript(_) | Expr::Attribute(_) => {
            let mut info = ExprInfo::default();
            let mut c = ExprCollector { info: &mut info };
            c.visit_load(target);
            if let Some(base) = base_name(target) {
                out.push(Target { name: base, rebinds: false });
            }
            reads.merge(info);
        }
        other => reads.merge(expr_info(other)),
    }
}

/// Leftmost identifier of an attribute/subscript/call chain.
fn base_name(e: &Expr) -> Option<String> {
    match e {
        Expr::Name(n) => Some(n.id.to_string()),
        Expr::Attribute(a) => base_name(&a.value),
        Expr::Subscript(s) => base_name(&s.value),
        Expr::Call(c) => base_name(&c.func),
        _ => None,
    }
}

fn dotted_path(e: &Expr) -> Option<String> {
    match e {
        Expr::Name(n) => Some(n.id.to_string()),
        Expr::Attribute(a) => dotted_path(&a.value).map(|p| format!("{p}.{}", a.attr)),
        _ => None,
    }
}

pub(crate) fn expr_info(e: &Expr) -> ExprInfo {
    let mut info = ExprInfo::default();
    let mut c = ExprCollector { info: &mut info };
    c.visit_load(e);
    if matches!(e, Expr::Call(_)) {
        info.outer_call = Some(0);
    }
    info
}

struct ExprCollector<'a> {
    info: &'a mut ExprInfo,
}

impl ExprCollector<'_> {
    fn visit_load(&mut self, e: &Expr) {
        self.visit(e);
    }

    fn visit_all<'e>(&mut self, es: impl IntoIterator<Item = &'e Expr>) {
        for e in es {
            self.visit(e);
        }
    }

    fn visit(&mut self, e: &Expr) {
        match e {
            Expr::Name(n) => {
                if !matches!(n.ctx, ExprContext::Store) {
                    self.info.uses.insert(n.id.to_string());
                }
            }
            Expr::Call(c) => self.call(c),
            Expr::NamedExpr(n) => {
                self.visit(&n.value);
                if let Expr::Name(t) = n.target.as_ref() {
                    self.info.walrus.insert(t.id.to_string());
                }
            }
            Expr::Lambda(l) => {
                let (params, defaults) = parameters(&l.args);
                self.visit_all(defaults);
                let mut inner = ExprInfo::default();
                ExprCollector { info: &mut inner }.visit(&l.body);
                self.info.uses.extend(inner.uses.into_iter().filter(|n| !params.contains(n)));
            }
            Expr::ListComp(c) => self.comprehension(&[&c.elt], &c.generators),
            Expr::SetComp(c) => self.comprehension(&[&c.elt], &c.generators),
            Expr::GeneratorExp(c) => self.comprehension(&[&c.elt], &c.generators),
            Expr::DictComp(c) => self.comprehension(&[&c.key, &c.value], &c.generators),
            Expr::BoolOp(b) => self.visit_all(&b.values),
            Expr::BinOp(b) => {
                self.visit(&b.left);
                self.visit(&b.right);
            }
            Expr::UnaryOp(u) => self.visit(&u.operand),
            Expr::IfExp(i) => {
                self.visit(&i.test);
                self.visit(&i.body);
                self.visit(&i.orelse);
            }
            Expr::Dict(d) => {
                self.visit_all(d.keys.iter().flatten());
                self.visit_all(&d.values);
            }
            Expr::Set(s) => self.visit_all(&s.elts),
            Expr::Await(a) => self.visit(&a.value),
            Expr::Yield(y) => self.visit_all(y.value.as_deref()),
            Expr::YieldFrom(y) => self.visit(&y.value),
            Expr::Compare(c) => {
                self.visit(&c.left);
                self.visit_all(&c.comparators);
            }
            Expr::FormattedValue(f) => {
                self.visit(&f.value);
                self.visit_all(f.format_spec.as_deref());
            }
            Expr::JoinedStr(j) => self.visit_all(&j.values),
            Expr::Constant(_) => {}
            Expr::Attribute(a) => self.visit(&a.value),
            Expr::Subscript(s) => {
                self.visit(&s.value);
                self.visit(&s.slice);
            }
            Expr::Starred(s) => self.visit(&s.value),
            Expr::List(l) => self.visit_all(&l.elts),
            Expr::Tuple(t) => self.visit_all(&t.elts),
            Expr::Slice(s) => {
                self.visit_all(s.lower.as_deref());
                self.visit_all(s.upper.as_deref());
                self.visit_all(s.step.as_deref());
            }
        }
    }

    fn call(&mut self, c: &ExprCall) {
        let idx = self.info.calls.len();
        let name = match c.func.as_ref() {
            Expr::Name(n) => n.id.to_string(),
            Expr::Attribute(a) => a.attr.to_string(),
            _ => String::new(),
        };
        let path = dotted_path(&c.func).unwrap_or_else(|| name.clone());
        self.info.calls.push(CallSite {
            name,
            path,
            arg_names: BTreeSet::new(),
            str_args: Vec::new(),
        });
        self.visit(&c.func);

        let mut args = ExprInfo::default();
        let mut str_args = Vec::new();
        {
            let mut ac = ExprCollector { info: &mut args };
            for a in c.args.iter().chain(c.keywords.iter().map(|k| &k.value)) {
                if let Expr::Constant(k) = a {
                    if let Constant::Str(s) = &k.value {
                        str_args.push(s.clone());
                    }
                }
                ac.visit(a);
            }
        }
        let site = &mut self.info.calls[idx];
        site.arg_names = args.uses.clone();
        site.str_args = str_args;
        self.info.merge(args);
    }

    fn comprehension(&mut self, elts: &[&Expr], generators: &[Comprehension]) {
        let mut inner = ExprInfo::default();
        let mut bound = BTreeSet::new();
        for (i, g) in generators.iter().enumerate() {
            if i == 0 {
                self.visit(&g.iter);
            } else {
                ExprCollector { info: &mut inner }.visit(&g.iter);
            }
            target_names(&g.target, &mut bound);
            for cond in &g.ifs {
                ExprCollector { info: &mut inner }.visit(cond);
            }
        }
        for e in elts {
            ExprCollector { info: &mut inner }.visit(e);
        }
        self.info.uses.extend(inner.uses.into_iter().filter(|n| !bound.contains(n)));
        self.info.calls.extend(inner.calls);
        self.info.walrus.extend(inner.walrus);
    }
}

fn target_names(e: &Expr, out: &mut BTreeSet<String>) {
    match e {
        Expr::Name(n) => {
            out.insert(n.id.to_string());
        }
        Expr::Tuple(t) => t.elts.iter().for_each(|e| target_names(e, out)),
        Expr::List(l) => l.elts.iter().for_each(|e| target_names(e, out)),
        Expr::Starred(s) => target_names(&s.value, out),
        _ => {}
    }
}

/// Parameter names and default-value expressions of a signature.
fn parameters(args: &Arguments) -> (BTreeSet<String>, Vec<&Expr>) {
    let mut names = BTreeSet::new();
    let mut defaults = Vec::new();
    for a in args.posonlyargs.iter().chain(&args.args).chain(&args.kwonlyargs) {
        names.insert(a.def.arg.to_string());
        if let Some(d) = &a.default {
            defaults.push(d.as_ref());
        }
    }
    for a in args.vararg.iter().chain(&args.kwarg) {
        names.insert(a.arg.to_string());
    }
    (names, defaults)
}

fn annotations(args: &Arguments) -> Vec<&Expr> {
    let mut out = Vec::new();
    for a in args.posonlyargs.iter().chain(&args.args).chain(&args.kwonlyargs) {
        out.extend(a.def.annotation.as_deref());
    }
    for a in args.vararg.iter().chain(&args.kwarg) {
        out.extend(a.annotation.as_deref());
    }
    out
}

/// Names a `def` reads at definition time plus the free names of its body.
fn function_uses(
    args: &Arguments,
    body: &[PyStmt],
    decorators: &[Expr],
    returns: Option<&Expr>,
) -> (BTreeSet<String>, Vec<CallSite>) {
    let (params, defaults) = parameters(args);
    let mut eager = ExprInfo::default();
    {
        let mut c = ExprCollector { info: &mut eager };
        for e in defaults.into_iter().chain(decorators).chain(annotations(args)).chain(returns) {
            c.visit(e);
        }
    }
    let mut uses = eager.uses;
    uses.extend(free_names(&params, body));
    (uses, eager.calls)
}

/// Free names of a function body: loads that are neither parameters nor
/// locally bound (unless declared `global`/`nonlocal`).
fn free_names(params: &BTreeSet<String>, body: &[PyStmt]) -> BTreeSet<String> {
    let mut names = StmtNames::default();
    names.block(body);
    let mut locals: BTreeSet<String> = params.clone();
    locals.extend(names.stores.iter().cloned());
    for g in &names.declared_global {
        locals.remove(g);
    }
    names.loads.into_iter().filter(|n| !locals.contains(n)).collect()
}

/// Flat name collection over a statement subtree at one scope level.
/// Nested function/class/lambda/comprehension scopes contribute only their
/// free names.
#[derive(Default)]
struct StmtNames {
    loads: BTreeSet<String>,
    stores: BTreeSet<String>,
    mutated: BTreeSet<String>,
    declared_global: BTreeSet<String>,
    calls: Vec<CallSite>,
}

impl StmtNames {
    fn absorb(&mut self, info: ExprInfo) {
        self.loads.extend(info.uses);
        self.stores.extend(info.walrus);
        self.calls.extend(info.calls);
    }

    fn expr(&mut self, e: &Expr) {
        self.absorb(expr_info(e));
    }

    fn target(&mut self, e: &Expr) {
        let mut targets = Vec::new();
        let mut reads = ExprInfo::default();
        assign_targets(e, &mut targets, &mut reads);
        self.absorb(reads);
        for t in targets {
            if t.rebinds {
                self.stores.insert(t.name);
            } else {
                self.mutated.insert(t.name);
            }
        }
    }

    fn block(&mut self, stmts: &[PyStmt]) {
        for s in stmts {
            self.stmt(s);
        }
    }

    fn stmt(&mut self, s: &PyStmt) {
        match s {
            PyStmt::FunctionDef(f) => {
                let (uses, calls) = function_uses(&f.args, &f.body, &f.decorator_list, f.returns.as_deref());
                self.loads.extend(uses);
                self.calls.extend(calls);
                self.stores.insert(f.name.to_string());
            }
            PyStmt::AsyncFunctionDef(f) => {
                let (uses, calls) = function_uses(&f.args, &f.body, &f.decorator_list, f.returns.as_deref());
                self.loads.extend(uses);
                self.calls.extend(calls);
                self.stores.insert(f.name.to_string());
            }
            PyStmt::ClassDef(c) => {
                for e in c.bases.iter().chain(&c.decorator_list) {
                    self.expr(e);
                }
                for kw in &c.keywords {
                    self.expr(&kw.value);
                }
                let mut inner = StmtNames::default();
                inner.block(&c.body);
                let locals = inner.stores.clone();
                self.loads.extend(inner.loads.into_iter().filter(|n| !locals.contains(n)));
                self.stores.insert(c.name.to_string());
            }
            PyStmt::Return(r) => {
                if let Some(v) = &r.value {
                    self.expr(v);
                }
            }
            PyStmt::Delete(d) => d.targets.iter().for_each(|t| self.expr(t)),
            PyStmt::Assign(a) => {
                self.expr(&a.value);
                a.targets.iter().for_each(|t| self.target(t));
            }
            PyStmt::TypeAlias(t) => {
                self.expr(&t.value);
                self.target(&t.name);
            }
            PyStmt::AugAssign(a) => {
                self.expr(&a.value);
                self.target(&a.target);
                if let Some(base) = base_name(&a.target) {
                    self.loads.insert(base);
                }
            }
            PyStmt::AnnAssign(a) => {
                self.expr(&a.annotation);
                if let Some(v) = &a.value {
                    self.expr(v);
                    self.target(&a.target);
                }
            }
            PyStmt::For(f) => {
                self.expr(&f.iter);
                self.target(&f.target);
                self.block(&f.body);
                self.block(&f.orelse);
            }
            PyStmt::AsyncFor(f) => {
                self.expr(&f.iter);
                self.target(&f.target);
                self.block(&f.body);
                self.block(&f.orelse);
            }
            PyStmt::While(w) => {
                self.expr(&w.test);
                self.block(&w.body);
                self.block(&w.orelse);
            }
            PyStmt::If(i) => {
                self.expr(&i.test);
                self.block(&i.body);
                self.block(&i.orelse);
            }
            PyStmt::With(w) => self.with_block(&w.items, &w.body),
            PyStmt::AsyncWith(w) => self.with_block(&w.items, &w.body),
            PyStmt::Match(m) => {
                self.expr(&m.subject);
                for case in &m.cases {
                    self.pattern(&case.pattern);
                    if let Some(g) = &case.guard {
                        self.expr(g);
                    }
                    self.block(&case.body);
                }
            }
            PyStmt::Raise(r) => {
                for e in r.exc.iter().chain(&r.cause) {
                    self.expr(e);
                }
            }
            PyStmt::Try(t) => {
                self.block(&t.body);
                self.handlers(&t.handlers);
                self.block(&t.orelse);
                self.block(&t.finalbody);
            }
            PyStmt::TryStar(t) => {
                self.block(&t.body);
                self.handlers(&t.handlers);
                self.block(&t.orelse);
                self.block(&t.finalbody);
            }
            PyStmt::Assert(a) => {
                self.expr(&a.test);
                if let Some(m) = &a.msg {
                    self.expr(m);
                }
            }
            PyStmt::Import(i) => {
                for a in &i.names {
                    let bound = match &a.asname {
                        Some(n) => n.to_string(),
                        None => a.name.split('.').next().unwrap_or_default().to_string(),
                    };
                    self.stores.insert(bound);
                }
            }
            PyStmt::ImportFrom(i) => {
                for a in i.names.iter().filter(|a| a.name.as_str() != "*") {
                    self.stores.insert(a.asname.as_ref().unwrap_or(&a.name).to_string());
                }
            }
            PyStmt::Global(g) => self.declared_global.extend(g.names.iter().map(|n| n.to_string())),
            PyStmt::Nonlocal(n) => self.declared_global.extend(n.names.iter().map(|n| n.to_string())),
            PyStmt::Expr(e) => self.expr(&e.value),
            PyStmt::Pass(_) | PyStmt::Break(_) | PyStmt::Continue(_) => {}
        }
    }

    /// `with e as v:` binds `v` before the body runs, so body reads of `v`
    /// are not exposed.
    fn with_block(&mut self, items: &[ast::WithItem], body: &[PyStmt]) {
        let mut bound = BTreeSet::new();
        for item in items {
            self.expr(&item.context_expr);
            if let Some(v) = &item.optional_vars {
                self.target(v);
                target_names(v, &mut bound);
            }
        }
        let mut inner = StmtNames::default();
        inner.block(body);
        self.loads.extend(inner.loads.into_iter().filter(|n| !bound.contains(n)));
        self.stores.extend(inner.stores);
        self.mutated.extend(inner.mutated);
        self.declared_global.extend(inner.declared_global);
        self.calls.extend(inner.calls);
    }

    fn handlers(&mut self, handlers: &[ast::ExceptHandler]) {
        for h in handlers {
            let ast::ExceptHandler::ExceptHandler(h) = h;
            if let Some(t) = &h.type_ {
                self.expr(t);
            }
            if let Some(n) = &h.name {
                self.stores.insert(n.to_string());
            }
            self.block(&h.body);
        }
    }

    fn pattern(&mut self, p: &Pattern) {
        match p {
            Pattern::MatchValue(v) => self.expr(&v.value),
            Pattern::MatchSingleton(_) => {}
            Pattern::MatchSequence(s) => s.patterns.iter().for_each(|p| self.pattern(p)),
            Pattern::MatchMapping(m) => {
                m.keys.iter().for_each(|k| self.expr(k));
                m.patterns.iter().for_each(|p| self.pattern(p));
                if let Some(r) = &m.rest {
                    self.stores.insert(r.to_string());
                }
            }
            Pattern::MatchClass(c) => {
                self.expr(&c.cls);
                c.patterns.iter().chain(&c.kwd_patterns).for_each(|p| self.pattern(p));
            }
            Pattern::MatchStar(s) => {
                if let Some(n) = &s.name {
                    self.stores.insert(n.to_string());
                }
            }
            Pattern::MatchAs(a) => {
                if let Some(p) = &a.pattern {
                    self.pattern(p);
                }
                if let Some(n) = &a.name {
                    self.stores.insert(n.to_string());
                }
            }
            Pattern::MatchOr(o) => o.patterns.iter().for_each(|p| self.pattern(p)),
        }
    }
}

/// Counts branching headers, function and class definitions at any depth.
fn count_syntax(stmts: &[PyStmt], counts: &mut SyntaxCounts) {
    for s in stmts {
        match s {
            PyStmt::FunctionDef(f) => {
                counts.functions += 1;
                count_syntax(&f.body, counts);
            }
            PyStmt::AsyncFunctionDef(f) => {
                counts.functions += 1;
                count_syntax(&f.body, counts);
            }
            PyStmt::ClassDef(c) => {
                counts.classes += 1;
                count_syntax(&c.body, counts);
            }
            PyStmt::If(i) => {
                counts.branches += 1;
                count_syntax(&i.body, counts);
                count_syntax(&i.orelse, counts);
            }
            PyStmt::While(w) => {
                counts.branches += 1;
                count_syntax(&w.body, counts);
                count_syntax(&w.orelse, counts);
            }
            PyStmt::For(f) => {
                counts.branches += 1;
                count_syntax(&f.body, counts);
                count_syntax(&f.orelse, counts);
            }
            PyStmt::AsyncFor(f) => {
                counts.branches += 1;
                count_syntax(&f.body, counts);
                count_syntax(&f.orelse, counts);
            }
            PyStmt::With(w) => count_syntax(&w.body, counts),
            PyStmt::AsyncWith(w) => count_syntax(&w.body, counts),
            PyStmt::Try(t) => {
                count_syntax(&t.body, counts);
                for ast::ExceptHandler::ExceptHandler(h) in &t.handlers {
                    count_syntax(&h.body, counts);
                }
                count_syntax(&t.orelse, counts);
                count_syntax(&t.finalbody, counts);
            }
            PyStmt::TryStar(t) => {
                count_syntax(&t.body, counts);
                for ast::ExceptHandler::ExceptHandler(h) in &t.handlers {
                    count_syntax(&h.body, counts);
                }
                count_syntax(&t.orelse, counts);
                count_syntax(&t.finalbody, counts);
            }
            PyStmt::Match(m) => m.cases.iter().for_each(|c| count_syntax(&c.body, counts)),
            _ => {}
        }
    }
}
