//! Control-flow graph over lowered statements.
//!
//! Locations are plain indices; every edge carries exactly one statement.
//! Straight-line code chains linearly, `if` produces a diamond and loops get
//! a back edge to their head. Code after `break`/`continue` is kept but has
//! no incoming edge.

use serde::Serialize;

use super::ir::{CellAst, Node, Stmt, StmtKind};

pub type Location = usize;
pub type EdgeId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Edge {
    pub from: Location,
    pub stmt: Stmt,
    pub to: Location,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Cfg {
    pub num_locations: usize,
    pub edges: Vec<Edge>,
    pub entry: Location,
    pub exit: Location,
}

impl Cfg {
    pub fn build(ast: &CellAst) -> Cfg {
        if ast.body.is_empty() {
            return Cfg { num_locations: 1, edges: Vec::new(), entry: 0, exit: 0 };
        }
        let mut b = Builder { num_locations: 2, edges: Vec::new(), loops: Vec::new() };
        b.seq(&ast.body, 0, 1, 0);
        Cfg { num_locations: b.num_locations, edges: b.edges, entry: 0, exit: 1 }
    }

    pub fn successors(&self, loc: Location) -> impl Iterator<Item = (EdgeId, &Edge)> {
        self.edges.iter().enumerate().filter(move |(_, e)| e.from == loc)
    }

    pub fn predecessors(&self, loc: Location) -> impl Iterator<Item = (EdgeId, &Edge)> {
        self.edges.iter().enumerate().filter(move |(_, e)| e.to == loc)
    }

    /// Locations in reverse post-order of a depth-first walk from the entry,
    /// followed by unreachable locations in index order.
    pub fn reverse_post_order(&self) -> Vec<Location> {
        let mut succ: Vec<Vec<Location>> = vec![Vec::new(); self.num_locations];
        for e in &self.edges {
            succ[e.from].push(e.to);
        }
        let mut visited = vec![false; self.num_locations];
        let mut post = Vec::with_capacity(self.num_locations);
        // Iterative DFS: (node, next successor index).
        let mut stack = vec![(self.entry, 0usize)];
        visited[self.entry] = true;
        while let Some((node, idx)) = stack.last_mut() {
            if let Some(&next) = succ[*node].get(*idx) {
                *idx += 1;
                if !visited[next] {
                    visited[next] = true;
                    stack.push((next, 0));
                }
            } else {
                post.push(*node);
                stack.pop();
            }
        }
        post.reverse();
        post.extend((0..self.num_locations).filter(|l| !visited[*l]));
        post
    }

    /// Locations reachable from the entry.
    pub fn reachable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.num_locations];
        let mut stack = vec![self.entry];
        seen[self.entry] = true;
        while let Some(l) = stack.pop() {
            for (_, e) in self.successors(l) {
                if !seen[e.to] {
                    seen[e.to] = true;
                    stack.push(e.to);
                }
            }
        }
        seen
    }
}

struct Builder {
    num_locations: usize,
    edges: Vec<Edge>,
    /// (continue target, break target) for enclosing loops.
    loops: Vec<(Location, Location)>,
}

impl Builder {
    fn fresh(&mut self) -> Location {
        self.num_locations += 1;
        self.num_locations - 1
    }

    fn edge(&mut self, from: Location, stmt: Stmt, to: Location) {
        self.edges.push(Edge { from, stmt, to });
    }

    /// Lays out `nodes` between `from` and `to`.
    fn seq(&mut self, nodes: &[Node], from: Location, to: Location, line: u32) {
        if nodes.is_empty() {
            self.edge(from, Stmt::nop(line), to);
            return;
        }
        let mut cur = from;
        for (i, node) in nodes.iter().enumerate() {
            let next = if i + 1 == nodes.len() { to } else { self.fresh() };
            self.node(node, cur, next);
            cur = next;
        }
    }

    fn node(&mut self, node: &Node, from: Location, to: Location) {
        match node {
            Node::Simple(stmt) => self.edge(from, stmt.clone(), to),
            Node::If { test, then, orelse } => {
                let t = self.fresh();
                self.edge(from, test.clone(), t);
                self.seq(then, t, to, test.line);
                if orelse.is_empty() {
                    self.edge(from, test.clone(), to);
                } else {
                    let e = self.fresh();
                    self.edge(from, test.clone(), e);
                    self.seq(orelse, e, to, test.line);
                }
            }
            Node::While { test, body, orelse } => {
                let head = self.loop_head(from, test.line);
                let b = self.fresh();
                self.edge(head, test.clone(), b);
                self.loops.push((head, to));
                self.seq(body, b, head, test.line);
                self.loops.pop();
                self.loop_exit(head, test.clone(), orelse, to);
            }
            Node::For { bind, body, orelse } => {
                let head = self.loop_head(from, bind.line);
                let b = self.fresh();
                self.edge(head, bind.clone(), b);
                self.loops.push((head, to));
                self.seq(body, b, head, bind.line);
                self.loops.pop();
                self.loop_exit(head, Stmt::nop(bind.line), orelse, to);
            }
            Node::Break { line } => {
                let target = self.loops.last().map_or(to, |l| l.1);
                self.edge(from, Stmt::nop(*line), target);
            }
            Node::Continue { line } => {
                let target = self.loops.last().map_or(to, |l| l.0);
                self.edge(from, Stmt::nop(*line), target);
            }
        }
    }

    /// The cell entry has no predecessors; give loops starting there their
    /// own head so the entry keeps that property.
    fn loop_head(&mut self, from: Location, line: u32) -> Location {
        if from == 0 {
            let head = self.fresh();
            self.edge(from, Stmt::nop(line), head);
            head
        } else {
            from
        }
    }

    fn loop_exit(&mut self, head: Location, leave: Stmt, orelse: &[Node], to: Location) {
        if orelse.is_empty() {
            self.edge(head, leave, to);
        } else {
            let line = leave.line;
            let o = self.fresh();
            self.edge(head, leave, o);
            self.seq(orelse, o, to, line);
        }
    }
}

impl Stmt {
    pub fn is_nop(&self) -> bool {
        matches!(self.kind, StmtKind::Nop)
    }
}
