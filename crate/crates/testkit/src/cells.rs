//! Random structured cells and a path-enumerating unbound-variable oracle.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;

pub const NAMES: [&str; 6] = ["a", "b", "c", "d", "x", "y"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GStmt {
    /// `t = r0 + r1 + … + 1`
    Assign { target: String, reads: Vec<String> },
    /// `t += r`
    AugAssign { target: String, read: String },
    /// `t0, t1 = r0, r1`
    Unpack { targets: [String; 2], reads: [String; 2] },
    /// `r0 + r1` as a statement
    Expr { reads: Vec<String> },
    /// `def name(p):` returning `p + free`
    Def { name: String, param: String, free: String },
    If { cond: String, then: Vec<GStmt>, orelse: Vec<GStmt> },
    While { cond: String, body: Vec<GStmt> },
    For { target: String, iter: String, body: Vec<GStmt> },
}

fn name<R: Rng>(rng: &mut R) -> String {
    NAMES.choose(rng).unwrap().to_string()
}

fn reads<R: Rng>(rng: &mut R, max: usize) -> Vec<String> {
    let n = rng.gen_range(0..=max);
    (0..n).map(|_| name(rng)).collect()
}

fn block<R: Rng>(rng: &mut R, depth: u32, len: usize) -> Vec<GStmt> {
    (0..len).map(|_| stmt(rng, depth)).collect()
}

fn stmt<R: Rng>(rng: &mut R, depth: u32) -> GStmt {
    let compound = depth < 2 && rng.gen_bool(0.3);
    if compound {
        let body_len = rng.gen_range(1..=3);
        match rng.gen_range(0..3) {
            0 => {
                let else_len = rng.gen_range(0..=2);
                GStmt::If { cond: name(rng), then: block(rng, depth + 1, body_len), orelse: block(rng, depth + 1, else_len) }
            }
            1 => GStmt::While { cond: name(rng), body: block(rng, depth + 1, body_len) },
            _ => GStmt::For { target: name(rng), iter: name(rng), body: block(rng, depth + 1, body_len) },
        }
    } else {
        match rng.gen_range(0..10) {
            0..=4 => GStmt::Assign { target: name(rng), reads: reads(rng, 3) },
            5 => GStmt::AugAssign { target: name(rng), read: name(rng) },
            6 => GStmt::Unpack { targets: [name(rng), name(rng)], reads: [name(rng), name(rng)] },
            7 | 8 => {
                let mut r = reads(rng, 2);
                if r.is_empty() {
                    r.push(name(rng));
                }
                GStmt::Expr { reads: r }
            }
            _ => GStmt::Def { name: format!("f_{}", name(rng)), param: name(rng), free: name(rng) },
        }
    }
}

/// A random cell body of 1–6 top-level statements, nested at most twice.
pub fn random_cell<R: Rng>(rng: &mut R) -> Vec<GStmt> {
    let len = rng.gen_range(1..=6);
    block(rng, 0, len)
}

/// A random straight-line cell (no compound statements).
pub fn random_straight_cell<R: Rng>(rng: &mut R) -> Vec<GStmt> {
    let len = rng.gen_range(1..=6);
    (0..len).map(|_| stmt(rng, 2)).collect()
}

pub fn render(body: &[GStmt]) -> String {
    let mut out = String::new();
    render_block(body, 0, &mut out);
    out
}

fn render_block(body: &[GStmt], indent: usize, out: &mut String) {
    let pad = "    ".repeat(indent);
    for s in body {
        match s {
            GStmt::Assign { target, reads } => {
                let mut rhs: Vec<&str> = reads.iter().map(String::as_str).collect();
                rhs.push("1");
                out.push_str(&format!("{pad}{target} = {}\n", rhs.join(" + ")));
            }
            GStmt::AugAssign { target, read } => out.push_str(&format!("{pad}{target} += {read}\n")),
            GStmt::Unpack { targets, reads } => out.push_str(&format!(
                "{pad}{}, {} = {}, {}\n",
                targets[0], targets[1], reads[0], reads[1]
            )),
            GStmt::Expr { reads } => out.push_str(&format!("{pad}{}\n", reads.join(" + "))),
            GStmt::Def { name, param, free } => {
                out.push_str(&format!("{pad}def {name}({param}):\n{pad}    return {param} + {free}\n"));
            }
            GStmt::If { cond, then, orelse } => {
                out.push_str(&format!("{pad}if {cond}:\n"));
                render_body(then, indent + 1, out);
                if !orelse.is_empty() {
                    out.push_str(&format!("{pad}else:\n"));
                    render_body(orelse, indent + 1, out);
                }
            }
            GStmt::While { cond, body } => {
                out.push_str(&format!("{pad}while {cond}:\n"));
                render_body(body, indent + 1, out);
            }
            GStmt::For { target, iter, body } => {
                out.push_str(&format!("{pad}for {target} in {iter}:\n"));
                render_body(body, indent + 1, out);
            }
        }
    }
}

fn render_body(body: &[GStmt], indent: usize, out: &mut String) {
    if body.is_empty() {
        out.push_str(&format!("{}pass\n", "    ".repeat(indent)));
    } else {
        render_block(body, indent, out);
    }
}

/// One executed statement: the names it reads, then the names it binds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    pub uses: Vec<String>,
    pub defs: Vec<String>,
}

fn atom(uses: Vec<String>, defs: Vec<String>) -> Atom {
    Atom { uses, defs }
}

fn simple_atom(s: &GStmt) -> Atom {
    match s {
        GStmt::Assign { target, reads } => atom(reads.clone(), vec![target.clone()]),
        GStmt::AugAssign { target, read } => atom(vec![read.clone(), target.clone()], vec![target.clone()]),
        GStmt::Unpack { targets, reads } => atom(reads.to_vec(), targets.to_vec()),
        GStmt::Expr { reads } => atom(reads.clone(), vec![]),
        GStmt::Def { name, param, free } => {
            let uses = if free != param { vec![free.clone()] } else { vec![] };
            atom(uses, vec![name.clone()])
        }
        _ => unreachable!("compound statements are expanded by `paths`"),
    }
}

/// Every execution path through `body`, with each loop running 0, 1 or 2
/// times. A `for` binds its target from the iterable on each iteration.
pub fn paths(body: &[GStmt]) -> Vec<Vec<Atom>> {
    let mut acc: Vec<Vec<Atom>> = vec![Vec::new()];
    for s in body {
        let alts: Vec<Vec<Atom>> = match s {
            GStmt::If { cond, then, orelse } => {
                let mut out = Vec::new();
                for branch in [then, orelse] {
                    for p in paths(branch) {
                        let mut ev = vec![atom(vec![cond.clone()], vec![])];
                        ev.extend(p);
                        out.push(ev);
                    }
                }
                out
            }
            GStmt::While { cond, body } => {
                let once = paths(body);
                let mut out = Vec::new();
                for iterations in 0..=2 {
                    for combo in unroll(&once, iterations) {
                        let mut ev = Vec::new();
                        for p in combo {
                            ev.push(atom(vec![cond.clone()], vec![]));
                            ev.extend(p);
                        }
                        ev.push(atom(vec![cond.clone()], vec![]));
                        out.push(ev);
                    }
                }
                out
            }
            GStmt::For { target, iter, body } => {
                let once = paths(body);
                let mut out = Vec::new();
                for iterations in 0..=2 {
                    for combo in unroll(&once, iterations) {
                        let mut ev = Vec::new();
                        for p in combo {
                            ev.push(atom(vec![iter.clone()], vec![target.clone()]));
                            ev.extend(p);
                        }
                        out.push(ev);
                    }
                }
                out
            }
            simple => vec![vec![simple_atom(simple)]],
        };
        let mut next = Vec::with_capacity(acc.len() * alts.len());
        for prefix in &acc {
            for alt in &alts {
                let mut p = prefix.clone();
                p.extend(alt.iter().cloned());
                next.push(p);
            }
        }
        acc = next;
    }
    acc
}

/// All sequences of `n` choices from `once`.
fn unroll(once: &[Vec<Atom>], n: usize) -> Vec<Vec<Vec<Atom>>> {
    let mut out: Vec<Vec<Vec<Atom>>> = vec![Vec::new()];
    for _ in 0..n {
        let mut next = Vec::new();
        for prefix in &out {
            for p in once {
                let mut q = prefix.clone();
                q.push(p.clone());
                next.push(q);
            }
        }
        out = next;
    }
    out
}

/// Names read on some execution path before any definition on that path.
pub fn oracle_pre(body: &[GStmt]) -> BTreeSet<String> {
    let mut unbound = BTreeSet::new();
    for path in paths(body) {
        let mut defined = BTreeSet::new();
        for a in path {
            for u in &a.uses {
                if !defined.contains(u) {
                    unbound.insert(u.clone());
                }
            }
            defined.extend(a.defs);
        }
    }
    unbound
}

/// Code-impact along each path (a statement reading a changed name changes
/// everything it binds), joined over all paths.
pub fn oracle_impact(body: &[GStmt], init: &BTreeSet<String>) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for path in paths(body) {
        let mut changed = init.clone();
        for a in path {
            if a.uses.iter().any(|u| changed.contains(u)) {
                changed.extend(a.defs);
            }
        }
        out.extend(changed);
    }
    out
}

/// Whether the cell has no loops, so two unrollings cover every path.
pub fn loop_free(body: &[GStmt]) -> bool {
    body.iter().all(|s| match s {
        GStmt::If { then, orelse, .. } => loop_free(then) && loop_free(orelse),
        GStmt::While { .. } | GStmt::For { .. } => false,
        _ => true,
    })
}

/// Every name occurring in the cell, defined or read.
pub fn all_names(body: &[GStmt]) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for path in paths(body) {
        for a in path {
            out.extend(a.uses);
            out.extend(a.defs);
        }
    }
    out
}

/// Consistent renaming of variable `from` to `to` throughout a cell.
pub fn rename(body: &[GStmt], from: &str, to: &str) -> Vec<GStmt> {
    let r = |s: &String| if s == from { to.to_string() } else { s.clone() };
    let rv = |v: &Vec<String>| v.iter().map(r).collect::<Vec<_>>();
    body.iter()
        .map(|s| match s {
            GStmt::Assign { target, reads } => GStmt::Assign { target: r(target), reads: rv(reads) },
            GStmt::AugAssign { target, read } => GStmt::AugAssign { target: r(target), read: r(read) },
            GStmt::Unpack { targets, reads } => GStmt::Unpack {
                targets: [r(&targets[0]), r(&targets[1])],
                reads: [r(&reads[0]), r(&reads[1])],
            },
            GStmt::Expr { reads } => GStmt::Expr { reads: rv(reads) },
            GStmt::Def { name, param, free } => GStmt::Def { name: name.clone(), param: r(param), free: r(free) },
            GStmt::If { cond, then, orelse } => GStmt::If {
                cond: r(cond),
                then: rename(then, from, to),
                orelse: rename(orelse, from, to),
            },
            GStmt::While { cond, body } => GStmt::While { cond: r(cond), body: rename(body, from, to) },
            GStmt::For { target, iter, body } => {
                GStmt::For { target: r(target), iter: r(iter), body: rename(body, from, to) }
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    fn set(xs: &[&str]) -> BTreeSet<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn oracle_on_hand_written_cells() {
        let assign = |t: &str, r: &[&str]| GStmt::Assign { target: t.into(), reads: r.iter().map(|s| s.to_string()).collect() };
        assert_eq!(oracle_pre(&[assign("a", &[]), assign("b", &["a"])]), set(&[]));
        assert_eq!(oracle_pre(&[assign("y", &["x"]), assign("x", &[])]), set(&["x"]));
        let diamond = vec![
            GStmt::If { cond: "c".into(), then: vec![assign("x", &[])], orelse: vec![] },
            assign("y", &["x"]),
        ];
        assert_eq!(oracle_pre(&diamond), set(&["c", "x"]));
        let loop_ = vec![GStmt::While { cond: "c".into(), body: vec![assign("y", &["x"]), assign("x", &[])] }];
        assert_eq!(oracle_pre(&loop_), set(&["c", "x"]));
    }

    #[test]
    fn rendering_is_indented_python() {
        let body = vec![GStmt::For {
            target: "i".into(),
            iter: "xs".into(),
            body: vec![GStmt::If { cond: "i".into(), then: vec![], orelse: vec![] }],
        }];
        assert_eq!(render(&body), "for i in xs:\n    if i:\n        pass\n");
    }

    #[test]
    fn generator_is_deterministic() {
        let a = random_cell(&mut StdRng::seed_from_u64(7));
        let b = random_cell(&mut StdRng::seed_from_u64(7));
        assert_eq!(a, b);
    }
}
