//! Small random notebooks over a fixed vocabulary of ML calls, a direct
//! interpreter of the code-impact and leakage rules on that vocabulary, and
//! an exhaustive (unpruned) what-if path enumerator built on it.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::hash::Hash;

use rand::seq::SliceRandom;
use rand::Rng;

pub const VARS: [&str; 4] = ["a", "b", "c", "d"];

/// Every generated cell starts with these imports.
const MODULES: [&str; 2] = ["sk", "pd"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Op {
    /// `t = pd.read_csv('fN.csv')`
    Read { target: String, file: u8 },
    /// `t = sk.scale(a)`
    Reset { target: String, arg: String },
    /// `t = a + b` or `t = 0`
    Combine { target: String, args: Vec<String> },
    /// `t, u = sk.split(a, …)`
    Split { targets: [String; 2], args: Vec<String> },
    /// `sk.fit(a, …)`
    Train { args: Vec<String> },
    /// `sk.predict(a, …)`
    Test { args: Vec<String> },
    /// `t = sk.predict(a, …)`
    Predict { target: String, args: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NStmt {
    Op(Op),
    If { cond: String, then: Vec<Op>, orelse: Vec<Op> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenNotebook {
    pub cells: Vec<Vec<NStmt>>,
}

fn var<R: Rng>(rng: &mut R, nvars: usize) -> String {
    VARS[..nvars].choose(rng).unwrap().to_string()
}

fn args<R: Rng>(rng: &mut R, nvars: usize) -> Vec<String> {
    let n = rng.gen_range(1..=2);
    (0..n).map(|_| var(rng, nvars)).collect()
}

fn op<R: Rng>(rng: &mut R, nvars: usize) -> Op {
    match rng.gen_range(0..10) {
        0 | 1 => Op::Read { target: var(rng, nvars), file: rng.gen_range(1..=2) },
        2 | 3 => Op::Reset { target: var(rng, nvars), arg: var(rng, nvars) },
        4 => {
            let n = rng.gen_range(0..=2);
            Op::Combine { target: var(rng, nvars), args: (0..n).map(|_| var(rng, nvars)).collect() }
        }
        5 => Op::Split { targets: [var(rng, nvars), var(rng, nvars)], args: args(rng, nvars) },
        6 => Op::Train { args: args(rng, nvars) },
        7 => Op::Test { args: args(rng, nvars) },
        _ => Op::Predict { target: var(rng, nvars), args: args(rng, nvars) },
    }
}

/// 2–5 cells over at most four variables; each cell is straight-line or
/// holds a single `if`.
pub fn random_notebook<R: Rng>(rng: &mut R) -> GenNotebook {
    let ncells = rng.gen_range(2..=5);
    let nvars = rng.gen_range(2..=4);
    let cells = (0..ncells)
        .map(|_| {
            let len = rng.gen_range(1..=4);
            let mut body: Vec<NStmt> = (0..len).map(|_| NStmt::Op(op(rng, nvars))).collect();
            if rng.gen_bool(0.3) {
                let at = rng.gen_range(0..=body.len());
                let then = (0..rng.gen_range(1..=2)).map(|_| op(rng, nvars)).collect();
                let orelse = (0..rng.gen_range(0..=2)).map(|_| op(rng, nvars)).collect();
                body.insert(at, NStmt::If { cond: var(rng, nvars), then, orelse });
            }
            body
        })
        .collect();
    GenNotebook { cells }
}

fn render_op(op: &Op, pad: &str) -> String {
    match op {
        Op::Read { target, file } => format!("{pad}{target} = pd.read_csv('f{file}.csv')\n"),
        Op::Reset { target, arg } => format!("{pad}{target} = sk.scale({arg})\n"),
        Op::Combine { target, args } if args.is_empty() => format!("{pad}{target} = 0\n"),
        Op::Combine { target, args } => format!("{pad}{target} = {}\n", args.join(" + ")),
        Op::Split { targets, args } => {
            format!("{pad}{}, {} = sk.split({})\n", targets[0], targets[1], args.join(", "))
        }
        Op::Train { args } => format!("{pad}sk.fit({})\n", args.join(", ")),
        Op::Test { args } => format!("{pad}sk.predict({})\n", args.join(", ")),
        Op::Predict { target, args } => format!("{pad}{target} = sk.predict({})\n", args.join(", ")),
    }
}

impl GenNotebook {
    pub fn sources(&self) -> Vec<String> {
        self.cells
            .iter()
            .map(|body| {
                let mut s = String::from("import sk\nimport pd\n");
                for st in body {
                    match st {
                        NStmt::Op(op) => s.push_str(&render_op(op, "")),
                        NStmt::If { cond, then, orelse } => {
                            s.push_str(&format!("if {cond}:\n"));
                            for op in then {
                                s.push_str(&render_op(op, "    "));
                            }
                            if !orelse.is_empty() {
                                s.push_str("else:\n");
                                for op in orelse {
                                    s.push_str(&render_op(op, "    "));
                                }
                            }
                        }
                    }
                }
                s
            })
            .collect()
    }
}

fn op_reads(op: &Op) -> Vec<&str> {
    match op {
        Op::Read { .. } => vec!["pd"],
        Op::Reset { arg, .. } => vec!["sk", arg],
        Op::Combine { args, .. } => args.iter().map(String::as_str).collect(),
        Op::Split { args, .. } | Op::Train { args } | Op::Test { args } | Op::Predict { args, .. } => {
            std::iter::once("sk").chain(args.iter().map(String::as_str)).collect()
        }
    }
}

fn op_writes(op: &Op) -> Vec<&str> {
    match op {
        Op::Read { target, .. } | Op::Reset { target, .. } | Op::Combine { target, .. } | Op::Predict { target, .. } => {
            vec![target]
        }
        Op::Split { targets, .. } => vec![&targets[0], &targets[1]],
        Op::Train { .. } | Op::Test { .. } => vec![],
    }
}

/// Per-cell facts the oracle needs: unbound reads and all definitions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellFacts {
    pub pre: BTreeSet<String>,
    pub defs: BTreeSet<String>,
}

pub fn cell_facts(body: &[NStmt]) -> CellFacts {
    let mut defined: BTreeSet<String> = MODULES.iter().map(|m| m.to_string()).collect();
    let mut defs = defined.clone();
    let mut pre = BTreeSet::new();
    let mut run = |ops: &[Op], defined: &mut BTreeSet<String>, pre: &mut BTreeSet<String>| {
        for op in ops {
            for r in op_reads(op) {
                if !defined.contains(r) {
                    pre.insert(r.to_string());
                }
            }
            for w in op_writes(op) {
                defined.insert(w.to_string());
                defs.insert(w.to_string());
            }
        }
    };
    for st in body {
        match st {
            NStmt::Op(op) => run(std::slice::from_ref(op), &mut defined, &mut pre),
            NStmt::If { cond, then, orelse } => {
                if !defined.contains(cond) {
                    pre.insert(cond.clone());
                }
                let mut d1 = defined.clone();
                let mut d2 = defined.clone();
                run(then, &mut d1, &mut pre);
                run(orelse, &mut d2, &mut pre);
                defined = d1.intersection(&d2).cloned().collect();
            }
        }
    }
    CellFacts { pre, defs }
}

/// Leakage state: variable to (sources, marks). Sources are `v:name` or
/// `l:literal`; marks are `'r'` (train) and `'s'` (test).
pub type Leak = BTreeMap<String, (BTreeSet<String>, BTreeSet<char>)>;

fn leak_join(a: &Leak, b: &Leak) -> Leak {
    let mut out = a.clone();
    for (k, (s, m)) in b {
        let e = out.entry(k.clone()).or_default();
        e.0.extend(s.iter().cloned());
        e.1.extend(m.iter().copied());
    }
    out
}

fn lookup(env: &Leak, vars: &[&str]) -> (BTreeSet<String>, BTreeSet<char>) {
    let mut out = (BTreeSet::new(), BTreeSet::new());
    for v in vars {
        if let Some((s, m)) = env.get(*v) {
            out.0.extend(s.iter().cloned());
            out.1.extend(m.iter().copied());
        }
    }
    out
}

fn mark(env: &mut Leak, vars: &[String], m: char) {
    for v in vars {
        env.entry(v.clone()).or_default().1.insert(m);
    }
}

fn leak_op(env: &mut Leak, op: &Op) {
    match op {
        Op::Train { args } => mark(env, args, 'r'),
        Op::Test { args } => mark(env, args, 's'),
        Op::Reset { target, arg } => {
            env.insert(target.clone(), (BTreeSet::from([format!("v:{arg}")]), BTreeSet::new()));
        }
        Op::Predict { target, args } => {
            mark(env, args, 's');
            let (sources, _) = lookup(env, &op_reads(op));
            if sources.is_empty() {
                env.remove(target);
            } else {
                env.insert(target.clone(), (sources, BTreeSet::new()));
            }
        }
        Op::Read { target, file } => {
            let e = env.entry(target.clone()).or_default();
            e.0.insert(format!("l:f{file}.csv"));
        }
        Op::Combine { .. } | Op::Split { .. } => {
            let (s, m) = lookup(env, &op_reads(op));
            for t in op_writes(op) {
                let mut e = env.get(t).cloned().unwrap_or_default();
                e.0.extend(s.iter().cloned());
                e.1.extend(m.iter().copied());
                if !e.0.is_empty() || !e.1.is_empty() {
                    env.insert(t.to_string(), e);
                }
            }
        }
    }
}

fn leak_block(env: &mut Leak, ops: &[Op]) {
    for op in ops {
        leak_op(env, op);
    }
}

pub fn leak_cell(body: &[NStmt], input: &Leak) -> Leak {
    let mut env = input.clone();
    for m in MODULES {
        env.remove(m);
    }
    for st in body {
        match st {
            NStmt::Op(op) => leak_op(&mut env, op),
            NStmt::If { then, orelse, .. } => {
                let mut e1 = env.clone();
                let mut e2 = env.clone();
                leak_block(&mut e1, then);
                leak_block(&mut e2, orelse);
                env = leak_join(&e1, &e2);
            }
        }
    }
    env
}

/// Train/test variable pairs sharing a source.
pub fn leak_pairs(env: &Leak) -> BTreeSet<(String, String)> {
    let mut out = BTreeSet::new();
    for (x, (sx, mx)) in env {
        if !mx.contains(&'r') {
            continue;
        }
        for (y, (sy, my)) in env {
            if my.contains(&'s') && !sx.is_disjoint(sy) {
                out.insert((x.clone(), y.clone()));
            }
        }
    }
    out
}

fn leak_phi(env: &Leak, pre: &BTreeSet<String>) -> bool {
    !pre.is_empty() && pre.iter().all(|v| env.contains_key(v))
}

pub fn cia_cell(body: &[NStmt], input: &BTreeSet<String>) -> BTreeSet<String> {
    let mut s = input.clone();
    let step = |s: &mut BTreeSet<String>, op: &Op| {
        if op_reads(op).iter().any(|r| s.contains(*r)) {
            s.extend(op_writes(op).into_iter().map(str::to_string));
        }
    };
    for st in body {
        match st {
            NStmt::Op(op) => step(&mut s, op),
            NStmt::If { then, orelse, .. } => {
                let mut s1 = s.clone();
                let mut s2 = s.clone();
                for op in then {
                    step(&mut s1, op);
                }
                for op in orelse {
                    step(&mut s2, op);
                }
                s = s1.union(&s2).cloned().collect();
            }
        }
    }
    s
}

/// What the exhaustive enumerator found for one source cell. Cells are
/// 0-based indices.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OracleResult {
    /// Per cell, every train/test pair it newly introduces on some path,
    /// as sorted `train/test` joined by commas.
    pub leaks: BTreeMap<usize, String>,
    /// Minimum depth at which each cell appears in the code-impact tree.
    pub cia_depth: BTreeMap<usize, usize>,
    pub nodes: usize,
}

impl OracleResult {
    /// Cells first reached at depth ≥ 2, excluding the source.
    pub fn stale(&self, source: usize) -> BTreeSet<usize> {
        self.cia_depth
            .iter()
            .filter(|(c, d)| **d >= 2 && **c != source)
            .map(|(c, _)| *c)
            .collect()
    }
}

/// A state domain whose values are interned so paths can be memoized on
/// small integer keys.
trait Domain {
    type S: Clone + Eq + Hash;
    fn transfer(&self, cell: usize, input: &Self::S) -> Self::S;
    fn phi(&self, state: &Self::S, cell: usize) -> bool;
}

struct LeakDomain<'a> {
    nb: &'a GenNotebook,
    facts: &'a [CellFacts],
}

impl Domain for LeakDomain<'_> {
    type S = Leak;
    fn transfer(&self, cell: usize, input: &Leak) -> Leak {
        leak_cell(&self.nb.cells[cell], input)
    }
    fn phi(&self, state: &Leak, cell: usize) -> bool {
        leak_phi(state, &self.facts[cell].pre)
    }
}

struct CiaDomain<'a> {
    nb: &'a GenNotebook,
    facts: &'a [CellFacts],
}

impl Domain for CiaDomain<'_> {
    type S = BTreeSet<String>;
    fn transfer(&self, cell: usize, input: &Self::S) -> Self::S {
        cia_cell(&self.nb.cells[cell], input)
    }
    fn phi(&self, state: &Self::S, cell: usize) -> bool {
        !state.is_disjoint(&self.facts[cell].pre)
    }
}

/// Per-node observation, merged over the subtree.
trait Finding: Clone + Default {
    fn merge(&mut self, other: &Self);
}

impl Finding for LeakFound {
    fn merge(&mut self, other: &Self) {
        self.extend(other.iter().cloned());
    }
}

impl Finding for BTreeMap<usize, usize> {
    fn merge(&mut self, other: &Self) {
        for (c, d) in other {
            let e = self.entry(*c).or_insert(*d);
            *e = (*e).min(*d);
        }
    }
}

struct Enumerator<D: Domain, F> {
    dom: D,
    ncells: usize,
    levels: usize,
    ids: HashMap<D::S, u32>,
    vals: Vec<D::S>,
    transfer: HashMap<(usize, u32), u32>,
    memo: HashMap<(usize, u32, usize), (F, usize)>,
    observe: fn(&D::S, &D::S, usize, usize) -> F,
}

impl<D: Domain, F: Finding> Enumerator<D, F> {
    fn new(dom: D, ncells: usize, levels: usize, observe: fn(&D::S, &D::S, usize, usize) -> F) -> Self {
        Enumerator {
            dom,
            ncells,
            levels,
            ids: HashMap::new(),
            vals: Vec::new(),
            transfer: HashMap::new(),
            memo: HashMap::new(),
            observe,
        }
    }

    fn intern(&mut self, s: D::S) -> u32 {
        if let Some(id) = self.ids.get(&s) {
            return *id;
        }
        let id = self.vals.len() as u32;
        self.vals.push(s.clone());
        self.ids.insert(s, id);
        id
    }

    /// Findings and path count of every path extending the current one.
    /// Paths sharing a cell, incoming state and depth have identical
    /// extensions, so those are computed once.
    fn visit(&mut self, c: usize, input: u32, depth: usize) -> (F, usize) {
        let key = (c, input, depth);
        if let Some(hit) = self.memo.get(&key) {
            return hit.clone();
        }
        let out = match self.transfer.get(&(c, input)) {
            Some(id) => *id,
            None => {
                let o = self.dom.transfer(c, &self.vals[input as usize]);
                let id = self.intern(o);
                self.transfer.insert((c, input), id);
                id
            }
        };
        let mut found = (self.observe)(&self.vals[input as usize], &self.vals[out as usize], c, depth);
        let mut nodes = 1;
        if depth + 1 < self.levels {
            for j in 0..self.ncells {
                if self.dom.phi(&self.vals[out as usize], j) {
                    let (f, n) = self.visit(j, out, depth + 1);
                    found.merge(&f);
                    nodes += n;
                }
            }
        }
        self.memo.insert(key, (found.clone(), nodes));
        (found, nodes)
    }

    fn run(&mut self, source: usize, init: D::S) -> (F, usize) {
        let sigma = self.intern(init);
        self.visit(source, sigma, 0)
    }
}

type LeakFound = BTreeSet<(usize, (String, String))>;

fn observe_leak(input: &Leak, out: &Leak, c: usize, _depth: usize) -> LeakFound {
    let old = leak_pairs(input);
    leak_pairs(out).into_iter().filter(|p| !old.contains(p)).map(|p| (c, p)).collect()
}

fn observe_cia(_: &BTreeSet<String>, _: &BTreeSet<String>, c: usize, depth: usize) -> BTreeMap<usize, usize> {
    BTreeMap::from([(c, depth)])
}

/// Enumerates every φ-connected path from `source` of at most `levels`
/// cells (source included), each run as a plain sequence of cell
/// transformers.
/// Leakage starts from an empty state; code impact from the source's
/// definitions.
pub fn exhaustive(nb: &GenNotebook, source: usize, levels: usize) -> OracleResult {
    let facts: Vec<CellFacts> = nb.cells.iter().map(|c| cell_facts(c)).collect();
    let n = nb.cells.len();
    let seed = facts[source].defs.clone();
    let (found, n1) =
        Enumerator::new(LeakDomain { nb, facts: &facts }, n, levels, observe_leak).run(source, Leak::new());
    let mut by_cell: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for (c, (x, y)) in found {
        by_cell.entry(c).or_default().push(format!("{x}/{y}"));
    }
    let leaks = by_cell.into_iter().map(|(c, pairs)| (c, pairs.join(","))).collect();
    let (cia_depth, n2) = Enumerator::new(CiaDomain { nb, facts: &facts }, n, levels, observe_cia).run(source, seed);
    OracleResult { leaks, cia_depth, nodes: n1 + n2 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    fn s(v: &str) -> String {
        v.to_string()
    }

    #[test]
    fn renders_importing_prefix() {
        let nb = GenNotebook {
            cells: vec![vec![
                NStmt::Op(Op::Read { target: s("a"), file: 1 }),
                NStmt::If {
                    cond: s("a"),
                    then: vec![Op::Train { args: vec![s("a")] }],
                    orelse: vec![],
                },
            ]],
        };
        assert_eq!(nb.sources()[0], "import sk\nimport pd\na = pd.read_csv('f1.csv')\nif a:\n    sk.fit(a)\n");
    }

    #[test]
    fn facts_use_must_definitions_after_branches() {
        let body = vec![
            NStmt::If { cond: s("c"), then: vec![Op::Combine { target: s("a"), args: vec![] }], orelse: vec![] },
            NStmt::Op(Op::Reset { target: s("b"), arg: s("a") }),
        ];
        let f = cell_facts(&body);
        assert_eq!(f.pre, BTreeSet::from([s("a"), s("c")]));
        assert!(f.defs.contains("sk") && f.defs.contains("b"));
    }

    #[test]
    fn two_cell_leak_is_found() {
        let nb = GenNotebook {
            cells: vec![
                vec![
                    NStmt::Op(Op::Read { target: s("a"), file: 1 }),
                    NStmt::Op(Op::Reset { target: s("b"), arg: s("a") }),
                ],
                vec![
                    NStmt::Op(Op::Split { targets: [s("c"), s("d")], args: vec![s("b")] }),
                    NStmt::Op(Op::Train { args: vec![s("c")] }),
                    NStmt::Op(Op::Test { args: vec![s("d")] }),
                ],
            ],
        };
        let r = exhaustive(&nb, 0, 8);
        assert_eq!(r.leaks, BTreeMap::from([(1, s("c/d"))]));
    }

    #[test]
    fn generated_notebooks_stay_small() {
        let mut rng = StdRng::seed_from_u64(1);
        for _ in 0..50 {
            let nb = random_notebook(&mut rng);
            assert!((2..=5).contains(&nb.cells.len()));
            exhaustive(&nb, 0, 8);
        }
    }
}
