//! K-bounded what-if exploration with fixpoint-subsumption pruning.
//!
//! A node is a cell together with the state flowing into it. What a node
//! reports and which children it has depend on nothing else, so a node that
//! was already explored (on this path or any other) is pruned. Exploration
//! is breadth-first with children in ascending cell order; every node is
//! therefore first reached at its minimum depth, through the smallest such
//! path in cell order.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};

use super::report::{Metrics, TraceEntry, Warning};
use crate::absint::{AbstractState, ProductState, SolveError};
use crate::analyses::leak::{leak_check, LeakViolation};
use crate::analyses::{Abstraction, AnalysisId, CallClass, KBound, KnowledgeBase, PropagationNode};
use crate::frontend::CellArtifacts;

/// A parse-ok cell as seen by the explorer.
#[derive(Debug, Clone, Copy)]
pub struct ExploreCell<'a> {
    pub id: &'a str,
    pub artifacts: &'a CellArtifacts,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExploreOptions {
    /// Record the output state of every explored node.
    pub trace: bool,
}

#[derive(Debug, Clone, Default)]
pub struct Exploration {
    /// One leak warning per cell: every violation the cell introduces on
    /// some explored path, reported with the shortest such path.
    pub leak_warnings: Vec<Warning>,
    /// Explored code-impact nodes in breadth-first order.
    pub cia_nodes: Vec<PropagationNode>,
    /// Cells whose φ holds for the source's code-impact state, whether or
    /// not K allowed exploring them.
    pub cia_source_successors: Vec<String>,
    pub metrics: Metrics,
    pub trace: Vec<TraceEntry>,
}

type StateId = u32;

struct Node {
    cell: usize,
    input: StateId,
    parent: Option<usize>,
    depth: u32,
}

struct LeakFinding {
    node: usize,
    violations: BTreeMap<(String, String), LeakViolation>,
}

struct Explorer<'a> {
    cells: &'a [ExploreCell<'a>],
    kb: &'a KnowledgeBase,
    opts: ExploreOptions,
    out: Exploration,
    /// Every state seen so far, interned so nodes share them by id.
    states: Vec<AbstractState>,
    ids: HashMap<AbstractState, StateId>,
    transfers: HashMap<(usize, StateId), StateId>,
    nodes: Vec<Node>,
    leaks: BTreeMap<usize, LeakFinding>,
}

/// Explores every φ-connected cell sequence of at most K cells starting at
/// `cells[source]` with `init` as the incoming state. Each component listed
/// in `ids` is explored on its own.
pub fn intercell(
    cells: &[ExploreCell<'_>],
    kb: &KnowledgeBase,
    source: usize,
    init: &ProductState,
    k: KBound,
    ids: &BTreeSet<Abstraction>,
    opts: ExploreOptions,
) -> Result<Exploration, SolveError> {
    let mut ex = Explorer {
        cells,
        kb,
        opts,
        out: Exploration::default(),
        states: Vec::new(),
        ids: HashMap::new(),
        transfers: HashMap::new(),
        nodes: Vec::new(),
        leaks: BTreeMap::new(),
    };
    if !k.is_zero() {
        for abs in ids {
            ex.explore(source, init.get(*abs), k)?;
        }
    }
    let leaks = std::mem::take(&mut ex.leaks);
    ex.out.leak_warnings = leaks.into_iter().map(|(c, f)| ex.leak_warning(c, f)).collect();
    ex.out.metrics.finish();
    Ok(ex.out)
}

impl Explorer<'_> {
    fn intern(&mut self, state: AbstractState) -> StateId {
        if let Some(id) = self.ids.get(&state) {
            return *id;
        }
        let id = self.states.len() as StateId;
        self.states.push(state.clone());
        self.ids.insert(state, id);
        id
    }

    fn state(&self, id: StateId) -> &AbstractState {
        &self.states[id as usize]
    }

    fn transfer(&mut self, c: usize, input: StateId) -> Result<StateId, SolveError> {
        if let Some(out) = self.transfers.get(&(c, input)) {
            return Ok(*out);
        }
        let out = self.state(input).transform(&self.cells[c].artifacts.cfg, self.kb)?;
        let id = self.intern(out);
        self.transfers.insert((c, input), id);
        Ok(id)
    }

    fn explore(&mut self, source: usize, init: AbstractState, k: KBound) -> Result<(), SolveError> {
        let init = self.intern(init);
        let mut seen: HashSet<(usize, StateId)> = HashSet::from([(source, init)]);
        let mut phis: HashMap<(StateId, usize), bool> = HashMap::new();
        let mut queue = VecDeque::from([self.push(source, init, None, 0)]);

        while let Some(n) = queue.pop_front() {
            let (c, input, depth) = (self.nodes[n].cell, self.nodes[n].input, self.nodes[n].depth);
            self.out.metrics.nodes_explored += 1;
            self.out.metrics.max_depth = self.out.metrics.max_depth.max(depth);
            let out = self.transfer(c, input)?;
            self.check(n, input, out);
            if self.opts.trace {
                let mut state = ProductState::default();
                state.set(self.state(out).clone());
                self.out.trace.push(TraceEntry { path: self.path(n), cell: self.cells[c].id.to_string(), state });
            }

            let remaining = k_after(k, depth);
            for j in 0..self.cells.len() {
                self.out.metrics.phi_evaluations += 1;
                let phi = *phis
                    .entry((out, j))
                    .or_insert_with(|| self.states[out as usize].phi(&self.cells[j].artifacts.pre));
                if !phi {
                    continue;
                }
                self.out.metrics.phi_successes += 1;
                if depth == 0 && matches!(self.state(out), AbstractState::CodeImpact(_)) {
                    self.out.cia_source_successors.push(self.cells[j].id.to_string());
                }
                if remaining.is_zero() {
                    self.out.metrics.k_limit_hits += 1;
                } else if !seen.insert((j, out)) {
                    self.out.metrics.subsumption_prunes += 1;
                } else {
                    queue.push_back(self.push(j, out, Some(n), depth + 1));
                }
            }
        }
        Ok(())
    }

    fn push(&mut self, cell: usize, input: StateId, parent: Option<usize>, depth: u32) -> usize {
        self.nodes.push(Node { cell, input, parent, depth });
        self.nodes.len() - 1
    }

    fn path(&self, mut n: usize) -> Vec<String> {
        let mut path = vec![self.cells[self.nodes[n].cell].id.to_string()];
        while let Some(p) = self.nodes[n].parent {
            path.push(self.cells[self.nodes[p].cell].id.to_string());
            n = p;
        }
        path.reverse();
        path
    }

    /// Records what the node found: a propagation entry for code impact
    /// and, for leakage, violations the cell introduces.
    fn check(&mut self, n: usize, input: StateId, out: StateId) {
        let c = self.nodes[n].cell;
        let art = self.cells[c].artifacts;
        match (self.state(input), self.state(out)) {
            (AbstractState::CodeImpact(before), _) => {
                let reads = art.pre.unbound.intersection(&before.changed).cloned().collect();
                let node = PropagationNode {
                    cell: self.cells[c].id.to_string(),
                    depth: self.nodes[n].depth,
                    path: self.path(n),
                    reads,
                };
                self.out.cia_nodes.push(node);
            }
            (AbstractState::DataLeakage(before), AbstractState::DataLeakage(after)) => {
                let old: BTreeSet<(String, String)> =
                    leak_check(before).into_iter().map(|v| (v.train_var, v.test_var)).collect();
                let new: Vec<LeakViolation> = leak_check(after)
                    .into_iter()
                    .filter(|v| !old.contains(&(v.train_var.clone(), v.test_var.clone())))
                    .collect();
                if new.is_empty() {
                    return;
                }
                let finding = self.leaks.entry(c).or_insert_with(|| LeakFinding { node: n, violations: BTreeMap::new() });
                for v in new {
                    finding.violations.entry((v.train_var.clone(), v.test_var.clone())).or_insert(v);
                }
            }
            _ => unreachable!("a transfer keeps the abstraction"),
        }
    }

    fn leak_warning(&self, c: usize, finding: LeakFinding) -> Warning {
        let cell = self.cells[c];
        let path = self.path(finding.node);
        let new: Vec<&LeakViolation> = finding.violations.values().collect();
        let identity = new
            .iter()
            .map(|v| format!("{}/{}", v.train_var, v.test_var))
            .collect::<Vec<_>>()
            .join(",");
        let details = new.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ");
        let vars: BTreeSet<&str> = new.iter().flat_map(|v| [v.train_var.as_str(), v.test_var.as_str()]).collect();
        Warning {
            analysis: AnalysisId::DataLeakage,
            source_cell: path[0].clone(),
            message: format!(
                "possible data leak in cell {} after executing {}: {}",
                cell.id,
                path.join(" → "),
                details
            ),
            line: self.sink_line(cell.artifacts, &vars),
            cell: cell.id.to_string(),
            path,
            identity,
        }
    }

    /// First line calling a train or test function on one of `vars`.
    fn sink_line(&self, art: &CellArtifacts, vars: &BTreeSet<&str>) -> Option<u32> {
        art.ast
            .statements()
            .into_iter()
            .filter(|s| {
                s.calls().iter().any(|call| {
                    matches!(self.kb.classify(call), CallClass::Train | CallClass::Test)
                        && call.arg_names.iter().any(|a| vars.contains(a.as_str()))
                })
            })
            .map(|s| s.line)
            .min()
    }
}

/// Budget left for the children of a node at `depth`.
fn k_after(k: KBound, depth: u32) -> KBound {
    (0..=depth).fold(k, |k, _| k.dec())
}
