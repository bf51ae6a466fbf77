//! Domain-generic abstract interpretation over cell CFGs.

mod product;

pub use product::{run_analyses, AbstractState, ProductState};

use std::collections::BTreeSet;
use std::fmt::Debug;

use thiserror::Error;

use crate::frontend::{Cfg, EdgeId, Location, Stmt};

/// Join-semilattice with a least element, the contract every abstract
/// domain implements.
///
/// Implementations must keep `join` commutative, associative and
/// idempotent with `bottom` as identity, and `leq(a, a.join(b))` true.
pub trait Lattice: Clone + PartialEq + Debug {
    fn bottom() -> Self;

    fn join(&self, other: &Self) -> Self;

    fn leq(&self, other: &Self) -> bool;

    /// Extrapolation applied at loop heads once the iteration threshold is
    /// reached. Finite-height domains can keep the default.
    fn widen(&self, next: &Self) -> Self {
        self.join(next)
    }

    fn is_bottom(&self) -> bool {
        *self == Self::bottom()
    }
}

/// Abstract statement semantics for one domain. `transfer` must be monotone.
pub trait Analysis {
    type State: Lattice;

    fn transfer(&self, edge: EdgeId, stmt: &Stmt, state: &Self::State) -> Self::State;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolverOptions {
    /// Updates of a loop head before `widen` replaces `join` there.
    pub widen_after: u32,
    /// Bound on location updates per CFG location.
    pub max_updates_per_location: u32,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { widen_after: 8, max_updates_per_location: 10_000 }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolveError {
    #[error("fixpoint iteration did not converge after {updates} updates (location {location})")]
    IterationLimit { location: Location, updates: u64 },
}

/// Per-location least fixpoint of one domain over one CFG.
#[derive(Debug, Clone, PartialEq)]
pub struct Fixpoint<S> {
    /// `None` marks locations no path from the entry reaches.
    pub states: Vec<Option<S>>,
    pub exit: Location,
    pub updates: u64,
}

impl<S: Lattice> Fixpoint<S> {
    pub fn at(&self, loc: Location) -> S {
        self.states[loc].clone().unwrap_or_else(S::bottom)
    }

    pub fn exit_state(&self) -> S {
        self.at(self.exit)
    }
}

/// Solves `X(entry) = init ⊔ …, X(l') = ⊔ transfer(st, X(l))` with a
/// worklist ordered by reverse post-order.
pub fn solve<A: Analysis>(
    cfg: &Cfg,
    init: &A::State,
    analysis: &A,
    opts: SolverOptions,
) -> Result<Fixpoint<A::State>, SolveError> {
    let n = cfg.num_locations;
    let rpo = cfg.reverse_post_order();
    let mut rank = vec![0usize; n];
    for (i, l) in rpo.iter().enumerate() {
        rank[*l] = i;
    }

    let mut preds: Vec<Vec<EdgeId>> = vec![Vec::new(); n];
    let mut succs: Vec<Vec<Location>> = vec![Vec::new(); n];
    let mut loop_head = vec![false; n];
    for (id, e) in cfg.edges.iter().enumerate() {
        preds[e.to].push(id);
        succs[e.from].push(e.to);
        if rank[e.to] <= rank[e.from] {
            loop_head[e.to] = true;
        }
    }

    let mut states: Vec<Option<A::State>> = vec![None; n];
    let mut updates = vec![0u32; n];
    let mut total = 0u64;
    let mut worklist: BTreeSet<usize> = BTreeSet::new();
    worklist.insert(rank[cfg.entry]);

    while let Some(r) = worklist.pop_first() {
        let loc = rpo[r];
        let mut acc: Option<A::State> = (loc == cfg.entry).then(|| init.clone());
        for &eid in &preds[loc] {
            let edge = &cfg.edges[eid];
            if let Some(src) = &states[edge.from] {
                let out = analysis.transfer(eid, &edge.stmt, src);
                acc = Some(match acc {
                    Some(a) => a.join(&out),
                    None => out,
                });
            }
        }
        let Some(mut new) = acc else { continue };

        if let Some(old) = &states[loc] {
            if loop_head[loc] && updates[loc] >= opts.widen_after {
                new = old.widen(&new);
            } else {
                new = old.join(&new);
            }
            if new == *old {
                continue;
            }
        }
        updates[loc] += 1;
        total += 1;
        if updates[loc] > opts.max_updates_per_location {
            return Err(SolveError::IterationLimit { location: loc, updates: total });
        }
        states[loc] = Some(new);
        for &s in &succs[loc] {
            worklist.insert(rank[s]);
        }
    }

    Ok(Fixpoint { states, exit: cfg.exit, updates: total })
}

/// The abstract cell transformer: exit state of the least fixpoint seeded
/// with `init` at the entry.
pub fn cell_transformer<A: Analysis>(
    cfg: &Cfg,
    init: &A::State,
    analysis: &A,
) -> Result<A::State, SolveError> {
    Ok(solve(cfg, init, analysis, SolverOptions::default())?.exit_state())
}
