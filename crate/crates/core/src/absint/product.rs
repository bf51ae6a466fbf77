use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::{solve, Lattice, SolveError, SolverOptions};
use crate::analyses::cia::{cia_phi, CiaAnalysis, CiaState};
use crate::analyses::leak::{leak_phi, LeakAnalysis, LeakState};
use crate::analyses::{Abstraction, KnowledgeBase};
use crate::frontend::{Cfg, PreSummary};

/// A lattice element tagged with its abstraction.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "abstraction", content = "state", rename_all = "kebab-case")]
pub enum AbstractState {
    CodeImpact(CiaState),
    DataLeakage(LeakState),
}

impl AbstractState {
    pub fn bottom(abs: Abstraction) -> Self {
        match abs {
            Abstraction::CodeImpact => AbstractState::CodeImpact(CiaState::bottom()),
            Abstraction::DataLeakage => AbstractState::DataLeakage(LeakState::bottom()),
        }
    }

    pub fn abstraction(&self) -> Abstraction {
        match self {
            AbstractState::CodeImpact(_) => Abstraction::CodeImpact,
            AbstractState::DataLeakage(_) => Abstraction::DataLeakage,
        }
    }

    /// # Panics
    /// When the two states belong to different abstractions.
    pub fn join(&self, other: &Self) -> Self {
        match (self, other) {
            (AbstractState::CodeImpact(a), AbstractState::CodeImpact(b)) => AbstractState::CodeImpact(a.join(b)),
            (AbstractState::DataLeakage(a), AbstractState::DataLeakage(b)) => AbstractState::DataLeakage(a.join(b)),
            _ => panic!("join of {} and {} states", self.abstraction(), other.abstraction()),
        }
    }

    /// # Panics
    /// When the two states belong to different abstractions.
    pub fn leq(&self, other: &Self) -> bool {
        match (self, other) {
            (AbstractState::CodeImpact(a), AbstractState::CodeImpact(b)) => a.leq(b),
            (AbstractState::DataLeakage(a), AbstractState::DataLeakage(b)) => a.leq(b),
            _ => panic!("comparison of {} and {} states", self.abstraction(), other.abstraction()),
        }
    }

    pub fn is_bottom(&self) -> bool {
        match self {
            AbstractState::CodeImpact(s) => s.is_bottom(),
            AbstractState::DataLeakage(s) => s.is_bottom(),
        }
    }

    /// The abstraction's propagation predicate against a successor's pre.
    pub fn phi(&self, pre: &PreSummary) -> bool {
        match self {
            AbstractState::CodeImpact(s) => cia_phi(s, pre),
            AbstractState::DataLeakage(s) => leak_phi(s, pre),
        }
    }

    pub fn as_cia(&self) -> Option<&CiaState> {
        match self {
            AbstractState::CodeImpact(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_leak(&self) -> Option<&LeakState> {
        match self {
            AbstractState::DataLeakage(s) => Some(s),
            _ => None,
        }
    }

    /// Intra-cell fixpoint of this component over `cfg`.
    pub fn transform(&self, cfg: &Cfg, kb: &KnowledgeBase) -> Result<AbstractState, SolveError> {
        let opts = SolverOptions::default();
        Ok(match self {
            AbstractState::CodeImpact(s) => {
                AbstractState::CodeImpact(solve(cfg, s, &CiaAnalysis, opts)?.exit_state())
            }
            AbstractState::DataLeakage(s) => {
                AbstractState::DataLeakage(solve(cfg, s, &LeakAnalysis { kb }, opts)?.exit_state())
            }
        })
    }
}

/// Independent product: one component per abstraction, missing components
/// read as bottom.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize)]
pub struct ProductState {
    pub components: BTreeMap<Abstraction, AbstractState>,
}

impl ProductState {
    pub fn bottom<I: IntoIterator<Item = Abstraction>>(abstractions: I) -> Self {
        Self {
            components: abstractions.into_iter().map(|a| (a, AbstractState::bottom(a))).collect(),
        }
    }

    pub fn get(&self, abs: Abstraction) -> AbstractState {
        self.components.get(&abs).cloned().unwrap_or_else(|| AbstractState::bottom(abs))
    }

    pub fn set(&mut self, state: AbstractState) {
        self.components.insert(state.abstraction(), state);
    }

    pub fn join(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (abs, s) in &other.components {
            let joined = match out.components.get(abs) {
                Some(mine) => mine.join(s),
                None => s.clone(),
            };
            out.components.insert(*abs, joined);
        }
        out
    }

    pub fn leq(&self, other: &Self) -> bool {
        self.components.iter().all(|(abs, s)| s.leq(&other.get(*abs)))
    }

    /// The product restricted to `ids`.
    pub fn restrict(&self, ids: &BTreeSet<Abstraction>) -> Self {
        Self { components: ids.iter().map(|a| (*a, self.get(*a))).collect() }
    }
}

/// `F^A`: applies the cell transformer to each component in `ids`; every
/// other component passes through unchanged.
pub fn run_analyses(
    cfg: &Cfg,
    init: &ProductState,
    ids: &BTreeSet<Abstraction>,
    kb: &KnowledgeBase,
) -> Result<ProductState, SolveError> {
    let mut out = init.clone();
    for abs in ids {
        let next = init.get(*abs).transform(cfg, kb)?;
        out.components.insert(*abs, next);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analyses::leak::{LeakValue, SourceToken};
    use crate::frontend::analyze_cell;

    fn both() -> BTreeSet<Abstraction> {
        Abstraction::ALL.into_iter().collect()
    }

    #[test]
    fn untouched_components_pass_through() {
        let a = analyze_cell("x = normalize(d)").unwrap();
        let mut init = ProductState::bottom(both());
        init.set(AbstractState::CodeImpact(CiaState::new(["d"])));
        let mut leak = LeakState::default();
        leak.set("d", LeakValue { sources: [SourceToken::Var("z".into())].into(), marks: Default::default() });
        init.set(AbstractState::DataLeakage(leak.clone()));

        let kb = KnowledgeBase::default();
        let out = run_analyses(&a.cfg, &init, &BTreeSet::from([Abstraction::CodeImpact]), &kb).unwrap();
        assert_eq!(out.get(Abstraction::DataLeakage), AbstractState::DataLeakage(leak));
        assert_eq!(out.get(Abstraction::CodeImpact), AbstractState::CodeImpact(CiaState::new(["d", "x"])));

        assert_eq!(run_analyses(&a.cfg, &init, &BTreeSet::new(), &kb).unwrap(), init);
    }

    #[test]
    fn both_components_advance_on_a_reset_cell() {
        let a = analyze_cell("scaler = StandardScaler()\nx = scaler.fit_transform(d)").unwrap();
        let mut init = ProductState::bottom(both());
        init.set(AbstractState::CodeImpact(CiaState::new(["d"])));
        let mut leak = LeakState::default();
        leak.set("d", LeakValue { sources: [SourceToken::Literal("data.csv".into())].into(), marks: Default::default() });
        init.set(AbstractState::DataLeakage(leak));

        let out = run_analyses(&a.cfg, &init, &both(), &KnowledgeBase::default()).unwrap();
        assert_eq!(out.get(Abstraction::CodeImpact).as_cia().unwrap(), &CiaState::new(["d", "x"]));
        let leak = out.get(Abstraction::DataLeakage);
        let x = leak.as_leak().unwrap().get("x").unwrap();
        assert_eq!(x.sources, [SourceToken::Var("d".into())].into());
        assert!(x.marks.is_empty());
    }

    #[test]
    #[should_panic]
    fn mixed_joins_panic() {
        let _ = AbstractState::bottom(Abstraction::CodeImpact).join(&AbstractState::bottom(Abstraction::DataLeakage));
    }
}
