//! Code impact analysis over the powerset of variable names.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::absint::{Analysis, Lattice};
use crate::frontend::{EdgeId, PreSummary, Stmt, StmtKind};

/// Variables whose value may differ because of a change in the source cell.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize)]
pub struct CiaState {
    pub changed: BTreeSet<String>,
}

impl CiaState {
    pub fn new<I: IntoIterator<Item = S>, S: Into<String>>(names: I) -> Self {
        Self { changed: names.into_iter().map(Into::into).collect() }
    }

    fn touches(&self, names: &BTreeSet<String>) -> bool {
        // Iterate the smaller set.
        if names.len() <= self.changed.len() {
            names.iter().any(|n| self.changed.contains(n))
        } else {
            self.changed.iter().any(|n| names.contains(n))
        }
    }
}

impl Lattice for CiaState {
    fn bottom() -> Self {
        Self::default()
    }

    fn join(&self, other: &Self) -> Self {
        Self { changed: self.changed.union(&other.changed).cloned().collect() }
    }

    fn leq(&self, other: &Self) -> bool {
        self.changed.is_subset(&other.changed)
    }
}

/// Assignments and function definitions add their defined names when any
/// name they read is changed; opaque statements do the same with their
/// stores. Every other statement is the identity.
pub fn cia_transfer(stmt: &Stmt, s: &CiaState) -> CiaState {
    let defined: Vec<&str> = match &stmt.kind {
        StmtKind::Assign { targets, value } if s.touches(&value.uses) => {
            targets.iter().map(|t| t.name.as_str()).collect()
        }
        StmtKind::FunctionDef { name, uses, .. } if s.touches(uses) => vec![name.as_str()],
        StmtKind::Opaque { stores, value, .. } if s.touches(&value.uses) => {
            stores.iter().map(String::as_str).collect()
        }
        _ => return s.clone(),
    };
    let mut out = s.clone();
    out.changed.extend(defined.into_iter().map(str::to_owned));
    out
}

/// φ: the successor reads at least one changed variable before defining it.
pub fn cia_phi(s: &CiaState, pre: &PreSummary) -> bool {
    s.touches(&pre.unbound)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CiaAnalysis;

impl Analysis for CiaAnalysis {
    type State = CiaState;

    fn transfer(&self, _edge: EdgeId, stmt: &Stmt, state: &CiaState) -> CiaState {
        cia_transfer(stmt, state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::absint::cell_transformer;
    use crate::frontend::analyze_cell;

    fn run(init: &[&str], code: &str) -> Vec<String> {
        let a = analyze_cell(code).unwrap();
        let out = cell_transformer(&a.cfg, &CiaState::new(init.iter().copied()), &CiaAnalysis).unwrap();
        out.changed.into_iter().collect()
    }

    #[test]
    fn assignment_rule() {
        assert_eq!(run(&["d"], "x = normalize(d)"), ["d", "x"]);
        assert_eq!(run(&["normalize"], "x = normalize(d)"), ["normalize", "x"]);
        assert!(run(&[], "x = normalize(d)").is_empty());
    }

    #[test]
    fn function_rule() {
        assert_eq!(run(&["y"], "def f(x):\n    return y"), ["f", "y"]);
        assert_eq!(run(&["x"], "def f(x):\n    return 1"), ["x"]);
    }

    #[test]
    fn loop_reaches_fixpoint() {
        assert_eq!(run(&["i"], "while c:\n    i = i + 1\n    j = i"), ["i", "j"]);
        assert_eq!(run(&["a"], "while c:\n    c = b\n    b = a"), ["a", "b", "c"]);
    }

    #[test]
    fn empty_cell_is_identity() {
        assert_eq!(run(&["q"], ""), ["q"]);
    }

    #[test]
    fn phi_examples() {
        let d = CiaState::new(["d"]);
        assert!(cia_phi(&d, &PreSummary::new(["d"])));
        assert!(!cia_phi(&d, &PreSummary::default()));
        assert!(!cia_phi(&CiaState::default(), &PreSummary::new(["x"])));
    }
}
