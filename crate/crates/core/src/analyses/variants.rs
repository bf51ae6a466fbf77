//! Isolated, fresh and stale reports derived from a code-impact exploration.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::frontend::{DefUseSets, PreSummary};

/// One explored node of a code-impact propagation tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PropagationNode {
    pub cell: String,
    /// Source cell is depth 0; its φ-successors are depth 1.
    pub depth: u32,
    /// Cell sequence from the source to `cell`, both included.
    pub path: Vec<String>,
    /// Changed variables the cell reads before defining them.
    pub reads: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CiaVariantReport {
    pub cell: String,
    pub path: Vec<String>,
    pub vars: BTreeSet<String>,
    pub message: String,
}

/// Cells whose shallowest occurrence in the tree is at depth 2 or more: some
/// impacted intermediate cell lies between them and the source. The path is
/// the first one explored at that depth.
pub fn stale_cells(source: &str, nodes: &[PropagationNode]) -> Vec<CiaVariantReport> {
    let mut best: BTreeMap<&str, &PropagationNode> = BTreeMap::new();
    for n in nodes {
        match best.get(n.cell.as_str()) {
            Some(b) if b.depth <= n.depth => {}
            _ => {
                best.insert(&n.cell, n);
            }
        }
    }
    let mut out: Vec<CiaVariantReport> = best
        .into_values()
        .filter(|n| n.depth >= 2 && n.cell != source)
        .map(|n| {
            let via = n.path[1..n.path.len() - 1].join(" → ");
            CiaVariantReport {
                cell: n.cell.clone(),
                path: n.path.clone(),
                vars: n.reads.clone(),
                message: format!(
                    "cell {} is stale if run after cell {} without first re-running {}; it reads {}",
                    n.cell,
                    source,
                    via,
                    join(&n.reads)
                ),
            }
        })
        .collect();
    out.sort_by(|a, b| (a.path.len(), &a.path).cmp(&(b.path.len(), &b.path)));
    out
}

/// The source is fresh when no cell it impacts can go stale.
pub fn fresh_cell(source: &str, nodes: &[PropagationNode]) -> Option<CiaVariantReport> {
    if !stale_cells(source, nodes).is_empty() {
        return None;
    }
    let direct: BTreeSet<&str> = nodes
        .iter()
        .filter(|n| n.depth == 1)
        .map(|n| n.cell.as_str())
        .collect();
    let message = if direct.is_empty() {
        format!("cell {source} is fresh: no other cell depends on it")
    } else {
        let cells: Vec<&str> = direct.into_iter().collect();
        format!("cell {source} is fresh: dependent cells {} can run directly after it", cells.join(", "))
    };
    Some(CiaVariantReport {
        cell: source.to_string(),
        path: vec![source.to_string()],
        vars: BTreeSet::new(),
        message,
    })
}

/// The source is isolated when it has no φ-successor besides itself and no
/// other cell defines a variable it reads unbound.
pub fn isolated_cell<'a>(
    source: &str,
    successors: &[String],
    cells: impl IntoIterator<Item = (&'a str, &'a DefUseSets, &'a PreSummary)>,
) -> Option<CiaVariantReport> {
    let outgoing = successors.iter().any(|c| c != source);
    if outgoing {
        return None;
    }
    let mut source_pre = None;
    let mut others = Vec::new();
    for (id, du, pre) in cells {
        if id == source {
            source_pre = Some(pre);
        } else {
            others.push(du);
        }
    }
    let pre = source_pre?;
    let incoming = others.iter().any(|du| du.defs.iter().any(|d| pre.contains(d)));
    if incoming {
        return None;
    }
    Some(CiaVariantReport {
        cell: source.to_string(),
        path: vec![source.to_string()],
        vars: BTreeSet::new(),
        message: format!("cell {source} is isolated: it neither affects nor depends on any other cell"),
    })
}

fn join(vars: &BTreeSet<String>) -> String {
    vars.iter().map(String::as_str).collect::<Vec<_>>().join(", ")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn node(cell: &str, path: &[&str], reads: &[&str]) -> PropagationNode {
        PropagationNode {
            cell: cell.into(),
            depth: path.len() as u32 - 1,
            path: path.iter().map(|s| s.to_string()).collect(),
            reads: reads.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn stale_uses_shallowest_depth() {
        let nodes = vec![
            node("1", &["1"], &[]),
            node("2", &["1", "2"], &["d"]),
            node("4", &["1", "2", "4"], &["x"]),
            node("5", &["1", "2", "4", "5"], &["x_train"]),
            node("2", &["1", "2", "2"], &["d"]),
        ];
        let stale = stale_cells("1", &nodes);
        let cells: Vec<&str> = stale.iter().map(|s| s.cell.as_str()).collect();
        assert_eq!(cells, ["4", "5"]);
        assert_eq!(stale[0].path, ["1", "2", "4"]);
        assert!(fresh_cell("1", &nodes).is_none());
    }

    #[test]
    fn chain_of_two_is_fresh() {
        let nodes = vec![node("1", &["1"], &[]), node("2", &["1", "2"], &["a"])];
        assert!(stale_cells("1", &nodes).is_empty());
        assert!(fresh_cell("1", &nodes).is_some());
    }

    #[test]
    fn isolated_needs_both_directions_empty() {
        let du_a = DefUseSets { defs: BTreeSet::from(["a".into()]), uses: BTreeSet::new() };
        let du_b = DefUseSets { defs: BTreeSet::from(["b".into()]), uses: BTreeSet::from(["q".into()]) };
        let pre_empty = PreSummary::default();
        let pre_q = PreSummary::new(["q"]);
        let own = ["1".to_string()];

        let cells = [("1", &du_a, &pre_empty), ("2", &du_b, &pre_q)];
        assert!(isolated_cell("1", &own, cells).is_some());

        let pre_b = PreSummary::new(["b"]);
        let cells = [("1", &du_a, &pre_b), ("2", &du_b, &pre_q)];
        assert!(isolated_cell("1", &own, cells).is_none());

        let cells = [("1", &du_a, &pre_empty), ("2", &du_b, &pre_q)];
        assert!(isolated_cell("1", &["1".to_string(), "2".to_string()], cells).is_none());
    }
}
