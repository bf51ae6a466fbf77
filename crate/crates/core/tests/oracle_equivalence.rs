//! The pruned explorer against the exhaustive path enumerator.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use nbprobe_core::analyses::{AnalysisId, KBound, KnowledgeBase};
use nbprobe_core::engine::{Session, WhatIfOptions};
use nbprobe_core::notebook::Notebook;
use nbprobe_testkit::notebooks::{exhaustive, random_notebook};
use rand::rngs::StdRng;
use rand::SeedableRng;

fn engine(sources: &[String], source: usize, k: u32) -> (BTreeMap<usize, String>, BTreeSet<usize>) {
    let session = Session::open(Notebook::from_sources("s", sources), Arc::new(KnowledgeBase::default()));
    let ids = BTreeSet::from([AnalysisId::DataLeakage, AnalysisId::Stale]);
    let src = (source + 1).to_string();
    let report = session.whatif(&src, &ids, Some(KBound::Finite(k)), WhatIfOptions::default()).unwrap();
    let idx = |id: &str| id.parse::<usize>().unwrap() - 1;
    let leaks = report
        .warnings_for(AnalysisId::DataLeakage)
        .map(|w| (idx(&w.cell), w.identity.clone()))
        .collect();
    let stale = report.warnings_for(AnalysisId::Stale).map(|w| idx(&w.cell)).collect();
    (leaks, stale)
}

#[test]
fn pruned_exploration_matches_exhaustive_enumeration() {
    let mut rng = StdRng::seed_from_u64(0x5eed);
    for case in 0..500 {
        let nb = random_notebook(&mut rng);
        let sources = nb.sources();
        for source in 0..nb.cells.len() {
            let oracle = exhaustive(&nb, source, 8);
            let (leaks, stale) = engine(&sources, source, 8);
            assert_eq!(leaks, oracle.leaks, "case {case} source {source}\n{}", sources.join("----\n"));
            assert_eq!(stale, oracle.stale(source), "case {case} source {source}\n{}", sources.join("----\n"));
        }
    }
}
