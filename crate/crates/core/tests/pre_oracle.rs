//! Unbound-variable summaries against path enumeration over random cells.

use std::collections::BTreeSet;

use nbprobe_core::frontend::analyze_cell;
use nbprobe_testkit::cells::{all_names, oracle_pre, random_cell, random_straight_cell, rename, render};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

fn engine_pre(code: &str) -> BTreeSet<String> {
    analyze_cell(code).unwrap_or_else(|e| panic!("{e}\n{code}")).pre.unbound
}

#[test]
fn matches_path_enumeration_on_two_thousand_cells() {
    let mut rng = StdRng::seed_from_u64(11);
    for _ in 0..2000 {
        let body = random_cell(&mut rng);
        let code = render(&body);
        assert_eq!(engine_pre(&code), oracle_pre(&body), "\n{code}");
    }
}

#[test]
fn straight_line_cells() {
    let mut rng = StdRng::seed_from_u64(12);
    for _ in 0..500 {
        let body = random_straight_cell(&mut rng);
        let code = render(&body);
        assert_eq!(engine_pre(&code), oracle_pre(&body), "\n{code}");
    }
}

proptest! {
    #[test]
    fn pre_is_a_subset_of_uses(seed in any::<u64>()) {
        let body = random_cell(&mut StdRng::seed_from_u64(seed));
        let art = analyze_cell(&render(&body)).unwrap();
        prop_assert!(art.pre.unbound.is_subset(&art.def_use.uses));
    }

    #[test]
    fn renaming_commutes_with_pre(seed in any::<u64>(), pick in 0usize..6) {
        let body = random_cell(&mut StdRng::seed_from_u64(seed));
        let names: Vec<String> = all_names(&body).into_iter().collect();
        prop_assume!(!names.is_empty());
        let from = &names[pick % names.len()];
        let renamed = rename(&body, from, "fresh_name");
        let expected: BTreeSet<String> = engine_pre(&render(&body))
            .into_iter()
            .map(|v| if &v == from { "fresh_name".to_string() } else { v })
            .collect();
        prop_assert_eq!(engine_pre(&render(&renamed)), expected);
    }
}
