//! Notebook characteristics against generator ground truth.

use nbprobe_core::notebook::Notebook;
use nbprobe_core::stats::{characteristics, CharacteristicsTable};
use nbprobe_testkit::corpus::corpus_notebook;
use rand::rngs::StdRng;
use rand::SeedableRng;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-9
}

#[test]
fn characteristics_match_ground_truth() {
    let mut rng = StdRng::seed_from_u64(21);
    let mut rows = Vec::new();
    for i in 0..60 {
        let nb = corpus_notebook(&mut rng, 24);
        let got = characteristics(&Notebook::from_sources(format!("n{i}"), nb.sources.iter().cloned()));
        let t = &nb.truth;
        let ctx = nb.sources.join("\n----\n");
        assert_eq!(got.cells, t.cells);
        assert!(close(got.loc_per_cell, t.loc_per_cell), "loc {} vs {}", got.loc_per_cell, t.loc_per_cell);
        assert!(close(got.branches_per_cell, t.branches_per_cell), "branches\n{ctx}");
        assert_eq!((got.functions, got.classes, got.non_parsing_cells), (t.functions, t.classes, t.non_parsing_cells));
        assert!(close(got.variables_per_cell, t.variables_per_cell), "vars {} vs {}\n{ctx}", got.variables_per_cell, t.variables_per_cell);
        assert!(close(got.unbound_per_cell, t.unbound_per_cell), "unbound {} vs {}\n{ctx}", got.unbound_per_cell, t.unbound_per_cell);
        rows.push(got);
    }
    let table = CharacteristicsTable::of(&rows);
    assert_eq!(table.notebooks, 60);
    assert_eq!(table.cells.mean, 24.0);
    assert_eq!(table.cells.sd, 0.0);
    assert!(table.loc_per_cell.min <= table.loc_per_cell.mean && table.loc_per_cell.mean <= table.loc_per_cell.max);
}
