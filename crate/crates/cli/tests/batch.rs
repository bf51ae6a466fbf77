use std::collections::BTreeSet;
use std::path::Path;
use std::process::{Command, Stdio};
use std::sync::Arc;
use std::io::Write;

use nbprobe::batch::{analyze_dir, stats_dir, write_reports, BatchOptions};
use nbprobe::sarif::sarif;
use nbprobe::protocol::WireResponse;
use nbprobe_core::analyses::{AnalysisId, KBound, KnowledgeBase};
use nbprobe_testkit::corpus::corpus_notebook;
use nbprobe_testkit::ipynb::ipynb_string;
use nbprobe_testkit::LEAKY_PIPELINE;
use rand::rngs::StdRng;
use rand::SeedableRng;

fn write_nb(dir: &Path, name: &str, sources: &[impl AsRef<str>]) {
    std::fs::write(dir.join(name), ipynb_string(sources)).unwrap();
}

fn opts(analysis: AnalysisId, k: Option<KBound>, sweep: bool) -> BatchOptions {
    BatchOptions { analyses: BTreeSet::from([analysis]), k, sweep, source: None }
}

fn kb() -> Arc<KnowledgeBase> {
    Arc::new(KnowledgeBase::default())
}

#[test]
fn stale_sweep_flags_cell_four_only_from_cell_one() {
    // Cells 2 and 3 both define x, which reaches cell 5 through cell 4.
    let dir = tempfile::tempdir().unwrap();
    write_nb(dir.path(), "pipeline.ipynb", &LEAKY_PIPELINE);
    let out = analyze_dir(dir.path(), kb(), &opts(AnalysisId::Stale, Some(KBound::Finite(3)), true)).unwrap();
    let runs = &out.notebooks[0].runs;
    assert_eq!(runs.len(), 5);
    let flagging: Vec<(&str, Vec<&str>)> = runs
        .iter()
        .filter(|r| !r.report.warnings.is_empty())
        .map(|r| (r.source.as_str(), r.report.warnings.iter().map(|w| w.cell.as_str()).collect()))
        .collect();
    let cell_four: Vec<&str> = flagging.iter().filter(|(_, cells)| cells.contains(&"4")).map(|(s, _)| *s).collect();
    assert_eq!(cell_four, ["1"]);
    assert_eq!(flagging, [("1", vec!["4"]), ("2", vec!["5"]), ("3", vec!["5"])]);
    let s = &out.stats.per_analysis[&AnalysisId::Stale];
    assert_eq!((s.whatifs, s.warnings), (5, 3));
    assert!((0.0..=1.0).contains(&s.propagation_rate));
}

#[test]
fn empty_directory_gives_empty_stats() {
    let dir = tempfile::tempdir().unwrap();
    let out = analyze_dir(dir.path(), kb(), &opts(AnalysisId::DataLeakage, None, true)).unwrap();
    assert_eq!(out.stats.notebooks, 0);
    assert!(out.notebooks.is_empty() && out.stats.unreadable.is_empty());
    assert_eq!(out.stats.per_analysis[&AnalysisId::DataLeakage].whatifs, 0);
    let (table, bad) = stats_dir(dir.path()).unwrap();
    assert_eq!((table.notebooks, bad.len()), (0, 0));
}

#[test]
fn unreadable_notebooks_are_skipped_and_counted() {
    let dir = tempfile::tempdir().unwrap();
    write_nb(dir.path(), "good.ipynb", &LEAKY_PIPELINE);
    std::fs::write(dir.path().join("bad.ipynb"), "{ not json").unwrap();
    std::fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
    let out = analyze_dir(dir.path(), kb(), &opts(AnalysisId::DataLeakage, None, false)).unwrap();
    assert_eq!(out.stats.notebooks, 1);
    assert_eq!(out.stats.unreadable.len(), 1);
    assert!(out.stats.unreadable[0].path.ends_with("bad.ipynb"));
    let (table, bad) = stats_dir(dir.path()).unwrap();
    assert_eq!((table.notebooks, bad.len()), (1, 1));
}

#[test]
fn non_parsing_cells_are_not_sources() {
    let dir = tempfile::tempdir().unwrap();
    write_nb(dir.path(), "nb.ipynb", &["a = 1", "b = (", "c = a + 1"]);
    let out = analyze_dir(dir.path(), kb(), &opts(AnalysisId::Stale, None, true)).unwrap();
    let sources: Vec<&str> = out.notebooks[0].runs.iter().map(|r| r.source.as_str()).collect();
    assert_eq!(sources, ["1", "3"]);
}

#[test]
fn stats_for_the_worked_notebook_and_edge_cases() {
    let dir = tempfile::tempdir().unwrap();
    write_nb(dir.path(), "pipeline.ipynb", &LEAKY_PIPELINE);
    let (table, _) = stats_dir(dir.path()).unwrap();
    assert_eq!((table.cells.mean, table.classes.mean), (5.0, 0.0));

    let dir = tempfile::tempdir().unwrap();
    write_nb(dir.path(), "empty.ipynb", &[""]);
    let (table, _) = stats_dir(dir.path()).unwrap();
    assert_eq!(table.loc_per_cell.mean, 0.0);
    assert!(table.rows().iter().all(|(_, s)| s.mean.is_finite() && s.sd.is_finite()));
}

#[test]
fn stats_match_generator_ground_truth() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = StdRng::seed_from_u64(11);
    let corpus: Vec<_> = (0..20).map(|_| corpus_notebook(&mut rng, 12)).collect();
    for (i, nb) in corpus.iter().enumerate() {
        write_nb(dir.path(), &format!("nb{i:02}.ipynb"), &nb.sources);
    }
    let (table, _) = stats_dir(dir.path()).unwrap();
    let mean = |f: fn(&nbprobe_testkit::corpus::Truth) -> f64| corpus.iter().map(|n| f(&n.truth)).sum::<f64>() / 20.0;
    let close = |a: f64, b: f64| (a - b).abs() < 1e-9;
    assert!(close(table.loc_per_cell.mean, mean(|t| t.loc_per_cell)));
    assert!(close(table.branches_per_cell.mean, mean(|t| t.branches_per_cell)));
    assert!(close(table.functions.mean, mean(|t| t.functions as f64)));
    assert!(close(table.classes.mean, mean(|t| t.classes as f64)));
    assert!(close(table.non_parsing_cells.mean, mean(|t| t.non_parsing_cells as f64)));
    assert!(close(table.variables_per_cell.mean, mean(|t| t.variables_per_cell)));
    assert!(close(table.unbound_per_cell.mean, mean(|t| t.unbound_per_cell)));
}

#[test]
fn reports_and_sarif_are_written() {
    let dir = tempfile::tempdir().unwrap();
    write_nb(dir.path(), "pipeline.ipynb", &LEAKY_PIPELINE);
    let out = analyze_dir(dir.path(), kb(), &opts(AnalysisId::DataLeakage, Some(KBound::Infinite), false)).unwrap();
    let target = dir.path().join("out");
    write_reports(&target, &out).unwrap();
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(target.join("pipeline.report.json")).unwrap()).unwrap();
    assert_eq!(report["runs"][0]["report"]["warnings"][0]["cell"], "5");
    let stats: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(target.join("stats.json")).unwrap()).unwrap();
    assert_eq!(stats["notebooks"], 1);

    let warnings = &out.notebooks[0].runs[0].report.warnings;
    let log = sarif([("pipeline.ipynb", warnings.as_slice())]);
    assert_eq!(log["version"], "2.1.0");
    let result = &log["runs"][0]["results"][0];
    assert_eq!(result["ruleId"], "data-leakage");
    assert_eq!(result["properties"]["cell"], "5");
    assert_eq!(result["properties"]["cellLine"], 4);
    assert_eq!(result["locations"][0]["physicalLocation"]["artifactLocation"]["uri"], "pipeline.ipynb");
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nbprobe"))
}

#[test]
fn binary_analyze_stats_and_stdio() {
    let dir = tempfile::tempdir().unwrap();
    write_nb(dir.path(), "pipeline.ipynb", &LEAKY_PIPELINE);
    let sarif_file = dir.path().join("out.sarif");
    let out = bin()
        .args(["analyze", "--analysis", "data-leakage", "--k", "inf", "--dir"])
        .arg(dir.path())
        .arg("--sarif")
        .arg(&sarif_file)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("cell 5:4 [data-leakage]"), "{text}");
    assert!(sarif_file.exists());

    let out = bin().args(["stats", "--dir"]).arg(dir.path()).output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("1 notebooks") && text.contains("Unbound variables per cell"), "{text}");

    let bad = bin().args(["analyze", "--analysis", "bogus", "--dir"]).arg(dir.path()).output().unwrap();
    assert!(!bad.status.success());

    let mut child = bin().args(["serve", "--stdio"]).stdin(Stdio::piped()).stdout(Stdio::piped()).spawn().unwrap();
    {
        let stdin = child.stdin.as_mut().unwrap();
        let cells = serde_json::to_string(&LEAKY_PIPELINE).unwrap();
        writeln!(stdin, r#"{{"session":"s","event":"open","cells":{cells}}}"#).unwrap();
        writeln!(stdin, r#"{{"session":"s","event":"whatif","cell_id":"1","analyses":["data-leakage"],"k":"inf"}}"#).unwrap();
    }
    let out = child.wait_with_output().unwrap();
    let replies: Vec<WireResponse> =
        String::from_utf8(out.stdout).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(replies[1].report().unwrap().warnings[0].path, ["1", "2", "4", "5"]);
}

#[test]
fn binary_reads_the_knowledge_base_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    write_nb(dir.path(), "pipeline.ipynb", &LEAKY_PIPELINE);
    let kb_file = dir.path().join("kb.toml");
    std::fs::write(&kb_file, "reset = []\ntrain = []\ntest = []\ningest = []\n").unwrap();
    let out = bin()
        .env("NBPROBE_KB", &kb_file)
        .args(["analyze", "--analysis", "data-leakage", "--dir"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(!String::from_utf8(out.stdout).unwrap().contains("[data-leakage] possible"));

    let out = bin().env("NBPROBE_KB", dir.path().join("missing.toml")).args(["stats", "--dir"]).arg(dir.path()).output().unwrap();
    assert!(!out.status.success());
}
