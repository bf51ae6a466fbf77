//! SARIF 2.1.0 rendering of what-if warnings for CI tools.

use nbprobe_core::analyses::AnalysisId;
use nbprobe_core::engine::Warning;
use serde_json::{json, Value};

fn rule(id: AnalysisId) -> Value {
    let text = match id {
        AnalysisId::DataLeakage => "Train and test data may share a source",
        AnalysisId::Stale => "Cell may read stale values after a change",
        AnalysisId::Fresh => "Changed cell leaves no dependent cell stale",
        AnalysisId::Isolated => "Cell neither affects nor depends on other cells",
    };
    json!({ "id": id.as_str(), "shortDescription": { "text": text } })
}

/// One SARIF log with a result per warning. `notebooks` pairs a notebook
/// path with its warnings. Lines are relative to the flagged cell and are
/// reported as a property, since SARIF regions address the file.
pub fn sarif<'a>(notebooks: impl IntoIterator<Item = (&'a str, &'a [Warning])>) -> Value {
    let mut results = Vec::new();
    for (path, warnings) in notebooks {
        for w in warnings {
            let mut properties = json!({ "cell": w.cell, "sourceCell": w.source_cell, "path": w.path });
            if let Some(line) = w.line {
                properties["cellLine"] = json!(line);
            }
            results.push(json!({
                "ruleId": w.analysis.as_str(),
                "level": if w.analysis == AnalysisId::DataLeakage { "error" } else { "warning" },
                "message": { "text": w.message },
                "locations": [{
                    "physicalLocation": { "artifactLocation": { "uri": path } },
                    "logicalLocations": [{ "name": format!("cell {}", w.cell), "kind": "member" }]
                }],
                "properties": properties
            }));
        }
    }
    json!({
        "$schema": "https://json.schemastore.org/sarif-2.1.0.json",
        "version": "2.1.0",
        "runs": [{
            "tool": { "driver": {
                "name": "nbprobe",
                "version": env!("CARGO_PKG_VERSION"),
                "rules": AnalysisId::ALL.into_iter().map(rule).collect::<Vec<_>>()
            }},
            "results": results
        }]
    })
}
