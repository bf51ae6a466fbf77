//! Minimal `.ipynb` writer for feeding generated notebooks to file-based
//! entry points.

use serde_json::{json, Value};

/// nbformat 4 document with one code cell per source and no outputs.
pub fn ipynb(sources: &[impl AsRef<str>]) -> Value {
    let cells: Vec<Value> = sources
        .iter()
        .map(|s| {
            let text = s.as_ref();
            let lines: Vec<String> = text.split_inclusive('\n').map(str::to_string).collect();
            json!({
                "cell_type": "code",
                "execution_count": null,
                "metadata": {},
                "outputs": [],
                "source": lines,
            })
        })
        .collect();
    json!({
        "cells": cells,
        "metadata": {"kernelspec": {"name": "python3", "display_name": "Python 3", "language": "python"}},
        "nbformat": 4,
        "nbformat_minor": 4,
    })
}

pub fn ipynb_string(sources: &[impl AsRef<str>]) -> String {
    serde_json::to_string_pretty(&ipynb(sources)).expect("json values serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sources_split_into_lines() {
        let v = ipynb(&["a = 1\nb = 2"]);
        assert_eq!(v["cells"][0]["source"], json!(["a = 1\n", "b = 2"]));
        assert_eq!(v["nbformat"], 4);
    }
}
