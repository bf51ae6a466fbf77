//! Cell source text to AST, CFG, def/use sets, use-def chains and the
//! pre-summary.

mod cfg;
mod dataflow;
mod ir;
mod lower;

use std::collections::BTreeSet;

use rustpython_parser::ast;
use rustpython_parser::Parse;
use serde::Serialize;
use thiserror::Error;

pub use cfg::{Cfg, Edge, EdgeId, Location};
pub use dataflow::{
    compute_def_use, compute_pre, compute_ud, imported_names, is_builtin, DefSite, DefUseSets,
    PreSummary, ReachingDefs, UdChain, UdChains,
};
pub use ir::{CallSite, CellAst, ExprInfo, Node, Stmt, StmtKind, SyntaxCounts, Target};

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[error("syntax error at line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: u32,
    pub column: u32,
    pub message: String,
}

/// Parses one cell. IPython line magics and shell escapes (`%`, `!`) are
/// blanked first so line numbers stay aligned with the original text.
pub fn parse_cell(code: &str) -> Result<CellAst, ParseError> {
    let src = blank_magics(code);
    let lines = lower::LineIndex::new(&src);
    let suite = ast::Suite::parse(&src, "<cell>").map_err(|e| {
        let (line, column) = lines.position(e.offset.to_usize().min(src.len()));
        ParseError { line, column, message: e.error.to_string() }
    })?;
    Ok(lower::lower_suite(&suite, &lines))
}

fn blank_magics(code: &str) -> String {
    let mut out = String::with_capacity(code.len());
    for (i, line) in code.split('\n').enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let trimmed = line.trim_start();
        if trimmed.starts_with('%') || trimmed.starts_with('!') {
            continue;
        }
        out.push_str(line);
    }
    out
}

pub fn build_cfg(ast: &CellAst) -> Cfg {
    Cfg::build(ast)
}

/// Everything the engine caches per cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CellArtifacts {
    pub ast: CellAst,
    pub cfg: Cfg,
    pub def_use: DefUseSets,
    pub ud: UdChains,
    pub pre: PreSummary,
    pub imported: BTreeSet<String>,
}

pub fn analyze_cell(code: &str) -> Result<CellArtifacts, ParseError> {
    let ast = parse_cell(code)?;
    Ok(artifacts(ast))
}

pub fn artifacts(ast: CellAst) -> CellArtifacts {
    let cfg = build_cfg(&ast);
    let def_use = compute_def_use(&ast);
    let ud = compute_ud(&cfg);
    let imported = imported_names(&ast);
    let pre = compute_pre(&ud, &def_use, &imported);
    CellArtifacts { ast, cfg, def_use, ud, pre, imported }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pre(code: &str) -> Vec<String> {
        analyze_cell(code).unwrap().pre.unbound.into_iter().collect()
    }

    fn du(code: &str) -> (Vec<String>, Vec<String>) {
        let a = analyze_cell(code).unwrap();
        (a.def_use.defs.into_iter().collect(), a.def_use.uses.into_iter().collect())
    }

    #[test]
    fn empty_cell() {
        let a = analyze_cell("").unwrap();
        assert!(a.ast.is_empty());
        assert_eq!(a.cfg.num_locations, 1);
        assert!(a.cfg.edges.is_empty());
        assert!(a.pre.is_empty());
    }

    #[test]
    fn method_call_assignment() {
        let ast = parse_cell("x = scaler.fit_transform(d)").unwrap();
        let stmts = ast.statements();
        assert_eq!(stmts.len(), 1);
        let StmtKind::Assign { targets, value } = &stmts[0].kind else { panic!("{stmts:?}") };
        assert_eq!(targets, &[Target { name: "x".into(), rebinds: true }]);
        let call = value.outer_call().unwrap();
        assert_eq!(call.name, "fit_transform");
        assert_eq!(call.path, "scaler.fit_transform");
        assert!(call.arg_names.contains("d"));
        assert!(value.uses.contains("scaler") && value.uses.contains("d"));
    }

    #[test]
    fn string_literal_arguments_are_kept() {
        let ast = parse_cell("d = pd.read_csv('data.csv')").unwrap();
        let call = &ast.statements()[0].calls()[0];
        assert_eq!(call.path, "pd.read_csv");
        assert_eq!(call.str_args, vec!["data.csv".to_string()]);
    }

    #[test]
    fn def_use_examples() {
        assert_eq!(du("x = normalize(d)"), (vec!["x".into()], vec!["d".into(), "normalize".into()]));
        assert_eq!(du("print(x)"), (vec![], vec!["print".into(), "x".into()]));
        let (defs, uses) = du("x_train, x_test, y_train, y_test = train_test_split(x, y)");
        assert_eq!(defs, ["x_test", "x_train", "y_test", "y_train"]);
        assert_eq!(uses, ["train_test_split", "x", "y"]);
    }

    #[test]
    fn straight_line_cfg_is_linear() {
        let a = analyze_cell("a = 1\nb = 2\nc = 3").unwrap();
        assert_eq!(a.cfg.num_locations, 4);
        assert_eq!(a.cfg.edges.len(), 3);
    }

    #[test]
    fn if_else_is_a_diamond() {
        let a = analyze_cell("if c:\n    x = 1\nelse:\n    x = 2").unwrap();
        let exit_preds = a.cfg.predecessors(a.cfg.exit).count();
        assert_eq!(exit_preds, 2);
        assert!(a.cfg.reachable().iter().all(|r| *r));
    }

    #[test]
    fn while_loop_has_back_edge() {
        let a = analyze_cell("while c:\n    x = f(x)").unwrap();
        let rpo = a.cfg.reverse_post_order();
        let rank = |l: usize| rpo.iter().position(|x| *x == l).unwrap();
        assert!(a.cfg.edges.iter().any(|e| rank(e.to) <= rank(e.from)));
    }

    #[test]
    fn use_def_chains() {
        let a = analyze_cell("x = 1\ny = x").unwrap();
        let chain = a.ud.get("x", 1).unwrap();
        assert_eq!(chain.defs, BTreeSet::from([DefSite::Edge(0)]));

        let a = analyze_cell("y = x\nx = 1").unwrap();
        assert!(a.ud.get("x", 0).unwrap().may_be_unbound());
    }

    #[test]
    fn conditional_definition_keeps_unbound() {
        let a = analyze_cell("if c:\n    x = 1\ny = x").unwrap();
        let chain = a.ud.chains.iter().find(|c| c.var == "x").unwrap();
        assert_eq!(chain.defs.len(), 2);
        assert!(chain.may_be_unbound());
        assert_eq!(pre("if c:\n    x = 1\ny = x"), ["c", "x"]);
    }

    #[test]
    fn pre_examples() {
        assert!(pre("a = 1\nb = a").is_empty());
        assert_eq!(
            pre("from sklearn.preprocessing import StandardScaler\nscaler = StandardScaler()\nx = scaler.fit_transform(d)"),
            ["d"]
        );
        assert!(pre("import pandas as pd\nd = pd.read_csv('data.csv')").is_empty());
        assert!(pre("print(len([1]))").is_empty());
    }

    #[test]
    fn for_targets_do_not_hide_earlier_uses() {
        assert_eq!(pre("print(i)\nfor i in xs:\n    pass"), ["i", "xs"]);
        assert_eq!(pre("for i in xs:\n    pass\nprint(i)"), ["i", "xs"]);
    }

    #[test]
    fn function_free_variables_are_uses() {
        let (defs, uses) = du("def f(a, b=k):\n    return a + y");
        assert_eq!(defs, ["f"]);
        assert_eq!(uses, ["k", "y"]);
    }

    #[test]
    fn magics_are_blanked() {
        let a = analyze_cell("%matplotlib inline\n!pip install x\ny = z").unwrap();
        assert_eq!(a.pre.unbound, BTreeSet::from(["z".to_string()]));
        assert_eq!(a.ast.statements()[0].line, 3);
    }

    #[test]
    fn syntax_error_position() {
        let err = parse_cell("a = 1\nx = (").unwrap_err();
        assert_eq!(err.line, 2);
        assert!(err.column >= 1);
    }

    #[test]
    fn unsupported_constructs_are_opaque() {
        let a = analyze_cell("with open(p) as fh:\n    data = fh.read()").unwrap();
        assert!(a.def_use.defs.contains("fh") && a.def_use.defs.contains("data"));
        assert_eq!(a.pre.unbound, BTreeSet::from(["p".to_string()]));
        let a = analyze_cell("class A:\n    z = q").unwrap();
        assert!(a.def_use.defs.contains("A"));
        assert!(a.pre.contains("q"));
    }
}
