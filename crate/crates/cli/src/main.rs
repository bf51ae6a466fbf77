use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use nbprobe::batch::{analyze_dir, render_table, stats_dir, write_reports, BatchOptions};
use nbprobe::sarif::sarif;
use nbprobe::transport::{serve_lines, HttpServer};
use nbprobe::Service;
use nbprobe_core::analyses::kb::KB_ENV_VAR;
use nbprobe_core::analyses::{AnalysisId, KBound, KnowledgeBase};

#[derive(Parser)]
#[command(name = "nbprobe", version, about = "What-if static analysis for notebooks")]
struct Cli {
    /// Knowledge base TOML file; the built-in one when absent.
    #[arg(long, global = true, env = KB_ENV_VAR)]
    kb: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run what-if analyses over every notebook in a directory.
    Analyze {
        #[arg(long)]
        dir: PathBuf,
        /// isolated, fresh, stale or data-leakage; repeatable or comma separated.
        #[arg(long = "analysis", value_delimiter = ',', required = true)]
        analyses: Vec<AnalysisId>,
        /// Exploration depth: a number or `inf`. Defaults per analysis.
        #[arg(long)]
        k: Option<KBound>,
        /// Use every parse-ok cell as a source.
        #[arg(long)]
        sweep: bool,
        /// Source cell id when not sweeping; defaults to the first parse-ok cell.
        #[arg(long, conflicts_with = "sweep")]
        source: Option<String>,
        /// Directory for per-notebook reports and stats.json.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Write all warnings as a SARIF log.
        #[arg(long)]
        sarif: Option<PathBuf>,
    },
    /// Serve the event protocol over HTTP or stdio.
    Serve {
        #[arg(long, default_value_t = 8765)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = 4)]
        threads: usize,
        /// Read events from stdin and write replies to stdout instead.
        #[arg(long)]
        stdio: bool,
    },
    /// Print the corpus characteristics table.
    Stats {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

fn load_kb(path: Option<&Path>) -> Result<KnowledgeBase, String> {
    match path {
        Some(p) => KnowledgeBase::load(p).map_err(|e| e.to_string()),
        None => Ok(KnowledgeBase::default()),
    }
}

fn run(cli: Cli) -> Result<(), String> {
    let kb = load_kb(cli.kb.as_deref())?;
    match cli.command {
        Command::Analyze { dir, analyses, k, sweep, source, json, sarif: sarif_out } => {
            let opts = BatchOptions { analyses: analyses.into_iter().collect(), k, sweep, source };
            let out = analyze_dir(&dir, Arc::new(kb), &opts).map_err(|e| e.to_string())?;
            for nb in &out.notebooks {
                for run in &nb.runs {
                    for w in &run.report.warnings {
                        let line = w.line.map(|l| format!(":{l}")).unwrap_or_default();
                        println!("{} cell {}{line} [{}] {}", nb.path, w.cell, w.analysis, w.message);
                    }
                }
            }
            for (a, s) in &out.stats.per_analysis {
                println!(
                    "{a}: {} what-ifs, {} warnings, avg {:.2} ms, median {:.2} ms, max {:.2} ms, propagation rate {:.3}",
                    s.whatifs, s.warnings, s.avg_ms, s.median_ms, s.max_ms, s.propagation_rate
                );
            }
            if !out.stats.unreadable.is_empty() {
                println!("{} notebooks skipped", out.stats.unreadable.len());
            }
            if let Some(dir) = json {
                write_reports(&dir, &out).map_err(|e| e.to_string())?;
            }
            if let Some(file) = sarif_out {
                let warnings: Vec<(String, Vec<_>)> = out
                    .notebooks
                    .iter()
                    .map(|nb| (nb.path.clone(), nb.runs.iter().flat_map(|r| r.report.warnings.clone()).collect()))
                    .collect();
                let log = sarif(warnings.iter().map(|(p, w)| (p.as_str(), w.as_slice())));
                let text = serde_json::to_string_pretty(&log).expect("values serialize");
                std::fs::write(&file, text).map_err(|e| format!("cannot write {}: {e}", file.display()))?;
            }
            Ok(())
        }
        Command::Serve { port, host, threads, stdio } => {
            let service = Service::new(kb);
            if stdio {
                return serve_lines(&service, io::stdin().lock(), io::stdout().lock()).map_err(|e| e.to_string());
            }
            let server =
                HttpServer::start(Arc::new(service), &format!("{host}:{port}"), threads).map_err(|e| e.to_string())?;
            eprintln!("listening on http://{host}:{}", server.port());
            server.join();
            Ok(())
        }
        Command::Stats { dir, json } => {
            let (table, bad) = stats_dir(&dir).map_err(|e| e.to_string())?;
            if json {
                println!("{}", serde_json::to_string_pretty(&table).expect("tables serialize"));
            } else {
                print!("{}", render_table(&table));
                if !bad.is_empty() {
                    println!("{} notebooks skipped", bad.len());
                }
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
