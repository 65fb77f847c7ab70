use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use islandcg::extract::ExtractionResult;
use islandcg::link::DEFAULT_MAX_DEPTH;
use islandcg::pipeline::{self, PipelineError};
use islandcg::LexiconTable;

/// Call-graph extraction from compiler AST dumps.
#[derive(Parser)]
#[command(name = "islandcg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract call facts from AST dumps into per-file CSV directories.
    Extract {
        /// Keyword table: `cpp`, `objc`, or a path to a table file.
        #[arg(long, default_value = "cpp")]
        dialect: String,
        #[arg(long, default_value = "facts")]
        out: PathBuf,
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Link fact CSVs into a call tree; write DOT and edge list.
    Link {
        #[command(flatten)]
        graph: GraphArgs,
        /// Fact directories or calls.csv paths.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Extract and link in one step.
    Graph {
        #[arg(long, default_value = "cpp")]
        dialect: String,
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Print the six-feature table for two graphs and their difference.
    Compare {
        /// Build `b` without library calls and calls on `this`.
        #[arg(long)]
        baseline_mode: bool,
        #[arg(long)]
        root: Option<String>,
        #[arg(long, default_value_t = DEFAULT_MAX_DEPTH)]
        max_depth: usize,
        /// Fact directory or edges.csv.
        a: PathBuf,
        /// Fact directory or edges.csv.
        b: PathBuf,
    },
    /// Time extraction per file (median of repeated runs).
    Bench {
        #[arg(long, default_value = "cpp")]
        dialect: String,
        #[arg(long, default_value_t = 3)]
        repeats: usize,
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
}

#[derive(Args)]
struct GraphArgs {
    /// `name` or `Class::name`; defaults to `main`.
    #[arg(long)]
    root: Option<String>,
    #[arg(long, default_value_t = DEFAULT_MAX_DEPTH)]
    max_depth: usize,
    #[arg(long, default_value = "graph.dot")]
    dot: PathBuf,
    #[arg(long, default_value = "edges.csv")]
    edges: PathBuf,
}

fn warn_facts(result: &ExtractionResult) {
    let mut err = io::stderr().lock();
    for fact in result.facts.iter().filter(|f| f.warning.is_some()) {
        let _ = writeln!(
            err,
            "WARN {}:{}: {}",
            fact.file,
            fact.caller_scope,
            fact.warning.as_deref().unwrap_or_default()
        );
    }
}

fn write_graph(results: &[ExtractionResult], args: &GraphArgs) -> anyhow::Result<()> {
    let out = pipeline::link_results(results, args.root.as_deref(), args.max_depth)?;
    {
        let mut err = io::stderr().lock();
        for w in out.index.warnings.iter().chain(&out.tree.warnings) {
            let _ = writeln!(err, "WARN link:{w}");
        }
    }
    pipeline::write_text(&args.dot, &out.dot)?;
    pipeline::write_text(&args.edges, &out.edges)?;
    println!(
        "{}: {} nodes, {} edges -> {}, {}",
        out.tree.root().qualified.display,
        out.tree.nodes.len(),
        out.tree.edge_count(),
        args.dot.display(),
        args.edges.display()
    );
    Ok(())
}

fn lexicon(dialect: &str) -> anyhow::Result<LexiconTable> {
    Ok(LexiconTable::resolve(dialect).map_err(PipelineError::from)?)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Extract {
            dialect,
            out,
            files,
        } => {
            let lexicon = lexicon(&dialect)?;
            for s in pipeline::run_extract(&files, &lexicon, &out)? {
                warn_facts(&s.result);
                println!(
                    "{}: {} facts, {} defs, {} warnings -> {}",
                    s.input.display(),
                    s.result.facts.len(),
                    s.result.defs.len(),
                    s.result.warnings.len(),
                    s.pair
                        .calls_path
                        .parent()
                        .unwrap_or(Path::new("."))
                        .display()
                );
            }
        }
        Command::Link { graph, inputs } => {
            let results = pipeline::load_facts(&inputs)?;
            write_graph(&results, &graph)?;
        }
        Command::Graph {
            dialect,
            graph,
            files,
        } => {
            let lexicon = lexicon(&dialect)?;
            let files = pipeline::expand_inputs(&files)?;
            let results = pipeline::extract_all(&files, &lexicon)?;
            for r in &results {
                warn_facts(r);
            }
            write_graph(&results, &graph)?;
        }
        Command::Compare {
            baseline_mode,
            root,
            max_depth,
            a,
            b,
        } => {
            let ta = pipeline::load_tree(&a, root.as_deref(), max_depth, false)
                .with_context(|| format!("loading {}", a.display()))?;
            let tb = pipeline::load_tree(&b, root.as_deref(), max_depth, baseline_mode)
                .with_context(|| format!("loading {}", b.display()))?;
            let comparison = pipeline::compare_trees(&ta, &tb);
            pipeline::write_comparison(&mut io::stdout().lock(), &comparison)?;
        }
        Command::Bench {
            dialect,
            repeats,
            files,
        } => {
            let lexicon = lexicon(&dialect)?;
            let report = pipeline::run_bench(&files, &lexicon, repeats)?;
            for (file, secs) in &report.per_file {
                println!("{:.6}\t{}", secs, file.display());
            }
            println!(
                "mean {:.6} s over {} files",
                report.mean_seconds,
                report.per_file.len()
            );
            println!("crashes {}", report.crashes);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // Leaf messages already embed their source; skip repeats.
            let mut msg = String::new();
            for cause in e.chain().map(ToString::to_string) {
                if !msg.contains(&cause) {
                    if !msg.is_empty() {
                        msg.push_str(": ");
                    }
                    msg.push_str(&cause);
                }
            }
            eprintln!("error: {msg}");
            let code = e
                .chain()
                .find_map(|c| c.downcast_ref::<PipelineError>())
                .map_or(1, PipelineError::exit_code);
            ExitCode::from(code as u8)
        }
    }
}
