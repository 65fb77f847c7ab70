//! File-level orchestration shared by the command-line tool and the C API.

use std::collections::BTreeSet;
use std::fs;
use std::io::{self, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::Instant;

use thiserror::Error;

use crate::dot::emit_dot;
use crate::extract::{extract_facts, ExtractionResult};
use crate::facts::{read_facts, write_facts, FactFilePair, FactsError, CALLS_FILE};
use crate::lexicon::{LexiconError, LexiconTable};
use crate::link::{
    build_tree, edges_to_csv, graph_metrics, merge, parse_edges, recursion_marks, CallTree,
    FactIndex, GraphMetrics, LinkError, EDGES_HEADER,
};

/// Suffixes a dump file name may carry on top of the source file name.
const DUMP_SUFFIXES: [&str; 3] = [".ast", ".dump", ".txt"];

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Facts(#[from] FactsError),
    #[error(transparent)]
    Link(#[from] LinkError),
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error("{0}")]
    Config(String),
}

impl PipelineError {
    /// Process exit status: 2 for I/O failures, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Io { .. }
            | PipelineError::Facts(FactsError::Io { .. })
            | PipelineError::Lexicon(LexiconError::Io { .. }) => 2,
            _ => 1,
        }
    }

    fn io(path: &Path, source: io::Error) -> Self {
        PipelineError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Source file name recorded in facts for a dump path:
/// `dumps/Contact.cpp.ast` becomes `Contact.cpp`.
pub fn source_name(path: &Path) -> String {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    DUMP_SUFFIXES
        .iter()
        .find_map(|s| name.strip_suffix(s).filter(|rest| !rest.is_empty()))
        .map(str::to_string)
        .unwrap_or(name)
}

/// Expands directories to their regular files (sorted by name); plain files
/// pass through. Missing paths are errors.
pub fn expand_inputs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>, PipelineError> {
    if inputs.is_empty() {
        return Err(PipelineError::Config("no input files given".into()));
    }
    let mut out = Vec::new();
    for input in inputs {
        let meta = fs::metadata(input).map_err(|e| PipelineError::io(input, e))?;
        if meta.is_dir() {
            let mut files: Vec<PathBuf> = fs::read_dir(input)
                .map_err(|e| PipelineError::io(input, e))?
                .filter_map(|entry| entry.ok().map(|e| e.path()))
                .filter(|p| p.is_file())
                .collect();
            files.sort();
            out.extend(files);
        } else {
            out.push(input.clone());
        }
    }
    Ok(out)
}

pub fn extract_file(
    path: &Path,
    lexicon: &LexiconTable,
) -> Result<ExtractionResult, PipelineError> {
    let bytes = fs::read(path).map_err(|e| PipelineError::io(path, e))?;
    Ok(extract_facts(&bytes, &source_name(path), lexicon))
}

/// Extracts every file, in parallel across files; results keep input order.
pub fn extract_all(
    files: &[PathBuf],
    lexicon: &LexiconTable,
) -> Result<Vec<ExtractionResult>, PipelineError> {
    let workers = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .clamp(1, files.len().max(1));
    let chunk = files.len().div_ceil(workers).max(1);
    std::thread::scope(|scope| {
        let handles: Vec<_> = files
            .chunks(chunk)
            .map(|part| {
                scope.spawn(move || {
                    part.iter()
                        .map(|f| extract_file(f, lexicon))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        let mut out = Vec::with_capacity(files.len());
        for handle in handles {
            for result in handle.join().expect("extraction worker panicked") {
                out.push(result?);
            }
        }
        Ok(out)
    })
}

#[derive(Debug, Clone)]
pub struct ExtractSummary {
    pub input: PathBuf,
    pub pair: FactFilePair,
    pub result: ExtractionResult,
}

/// Writes one fact directory per input under `out_dir`, named after the
/// source file (with `-2`, `-3`, ... on name clashes).
pub fn run_extract(
    inputs: &[PathBuf],
    lexicon: &LexiconTable,
    out_dir: &Path,
) -> Result<Vec<ExtractSummary>, PipelineError> {
    let files = expand_inputs(inputs)?;
    let results = extract_all(&files, lexicon)?;
    let mut used = BTreeSet::new();
    let mut summaries = Vec::with_capacity(files.len());
    for (input, result) in files.into_iter().zip(results) {
        let base = source_name(&input);
        let mut name = base.clone();
        let mut n = 1;
        while !used.insert(name.clone()) {
            n += 1;
            name = format!("{base}-{n}");
        }
        let pair = write_facts(&result, &out_dir.join(&name))?;
        summaries.push(ExtractSummary {
            input,
            pair,
            result,
        });
    }
    Ok(summaries)
}

/// Finds fact pairs for link inputs: a `calls.csv` path, a directory holding
/// one, or a directory whose subdirectories hold them.
pub fn fact_pairs(inputs: &[PathBuf]) -> Result<Vec<FactFilePair>, PipelineError> {
    if inputs.is_empty() {
        return Err(PipelineError::Config("no fact inputs given".into()));
    }
    let mut pairs = Vec::new();
    for input in inputs {
        let meta = fs::metadata(input).map_err(|e| PipelineError::io(input, e))?;
        if meta.is_file() {
            let dir = input.parent().unwrap_or(Path::new("."));
            pairs.push(FactFilePair::in_dir(dir));
        } else if input.join(CALLS_FILE).is_file() {
            pairs.push(FactFilePair::in_dir(input));
        } else {
            let mut dirs: Vec<PathBuf> = fs::read_dir(input)
                .map_err(|e| PipelineError::io(input, e))?
                .filter_map(|entry| entry.ok().map(|e| e.path()))
                .filter(|p| p.join(CALLS_FILE).is_file())
                .collect();
            if dirs.is_empty() {
                return Err(PipelineError::io(
                    &input.join(CALLS_FILE),
                    io::Error::new(io::ErrorKind::NotFound, "no fact files found"),
                ));
            }
            dirs.sort();
            pairs.extend(dirs.into_iter().map(FactFilePair::in_dir));
        }
    }
    Ok(pairs)
}

pub fn load_facts(inputs: &[PathBuf]) -> Result<Vec<ExtractionResult>, PipelineError> {
    fact_pairs(inputs)?
        .iter()
        .map(|pair| read_facts(pair).map_err(PipelineError::from))
        .collect()
}

#[derive(Debug, Clone)]
pub struct LinkOutput {
    pub index: FactIndex,
    pub tree: CallTree,
    pub dot: String,
    pub edges: String,
}

/// Merges results and builds the call tree from `root` (default root when
/// `None`).
pub fn link_results(
    results: &[ExtractionResult],
    root: Option<&str>,
    max_depth: usize,
) -> Result<LinkOutput, PipelineError> {
    let normalized: Vec<ExtractionResult> = results.iter().map(|r| r.normalized()).collect();
    let index = merge(&normalized);
    let root = index.resolve_root(root)?;
    let tree = build_tree(&index, &root, max_depth)?;
    let dot = emit_dot(&tree);
    let edges = edges_to_csv(&tree);
    Ok(LinkOutput {
        index,
        tree,
        dot,
        edges,
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<(), PipelineError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| PipelineError::io(path, e))
}

/// A graph to compare: fact inputs (built into a tree here) or a saved
/// `edges.csv`.
pub fn load_tree(
    input: &Path,
    root: Option<&str>,
    max_depth: usize,
    baseline: bool,
) -> Result<CallTree, PipelineError> {
    if input.is_file() && is_edges_file(input)? {
        if baseline {
            return Err(PipelineError::Config(format!(
                "{}: baseline mode needs fact files, not an edge list",
                input.display()
            )));
        }
        let text = fs::read_to_string(input).map_err(|e| PipelineError::io(input, e))?;
        return Ok(parse_edges(input, &text)?);
    }
    let results: Vec<ExtractionResult> = load_facts(&[input.to_path_buf()])?
        .iter()
        .map(|r| r.normalized())
        .collect();
    let mut index = merge(&results);
    let root = index.resolve_root(root)?;
    if baseline {
        index = index.baseline();
    }
    Ok(build_tree(&index, &root, max_depth)?)
}

fn is_edges_file(path: &Path) -> Result<bool, PipelineError> {
    let text = fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    Ok(text.lines().next() == Some(EDGES_HEADER.join(",").as_str()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Comparison {
    pub a: GraphMetrics,
    pub b: GraphMetrics,
}

/// Six-feature metrics for two trees; the recursion marks of `a` serve as
/// the expected set for both.
pub fn compare_trees(a: &CallTree, b: &CallTree) -> Comparison {
    let expected = recursion_marks(a);
    Comparison {
        a: graph_metrics(a, &expected),
        b: graph_metrics(b, &expected),
    }
}

pub fn write_comparison(out: &mut dyn Write, c: &Comparison) -> io::Result<()> {
    let delta = crate::link::compare_metrics(&c.a, &c.b);
    writeln!(
        out,
        "{:<18} {:>8} {:>8} {:>8}",
        "feature", "a", "b", "delta"
    )?;
    let rows = [
        (
            "total_calls",
            c.a.total_calls,
            c.b.total_calls,
            delta.total_calls,
        ),
        (
            "member_calls",
            c.a.member_calls,
            c.b.member_calls,
            delta.member_calls,
        ),
        (
            "free_calls",
            c.a.free_calls,
            c.b.free_calls,
            delta.free_calls,
        ),
        (
            "library_calls",
            c.a.library_calls,
            c.b.library_calls,
            delta.library_calls,
        ),
        (
            "argument_count",
            c.a.argument_count,
            c.b.argument_count,
            delta.argument_count,
        ),
    ];
    for (name, a, b, d) in rows {
        writeln!(out, "{name:<18} {a:>8} {b:>8} {d:>+8}")?;
    }
    writeln!(
        out,
        "{:<18} {:>8} {:>8} {:>+8}",
        "recursion_correct", c.a.recursion_correct, c.b.recursion_correct, delta.recursion_correct
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    /// Median wall-clock seconds per file.
    pub per_file: Vec<(PathBuf, f64)>,
    pub mean_seconds: f64,
    pub crashes: usize,
}

fn median(mut samples: Vec<f64>) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len();
    if n == 0 {
        0.0
    } else if n % 2 == 1 {
        samples[n / 2]
    } else {
        (samples[n / 2 - 1] + samples[n / 2]) / 2.0
    }
}

/// Times extraction of each file `repeats` times, sequentially, and keeps
/// the median. A panic during extraction counts as a crash and the run
/// continues with the next file.
pub fn run_bench(
    inputs: &[PathBuf],
    lexicon: &LexiconTable,
    repeats: usize,
) -> Result<BenchReport, PipelineError> {
    let files = expand_inputs(inputs)?;
    let repeats = repeats.max(1);
    let mut per_file = Vec::with_capacity(files.len());
    let mut crashes = 0;
    for file in files {
        let bytes = fs::read(&file).map_err(|e| PipelineError::io(&file, e))?;
        let name = source_name(&file);
        let mut samples = Vec::with_capacity(repeats);
        let mut crashed = false;
        for _ in 0..repeats {
            let start = Instant::now();
            let outcome = catch_unwind(AssertUnwindSafe(|| extract_facts(&bytes, &name, lexicon)));
            samples.push(start.elapsed().as_secs_f64());
            if outcome.is_err() {
                crashed = true;
                break;
            }
        }
        if crashed {
            crashes += 1;
        } else {
            per_file.push((file, median(samples)));
        }
    }
    let mean_seconds = if per_file.is_empty() {
        0.0
    } else {
        per_file.iter().map(|(_, s)| s).sum::<f64>() / per_file.len() as f64
    };
    Ok(BenchReport {
        per_file,
        mean_seconds,
        crashes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn source_names() {
        assert_eq!(source_name(Path::new("d/Contact.cpp.ast")), "Contact.cpp");
        assert_eq!(source_name(Path::new("Contact.cpp")), "Contact.cpp");
        assert_eq!(source_name(Path::new("x.m.dump")), "x.m");
        assert_eq!(source_name(Path::new(".ast")), ".ast");
    }

    #[test]
    fn medians() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0]), 2.5);
        assert_eq!(median(vec![]), 0.0);
    }

    #[test]
    fn empty_input_list_is_config_error() {
        let lex = LexiconTable::builtin("cpp").unwrap();
        let err = run_bench(&[], &lex, 3).unwrap_err();
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn missing_input_is_io_error() {
        let lex = LexiconTable::builtin("cpp").unwrap();
        let dir = tempfile::tempdir().unwrap();
        let err = run_extract(&[PathBuf::from("/no/such.ast")], &lex, dir.path()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("/no/such.ast"));
    }

    #[test]
    fn clashing_names_get_suffixes() {
        let lex = LexiconTable::builtin("cpp").unwrap();
        let dir = tempfile::tempdir().unwrap();
        for sub in ["a", "b"] {
            fs::create_dir(dir.path().join(sub)).unwrap();
            fs::write(dir.path().join(sub).join("x.cpp.ast"), "").unwrap();
        }
        let out = dir.path().join("out");
        let s = run_extract(
            &[
                dir.path().join("a/x.cpp.ast"),
                dir.path().join("b/x.cpp.ast"),
            ],
            &lex,
            &out,
        )
        .unwrap();
        assert_eq!(s[0].pair, FactFilePair::in_dir(out.join("x.cpp")));
        assert_eq!(s[1].pair, FactFilePair::in_dir(out.join("x.cpp-2")));
    }
}
