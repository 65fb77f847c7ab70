//! CSV fact files: `calls.csv` (one row per call site) and `defs.csv` (one
//! row per function definition).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::extract::{
    warnings_from_facts, ArgKind, ArgValue, CallFact, DefKind, ExtractionResult, FunctionDef,
    ReceiverKind,
};

pub const CALLS_FILE: &str = "calls.csv";
pub const DEFS_FILE: &str = "defs.csv";

pub const CALLS_HEADER: [&str; 10] = [
    "file",
    "caller_scope",
    "caller_class",
    "seq",
    "callee",
    "receiver_class",
    "receiver_kind",
    "arg_count",
    "args",
    "warning",
];
pub const DEFS_HEADER: [&str; 4] = ["file", "name", "class", "kind"];

#[derive(Debug, Error)]
pub enum FactsError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: line {line}, column {column}: {detail}")]
    Malformed {
        path: PathBuf,
        line: u64,
        column: String,
        detail: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactFilePair {
    pub calls_path: PathBuf,
    pub defs_path: PathBuf,
}

impl FactFilePair {
    /// The pair stored in `dir`.
    pub fn in_dir(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        Self {
            calls_path: dir.join(CALLS_FILE),
            defs_path: dir.join(DEFS_FILE),
        }
    }
}

fn opt(value: &Option<String>) -> &str {
    value.as_deref().unwrap_or("")
}

pub(crate) fn escape_display(display: &str, out: &mut String) {
    for c in display.chars() {
        if c == '\\' || c == '|' {
            out.push('\\');
        }
        out.push(c);
    }
}

/// Encodes an argument list as `Kind=display` items joined by `|`.
pub fn encode_args(args: &[ArgValue]) -> String {
    let mut out = String::new();
    for (i, arg) in args.iter().enumerate() {
        if i > 0 {
            out.push('|');
        }
        out.push_str(arg.kind.as_str());
        out.push('=');
        escape_display(&arg.display, &mut out);
    }
    out
}

/// Splits a `|`-joined cell, undoing `\\` escapes.
pub(crate) fn split_escaped(cell: &str) -> Result<Vec<String>, String> {
    if cell.is_empty() {
        return Ok(Vec::new());
    }
    let mut items = Vec::new();
    let mut current = String::new();
    let mut chars = cell.chars();
    while let Some(c) = chars.next() {
        match c {
            '\\' => match chars.next() {
                Some(next) => current.push(next),
                None => return Err("dangling escape at end of cell".to_string()),
            },
            '|' => items.push(std::mem::take(&mut current)),
            _ => current.push(c),
        }
    }
    items.push(current);
    Ok(items)
}

/// Inverse of [`encode_args`].
pub fn decode_args(cell: &str) -> Result<Vec<ArgValue>, String> {
    split_escaped(cell)?
        .iter()
        .map(|item| decode_arg(item))
        .collect()
}

fn decode_arg(item: &str) -> Result<ArgValue, String> {
    let (kind, display) = item
        .split_once('=')
        .ok_or_else(|| format!("argument `{item}` lacks `kind=`"))?;
    let kind: ArgKind = kind.parse()?;
    if kind == ArgKind::MemberVar {
        let (object, _) = display
            .rsplit_once('.')
            .ok_or_else(|| format!("member argument `{display}` lacks `.`"))?;
        return Ok(ArgValue {
            kind,
            display: display.to_string(),
            object: Some(object.to_string()),
        });
    }
    Ok(ArgValue::new(kind, display))
}

pub(crate) fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

pub(crate) fn finish(writer: csv::Writer<Vec<u8>>) -> String {
    let bytes = writer.into_inner().expect("in-memory writer cannot fail");
    String::from_utf8(bytes).expect("all fields are UTF-8")
}

/// `calls.csv` contents for `facts`, rows in canonical order.
pub fn calls_to_csv(facts: &[CallFact]) -> String {
    let mut sorted: Vec<&CallFact> = facts.iter().collect();
    sorted.sort();
    let mut w = csv_writer();
    w.write_record(CALLS_HEADER).expect("in-memory write");
    for f in sorted {
        let seq = f.seq.to_string();
        let arg_count = f.args.len().to_string();
        let args = encode_args(&f.args);
        w.write_record([
            f.file.as_str(),
            &f.caller_scope,
            opt(&f.caller_class),
            &seq,
            &f.callee,
            opt(&f.receiver_class),
            f.receiver_kind.as_str(),
            &arg_count,
            &args,
            opt(&f.warning),
        ])
        .expect("in-memory write");
    }
    finish(w)
}

/// `defs.csv` contents for `defs`, rows sorted.
pub fn defs_to_csv(defs: &[FunctionDef]) -> String {
    let mut sorted: Vec<&FunctionDef> = defs.iter().collect();
    sorted.sort();
    let mut w = csv_writer();
    w.write_record(DEFS_HEADER).expect("in-memory write");
    for d in sorted {
        w.write_record([
            d.file.as_str(),
            &d.name,
            opt(&d.class_name),
            d.kind.as_str(),
        ])
        .expect("in-memory write");
    }
    finish(w)
}

fn write_atomic(path: &Path, contents: &str) -> Result<(), FactsError> {
    let io = |source| FactsError::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// Writes `calls.csv` and `defs.csv` into `out_dir`, creating it if needed.
/// Each file is written to a temporary sibling and renamed into place.
pub fn write_facts(result: &ExtractionResult, out_dir: &Path) -> Result<FactFilePair, FactsError> {
    fs::create_dir_all(out_dir).map_err(|source| FactsError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let pair = FactFilePair::in_dir(out_dir);
    write_atomic(&pair.calls_path, &calls_to_csv(&result.facts))?;
    write_atomic(&pair.defs_path, &defs_to_csv(&result.defs))?;
    Ok(pair)
}

pub(crate) struct RowReader<'a> {
    path: &'a Path,
    reader: csv::Reader<&'a [u8]>,
    header: &'static [&'static str],
}

impl<'a> RowReader<'a> {
    pub(crate) fn new(path: &'a Path, text: &'a str, header: &'static [&'static str]) -> Self {
        let reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_reader(text.as_bytes());
        Self {
            path,
            reader,
            header,
        }
    }

    fn error(&self, line: u64, column: &str, detail: impl Into<String>) -> FactsError {
        FactsError::Malformed {
            path: self.path.to_path_buf(),
            line,
            column: column.to_string(),
            detail: detail.into(),
        }
    }

    /// Data rows as (line number, fields); the header row is checked first.
    pub(crate) fn rows(mut self) -> Result<Vec<(u64, Vec<String>)>, FactsError> {
        let mut rows = Vec::new();
        let mut record = csv::StringRecord::new();
        let mut first = true;
        loop {
            let more = self.reader.read_record(&mut record).map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                self.error(line, "-", e.to_string())
            })?;
            if !more {
                break;
            }
            let line = record.position().map_or(0, |p| p.line());
            if first {
                first = false;
                if record.iter().ne(self.header.iter().copied()) {
                    return Err(self.error(
                        line,
                        "-",
                        format!("expected header `{}`", self.header.join(",")),
                    ));
                }
                continue;
            }
            if record.len() != self.header.len() {
                let column = self.header.get(record.len()).copied().unwrap_or("-");
                return Err(self.error(
                    line,
                    column,
                    format!(
                        "expected {} columns, found {}",
                        self.header.len(),
                        record.len()
                    ),
                ));
            }
            rows.push((line, record.iter().map(str::to_string).collect()));
        }
        if first {
            return Err(self.error(1, "-", "missing header row"));
        }
        Ok(rows)
    }
}

fn none_if_empty(cell: &str) -> Option<String> {
    (!cell.is_empty()).then(|| cell.to_string())
}

fn read_text(path: &Path) -> Result<String, FactsError> {
    fs::read_to_string(path).map_err(|source| FactsError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Parses `calls.csv` text; `path` is used in error messages.
pub fn parse_calls(path: &Path, text: &str) -> Result<Vec<CallFact>, FactsError> {
    let rows = RowReader::new(path, text, &CALLS_HEADER);
    let err = |line: u64, column: &str, detail: String| FactsError::Malformed {
        path: path.to_path_buf(),
        line,
        column: column.to_string(),
        detail,
    };
    let mut facts = Vec::new();
    for (line, cells) in rows.rows()? {
        let seq = cells[3]
            .parse::<usize>()
            .map_err(|e| err(line, "seq", e.to_string()))?;
        let receiver_kind: ReceiverKind = cells[6]
            .parse()
            .map_err(|e| err(line, "receiver_kind", e))?;
        let arg_count = cells[7]
            .parse::<usize>()
            .map_err(|e| err(line, "arg_count", e.to_string()))?;
        let args = decode_args(&cells[8]).map_err(|e| err(line, "args", e))?;
        if args.len() != arg_count {
            return Err(err(
                line,
                "arg_count",
                format!("arg_count {arg_count} but {} arguments listed", args.len()),
            ));
        }
        facts.push(CallFact {
            file: cells[0].clone(),
            caller_scope: cells[1].clone(),
            caller_class: none_if_empty(&cells[2]),
            seq,
            callee: cells[4].clone(),
            receiver_class: none_if_empty(&cells[5]),
            receiver_kind,
            args,
            warning: none_if_empty(&cells[9]),
        });
    }
    Ok(facts)
}

/// Parses `defs.csv` text; `path` is used in error messages.
pub fn parse_defs(path: &Path, text: &str) -> Result<Vec<FunctionDef>, FactsError> {
    let rows = RowReader::new(path, text, &DEFS_HEADER);
    let mut defs = Vec::new();
    for (line, cells) in rows.rows()? {
        let kind: DefKind = cells[3].parse().map_err(|detail| FactsError::Malformed {
            path: path.to_path_buf(),
            line,
            column: "kind".to_string(),
            detail,
        })?;
        defs.push(FunctionDef {
            file: cells[0].clone(),
            name: cells[1].clone(),
            class_name: none_if_empty(&cells[2]),
            kind,
        });
    }
    Ok(defs)
}

/// Loads a fact file pair. Rows come back in file order.
pub fn read_facts(pair: &FactFilePair) -> Result<ExtractionResult, FactsError> {
    let facts = parse_calls(&pair.calls_path, &read_text(&pair.calls_path)?)?;
    let defs = parse_defs(&pair.defs_path, &read_text(&pair.defs_path)?)?;
    let warnings = warnings_from_facts(&facts);
    Ok(ExtractionResult {
        facts,
        defs,
        warnings,
    })
}
