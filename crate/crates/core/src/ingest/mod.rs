//! Reading egypt `.eg` call-graph dumps.
//!
//! egypt turns GCC's `-fdump-rtl-expand` output into one small Graphviz file
//! per translation unit. Only the subset egypt emits is accepted: quoted
//! function names, `->` edges and `[style=solid|dotted];` annotations.

mod parser;
mod token;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use thiserror::Error;
use walkdir::WalkDir;

use crate::store::CallGraph;

pub use parser::{
    is_valid_function_name, parse_eg, parse_eg_detailed, print_eg, EdgeStyle, ParseError,
    ParsedFile, RawEdge,
};
pub use token::{tokenize, Token, TokenKind, TokenizeError, KEYWORDS};

/// What to do with a file that fails to parse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IngestMode {
    /// Abort on the first bad file; nothing is committed.
    Strict,
    /// Record the failure and keep going.
    #[default]
    Skip,
}

impl FromStr for IngestMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "strict" => Ok(IngestMode::Strict),
            "skip" => Ok(IngestMode::Skip),
            other => Err(format!("unknown ingest mode `{other}` (expected strict or skip)")),
        }
    }
}

impl fmt::Display for IngestMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IngestMode::Strict => "strict",
            IngestMode::Skip => "skip",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileError {
    pub file: String,
    pub line: u32,
    pub column: u32,
    pub message: String,
}

impl fmt::Display for FileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}: {}", self.file, self.line, self.column, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IngestReport {
    pub files_attempted: usize,
    pub files_parsed: usize,
    pub edges_emitted: usize,
    pub duplicate_edges: usize,
    pub parse_errors: Vec<FileError>,
    pub elapsed: Duration,
}

impl fmt::Display for IngestReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "files_attempted {}", self.files_attempted)?;
        writeln!(f, "files_parsed {}", self.files_parsed)?;
        writeln!(f, "edges_emitted {}", self.edges_emitted)?;
        writeln!(f, "duplicate_edges {}", self.duplicate_edges)?;
        writeln!(f, "parse_errors {}", self.parse_errors.len())?;
        for err in &self.parse_errors {
            writeln!(f, "  {err}")?;
        }
        write!(f, "elapsed {:.6}", self.elapsed.as_secs_f64())
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {}: {source}", path.display())]
    Root {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    File(FileError),
}

/// Tokenizes and parses one dump.
pub fn parse_source(text: &str, file: &str) -> Result<ParsedFile, FileError> {
    let tokens = tokenize(text).map_err(|e| FileError {
        file: file.to_owned(),
        line: e.line,
        column: e.column,
        message: e.to_string(),
    })?;
    parse_eg_detailed(&tokens, file).map_err(|e| FileError {
        file: file.to_owned(),
        line: e.line,
        column: e.column,
        message: e.message,
    })
}

/// Parsed-but-uncommitted contents of a directory of dumps.
#[derive(Debug, Default)]
pub struct LoadedDumps {
    pub edges: Vec<RawEdge>,
    pub report: IngestReport,
    started: Option<Instant>,
}

impl LoadedDumps {
    /// Hands the edges to the store as a single batch.
    pub fn commit(self, graph: &mut CallGraph) -> IngestReport {
        let outcome = graph.add_edges(&self.edges);
        let mut report = self.report;
        report.edges_emitted = self.edges.len();
        report.duplicate_edges = outcome.duplicates;
        if let Some(t0) = self.started {
            report.elapsed = t0.elapsed();
        }
        report
    }
}

/// File tag for a dump: the path relative to `root` without its `.eg`/`.dot` suffix.
pub fn file_tag(root: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(root).ok().filter(|p| !p.as_os_str().is_empty());
    let rel = rel.unwrap_or_else(|| Path::new(path.file_name().unwrap_or(path.as_os_str())));
    let tag = rel
        .components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/");
    tag.strip_suffix(".eg")
        .or_else(|| tag.strip_suffix(".dot"))
        .unwrap_or(&tag)
        .to_owned()
}

fn is_dump(path: &Path) -> bool {
    matches!(path.extension().and_then(|e| e.to_str()), Some("eg" | "dot"))
}

/// Finds every `*.eg` / `*.dot` file under `root`, sorted by path.
pub fn discover(root: &Path) -> Result<Vec<PathBuf>, IngestError> {
    let meta = fs::metadata(root).map_err(|source| IngestError::Root {
        path: root.to_owned(),
        source,
    })?;
    if meta.is_file() {
        return Ok(vec![root.to_owned()]);
    }
    let mut found = Vec::new();
    for entry in WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| IngestError::Root {
            path: e.path().unwrap_or(root).to_owned(),
            source: e.into(),
        })?;
        if entry.file_type().is_file() && is_dump(entry.path()) {
            found.push(entry.into_path());
        }
    }
    Ok(found)
}

/// Reads and parses every dump under `root` without touching a store.
pub fn load_dumps(root: &Path, mode: IngestMode) -> Result<LoadedDumps, IngestError> {
    let started = Instant::now();
    let paths = discover(root)?;
    let base = if root.is_file() {
        root.parent().unwrap_or(root)
    } else {
        root
    };

    let results: Vec<Result<ParsedFile, FileError>> = paths
        .par_iter()
        .map(|path| {
            let tag = file_tag(base, path);
            let text = fs::read_to_string(path).map_err(|e| FileError {
                file: tag.clone(),
                line: 0,
                column: 0,
                message: e.to_string(),
            })?;
            parse_source(&text, &tag)
        })
        .collect();

    let mut loaded = LoadedDumps {
        started: Some(started),
        ..Default::default()
    };
    loaded.report.files_attempted = paths.len();
    for result in results {
        match result {
            Ok(parsed) => {
                loaded.report.files_parsed += 1;
                loaded.edges.extend(parsed.edges);
            }
            Err(err) if mode == IngestMode::Strict => return Err(IngestError::File(err)),
            Err(err) => {
                log::warn!("skipping {err}");
                loaded.report.parse_errors.push(err);
            }
        }
    }
    loaded.report.elapsed = started.elapsed();
    Ok(loaded)
}

/// Parses every dump under `root` and commits the edges to `graph`.
pub fn ingest_path(
    root: impl AsRef<Path>,
    mode: IngestMode,
    graph: &mut CallGraph,
) -> Result<IngestReport, IngestError> {
    Ok(load_dumps(root.as_ref(), mode)?.commit(graph))
}
