//! Query requests, the shared [`Oracle`] that answers them, and rendering.

pub mod render;
pub mod server;

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::{Duration, Instant};

use parking_lot::RwLock;
use thiserror::Error;

use crate::ingest::{self, IngestError, IngestMode, IngestReport, RawEdge};
use crate::reach::{CutoffMode, Reachability};
use crate::store::{snapshot, AddOutcome, CallGraph, Direction, FunctionId, GraphStats, SnapshotError};

pub use render::{parse_structured, StructuredResponse};

/// Answers above this many lines are truncated unless configured otherwise.
pub const DEFAULT_ANSWER_CAP: usize = 100_000;

pub const DEFAULT_TOP_LIMIT: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QueryKind {
    File,
    Source,
    Dest,
    Cutoff,
    Stats,
    Top,
    Reachable,
}

impl QueryKind {
    pub const ALL: [QueryKind; 7] = [
        QueryKind::File,
        QueryKind::Source,
        QueryKind::Dest,
        QueryKind::Cutoff,
        QueryKind::Stats,
        QueryKind::Top,
        QueryKind::Reachable,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            QueryKind::File => "file",
            QueryKind::Source => "source",
            QueryKind::Dest => "dest",
            QueryKind::Cutoff => "cutoff",
            QueryKind::Stats => "stats",
            QueryKind::Top => "top",
            QueryKind::Reachable => "reachable",
        }
    }
}

impl fmt::Display for QueryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for QueryKind {
    type Err = QueryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        QueryKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| QueryError::UnknownKind(s.to_owned()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Render {
    #[default]
    Structured,
    Html,
}

impl FromStr for Render {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "structured" => Ok(Render::Structured),
            "html" => Ok(Render::Html),
            other => Err(format!("unknown render `{other}` (expected structured or html)")),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum QueryError {
    #[error("unknown query kind `{0}`")]
    UnknownKind(String),
    #[error("invalid field `{field}`: {message}")]
    Validation { field: &'static str, message: String },
}

fn invalid(field: &'static str, message: impl Into<String>) -> QueryError {
    QueryError::Validation {
        field,
        message: message.into(),
    }
}

/// One query. Which optional fields must be present depends on `kind`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryRequest {
    pub kind: QueryKind,
    /// File tag for `file`, function name for `source`/`dest`/`cutoff`/`reachable`.
    pub subject: Option<String>,
    pub excluded: Vec<String>,
    pub mode: Option<CutoffMode>,
    pub target: Option<String>,
    pub limit: Option<usize>,
    pub render: Render,
}

impl QueryRequest {
    pub fn new(kind: QueryKind) -> Self {
        QueryRequest {
            kind,
            subject: None,
            excluded: Vec::new(),
            mode: None,
            target: None,
            limit: None,
            render: Render::Structured,
        }
    }

    pub fn file(path: &str) -> Self {
        Self::new(QueryKind::File).with_subject(path)
    }

    pub fn source(f: &str) -> Self {
        Self::new(QueryKind::Source).with_subject(f)
    }

    pub fn dest(f: &str) -> Self {
        Self::new(QueryKind::Dest).with_subject(f)
    }

    pub fn cutoff(f: &str, excluded: &[&str], mode: CutoffMode) -> Self {
        let mut req = Self::new(QueryKind::Cutoff).with_subject(f);
        req.excluded = excluded.iter().map(|s| (*s).to_owned()).collect();
        req.mode = Some(mode);
        req
    }

    pub fn reachable(from: &str, to: &str) -> Self {
        let mut req = Self::new(QueryKind::Reachable).with_subject(from);
        req.target = Some(to.to_owned());
        req
    }

    pub fn top(limit: usize) -> Self {
        let mut req = Self::new(QueryKind::Top);
        req.limit = Some(limit);
        req
    }

    pub fn stats() -> Self {
        Self::new(QueryKind::Stats)
    }

    pub fn with_subject(mut self, subject: &str) -> Self {
        self.subject = Some(subject.to_owned());
        self
    }

    pub fn with_render(mut self, render: Render) -> Self {
        self.render = render;
        self
    }

    /// Builds a request from `key=value` pairs as they arrive on the wire.
    ///
    /// `fn` and `file` are accepted as spellings of `subject`; `excluded` is
    /// comma-separated. A missing `mode` means filter and a missing `limit`
    /// means [`DEFAULT_TOP_LIMIT`].
    pub fn from_params<'a>(
        kind: &str,
        params: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<Self, QueryError> {
        let mut req = QueryRequest::new(kind.parse()?);
        for (key, value) in params {
            match key {
                "subject" | "fn" | "file" => {
                    if req.subject.replace(value.to_owned()).is_some() {
                        return Err(invalid("subject", "given more than once"));
                    }
                }
                "excluded" => req.excluded.extend(
                    value
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(str::to_owned),
                ),
                "mode" => req.mode = Some(value.parse().map_err(|e: String| invalid("mode", e))?),
                "target" => req.target = Some(value.to_owned()),
                "limit" => {
                    req.limit = Some(
                        value
                            .parse()
                            .map_err(|_| invalid("limit", format!("`{value}` is not a count")))?,
                    )
                }
                "render" => {
                    req.render = value.parse().map_err(|e: String| invalid("render", e))?
                }
                _ => {
                    return Err(QueryError::Validation {
                        field: "parameter",
                        message: format!("unknown parameter `{key}`"),
                    })
                }
            }
        }
        if req.kind == QueryKind::Cutoff && req.mode.is_none() {
            req.mode = Some(CutoffMode::Filter);
        }
        if req.kind == QueryKind::Top && req.limit.is_none() {
            req.limit = Some(DEFAULT_TOP_LIMIT);
        }
        req.validate()?;
        Ok(req)
    }

    /// Checks that exactly the fields `kind` needs are present.
    pub fn validate(&self) -> Result<(), QueryError> {
        use QueryKind::*;
        let k = self.kind;
        let needs_subject = !matches!(k, Stats | Top);
        match (&self.subject, needs_subject) {
            (None, true) => return Err(invalid("subject", format!("required for {k}"))),
            (Some(_), false) => return Err(invalid("subject", format!("not accepted by {k}"))),
            (Some(s), true) if s.is_empty() => return Err(invalid("subject", "empty")),
            _ => {}
        }
        if k != Cutoff {
            if !self.excluded.is_empty() {
                return Err(invalid("excluded", format!("not accepted by {k}")));
            }
            if self.mode.is_some() {
                return Err(invalid("mode", format!("not accepted by {k}")));
            }
        } else if self.mode.is_none() {
            return Err(invalid("mode", "required for cutoff"));
        }
        match (&self.target, k == Reachable) {
            (None, true) => return Err(invalid("target", "required for reachable")),
            (Some(_), false) => return Err(invalid("target", format!("not accepted by {k}"))),
            _ => {}
        }
        match (self.limit, k == Top) {
            (None, true) => return Err(invalid("limit", "required for top")),
            (Some(0), true) => return Err(invalid("limit", "must be at least 1")),
            (Some(_), false) => return Err(invalid("limit", format!("not accepted by {k}"))),
            _ => {}
        }
        Ok(())
    }

    /// Human-readable echo of the request, used as the HTML heading.
    pub fn describe(&self) -> String {
        let mut s = self.kind.as_str().to_owned();
        if let Some(subject) = &self.subject {
            s.push(' ');
            s.push_str(subject);
        }
        if let Some(target) = &self.target {
            s.push_str(" -> ");
            s.push_str(target);
        }
        if self.kind == QueryKind::Cutoff {
            s.push_str(&format!(
                " excluding [{}] ({})",
                self.excluded.join(","),
                self.mode.unwrap_or_default()
            ));
        }
        if let Some(limit) = self.limit {
            s.push_str(&format!(" {limit}"));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryResult {
    pub kind: QueryKind,
    pub answers: Vec<String>,
    pub count: usize,
    pub elapsed: Duration,
    pub graph_version: u64,
    pub cached: bool,
    /// Untruncated answer count, when the answer cap was hit.
    pub truncated_from: Option<usize>,
    pub request: QueryRequest,
}

impl QueryResult {
    pub fn render(&self) -> String {
        match self.request.render {
            Render::Structured => render::structured(self),
            Render::Html => render::html(self),
        }
    }
}

struct State {
    graph: CallGraph,
    reach: Reachability,
}

/// A graph plus its closure cache, shared by concurrent readers.
///
/// Queries hold a read lock for their whole run; ingestion and snapshot
/// loads hold the write lock only while swapping in the new state, so a
/// reader never sees a half-applied batch.
pub struct Oracle {
    state: RwLock<State>,
    answer_cap: usize,
}

impl Default for Oracle {
    fn default() -> Self {
        Self::new(CallGraph::new())
    }
}

impl Oracle {
    pub fn new(graph: CallGraph) -> Self {
        Oracle {
            state: RwLock::new(State {
                graph,
                reach: Reachability::new(),
            }),
            answer_cap: DEFAULT_ANSWER_CAP,
        }
    }

    pub fn with_answer_cap(mut self, cap: usize) -> Self {
        self.answer_cap = cap.max(1);
        self
    }

    pub fn answer_cap(&self) -> usize {
        self.answer_cap
    }

    /// Runs `f` with shared access to the graph.
    pub fn read<R>(&self, f: impl FnOnce(&CallGraph, &Reachability) -> R) -> R {
        let state = self.state.read();
        f(&state.graph, &state.reach)
    }

    pub fn stats(&self) -> GraphStats {
        self.state.read().graph.stats()
    }

    pub fn add_edges(&self, batch: &[RawEdge]) -> AddOutcome {
        let mut state = self.state.write();
        let outcome = state.graph.add_edges(batch);
        let version = state.graph.version();
        state.reach.invalidate(version);
        outcome
    }

    /// Parses `root` without blocking readers, then commits under the write lock.
    pub fn ingest(&self, root: &Path, mode: IngestMode) -> Result<IngestReport, IngestError> {
        let loaded = ingest::load_dumps(root, mode)?;
        let mut state = self.state.write();
        let report = loaded.commit(&mut state.graph);
        let version = state.graph.version();
        state.reach.invalidate(version);
        Ok(report)
    }

    pub fn save_snapshot(&self, path: &Path) -> Result<(), SnapshotError> {
        snapshot::save(&self.state.read().graph, path)
    }

    /// Replaces the graph with a snapshot. The version still moves forward
    /// so no cached answer from the old graph can be served.
    pub fn load_snapshot(&self, path: &Path) -> Result<GraphStats, SnapshotError> {
        let mut graph = snapshot::load(path)?;
        let mut state = self.state.write();
        let floor = state.graph.version() + 1;
        if graph.version() < floor {
            graph.set_version(floor);
        }
        state.graph = graph;
        state.reach.cache().clear();
        Ok(state.graph.stats())
    }

    pub fn handle(&self, req: &QueryRequest) -> Result<QueryResult, QueryError> {
        req.validate()?;
        let state = self.state.read();
        let started = Instant::now();
        let (mut answers, cached) = answer(&state.graph, &state.reach, req);
        let elapsed = started.elapsed();

        let truncated_from = (answers.len() > self.answer_cap).then(|| {
            let total = answers.len();
            answers.truncate(self.answer_cap);
            total
        });
        Ok(QueryResult {
            kind: req.kind,
            count: answers.len(),
            answers,
            elapsed,
            graph_version: state.graph.version(),
            cached,
            truncated_from,
            request: req.clone(),
        })
    }
}

fn names(graph: &CallGraph, ids: impl Iterator<Item = FunctionId>) -> Vec<String> {
    let mut v: Vec<String> = ids.map(|id| graph.function_name(id).to_owned()).collect();
    v.sort_unstable();
    v
}

fn answer(graph: &CallGraph, reach: &Reachability, req: &QueryRequest) -> (Vec<String>, bool) {
    let subject = req.subject.as_deref().unwrap_or_default();
    let lookup = |name: &str| graph.function_id(name);
    match req.kind {
        QueryKind::File => {
            let Some(file) = graph.file_id(subject) else {
                return (Vec::new(), false);
            };
            let mut lines: Vec<String> = graph
                .edges_in_file(file)
                .map(|e| {
                    format!(
                        "{} {} {} {}",
                        graph.function_name(e.caller),
                        graph.function_name(e.callee),
                        graph.file_path(e.file),
                        e.style
                    )
                })
                .collect();
            lines.sort_unstable();
            (lines, false)
        }
        QueryKind::Source | QueryKind::Dest => {
            let dir = if req.kind == QueryKind::Source {
                Direction::Forward
            } else {
                Direction::Backward
            };
            match lookup(subject) {
                Some(f) => {
                    let closure = reach.closure(graph, f, dir);
                    (names(graph, closure.set.iter()), closure.cached)
                }
                None => (Vec::new(), false),
            }
        }
        QueryKind::Cutoff => {
            let Some(f) = lookup(subject) else {
                return (Vec::new(), false);
            };
            let excluded: Vec<FunctionId> = req.excluded.iter().filter_map(|n| lookup(n)).collect();
            let mode = req.mode.unwrap_or_default();
            let cached = mode == CutoffMode::Filter
                && reach
                    .cache()
                    .get(Direction::Forward, f, graph.version())
                    .is_some();
            let set = reach.cutoff_closure(graph, f, &excluded, mode);
            (names(graph, set.iter()), cached)
        }
        QueryKind::Reachable => {
            let target = req.target.as_deref().unwrap_or_default();
            let (Some(a), Some(b)) = (lookup(subject), lookup(target)) else {
                return (vec!["false".to_owned()], false);
            };
            let version = graph.version();
            let cached = reach.cache().get(Direction::Forward, a, version).is_some()
                || reach.cache().get(Direction::Backward, b, version).is_some();
            (vec![reach.is_reachable(graph, a, b).to_string()], cached)
        }
        QueryKind::Top => {
            let limit = req.limit.unwrap_or(DEFAULT_TOP_LIMIT);
            let ranked = reach
                .top_called(graph, limit)
                .into_iter()
                .map(|(f, n)| format!("{} {n}", graph.function_name(f)))
                .collect();
            (ranked, false)
        }
        QueryKind::Stats => {
            let s = graph.stats();
            let lines = vec![
                format!("functions {}", s.function_count),
                format!("files {}", s.file_count),
                format!("edges {}", s.edge_count),
                format!("raw_edges {}", s.raw_edge_count),
                format!("version {}", s.version),
            ];
            (lines, false)
        }
    }
}
