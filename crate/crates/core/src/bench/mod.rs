//! Timing harness comparing indexed vs. scan-only adjacency and cached vs.
//! uncached closures.
//!
//! Four measurements, each run under every applicable variant:
//!
//! * `parse_files` – ingest the dumps (or `snapshot_load` when starting from a snapshot)
//! * `infoe` – enumerate every raw edge
//! * `infor` – materialize the full closure and count reachable pairs
//! * `q1_cold` / `q1_warm` – backward closure of a heavily used function,
//!   first and repeated
//!
//! Memory figures are estimates from table and cache sizes, not allocator
//! statistics.

pub mod synth;

use std::fmt;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::ingest::{self, IngestError, IngestMode};
use crate::reach::{Adjacency, Reachability, ScanGraph};
use crate::store::{snapshot, CallGraph, Direction, FunctionId, SnapshotError, Symbol};

pub use synth::{SynthParams, HUB};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Indexing {
    Indexed,
    ScanOnly,
}

impl fmt::Display for Indexing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Indexing::Indexed => "indexed",
            Indexing::ScanOnly => "scan-only",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Caching {
    Enabled,
    Disabled,
    NotApplicable,
}

impl fmt::Display for Caching {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Caching::Enabled => "cached",
            Caching::Disabled => "uncached",
            Caching::NotApplicable => "-",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub label: String,
    pub indexing: Indexing,
    pub caching: Caching,
    pub elapsed: Duration,
    pub memory_bytes: usize,
    pub answer_count: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn row(&self, label: &str, indexing: Indexing, caching: Caching) -> Option<&BenchRow> {
        self.rows
            .iter()
            .find(|r| r.label == label && r.indexing == indexing && r.caching == caching)
    }

    /// True if every variant of each label reports the same answer count.
    pub fn answers_consistent(&self) -> bool {
        self.rows.iter().all(|r| {
            self.rows
                .iter()
                .filter(|o| o.label == r.label)
                .all(|o| o.answer_count == r.answer_count)
        })
    }
}

impl fmt::Display for BenchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<12} {:<10} {:<9} {:>12} {:>11} {:>10}",
            "query", "indexing", "caching", "time (s)", "memory (MB)", "answers"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<12} {:<10} {:<9} {:>12.6} {:>11.2} {:>10}",
                r.label,
                r.indexing.to_string(),
                r.caching.to_string(),
                r.elapsed.as_secs_f64(),
                r.memory_bytes as f64 / (1024.0 * 1024.0),
                r.answer_count
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub enum BenchInput {
    /// Generate a graph, write it out as dumps, and ingest those.
    Synthetic(SynthParams),
    Dumps(PathBuf),
    Snapshot(PathBuf),
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub input: BenchInput,
    /// Function for the `q1` rows; defaults to `kmalloc`, else the function
    /// with the most direct callers.
    pub hub: Option<String>,
    /// Skip the scan-only `infor` rows, which are slow on large graphs.
    pub skip_scan_closure: bool,
}

impl BenchConfig {
    pub fn synthetic(params: SynthParams) -> Self {
        BenchConfig {
            input: BenchInput::Synthetic(params),
            hub: None,
            skip_scan_closure: false,
        }
    }
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("function `{0}` not found in graph")]
    UnknownHub(String),
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t0 = Instant::now();
    let out = f();
    (out, t0.elapsed())
}

/// Loads the input graph, returning it with the first report row.
pub fn load_input(input: &BenchInput) -> Result<(CallGraph, BenchRow), BenchError> {
    let mut graph = CallGraph::new();
    let (label, elapsed) = match input {
        BenchInput::Synthetic(params) => {
            let dir = tempfile::tempdir()?;
            synth::write_dumps(dir.path(), &synth::generate(params))?;
            let (res, t) = timed(|| ingest::ingest_path(dir.path(), IngestMode::Strict, &mut graph));
            res?;
            ("parse_files", t)
        }
        BenchInput::Dumps(root) => {
            let (res, t) = timed(|| ingest::ingest_path(root, IngestMode::Skip, &mut graph));
            res?;
            ("parse_files", t)
        }
        BenchInput::Snapshot(path) => {
            let (res, t) = timed(|| snapshot::load(path));
            graph = res?;
            ("snapshot_load", t)
        }
    };
    let row = BenchRow {
        label: label.to_owned(),
        indexing: Indexing::Indexed,
        caching: Caching::NotApplicable,
        elapsed,
        memory_bytes: graph.heap_bytes(),
        answer_count: graph.raw_edge_count(),
    };
    Ok((graph, row))
}

/// The function with the most direct callers, ties by name.
pub fn most_called(graph: &CallGraph) -> Option<FunctionId> {
    (0..graph.function_count())
        .map(FunctionId::from_index)
        .max_by(|&a, &b| {
            graph
                .callers_of(a)
                .len()
                .cmp(&graph.callers_of(b).len())
                .then_with(|| graph.function_name(b).cmp(graph.function_name(a)))
        })
}

pub fn run(config: &BenchConfig) -> Result<BenchReport, BenchError> {
    let (graph, load_row) = load_input(&config.input)?;
    let mut report = BenchReport { rows: vec![load_row] };
    measure(&graph, config, &mut report)?;
    Ok(report)
}

/// Runs the `infoe`, `infor` and `q1` measurements against `graph`.
pub fn measure(graph: &CallGraph, config: &BenchConfig, report: &mut BenchReport) -> Result<(), BenchError> {
    let hub = match &config.hub {
        Some(name) => graph
            .function_id(name)
            .ok_or_else(|| BenchError::UnknownHub(name.clone()))?,
        None => match graph.function_id(HUB).or_else(|| most_called(graph)) {
            Some(f) => f,
            None => FunctionId::from_index(0),
        },
    };
    let scan = ScanGraph::new(graph);
    let base_memory = graph.heap_bytes();
    let scan_memory = base_memory + scan.pair_count() * 2 * std::mem::size_of::<FunctionId>();

    // infoe
    let (n, t) = timed(|| {
        (0..graph.files().len())
            .map(crate::store::FileId::from_index)
            .flat_map(|f| graph.edges_in_file(f))
            .map(|e| u64::from(e.multiplicity))
            .sum::<u64>()
    });
    report.rows.push(BenchRow {
        label: "infoe".into(),
        indexing: Indexing::Indexed,
        caching: Caching::NotApplicable,
        elapsed: t,
        memory_bytes: base_memory,
        answer_count: n,
    });
    let (n, t) = timed(|| graph.edges().iter().map(|e| u64::from(e.multiplicity)).sum::<u64>());
    report.rows.push(BenchRow {
        label: "infoe".into(),
        indexing: Indexing::ScanOnly,
        caching: Caching::NotApplicable,
        elapsed: t,
        memory_bytes: base_memory,
        answer_count: n,
    });

    for caching in [Caching::Enabled, Caching::Disabled] {
        report.rows.push(closure_row(graph, Indexing::Indexed, caching, base_memory));
        if !config.skip_scan_closure {
            report.rows.push(closure_row(&scan, Indexing::ScanOnly, caching, scan_memory));
        }
    }

    for caching in [Caching::Enabled, Caching::Disabled] {
        let (cold, warm) = hub_rows(graph, hub, Indexing::Indexed, caching, base_memory);
        report.rows.push(cold);
        report.rows.push(warm);
        let (cold, warm) = hub_rows(&scan, hub, Indexing::ScanOnly, caching, scan_memory);
        report.rows.push(cold);
        report.rows.push(warm);
    }
    Ok(())
}

fn engine(caching: Caching) -> Reachability {
    match caching {
        Caching::Disabled => Reachability::uncached(),
        _ => Reachability::new(),
    }
}

fn closure_row<G: Adjacency>(graph: &G, indexing: Indexing, caching: Caching, memory: usize) -> BenchRow {
    let reach = engine(caching);
    let (count, elapsed) = timed(|| reach.closure_edge_count(graph));
    BenchRow {
        label: "infor".into(),
        indexing,
        caching,
        elapsed,
        memory_bytes: memory + reach.cache().heap_bytes(),
        answer_count: count,
    }
}

fn hub_rows<G: Adjacency>(
    graph: &G,
    hub: FunctionId,
    indexing: Indexing,
    caching: Caching,
    memory: usize,
) -> (BenchRow, BenchRow) {
    let reach = engine(caching);
    let (cold, cold_t) = timed(|| reach.closure(graph, hub, Direction::Backward));
    let (warm, warm_t) = timed(|| reach.closure(graph, hub, Direction::Backward));
    let memory = memory + reach.cache().heap_bytes();
    let row = |label: &str, elapsed, n: usize| BenchRow {
        label: label.into(),
        indexing,
        caching,
        elapsed,
        memory_bytes: memory,
        answer_count: n as u64,
    };
    (
        row("q1_cold", cold_t, cold.set.len()),
        row("q1_warm", warm_t, warm.set.len()),
    )
}
