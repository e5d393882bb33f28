//! Call-graph dependency oracle.
//!
//! Ingests per-file call-graph dumps produced by GCC (`-fdump-rtl-expand`) and
//! egypt, keeps them in an indexed edge store, and answers transitive
//! caller/callee questions with memoized closures.
//!
//! ```no_run
//! use cgoracle::{ingest, CallGraph, IngestMode, Reachability};
//!
//! let mut graph = CallGraph::new();
//! ingest::ingest_path("dumps/", IngestMode::Skip, &mut graph)?;
//! let reach = Reachability::new();
//! if let Some(kmalloc) = graph.function_id("kmalloc") {
//!     println!("{} callers", reach.backward_closure(&graph, kmalloc).len());
//! }
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod bench;
pub mod ingest;
pub mod query;
pub mod reach;
pub mod store;

pub use ingest::{EdgeStyle, IngestMode, IngestReport, RawEdge};
pub use query::{Oracle, QueryKind, QueryRequest, QueryResult, Render};
pub use reach::{Adjacency, ClosureSet, CutoffMode, Reachability, ScanGraph};
pub use store::{CallEdge, CallGraph, Direction, FileId, FunctionId, GraphStats};
