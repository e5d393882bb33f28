//! Interned edge database with forward, reverse and per-file indexes.

mod graph;
mod intern;
pub mod snapshot;

pub use graph::{AddOutcome, CallEdge, CallGraph, Direction, GraphStats};
pub use intern::{FileId, FunctionId, Interner, Symbol};
pub use snapshot::SnapshotError;
