use std::sync::atomic::{AtomicU64, Ordering};

use rustc_hash::{FxHashMap, FxHashSet};

use crate::ingest::{EdgeStyle, RawEdge};

use super::intern::{FileId, FunctionId, Interner, Symbol};

/// A deduplicated call edge. Repeats of the same
/// `(caller, callee, file, style)` bump `multiplicity`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallEdge {
    pub caller: FunctionId,
    pub callee: FunctionId,
    pub file: FileId,
    pub style: EdgeStyle,
    pub multiplicity: u32,
}

type EdgeKey = (FunctionId, FunctionId, FileId, EdgeStyle);

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AddOutcome {
    pub added: usize,
    pub duplicates: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GraphStats {
    pub function_count: usize,
    pub file_count: usize,
    pub edge_count: usize,
    pub raw_edge_count: u64,
    pub version: u64,
}

/// Traversal direction over the call relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    /// Caller to callee.
    Forward,
    /// Callee to caller.
    Backward,
}

/// The edge database.
///
/// Both adjacency directions and the per-file index are kept in sync with
/// `edges` on every batch. Adjacency is name-level: an edge seen in two
/// files, or with two styles, contributes one neighbor entry.
#[derive(Default)]
pub struct CallGraph {
    functions: Interner<FunctionId>,
    files: Interner<FileId>,
    edges: Vec<CallEdge>,
    edge_slots: FxHashMap<EdgeKey, u32>,
    pairs: FxHashSet<(FunctionId, FunctionId)>,
    forward: Vec<Vec<FunctionId>>,
    reverse: Vec<Vec<FunctionId>>,
    by_file: Vec<Vec<u32>>,
    version: u64,
    raw_edge_count: u64,
    lookups: AtomicU64,
}

impl CallGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds one batch of edges and bumps the version exactly once.
    pub fn add_edges(&mut self, batch: &[RawEdge]) -> AddOutcome {
        let mut outcome = AddOutcome::default();
        for e in batch {
            let caller = self.intern_function(&e.source);
            let callee = self.intern_function(&e.dest);
            let file = self.intern_file(&e.file);
            if self.insert_edge(caller, callee, file, e.style, 1) {
                outcome.added += 1;
            } else {
                outcome.duplicates += 1;
            }
        }
        self.version += 1;
        outcome
    }

    pub(crate) fn intern_function(&mut self, name: &str) -> FunctionId {
        let id = self.functions.intern(name);
        if id.index() == self.forward.len() {
            self.forward.push(Vec::new());
            self.reverse.push(Vec::new());
        }
        id
    }

    pub(crate) fn intern_file(&mut self, path: &str) -> FileId {
        let id = self.files.intern(path);
        if id.index() == self.by_file.len() {
            self.by_file.push(Vec::new());
        }
        id
    }

    /// Returns true if the edge was new.
    pub(crate) fn insert_edge(
        &mut self,
        caller: FunctionId,
        callee: FunctionId,
        file: FileId,
        style: EdgeStyle,
        multiplicity: u32,
    ) -> bool {
        self.raw_edge_count += u64::from(multiplicity);
        let key = (caller, callee, file, style);
        if let Some(&slot) = self.edge_slots.get(&key) {
            self.edges[slot as usize].multiplicity += multiplicity;
            return false;
        }
        let slot = self.edges.len() as u32;
        self.edges.push(CallEdge {
            caller,
            callee,
            file,
            style,
            multiplicity,
        });
        self.edge_slots.insert(key, slot);
        self.by_file[file.index()].push(slot);
        if self.pairs.insert((caller, callee)) {
            self.forward[caller.index()].push(callee);
            self.reverse[callee.index()].push(caller);
        }
        true
    }

    pub(crate) fn set_version(&mut self, version: u64) {
        self.version = version;
    }

    /// Bulk constructor for already-deduplicated tables, sizing every index
    /// up front. Fails with a message on a dangling id or repeated edge.
    pub(crate) fn from_parts(
        functions: Interner<FunctionId>,
        files: Interner<FileId>,
        edges: Vec<CallEdge>,
        version: u64,
    ) -> Result<Self, String> {
        let (n, p) = (functions.len(), files.len());
        let mut out_degree = vec![0u32; n];
        let mut in_degree = vec![0u32; n];
        let mut file_len = vec![0u32; p];
        for (i, e) in edges.iter().enumerate() {
            if e.caller.index() >= n || e.callee.index() >= n || e.file.index() >= p {
                return Err(format!("edge {i} references an unknown symbol"));
            }
            if e.multiplicity == 0 {
                return Err(format!("edge {i} has zero multiplicity"));
            }
            out_degree[e.caller.index()] += 1;
            in_degree[e.callee.index()] += 1;
            file_len[e.file.index()] += 1;
        }
        let with_caps = |caps: &[u32]| -> Vec<Vec<FunctionId>> {
            caps.iter().map(|&c| Vec::with_capacity(c as usize)).collect()
        };
        let mut forward = with_caps(&out_degree);
        let mut reverse = with_caps(&in_degree);
        let mut by_file: Vec<Vec<u32>> = file_len.iter().map(|&c| Vec::with_capacity(c as usize)).collect();
        // The dedup map is only consulted by later batches, so it is built
        // alongside the indexes rather than before them.
        let records = &edges;
        let (edge_slots, (forward, reverse, by_file, pairs)) = rayon::join(
            || {
                let mut slots = FxHashMap::with_capacity_and_hasher(records.len(), Default::default());
                let fresh = records
                    .iter()
                    .enumerate()
                    .all(|(i, e)| slots.insert((e.caller, e.callee, e.file, e.style), i as u32).is_none());
                fresh.then_some(slots)
            },
            move || {
                let mut pairs = FxHashSet::with_capacity_and_hasher(records.len(), Default::default());
                for (slot, e) in records.iter().enumerate() {
                    by_file[e.file.index()].push(slot as u32);
                    if pairs.insert((e.caller, e.callee)) {
                        forward[e.caller.index()].push(e.callee);
                        reverse[e.callee.index()].push(e.caller);
                    }
                }
                (forward, reverse, by_file, pairs)
            },
        );
        let edge_slots = edge_slots.ok_or_else(|| "duplicate edge record".to_owned())?;
        let raw_edge_count = edges.iter().map(|e| u64::from(e.multiplicity)).sum();
        Ok(CallGraph {
            functions,
            files,
            edges,
            edge_slots,
            pairs,
            forward,
            reverse,
            by_file,
            version,
            raw_edge_count,
            lookups: AtomicU64::new(0),
        })
    }

    pub fn function_id(&self, name: &str) -> Option<FunctionId> {
        self.functions.get(name)
    }

    pub fn function_name(&self, id: FunctionId) -> &str {
        self.functions.resolve(id)
    }

    pub fn file_id(&self, path: &str) -> Option<FileId> {
        self.files.get(path)
    }

    pub fn file_path(&self, id: FileId) -> &str {
        self.files.resolve(id)
    }

    pub fn functions(&self) -> &Interner<FunctionId> {
        &self.functions
    }

    pub fn files(&self) -> &Interner<FileId> {
        &self.files
    }

    pub fn function_count(&self) -> usize {
        self.functions.len()
    }

    /// Distinct direct callees of `f`.
    pub fn callees_of(&self, f: FunctionId) -> &[FunctionId] {
        self.neighbors(f, Direction::Forward)
    }

    /// Distinct direct callers of `f`.
    pub fn callers_of(&self, f: FunctionId) -> &[FunctionId] {
        self.neighbors(f, Direction::Backward)
    }

    /// Indexed adjacency lookup; each call is counted in [`CallGraph::lookup_count`].
    #[inline]
    pub fn neighbors(&self, f: FunctionId, dir: Direction) -> &[FunctionId] {
        self.lookups.fetch_add(1, Ordering::Relaxed);
        let table = match dir {
            Direction::Forward => &self.forward,
            Direction::Backward => &self.reverse,
        };
        table.get(f.index()).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Edges whose call site lies in `file`, in insertion order.
    pub fn edges_in_file(&self, file: FileId) -> impl Iterator<Item = &CallEdge> + '_ {
        self.by_file
            .get(file.index())
            .into_iter()
            .flatten()
            .map(move |&slot| &self.edges[slot as usize])
    }

    pub fn edges(&self) -> &[CallEdge] {
        &self.edges
    }

    /// Distinct name-level `(caller, callee)` pairs.
    pub fn name_pairs(&self) -> impl Iterator<Item = (FunctionId, FunctionId)> + '_ {
        self.forward
            .iter()
            .enumerate()
            .flat_map(|(i, callees)| callees.iter().map(move |&c| (FunctionId::from_index(i), c)))
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn raw_edge_count(&self) -> u64 {
        self.raw_edge_count
    }

    pub fn stats(&self) -> GraphStats {
        GraphStats {
            function_count: self.functions.len(),
            file_count: self.files.len(),
            edge_count: self.edges.len(),
            raw_edge_count: self.raw_edge_count,
            version: self.version,
        }
    }

    /// Number of adjacency lookups served since construction.
    pub fn lookup_count(&self) -> u64 {
        self.lookups.load(Ordering::Relaxed)
    }

    /// Approximate heap footprint of tables and indexes.
    pub fn heap_bytes(&self) -> usize {
        let id = std::mem::size_of::<FunctionId>();
        let adjacency: usize = self
            .forward
            .iter()
            .chain(&self.reverse)
            .map(|v| v.capacity() * id + std::mem::size_of::<Vec<FunctionId>>())
            .sum();
        let file_index: usize = self.by_file.iter().map(|v| v.capacity() * 4 + 24).sum();
        self.functions.heap_bytes()
            + self.files.heap_bytes()
            + self.edges.capacity() * std::mem::size_of::<CallEdge>()
            + self.edge_slots.capacity() * (std::mem::size_of::<EdgeKey>() + 4)
            + self.pairs.capacity() * 2 * id
            + adjacency
            + file_index
    }
}

impl std::fmt::Debug for CallGraph {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CallGraph")
            .field("stats", &self.stats())
            .finish_non_exhaustive()
    }
}
