//! Binary snapshot of a [`CallGraph`].
//!
//! All integers are little-endian.
//!
//! ```text
//! offset  size   field
//! 0       8      magic "CGORACLE"
//! 8       4      format version (u32, currently 1)
//! 12      8      graph version (u64)
//! 20      4      function count F
//!         F x    name: u32 byte length, UTF-8 bytes      (id = position)
//!         4      file count P
//!         P x    path: u32 byte length, UTF-8 bytes      (id = position)
//!         4      edge count E
//!         E x    caller u32, callee u32, file u32, style u8, multiplicity u32
//! end-4   4      CRC-32 (IEEE) of every preceding byte
//! ```
//!
//! Edges are stored in insertion order, so a reloaded graph rebuilds its
//! indexes with the same neighbor order as the original.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use thiserror::Error;

use crate::ingest::EdgeStyle;

use super::graph::{CallEdge, CallGraph};
use super::intern::{FileId, FunctionId, Interner, Symbol};

pub const MAGIC: &[u8; 8] = b"CGORACLE";
pub const FORMAT_VERSION: u32 = 1;

const EDGE_RECORD_LEN: usize = 17;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("snapshot I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("not a call-graph snapshot (bad magic)")]
    BadMagic,
    #[error("snapshot checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    Checksum { stored: u32, computed: u32 },
    #[error("snapshot checksum missing: file is only {len} bytes")]
    TooShort { len: usize },
    #[error("unsupported snapshot format version {found} (expected {expected})")]
    FormatVersion { found: u32, expected: u32 },
    #[error("corrupt snapshot: {0}")]
    Corrupt(String),
}

/// Serializes `graph` into the snapshot byte layout.
pub fn encode(graph: &CallGraph) -> Vec<u8> {
    let functions = graph.functions();
    let files = graph.files();
    let name_bytes: usize = functions.iter().map(|(_, n)| n.len() + 4).sum();
    let file_bytes: usize = files.iter().map(|(_, n)| n.len() + 4).sum();
    let mut buf = Vec::with_capacity(
        32 + name_bytes + file_bytes + graph.edges().len() * EDGE_RECORD_LEN,
    );

    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&graph.version().to_le_bytes());

    for table in [
        functions.iter().map(|(_, n)| n).collect::<Vec<_>>(),
        files.iter().map(|(_, n)| n).collect::<Vec<_>>(),
    ] {
        buf.extend_from_slice(&(table.len() as u32).to_le_bytes());
        for name in table {
            buf.extend_from_slice(&(name.len() as u32).to_le_bytes());
            buf.extend_from_slice(name.as_bytes());
        }
    }

    buf.extend_from_slice(&(graph.edges().len() as u32).to_le_bytes());
    for e in graph.edges() {
        buf.extend_from_slice(&(e.caller.index() as u32).to_le_bytes());
        buf.extend_from_slice(&(e.callee.index() as u32).to_le_bytes());
        buf.extend_from_slice(&(e.file.index() as u32).to_le_bytes());
        buf.push(e.style.to_byte());
        buf.extend_from_slice(&e.multiplicity.to_le_bytes());
    }

    let crc = crc32fast::hash(&buf);
    buf.extend_from_slice(&crc.to_le_bytes());
    buf
}

/// Rebuilds a graph from snapshot bytes.
pub fn decode(bytes: &[u8]) -> Result<CallGraph, SnapshotError> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(SnapshotError::BadMagic);
    }
    if bytes.len() < MAGIC.len() + 4 + 4 {
        return Err(SnapshotError::TooShort { len: bytes.len() });
    }
    let (body, trailer) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(trailer.try_into().expect("4-byte trailer"));
    let computed = crc32fast::hash(body);
    if stored != computed {
        return Err(SnapshotError::Checksum { stored, computed });
    }

    let mut r = Reader {
        buf: body,
        pos: MAGIC.len(),
    };
    let found = r.u32()?;
    if found != FORMAT_VERSION {
        return Err(SnapshotError::FormatVersion {
            found,
            expected: FORMAT_VERSION,
        });
    }
    let version = r.u64()?;

    let function_names = r.strings()?;
    let file_names = r.strings()?;
    let n_edges = r.u32()? as usize;
    let records = &body[r.pos..];
    if records.len() != n_edges * EDGE_RECORD_LEN {
        return Err(SnapshotError::Corrupt(format!(
            "edge table length {} does not match {n_edges} records",
            records.len()
        )));
    }

    // The three tables are independent; build them side by side.
    let (functions, (files, edges)) = rayon::join(
        || Interner::from_names(&function_names),
        || rayon::join(|| Interner::from_names(&file_names), || decode_edges(records)),
    );
    let functions = functions.map_err(|i| SnapshotError::Corrupt(format!("duplicate function name at {i}")))?;
    let files = files.map_err(|i| SnapshotError::Corrupt(format!("duplicate file path at {i}")))?;
    CallGraph::from_parts(functions, files, edges?, version).map_err(SnapshotError::Corrupt)
}

fn decode_edges(records: &[u8]) -> Result<Vec<CallEdge>, SnapshotError> {
    records
        .chunks_exact(EDGE_RECORD_LEN)
        .enumerate()
        .map(|(i, rec)| {
            let word = |at: usize| u32::from_le_bytes(rec[at..at + 4].try_into().expect("4 bytes"));
            let style = EdgeStyle::from_byte(rec[12])
                .ok_or_else(|| SnapshotError::Corrupt(format!("edge {i} has style byte {}", rec[12])))?;
            Ok(CallEdge {
                caller: FunctionId::from_index(word(0) as usize),
                callee: FunctionId::from_index(word(4) as usize),
                file: FileId::from_index(word(8) as usize),
                style,
                multiplicity: word(13),
            })
        })
        .collect()
}

pub fn save(graph: &CallGraph, path: &Path) -> Result<(), SnapshotError> {
    let bytes = encode(graph);
    let mut file = fs::File::create(path)?;
    file.write_all(&bytes)?;
    file.sync_all()?;
    Ok(())
}

pub fn load(path: &Path) -> Result<CallGraph, SnapshotError> {
    decode(&fs::read(path)?)
}

impl CallGraph {
    pub fn snapshot_save(&self, path: impl AsRef<Path>) -> Result<(), SnapshotError> {
        save(self, path.as_ref())
    }

    pub fn snapshot_load(path: impl AsRef<Path>) -> Result<CallGraph, SnapshotError> {
        load(path.as_ref())
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], SnapshotError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&end| end <= self.buf.len())
            .ok_or_else(|| SnapshotError::Corrupt(format!("unexpected end at byte {}", self.pos)))?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32, SnapshotError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, SnapshotError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn str(&mut self) -> Result<&'a str, SnapshotError> {
        let len = self.u32()? as usize;
        let at = self.pos;
        std::str::from_utf8(self.take(len)?)
            .map_err(|_| SnapshotError::Corrupt(format!("invalid UTF-8 at byte {at}")))
    }

    /// A count-prefixed string table.
    fn strings(&mut self) -> Result<Vec<&'a str>, SnapshotError> {
        let n = self.u32()? as usize;
        // Each entry takes at least its 4-byte length.
        if n > (self.buf.len() - self.pos) / 4 {
            return Err(SnapshotError::Corrupt(format!("string table of {n} entries overruns the file")));
        }
        (0..n).map(|_| self.str()).collect()
    }
}
