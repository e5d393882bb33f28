//! Test support: random graphs, brute-force oracles, grammar derivations and
//! small HTTP/CLI clients.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpStream};
use std::path::Path;
use std::process::{Command, Output};

use cgoracle::{CallGraph, EdgeStyle, FunctionId, RawEdge};
use rand::seq::IndexedRandom;
use rand::Rng;

pub fn name(i: usize) -> String {
    format!("f{i}")
}

/// A digraph over nodes `0..n`, named by [`name`].
#[derive(Debug, Clone)]
pub struct Digraph {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
}

impl Digraph {
    pub fn raw_edges(&self, file: &str) -> Vec<RawEdge> {
        self.edges
            .iter()
            .map(|&(a, b)| RawEdge::new(&name(a), &name(b), EdgeStyle::Solid, file))
            .collect()
    }

    pub fn build(&self) -> CallGraph {
        let mut g = CallGraph::new();
        g.add_edges(&self.raw_edges("t.c"));
        g
    }

    /// Adjacency with every vertex in `removed` deleted.
    pub fn without(&self, removed: &Bits) -> Digraph {
        Digraph {
            n: self.n,
            edges: self
                .edges
                .iter()
                .copied()
                .filter(|&(a, b)| !removed.get(a) && !removed.get(b))
                .collect(),
        }
    }
}

/// Random digraph with up to `max_nodes` nodes: a few disconnected
/// components, a random density, self-loops and back edges.
pub fn random_digraph(rng: &mut impl Rng, max_nodes: usize) -> Digraph {
    let n = rng.random_range(1..=max_nodes);
    let components = rng.random_range(1..=4usize).min(n);
    let density = [0.002, 0.01, 0.02, 0.05, 0.15][rng.random_range(0..5)];
    let mut edges = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if a % components != b % components {
                continue;
            }
            let p = if a == b { density * 3.0 } else { density };
            if rng.random::<f64>() < p {
                edges.push((a, b));
            }
        }
    }
    // Guarantee a few cycles even in sparse graphs.
    if n >= 3 && rng.random_bool(0.5) {
        let k = rng.random_range(2..=n.min(6));
        let start = rng.random_range(0..=n - k);
        for i in start..start + k - 1 {
            edges.push((i, i + 1));
        }
        edges.push((start + k - 1, start));
    }
    Digraph { n, edges }
}

/// Fixed-size bitset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bits(Vec<u64>);

impl Bits {
    pub fn new(n: usize) -> Self {
        Bits(vec![0; n.div_ceil(64)])
    }

    pub fn get(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    pub fn or_with(&mut self, other: &Bits) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a |= b;
        }
    }

    pub fn ones(&self, n: usize) -> impl Iterator<Item = usize> + '_ {
        (0..n).filter(|&i| self.get(i))
    }
}

/// Transitive (not reflexive) closure by Warshall's algorithm.
pub fn warshall(g: &Digraph) -> Vec<Bits> {
    let mut reach = vec![Bits::new(g.n); g.n];
    for &(a, b) in &g.edges {
        reach[a].set(b);
    }
    for k in 0..g.n {
        let row_k = reach[k].clone();
        for row in reach.iter_mut() {
            if row.get(k) {
                row.or_with(&row_k);
            }
        }
    }
    reach
}

pub fn names(g: &CallGraph, ids: impl IntoIterator<Item = FunctionId>) -> BTreeSet<String> {
    ids.into_iter().map(|f| g.function_name(f).to_owned()).collect()
}

pub fn oracle_names(n: usize, bits: &Bits) -> BTreeSet<String> {
    bits.ones(n).map(name).collect()
}

/// Column `j` of a closure matrix: everything that reaches `j`.
pub fn column(reach: &[Bits], j: usize) -> Bits {
    let mut col = Bits::new(reach.len());
    for (i, row) in reach.iter().enumerate() {
        if row.get(j) {
            col.set(i);
        }
    }
    col
}

/// Barrier-mode answer: the source's own calls are followed even if it is
/// excluded; no excluded node is entered.
pub fn barrier_oracle(g: &Digraph, deleted: &[Bits], excluded: &Bits, s: usize) -> Bits {
    let mut out = Bits::new(g.n);
    if !excluded.get(s) {
        return deleted[s].clone();
    }
    for &(a, b) in &g.edges {
        if a == s && !excluded.get(b) {
            out.set(b);
            out.or_with(&deleted[b]);
        }
    }
    out
}

/// One random derivation of the dump grammar together with the edges it
/// should produce.
#[derive(Debug, Clone)]
pub struct Derivation {
    pub text: String,
    pub edges: Vec<RawEdge>,
}

fn ws(rng: &mut impl Rng, required: bool) -> &'static str {
    let options: &[&'static str] = if required {
        &[" ", "\n", "\t", "  ", " \n  "]
    } else {
        &["", "", " ", "\n", "\t ", "\r\n"]
    };
    options.choose(rng).expect("non-empty")
}

pub fn random_identifier(rng: &mut impl Rng) -> String {
    const START: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
    const REST: &[u8] = b"abcdefghijklmnopqrstuvwxyz0123456789_";
    let mut s = "_".repeat([0, 0, 0, 1, 2, 4][rng.random_range(0..6)]);
    if rng.random_bool(0.05) {
        s.push_str(["digraph", "style", "solid", "callgraph"].choose(rng).unwrap());
        return s;
    }
    s.push(*START.choose(rng).unwrap() as char);
    for _ in 0..rng.random_range(0..10) {
        s.push(*REST.choose(rng).unwrap() as char);
    }
    s
}

pub fn derive(rng: &mut impl Rng, file: &str, max_statements: usize) -> Derivation {
    let mut pool: Vec<String> = (0..rng.random_range(1..12)).map(|_| random_identifier(rng)).collect();
    pool.dedup();
    let mut text = String::new();
    let mut edges = Vec::new();
    text.push_str(ws(rng, false));
    text.push_str("digraph");
    text.push_str(ws(rng, true));
    text.push_str("callgraph");
    text.push_str(ws(rng, false));
    text.push('{');
    // A bare `[style=...];` right after an unterminated edge would attach to it.
    let mut open_edge = false;
    for _ in 0..rng.random_range(0..=max_statements) {
        text.push_str(ws(rng, false));
        let roll: f64 = rng.random();
        let was_open = std::mem::take(&mut open_edge);
        if roll < 0.15 {
            let id = pool.choose(rng).unwrap();
            text.push_str(&format!("\"{id}\"{};", ws(rng, false)));
        } else if roll < 0.2 && !was_open {
            let style = ["solid", "dotted"].choose(rng).unwrap();
            text.push_str(&format!("[style={style}];"));
        } else {
            let a = pool.choose(rng).unwrap().clone();
            let b = pool.choose(rng).unwrap().clone();
            let arrow = ["->", "- >", "-\n>", " -> "].choose(rng).unwrap();
            text.push_str(&format!("\"{a}\"{}{arrow}{}\"{b}\"", ws(rng, false), ws(rng, false)));
            let style = match rng.random_range(0..20) {
                0 => EdgeStyle::Unspecified,
                1..=6 => EdgeStyle::Dotted,
                _ => EdgeStyle::Solid,
            };
            match style {
                EdgeStyle::Unspecified => {
                    if rng.random_bool(0.5) {
                        text.push(';');
                    } else {
                        open_edge = true;
                    }
                }
                s => {
                    let sp = ws(rng, false);
                    text.push_str(&format!("{sp}[{sp}style{sp}={sp}{s}{sp}]{sp};"));
                }
            }
            edges.push(RawEdge::new(&a, &b, style, file));
        }
    }
    text.push_str(ws(rng, false));
    text.push('}');
    text.push_str(ws(rng, false));
    Derivation { text, edges }
}

/// Token texts separated by single spaces; re-tokenizes to the same tokens.
pub fn join_tokens<'a>(texts: impl IntoIterator<Item = &'a str>) -> String {
    texts.into_iter().collect::<Vec<_>>().join(" ")
}

/// Suffixes that complete every viable prefix of the grammar.
pub const COMPLETIONS: &[&str] = &[
    "",
    "}",
    "digraph callgraph { }",
    "callgraph { }",
    "{ }",
    "x \" ; }",
    "\" ; }",
    "\" x \" ; }",
    "; }",
    "> \" y \" [ style = solid ] ; }",
    "- > \" y \" [ style = solid ] ; }",
    "\" y \" [ style = solid ] ; }",
    "y \" [ style = solid ] ; }",
    "[ style = solid ] ; }",
    "style = solid ] ; }",
    "= solid ] ; }",
    "solid ] ; }",
    "] ; }",
];

/// True if some completion turns `prefix` into a document that parses.
pub fn is_viable_prefix(prefix: &str) -> bool {
    COMPLETIONS
        .iter()
        .any(|tail| cgoracle::ingest::parse_source(&format!("{prefix} {tail}"), "p").is_ok())
}

/// Minimal keep-alive HTTP/1.1 client.
pub struct Http {
    reader: BufReader<TcpStream>,
}

impl Http {
    pub fn connect(addr: SocketAddr) -> Self {
        let stream = TcpStream::connect(addr).expect("connect");
        stream.set_nodelay(true).ok();
        Http {
            reader: BufReader::new(stream),
        }
    }

    pub fn request(&mut self, method: &str, target: &str) -> (u16, String) {
        let req = format!("{method} {target} HTTP/1.1\r\nHost: localhost\r\nContent-Length: 0\r\n\r\n");
        self.reader.get_mut().write_all(req.as_bytes()).expect("write request");
        let mut status_line = String::new();
        self.reader.read_line(&mut status_line).expect("status line");
        let status: u16 = status_line
            .split(' ')
            .nth(1)
            .and_then(|s| s.parse().ok())
            .unwrap_or_else(|| panic!("bad status line {status_line:?}"));
        let mut length = None;
        loop {
            let mut line = String::new();
            self.reader.read_line(&mut line).expect("header");
            let line = line.trim_end();
            if line.is_empty() {
                break;
            }
            if let Some((k, v)) = line.split_once(':') {
                if k.eq_ignore_ascii_case("content-length") {
                    length = Some(v.trim().parse::<usize>().expect("content-length"));
                }
            }
        }
        let length = length.expect("response without content-length");
        let mut body = vec![0; length];
        self.reader.read_exact(&mut body).expect("body");
        (status, String::from_utf8(body).expect("utf-8 body"))
    }

    pub fn get(&mut self, target: &str) -> (u16, String) {
        self.request("GET", target)
    }
}

pub fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cgoracle"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("spawn cgoracle")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// Structured body with the timing and cache fields blanked out, for
/// comparing answers from different runs.
pub fn answers_only(body: &str) -> String {
    let mut lines = body.lines();
    let header: Vec<&str> = lines.next().unwrap_or("").split(' ').collect();
    let mut out = match header.as_slice() {
        [kind, count, _elapsed, version, _cached] => format!("{kind} {count} {version}\n"),
        _ => format!("malformed header {header:?}\n"),
    };
    for l in lines {
        out.push_str(l);
        out.push('\n');
    }
    out
}

pub fn write_file(path: &Path, text: &str) {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).unwrap();
    }
    std::fs::write(path, text).unwrap();
}

/// Compares every closure operation on `d` against the Warshall oracle.
/// `excluded_sets` random exclusion sets are tried for each cutoff mode.
pub fn check_against_oracle(d: &Digraph, rng: &mut impl Rng, excluded_sets: usize) -> Result<(), String> {
    use cgoracle::{CutoffMode, Reachability};

    let g = d.build();
    let reach = warshall(d);
    let engines = [Reachability::new(), Reachability::uncached()];
    let id = |i: usize| g.function_id(&name(i));
    for engine in &engines {
        for s in 0..d.n {
            let expected_fwd = oracle_names(d.n, &reach[s]);
            let expected_bwd = oracle_names(d.n, &column(&reach, s));
            let (fwd, bwd) = match id(s) {
                Some(f) => (
                    names(&g, engine.forward_closure(&g, f).iter()),
                    names(&g, engine.backward_closure(&g, f).iter()),
                ),
                None => Default::default(),
            };
            if fwd != expected_fwd {
                return Err(format!("forward({s}): got {fwd:?}, want {expected_fwd:?}"));
            }
            if bwd != expected_bwd {
                return Err(format!("backward({s}): got {bwd:?}, want {expected_bwd:?}"));
            }
            // All pairs through the cache; a sample through fresh traversals.
            let targets: Vec<usize> = if engine.cache().is_enabled() {
                (0..d.n).collect()
            } else {
                (0..d.n.min(16)).map(|_| rng.random_range(0..d.n)).collect()
            };
            for t in targets {
                let got = match (id(s), id(t)) {
                    (Some(a), Some(b)) => engine.is_reachable(&g, a, b),
                    _ => false,
                };
                if got != reach[s].get(t) {
                    return Err(format!("is_reachable({s}, {t}) = {got}"));
                }
            }
        }
    }

    let engine = Reachability::new();
    for _ in 0..excluded_sets {
        let mut excluded = Bits::new(d.n);
        for _ in 0..rng.random_range(0..=d.n.min(8)) {
            excluded.set(rng.random_range(0..d.n));
        }
        let excluded_ids: Vec<FunctionId> = excluded.ones(d.n).filter_map(id).collect();
        let deleted = warshall(&d.without(&excluded));
        for s in 0..d.n {
            let Some(f) = id(s) else { continue };
            let filter = engine.cutoff_closure(&g, f, &excluded_ids, CutoffMode::Filter);
            let barrier = engine.cutoff_closure(&g, f, &excluded_ids, CutoffMode::Barrier);
            let want_filter: BTreeSet<String> = reach[s]
                .ones(d.n)
                .filter(|&t| !excluded.get(t))
                .map(name)
                .collect();
            let want_barrier = oracle_names(d.n, &barrier_oracle(d, &deleted, &excluded, s));
            let got_filter = names(&g, filter.iter());
            let got_barrier = names(&g, barrier.iter());
            if got_filter != want_filter {
                return Err(format!("filter({s}, {excluded:?}): got {got_filter:?}, want {want_filter:?}"));
            }
            if got_barrier != want_barrier {
                return Err(format!("barrier({s}, {excluded:?}): got {got_barrier:?}, want {want_barrier:?}"));
            }
        }
    }
    Ok(())
}
