//! Seeded synthetic call graphs shaped loosely like a kernel build.
//!
//! Functions are split into a small "core library" and many subsystem
//! clusters. Inside a cluster calls mostly go downward (a DAG); a
//! `cycle_fraction` of calls go back up the cluster, producing local
//! recursion. A `hub_fraction` of calls leave the cluster for the core,
//! with a Zipf-like preference for the first core function, `kmalloc`.
//! The core itself is three shallow tiers, so closures stay bounded the way
//! they do in a real kernel.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ingest::{print_eg, EdgeStyle, RawEdge};

/// Name of the most-called synthetic function.
pub const HUB: &str = "kmalloc";

#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    /// Exact number of raw edges to emit.
    pub edges: usize,
    /// Function count; defaults to 30% of `edges`.
    pub functions: Option<usize>,
    /// Number of distinct file tags.
    pub files: usize,
    pub cluster_size: usize,
    /// Share of calls that go to the core library.
    pub hub_fraction: f64,
    /// Share of calls that go back up their cluster.
    pub cycle_fraction: f64,
    /// Share of edges marked dotted.
    pub dotted_fraction: f64,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            edges: 50_000,
            functions: None,
            files: 1_000,
            cluster_size: 24,
            hub_fraction: 0.35,
            cycle_fraction: 0.01,
            dotted_fraction: 0.1,
            seed: 0x5eed,
        }
    }
}

impl SynthParams {
    pub fn with_edges(edges: usize) -> Self {
        SynthParams {
            edges,
            files: (edges / 50).max(1),
            ..Self::default()
        }
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

struct Layout {
    names: Vec<String>,
    core: usize,
    tier_a: usize,
    tier_b: usize,
}

impl Layout {
    fn new(functions: usize) -> Self {
        let core = (functions / 20).max(3);
        let tier_a = (core / 5).max(1);
        let tier_b = (core * 2 / 5).max(1);
        let names = (0..functions)
            .map(|i| match i {
                0 => HUB.to_owned(),
                i if i < core => format!("core_{i:05}"),
                i => format!("fn_{i:06}"),
            })
            .collect();
        Layout {
            names,
            core,
            tier_a,
            tier_b,
        }
    }
}

/// Zipf-like sampler over `0..n` with weight `1 / (rank + 1)`.
struct Zipf {
    cumulative: Vec<f64>,
}

impl Zipf {
    fn new(n: usize) -> Self {
        let mut acc = 0.0;
        let cumulative = (0..n)
            .map(|i| {
                acc += 1.0 / (i as f64 + 1.0);
                acc
            })
            .collect();
        Zipf { cumulative }
    }

    fn sample(&self, rng: &mut impl Rng) -> usize {
        let total = *self.cumulative.last().expect("non-empty");
        let x = rng.random::<f64>() * total;
        self.cumulative.partition_point(|&c| c <= x).min(self.cumulative.len() - 1)
    }
}

/// Generates `params.edges` raw edges.
pub fn generate(params: &SynthParams) -> Vec<RawEdge> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let functions = params
        .functions
        .unwrap_or(params.edges * 3 / 10)
        .max(16);
    let layout = Layout::new(functions);
    let files = params.files.max(1);
    let file_names: Vec<String> = (0..files).map(|i| format!("synth/unit{i:04}.c")).collect();

    // Out-degrees are geometric around the target mean, then nudged so the
    // total is exact. Tier C functions are leaves.
    let callers: Vec<usize> = (0..layout.tier_a + layout.tier_b)
        .chain(layout.core..functions)
        .collect();
    let mean = params.edges as f64 / callers.len() as f64;
    let p = 1.0 / (1.0 + mean);
    let mut degree: Vec<usize> = callers
        .iter()
        .map(|_| {
            let mut d = 0;
            while rng.random::<f64>() >= p && d < 64 {
                d += 1;
            }
            d
        })
        .collect();
    let mut total: usize = degree.iter().sum();
    while total < params.edges {
        let i = rng.random_range(0..degree.len());
        degree[i] += 1;
        total += 1;
    }
    while total > params.edges {
        let i = rng.random_range(0..degree.len());
        if degree[i] > 0 {
            degree[i] -= 1;
            total -= 1;
        }
    }

    let core_zipf = Zipf::new(layout.core);
    let modules = functions - layout.core;
    let cluster = params.cluster_size.max(2);
    let mut edges = Vec::with_capacity(params.edges);

    // Files are contiguous runs of calling functions, so none is empty.
    for (rank, (&caller, &deg)) in callers.iter().zip(&degree).enumerate() {
        let file = &file_names[rank * files / callers.len()];
        for _ in 0..deg {
            let callee = if caller < layout.tier_a {
                layout.tier_a + rng.random_range(0..layout.tier_b)
            } else if caller < layout.tier_a + layout.tier_b {
                let leaves = layout.core - layout.tier_a - layout.tier_b;
                if leaves == 0 {
                    caller
                } else {
                    layout.tier_a + layout.tier_b + rng.random_range(0..leaves)
                }
            } else {
                let local = caller - layout.core;
                let lo = layout.core + (local / cluster) * cluster;
                let hi = (lo + cluster).min(layout.core + modules);
                let r: f64 = rng.random();
                if r < params.cycle_fraction {
                    rng.random_range(lo..=caller)
                } else if r < params.cycle_fraction + params.hub_fraction || caller + 1 >= hi {
                    core_zipf.sample(&mut rng)
                } else {
                    rng.random_range(caller + 1..hi)
                }
            };
            let style = if rng.random::<f64>() < params.dotted_fraction {
                EdgeStyle::Dotted
            } else {
                EdgeStyle::Solid
            };
            edges.push(RawEdge {
                source: layout.names[caller].clone(),
                dest: layout.names[callee].clone(),
                style,
                file: file.clone(),
            });
        }
    }
    edges
}

/// Writes one `.eg` dump per file tag under `dir`; returns the number of files.
pub fn write_dumps(dir: &Path, edges: &[RawEdge]) -> io::Result<usize> {
    let mut by_file: BTreeMap<&str, Vec<RawEdge>> = BTreeMap::new();
    for e in edges {
        by_file.entry(e.file.as_str()).or_default().push(e.clone());
    }
    for (file, edges) in &by_file {
        let path = dir.join(format!("{file}.eg"));
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(path, print_eg(edges))?;
    }
    Ok(by_file.len())
}
