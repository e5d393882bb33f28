//! Transitive closure of the call relation with per-function memoization.
//!
//! The closure has no reflexive base case: `f` reaches itself only when it
//! sits on a cycle. Each source is expanded breadth-first over the adjacency
//! indexes and the finished set is cached for the graph version it was built
//! against. A traversal that meets a function whose set is already cached
//! splices that set in instead of expanding it.

mod adjacency;
mod cache;

use std::fmt;
use std::str::FromStr;

use crate::store::{Direction, FunctionId, Symbol};

pub use adjacency::{Adjacency, ScanGraph};
pub use cache::{ClosureCache, ClosureSet};
use cache::Tables;

/// How a cut-off query treats the excluded functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub enum CutoffMode {
    /// Full closure minus the excluded set.
    #[default]
    Filter,
    /// Excluded functions are never entered, so whatever is reachable only
    /// through them is absent too.
    Barrier,
}

impl FromStr for CutoffMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "filter" => Ok(CutoffMode::Filter),
            "barrier" => Ok(CutoffMode::Barrier),
            other => Err(format!("unknown cutoff mode `{other}` (expected filter or barrier)")),
        }
    }
}

impl fmt::Display for CutoffMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CutoffMode::Filter => "filter",
            CutoffMode::Barrier => "barrier",
        })
    }
}

/// A closure answer and whether it came straight from the cache.
#[derive(Debug, Clone)]
pub struct Closure {
    pub set: ClosureSet,
    pub cached: bool,
}

#[derive(Default)]
struct Scratch {
    stamp: Vec<u32>,
    epoch: u32,
    queue: Vec<FunctionId>,
    out: Vec<FunctionId>,
}

impl Scratch {
    fn begin(&mut self, nodes: usize) {
        if self.stamp.len() < nodes {
            self.stamp.resize(nodes, 0);
        }
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.fill(0);
            self.epoch = 1;
        }
        self.queue.clear();
        self.out.clear();
    }
}

/// Closure queries over any [`Adjacency`], memoized in a [`ClosureCache`].
#[derive(Default)]
pub struct Reachability {
    cache: ClosureCache,
}

impl Reachability {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_cache(cache: ClosureCache) -> Self {
        Reachability { cache }
    }

    /// An engine that recomputes every answer.
    pub fn uncached() -> Self {
        Self::with_cache(ClosureCache::disabled())
    }

    pub fn cache(&self) -> &ClosureCache {
        &self.cache
    }

    /// Retires cached sets built for any other version.
    pub fn invalidate(&self, version: u64) {
        self.cache.invalidate(version);
    }

    pub fn closure<G: Adjacency>(&self, graph: &G, f: FunctionId, dir: Direction) -> Closure {
        self.closure_with(graph, f, dir, &mut Scratch::default())
    }

    fn closure_with<G: Adjacency>(
        &self,
        graph: &G,
        f: FunctionId,
        dir: Direction,
        scratch: &mut Scratch,
    ) -> Closure {
        let version = graph.version();
        if let Some(set) = self.cache.get(dir, f, version) {
            return Closure { set, cached: true };
        }
        if f.index() >= graph.node_count() {
            return Closure {
                set: ClosureSet::default(),
                cached: false,
            };
        }
        let set = {
            let tables = self.cache.read();
            traverse(graph, f, dir, scratch, tables.as_deref())
        };
        let set = self.cache.insert(dir, f, version, set);
        Closure { set, cached: false }
    }

    /// Every function `f` eventually calls.
    pub fn forward_closure<G: Adjacency>(&self, graph: &G, f: FunctionId) -> ClosureSet {
        self.closure(graph, f, Direction::Forward).set
    }

    /// Every function that eventually calls `f`.
    pub fn backward_closure<G: Adjacency>(&self, graph: &G, f: FunctionId) -> ClosureSet {
        self.closure(graph, f, Direction::Backward).set
    }

    pub fn is_reachable<G: Adjacency>(&self, graph: &G, a: FunctionId, b: FunctionId) -> bool {
        let version = graph.version();
        if let Some(set) = self.cache.get(Direction::Forward, a, version) {
            return set.contains(b);
        }
        if let Some(set) = self.cache.get(Direction::Backward, b, version) {
            return set.contains(a);
        }
        self.forward_closure(graph, a).contains(b)
    }

    pub fn cutoff_closure<G: Adjacency>(
        &self,
        graph: &G,
        f: FunctionId,
        excluded: &[FunctionId],
        mode: CutoffMode,
    ) -> ClosureSet {
        let n = graph.node_count();
        let mut blocked = vec![false; n];
        for &x in excluded {
            if x.index() < n {
                blocked[x.index()] = true;
            }
        }
        match mode {
            CutoffMode::Filter => {
                let full = self.forward_closure(graph, f);
                ClosureSet::from_unsorted(full.iter().filter(|x| !blocked[x.index()]).collect())
            }
            CutoffMode::Barrier => {
                if f.index() >= n {
                    return ClosureSet::default();
                }
                let mut scratch = Scratch::default();
                scratch.begin(n);
                let Scratch {
                    stamp,
                    epoch,
                    queue,
                    out,
                } = &mut scratch;
                queue.push(f);
                let mut head = 0;
                while head < queue.len() {
                    let node = queue[head];
                    head += 1;
                    graph.for_each_neighbor(node, Direction::Forward, |m| {
                        let i = m.index();
                        if !blocked[i] && stamp[i] != *epoch {
                            stamp[i] = *epoch;
                            out.push(m);
                            queue.push(m);
                        }
                    });
                }
                ClosureSet::from_unsorted(std::mem::take(out))
            }
        }
    }

    /// Number of distinct reachable `(caller, callee)` pairs. Materializes
    /// every forward set.
    pub fn closure_edge_count<G: Adjacency>(&self, graph: &G) -> u64 {
        let mut total = 0u64;
        self.for_each_forward_set(graph, |_, set| total += set.len() as u64);
        total
    }

    /// The `k` functions with the most transitive callers, largest first,
    /// ties broken by name. Functions nobody calls are not ranked.
    pub fn top_called<G: Adjacency>(&self, graph: &G, k: usize) -> Vec<(FunctionId, usize)> {
        let mut counts = vec![0usize; graph.node_count()];
        self.for_each_forward_set(graph, |_, set| {
            for x in set.iter() {
                counts[x.index()] += 1;
            }
        });
        let mut ranked: Vec<(FunctionId, usize)> = counts
            .into_iter()
            .enumerate()
            .filter(|&(_, c)| c > 0)
            .map(|(i, c)| (FunctionId::from_index(i), c))
            .collect();
        ranked.sort_by(|a, b| {
            b.1.cmp(&a.1)
                .then_with(|| graph.function_name(a.0).cmp(graph.function_name(b.0)))
        });
        ranked.truncate(k);
        ranked
    }

    fn for_each_forward_set<G: Adjacency, F: FnMut(FunctionId, &ClosureSet)>(
        &self,
        graph: &G,
        mut visit: F,
    ) {
        let n = graph.node_count();
        let mut scratch = Scratch::default();
        if self.cache.is_enabled() {
            // callees first, so their sets are ready to splice
            for f in callee_first_order(graph) {
                let closure = self.closure_with(graph, f, Direction::Forward, &mut scratch);
                visit(f, &closure.set);
            }
        } else {
            for i in 0..n {
                let f = FunctionId::from_index(i);
                let set = traverse(graph, f, Direction::Forward, &mut scratch, None);
                visit(f, &set);
            }
        }
    }
}

fn traverse<G: Adjacency>(
    graph: &G,
    src: FunctionId,
    dir: Direction,
    scratch: &mut Scratch,
    splice: Option<&Tables>,
) -> ClosureSet {
    let version = graph.version();
    scratch.begin(graph.node_count());
    let Scratch {
        stamp,
        epoch,
        queue,
        out,
    } = scratch;
    let epoch = *epoch;

    queue.push(src);
    let mut head = 0;
    while head < queue.len() {
        let node = queue[head];
        head += 1;
        graph.for_each_neighbor(node, dir, |m| {
            if stamp[m.index()] == epoch {
                return;
            }
            stamp[m.index()] = epoch;
            out.push(m);
            match splice.and_then(|t| t.get(dir, m, version)) {
                Some(done) => {
                    for x in done.iter() {
                        if stamp[x.index()] != epoch {
                            stamp[x.index()] = epoch;
                            out.push(x);
                        }
                    }
                }
                None => queue.push(m),
            }
        });
    }
    ClosureSet::from_unsorted(std::mem::take(out))
}

/// Depth-first post-order over the forward relation: every function comes
/// after the functions it calls, except along cycles.
fn callee_first_order<G: Adjacency>(graph: &G) -> Vec<FunctionId> {
    let n = graph.node_count();
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut stack: Vec<(FunctionId, Vec<FunctionId>, usize)> = Vec::new();

    let successors = |f: FunctionId| {
        let mut v = Vec::new();
        graph.for_each_neighbor(f, Direction::Forward, |m| v.push(m));
        v
    };

    for root in 0..n {
        if seen[root] {
            continue;
        }
        let root = FunctionId::from_index(root);
        seen[root.index()] = true;
        stack.push((root, successors(root), 0));
        while let Some((node, succ, next)) = stack.last_mut() {
            if let Some(&m) = succ.get(*next) {
                *next += 1;
                if !seen[m.index()] {
                    seen[m.index()] = true;
                    let s = successors(m);
                    stack.push((m, s, 0));
                }
            } else {
                order.push(*node);
                stack.pop();
            }
        }
    }
    order
}
