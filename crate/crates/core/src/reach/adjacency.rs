use crate::store::{CallGraph, Direction, FunctionId};

/// Read access to the name-level call relation.
pub trait Adjacency {
    fn node_count(&self) -> usize;

    fn version(&self) -> u64;

    fn function_name(&self, id: FunctionId) -> &str;

    /// Calls `visit` once per distinct neighbor of `node`.
    fn for_each_neighbor<F: FnMut(FunctionId)>(&self, node: FunctionId, dir: Direction, visit: F);
}

impl Adjacency for CallGraph {
    fn node_count(&self) -> usize {
        self.function_count()
    }

    fn version(&self) -> u64 {
        CallGraph::version(self)
    }

    fn function_name(&self, id: FunctionId) -> &str {
        CallGraph::function_name(self, id)
    }

    #[inline]
    fn for_each_neighbor<F: FnMut(FunctionId)>(&self, node: FunctionId, dir: Direction, visit: F) {
        self.neighbors(node, dir).iter().copied().for_each(visit);
    }
}

/// Index-free view of a graph: every neighbor lookup walks the whole edge list.
///
/// Only used to measure what the adjacency indexes buy.
pub struct ScanGraph<'g> {
    graph: &'g CallGraph,
    pairs: Vec<(FunctionId, FunctionId)>,
}

impl<'g> ScanGraph<'g> {
    pub fn new(graph: &'g CallGraph) -> Self {
        ScanGraph {
            graph,
            pairs: graph.name_pairs().collect(),
        }
    }

    pub fn pair_count(&self) -> usize {
        self.pairs.len()
    }
}

impl Adjacency for ScanGraph<'_> {
    fn node_count(&self) -> usize {
        self.graph.function_count()
    }

    fn version(&self) -> u64 {
        self.graph.version()
    }

    fn function_name(&self, id: FunctionId) -> &str {
        self.graph.function_name(id)
    }

    fn for_each_neighbor<F: FnMut(FunctionId)>(&self, node: FunctionId, dir: Direction, mut visit: F) {
        match dir {
            Direction::Forward => {
                for &(caller, callee) in &self.pairs {
                    if caller == node {
                        visit(callee);
                    }
                }
            }
            Direction::Backward => {
                for &(caller, callee) in &self.pairs {
                    if callee == node {
                        visit(caller);
                    }
                }
            }
        }
    }
}
