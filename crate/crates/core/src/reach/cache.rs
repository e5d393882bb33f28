use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use parking_lot::{RwLock, RwLockReadGuard};

use crate::store::{Direction, FunctionId};

/// An immutable, sorted set of functions shared between cache and callers.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ClosureSet(Arc<[FunctionId]>);

impl ClosureSet {
    pub fn from_unsorted(mut ids: Vec<FunctionId>) -> Self {
        ids.sort_unstable();
        ids.dedup();
        ClosureSet(ids.into())
    }

    pub fn contains(&self, id: FunctionId) -> bool {
        self.0.binary_search(&id).is_ok()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[FunctionId] {
        &self.0
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = FunctionId> + '_ {
        self.0.iter().copied()
    }

    pub fn is_subset(&self, other: &ClosureSet) -> bool {
        self.iter().all(|id| other.contains(id))
    }
}

#[derive(Default)]
pub(crate) struct Tables {
    version: Option<u64>,
    forward: HashMap<FunctionId, ClosureSet>,
    backward: HashMap<FunctionId, ClosureSet>,
}

impl Tables {
    fn table(&self, dir: Direction) -> &HashMap<FunctionId, ClosureSet> {
        match dir {
            Direction::Forward => &self.forward,
            Direction::Backward => &self.backward,
        }
    }

    /// Cached set for `f`, if the tables were built at `version`.
    pub(crate) fn get(&self, dir: Direction, f: FunctionId, version: u64) -> Option<&ClosureSet> {
        if self.version != Some(version) {
            return None;
        }
        self.table(dir).get(&f)
    }

    fn reset(&mut self, version: u64) {
        self.forward.clear();
        self.backward.clear();
        self.version = Some(version);
    }
}

/// Memoized per-function reachable sets, valid for one graph version.
///
/// Concurrent readers may race to fill the same entry; both compute the same
/// set and the first insert wins.
pub struct ClosureCache {
    enabled: bool,
    tables: RwLock<Tables>,
    hits: AtomicU64,
    misses: AtomicU64,
}

impl Default for ClosureCache {
    fn default() -> Self {
        Self::new()
    }
}

impl ClosureCache {
    pub fn new() -> Self {
        ClosureCache {
            enabled: true,
            tables: RwLock::new(Tables::default()),
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
        }
    }

    /// A cache that never stores anything.
    pub fn disabled() -> Self {
        ClosureCache {
            enabled: false,
            ..Self::new()
        }
    }

    pub fn is_enabled(&self) -> bool {
        self.enabled
    }

    pub fn built_for_version(&self) -> Option<u64> {
        self.tables.read().version
    }

    pub fn get(&self, dir: Direction, f: FunctionId, version: u64) -> Option<ClosureSet> {
        if !self.enabled {
            return None;
        }
        let found = self.tables.read().get(dir, f, version).cloned();
        let counter = if found.is_some() { &self.hits } else { &self.misses };
        counter.fetch_add(1, Ordering::Relaxed);
        found
    }

    /// Stores `set`, returning the entry that ends up cached.
    pub fn insert(&self, dir: Direction, f: FunctionId, version: u64, set: ClosureSet) -> ClosureSet {
        if !self.enabled {
            return set;
        }
        let mut tables = self.tables.write();
        match tables.version {
            Some(v) if v == version => {}
            Some(v) if v > version => return set,
            _ => tables.reset(version),
        }
        let table = match dir {
            Direction::Forward => &mut tables.forward,
            Direction::Backward => &mut tables.backward,
        };
        table.entry(f).or_insert(set).clone()
    }

    /// Retires every entry not built for `version`.
    pub fn invalidate(&self, version: u64) {
        let mut tables = self.tables.write();
        if tables.version != Some(version) {
            tables.reset(version);
        }
    }

    /// Drops every entry regardless of version.
    pub fn clear(&self) {
        *self.tables.write() = Tables::default();
    }

    pub(crate) fn read(&self) -> Option<RwLockReadGuard<'_, Tables>> {
        self.enabled.then(|| self.tables.read())
    }

    pub fn len(&self, dir: Direction) -> usize {
        self.tables.read().table(dir).len()
    }

    pub fn hits(&self) -> u64 {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn misses(&self) -> u64 {
        self.misses.load(Ordering::Relaxed)
    }

    /// Approximate bytes held by cached sets.
    pub fn heap_bytes(&self) -> usize {
        let tables = self.tables.read();
        let entry = std::mem::size_of::<(FunctionId, ClosureSet)>() + 16;
        [&tables.forward, &tables.backward]
            .iter()
            .flat_map(|t| t.values())
            .map(|s| s.len() * std::mem::size_of::<FunctionId>() + entry)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::Symbol;

    fn id(i: usize) -> FunctionId {
        FunctionId::from_index(i)
    }

    #[test]
    fn version_gating() {
        let cache = ClosureCache::new();
        let set = ClosureSet::from_unsorted(vec![id(2), id(1), id(2)]);
        assert_eq!(set.as_slice(), &[id(1), id(2)]);
        cache.insert(Direction::Forward, id(0), 3, set.clone());
        assert_eq!(cache.get(Direction::Forward, id(0), 3), Some(set.clone()));
        assert_eq!(cache.get(Direction::Backward, id(0), 3), None);
        assert_eq!(cache.get(Direction::Forward, id(0), 4), None);

        cache.invalidate(3);
        assert_eq!(cache.len(Direction::Forward), 1);
        cache.invalidate(4);
        assert_eq!(cache.len(Direction::Forward), 0);
        assert_eq!(cache.built_for_version(), Some(4));

        // a stale writer cannot resurrect an old version
        cache.insert(Direction::Forward, id(0), 3, set);
        assert_eq!(cache.len(Direction::Forward), 0);
    }

    #[test]
    fn first_insert_wins() {
        let cache = ClosureCache::new();
        let a = ClosureSet::from_unsorted(vec![id(1)]);
        let b = ClosureSet::from_unsorted(vec![id(1)]);
        let kept = cache.insert(Direction::Forward, id(0), 1, a.clone());
        let again = cache.insert(Direction::Forward, id(0), 1, b);
        assert!(Arc::ptr_eq(&kept.0, &a.0));
        assert!(Arc::ptr_eq(&again.0, &a.0));
    }

    #[test]
    fn disabled_cache_stores_nothing() {
        let cache = ClosureCache::disabled();
        cache.insert(Direction::Forward, id(0), 1, ClosureSet::default());
        assert_eq!(cache.get(Direction::Forward, id(0), 1), None);
        assert_eq!(cache.len(Direction::Forward), 0);
    }
}
