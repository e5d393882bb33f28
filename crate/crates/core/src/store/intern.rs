use std::fmt;
use std::hash::Hash;
use std::marker::PhantomData;

use rustc_hash::FxHashMap;

/// A dense `u32` handle issued by an [`Interner`].
pub trait Symbol: Copy + Eq + Hash + Ord + fmt::Debug {
    fn from_index(index: usize) -> Self;
    fn index(self) -> usize;
}

macro_rules! symbol_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub struct $name(u32);

        impl Symbol for $name {
            #[inline]
            fn from_index(index: usize) -> Self {
                $name(u32::try_from(index).expect("symbol table overflow"))
            }

            #[inline]
            fn index(self) -> usize {
                self.0 as usize
            }
        }
    };
}

symbol_type!(
    /// Interned function name. Equal names always map to the same id.
    FunctionId
);
symbol_type!(
    /// Interned file tag.
    FileId
);

/// Bijective string table.
pub struct Interner<S> {
    names: Vec<Box<str>>,
    lookup: FxHashMap<Box<str>, u32>,
    _marker: PhantomData<S>,
}

impl<S: Symbol> Default for Interner<S> {
    fn default() -> Self {
        Interner {
            names: Vec::new(),
            lookup: FxHashMap::default(),
            _marker: PhantomData,
        }
    }
}

impl<S: Symbol> Interner<S> {
    pub fn with_capacity(n: usize) -> Self {
        Interner {
            names: Vec::with_capacity(n),
            lookup: FxHashMap::with_capacity_and_hasher(n, Default::default()),
            _marker: PhantomData,
        }
    }

    pub fn intern(&mut self, name: &str) -> S {
        if let Some(&idx) = self.lookup.get(name) {
            return S::from_index(idx as usize);
        }
        let sym = S::from_index(self.names.len());
        self.names.push(name.into());
        self.lookup.insert(name.into(), sym.index() as u32);
        sym
    }

    /// Builds a table whose ids are the positions in `names`; on a repeated
    /// name returns the position of the repeat.
    pub(crate) fn from_names(names: &[&str]) -> Result<Self, usize> {
        let mut lookup = FxHashMap::with_capacity_and_hasher(names.len(), Default::default());
        let mut owned = Vec::with_capacity(names.len());
        for (i, &name) in names.iter().enumerate() {
            if lookup.insert(Box::from(name), i as u32).is_some() {
                return Err(i);
            }
            owned.push(Box::from(name));
        }
        Ok(Interner {
            names: owned,
            lookup,
            _marker: PhantomData,
        })
    }

    pub fn get(&self, name: &str) -> Option<S> {
        self.lookup.get(name).map(|&idx| S::from_index(idx as usize))
    }

    pub fn resolve(&self, sym: S) -> &str {
        &self.names[sym.index()]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = (S, &str)> + '_ {
        self.names
            .iter()
            .enumerate()
            .map(|(i, name)| (S::from_index(i), &**name))
    }

    /// Bytes held by the table, counting each string twice (list and lookup key).
    pub fn heap_bytes(&self) -> usize {
        let strings: usize = self.names.iter().map(|s| s.len()).sum();
        strings * 2
            + self.names.capacity() * std::mem::size_of::<Box<str>>()
            + self.lookup.capacity() * (std::mem::size_of::<Box<str>>() + 4)
    }
}
