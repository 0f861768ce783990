//! Fixed-width bitset over grid cell indices.

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub(crate) struct CellSet {
    words: Box<[u64]>,
}

impl CellSet {
    pub(crate) fn new(cells: usize) -> Self {
        Self {
            words: vec![0; cells.div_ceil(64)].into_boxed_slice(),
        }
    }

    pub(crate) fn singleton(cells: usize, i: usize) -> Self {
        let mut s = Self::new(cells);
        s.insert(i);
        s
    }

    #[inline]
    pub(crate) fn contains(&self, i: usize) -> bool {
        self.words[i / 64] & (1 << (i % 64)) != 0
    }

    #[inline]
    pub(crate) fn insert(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub(crate) fn with(&self, i: usize) -> Self {
        let mut s = self.clone();
        s.insert(i);
        s
    }

    pub(crate) fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }
}
