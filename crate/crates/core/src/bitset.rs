//! Fixed-capacity vertex bitsets used for adjacency rows.

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct VertexSet {
    words: Vec<u64>,
}

impl VertexSet {
    /// Empty set able to hold vertex ids `0..=max_vertex`.
    pub fn with_capacity(max_vertex: usize) -> Self {
        Self { words: vec![0; max_vertex / 64 + 1] }
    }

    #[inline]
    pub fn insert(&mut self, v: u32) {
        let v = v as usize;
        self.words[v / 64] |= 1 << (v % 64);
    }

    #[inline]
    pub fn contains(&self, v: u32) -> bool {
        let v = v as usize;
        self.words.get(v / 64).is_some_and(|w| w & (1 << (v % 64)) != 0)
    }

    #[inline]
    pub fn intersect_with(&mut self, other: &VertexSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= *b;
        }
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Clears every bit `<= v`.
    pub fn clear_up_to(&mut self, v: u32) {
        let v = v as usize;
        let full = (v + 1) / 64;
        let len = self.words.len();
        for w in self.words.iter_mut().take(full.min(len)) {
            *w = 0;
        }
        let rem = (v + 1) % 64;
        if rem != 0 && full < self.words.len() {
            self.words[full] &= !((1u64 << rem) - 1);
        }
    }

    /// Ascending iterator over members.
    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros();
                w &= w - 1;
                Some((i * 64) as u32 + b)
            })
        })
    }
}
