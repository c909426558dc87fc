/// Flat one-bit-per-pixel bitmap.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkBitmap {
    words: Vec<u64>,
    len: usize,
}

impl MarkBitmap {
    pub fn new(len: usize) -> Self {
        MarkBitmap { words: vec![0; len.div_ceil(64)], len }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        self.words[i >> 6] >> (i & 63) & 1 == 1
    }

    /// Sets bits `start..end`, returning how many were previously clear.
    pub fn set_range(&mut self, start: usize, end: usize) -> usize {
        debug_assert!(start <= end && end <= self.len);
        let mut newly = 0;
        let mut i = start;
        while i < end {
            let word = i >> 6;
            let lo = i & 63;
            let hi = (end - (word << 6)).min(64);
            let mask = if hi - lo == 64 { u64::MAX } else { ((1u64 << (hi - lo)) - 1) << lo };
            newly += (mask & !self.words[word]).count_ones() as usize;
            self.words[word] |= mask;
            i = (word + 1) << 6;
        }
        newly
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn clear(&mut self) {
        self.words.fill(0);
    }
}
