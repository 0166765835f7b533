//! Bit-level building blocks: wire payloads, channel queues and vertex bitsets.
//!
//! Payloads on the simulated channels are raw bit strings, so everything that
//! goes over a link (ids, flags, hash coefficients) is packed big-endian into
//! [`BitStr`] values. [`BitQueue`] adds a read cursor on top for the streaming
//! framing layer, and [`Bitset`] is the dense vertex-set representation used
//! by the graph queries.

use smallvec::SmallVec;

/// An append-only bit string. Bit `i` of the stream is stored in
/// `words[i / 64]` at position `i % 64`; `push_bits` appends values
/// most-significant-bit first, which fixes the wire order. Two words live
/// inline, so the per-round channel chunks never touch the heap.
#[derive(Clone, Default, PartialEq, Eq)]
pub struct BitStr {
    words: SmallVec<[u64; 2]>,
    len: usize,
}

impl BitStr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Appends the low `width` bits of `value`, most significant first.
    pub fn push_bits(&mut self, value: u64, width: usize) {
        debug_assert!(width <= 64);
        if width == 0 {
            return;
        }
        debug_assert!(width == 64 || value >> width == 0, "value wider than width");
        // Reverse so that the first wire bit sits at the low end, then splice.
        let rev = value.reverse_bits() >> (64 - width);
        let off = self.len & 63;
        if off == 0 {
            self.words.push(rev);
        } else {
            let last = self.words.len() - 1;
            self.words[last] |= rev << off;
            if off + width > 64 {
                self.words.push(rev >> (64 - off));
            }
        }
        self.len += width;
    }

    pub fn push_bit(&mut self, bit: bool) {
        self.push_bits(bit as u64, 1);
    }

    /// Reads `width` bits starting at `pos`, returning them as a
    /// big-endian value. Panics if the range is out of bounds.
    pub fn get_bits(&self, pos: usize, width: usize) -> u64 {
        assert!(width <= 64 && pos + width <= self.len, "bit range out of bounds");
        if width == 0 {
            return 0;
        }
        let off = pos & 63;
        let idx = pos >> 6;
        let mut rev = self.words[idx] >> off;
        if off + width > 64 {
            rev |= self.words[idx + 1] << (64 - off);
        }
        if width < 64 {
            rev &= (1u64 << width) - 1;
        }
        rev.reverse_bits() >> (64 - width)
    }

    /// Appends all bits of `other`.
    pub fn append(&mut self, other: &BitStr) {
        let mut remaining = other.len;
        let mut idx = 0;
        while remaining > 0 {
            let take = remaining.min(64);
            // Word idx holds wire bits in reversed order; recover and push.
            let chunk = {
                let raw = other.words[idx] & if take == 64 { u64::MAX } else { (1u64 << take) - 1 };
                raw.reverse_bits() >> (64 - take)
            };
            self.push_bits(chunk, take);
            remaining -= take;
            idx += 1;
        }
    }

    /// Copies `len` bits starting at `start` into a fresh string.
    pub fn slice(&self, start: usize, len: usize) -> BitStr {
        assert!(start + len <= self.len);
        let mut out = BitStr::new();
        let mut pos = start;
        let end = start + len;
        while pos < end {
            let take = (end - pos).min(64);
            out.push_bits(self.get_bits(pos, take), take);
            pos += take;
        }
        out
    }
}

impl std::fmt::Debug for BitStr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BitStr[{}b]", self.len)
    }
}

/// A FIFO over bits: frames are appended at the back and parsed from the
/// front without copying. The consumed prefix is reclaimed lazily.
#[derive(Clone, Default, Debug)]
pub struct BitQueue {
    buf: BitStr,
    read: usize,
}

impl BitQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn available(&self) -> usize {
        self.buf.len - self.read
    }

    pub fn is_empty(&self) -> bool {
        self.available() == 0
    }

    pub fn push(&mut self, bits: &BitStr) {
        self.buf.append(bits);
        self.compact();
    }

    pub fn push_bits(&mut self, value: u64, width: usize) {
        self.buf.push_bits(value, width);
    }

    /// Reads without consuming; `None` if fewer than `width` bits are queued.
    pub fn peek_bits(&self, offset: usize, width: usize) -> Option<u64> {
        if self.read + offset + width > self.buf.len {
            return None;
        }
        Some(self.buf.get_bits(self.read + offset, width))
    }

    /// Consumes `width` bits from the front.
    pub fn pop_bits(&mut self, width: usize) -> Option<u64> {
        let v = self.peek_bits(0, width)?;
        self.read += width;
        Some(v)
    }

    pub fn skip(&mut self, width: usize) {
        assert!(self.available() >= width);
        self.read += width;
    }

    /// Takes up to `max_bits` from the front as a payload chunk.
    pub fn pop_chunk(&mut self, max_bits: usize) -> BitStr {
        let take = self.available().min(max_bits);
        let out = self.buf.slice(self.read, take);
        self.read += take;
        self.compact();
        out
    }

    fn compact(&mut self) {
        if self.read >= 4096 {
            let drop_words = self.read >> 6;
            self.buf.words.drain(..drop_words);
            self.buf.len -= drop_words << 6;
            self.read -= drop_words << 6;
        }
    }
}

/// Fixed-capacity set of vertex ids backed by machine words.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Bitset {
    words: Vec<u64>,
    nbits: usize,
}

impl Bitset {
    pub fn new(nbits: usize) -> Self {
        Self { words: vec![0; nbits.div_ceil(64)], nbits }
    }

    pub fn from_indices<I: IntoIterator<Item = u32>>(nbits: usize, iter: I) -> Self {
        let mut s = Self::new(nbits);
        for i in iter {
            s.insert(i);
        }
        s
    }

    pub fn capacity(&self) -> usize {
        self.nbits
    }

    pub fn insert(&mut self, i: u32) {
        let i = i as usize;
        assert!(i < self.nbits);
        self.words[i >> 6] |= 1u64 << (i & 63);
    }

    pub fn remove(&mut self, i: u32) {
        let i = i as usize;
        assert!(i < self.nbits);
        self.words[i >> 6] &= !(1u64 << (i & 63));
    }

    pub fn contains(&self, i: u32) -> bool {
        let i = i as usize;
        i < self.nbits && self.words[i >> 6] >> (i & 63) & 1 == 1
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// True when the two sets share at least one element.
    pub fn intersects(&self, other: &Bitset) -> bool {
        self.words.iter().zip(&other.words).any(|(a, b)| a & b != 0)
    }

    /// `|self ∩ other|`.
    pub fn intersection_count(&self, other: &Bitset) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    /// True when `self ∩ a ∩ b` is nonempty.
    pub fn intersects_both(&self, a: &Bitset, b: &Bitset) -> bool {
        self.words
            .iter()
            .zip(&a.words)
            .zip(&b.words)
            .any(|((s, x), y)| s & x & y != 0)
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = u32> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros();
                w &= w - 1;
                Some((wi << 6) as u32 + b)
            })
        })
    }

    /// True when every element of `self` is in `other`.
    pub fn is_subset_of(&self, other: &Bitset) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn push_and_get_round_trip() {
        let mut b = BitStr::new();
        b.push_bits(0b101, 3);
        b.push_bits(0xbeef, 16);
        b.push_bits(1, 1);
        assert_eq!(b.len(), 20);
        assert_eq!(b.get_bits(0, 3), 0b101);
        assert_eq!(b.get_bits(3, 16), 0xbeef);
        assert_eq!(b.get_bits(19, 1), 1);
    }

    #[test]
    fn word_boundary_values_survive() {
        let mut b = BitStr::new();
        for i in 0..10u64 {
            b.push_bits(i.wrapping_mul(0x9e3779b97f4a7c15) >> 14, 50);
        }
        for i in 0..10u64 {
            assert_eq!(b.get_bits(i as usize * 50, 50), i.wrapping_mul(0x9e3779b97f4a7c15) >> 14);
        }
    }

    #[test]
    fn append_matches_manual_pushes() {
        let mut a = BitStr::new();
        a.push_bits(0x3ff, 10);
        let mut b = BitStr::new();
        b.push_bits(0b0110, 4);
        b.push_bits(0xdead_beef_cafe, 48);
        let mut joined = a.clone();
        joined.append(&b);
        assert_eq!(joined.len(), 62);
        assert_eq!(joined.get_bits(0, 10), 0x3ff);
        assert_eq!(joined.get_bits(10, 4), 0b0110);
        assert_eq!(joined.get_bits(14, 48), 0xdead_beef_cafe);
    }

    #[test]
    fn queue_pop_chunks_preserve_stream() {
        let mut src = BitStr::new();
        for i in 0..200u64 {
            src.push_bits(i & 0x7f, 7);
        }
        let mut q = BitQueue::new();
        q.push(&src);
        let mut rejoined = BitStr::new();
        while !q.is_empty() {
            let chunk = q.pop_chunk(13);
            rejoined.append(&chunk);
        }
        assert_eq!(rejoined, src);
    }

    #[test]
    fn queue_peek_does_not_consume() {
        let mut q = BitQueue::new();
        q.push_bits(0xab, 8);
        assert_eq!(q.peek_bits(0, 8), Some(0xab));
        assert_eq!(q.peek_bits(0, 9), None);
        assert_eq!(q.pop_bits(8), Some(0xab));
        assert!(q.is_empty());
    }

    #[test]
    fn bitset_ops() {
        let a = Bitset::from_indices(100, [1, 50, 99]);
        let b = Bitset::from_indices(100, [2, 50]);
        assert!(a.intersects(&b));
        assert_eq!(a.intersection_count(&b), 1);
        assert_eq!(a.iter_ones().collect::<Vec<_>>(), vec![1, 50, 99]);
        let c = Bitset::from_indices(100, [50]);
        assert!(c.is_subset_of(&a));
        assert!(!a.is_subset_of(&c));
        assert!(a.intersects_both(&b, &c));
        let d = Bitset::from_indices(100, [99]);
        assert!(!a.intersects_both(&b, &d));
    }
}
