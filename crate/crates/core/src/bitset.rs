//! Growable bit set keyed by dense site indices.
//!
//! The tangle keeps one ancestor set and one descendant set per site, so the
//! representation has to be compact and the hot operations (union, masked
//! popcount) have to run on whole words.

#[derive(Clone, Debug, Default)]
pub struct BitSet {
    words: Vec<u64>,
}

impl PartialEq for BitSet {
    fn eq(&self, other: &Self) -> bool {
        let (short, long) = if self.words.len() <= other.words.len() {
            (&self.words, &other.words)
        } else {
            (&other.words, &self.words)
        };
        short == &long[..short.len()] && long[short.len()..].iter().all(|w| *w == 0)
    }
}

impl Eq for BitSet {}

impl BitSet {
    pub fn new() -> Self {
        BitSet { words: Vec::new() }
    }

    pub fn with_capacity_bits(bits: usize) -> Self {
        BitSet {
            words: Vec::with_capacity(bits.div_ceil(64)),
        }
    }

    pub fn set(&mut self, bit: usize) {
        let word = bit / 64;
        if word >= self.words.len() {
            self.words.resize(word + 1, 0);
        }
        self.words[word] |= 1u64 << (bit % 64);
    }

    pub fn contains(&self, bit: usize) -> bool {
        self.words
            .get(bit / 64)
            .is_some_and(|w| w & (1u64 << (bit % 64)) != 0)
    }

    pub fn union_with(&mut self, other: &BitSet) {
        if other.words.len() > self.words.len() {
            self.words.resize(other.words.len(), 0);
        }
        for (dst, src) in self.words.iter_mut().zip(other.words.iter()) {
            *dst |= src;
        }
    }

    /// `self |= src & mask`.
    pub fn union_masked(&mut self, src: &BitSet, mask: &BitSet) {
        let len = src.words.len().min(mask.words.len());
        if len > self.words.len() {
            self.words.resize(len, 0);
        }
        for i in 0..len {
            self.words[i] |= src.words[i] & mask.words[i];
        }
    }

    /// Number of bits set in `self & other`.
    pub fn intersection_count(&self, other: &BitSet) -> usize {
        self.words
            .iter()
            .zip(other.words.iter())
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, word)| {
            let mut w = *word;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let bit = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + bit)
            })
        })
    }
}

impl FromIterator<usize> for BitSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut set = BitSet::new();
        for bit in iter {
            set.set(bit);
        }
        set
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_and_contains() {
        let mut s = BitSet::new();
        assert!(!s.contains(3));
        s.set(3);
        s.set(64);
        s.set(200);
        assert!(s.contains(3) && s.contains(64) && s.contains(200));
        assert!(!s.contains(63));
        assert_eq!(s.count(), 3);
    }

    #[test]
    fn union_and_intersection() {
        let a: BitSet = [1usize, 5, 70, 130].into_iter().collect();
        let b: BitSet = [5usize, 70, 131].into_iter().collect();
        assert_eq!(a.intersection_count(&b), 2);
        let mut c = a.clone();
        c.union_with(&b);
        assert_eq!(c.count(), 5);
        assert_eq!(c.iter_ones().collect::<Vec<_>>(), vec![1, 5, 70, 130, 131]);
    }

    #[test]
    fn iter_ones_empty() {
        let s = BitSet::new();
        assert_eq!(s.iter_ones().count(), 0);
        assert_eq!(s.count(), 0);
    }
}
