//! Fixed-width bit set used by the combinatorial searches.

pub(crate) const WORDS: usize = 4;
pub(crate) const CAPACITY: usize = 64 * WORDS;

#[derive(Clone, Copy, PartialEq, Eq, Default, Debug)]
pub(crate) struct Bits([u64; WORDS]);

impl Bits {
    pub(crate) fn empty() -> Self {
        Bits([0; WORDS])
    }

    /// Bits `0..len` set.
    pub(crate) fn prefix(len: usize) -> Self {
        debug_assert!(len <= CAPACITY);
        let mut b = Bits::empty();
        for (w, word) in b.0.iter_mut().enumerate() {
            let lo = w * 64;
            if len >= lo + 64 {
                *word = u64::MAX;
            } else if len > lo {
                *word = (1u64 << (len - lo)) - 1;
            }
        }
        b
    }

    #[inline]
    pub(crate) fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1u64 << (i % 64);
    }

    #[inline]
    pub(crate) fn get(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }

    #[inline]
    pub(crate) fn or(self, other: Bits) -> Bits {
        let mut out = self;
        for w in 0..WORDS {
            out.0[w] |= other.0[w];
        }
        out
    }

    #[inline]
    pub(crate) fn and(self, other: Bits) -> Bits {
        let mut out = self;
        for w in 0..WORDS {
            out.0[w] &= other.0[w];
        }
        out
    }

    /// Shift towards higher indices; bits pushed past the capacity are lost.
    #[inline]
    pub(crate) fn shl(self, n: usize) -> Bits {
        let mut out = [0u64; WORDS];
        let (ws, bs) = (n / 64, n % 64);
        for w in (ws..WORDS).rev() {
            let src = w - ws;
            let mut v = self.0[src] << bs;
            if bs > 0 && src > 0 {
                v |= self.0[src - 1] >> (64 - bs);
            }
            out[w] = v;
        }
        Bits(out)
    }

    #[inline]
    pub(crate) fn count(&self) -> u32 {
        self.0.iter().map(|w| w.count_ones()).sum()
    }

    /// Index of the lowest clear bit.
    #[inline]
    pub(crate) fn first_zero(&self) -> usize {
        for (w, word) in self.0.iter().enumerate() {
            if *word != u64::MAX {
                return w * 64 + word.trailing_ones() as usize;
            }
        }
        CAPACITY
    }

    /// Index of the highest clear bit below `len`, if any.
    #[inline]
    pub(crate) fn last_zero_below(&self, len: usize) -> Option<usize> {
        let inv = Bits::prefix(len).and(self.not());
        for w in (0..WORDS).rev() {
            if inv.0[w] != 0 {
                return Some(w * 64 + 63 - inv.0[w].leading_zeros() as usize);
            }
        }
        None
    }

    #[inline]
    fn not(self) -> Bits {
        let mut out = self;
        for w in out.0.iter_mut() {
            *w = !*w;
        }
        out
    }
}
