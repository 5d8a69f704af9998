//! Sparse tagged data memory.
//!
//! Words never written hold a deterministic value derived from the memory
//! seed and the address, so loads from fresh memory see varied data. Each
//! 8-byte granule carries one tag bit.

use std::collections::{BTreeMap, BTreeSet};

use crate::capability::Capability;

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Memory {
    seed: u64,
    /// Word address (4-aligned) to value, for words that differ from the default.
    words: BTreeMap<u32, u32>,
    /// Granule indices (`addr >> 3`) whose tag is set.
    tags: BTreeSet<u32>,
}

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Expands a 4-bit byte enable into a 32-bit mask.
pub fn byte_mask(be: u8) -> u32 {
    (0..4).filter(|i| be & (1 << i) != 0).fold(0, |m, i| m | (0xFF << (8 * i)))
}

impl Memory {
    pub fn new(seed: u64) -> Self {
        Memory { seed, ..Default::default() }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn default_word(&self, word_addr: u32) -> u32 {
        mix(self.seed ^ u64::from(word_addr).wrapping_mul(0x9E37_79B9_7F4A_7C15)) as u32
    }

    pub fn read_word(&self, addr: u32) -> u32 {
        let a = addr & !3;
        self.words.get(&a).copied().unwrap_or_else(|| self.default_word(a))
    }

    pub fn granule_tag(&self, addr: u32) -> bool {
        self.tags.contains(&(addr >> 3))
    }

    /// One bus read: the aligned word and its granule tag.
    pub fn read(&self, addr: u32) -> (u32, bool) {
        (self.read_word(addr), self.granule_tag(addr))
    }

    /// One bus write. Bytes selected by `be` are replaced and the granule
    /// tag becomes `wtag`.
    pub fn write(&mut self, addr: u32, be: u8, wdata: u32, wtag: bool) {
        let a = addr & !3;
        let mask = byte_mask(be);
        let value = (self.read_word(a) & !mask) | (wdata & mask);
        if value == self.default_word(a) {
            self.words.remove(&a);
        } else {
            self.words.insert(a, value);
        }
        if wtag {
            self.tags.insert(a >> 3);
        } else {
            self.tags.remove(&(a >> 3));
        }
    }

    /// Capability stored in the granule containing `addr`.
    pub fn read_cap(&self, addr: u32) -> Capability {
        let a = addr & !7;
        let lo = u64::from(self.read_word(a));
        let hi = u64::from(self.read_word(a.wrapping_add(4)));
        Capability::from_bits(lo | (hi << 32), self.granule_tag(a))
    }

    pub fn tagged_granules(&self) -> impl Iterator<Item = u32> + '_ {
        self.tags.iter().map(|g| g << 3)
    }

    /// Words that differ from the seeded default.
    pub fn written_words(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.words.iter().map(|(a, v)| (*a, *v))
    }
}
