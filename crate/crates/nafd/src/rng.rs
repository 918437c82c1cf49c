//! Labeled, splittable random streams.
//!
//! A stream is identified by a master seed and a list of integer labels
//! (typically sweep point and trial index). The labels are folded into a
//! 64-bit state with SplitMix64:
//!
//! ```text
//! s = splitmix(master)
//! for (i, l) in labels: s = splitmix(s ^ splitmix(l + (i + 1) * 0x9E3779B97F4A7C15))
//! ```
//!
//! and the 32-byte ChaCha8 key is four further SplitMix64 outputs from `s`,
//! written little-endian. Every step is integer arithmetic with wrapping
//! semantics, so the streams are identical on every platform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// One SplitMix64 output for the given state.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, labels: &[u64]) -> u64 {
    let mut s = splitmix64(master);
    for (i, &l) in labels.iter().enumerate() {
        let tag = l.wrapping_add((i as u64 + 1).wrapping_mul(GOLDEN));
        s = splitmix64(s ^ splitmix64(tag));
    }
    s
}

/// Independent stream for `(master, labels...)`.
pub fn stream(master: u64, labels: &[u64]) -> Stream {
    let mut s = derive_seed(master, labels);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        s = splitmix64(s);
        chunk.copy_from_slice(&s.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Seed source for a family of trials sharing a master seed and a prefix of
/// labels, e.g. one sweep point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Streams {
    master: u64,
    prefix: Vec<u64>,
}

impl Streams {
    pub fn new(master: u64) -> Self {
        Self {
            master,
            prefix: Vec::new(),
        }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    /// Child family with one more label.
    pub fn child(&self, label: u64) -> Self {
        let mut prefix = self.prefix.clone();
        prefix.push(label);
        Self {
            master: self.master,
            prefix,
        }
    }

    pub fn trial(&self, t: u64) -> Stream {
        let mut labels = self.prefix.clone();
        labels.push(t);
        stream(self.master, &labels)
    }
}
