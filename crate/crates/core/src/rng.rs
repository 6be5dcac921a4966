//! Counter-based random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 stream whose key is a
//! pure function of `(master seed, domain, index)` and whose 64-bit stream id
//! is a further label (a genealogical node key, a path number, ...). Two
//! computations that ask for the same labels see the same numbers no matter
//! which thread runs them or in which order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn mix64(a: u64, b: u64) -> u64 {
    let mut s = a ^ b.wrapping_mul(0xD6E8_FEB8_6659_FD93);
    splitmix64(&mut s)
}

/// Domains separate unrelated consumers of the same master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Natural = 1,
    Generation = 2,
    Tagged = 3,
    Exponential = 4,
    Offspring = 5,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamFactory {
    master_seed: u64,
}

impl StreamFactory {
    pub fn new(master_seed: u64) -> Self {
        Self { master_seed }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream(&self, domain: Domain, index: u64, label: u64) -> Stream {
        let mut state = mix64(mix64(self.master_seed, domain as u64), index);
        let mut seed = [0u8; 32];
        for chunk in seed.chunks_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(label);
        rng
    }
}

/// Key of a node in the Ulam–Harris tree, built by hashing the child-index path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeKey(pub u64);

impl NodeKey {
    pub const ROOT: NodeKey = NodeKey(0x243F_6A88_85A3_08D3);

    pub fn child(self, index: usize) -> NodeKey {
        NodeKey(mix64(self.0, index as u64 + 1))
    }
}
