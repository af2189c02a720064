//! Per-repetition random streams.
//!
//! Every stream is seeded with `SHA-256("ddrb/stream" ‖ master ‖ rep ‖ role)`
//! (integers little-endian), so a repetition is reproducible from the master
//! seed and its index alone, independently of how many other repetitions run
//! or in which order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Which component a random stream feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamRole {
    Environment,
    /// Base learner by (expanded) index.
    Base(usize),
    Meta,
}

impl StreamRole {
    fn tag(self) -> [u8; 9] {
        let (kind, index) = match self {
            StreamRole::Environment => (0u8, 0u64),
            StreamRole::Base(i) => (1, i as u64),
            StreamRole::Meta => (2, 0),
        };
        let mut out = [0u8; 9];
        out[0] = kind;
        out[1..].copy_from_slice(&index.to_le_bytes());
        out
    }
}

/// 64-bit identifier of a repetition, reported alongside its outputs.
pub fn repetition_seed(master: u64, rep: usize) -> u64 {
    let digest = Sha256::new()
        .chain_update(b"ddrb/rep")
        .chain_update(master.to_le_bytes())
        .chain_update((rep as u64).to_le_bytes())
        .finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

pub fn stream(master: u64, rep: usize, role: StreamRole) -> ChaCha8Rng {
    let digest = Sha256::new()
        .chain_update(b"ddrb/stream")
        .chain_update(master.to_le_bytes())
        .chain_update((rep as u64).to_le_bytes())
        .chain_update(role.tag())
        .finalize();
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(seed)
}
