//! Deterministic random streams.
//!
//! A stream is a ChaCha8 generator keyed by the run seed and positioned on
//! one of its 2^64 independent streams. Sampler code never shares a
//! generator between tasks: every (iteration, phase, task index) triple
//! maps to its own stream, so results do not depend on how tasks are
//! scheduled across workers and a chain resumed from a checkpoint replays
//! exactly.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

/// Which part of a run a stream belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Phase {
    Init = 0,
    Omega = 1,
    Y = 2,
    Z = 3,
    W = 4,
    G = 5,
    Tau = 6,
    Impute = 7,
    Baseline = 8,
    Simulate = 9,
    Mask = 10,
    Ppc = 11,
    Test = 15,
}

const INDEX_BITS: u32 = 24;
const PHASE_BITS: u32 = 4;

impl RngStream {
    pub const fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// Stream for task `index` of `phase` during `iteration`.
    ///
    /// Layout of the stream id: `iteration << 28 | phase << 24 | index`.
    /// Indices must stay below 2^24, iterations below 2^36.
    pub fn derive(seed: u64, iteration: u64, phase: Phase, index: u64) -> Self {
        debug_assert!(index < (1 << INDEX_BITS));
        debug_assert!(iteration < (1 << (64 - INDEX_BITS - PHASE_BITS)));
        let id = (iteration << (INDEX_BITS + PHASE_BITS))
            | ((phase as u64) << INDEX_BITS)
            | (index & ((1 << INDEX_BITS) - 1));
        Self::new(seed, id)
    }

    pub fn rng(&self) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}
