//! Deterministic per-exchange random streams.
//!
//! Every random quantity in a run is drawn from a stream identified by
//! `(master_seed, shard, exchange, stream)`. The key is folded through
//! SplitMix64 into a 256-bit ChaCha8 seed, so any exchange can be replayed
//! in isolation and results do not depend on how shards are scheduled.
//!
//! Gaussian variates come from `rand_distr::StandardNormal` (ziggurat). The
//! `rand_distr` version is pinned in the manifest because changing either the
//! generator or the sampling algorithm changes every simulated number.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Concrete generator used for all simulation streams.
pub type StreamRng = ChaCha8Rng;

/// Identifies one independent random stream inside an exchange.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum StreamId {
    WireVoltage = 1,
    WireCurrent = 2,
    AliceBit = 3,
    BobBit = 4,
    AliceVoltageNoise = 5,
    AliceCurrentNoise = 6,
    BobVoltageNoise = 7,
    BobCurrentNoise = 8,
    EveVoltageNoise = 9,
    EveCoin = 10,
    /// Used by [`crate::noise::add_measurement_noise`] callers outside a session.
    Auxiliary = 11,
}

/// Position of a stream in the key space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub master_seed: u64,
    pub shard: u64,
    pub exchange: u64,
    pub stream: StreamId,
}

impl StreamKey {
    pub fn new(master_seed: u64, shard: u64, exchange: u64, stream: StreamId) -> Self {
        Self {
            master_seed,
            shard,
            exchange,
            stream,
        }
    }

    pub fn rng(&self) -> StreamRng {
        let mut state = splitmix64(self.master_seed ^ 0x6a09_e667_f3bc_c908);
        state = splitmix64(state ^ self.shard);
        state = splitmix64(state ^ self.exchange);
        state = splitmix64(state ^ self.stream as u64);
        let mut seed = [0u8; 32];
        for chunk in seed.chunks_exact_mut(8) {
            state = splitmix64(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        ChaCha8Rng::from_seed(seed)
    }
}

/// One round of the SplitMix64 finalizer (Steele, Lea, Flood 2014).
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
