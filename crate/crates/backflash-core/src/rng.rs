//! Counter-based splittable random number streams.
//!
//! Every stochastic draw in a simulation comes from a [`StreamRng`] derived
//! from a [`RngStreamKey`]. Distinct keys yield statistically independent
//! streams and the same key always yields the identical stream, so results
//! are reproducible regardless of evaluation order or thread scheduling.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// The RNG used for all simulation draws.
pub type StreamRng = ChaCha12Rng;

/// Randomness domains, kept disjoint so that event indices never collide
/// across uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum StreamDomain {
    /// Pulse generation and forward routing of one pulse's photons.
    Pulse = 1,
    /// Dark count arrival times of one detector.
    DarkCounts = 2,
    /// Detection draws (efficiency, jitter) of one detector.
    Detection = 3,
    /// Backflash emission and reverse propagation of one click's photons.
    Backflash = 4,
    /// Eavesdropper-side interception draws.
    Intercept = 5,
}

/// Identifies one independent deterministic substream.
///
/// `trial_index` separates whole runs that share a scenario seed (sweep
/// points, scan angles); `event_index` separates per-event streams inside a
/// run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStreamKey {
    pub seed: u64,
    pub trial_index: u64,
    pub domain: StreamDomain,
    pub event_index: u64,
}

impl RngStreamKey {
    pub fn new(seed: u64, trial_index: u64, domain: StreamDomain, event_index: u64) -> Self {
        Self {
            seed,
            trial_index,
            domain,
            event_index,
        }
    }

    /// Derive the stream for this key.
    ///
    /// The key's four words are mixed through a splitmix64 chain into a full
    /// 256-bit ChaCha seed, so streams for distinct keys are unrelated even
    /// when the words differ in a single bit.
    pub fn stream(&self) -> StreamRng {
        let mut state = splitmix64(self.seed ^ 0x9e37_79b9_7f4a_7c15);
        state = splitmix64(state ^ self.trial_index);
        state = splitmix64(state ^ (self.domain as u64));
        state = splitmix64(state ^ self.event_index);

        let mut seed_bytes = [0u8; 32];
        for chunk in seed_bytes.chunks_exact_mut(8) {
            state = splitmix64(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        ChaCha12Rng::from_seed(seed_bytes)
    }
}

/// splitmix64 finalizer; the standard 64-bit mix used to expand seeds.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
