//! Counter-based random streams.
//!
//! Every random quantity in a campaign is drawn from a ChaCha8 stream keyed
//! by `(master seed, purpose tag, run index)`: the tag selects the ChaCha
//! stream id and the run index selects a disjoint 2^48-word window of the
//! counter. Results therefore never depend on how runs are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Purpose tags. Distinct tags give statistically independent streams for
/// the same run index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    Exploration = 1,
    LimitPath = 2,
    Branching = 3,
    Uniformity = 4,
    NoiseFloor = 5,
    Bootstrap = 6,
    Degree = 7,
    Growth = 8,
    Materialize = 9,
    RestrictedWalk = 10,
    Generic = 11,
}

const WINDOW_BITS: u32 = 48;

pub fn stream(seed: u64, purpose: Purpose, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose as u64);
    rng.set_word_pos((index as u128) << WINDOW_BITS);
    rng
}
