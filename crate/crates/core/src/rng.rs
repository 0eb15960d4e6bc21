//! Seeded random streams.
//!
//! Every consumer of randomness draws from its own xoshiro256++ stream. A
//! stream is identified by the run seed plus a path of integer tags, and the
//! generator seed is obtained by folding the tags through splitmix64:
//!
//! * `[INIT, layer]`: parameter initialization, one stream per parameter tensor
//! * `[SHUFFLE, epoch]`: minibatch order
//! * `[DROPOUT, epoch, example]`: dropout masks, one stream per example visit
//! * `[SYNTH, well]`: synthetic well generation
//!
//! Because streams never depend on scheduling, runs are bit-reproducible for a
//! given seed regardless of thread count.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

pub type Prng = Xoshiro256PlusPlus;

pub const INIT: u64 = 1;
pub const SHUFFLE: u64 = 2;
pub const DROPOUT: u64 = 3;
pub const SYNTH: u64 = 4;
pub const DATA: u64 = 5;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A named position in the stream tree; cheap to copy and fork.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stream(u64);

impl Stream {
    pub fn root(seed: u64) -> Self {
        Stream(splitmix64(seed))
    }

    pub fn fork(self, tag: u64) -> Self {
        Stream(splitmix64(
            self.0 ^ splitmix64(tag.wrapping_add(0x632B_E59B_D9B4_E019)),
        ))
    }

    pub fn rng(self) -> Prng {
        Prng::seed_from_u64(self.0)
    }
}
