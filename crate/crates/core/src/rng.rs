//! Seed derivation. Every consumer of randomness draws from its own ChaCha
//! stream of the run seed, so changing one consumer never shifts another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Split,
    Init { channel: u32 },
    Dropout { channel: u32 },
    Shuffle { channel: u32, epoch: u32 },
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::Split => 1,
            Stream::Init { channel } => 2 | (channel as u64) << 8,
            Stream::Dropout { channel } => 3 | (channel as u64) << 8,
            Stream::Shuffle { channel, epoch } => 4 | (channel as u64) << 8 | (epoch as u64) << 24,
        }
    }
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream.id());
    rng
}

/// A `u64` drawn from the given stream, for APIs that take a plain seed.
pub fn stream_seed(seed: u64, stream: Stream) -> u64 {
    use rand::RngCore;
    stream_rng(seed, stream).next_u64()
}
