//! Counter-based random substreams.
//!
//! Every random draw in an experiment comes from a ChaCha8 generator keyed by
//! the root seed, with the 64-bit ChaCha stream id laid out as
//!
//! ```text
//!   bits 63..40  scale index      (24 bits)
//!   bits 39..8   replication      (32 bits)
//!   bits  7..0   purpose tag      ( 8 bits)
//! ```
//!
//! so a replication's draws do not depend on which thread runs it, or on
//! how many other replications ran before it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
#[repr(u8)]
pub enum Purpose {
    Inputs = 1,
    Noise = 2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StreamId {
    pub seed: u64,
    pub scale: u32,
    pub replication: u32,
    pub purpose: Purpose,
}

pub const MAX_SCALES: u32 = 1 << 24;

impl StreamId {
    pub fn new(seed: u64, scale: u32, replication: u32, purpose: Purpose) -> Self {
        assert!(scale < MAX_SCALES, "scale index {scale} does not fit in 24 bits");
        Self { seed, scale, replication, purpose }
    }

    pub fn stream_word(&self) -> u64 {
        (u64::from(self.scale) << 40) | (u64::from(self.replication) << 8) | self.purpose as u64
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_word());
        rng
    }
}
