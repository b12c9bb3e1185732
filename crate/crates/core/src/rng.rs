//! Counter-based random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 stream keyed by the
//! user seed and addressed by `(tag, index)`. A trial's samples therefore do
//! not depend on how trials are batched or scheduled across threads.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Stream tags. Only the low 16 bits are used.
pub mod tags {
    pub const COMM_CHANNEL: u16 = 1;
    pub const SYMBOLS: u16 = 2;
    pub const RADAR_H0: u16 = 3;
    pub const RADAR_H1: u16 = 4;
    pub const COMM_NOISE: u16 = 5;
    pub const PROBE: u16 = 6;
}

const INDEX_BITS: u32 = 48;

/// Independent stream `(tag, index)` under `seed`.
pub fn substream(seed: u64, tag: u16, index: u64) -> ChaCha8Rng {
    assert!(index < (1u64 << INDEX_BITS), "stream index out of range");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((tag as u64) << INDEX_BITS) | index);
    rng
}

/// Draws from CN(0, variance).
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}
