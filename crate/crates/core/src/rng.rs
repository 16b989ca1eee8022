//! Seeding and substream conventions.
//!
//! Every stochastic routine in this crate draws from ChaCha8 streams derived
//! from a caller-supplied `u64` seed. ChaCha's independent-stream feature maps
//! one master seed to any number of non-overlapping streams, which gives:
//!
//! * bit-reproducible runs for a fixed seed,
//! * independent per-trial and per-worker randomness, and
//! * deterministic parallel fan-out: trial `t` always uses stream `t`
//!   regardless of execution order.
//!
//! Routines that fan out internally (Monte Carlo estimators, the uniform-coded
//! redundancy search, the emulator) take a `seed: u64` and derive their own
//! substreams; leaf routines that consume a single stream take `&mut impl Rng`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The pinned generator: ChaCha with 8 rounds.
pub type Substream = ChaCha8Rng;

/// Returns stream `stream` of the generator seeded with `seed`.
pub fn substream(seed: u64, stream: u64) -> Substream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derives an unrelated seed for a nested consumer of randomness (SplitMix64
/// step), so that e.g. the uniform-coded redundancy search inside a comparison
/// does not reuse the comparison's own trial streams.
pub fn derive_seed(seed: u64, label: u64) -> u64 {
    let mut z = seed ^ label.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
