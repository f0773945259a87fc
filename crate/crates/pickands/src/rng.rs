//! Reproducible random streams.
//!
//! Every replicate draws from its own counter-based stream derived from
//! `(master seed, phase, replicate index)`. Streams never depend on thread
//! scheduling, so estimates are bit-identical under any worker count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent stream families within one run. Keeping phases disjoint
/// guarantees e.g. that a pilot run shares no randomness with the main run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    /// Main replicate loop of an estimator.
    Main,
    /// Second estimator leg of a paired check (rhs, capacity side, ...).
    Secondary,
    /// Pilot run used to calibrate truncation thresholds.
    Pilot,
    /// Max-stable (Brown–Resnick) sample loop.
    MaxStable,
}

impl Phase {
    fn tag(self) -> u64 {
        match self {
            Phase::Main => 0,
            Phase::Secondary => 1,
            Phase::Pilot => 2,
            Phase::MaxStable => 3,
        }
    }
}

/// The stream for replicate `index` of `phase` under `seed`.
pub fn replicate_rng(seed: u64, phase: Phase, index: u64) -> ChaCha8Rng {
    debug_assert!(index < 1 << 48, "replicate index exceeds stream space");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((phase.tag() << 48) | index);
    rng
}
