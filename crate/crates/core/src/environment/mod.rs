//! The stochastic world: mobility, channels and task arrivals.
//!
//! Every random process draws from its own ChaCha stream derived from the
//! run seed, so changing one parameter (or one policy) never shifts the
//! draws of another process.

pub mod channel;
pub mod mobility;
pub mod taskgen;
pub mod world;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use channel::{channel_sample, path_loss_db};
pub use mobility::{gmmm_step, position_step, MobilityState};
pub use taskgen::{generate_task, TaskGenConfig};
pub use world::{SlotSource, StationaryWorld, World, WorldConfig};

pub type WorldRng = ChaCha8Rng;

/// Stream identifiers within one seed.
#[derive(Debug, Clone, Copy)]
#[repr(u64)]
pub enum Stream {
    Devices = 1,
    Placement = 2,
    Mobility = 3,
    Channel = 4,
    Tasks = 5,
    Policy = 6,
    Learner = 7,
}

pub fn stream_rng(seed: u64, stream: u64) -> WorldRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `lo + (hi - lo) * u` with one `u ~ U[0, 1)` draw, also when `lo == hi`.
pub fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    let u: f64 = rng.random();
    lo + (hi - lo) * u
}

/// Uniform integer in `[lo, hi]` from a single draw.
pub fn uniform_int<R: Rng + ?Sized>(rng: &mut R, lo: u32, hi: u32) -> u32 {
    let u: f64 = rng.random();
    let span = f64::from(hi - lo) + 1.0;
    (lo + (u * span) as u32).min(hi)
}
