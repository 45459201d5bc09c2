//! Counter-based seeding.
//!
//! Every random number in the crate is addressed by a key instead of being
//! drawn from a shared stream: site phases by `(seed, site)`, trials by
//! `(master seed, trial index)`. Results do not depend on evaluation order.

use crate::lattice::Site;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// One step of the splitmix64 generator, used as a 64-bit mixer.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of trial `index` in an ensemble with master seed `master`.
pub fn trial_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index.wrapping_add(0x5851_F42D_4C95_7F2D)))
}

fn site_key(site: Site) -> u64 {
    ((site.m as i32 as u32 as u64) << 32) | (site.n as i32 as u32 as u64)
}

/// Uniform number in `[0, 1)` attached to `site` under `seed`.
///
/// The ChaCha stream id is the site key, so each site owns an independent stream.
pub fn site_uniform(seed: u64, site: Site) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(site_key(site));
    unit_f64(rng.next_u64())
}

/// Top 53 bits of `bits` as a float in `[0, 1)`.
pub fn unit_f64(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
