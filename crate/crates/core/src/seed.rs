//! Deterministic sub-seed derivation.
//!
//! Every run takes a single user-facing seed; each consumer of randomness
//! (noise, mask, probe vectors, ...) derives its own stream seed from the
//! pair (seed, purpose tag) so that adding a new consumer never perturbs the
//! streams of existing ones.

/// Derives a purpose-specific sub-seed from the run seed.
///
/// The tag is hashed with 64-bit FNV-1a (offset 0xcbf29ce484222325, prime
/// 0x100000001b3), XORed into the seed, and finalized with the splitmix64
/// mixer. The mapping is fixed; changing it would change every seeded
/// artifact, so it is part of the output contract.
pub fn derive(seed: u64, tag: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in tag.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x100000001b3);
    }
    splitmix64(seed ^ h)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}
