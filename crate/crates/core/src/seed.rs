//! Named sub-seeds derived from one master seed.
//!
//! Every stochastic stage draws from its own stream so a stage can be re-run in
//! isolation and still see exactly the numbers it saw inside a full run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Derives the seed for stage `name` under `master`.
pub fn derive(master: u64, name: &str) -> u64 {
    splitmix64(master ^ splitmix64(fnv1a(name.as_bytes())))
}

/// Derives an indexed seed, e.g. one per epoch or per round.
pub fn derive_indexed(master: u64, name: &str, index: u64) -> u64 {
    splitmix64(derive(master, name) ^ splitmix64(index.wrapping_add(1)))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// FNV-1a digest of a list of ids, used to prove two evaluations share a split.
pub fn hash_ids<S: AsRef<str>>(ids: &[S]) -> String {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for id in ids {
        for &b in id.as_ref().as_bytes().iter().chain(std::iter::once(&0u8)) {
            h = (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    format!("{h:016x}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_separate_streams() {
        assert_ne!(derive(7, "mining"), derive(7, "batching"));
        assert_eq!(derive(7, "mining"), derive(7, "mining"));
        assert_ne!(derive_indexed(7, "epoch", 0), derive_indexed(7, "epoch", 1));
    }
}
