//! Small deterministic helpers shared across modules.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// 64-bit FNV-1a. Stable across platforms and releases, unlike `core::hash`.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Mixes a seed with a string key and a counter into a new seed (splitmix64 finalizer).
pub fn derive_seed(seed: u64, key: &str, counter: u64) -> u64 {
    let mut z = seed ^ fnv1a(key.as_bytes()).rotate_left(17) ^ counter.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// The RNG used everywhere a seed must reproduce a result bit-for-bit.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const NUMBER_WORDS: [&str; 11] = [
    "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
];

/// English number word for `0..=10`, `None` above.
pub fn number_word(n: usize) -> Option<&'static str> {
    NUMBER_WORDS.get(n).copied()
}

pub fn number_words() -> &'static [&'static str] {
    &NUMBER_WORDS
}
