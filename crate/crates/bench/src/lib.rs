//! Seeded inputs shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A name-like string of `len` chars drawn from a small mixed alphabet.
pub fn name(rng: &mut impl Rng, len: usize) -> String {
    const ALPHABET: [char; 10] = ['a', 'e', 'i', 'o', 'r', 's', 't', 'n', 'é', 'ć'];
    (0..len).map(|_| ALPHABET[rng.random_range(0..ALPHABET.len())]).collect()
}

/// Space-joined words from a vocabulary of `vocab` entries.
pub fn sentence(rng: &mut impl Rng, words: usize, vocab: usize) -> String {
    (0..words).map(|_| format!("w{}", rng.random_range(0..vocab))).collect::<Vec<_>>().join(" ")
}

pub fn vector(rng: &mut impl Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()
}
