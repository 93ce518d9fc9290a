//! Seed-derived random substreams.
//!
//! Every consumer of randomness gets its own ChaCha stream keyed by the master
//! seed, a domain tag, a lane (coincidence pair, or 0) and a chunk index.
//! Work is cut into fixed-size chunks, so the numbers drawn never depend on how
//! many threads process them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Samples per chunk. Changing this changes every seeded result.
pub const CHUNK_SIZE: usize = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Domain {
    Coincidence = 1,
    HiddenVariables = 2,
    Born = 3,
    DirectionSearch = 4,
}

pub fn substream(seed: u64, domain: Domain, lane: u8, chunk: u64) -> ChaCha8Rng {
    assert!(chunk < 1 << 48, "chunk index out of range");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((domain as u64) << 56) | ((lane as u64) << 48) | chunk);
    rng
}

/// Splits `n` items into `(chunk index, start, len)` triples.
pub fn chunks(n: usize) -> impl Iterator<Item = (u64, usize, usize)> {
    (0..n.div_ceil(CHUNK_SIZE)).map(move |c| {
        let start = c * CHUNK_SIZE;
        (c as u64, start, CHUNK_SIZE.min(n - start))
    })
}

/// Runs `f` on a pool of `workers` threads; 0 means the global rayon pool.
pub fn with_workers<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> R {
    if workers == 0 {
        return f();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}
