//! Deterministic, thread-count independent random streams.
//!
//! Work is split into fixed-size chunks; chunk `k` draws from
//! `ChaCha8(seed)` on stream `k`, so the output never depends on how rayon
//! schedules the chunks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::Result;
use crate::vecops::{dot, norm, scaled};

pub(crate) const CHUNK: usize = 1024;

pub(crate) fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

/// Runs `f(rng, len)` for each chunk of `count` items and concatenates the
/// results in chunk order.
pub(crate) fn par_chunks<T, F>(seed: u64, count: usize, chunk: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, usize) -> Result<Vec<T>> + Sync,
{
    let chunks = count.div_ceil(chunk);
    let parts: Vec<Result<Vec<T>>> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let len = chunk.min(count - k * chunk);
            f(&mut chunk_rng(seed, k as u64), len)
        })
        .collect();
    let mut out = Vec::with_capacity(count);
    for part in parts {
        out.extend(part?);
    }
    Ok(out)
}

/// Uniform direction on the unit sphere in `d` dimensions.
pub(crate) fn unit_direction(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let n = norm(&v);
        if n > 1e-300 {
            return scaled(&v, 1.0 / n);
        }
    }
}

pub(crate) fn satisfies(normals: &[Vec<f64>], eps: &[f64]) -> bool {
    normals.iter().all(|n| dot(n, eps) >= 0.0)
}
