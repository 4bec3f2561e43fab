//! Seeded substreams and deterministic chunked Monte-Carlo reduction.
//!
//! A sample range is cut into fixed-size chunks; chunk `c` of stream `s`
//! always draws from the same ChaCha substream, so results depend only on
//! `(seed, stream, samples)` and never on the number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

pub const CHUNK_SIZE: usize = 4096;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed; used to give each consumer its own stream family.
pub fn derive_seed(seed: u64, label: u64) -> u64 {
    splitmix64(seed ^ splitmix64(label))
}

pub fn substream(seed: u64, stream: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, stream));
    rng.set_stream(chunk);
    rng
}

/// Runs `work(rng, count)` over every chunk of `samples` in parallel and
/// returns the per-chunk results in chunk order.
pub fn map_chunks<T, F>(samples: usize, seed: u64, stream: u64, work: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, usize) -> T + Sync + Send,
{
    let chunks = samples.div_ceil(CHUNK_SIZE);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let count = CHUNK_SIZE.min(samples - c * CHUNK_SIZE);
            let mut rng = substream(seed, stream, c as u64);
            work(&mut rng, count)
        })
        .collect()
}

/// Uniform points on the unit sphere via normalized Gaussian vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SphereSampler {
    pub n: usize,
    pub seed: u64,
    pub stream: u64,
}

impl SphereSampler {
    pub fn new(n: usize, seed: u64) -> Self {
        Self { n, seed, stream: 0 }
    }

    pub fn with_stream(self, stream: u64) -> Self {
        Self { stream, ..self }
    }

    /// Point number `counter` of this stream.
    pub fn point(&self, counter: usize) -> Vec<f64> {
        let chunk = counter / CHUNK_SIZE;
        let mut rng = substream(self.seed, self.stream, chunk as u64);
        let mut buf = vec![0.0; self.n];
        for _ in 0..=counter % CHUNK_SIZE {
            unit_vector(&mut rng, &mut buf);
        }
        buf
    }

    /// The first `count` points, in counter order.
    pub fn points(&self, count: usize) -> Vec<Vec<f64>> {
        map_chunks(count, self.seed, self.stream, |rng, k| {
            let mut out = Vec::with_capacity(k);
            for _ in 0..k {
                let mut buf = vec![0.0; self.n];
                unit_vector(rng, &mut buf);
                out.push(buf);
            }
            out
        })
        .into_iter()
        .flatten()
        .collect()
    }
}

/// Overwrites `buf` with a uniform unit vector.
pub fn unit_vector<R: Rng + ?Sized>(rng: &mut R, buf: &mut [f64]) {
    loop {
        let mut sq = 0.0;
        for v in buf.iter_mut() {
            *v = rng.sample(StandardNormal);
            sq += *v * *v;
        }
        if sq > 1e-300 {
            let inv = 1.0 / sq.sqrt();
            buf.iter_mut().for_each(|v| *v *= inv);
            return;
        }
    }
}

/// Streaming mean/variance (Welford) with an exact-order merge.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningStats {
    pub count: usize,
    pub mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &RunningStats) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let total = (self.count + other.count) as f64;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / total;
        self.m2 += other.m2 + delta * delta * self.count as f64 * other.count as f64 / total;
        self.count += other.count;
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / (self.count - 1) as f64).max(0.0)
        }
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }

    pub fn merged(parts: &[RunningStats]) -> RunningStats {
        let mut acc = RunningStats::default();
        for p in parts {
            acc.merge(p);
        }
        acc
    }
}
