//! Splittable, counter-based random streams.
//!
//! A [`RngStream`] is only a descriptor `(master_seed, stream_index)`. Every
//! generator is built from it on demand, so the same descriptor always yields
//! the same sequence. Parallel loops hand out substreams by batch or trial
//! index, which makes every result independent of the worker count.

use std::ops::Range;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Generator type produced by [`RngStream::generator`].
pub type StreamRng = ChaCha8Rng;

/// Trials handled by one generator in [`par_batches`].
pub const BATCH_SIZE: usize = 2048;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RngStream {
    master_seed: u64,
    stream_index: u64,
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(master_seed: u64) -> Self {
        Self { master_seed, stream_index: 0 }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_index(&self) -> u64 {
        self.stream_index
    }

    /// Child stream `index`. The child's key mixes both coordinates of the
    /// parent, so `derive(derive(s, a), b)` and `derive(derive(s, b), a)`
    /// are unrelated streams.
    pub fn derive(&self, index: u64) -> Self {
        let key = splitmix64(self.master_seed ^ splitmix64(self.stream_index.wrapping_add(0x5851_F42D_4C95_7F2D)));
        Self { master_seed: key, stream_index: index }
    }

    /// Convenience for labelled sub-experiments.
    pub fn derive_labeled(&self, label: &str) -> Self {
        let h = label
            .bytes()
            .fold(0xCBF2_9CE4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01B3));
        self.derive(h)
    }

    pub fn generator(&self) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_index);
        rng
    }
}

/// Runs `f` over `trials` split into fixed batches of [`BATCH_SIZE`]; batch
/// `b` always draws from `stream.derive(b)`. Results come back in batch order.
pub fn par_batches<R, F>(stream: RngStream, trials: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(Range<usize>, &mut StreamRng) -> R + Sync,
{
    let batches = trials.div_ceil(BATCH_SIZE);
    (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream.derive(b as u64).generator();
            let lo = b * BATCH_SIZE;
            f(lo..(lo + BATCH_SIZE).min(trials), &mut rng)
        })
        .collect()
}

/// One substream per item; results in index order.
pub fn par_indexed<R, F>(stream: RngStream, count: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize, &mut StreamRng) -> R + Sync,
{
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream.derive(i as u64).generator();
            f(i, &mut rng)
        })
        .collect()
}

/// Running mean / variance (Welford), merged in a fixed order.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Moments {
    pub count: u64,
    pub mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let d = other.mean - self.mean;
        self.mean += d * other.count as f64 / n;
        self.m2 += other.m2 + d * d * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            f64::INFINITY
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

impl FromIterator<f64> for Moments {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut m = Moments::default();
        iter.into_iter().for_each(|x| m.push(x));
        m
    }
}
