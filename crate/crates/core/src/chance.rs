//! Source of randomness for policies and simulators.
//!
//! Every random decision a policy makes goes through [`Chance`]. Monte Carlo
//! runs plug in a seeded [`Sampler`]; the exact evaluator plugs in an
//! enumerator that walks every branch of the same code path.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub trait Chance {
    /// Draws a branch index; `weights` are probabilities summing to one.
    fn pick(&mut self, weights: &[f64]) -> usize;

    /// Uniform index in `0..n`, `n >= 1`.
    fn uniform(&mut self, n: usize) -> usize;

    fn bernoulli(&mut self, p: f64) -> bool {
        if p <= 0.0 {
            false
        } else if p >= 1.0 {
            true
        } else {
            self.pick(&[1.0 - p, p]) == 1
        }
    }
}

/// Fisher-Yates shuffle driven by a [`Chance`].
pub fn shuffle<T>(chance: &mut dyn Chance, items: &mut [T]) {
    for i in (1..items.len()).rev() {
        let j = chance.uniform(i + 1);
        items.swap(i, j);
    }
}

/// Monte Carlo randomness backed by any `rand` generator.
#[derive(Debug, Clone)]
pub struct Sampler<R>(pub R);

impl Sampler<ChaCha8Rng> {
    pub fn seeded(seed: u64) -> Self {
        Sampler(ChaCha8Rng::seed_from_u64(seed))
    }
}

impl<R: Rng> Chance for Sampler<R> {
    fn pick(&mut self, weights: &[f64]) -> usize {
        let mut u: f64 = self.0.gen();
        for (i, &w) in weights.iter().enumerate() {
            if u < w {
                return i;
            }
            u -= w;
        }
        // rounding slack lands on the last positive branch
        weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
    }

    fn uniform(&mut self, n: usize) -> usize {
        self.0.gen_range(0..n)
    }

    fn bernoulli(&mut self, p: f64) -> bool {
        if p <= 0.0 {
            false
        } else if p >= 1.0 {
            true
        } else {
            self.0.gen::<f64>() < p
        }
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(tag: &str) -> u64 {
    tag.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Independent generator for trial `index` of the stream named `tag`.
///
/// ChaCha is counter based, so each (seed, tag, index) triple selects its own
/// key/stream pair and results do not depend on the order trials run in.
pub fn substream(seed: u64, tag: &str, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix(seed ^ fnv1a(tag)));
    rng.set_stream(splitmix(index));
    rng
}

/// [`Sampler`] over [`substream`].
pub fn sampler(seed: u64, tag: &str, index: u64) -> Sampler<ChaCha8Rng> {
    Sampler(substream(seed, tag, index))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substreams_are_reproducible_and_distinct() {
        let a: Vec<u32> = (0..4)
            .map(|_| 0)
            .scan(substream(7, "x", 3), |r, _| Some(r.gen()))
            .collect();
        let b: Vec<u32> = (0..4)
            .map(|_| 0)
            .scan(substream(7, "x", 3), |r, _| Some(r.gen()))
            .collect();
        let c: Vec<u32> = (0..4)
            .map(|_| 0)
            .scan(substream(7, "x", 4), |r, _| Some(r.gen()))
            .collect();
        let d: Vec<u32> = (0..4)
            .map(|_| 0)
            .scan(substream(7, "y", 3), |r, _| Some(r.gen()))
            .collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn shuffle_is_a_permutation() {
        let mut s = Sampler::seeded(1);
        let mut v: Vec<usize> = (0..10).collect();
        shuffle(&mut s, &mut v);
        let mut sorted = v.clone();
        sorted.sort();
        assert_eq!(sorted, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn degenerate_bernoulli_never_consumes_randomness() {
        let mut s = Sampler::seeded(3);
        assert!(s.bernoulli(1.0));
        assert!(!s.bernoulli(0.0));
    }
}
