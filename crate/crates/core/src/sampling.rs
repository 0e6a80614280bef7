//! Randomized quasi-random points: a Halton sequence with a seeded
//! Cranley-Patterson shift.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as u64;
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += (i % b) as f64 * f;
        i /= b;
        f *= inv;
    }
    r
}

/// Deterministic point sequence in the unit cube.
#[derive(Debug, Clone)]
pub struct QuasiRandom {
    shift: Vec<f64>,
}

impl QuasiRandom {
    pub fn new(dim: usize, seed: u64) -> QuasiRandom {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        QuasiRandom {
            shift: (0..dim).map(|_| rng.random::<f64>()).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.shift.len()
    }

    /// The `i`-th point, components in `[0, 1)`.
    pub fn point(&self, i: usize) -> Vec<f64> {
        self.shift
            .iter()
            .enumerate()
            .map(|(d, s)| {
                let base = PRIMES[d % PRIMES.len()];
                // higher dimensions reuse primes with a scrambled index
                let idx = (i as u64 + 1) * (1 + (d / PRIMES.len()) as u64 * 7919);
                (radical_inverse(idx, base) + s).fract()
            })
            .collect()
    }
}

/// A per-use RNG derived from a seed and a stream index.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radical_inverse_base_two() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(2, 2), 0.25);
        assert_eq!(radical_inverse(3, 2), 0.75);
    }

    #[test]
    fn points_are_seeded_and_in_unit_cube() {
        let a = QuasiRandom::new(3, 7);
        let b = QuasiRandom::new(3, 7);
        for i in 0..50 {
            let p = a.point(i);
            assert_eq!(p, b.point(i));
            assert!(p.iter().all(|x| (0.0..1.0).contains(x)));
        }
        assert_ne!(QuasiRandom::new(3, 8).point(0), a.point(0));
    }
}
