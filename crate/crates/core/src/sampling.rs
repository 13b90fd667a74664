//! Seeded quasi-random sampling of base points and directions.
//!
//! Base points come from a Halton sequence with a seed-dependent
//! Cranley–Patterson shift, so samples are reproducible for a given seed and
//! well spread for small counts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Radical inverse of `index` in base `b`.
pub fn radical_inverse(mut index: u64, b: u32) -> f64 {
    let b = b as u64;
    let inv = 1.0 / b as f64;
    let mut f = inv;
    let mut r = 0.0;
    while index > 0 {
        r += (index % b) as f64 * f;
        index /= b;
        f *= inv;
    }
    r
}

/// Shifted Halton sequence in `[0, 1)^dim`.
#[derive(Clone, Debug)]
pub struct Halton {
    dim: usize,
    shift: Vec<f64>,
    index: u64,
}

impl Halton {
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(dim <= PRIMES.len(), "Halton sequence limited to {} dimensions", PRIMES.len());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shift = (0..dim).map(|_| rng.random::<f64>()).collect();
        Halton {
            dim,
            shift,
            index: 1,
        }
    }

    pub fn next_point(&mut self) -> Vec<f64> {
        let i = self.index;
        self.index += 1;
        (0..self.dim)
            .map(|k| (radical_inverse(i, PRIMES[k]) + self.shift[k]).fract())
            .collect()
    }
}

/// Number of base points, directions per point and seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSpec {
    pub points: usize,
    pub directions: usize,
    pub seed: u64,
}

impl Default for SampleSpec {
    fn default() -> Self {
        SampleSpec {
            points: 50,
            directions: 20,
            seed: 42,
        }
    }
}

/// Maps a unit-cube point into an axis-aligned box.
pub fn to_box(u: &[f64], domain: &[(f64, f64)]) -> Vec<f64> {
    u.iter()
        .zip(domain)
        .map(|(t, (lo, hi))| lo + t * (hi - lo))
        .collect()
}

/// Unit vector from `n` uniform coordinates (Box–Muller on pairs, then
/// normalized). `u` must have even length `≥ n`.
pub fn unit_vector(u: &[f64], n: usize) -> Vec<f64> {
    let mut g = Vec::with_capacity(n + 1);
    for pair in u.chunks(2) {
        let r = (-2.0 * (1.0 - pair[0]).ln()).sqrt();
        let th = 2.0 * std::f64::consts::PI * pair.get(1).copied().unwrap_or(0.5);
        g.push(r * th.cos());
        g.push(r * th.sin());
    }
    g.truncate(n);
    let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        let mut e = vec![0.0; n];
        e[0] = 1.0;
        return e;
    }
    g.iter().map(|v| v / norm).collect()
}

/// Rotation that maps `e_0` to the unit vector `axis` (a Householder
/// reflection, so it is its own inverse).
pub fn frame_from_axis(axis: &[f64]) -> Vec<Vec<f64>> {
    let n = axis.len();
    let norm = axis.iter().map(|v| v * v).sum::<f64>().sqrt();
    let a: Vec<f64> = axis.iter().map(|v| v / norm).collect();
    let mut v: Vec<f64> = a.clone();
    v[0] -= 1.0;
    let vv: f64 = v.iter().map(|c| c * c).sum();
    let mut q = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let id = if i == j { 1.0 } else { 0.0 };
            q[i][j] = if vv < 1e-30 { id } else { id - 2.0 * v[i] * v[j] / vv };
        }
    }
    q
}

pub fn apply(q: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    q.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radical_inverse_base_two() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(2, 2), 0.25);
        assert_eq!(radical_inverse(3, 2), 0.75);
        assert!((radical_inverse(5, 3) - (2.0 / 3.0 + 1.0 / 9.0)).abs() < 1e-15);
    }

    #[test]
    fn sequences_are_reproducible() {
        let mut a = Halton::new(4, 42);
        let mut b = Halton::new(4, 42);
        let mut c = Halton::new(4, 7);
        for _ in 0..10 {
            let p = a.next_point();
            assert_eq!(p, b.next_point());
            assert_ne!(p, c.next_point());
            assert!(p.iter().all(|v| (0.0..1.0).contains(v)));
        }
    }

    #[test]
    fn householder_maps_axis() {
        let axis = [0.3, -0.4, 0.5];
        let q = frame_from_axis(&axis);
        let e0 = apply(&q, &[1.0, 0.0, 0.0]);
        let norm = (0.09f64 + 0.16 + 0.25).sqrt();
        for (got, want) in e0.iter().zip(axis.iter()) {
            assert!((got - want / norm).abs() < 1e-14);
        }
    }

    #[test]
    fn unit_vectors_are_normalized() {
        let mut h = Halton::new(4, 1);
        for _ in 0..50 {
            let u = unit_vector(&h.next_point(), 3);
            let n: f64 = u.iter().map(|v| v * v).sum();
            assert!((n - 1.0).abs() < 1e-14);
        }
    }
}
