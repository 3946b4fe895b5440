//! Brute-force reference implementations used to check the library.
//!
//! Nothing here calls into the inference code: field products, digests and
//! posteriors are recomputed from scratch by exhaustive enumeration.

#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::Rng;
use watchdog_core::SimRng;

/// Shift-and-add product, reducing after every shift.
pub fn slow_mul(a: u32, b: u32, n: u32, poly: u32) -> u32 {
    let top = 1u32 << n;
    let (mut a, mut b, mut acc) = (a, b, 0u32);
    while b != 0 {
        if b & 1 == 1 {
            acc ^= a;
        }
        b >>= 1;
        a <<= 1;
        if a & top != 0 {
            a ^= poly;
        }
    }
    acc
}

pub fn digest(a: u32, b: u32, delta: u32, x: u32) -> u32 {
    ((a as u64 * x as u64 + b as u64) % (1u64 << delta)) as u32
}

pub fn bsc_likelihood(p: f64, n: u32, x: u32, y: u32) -> f64 {
    let d = (x ^ y).count_ones() as i32;
    p.powi(d) * (1.0 - p).powi(n as i32 - d)
}

/// A random two-hop check small enough to enumerate.
#[derive(Debug, Clone)]
pub struct Instance {
    pub n: u32,
    pub poly: u32,
    pub hash: (u32, u32, u32),
    pub p: f64,
    pub coeffs: Vec<u32>,
    pub payloads: Vec<u32>,
    /// Overheard words of sources `2..=m`.
    pub heard: Vec<u32>,
    pub relay_heard: u32,
}

impl Instance {
    pub fn m(&self) -> usize {
        self.coeffs.len()
    }

    pub fn h(&self, x: u32) -> u32 {
        let (a, b, delta) = self.hash;
        digest(a, b, delta, x)
    }

    pub fn relay_payload(&self) -> u32 {
        self.coeffs.iter().zip(&self.payloads).fold(0, |acc, (&a, &x)| acc ^ slow_mul(a, x, self.n, self.poly))
    }

    /// Normalized posterior over all `2^n` words for source `i` (0-based, `i ≥ 1`).
    pub fn posterior(&self, i: usize) -> BTreeMap<u32, f64> {
        let target = self.h(self.payloads[i]);
        let heard = self.heard[i - 1];
        let raw: BTreeMap<u32, f64> = (0..1u32 << self.n)
            .filter(|&y| self.h(y) == target)
            .map(|y| (y, bsc_likelihood(self.p, self.n, heard, y)))
            .filter(|&(_, w)| w > 0.0)
            .collect();
        let total: f64 = raw.values().sum();
        raw.into_iter().map(|(y, w)| (y, w / total)).collect()
    }

    /// Sum over every tuple of candidates of the product of their probabilities,
    /// keyed by the resulting combination.
    pub fn final_weights(&self) -> BTreeMap<u32, f64> {
        let posteriors: Vec<Vec<(u32, f64)>> = (1..self.m()).map(|i| self.posterior(i).into_iter().collect()).collect();
        let mut out = BTreeMap::new();
        let start = slow_mul(self.coeffs[0], self.payloads[0], self.n, self.poly);
        self.enumerate(&posteriors, 0, start, 1.0, &mut out);
        out
    }

    fn enumerate(&self, posts: &[Vec<(u32, f64)>], k: usize, acc: u32, w: f64, out: &mut BTreeMap<u32, f64>) {
        if k == posts.len() {
            *out.entry(acc).or_insert(0.0) += w;
            return;
        }
        for &(y, t) in &posts[k] {
            let next = acc ^ slow_mul(self.coeffs[k + 1], y, self.n, self.poly);
            self.enumerate(posts, k + 1, next, w * t, out);
        }
    }

    /// Reachable combinations after each layer, by explicit product enumeration.
    pub fn reachable(&self) -> Vec<Vec<u32>> {
        let mut layers = vec![vec![slow_mul(self.coeffs[0], self.payloads[0], self.n, self.poly)]];
        for i in 1..self.m() {
            let support: Vec<u32> = self.posterior(i).into_keys().collect();
            let mut next: Vec<u32> = layers[i - 1]
                .iter()
                .flat_map(|&s| support.iter().map(move |&y| (s, y)))
                .map(|(s, y)| s ^ slow_mul(self.coeffs[i], y, self.n, self.poly))
                .collect();
            next.sort_unstable();
            next.dedup();
            layers.push(next);
        }
        layers
    }

    /// `p*` as a double sum over every state and every word of the relay's class.
    pub fn p_star(&self, weights: &BTreeMap<u32, f64>) -> f64 {
        let target = self.h(self.relay_payload());
        let mut total = 0.0;
        for s in 0..1u32 << self.n {
            let Some(&w) = weights.get(&s) else { continue };
            if self.h(s) != target {
                continue;
            }
            let norm: f64 = (0..1u32 << self.n)
                .filter(|&y| self.h(y) == target)
                .map(|y| bsc_likelihood(self.p, self.n, self.relay_heard, y))
                .sum();
            total += w * bsc_likelihood(self.p, self.n, self.relay_heard, s) / norm;
        }
        total
    }
}

fn noisy(x: u32, n: u32, p: f64, rng: &mut SimRng) -> u32 {
    (0..n).fold(x, |acc, bit| if rng.random::<f64>() < p { acc ^ (1 << bit) } else { acc })
}

/// Draws a random instance; `poly` must be irreducible of degree `n`.
pub fn random_instance(n: u32, poly: u32, m: usize, delta: u32, p: f64, rng: &mut SimRng) -> Instance {
    let size = 1u32 << n;
    let hash = if delta == 0 {
        (0, 0, 0)
    } else {
        (rng.random_range(1..1u32 << delta), rng.random_range(0..1u32 << delta), delta)
    };
    let coeffs: Vec<u32> = (0..m).map(|_| rng.random_range(1..size)).collect();
    let payloads: Vec<u32> = (0..m).map(|_| rng.random_range(0..size)).collect();
    let heard = payloads[1..].iter().map(|&x| noisy(x, n, p, rng)).collect();
    let mut inst = Instance { n, poly, hash, p, coeffs, payloads, heard, relay_heard: 0 };
    inst.relay_heard = noisy(inst.relay_payload(), n, p, rng);
    inst
}

/// Runs the same instance through the library pipeline.
pub fn via_library(inst: &Instance) -> (watchdog_core::LayerWeights, watchdog_core::Consistency) {
    use watchdog_core::{build_trellis, candidate_set, compute_p_star, forward_pass, Bsc, FieldParams, HashFn, Word};

    let field = FieldParams::with_poly(inst.n, inst.poly).unwrap();
    let (a, b, delta) = inst.hash;
    let classes = HashFn::new(a, b, delta).unwrap().classes(inst.n);
    let ch = Bsc::new(inst.p).unwrap();
    let others = (1..inst.m())
        .map(|i| {
            let set =
                candidate_set(i + 1, Word::new(inst.heard[i - 1], inst.n), inst.h(inst.payloads[i]), &classes, ch)
                    .unwrap();
            (inst.coeffs[i], set)
        })
        .collect();
    let trellis = build_trellis(field, (inst.coeffs[0], inst.payloads[0]), others).unwrap();
    let last = forward_pass(&trellis);
    let consistency =
        compute_p_star(&last, Word::new(inst.relay_heard, inst.n), inst.h(inst.relay_payload()), &classes, ch).unwrap();
    (last, consistency)
}

/// Largest absolute difference between two sparse weight maps, or `None` if
/// their supports differ.
pub fn weight_gap(lib: &[(u32, f64)], oracle: &BTreeMap<u32, f64>) -> Option<f64> {
    if lib.len() != oracle.len() {
        return None;
    }
    let mut gap = 0.0f64;
    for &(s, w) in lib {
        gap = gap.max((oracle.get(&s)? - w).abs());
    }
    Some(gap)
}
