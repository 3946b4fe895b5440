//! Binary symmetric channels, the affine digest carried in packet headers,
//! and the seedable random streams every simulation draws from.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WatchdogError};
use crate::field::Word;

/// Largest supported digest width in bits.
pub const MAX_DIGEST_BITS: u32 = 20;

/// Binary symmetric channel with crossover probability `p ∈ [0, 0.5]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bsc {
    p: f64,
}

impl Bsc {
    pub fn new(p: f64) -> Result<Self> {
        if !(0.0..=0.5).contains(&p) {
            return Err(WatchdogError::Probability(p));
        }
        Ok(Self { p })
    }

    pub fn noiseless() -> Self {
        Self { p: 0.0 }
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Flip each bit of `word` independently with probability `p`.
    pub fn transmit(&self, word: Word, rng: &mut SimRng) -> Word {
        let error = random_error(word.width(), self.p, rng);
        word.apply_error(error).expect("error pattern has the word's width")
    }

    /// `p^d (1-p)^(width-d)` for every distance `d` in `0..=width`.
    pub fn likelihood_table(&self, width: u32) -> Vec<f64> {
        (0..=width as i32).map(|d| self.p.powi(d) * (1.0 - self.p).powi(width as i32 - d)).collect()
    }
}

pub fn bsc_transmit(word: Word, ch: Bsc, rng: &mut SimRng) -> Word {
    ch.transmit(word, rng)
}

/// Error pattern with i.i.d. Bernoulli(`p`) bits.
pub fn random_error(width: u32, p: f64, rng: &mut SimRng) -> Word {
    let mut bits = 0u32;
    if p > 0.0 {
        for i in 0..width {
            if rng.random_bool(p) {
                bits |= 1 << i;
            }
        }
    }
    Word::new(bits, width)
}

/// Chance that at least one of two independent BSCs flips a given bit.
///
/// This overstates the cascade's crossover by `p1·p2`: a bit flipped by both
/// arrives intact, so the cascade itself is BSC(`p1 + p2 - 2·p1·p2`).
pub fn compose_bsc(p1: f64, p2: f64) -> f64 {
    p1 + p2 - p1 * p2
}

/// Affine digest `h(x) = (a·x + b) mod 2^δ` over the integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HashFn {
    a: u32,
    b: u32,
    delta: u32,
}

impl HashFn {
    pub fn new(a: u32, b: u32, delta: u32) -> Result<Self> {
        if delta > MAX_DIGEST_BITS {
            return Err(WatchdogError::Hash(format!("digest width {delta} exceeds {MAX_DIGEST_BITS}")));
        }
        if delta == 0 {
            // Empty digest: a and b carry no information.
            return Ok(Self { a: 0, b: 0, delta });
        }
        let modulus = 1u32 << delta;
        if a == 0 || a >= modulus {
            return Err(WatchdogError::Hash(format!("a={a} must lie in [1, {modulus})")));
        }
        if b >= modulus {
            return Err(WatchdogError::Hash(format!("b={b} must lie in [0, {modulus})")));
        }
        Ok(Self { a, b, delta })
    }

    /// Uniform `a ∈ [1, 2^δ)` and `b ∈ [0, 2^δ)`.
    pub fn random(delta: u32, rng: &mut SimRng) -> Result<Self> {
        if delta == 0 {
            return Self::new(0, 0, 0);
        }
        let modulus = 1u32 << delta.min(MAX_DIGEST_BITS);
        let a = rng.random_range(1..modulus);
        let b = rng.random_range(0..modulus);
        Self::new(a, b, delta)
    }

    pub fn a(&self) -> u32 {
        self.a
    }

    pub fn b(&self) -> u32 {
        self.b
    }

    pub fn delta(&self) -> u32 {
        self.delta
    }

    #[inline]
    pub fn eval(&self, x: u32) -> u32 {
        if self.delta == 0 {
            return 0;
        }
        let mask = (1u64 << self.delta) - 1;
        ((self.a as u64 * x as u64 + self.b as u64) & mask) as u32
    }

    /// Partition of `{0,1}^n` by digest.
    pub fn classes(&self, n: u32) -> HashClasses {
        HashClasses::new(*self, n)
    }
}

pub fn hash_eval(h: &HashFn, x: u32) -> u32 {
    h.eval(x)
}

/// Every `n`-bit value grouped by its digest, each group in increasing order.
///
/// Built once per hash function and shared by all candidate sets that use it.
#[derive(Debug, Clone)]
pub struct HashClasses {
    hash: HashFn,
    n: u32,
    members: Vec<Vec<u32>>,
}

impl HashClasses {
    pub fn new(hash: HashFn, n: u32) -> Self {
        let mut members = vec![Vec::new(); 1usize << hash.delta];
        for x in 0..(1u32 << n) {
            members[hash.eval(x) as usize].push(x);
        }
        Self { hash, n, members }
    }

    pub fn hash(&self) -> &HashFn {
        &self.hash
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// Values hashing to `digest`; empty for digests outside `[0, 2^δ)`.
    pub fn members(&self, digest: u32) -> &[u32] {
        self.members.get(digest as usize).map_or(&[], Vec::as_slice)
    }

    pub fn class_sizes(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().map(Vec::len)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seedable random stream. Child streams are derived from `(seed, label)`
/// alone, so trials draw the same numbers regardless of evaluation order.
#[derive(Debug, Clone)]
pub struct SimRng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl SimRng {
    pub fn new(seed: u64) -> Self {
        Self { seed, inner: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent child stream keyed by `label`; does not advance `self`.
    pub fn fork(&self, label: u64) -> SimRng {
        SimRng::new(splitmix64(self.seed ^ splitmix64(label.wrapping_add(0x5bd1_e995))))
    }
}

impl RngCore for SimRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_channel_is_identity() {
        let mut rng = SimRng::new(1);
        for v in 0..1024 {
            let w = Word::new(v, 10);
            assert_eq!(Bsc::noiseless().transmit(w, &mut rng), w);
        }
    }

    #[test]
    fn rejects_out_of_range_crossover() {
        assert!(Bsc::new(-0.1).is_err());
        assert!(Bsc::new(0.51).is_err());
        assert!(Bsc::new(f64::NAN).is_err());
        assert!(Bsc::new(0.5).is_ok());
    }

    #[test]
    fn flip_rate_matches_crossover() {
        let ch = Bsc::new(0.1).unwrap();
        let mut rng = SimRng::new(7);
        let words = 10_000;
        let flips: u32 = (0..words).map(|_| ch.transmit(Word::new(0, 10), &mut rng).bits().count_ones()).sum();
        let rate = flips as f64 / (words as f64 * 10.0);
        assert!((rate - 0.1).abs() < 0.01, "rate {rate}");
    }

    #[test]
    fn half_crossover_is_uniform_per_bit() {
        // chi-square over the two outcomes of each bit position, 1 dof, 10^4 draws.
        let ch = Bsc::new(0.5).unwrap();
        let mut rng = SimRng::new(11);
        let draws = 10_000;
        let mut ones = [0u32; 8];
        for _ in 0..draws {
            let w = ch.transmit(Word::new(0b1010_0110, 8), &mut rng);
            for (i, c) in ones.iter_mut().enumerate() {
                *c += w.bits() >> i & 1;
            }
        }
        let expected = draws as f64 / 2.0;
        for c in ones {
            let chi2 = 2.0 * (c as f64 - expected).powi(2) / expected;
            // 99.9% quantile of chi-square with one degree of freedom
            assert!(chi2 < 10.83, "chi2 {chi2}");
        }
    }

    #[test]
    fn forked_streams_replay() {
        let root = SimRng::new(42);
        let a: Vec<u64> = (0..4).map(|_| 0).scan(root.fork(3), |r, _: u64| Some(r.next_u64())).collect();
        let b: Vec<u64> = (0..4).map(|_| 0).scan(SimRng::new(42).fork(3), |r, _: u64| Some(r.next_u64())).collect();
        assert_eq!(a, b);
        let mut c = root.fork(4);
        assert_ne!(a[0], c.next_u64());
    }

    #[test]
    fn hash_examples() {
        let trivial = HashFn::new(0, 0, 0).unwrap();
        assert!((0..1024).all(|x| trivial.eval(x) == 0));
        assert_eq!(HashFn::new(1, 0, 2).unwrap().eval(0b1011), 0b11);
        assert_eq!(HashFn::new(3, 1, 2).unwrap().eval(6), 3);
    }

    #[test]
    fn hash_rejects_bad_parameters() {
        assert!(HashFn::new(0, 0, 2).is_err());
        assert!(HashFn::new(4, 0, 2).is_err());
        assert!(HashFn::new(1, 4, 2).is_err());
        assert!(HashFn::new(1, 0, 21).is_err());
    }

    #[test]
    fn random_hash_stays_in_range() {
        let mut rng = SimRng::new(5);
        for delta in 1..6 {
            for _ in 0..100 {
                let h = HashFn::random(delta, &mut rng).unwrap();
                assert!(h.a() >= 1 && h.a() < 1 << delta);
                assert!(h.b() < 1 << delta);
            }
        }
    }

    #[test]
    fn odd_multipliers_give_equal_classes() {
        for n in 1..=12u32 {
            for delta in 0..=n.min(4) {
                let modulus = 1u32 << delta;
                for a in (1..modulus.max(2)).step_by(2) {
                    for b in 0..modulus {
                        let classes = HashFn::new(a, b, delta).unwrap().classes(n);
                        assert!(classes.class_sizes().all(|s| s == 1 << (n - delta)));
                        assert_eq!(classes.class_sizes().sum::<usize>(), 1 << n);
                    }
                }
            }
        }
    }

    #[test]
    fn even_multipliers_partition_unevenly() {
        let classes = HashFn::new(2, 1, 2).unwrap().classes(6);
        let sizes: Vec<usize> = classes.class_sizes().collect();
        assert_eq!(sizes, vec![0, 32, 0, 32]);
        assert!(classes.members(0).is_empty());
        assert!(classes.members(99).is_empty());
    }

    #[test]
    fn compose_examples() {
        assert_eq!(compose_bsc(0.0, 0.3), 0.3);
        assert!((compose_bsc(0.1, 0.1) - 0.19).abs() < 1e-15);
        for p in [0.0, 0.1, 0.25, 0.5] {
            assert!(compose_bsc(0.5, p) >= 0.5);
        }
    }

    proptest::proptest! {
        #[test]
        fn compose_is_symmetric_and_monotone(p in 0.0..0.5f64, q in 0.0..0.5f64, dq in 0.0..0.1f64) {
            proptest::prop_assert_eq!(compose_bsc(p, q), compose_bsc(q, p));
            proptest::prop_assert!(compose_bsc(p, q + dq) >= compose_bsc(p, q));
        }
    }
}
