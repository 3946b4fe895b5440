//! Fixtures shared by the benchmarks.

use watchdog_core::{build_trellis, candidate_set, Bsc, FieldParams, HashClasses, HashFn, SimRng, Trellis, Word};

/// A watchdog trellis for `m` sources of `n` bits, overheard at crossover `p`.
pub struct TrellisFixture {
    pub field: FieldParams,
    pub classes: HashClasses,
    pub trellis: Trellis,
    pub relay_observed: Word,
    pub relay_digest: u32,
    pub channel: Bsc,
}

pub fn trellis_fixture(n: u32, m: usize, delta: u32, p: f64, seed: u64) -> TrellisFixture {
    let field = FieldParams::new(n).unwrap();
    let mut rng = SimRng::new(seed);
    let hash = HashFn::random(delta, &mut rng).unwrap();
    let classes = hash.classes(n);
    let channel = Bsc::new(p).unwrap();
    // Deterministic spread of payloads and nonzero coefficients.
    let payloads: Vec<u32> = (0..m as u32).map(|i| (i + 1).wrapping_mul(0x9e37_79b9) & field.mask()).collect();
    let coeffs: Vec<u32> = (0..m as u32).map(|i| 1 + (i * 0x2f) % field.mask()).collect();
    let others = (1..m)
        .map(|i| {
            let heard = channel.transmit(Word::new(payloads[i], n), &mut rng);
            (coeffs[i], candidate_set(i + 1, heard, hash.eval(payloads[i]), &classes, channel).unwrap())
        })
        .collect();
    let trellis = build_trellis(field, (coeffs[0], payloads[0]), others).unwrap();
    let relay = coeffs.iter().zip(&payloads).fold(0, |acc, (&a, &x)| acc ^ field.mul(a, x));
    let relay_observed = channel.transmit(Word::new(relay, n), &mut rng);
    TrellisFixture { field, classes, trellis, relay_observed, relay_digest: hash.eval(relay), channel }
}
