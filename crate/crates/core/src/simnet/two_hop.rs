use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::records::{CheckRecord, ScenarioParams, TrialRecord};
use super::{random_coeff, score, BehaviorKind, NodeBehavior};
use crate::channel::{Bsc, HashClasses, HashFn, SimRng};
use crate::error::{Result, WatchdogError};
use crate::field::{FieldParams, Word};
use crate::inference::{decide, infer_combinations, Observation, OverheardSource};

const PAYLOADS: u64 = 1;
const COEFFS: u64 = 2;
const HASH: u64 = 3;
const SOURCE_NOISE: u64 = 4;
const RELAY_NOISE: u64 = 5;
const ADVERSARY: u64 = 6;

/// The neighborhood of one observer: sources `v_1..v_m` feed relay `v_{m+1}`,
/// and `v_1` overhears `v_2..v_m` at crossover `p_s` and the relay at `p_relay`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoHopConfig {
    pub n: u32,
    pub m: usize,
    pub delta: u32,
    pub p_s: f64,
    pub p_relay: f64,
    pub p_adv: f64,
    pub threshold: f64,
    /// Fixed digest function; drawn afresh per trial when `None`.
    pub hash: Option<HashFn>,
}

impl Default for TwoHopConfig {
    fn default() -> Self {
        Self { n: 10, m: 3, delta: 2, p_s: 0.1, p_relay: 0.1, p_adv: 0.1, threshold: 0.0, hash: None }
    }
}

impl TwoHopConfig {
    pub fn params(&self) -> ScenarioParams {
        ScenarioParams {
            n: self.n,
            m: self.m,
            delta: self.delta,
            p_s: self.p_s,
            p_relay: self.p_relay,
            p_adv: self.p_adv,
        }
    }

    pub fn validate(&self) -> Result<FieldParams> {
        let field = FieldParams::new(self.n)?;
        if self.m == 0 {
            return Err(WatchdogError::Config("m must be at least 1".into()));
        }
        if self.delta > self.n {
            return Err(WatchdogError::Config(format!("delta={} exceeds n={}", self.delta, self.n)));
        }
        for p in [self.p_s, self.p_relay, self.p_adv] {
            Bsc::new(p)?;
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(WatchdogError::Threshold(self.threshold));
        }
        if let Some(h) = self.hash {
            if h.delta() != self.delta {
                return Err(WatchdogError::Config(format!(
                    "pinned hash has width {} but delta={}",
                    h.delta(),
                    self.delta
                )));
            }
        }
        Ok(field)
    }
}

/// What the relay puts on the air and what the observer hears of it.
pub(crate) fn relay_transmission(
    payload: Word,
    behavior: &NodeBehavior,
    relay_ch: Bsc,
    adversary_rng: &mut SimRng,
    channel_rng: &mut SimRng,
) -> (Word, Word) {
    let sent = behavior.corrupt(payload, adversary_rng);
    (sent, relay_ch.transmit(sent, channel_rng))
}

/// Runs paired trials for one configuration.
///
/// Both arms of a trial share the sources, coefficients, digest function, the
/// observer's overheard words and the relay channel's noise pattern; the only
/// difference is the adversary's error vector. With `p_adv = 0` the two arms
/// are therefore identical.
#[derive(Debug, Clone)]
pub struct TwoHopRunner {
    cfg: TwoHopConfig,
    field: FieldParams,
    pinned: Option<Arc<HashClasses>>,
}

impl TwoHopRunner {
    pub fn new(cfg: TwoHopConfig) -> Result<Self> {
        let field = cfg.validate()?;
        let pinned = cfg.hash.map(|h| Arc::new(h.classes(cfg.n)));
        Ok(Self { cfg, field, pinned })
    }

    pub fn config(&self) -> &TwoHopConfig {
        &self.cfg
    }

    /// One paired trial drawn from `rng`. Checks are ordered honest, adversarial.
    pub fn run(&self, rng: &SimRng, index: u64) -> Result<TrialRecord> {
        let cfg = &self.cfg;
        let n = cfg.n;
        let m = cfg.m;

        let mut payload_rng = rng.fork(PAYLOADS);
        let payloads: Vec<u32> = (0..m).map(|_| payload_rng.random_range(0..(1u32 << n))).collect();
        let mut coeff_rng = rng.fork(COEFFS);
        let coeffs: Vec<u32> = (0..m).map(|_| random_coeff(n, &mut coeff_rng)).collect();
        let classes = match &self.pinned {
            Some(c) => Arc::clone(c),
            None => Arc::new(HashFn::random(cfg.delta, &mut rng.fork(HASH))?.classes(n)),
        };
        let hash = *classes.hash();

        let source_ch = Bsc::new(cfg.p_s)?;
        let mut noise_rng = rng.fork(SOURCE_NOISE);
        let others: Vec<OverheardSource> = (1..m)
            .map(|i| OverheardSource {
                coeff: coeffs[i],
                observed: source_ch.transmit(Word::new(payloads[i], n), &mut noise_rng),
                digest: hash.eval(payloads[i]),
                channel: source_ch,
            })
            .collect();

        // Intended links are error-free, so the relay combines the true payloads.
        let relay_payload = coeffs.iter().zip(&payloads).fold(0, |acc, (&a, &x)| acc ^ self.field.mul(a, x));
        let relay_digest = hash.eval(relay_payload);
        let relay_ch = Bsc::new(cfg.p_relay)?;

        let observation = Observation {
            own_coeff: coeffs[0],
            own_payload: payloads[0],
            others,
            relay_observed: Word::new(0, n),
            relay_digest,
            relay_channel: relay_ch,
        };
        let final_layer = infer_combinations(self.field, &observation, &classes)?;

        let arms = [NodeBehavior::honest(), NodeBehavior::adversarial(cfg.p_adv)?];
        let mut checks = Vec::with_capacity(arms.len());
        for behavior in arms {
            let (_, heard) = relay_transmission(
                Word::new(relay_payload, n),
                &behavior,
                relay_ch,
                &mut rng.fork(ADVERSARY),
                &mut rng.fork(RELAY_NOISE),
            );
            let consistency = score(&final_layer, heard, relay_digest, &classes, relay_ch)?;
            checks.push(CheckRecord {
                observer: 1,
                target: m as u32 + 1,
                verdict: decide(consistency, cfg.threshold)?,
                observer_truth: BehaviorKind::Honest,
                target_truth: behavior.kind(),
                hash_forced: true,
            });
        }

        Ok(TrialRecord { seed: rng.seed(), index, params: Some(cfg.params()), checks, skipped: Vec::new() })
    }
}

/// A single paired two-hop trial.
pub fn run_two_hop_trial(cfg: &TwoHopConfig, rng: &SimRng) -> Result<TrialRecord> {
    TwoHopRunner::new(*cfg)?.run(rng, 0)
}
