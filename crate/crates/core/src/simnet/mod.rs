//! Network simulation: node behaviors, the two-hop trial seen from one source,
//! the hop-by-hop distributed protocol, and the collusion scenarios.

mod protocol;
mod records;
mod scenarios;
mod topology;
mod two_hop;

pub use protocol::{run_protocol, Packet, ProtocolRun};
pub use records::{write_trials_csv, write_trials_json, CheckRecord, ScenarioParams, SkippedCheck, TrialRecord};
pub use scenarios::{collusion_scenarios, ScenarioKind, ScenarioReport};
pub use topology::{NetworkConfig, NodeId, Topology};
pub use two_hop::{run_two_hop_trial, TwoHopConfig, TwoHopRunner};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{random_error, Bsc, HashClasses, SimRng};
use crate::error::{Result, WatchdogError};
use crate::field::Word;
use crate::inference::{compute_p_star, matched_count, Consistency, LayerWeights};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BehaviorKind {
    Honest,
    Adversarial,
}

/// How a node treats the payload it is supposed to forward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeBehavior {
    kind: BehaviorKind,
    p_adv: f64,
}

impl NodeBehavior {
    pub fn honest() -> Self {
        Self { kind: BehaviorKind::Honest, p_adv: 0.0 }
    }

    /// Flips each payload bit independently with probability `p_adv` but
    /// publishes the digest of the uncorrupted combination whenever a
    /// well-behaving child forces it to.
    pub fn adversarial(p_adv: f64) -> Result<Self> {
        if !(0.0..=0.5).contains(&p_adv) {
            return Err(WatchdogError::Probability(p_adv));
        }
        Ok(Self { kind: BehaviorKind::Adversarial, p_adv })
    }

    pub fn kind(&self) -> BehaviorKind {
        self.kind
    }

    pub fn p_adv(&self) -> f64 {
        self.p_adv
    }

    pub fn is_honest(&self) -> bool {
        self.kind == BehaviorKind::Honest
    }

    /// Payload actually put on the air, `x ⊕ e`.
    pub fn corrupt(&self, payload: Word, rng: &mut SimRng) -> Word {
        let error = random_error(payload.width(), self.p_adv, rng);
        payload.apply_error(error).expect("error pattern has the payload's width")
    }
}

impl Default for NodeBehavior {
    fn default() -> Self {
        Self::honest()
    }
}

/// Uniform nonzero field value below `2^n`.
pub(crate) fn random_coeff(n: u32, rng: &mut SimRng) -> u32 {
    rng.random_range(1..(1u32 << n))
}

/// `p*` for a relay observation. An observation that no codeword in the
/// published digest class could produce counts as total inconsistency.
pub(crate) fn score(
    final_layer: &LayerWeights,
    relay_observed: Word,
    relay_digest: u32,
    classes: &HashClasses,
    relay_ch: Bsc,
) -> Result<Consistency> {
    match compute_p_star(final_layer, relay_observed, relay_digest, classes, relay_ch) {
        Err(WatchdogError::ZeroLikelihood) => {
            Ok(Consistency { p_star: 0.0, matched_count: matched_count(final_layer, relay_digest, classes.hash()) })
        }
        other => other,
    }
}
