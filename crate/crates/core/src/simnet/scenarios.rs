//! The collusion conditions under which a relay escapes every well-behaving
//! watchdog, next to a healthy neighborhood for contrast.
//!
//! All three scenarios share one neighborhood: sources 1 and 2 feed relay 4,
//! which feeds nodes 5 and 6. Relay 4 is adversarial; the scenarios differ in
//! which of its parents and children collude with it.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::protocol::{run_protocol, ProtocolRun};
use super::topology::{NodeId, Topology};
use super::NodeBehavior;
use crate::analysis::{welch_greater, SampleStats};
use crate::channel::SimRng;
use crate::error::Result;

const RELAY: NodeId = 4;
const PARENTS: [NodeId; 2] = [1, 2];
const CHILDREN: [NodeId; 2] = [5, 6];

const N: u32 = 10;
const DELTA: u32 = 2;
const P_OVERHEAR: f64 = 0.1;
const P_ADV: f64 = 0.2;
const ROUNDS: u64 = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    /// One honest parent and one honest child.
    Healthy,
    /// Every parent colludes with the relay.
    AllParentsByzantine,
    /// Every child colludes with the relay, so nothing forces its digest.
    AllChildrenByzantine,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 3] =
        [ScenarioKind::Healthy, ScenarioKind::AllParentsByzantine, ScenarioKind::AllChildrenByzantine];

    fn colluders(self) -> Vec<NodeId> {
        match self {
            ScenarioKind::Healthy => vec![PARENTS[1], CHILDREN[1]],
            ScenarioKind::AllParentsByzantine => PARENTS.to_vec(),
            ScenarioKind::AllChildrenByzantine => CHILDREN.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub kind: ScenarioKind,
    pub rounds: u64,
    /// Checks on the relay by well-behaving observers.
    pub honest_checks: usize,
    /// Honest checks made while the relay's digest was forced.
    pub covering_checks: usize,
    /// Mean `p*` those honest observers assign to the adversarial relay.
    pub adversary_p_star: Option<f64>,
    /// Mean `p*` the same observers assign when the relay behaves.
    pub honest_p_star: Option<f64>,
    /// One-sided Welch p-value for "honest relay scores higher".
    pub separation_p_value: Option<f64>,
}

impl ScenarioReport {
    pub fn covered(&self) -> bool {
        self.covering_checks > 0
    }
}

fn neighborhood() -> Result<Topology> {
    let mut topo = Topology::new(N, DELTA)?;
    for v in PARENTS.iter().chain(&[RELAY]).chain(&CHILDREN) {
        topo.add_node(*v);
    }
    for p in PARENTS {
        topo.add_link(p, RELAY, None)?;
        topo.add_overhear(RELAY, p, P_OVERHEAR)?;
    }
    topo.add_overhear(PARENTS[0], PARENTS[1], P_OVERHEAR)?;
    topo.add_overhear(PARENTS[1], PARENTS[0], P_OVERHEAR)?;
    for c in CHILDREN {
        topo.add_link(RELAY, c, None)?;
    }
    Ok(topo)
}

/// `p*` values from honest checks on the relay, and how many of them were covering.
fn honest_scores(
    topo: &Topology,
    behaviors: &BTreeMap<NodeId, NodeBehavior>,
    rng: &SimRng,
) -> Result<(Vec<f64>, usize)> {
    let run = ProtocolRun { rounds: ROUNDS, check_prob: 1.0, threshold: 0.0, hash: None };
    let records = run_protocol(topo, behaviors, &run, rng)?;
    let honest: Vec<_> = records
        .iter()
        .flat_map(|r| &r.checks)
        .filter(|c| c.target == RELAY && c.observer_truth == super::BehaviorKind::Honest)
        .collect();
    let covering = honest.iter().filter(|c| c.is_covering()).count();
    Ok((honest.iter().map(|c| c.verdict.p_star).collect(), covering))
}

fn mean(values: &[f64]) -> Option<f64> {
    SampleStats::from_values(values).ok().map(|s| s.mean)
}

/// Runs all three scenarios. Each scenario is also replayed with a
/// well-behaving relay on the same random stream for comparison.
pub fn collusion_scenarios(rng: &SimRng) -> Result<Vec<ScenarioReport>> {
    let topo = neighborhood()?;
    ScenarioKind::ALL
        .iter()
        .enumerate()
        .map(|(k, &kind)| {
            let stream = rng.fork(k as u64);
            let mut behaviors: BTreeMap<NodeId, NodeBehavior> = BTreeMap::new();
            for v in kind.colluders() {
                behaviors.insert(v, NodeBehavior::adversarial(P_ADV)?);
            }
            let baseline = honest_scores(&topo, &behaviors, &stream)?.0;
            behaviors.insert(RELAY, NodeBehavior::adversarial(P_ADV)?);
            let (attacked, covering_checks) = honest_scores(&topo, &behaviors, &stream)?;
            let separation_p_value = welch_greater(&baseline, &attacked).ok().map(|w| w.p_value);
            Ok(ScenarioReport {
                kind,
                rounds: ROUNDS,
                honest_checks: attacked.len(),
                covering_checks,
                adversary_p_star: mean(&attacked),
                honest_p_star: mean(&baseline),
                separation_p_value,
            })
        })
        .collect()
}
