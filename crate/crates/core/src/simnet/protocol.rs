//! Hop-by-hop distributed watchdog.
//!
//! Each round, nodes transmit in schedule order. Afterwards every node
//! independently decides, with probability `check_prob`, to check its
//! neighborhood; if it does, it runs the two-hop watchdog on each downstream
//! neighbor using its own transmitted payload as the exactly known input and
//! the overheard transmissions of that neighbor's other parents.

use std::collections::BTreeMap;

use log::debug;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::records::{CheckRecord, SkippedCheck, TrialRecord};
use super::topology::{NodeId, Topology};
use super::{random_coeff, score, NodeBehavior};
use crate::channel::{HashClasses, HashFn, SimRng};
use crate::error::{Result, WatchdogError};
use crate::field::Word;
use crate::inference::{decide, infer_combinations, Observation, OverheardSource};

const HASH: u64 = 1;
const PAYLOAD: u64 = 2;
const COEFF: u64 = 3;
const ADVERSARY: u64 = 4;
const NOISE: u64 = 5;
const CHECK: u64 = 6;

fn pair(a: NodeId, b: NodeId) -> u64 {
    (a as u64) << 32 | b as u64
}

/// Run-level settings for [`run_protocol`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolRun {
    pub rounds: u64,
    /// Probability that a node checks its neighborhood in a given round.
    pub check_prob: f64,
    pub threshold: f64,
    /// Fixed digest function; drawn afresh every round when `None`.
    pub hash: Option<HashFn>,
}

/// A transmitted packet: header fields arrive intact, the payload may not.
#[derive(Debug, Clone, PartialEq)]
pub struct Packet {
    /// `α_u` for each parent `u`, in ascending parent order.
    pub coeffs: Vec<u32>,
    /// Digest of the payload received from each parent.
    pub parent_hashes: Vec<u32>,
    pub own_hash: u32,
    pub payload: Word,
    /// At least one well-behaving child holds the node to the digest of its
    /// true combination.
    pub hash_forced: bool,
}

/// Runs `run.rounds` rounds and returns one record per round.
pub fn run_protocol(
    topo: &Topology,
    behaviors: &BTreeMap<NodeId, NodeBehavior>,
    run: &ProtocolRun,
    rng: &SimRng,
) -> Result<Vec<TrialRecord>> {
    if !(0.0..=1.0).contains(&run.check_prob) {
        return Err(WatchdogError::Config(format!("check probability {} outside [0, 1]", run.check_prob)));
    }
    if !(0.0..=1.0).contains(&run.threshold) {
        return Err(WatchdogError::Threshold(run.threshold));
    }
    if let Some(h) = run.hash {
        if h.delta() != topo.delta() {
            return Err(WatchdogError::Config(format!(
                "hash width {} differs from network delta {}",
                h.delta(),
                topo.delta()
            )));
        }
    }
    if let Some(id) = behaviors.keys().find(|id| !topo.nodes().any(|v| v == **id)) {
        return Err(WatchdogError::Config(format!("behavior given for unknown node {id}")));
    }
    let schedule = topo.schedule()?;
    let pinned = run.hash.map(|h| h.classes(topo.field().n()));
    (0..run.rounds)
        .map(|round| {
            let round_rng = rng.fork(round);
            let fresh;
            let classes = match &pinned {
                Some(c) => c,
                None => {
                    fresh = HashFn::random(topo.delta(), &mut round_rng.fork(HASH))?.classes(topo.field().n());
                    &fresh
                }
            };
            run_round(topo, behaviors, run, &schedule, classes, &round_rng, round)
        })
        .collect()
}

fn behavior_of(behaviors: &BTreeMap<NodeId, NodeBehavior>, v: NodeId) -> NodeBehavior {
    behaviors.get(&v).copied().unwrap_or_default()
}

fn run_round(
    topo: &Topology,
    behaviors: &BTreeMap<NodeId, NodeBehavior>,
    run: &ProtocolRun,
    schedule: &[NodeId],
    classes: &HashClasses,
    rng: &SimRng,
    round: u64,
) -> Result<TrialRecord> {
    let field = topo.field();
    let n = field.n();
    let hash = classes.hash();

    let mut packets: BTreeMap<NodeId, Packet> = BTreeMap::new();
    for &v in schedule {
        let parents = topo.parents(v);
        let coeffs: Vec<u32> = parents
            .iter()
            .map(|&u| match topo.coeff(v, u).flatten() {
                Some(c) => c,
                None => random_coeff(n, &mut rng.fork(COEFF).fork(pair(v, u))),
            })
            .collect();
        // Intended links deliver exactly what the parent transmitted.
        let true_payload = if parents.is_empty() {
            rng.fork(PAYLOAD).fork(v as u64).random_range(0..field.order())
        } else {
            parents.iter().zip(&coeffs).fold(0, |acc, (u, &a)| acc ^ field.mul(a, packets[u].payload.bits()))
        };
        let behavior = behavior_of(behaviors, v);
        let payload = behavior.corrupt(Word::new(true_payload, n), &mut rng.fork(ADVERSARY).fork(v as u64));
        let hash_forced = topo.children(v).iter().any(|&c| behavior_of(behaviors, c).is_honest());
        // Without a well-behaving child to answer to, an adversary publishes
        // the digest of what it actually sent.
        let own_hash =
            if behavior.is_honest() || hash_forced { hash.eval(true_payload) } else { hash.eval(payload.bits()) };
        let parent_hashes = parents.iter().map(|u| hash.eval(packets[u].payload.bits())).collect();
        packets.insert(v, Packet { coeffs, parent_hashes, own_hash, payload, hash_forced });
    }

    let overheard: BTreeMap<(NodeId, NodeId), Word> = topo
        .overhear_edges()
        .map(|((t, l), ch)| ((t, l), ch.transmit(packets[&t].payload, &mut rng.fork(NOISE).fork(pair(t, l)))))
        .collect();

    let mut checks = Vec::new();
    let mut skipped = Vec::new();
    for &u in schedule {
        if run.check_prob <= 0.0 || !rng.fork(CHECK).fork(u as u64).random_bool(run.check_prob) {
            continue;
        }
        for v in topo.children(u) {
            let parents = topo.parents(v);
            let mut missing: Vec<(NodeId, NodeId)> =
                parents.iter().filter(|&&w| w != u && topo.overhearing(w, u).is_none()).map(|&w| (w, u)).collect();
            if topo.overhearing(v, u).is_none() {
                missing.push((v, u));
            }
            if !missing.is_empty() {
                debug!("round {round}: node {u} cannot check {v}, missing overhearing {missing:?}");
                skipped.push(SkippedCheck { observer: u, target: v, missing });
                continue;
            }
            let packet = &packets[&v];
            let slot = |w: NodeId| parents.iter().position(|&p| p == w).expect("parent of v");
            let others = parents
                .iter()
                .filter(|&&w| w != u)
                .map(|&w| OverheardSource {
                    coeff: packet.coeffs[slot(w)],
                    observed: overheard[&(w, u)],
                    digest: packet.parent_hashes[slot(w)],
                    channel: topo.overhearing(w, u).expect("checked above"),
                })
                .collect();
            let relay_channel = topo.overhearing(v, u).expect("checked above");
            let obs = Observation {
                own_coeff: packet.coeffs[slot(u)],
                own_payload: packets[&u].payload.bits(),
                others,
                relay_observed: overheard[&(v, u)],
                relay_digest: packet.own_hash,
                relay_channel,
            };
            let final_layer = infer_combinations(field, &obs, classes)?;
            let consistency = score(&final_layer, obs.relay_observed, obs.relay_digest, classes, relay_channel)?;
            checks.push(CheckRecord {
                observer: u,
                target: v,
                verdict: decide(consistency, run.threshold)?,
                observer_truth: behavior_of(behaviors, u).kind(),
                target_truth: behavior_of(behaviors, v).kind(),
                hash_forced: packet.hash_forced,
            });
        }
    }

    Ok(TrialRecord { seed: rng.seed(), index: round, params: None, checks, skipped })
}
