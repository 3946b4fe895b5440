//! Network graph `G = (V, E1, E2)` and its plain-text configuration format.
//!
//! A network file is TOML:
//!
//! ```toml
//! n = 10          # payload bits
//! delta = 2       # digest bits
//! threshold = 0.0 # optional, flag when p* <= threshold
//!
//! # optional fixed digest function; otherwise drawn every round
//! [hash]
//! a = 3
//! b = 1
//!
//! [[nodes]]
//! id = 1
//!
//! [[nodes]]
//! id = 4
//! behavior = "adversarial"   # default "honest"
//! p_adv = 0.2
//!
//! # intended transmissions (E1); coeff is drawn every round when omitted
//! [[links]]
//! from = 1
//! to = 4
//! coeff = 3
//!
//! # overhearing channels (E2): `to` hears `from` through BSC(p)
//! [[overhear]]
//! from = 2
//! to = 1
//! p = 0.1
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use petgraph::algo::toposort;
use petgraph::graphmap::DiGraphMap;
use serde::{Deserialize, Serialize};

use super::{BehaviorKind, NodeBehavior};
use crate::channel::{Bsc, HashFn};
use crate::error::{Result, WatchdogError};
use crate::field::FieldParams;

pub type NodeId = u32;

/// Directed network of intended links (E1) and overhearing channels (E2).
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    field: FieldParams,
    delta: u32,
    nodes: BTreeSet<NodeId>,
    /// `(child, parent) -> α`, `None` meaning a fresh coefficient each round.
    links: BTreeMap<(NodeId, NodeId), Option<u32>>,
    overhear: BTreeMap<(NodeId, NodeId), Bsc>,
}

impl Topology {
    pub fn new(n: u32, delta: u32) -> Result<Self> {
        let field = FieldParams::new(n)?;
        if delta > n {
            return Err(WatchdogError::Config(format!("delta={delta} exceeds n={n}")));
        }
        Ok(Self { field, delta, nodes: BTreeSet::new(), links: BTreeMap::new(), overhear: BTreeMap::new() })
    }

    pub fn field(&self) -> FieldParams {
        self.field
    }

    pub fn delta(&self) -> u32 {
        self.delta
    }

    pub fn add_node(&mut self, id: NodeId) -> &mut Self {
        self.nodes.insert(id);
        self
    }

    fn require(&self, id: NodeId) -> Result<()> {
        if self.nodes.contains(&id) {
            Ok(())
        } else {
            Err(WatchdogError::Config(format!("unknown node {id}")))
        }
    }

    /// Intended transmission `from -> to` with coding coefficient `coeff`.
    pub fn add_link(&mut self, from: NodeId, to: NodeId, coeff: Option<u32>) -> Result<&mut Self> {
        self.require(from)?;
        self.require(to)?;
        if from == to {
            return Err(WatchdogError::Config(format!("self-link on node {from}")));
        }
        if let Some(c) = coeff {
            if c == 0 || c > self.field.mask() {
                return Err(WatchdogError::Config(format!(
                    "coefficient {c} on link {from}->{to} must be a nonzero {}-bit value",
                    self.field.n()
                )));
            }
        }
        self.links.insert((to, from), coeff);
        Ok(self)
    }

    /// `listener` overhears `transmitter` through BSC(`p`).
    pub fn add_overhear(&mut self, transmitter: NodeId, listener: NodeId, p: f64) -> Result<&mut Self> {
        self.require(transmitter)?;
        self.require(listener)?;
        if transmitter == listener {
            return Err(WatchdogError::Config(format!("node {transmitter} cannot overhear itself")));
        }
        self.overhear.insert((transmitter, listener), Bsc::new(p)?);
        Ok(self)
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().copied()
    }

    /// Parents of `v` in E1, ascending.
    pub fn parents(&self, v: NodeId) -> Vec<NodeId> {
        self.links.range((v, NodeId::MIN)..=(v, NodeId::MAX)).map(|(&(_, u), _)| u).collect()
    }

    /// Children of `u` in E1, ascending.
    pub fn children(&self, u: NodeId) -> Vec<NodeId> {
        self.links.keys().filter(|&&(_, p)| p == u).map(|&(c, _)| c).collect()
    }

    pub fn coeff(&self, child: NodeId, parent: NodeId) -> Option<Option<u32>> {
        self.links.get(&(child, parent)).copied()
    }

    pub fn overhearing(&self, transmitter: NodeId, listener: NodeId) -> Option<Bsc> {
        self.overhear.get(&(transmitter, listener)).copied()
    }

    pub fn overhear_edges(&self) -> impl Iterator<Item = ((NodeId, NodeId), Bsc)> + '_ {
        self.overhear.iter().map(|(&k, &v)| (k, v))
    }

    /// Transmission order: every node after all of its parents.
    pub fn schedule(&self) -> Result<Vec<NodeId>> {
        let mut graph = DiGraphMap::<NodeId, ()>::new();
        for &v in &self.nodes {
            graph.add_node(v);
        }
        for &(child, parent) in self.links.keys() {
            graph.add_edge(parent, child, ());
        }
        let order = toposort(&graph, None).map_err(|cycle| WatchdogError::Cyclic(cycle.node_id()))?;
        // toposort's order among independent nodes depends on insertion; rank by
        // depth, then id, for a schedule that reads naturally.
        let mut depth: BTreeMap<NodeId, usize> = BTreeMap::new();
        for &v in &order {
            let d = self.parents(v).iter().map(|p| depth[p] + 1).max().unwrap_or(0);
            depth.insert(v, d);
        }
        let mut ranked = order;
        ranked.sort_by_key(|v| (depth[v], *v));
        Ok(ranked)
    }

    /// Two-hop neighborhood: sources `1..=m` feed relay `m+1`, which feeds sink
    /// `m+2`. Every source overhears every other source at `p_s` and the relay
    /// at `p_relay`.
    pub fn two_hop(n: u32, delta: u32, m: usize, p_s: f64, p_relay: f64) -> Result<Self> {
        let mut topo = Self::new(n, delta)?;
        let m = m as NodeId;
        let (relay, sink) = (m + 1, m + 2);
        for v in 1..=sink {
            topo.add_node(v);
        }
        for s in 1..=m {
            topo.add_link(s, relay, None)?;
            topo.add_overhear(relay, s, p_relay)?;
            for other in (1..=m).filter(|&o| o != s) {
                topo.add_overhear(other, s, p_s)?;
            }
        }
        topo.add_link(relay, sink, None)?;
        Ok(topo)
    }
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct NodeEntry {
    id: NodeId,
    #[serde(default = "default_kind")]
    behavior: BehaviorKind,
    #[serde(default)]
    p_adv: f64,
}

fn default_kind() -> BehaviorKind {
    BehaviorKind::Honest
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct LinkEntry {
    from: NodeId,
    to: NodeId,
    coeff: Option<u32>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct OverhearEntry {
    from: NodeId,
    to: NodeId,
    p: f64,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct HashEntry {
    a: u32,
    b: u32,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct NetworkFile {
    n: u32,
    delta: u32,
    threshold: Option<f64>,
    hash: Option<HashEntry>,
    #[serde(default)]
    nodes: Vec<NodeEntry>,
    #[serde(default)]
    links: Vec<LinkEntry>,
    #[serde(default)]
    overhear: Vec<OverhearEntry>,
}

/// A topology plus per-node behaviors, as read from a network file.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    pub topology: Topology,
    pub behaviors: BTreeMap<NodeId, NodeBehavior>,
    pub threshold: f64,
    pub hash: Option<HashFn>,
}

impl NetworkConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let file: NetworkFile = toml::from_str(text).map_err(|e| WatchdogError::Parse(e.to_string()))?;
        let mut topology = Topology::new(file.n, file.delta)?;
        let mut behaviors = BTreeMap::new();
        for node in &file.nodes {
            if behaviors.contains_key(&node.id) {
                return Err(WatchdogError::Config(format!("node {} listed twice", node.id)));
            }
            topology.add_node(node.id);
            let behavior = match node.behavior {
                BehaviorKind::Honest if node.p_adv != 0.0 => {
                    return Err(WatchdogError::Config(format!("honest node {} has p_adv={}", node.id, node.p_adv)))
                }
                BehaviorKind::Honest => NodeBehavior::honest(),
                BehaviorKind::Adversarial => NodeBehavior::adversarial(node.p_adv)?,
            };
            behaviors.insert(node.id, behavior);
        }
        for link in &file.links {
            topology.add_link(link.from, link.to, link.coeff)?;
        }
        for edge in &file.overhear {
            topology.add_overhear(edge.from, edge.to, edge.p)?;
        }
        let threshold = file.threshold.unwrap_or(0.0);
        if !(0.0..=1.0).contains(&threshold) {
            return Err(WatchdogError::Threshold(threshold));
        }
        let hash = file.hash.map(|h| HashFn::new(h.a, h.b, file.delta)).transpose()?;
        Ok(Self { topology, behaviors, threshold, hash })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|source| WatchdogError::Io { path: path.to_path_buf(), source })?;
        Self::from_toml(&text)
    }
}
