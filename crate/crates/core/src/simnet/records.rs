use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BehaviorKind, NodeId};
use crate::error::{Result, WatchdogError};
use crate::inference::Verdict;

/// Parameters of a two-hop trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioParams {
    pub n: u32,
    pub m: usize,
    pub delta: u32,
    pub p_s: f64,
    pub p_relay: f64,
    pub p_adv: f64,
}

/// One watchdog check: `observer` scoring its downstream neighbor `target`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub observer: NodeId,
    pub target: NodeId,
    pub verdict: Verdict,
    /// Ground truth, attached after inference.
    pub observer_truth: BehaviorKind,
    pub target_truth: BehaviorKind,
    /// Whether a well-behaving child forced the target to publish the digest
    /// of its true combination.
    pub hash_forced: bool,
}

impl CheckRecord {
    /// Checks by a well-behaving observer against a target that could not
    /// choose its own digest.
    pub fn is_covering(&self) -> bool {
        self.observer_truth == BehaviorKind::Honest && self.hash_forced
    }
}

/// A check that could not run because overhearing channels were missing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedCheck {
    pub observer: NodeId,
    pub target: NodeId,
    /// Overhearing edges `(transmitter, listener)` the check would need.
    pub missing: Vec<(NodeId, NodeId)>,
}

/// Everything recorded for one trial or protocol round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    /// Seed of the random stream the trial was drawn from.
    pub seed: u64,
    /// Trial or round number.
    pub index: u64,
    /// Present for two-hop trials.
    pub params: Option<ScenarioParams>,
    pub checks: Vec<CheckRecord>,
    pub skipped: Vec<SkippedCheck>,
}

impl TrialRecord {
    /// Checks that flagged their target. Alerts are recorded, not acted on.
    pub fn alerts(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks.iter().filter(|c| c.verdict.flagged)
    }

    /// The check against a target with the given ground truth, if any.
    pub fn check_for(&self, truth: BehaviorKind) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.target_truth == truth)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|source| WatchdogError::Io { path: path.to_path_buf(), source })
}

/// One CSV line per check.
pub fn write_trials_csv(records: &[TrialRecord], path: &Path) -> Result<()> {
    let io = |source| WatchdogError::Io { path: path.to_path_buf(), source };
    let mut out = create(path)?;
    writeln!(
        out,
        "seed,index,observer,target,observer_truth,target_truth,hash_forced,p_star,matched_count,threshold,flagged"
    )
    .map_err(io)?;
    let label = |k: BehaviorKind| match k {
        BehaviorKind::Honest => "honest",
        BehaviorKind::Adversarial => "adversarial",
    };
    for r in records {
        for c in &r.checks {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{:e},{},{},{}",
                r.seed,
                r.index,
                c.observer,
                c.target,
                label(c.observer_truth),
                label(c.target_truth),
                c.hash_forced,
                c.verdict.p_star,
                c.verdict.matched_count,
                c.verdict.threshold,
                c.verdict.flagged
            )
            .map_err(io)?;
        }
    }
    out.flush().map_err(io)
}

pub fn write_trials_json(records: &[TrialRecord], path: &Path) -> Result<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, records)?;
    out.flush().map_err(|source| WatchdogError::Io { path: path.to_path_buf(), source })
}
