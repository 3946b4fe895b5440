//! Hash-constrained inference of a relay's expected output.
//!
//! The observer knows its own payload exactly and overhears every other
//! source through a noisy channel. Each overheard word, together with the
//! error-free digest from the packet header, yields a [`CandidateSet`]: the
//! posterior over payloads that hash to that digest. The [`Trellis`] chains
//! these sets so that layer `i` holds every reachable partial combination
//! `Σ_{j≤i} α_j x_j`, and [`forward_pass`] sums path probabilities into each
//! state. [`compute_p_star`] then scores the relay's overheard transmission
//! against the final layer.
//!
//! All maps are sparse and kept sorted by state so that floating-point sums are
//! evaluated in a fixed order and results replay bit-for-bit.

use serde::{Deserialize, Serialize};

use crate::channel::{Bsc, HashClasses, HashFn};
use crate::error::{Result, WatchdogError};
use crate::field::{FieldParams, Word};

/// Posterior over the payload of one overheard source.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    source_index: usize,
    observed: Word,
    digest: u32,
    entries: Vec<(u32, f64)>,
}

impl CandidateSet {
    pub fn source_index(&self) -> usize {
        self.source_index
    }

    pub fn observed(&self) -> Word {
        self.observed
    }

    pub fn digest(&self) -> u32 {
        self.digest
    }

    /// `(codeword, probability)` pairs in increasing codeword order.
    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn probability(&self, y: u32) -> f64 {
        self.entries.binary_search_by_key(&y, |&(v, _)| v).map_or(0.0, |i| self.entries[i].1)
    }
}

/// Builds the posterior over codewords `y` with `h(y) = digest` given the
/// overheard word, weighting each by `p^Δ (1-p)^(n-Δ)` and normalizing.
///
/// With `p = 0` the result is the point mass on `observed`, which must then
/// itself carry the digest.
pub fn candidate_set(
    source_index: usize,
    observed: Word,
    digest: u32,
    classes: &HashClasses,
    ch: Bsc,
) -> Result<CandidateSet> {
    let n = classes.n();
    if observed.width() != n {
        return Err(WatchdogError::WidthMismatch(observed.width(), n));
    }
    let class = classes.members(digest);
    if class.is_empty() {
        return Err(WatchdogError::EmptyHashClass(digest));
    }
    let likelihood = ch.likelihood_table(n);
    let mut entries: Vec<(u32, f64)> = class
        .iter()
        .map(|&y| (y, likelihood[(y ^ observed.bits()).count_ones() as usize]))
        .filter(|&(_, w)| w > 0.0)
        .collect();
    let norm: f64 = entries.iter().map(|&(_, w)| w).sum();
    if entries.is_empty() || norm <= 0.0 {
        return Err(WatchdogError::ImpossibleObservation {
            observed: observed.bits(),
            digest,
            actual: classes.hash().eval(observed.bits()),
        });
    }
    for (_, w) in &mut entries {
        *w /= norm;
    }
    Ok(CandidateSet { source_index, observed, digest, entries })
}

/// Aggregate weights `w(s, i)` of one trellis layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerWeights {
    layer_index: usize,
    weights: Vec<(u32, f64)>,
}

impl LayerWeights {
    /// 1-based layer number.
    pub fn layer_index(&self) -> usize {
        self.layer_index
    }

    /// `(state, weight)` pairs in increasing state order; zero weights are never stored.
    pub fn weights(&self) -> &[(u32, f64)] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weight(&self, state: u32) -> f64 {
        self.weights.binary_search_by_key(&state, |&(s, _)| s).map_or(0.0, |i| self.weights[i].1)
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().map(|&(_, w)| w).sum()
    }
}

/// Transition from layer `i-1` to layer `i`: every candidate `y` of source `i`
/// moves state `s` to `s + α_i·y`.
#[derive(Debug, Clone)]
pub struct TrellisStage {
    coeff: u32,
    candidates: CandidateSet,
    /// `(α_i·y, T_i(y))` in candidate order.
    shifts: Vec<(u32, f64)>,
    states: Vec<u32>,
}

impl TrellisStage {
    pub fn coeff(&self) -> u32 {
        self.coeff
    }

    pub fn candidates(&self) -> &CandidateSet {
        &self.candidates
    }

    /// Reachable states of the layer this stage leads into, sorted.
    pub fn states(&self) -> &[u32] {
        &self.states
    }
}

/// Layered graph of partial linear combinations seen from the observer.
#[derive(Debug, Clone)]
pub struct Trellis {
    params: FieldParams,
    own_coeff: u32,
    own_payload: u32,
    stages: Vec<TrellisStage>,
}

impl Trellis {
    pub fn params(&self) -> FieldParams {
        self.params
    }

    /// Number of layers, equal to the number of sources.
    pub fn layer_count(&self) -> usize {
        self.stages.len() + 1
    }

    pub fn start_state(&self) -> u32 {
        self.params.mul(self.own_coeff, self.own_payload)
    }

    /// Coding coefficients `α_1..α_m` in layer order.
    pub fn coeffs(&self) -> Vec<u32> {
        std::iter::once(self.own_coeff).chain(self.stages.iter().map(|s| s.coeff)).collect()
    }

    pub fn own_payload(&self) -> u32 {
        self.own_payload
    }

    pub fn stages(&self) -> &[TrellisStage] {
        &self.stages
    }

    /// Reachable states of layer `layer` (1-based).
    pub fn layer_states(&self, layer: usize) -> Vec<u32> {
        match layer {
            1 => vec![self.start_state()],
            l => self.stages[l - 2].states.clone(),
        }
    }
}

/// Dense scratch space over `{0,1}^n` that remembers which slots were touched.
struct Scratch {
    acc: Vec<f64>,
    seen: Vec<bool>,
    touched: Vec<u32>,
}

impl Scratch {
    fn new(params: FieldParams) -> Self {
        let size = params.order() as usize;
        Self { acc: vec![0.0; size], seen: vec![false; size], touched: Vec::new() }
    }

    #[inline]
    fn add(&mut self, state: u32, w: f64) {
        let i = state as usize;
        if !self.seen[i] {
            self.seen[i] = true;
            self.touched.push(state);
        }
        self.acc[i] += w;
    }

    /// Sorted `(state, accumulated)` pairs; resets the scratch space.
    fn drain(&mut self) -> Vec<(u32, f64)> {
        self.touched.sort_unstable();
        let out = self.touched.iter().map(|&s| (s, self.acc[s as usize])).collect();
        for &s in &self.touched {
            self.acc[s as usize] = 0.0;
            self.seen[s as usize] = false;
        }
        self.touched.clear();
        out
    }
}

/// Builds the trellis for sources `1..=m`, source 1 being the observer itself.
///
/// `others` lists `(α_i, candidates_i)` for sources `2..=m` in layer order.
pub fn build_trellis(params: FieldParams, own: (u32, u32), others: Vec<(u32, CandidateSet)>) -> Result<Trellis> {
    let (own_coeff, own_payload) = own;
    if let Some(&v) = [own_coeff, own_payload].iter().find(|&&v| v > params.mask()) {
        return Err(WatchdogError::ValueOutOfRange { value: v, n: params.n() });
    }
    if own_coeff == 0 {
        return Err(WatchdogError::ZeroCoefficient(1));
    }
    let mut scratch = Scratch::new(params);
    let mut prev = vec![params.mul(own_coeff, own_payload)];
    let mut stages = Vec::with_capacity(others.len());
    for (k, (coeff, candidates)) in others.into_iter().enumerate() {
        let layer = k + 2;
        if coeff == 0 {
            return Err(WatchdogError::ZeroCoefficient(layer));
        }
        if coeff > params.mask() {
            return Err(WatchdogError::ValueOutOfRange { value: coeff, n: params.n() });
        }
        if candidates.observed.width() != params.n() {
            return Err(WatchdogError::WidthMismatch(candidates.observed.width(), params.n()));
        }
        let shifts: Vec<(u32, f64)> = candidates.entries.iter().map(|&(y, t)| (params.mul(coeff, y), t)).collect();
        for &s in &prev {
            for &(shift, _) in &shifts {
                scratch.add(s ^ shift, 0.0);
            }
        }
        let states: Vec<u32> = scratch.drain().into_iter().map(|(s, _)| s).collect();
        prev = states.clone();
        stages.push(TrellisStage { coeff, candidates, shifts, states });
    }
    Ok(Trellis { params, own_coeff, own_payload, stages })
}

/// Every layer's weights, layer 1 first.
pub fn forward_pass_layers(trellis: &Trellis) -> Vec<LayerWeights> {
    let mut layers = Vec::with_capacity(trellis.layer_count());
    layers.push(LayerWeights { layer_index: 1, weights: vec![(trellis.start_state(), 1.0)] });
    let mut scratch = Scratch::new(trellis.params);
    for (k, stage) in trellis.stages.iter().enumerate() {
        let prev = &layers[k].weights;
        for &(s, w) in prev {
            for &(shift, t) in &stage.shifts {
                scratch.add(s ^ shift, w * t);
            }
        }
        let mut weights = scratch.drain();
        weights.retain(|&(_, w)| w > 0.0);
        layers.push(LayerWeights { layer_index: k + 2, weights });
    }
    layers
}

/// Final-layer weights `w(·, m)`.
pub fn forward_pass(trellis: &Trellis) -> LayerWeights {
    forward_pass_layers(trellis).pop().expect("a trellis has at least one layer")
}

/// How well the relay's overheard transmission agrees with the inferred combinations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Consistency {
    pub p_star: f64,
    /// Inferred states with positive weight that also carry the relay's digest.
    pub matched_count: usize,
}

/// Scores the relay's overheard word `x̃` against the final layer:
/// `p* = Σ_s w(s, m) · T⁻¹(s, x̃)` where `T⁻¹(s, x̃)` is the channel likelihood
/// of `x̃` given `s`, normalized over the relay's digest class and zero outside it.
pub fn compute_p_star(
    final_layer: &LayerWeights,
    relay_observed: Word,
    relay_digest: u32,
    classes: &HashClasses,
    relay_ch: Bsc,
) -> Result<Consistency> {
    let n = classes.n();
    if relay_observed.width() != n {
        return Err(WatchdogError::WidthMismatch(relay_observed.width(), n));
    }
    let likelihood = relay_ch.likelihood_table(n);
    let x = relay_observed.bits();
    let norm: f64 = classes.members(relay_digest).iter().map(|&y| likelihood[(y ^ x).count_ones() as usize]).sum();
    if norm <= 0.0 {
        return Err(WatchdogError::ZeroLikelihood);
    }
    let hash = classes.hash();
    let mut p_star = 0.0;
    let mut matched_count = 0;
    for &(s, w) in final_layer.weights() {
        if hash.eval(s) == relay_digest {
            matched_count += 1;
            p_star += w * likelihood[(s ^ x).count_ones() as usize] / norm;
        }
    }
    Ok(Consistency { p_star, matched_count })
}

/// Inferred states with positive weight whose digest equals `relay_digest`.
pub fn matched_count(final_layer: &LayerWeights, relay_digest: u32, hash: &HashFn) -> usize {
    final_layer.weights().iter().filter(|&&(s, _)| hash.eval(s) == relay_digest).count()
}

/// Outcome of one watchdog check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub p_star: f64,
    pub matched_count: usize,
    pub threshold: f64,
    /// The relay is judged malicious: `p_star <= threshold`.
    pub flagged: bool,
}

pub fn decide(consistency: Consistency, threshold: f64) -> Result<Verdict> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(WatchdogError::Threshold(threshold));
    }
    Ok(Verdict {
        p_star: consistency.p_star,
        matched_count: consistency.matched_count,
        threshold,
        flagged: consistency.p_star <= threshold,
    })
}

/// What one overheard neighbor contributes to a check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverheardSource {
    pub coeff: u32,
    pub observed: Word,
    pub digest: u32,
    pub channel: Bsc,
}

/// Everything an observer gathers before checking a downstream relay.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub own_coeff: u32,
    pub own_payload: u32,
    pub others: Vec<OverheardSource>,
    pub relay_observed: Word,
    pub relay_digest: u32,
    pub relay_channel: Bsc,
}

/// Final layer for an observation, before any relay scoring.
pub fn infer_combinations(params: FieldParams, obs: &Observation, classes: &HashClasses) -> Result<LayerWeights> {
    let others = obs
        .others
        .iter()
        .enumerate()
        .map(|(k, src)| Ok((src.coeff, candidate_set(k + 2, src.observed, src.digest, classes, src.channel)?)))
        .collect::<Result<Vec<_>>>()?;
    let trellis = build_trellis(params, (obs.own_coeff, obs.own_payload), others)?;
    Ok(forward_pass(&trellis))
}

/// Full pipeline: candidate sets, trellis, forward pass, `p*`.
pub fn check_relay(params: FieldParams, obs: &Observation, classes: &HashClasses) -> Result<Consistency> {
    let final_layer = infer_combinations(params, obs, classes)?;
    compute_p_star(&final_layer, obs.relay_observed, obs.relay_digest, classes, obs.relay_channel)
}
