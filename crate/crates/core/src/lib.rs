//! Simulation and inference for the multi-source, multi-hop algebraic watchdog.
//!
//! Wireless nodes overhear noisy copies of their neighbors' network-coded
//! transmissions. From these, plus error-free packet headers carrying short
//! digests, a node infers what its downstream relay ought to send and scores
//! the relay's actual transmission with a consistency probability `p*`.
//! Relays whose injected errors exceed the channel noise drive `p*` down.
//!
//! - [`field`]: GF(2^n) arithmetic and bit-vectors.
//! - [`channel`]: binary symmetric channels, the affine digest, random streams.
//! - [`inference`]: candidate sets, the watchdog trellis, the forward pass, `p*`.
//! - [`analysis`]: closed-form matched-codeword counts and sample statistics.
//! - [`simnet`]: two-hop trials, the distributed protocol, collusion scenarios.
//! - [`experiment`]: parameter sweeps and table export.

pub mod analysis;
pub mod channel;
pub mod error;
pub mod experiment;
pub mod field;
pub mod inference;
pub mod simnet;

pub use channel::{bsc_transmit, compose_bsc, hash_eval, Bsc, HashClasses, HashFn, SimRng};
pub use error::{Result, WatchdogError};
pub use field::{gf_add, gf_mul, hamming, linear_combination, FieldElement, FieldParams, Word};
pub use inference::{
    build_trellis, candidate_set, compute_p_star, decide, forward_pass, CandidateSet, Consistency, LayerWeights,
    Trellis, Verdict,
};
