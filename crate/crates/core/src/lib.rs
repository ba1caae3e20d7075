//! Individual-fairness verification of feed-forward ReLU classifiers.
//!
//! The input domain is cut into boxes, each box gets its own soundly pruned
//! copy of the network, and an external SMT solver decides whether two inputs
//! that differ only in a protected attribute can be classified differently.
//! A brute-force oracle over integer grids serves as ground truth for tests.

pub mod bounds;
pub mod domain;
pub mod error;
pub mod model;
pub mod oracle;
pub mod partition;
pub mod prune;
pub mod query;
pub mod report;
pub mod smt;
pub mod verifier;

pub use bounds::{neuron_bounds, Interval, NeuronBounds};
pub use domain::{AttrRange, InputBox};
pub use error::{Error, Result};
pub use model::{
    classify, forward, load_network, save_network, Activation, Attribute, AttributeSchema, Layer,
    Network, OutputActivation,
};
pub use partition::{accumulate, partition, Partition, PartitionSet, Status, Verdict};
pub use prune::{heuristic_prune, profile, sound_prune, NeuronId, PrunedNetwork};
pub use query::{build_predicate, check_counterexample, FairnessPredicate, FairnessQuery, QueryFile};
pub use verifier::{VerifyOptions, Verifier};
