//! Transparent validation: training on validation examples on purpose, with
//! the instruments to measure what that costs.
//!
//! The crate provides two leakage procedures (presampling a subset of the
//! validation set into the training set, and routing whole validation
//! batches into an iterative learner's stream), Monte Carlo estimators for
//! replace-one and validation stability, selection diagnostics (minimum
//! loss gap, ordering preservation, test-set bias, knee detection), and a
//! deterministic (p, model, replication) sweep driver.
//!
//! Everything randomized is a pure function of its inputs and a [`Seed`];
//! seeds derive children by tagged path, so any trial, replication, or grid
//! cell can be recomputed in isolation, bit-identically, on any number of
//! workers.

pub mod dataset;
pub mod error;
pub mod exec;
pub mod idx;
pub mod learners;
mod linalg;
pub mod loss;
pub mod rng;
pub mod sampling;
pub mod selection;
pub mod stability;
pub mod stats;
pub mod sweep;
pub mod synth;

pub use dataset::{build_split, Dataset, Example, Label, Split, TaskKind};
pub use error::{Error, Result};
pub use exec::ExecMode;
pub use idx::{load_idx, write_idx};
pub use learners::{evaluate, Algorithm, FittedModel, Learner};
pub use loss::{empirical_loss, example_loss, LossKind, Prediction, Predictor};
pub use rng::{Rng, Seed};
pub use sampling::{
    batch_schedule, equivalent_presample_p, presample, AugmentedSplit, BatchSchedule, EquivalentP,
};
pub use selection::{
    knee_detect, ordering_preserved, select_model, selection_bias, BiasReport, ModelGrid,
    SelectionReport, TrainView,
};
pub use stability::{
    check_generalization, estimate_erm_gap, estimate_oaros, estimate_oavs,
    markov_confidence_bound, min_selection_gap, theorem1_bound, GeneralizationCheck, Quantity,
    StabilityEstimate,
};
pub use sweep::{
    run_cell, run_sweep, BiasPair, CellResult, GridCell, Procedure, SplitSizes, SweepGrid,
    SweepSpec,
};
pub use synth::{
    apply_bias, gen_blobs, gen_cubic, BiasSpec, BlobsSpec, CubicSpec, DiscreteSpec, Generator,
};
