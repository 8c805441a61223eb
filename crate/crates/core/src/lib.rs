//! Reassembly engine for jigsaw puzzles with eroded gaps.
//!
//! The pieces of a gapped puzzle carry no usable boundary pixels, so
//! reassembly is driven by a pluggable perception layer that scores the
//! plausibility of local piece groups and of the whole board. On top of
//! that contract this crate provides:
//!
//! * [`puzzle`] — the deterministic board environment: permutation states,
//!   swap actions, reward, and evaluation metrics.
//! * [`perception`] — the multi-head evidence contract with two built-in
//!   models (a corruptible ground-truth oracle and a pixel-statistics
//!   scorer) and the weighted evidence aggregation.
//! * [`nn`] — small dense approximators with analytic gradients and an
//!   adaptive-moment optimizer; [`checkpoint`] serializes them.
//! * [`agent`] — the evolutionary actor-critic-evaluator agent: factored
//!   swap policy, replay buffer, crossover/mutation action search, and the
//!   training loop.
//! * [`baselines`] — greedy, tabu, and genetic-algorithm solvers driven by
//!   the same evidence signal.
//! * [`dataset`] — slicing images into gapped puzzle instances and a
//!   reproducible on-disk instance format.
//!
//! Data-parallel inner loops go through [`par`]; the `parallel` feature
//! (default) backs them with rayon, without it they run sequentially.

pub mod agent;
pub mod baselines;
pub mod checkpoint;
pub mod dataset;
pub mod nn;
pub mod par;
pub mod perception;
pub mod puzzle;

pub use puzzle::{
    Action, BoardDims, CycleDir, MetricsReport, Permutation, PuzzleSpec, RewardParams,
};
