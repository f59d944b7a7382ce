//! Guarded-action models of weak-stabilizing protocols.
//!
//! The crate is `no_std` (with `alloc`) and contains everything that is pure
//! computation: topologies and the atomic-step semantics, the built-in
//! protocols, the coin-toss transformer, scheduler policies and fairness
//! predicates, the explicit-state analyzer and the Monte Carlo engine.
//! File formats, the CLI and thread-level parallelism live in the `stabilab`
//! crate.
//!
//! Processes carry internal identities `0..N` for enumeration and reporting.
//! Protocols only see a [`LocalView`] indexed by local ports, so the built-in
//! protocols stay anonymous.

#![no_std]

extern crate alloc;

pub mod analysis;
mod error;
pub mod montecarlo;
pub mod protocols;
pub mod scheduler;
pub mod system;
pub mod topology;
pub mod transformer;

pub use error::{Error, Result};
pub use protocols::{LeaderElection, LeaderState, Specification, TokenCirculation, TokenState, TwoFlag, FlagState};
pub use scheduler::{FairnessKind, Lasso, Scheduler, SchedulerPolicy, ScriptMode, Step};
pub use system::{
    Activation, ActionId, Configuration, LocalView, NoRandomness, ProcessId, Protocol, SchedulerClass,
};
pub use topology::Topology;
pub use transformer::{Transformed, TransformedState};
