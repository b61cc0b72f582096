//! Simulation and verification toolkit for Builder strategies in the semirandom
//! star and tree processes.
//!
//! Builder receives one random offer per round (a uniform vertex, or a uniform
//! spanning tree of `K_n`) and claims one offered edge, aiming to build a fixed
//! bounded-degree graph H quickly. The strategy runs in three stages: greedy
//! claiming along a balanced orientation, a batched bridging stage that repairs
//! failed vertices by label swaps, and an iterated final repair stage.

pub mod engine;
pub mod error;
pub mod graph;
pub mod offers;
pub mod oracle;
pub mod orientation;
pub mod partition;
pub mod state;
pub mod strategy;

pub use engine::{run_ensemble, run_once, run_with_target, EnsembleReport, Process, RunConfig, RunReport};
pub use error::{CandidateError, EngineError, GraphError, PartitionError, StateError};
pub use graph::{generate_target, parse_edge_list, TargetGraph, TargetSpec};
pub use offers::{RoundMode, StarOffer, TreeOffer};
pub use orientation::{balanced_orientation, Orientation};
pub use partition::{equitable_distance_partition, greedy_independent_set, DistancePartition};
pub use state::{BuilderState, FailureSets, Phase, Snapshot};
pub use strategy::{CandidateList, PhaseReport, PhaseSchedule, StrategyVariant};
