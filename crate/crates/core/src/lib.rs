//! Strategic latency reduction in peer-to-peer overlays.
//!
//! The crate bundles the pieces needed to study how a single strategic node
//! can lower its latency to the rest of a P2P network by choosing its peers:
//!
//! * [`topology`] builds, imports and queries weighted overlay graphs.
//! * [`advantage`] scores peer sets by how many source/destination pairs they
//!   let the agent shortcut, and selects peer sets greedily, randomly or
//!   exhaustively. It also builds the set-cover reduction and the greedy
//!   counterexample family.
//! * [`peri`] is the score-and-evict peering loop, in timestamp-driven form
//!   and in the closed-form distance variant.
//! * [`floodsim`] is a discrete-event flooding simulator with churn.
//! * [`liveness`] is a Monte-Carlo model of victim discovery in a churning
//!   network.
//! * [`experiment`] drives seeded sweeps; [`verify`] is the self-check
//!   battery. Both back the `perisim` binary.

pub mod advantage;
pub mod config;
pub mod error;
pub mod experiment;
pub mod floodsim;
pub mod liveness;
pub mod peri;
pub mod seed;
pub mod stats;
pub mod topology;
pub mod verify;

pub use error::{Error, Result};
pub use topology::{DistanceMatrix, GraphModel, GraphSpec, NodeId, SourceDestSpec, Topology};
