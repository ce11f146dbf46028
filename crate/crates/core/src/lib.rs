//! Discrete-event simulator of message-passing graph processors whose vertex
//! and edge memories can be local, heterogeneous or disaggregated.
//!
//! The usual entry point is [`simulate`], which takes a [`SimConfig`] and a
//! loaded [`CsrGraph`] and returns a [`SimReport`]; [`telemetry`] turns
//! reports into files.

pub mod config;
pub mod engine;
pub mod fabric;
pub mod graph;
pub mod memory;
pub mod pe;
pub mod reference;
pub mod telemetry;
pub mod time;

pub use config::{ConfigError, GraphSource, SimConfig};
pub use engine::{simulate, ChannelClass, SimError, SimReport, System, Topology};
pub use graph::{CsrGraph, Edge, GraphError, VertexId, INFINITY};
pub use pe::Workload;
pub use time::Ps;
