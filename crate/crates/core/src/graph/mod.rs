//! Graphs in compressed-sparse-row form, their generators and loaders, and the
//! mapping of vertices and edges onto cores and memory channels.

mod csr;
mod generate;
mod io;
mod layout;
mod partition;

pub use csr::{CsrGraph, Edge, VertexId, VertexRecord, EDGE_BYTES, INFINITY, VERTEX_RECORD_BYTES};
pub use generate::{generate_rmat, generate_uniform, relabel_vertices, RmatParams, GRAPH500_PROBS, MAX_GENERATED_WEIGHT, MAX_RMAT_SCALE};
pub use io::{decode_binary, encode_binary, load_edge_list, parse_plain_text, save_edge_list, EdgeListFormat};
pub use layout::{AddressMap, ChannelRef, MappedRange, Placement, RangeKind, Region, Span, OVERFLOW_ENTRY_BYTES};
pub use partition::{Partition, PartitionScheme};

#[derive(Debug, thiserror::Error)]
pub enum GraphError {
    #[error("edge {index}: vertex {vertex} out of range for {num_vertices} vertices")]
    OutOfRangeVertex {
        index: usize,
        vertex: VertexId,
        num_vertices: usize,
    },
    #[error("edge {index} has zero weight")]
    ZeroWeight { index: usize },
    #[error("{0} vertices do not fit 32-bit vertex ids")]
    TooManyVertices(usize),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("malformed binary edge list: {0}")]
    BadBinary(String),
    #[error("RMAT probabilities {0:?} must be non-negative and sum to 1")]
    BadProbabilities([f64; 4]),
    #[error("RMAT scale {0} exceeds the supported maximum")]
    ScaleTooLarge(u32),
    #[error("channel {channel} needs {required} bytes but holds {capacity}")]
    CapacityExceeded { channel: usize, required: u64, capacity: u64 },
    #[error("invalid layout: {0}")]
    Layout(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
