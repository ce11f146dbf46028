//! Per-core processing: a message consumer that validates incoming updates
//! against vertex memory, and a message generator that streams the edges of
//! accepted vertices into the fabric. The two talk only through the core's
//! active list.

mod active_list;
mod process;

use serde::{Deserialize, Serialize};

pub use active_list::{ActiveEntry, ActiveList, OverflowRegionFull, Popped, Pushed};
pub(crate) use process::{Core, Ctx};
pub use process::{ConsumerState, GeneratorState, ProcessStatus};

use crate::graph::INFINITY;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Workload {
    #[default]
    Sssp,
    /// SSSP with every weight treated as 1; distances are BFS levels.
    Bfs,
}

impl Workload {
    pub fn label(self) -> &'static str {
        match self {
            Workload::Sssp => "sssp",
            Workload::Bfs => "bfs",
        }
    }

    /// Relaxation: a candidate is taken only if strictly better.
    pub fn accepts(self, candidate: u32, stored: u32) -> bool {
        candidate < stored
    }

    /// Value carried along an edge of `weight` out of a vertex at `distance`.
    /// `None` if it would reach the infinity sentinel.
    pub fn propagate(self, distance: u32, weight: u32) -> Option<u32> {
        let w = match self {
            Workload::Sssp => weight,
            Workload::Bfs => 1,
        };
        distance.checked_add(w).filter(|&v| v != INFINITY)
    }
}

/// Exact per-core event counts.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoreCounters {
    pub consumed: u64,
    pub accepted: u64,
    pub rejected: u64,
    pub generated: u64,
    pub vertex_reads: u64,
    pub vertex_writes: u64,
    /// `8 * edges traversed`.
    pub edge_bytes_raw: u64,
    /// Bytes actually requested from edge memory after burst alignment.
    pub edge_bytes_burst: u64,
    pub entries_pushed: u64,
    pub entries_popped: u64,
    /// Sum of `edge_count` over every entry pushed to the active list.
    pub pushed_out_degree: u64,
    /// Sum of `edge_count` over every entry the generator has taken.
    pub popped_out_degree: u64,
    pub spills: u64,
    pub refills: u64,
    pub send_stalls: u64,
    pub active_list_high_water: u64,
}
