use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::GraphError;

pub type VertexId = u32;

/// Tentative distance of a vertex nobody has reached yet.
pub const INFINITY: u32 = u32::MAX;

/// Bytes a vertex record occupies in simulated memory:
/// distance (4) + edge offset (8) + edge count (4).
pub const VERTEX_RECORD_BYTES: u64 = 16;

/// Bytes an edge occupies in simulated memory: destination (4) + weight (4).
pub const EDGE_BYTES: u64 = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub src: VertexId,
    pub dst: VertexId,
    pub weight: u32,
}

impl Edge {
    pub fn new(src: VertexId, dst: VertexId, weight: u32) -> Self {
        Self { src, dst, weight }
    }
}

/// Compressed-sparse-row graph. Immutable once built.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CsrGraph {
    offsets: Vec<u64>,
    dests: Vec<VertexId>,
    weights: Vec<u32>,
}

/// The per-vertex view the consumer reads from vertex memory.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VertexRecord {
    pub distance: u32,
    pub edge_offset: u64,
    pub edge_count: u32,
}

impl CsrGraph {
    /// Builds a CSR graph from an edge list. Edges of each source vertex are
    /// stored contiguously, in input order.
    pub fn build(num_vertices: usize, edges: &[Edge]) -> Result<Self, GraphError> {
        if num_vertices > VertexId::MAX as usize {
            return Err(GraphError::TooManyVertices(num_vertices));
        }
        let mut degree = vec![0u64; num_vertices];
        for (index, e) in edges.iter().enumerate() {
            for endpoint in [e.src, e.dst] {
                if endpoint as usize >= num_vertices {
                    return Err(GraphError::OutOfRangeVertex {
                        index,
                        vertex: endpoint,
                        num_vertices,
                    });
                }
            }
            if e.weight == 0 {
                return Err(GraphError::ZeroWeight { index });
            }
            degree[e.src as usize] += 1;
        }

        let mut offsets = Vec::with_capacity(num_vertices + 1);
        let mut running = 0u64;
        offsets.push(0);
        for d in &degree {
            running += d;
            offsets.push(running);
        }

        // Counting sort keeps input order within each source.
        let mut cursor: Vec<u64> = offsets[..num_vertices].to_vec();
        let mut dests = vec![0; edges.len()];
        let mut weights = vec![0; edges.len()];
        for e in edges {
            let slot = &mut cursor[e.src as usize];
            dests[*slot as usize] = e.dst;
            weights[*slot as usize] = e.weight;
            *slot += 1;
        }

        Ok(Self {
            offsets,
            dests,
            weights,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn num_edges(&self) -> usize {
        self.dests.len()
    }

    pub fn offsets(&self) -> &[u64] {
        &self.offsets
    }

    pub fn dests(&self) -> &[VertexId] {
        &self.dests
    }

    pub fn weights(&self) -> &[u32] {
        &self.weights
    }

    pub fn edge_offset(&self, v: VertexId) -> u64 {
        self.offsets[v as usize]
    }

    pub fn out_degree(&self, v: VertexId) -> u32 {
        let v = v as usize;
        (self.offsets[v + 1] - self.offsets[v]) as u32
    }

    /// Destination and weight of the edge at a global CSR index.
    pub fn edge(&self, index: u64) -> (VertexId, u32) {
        let i = index as usize;
        (self.dests[i], self.weights[i])
    }

    pub fn neighbors(&self, v: VertexId) -> impl Iterator<Item = (VertexId, u32)> + '_ {
        let lo = self.offsets[v as usize] as usize;
        let hi = self.offsets[v as usize + 1] as usize;
        self.dests[lo..hi]
            .iter()
            .copied()
            .zip(self.weights[lo..hi].iter().copied())
    }

    /// Vertex owning the edge at `index` (the last vertex whose range starts at
    /// or before it).
    pub fn edge_source(&self, index: u64) -> VertexId {
        debug_assert!((index as usize) < self.num_edges());
        (self.offsets.partition_point(|&o| o <= index) - 1) as VertexId
    }

    /// Expands back to an edge list in CSR order.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        (0..self.num_vertices() as VertexId)
            .flat_map(move |v| self.neighbors(v).map(move |(d, w)| Edge::new(v, d, w)))
    }

    /// Content hash over the CSR arrays; two runs share a workload only if
    /// their graph digests match.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.num_vertices() as u64).to_le_bytes());
        h.update((self.num_edges() as u64).to_le_bytes());
        for o in &self.offsets {
            h.update(o.to_le_bytes());
        }
        for (d, w) in self.dests.iter().zip(&self.weights) {
            h.update(d.to_le_bytes());
            h.update(w.to_le_bytes());
        }
        hex::encode(h.finalize())
    }
}
