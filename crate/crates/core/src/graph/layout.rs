//! Placement of vertex records, active-list overflow regions and the edge
//! array onto memory channels.
//!
//! A region is either one channel per core, or a pool of shared channels
//! with a flat address space interleaved across them. When vertices and
//! edges land on the same channels, each core's vertex region comes first
//! and the edge array follows it.

use super::{CsrGraph, GraphError, Partition, VertexId, EDGE_BYTES, VERTEX_RECORD_BYTES};

/// Bytes of one spilled active-list entry.
pub const OVERFLOW_ENTRY_BYTES: u64 = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChannelRef {
    pub id: usize,
    pub capacity: u64,
    pub granularity: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Region {
    /// `channels[c]` belongs to core `c`.
    PerCore(Vec<ChannelRef>),
    /// Shared channels, flat address space interleaved every `interleave` bytes.
    Pool {
        channels: Vec<ChannelRef>,
        interleave: u64,
    },
}

impl Region {
    fn channel_ids(&self) -> Vec<usize> {
        match self {
            Region::PerCore(chs) | Region::Pool { channels: chs, .. } => chs.iter().map(|c| c.id).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Placement {
    pub vertices: Region,
    pub edges: Region,
    /// Active-list overflow slots reserved per core next to its vertex records.
    pub overflow_entries: u64,
}

/// A byte range on one channel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Span {
    pub channel: usize,
    pub address: u64,
    pub size: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RangeKind {
    VertexRecord(VertexId),
    Edge(u64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MappedRange {
    pub kind: RangeKind,
    pub span: Span,
}

#[derive(Clone, Debug)]
pub struct AddressMap {
    partition: Partition,
    vertices: Region,
    edges: Region,
    overflow_entries: u64,
    /// Per core: start of its vertex records (channel-local for `PerCore`,
    /// pool address for `Pool`).
    vertex_base: Vec<u64>,
    overflow_base: Vec<u64>,
    /// Pool address of edge 0 when edges are pooled.
    edge_pool_base: u64,
    /// Per vertex: channel-local byte address of its first edge when edges
    /// are per-core.
    edge_local_base: Vec<u64>,
}

fn align_down(x: u64, a: u64) -> u64 {
    x / a * a
}

fn align_up(x: u64, a: u64) -> u64 {
    x.div_ceil(a) * a
}

fn pool_locate(channels: &[ChannelRef], interleave: u64, addr: u64) -> (usize, u64) {
    let chunk = addr / interleave;
    let n = channels.len() as u64;
    let ch = channels[(chunk % n) as usize].id;
    (ch, (chunk / n) * interleave + addr % interleave)
}

/// Bytes each pool channel must hold to back pool addresses `[0, end)`.
fn pool_usage(channels: &[ChannelRef], interleave: u64, end: u64) -> Vec<(usize, u64)> {
    let chunks = end.div_ceil(interleave);
    let n = channels.len() as u64;
    channels
        .iter()
        .enumerate()
        .map(|(j, c)| {
            let j = j as u64;
            let owned = if chunks > j { (chunks - j).div_ceil(n) } else { 0 };
            (c.id, owned * interleave)
        })
        .collect()
}

impl AddressMap {
    pub fn build(graph: &CsrGraph, partition: Partition, placement: &Placement) -> Result<Self, GraphError> {
        let cores = partition.num_cores() as usize;
        for region in [&placement.vertices, &placement.edges] {
            match region {
                Region::PerCore(chs) if chs.len() != cores => {
                    return Err(GraphError::Layout(format!(
                        "per-core region has {} channels for {cores} cores",
                        chs.len()
                    )))
                }
                Region::Pool { channels, interleave } => {
                    if channels.is_empty() {
                        return Err(GraphError::Layout("empty channel pool".into()));
                    }
                    if *interleave == 0 || channels.iter().any(|c| interleave % c.granularity != 0) {
                        return Err(GraphError::Layout(format!(
                            "interleave {interleave} is not a multiple of the channel granularity"
                        )));
                    }
                }
                _ => {}
            }
        }

        let overflow_bytes = placement.overflow_entries * OVERFLOW_ENTRY_BYTES;
        let mut usage: Vec<(usize, u64)> = Vec::new();
        let mut vertex_base = Vec::with_capacity(cores);
        let mut overflow_base = Vec::with_capacity(cores);
        let mut vertex_end_per_core = vec![0u64; cores];
        let mut pool_cursor = 0u64;
        for c in 0..cores as u32 {
            let records = partition.owned_count(c) as u64 * VERTEX_RECORD_BYTES;
            let base = match &placement.vertices {
                Region::PerCore(_) => 0,
                Region::Pool { .. } => pool_cursor,
            };
            vertex_base.push(base);
            overflow_base.push(base + records);
            let end = base + records + overflow_bytes;
            vertex_end_per_core[c as usize] = end;
            pool_cursor = end;
            if let Region::PerCore(chs) = &placement.vertices {
                usage.push((chs[c as usize].id, end));
            }
        }
        if let Region::Pool { channels, interleave } = &placement.vertices {
            if placement.vertices.channel_ids() != placement.edges.channel_ids() {
                usage.extend(pool_usage(channels, *interleave, pool_cursor));
            }
        }

        let shared = placement.vertices.channel_ids() == placement.edges.channel_ids();
        let mut edge_pool_base = 0;
        let mut edge_local_base = Vec::new();
        match &placement.edges {
            Region::Pool { channels, interleave } => {
                if shared {
                    edge_pool_base = align_up(pool_cursor, *interleave);
                }
                let end = edge_pool_base + graph.num_edges() as u64 * EDGE_BYTES;
                usage.extend(pool_usage(channels, *interleave, end));
            }
            Region::PerCore(chs) => {
                let mut cursor: Vec<u64> = (0..cores)
                    .map(|c| {
                        if shared {
                            align_up(vertex_end_per_core[c], chs[c].granularity)
                        } else {
                            0
                        }
                    })
                    .collect();
                edge_local_base = vec![0; graph.num_vertices()];
                for c in 0..cores as u32 {
                    for v in partition.owned(c) {
                        edge_local_base[v as usize] = cursor[c as usize];
                        cursor[c as usize] += graph.out_degree(v) as u64 * EDGE_BYTES;
                    }
                    usage.push((chs[c as usize].id, cursor[c as usize]));
                }
            }
        }

        let capacities: Vec<(usize, u64)> = [&placement.vertices, &placement.edges]
            .into_iter()
            .flat_map(|r| match r {
                Region::PerCore(chs) | Region::Pool { channels: chs, .. } => chs.iter().map(|c| (c.id, c.capacity)),
            })
            .collect();
        for (id, capacity) in capacities {
            let used: u64 = usage.iter().filter(|(u, _)| *u == id).map(|(_, b)| *b).max().unwrap_or(0);
            if used > capacity {
                return Err(GraphError::CapacityExceeded {
                    channel: id,
                    required: used,
                    capacity,
                });
            }
        }

        Ok(Self {
            partition,
            vertices: placement.vertices.clone(),
            edges: placement.edges.clone(),
            overflow_entries: placement.overflow_entries,
            vertex_base,
            overflow_base,
            edge_pool_base,
            edge_local_base,
        })
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn overflow_entries(&self) -> u64 {
        self.overflow_entries
    }

    fn locate_vertex_space(&self, core: u32, addr: u64) -> (usize, u64) {
        match &self.vertices {
            Region::PerCore(chs) => (chs[core as usize].id, addr),
            Region::Pool { channels, interleave } => pool_locate(channels, *interleave, addr),
        }
    }

    /// Channel and address of `v`'s 16-byte record.
    pub fn vertex_location(&self, v: VertexId) -> Span {
        let core = self.partition.owner(v);
        let addr = self.vertex_base[core as usize] + self.partition.local_index(v) as u64 * VERTEX_RECORD_BYTES;
        let (channel, address) = self.locate_vertex_space(core, addr);
        Span {
            channel,
            address,
            size: VERTEX_RECORD_BYTES,
        }
    }

    /// Channel and address of overflow slot `slot` of `core`.
    pub fn overflow_location(&self, core: u32, slot: u64) -> Span {
        debug_assert!(slot < self.overflow_entries);
        let addr = self.overflow_base[core as usize] + slot * OVERFLOW_ENTRY_BYTES;
        let (channel, address) = self.locate_vertex_space(core, addr);
        Span {
            channel,
            address,
            size: OVERFLOW_ENTRY_BYTES,
        }
    }

    /// Channel and address of the single edge at global CSR index `index`.
    pub fn edge_location(&self, graph: &CsrGraph, index: u64) -> Span {
        let (channel, address) = match &self.edges {
            Region::Pool { channels, interleave } => {
                pool_locate(channels, *interleave, self.edge_pool_base + index * EDGE_BYTES)
            }
            Region::PerCore(chs) => {
                let v = graph.edge_source(index);
                let local = self.edge_local_base[v as usize] + (index - graph.edge_offset(v)) * EDGE_BYTES;
                (chs[self.partition.owner(v) as usize].id, local)
            }
        };
        Span {
            channel,
            address,
            size: EDGE_BYTES,
        }
    }

    /// Memory requests that stream edges `[offset, offset + count)`: the byte
    /// span widened to the channel granularity, then cut at interleave
    /// boundaries. Appends to `out` in address order and returns how many
    /// bytes of the first burst precede the first requested edge.
    pub fn edge_bursts(&self, graph: &CsrGraph, offset: u64, count: u32, out: &mut Vec<Span>) -> u64 {
        if count == 0 {
            return 0;
        }
        match &self.edges {
            Region::Pool { channels, interleave } => {
                let gran = channels.iter().map(|c| c.granularity).max().unwrap_or(1);
                let first = self.edge_pool_base + offset * EDGE_BYTES;
                let lo = align_down(first, gran);
                let hi = align_up(self.edge_pool_base + (offset + count as u64) * EDGE_BYTES, gran);
                let mut at = lo;
                while at < hi {
                    let chunk_end = (align_down(at, *interleave) + interleave).min(hi);
                    let (channel, address) = pool_locate(channels, *interleave, at);
                    out.push(Span {
                        channel,
                        address,
                        size: chunk_end - at,
                    });
                    at = chunk_end;
                }
                first - lo
            }
            Region::PerCore(chs) => {
                let v = graph.edge_source(offset);
                let ch = chs[self.partition.owner(v) as usize];
                let start = self.edge_local_base[v as usize] + (offset - graph.edge_offset(v)) * EDGE_BYTES;
                let lo = align_down(start, ch.granularity);
                let hi = align_up(start + count as u64 * EDGE_BYTES, ch.granularity);
                out.push(Span {
                    channel: ch.id,
                    address: lo,
                    size: hi - lo,
                });
                start - lo
            }
        }
    }

    /// Every vertex record and edge with its location. Meant for audits.
    pub fn mapped_ranges(&self, graph: &CsrGraph) -> Vec<MappedRange> {
        let records = (0..graph.num_vertices() as VertexId).map(|v| MappedRange {
            kind: RangeKind::VertexRecord(v),
            span: self.vertex_location(v),
        });
        let edges = (0..graph.num_edges() as u64).map(|i| MappedRange {
            kind: RangeKind::Edge(i),
            span: self.edge_location(graph, i),
        });
        records.chain(edges).collect()
    }
}
