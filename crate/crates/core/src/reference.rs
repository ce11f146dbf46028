//! Sequential shortest-path solver used to check simulated distances.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::graph::{CsrGraph, VertexId, INFINITY};
use crate::pe::Workload;

/// Dijkstra from `source`; unreachable vertices stay at [`INFINITY`].
pub fn shortest_paths(graph: &CsrGraph, source: VertexId, workload: Workload) -> Vec<u32> {
    let mut dist = vec![INFINITY; graph.num_vertices()];
    let mut heap = BinaryHeap::new();
    dist[source as usize] = 0;
    heap.push(Reverse((0u64, source)));
    while let Some(Reverse((d, u))) = heap.pop() {
        if d > dist[u as usize] as u64 {
            continue;
        }
        for (v, w) in graph.neighbors(u) {
            let w = match workload {
                Workload::Sssp => w as u64,
                Workload::Bfs => 1,
            };
            let nd = d + w;
            if nd < dist[v as usize] as u64 {
                dist[v as usize] = nd as u32;
                heap.push(Reverse((nd, v)));
            }
        }
    }
    dist
}

/// First vertex whose distance differs, with (expected, actual).
pub fn first_mismatch(expected: &[u32], actual: &[u32]) -> Option<(usize, u32, u32)> {
    expected
        .iter()
        .zip(actual)
        .enumerate()
        .find(|(_, (e, a))| e != a)
        .map(|(i, (&e, &a))| (i, e, a))
}
