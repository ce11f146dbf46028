//! Shared helpers for the integration suites: an independent shortest-path
//! oracle, random graph cases and the conservation checks.

#![allow(dead_code)]

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tegra_sim::engine::{ChannelClass, System};
use tegra_sim::graph::{generate_rmat, generate_uniform, relabel_vertices, RmatParams};
use tegra_sim::telemetry::RunArtifact;
use tegra_sim::{CsrGraph, SimConfig, SimError, SimReport, Topology, VertexId, Workload, INFINITY};

/// Label-correcting Bellman-Ford with a work queue; shares no code with the
/// simulator or its built-in solver.
pub fn bellman_ford(g: &CsrGraph, source: VertexId, workload: Workload) -> Vec<u32> {
    let n = g.num_vertices();
    let mut dist = vec![u64::MAX; n];
    let mut queued = vec![false; n];
    let mut work = std::collections::VecDeque::new();
    dist[source as usize] = 0;
    work.push_back(source as usize);
    queued[source as usize] = true;
    let offsets = g.offsets();
    while let Some(u) = work.pop_front() {
        queued[u] = false;
        for i in offsets[u] as usize..offsets[u + 1] as usize {
            let v = g.dests()[i] as usize;
            let w = match workload {
                Workload::Sssp => g.weights()[i] as u64,
                Workload::Bfs => 1,
            };
            if dist[u] + w < dist[v] {
                dist[v] = dist[u] + w;
                if !queued[v] {
                    queued[v] = true;
                    work.push_back(v);
                }
            }
        }
    }
    dist.into_iter()
        .map(|d| if d == u64::MAX { INFINITY } else { d as u32 })
        .collect()
}

pub struct Case {
    pub name: String,
    pub graph: Arc<CsrGraph>,
    pub source: VertexId,
}

/// Random RMAT (even seeds) or uniform (odd seeds) graph with at most 2048
/// vertices, 32768 edges and weights in [1, 64].
pub fn random_case(seed: u64) -> Case {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x2545_f491_4f6c_dd1d) ^ 7);
    let (name, graph) = if seed.is_multiple_of(2) {
        let scale = rng.random_range(1..=11u32);
        let max_factor = (32768u32 >> scale).min(16);
        let edge_factor = rng.random_range(1..=max_factor);
        let params = RmatParams::new(scale, edge_factor, rng.random());
        let mut edges = generate_rmat(&params).unwrap();
        let permute = rng.random_bool(0.5);
        if permute {
            relabel_vertices(&mut edges, params.num_vertices(), params.seed);
        }
        (
            format!("rmat(scale={scale}, ef={edge_factor}, permute={permute})"),
            CsrGraph::build(params.num_vertices(), &edges).unwrap(),
        )
    } else {
        let v = rng.random_range(1..=2048usize);
        let e = rng.random_range(0..=(v * 16).min(32768));
        let edges = generate_uniform(v, e, 64, rng.random()).unwrap();
        (format!("uniform(v={v}, e={e})"), CsrGraph::build(v, &edges).unwrap())
    };
    let with_edges: Vec<VertexId> = (0..graph.num_vertices() as VertexId)
        .filter(|&v| graph.out_degree(v) > 0)
        .collect();
    let source = if with_edges.is_empty() {
        0
    } else {
        with_edges[rng.random_range(0..with_edges.len())]
    };
    Case {
        name: format!("case {seed}: {name}"),
        graph: Arc::new(graph),
        source,
    }
}

pub fn config(topology: Topology, cores: u32, source: VertexId) -> SimConfig {
    let mut cfg = SimConfig::default();
    cfg.system.topology = topology;
    cfg.system.cores = cores;
    cfg.workload.source = source;
    cfg.core.overflow_entries = 1 << 16;
    cfg
}

pub struct Traced {
    pub report: SimReport,
    /// Vertices of every accepted update, in acceptance order.
    pub accepted: Vec<VertexId>,
}

pub fn run_traced(cfg: &SimConfig, graph: Arc<CsrGraph>) -> Result<Traced, SimError> {
    let mut system = System::new(cfg, graph)?;
    system.enable_trace();
    system.init_workload(cfg.workload.source)?;
    system.run_to_quiescence()?;
    let accepted = system.trace().iter().filter(|t| t.accepted).map(|t| t.vertex).collect();
    Ok(Traced {
        report: system.into_report(),
        accepted,
    })
}

/// Every conservation law that must hold after a run; empty when all do.
pub fn conservation_violations(graph: &CsrGraph, cfg: &SimConfig, t: &Traced) -> Vec<String> {
    let r = &t.report;
    let mut bad = Vec::new();
    let mut check = |ok: bool, what: String| {
        if !ok {
            bad.push(what);
        }
    };
    let sum = |f: fn(&tegra_sim::pe::CoreCounters) -> u64| r.cores.iter().map(f).sum::<u64>();
    let generated = sum(|c| c.generated);
    let consumed = sum(|c| c.consumed);
    let f = &r.fabric;
    check(
        f.sent == f.delivered && f.delivered == consumed && f.received == consumed && generated == f.sent,
        format!("sent {} delivered {} received {} consumed {consumed} generated {generated}", f.sent, f.delivered, f.received),
    );
    check(
        f.link_counts.iter().sum::<u64>() == f.sent,
        "link counts do not add up to messages sent".into(),
    );

    let expected_generated: u64 = t.accepted.iter().map(|&v| graph.out_degree(v) as u64).sum::<u64>()
        + graph.out_degree(r.source) as u64;
    check(
        generated == expected_generated,
        format!("generated {generated}, out-degree over accepted updates {expected_generated}"),
    );
    check(
        sum(|c| c.accepted) == t.accepted.len() as u64,
        "accepted counter disagrees with trace".into(),
    );
    check(
        sum(|c| c.accepted) + sum(|c| c.rejected) == consumed,
        "accepted + rejected != consumed".into(),
    );
    check(
        sum(|c| c.entries_pushed) == t.accepted.len() as u64 + 1 && sum(|c| c.entries_popped) == sum(|c| c.entries_pushed),
        "active-list entries not conserved".into(),
    );
    check(sum(|c| c.spills) == sum(|c| c.refills), "spills != refills".into());
    check(
        sum(|c| c.edge_bytes_raw) == 8 * generated && sum(|c| c.edge_bytes_burst) >= sum(|c| c.edge_bytes_raw),
        "edge byte counters inconsistent".into(),
    );

    // Bytes per channel, from counters alone. Every record access touches
    // exactly one granule; edge bursts are granule aligned.
    let mut pool_read = 0;
    let mut pool_written = 0;
    let mut pool_granule = 0;
    for ch in &r.channels {
        let g = ch.config.params.access_granularity;
        let s = &ch.stats;
        match (ch.info.class, ch.info.owner) {
            (ChannelClass::VertexLocal, Some(c)) => {
                let k = &r.cores[c as usize];
                check(
                    s.bytes_read == g * (k.vertex_reads + k.refills) && s.bytes_written == g * (k.vertex_writes + k.spills),
                    format!("{}: read {} written {}", ch.info.label, s.bytes_read, s.bytes_written),
                );
            }
            (ChannelClass::EdgeLocal, Some(c)) => {
                check(
                    s.bytes_read == r.cores[c as usize].edge_bytes_burst && s.bytes_written == 0,
                    format!("{}: read {} written {}", ch.info.label, s.bytes_read, s.bytes_written),
                );
            }
            (ChannelClass::EdgePool | ChannelClass::SharedPool, None) => {
                pool_read += s.bytes_read;
                pool_written += s.bytes_written;
                pool_granule = g;
            }
            (class, owner) => check(false, format!("unexpected channel {class:?} owner {owner:?}")),
        }
    }
    let burst = sum(|c| c.edge_bytes_burst);
    match cfg.system.topology {
        Topology::Accelerator => {}
        Topology::Tegra => check(
            pool_read == burst && pool_written == 0,
            format!("edge pool read {pool_read} written {pool_written}, bursts {burst}"),
        ),
        Topology::AllDisaggregated => {
            let records_read = sum(|c| c.vertex_reads) + sum(|c| c.refills);
            let records_written = sum(|c| c.vertex_writes) + sum(|c| c.spills);
            check(
                pool_read == pool_granule * records_read + burst && pool_written == pool_granule * records_written,
                format!("shared pool read {pool_read} written {pool_written}"),
            );
        }
    }

    let artifact = RunArtifact::new("check", cfg, r);
    let in_range = |u: &f64| (0.0..=1.0).contains(u);
    check(
        artifact.series.iter().flatten().all(in_range) && artifact.summary.channels.iter().all(|c| in_range(&c.utilization)),
        "utilization outside [0, 1]".into(),
    );
    bad
}
