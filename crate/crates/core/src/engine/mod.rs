//! Event loop, system assembly and termination.

pub mod event;
mod topology;

use std::fmt;
use std::sync::Arc;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::{ConfigError, SimConfig};
use crate::fabric::{Fabric, FabricCounters};
use crate::graph::{AddressMap, CsrGraph, GraphError, Partition, Span, VertexId, INFINITY};
use crate::memory::{ChannelConfig, ChannelStats, MemoryError, MemorySystem};
use crate::pe::{ActiveEntry, ActiveList, ConsumerState, Core, CoreCounters, Ctx, GeneratorState, ProcessStatus, Workload};
use crate::time::{ns_to_ps, ps_to_ns, Ps};

use event::{Event, EventKind, EventQueue, MemOp, Process};
pub use topology::{plan_memory, ChannelClass, ChannelInfo, MemoryPlan, Topology};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Memory(#[from] MemoryError),
    #[error("source vertex {vertex} is out of range for a graph of {num_vertices} vertices")]
    BadSource { vertex: VertexId, num_vertices: usize },
    #[error("distance {distance} + weight {weight} toward vertex {vertex} overflows")]
    ArithmeticOverflow { vertex: VertexId, distance: u32, weight: u32 },
    #[error("core {core}: overflow region of {slots} entries is full")]
    OverflowRegionFull { core: u32, slots: u64 },
    #[error("event queue drained at {time} ps with work left: {pending}")]
    NoProgress { time: Ps, pending: PendingWork },
}

/// One consumer decision, recorded when tracing is enabled.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TraceRecord {
    pub time: Ps,
    pub core: u32,
    pub vertex: VertexId,
    pub value: u32,
    pub stored: u32,
    pub accepted: bool,
}

/// Outstanding work, summed over cores. All zero iff the system is quiescent.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PendingWork {
    /// Injected messages whose arrival has not been processed yet.
    pub undelivered: u64,
    /// Generated messages not yet taken by a consumer (includes parked ones).
    pub unconsumed: u64,
    pub active_entries: u64,
    pub edges: u64,
    pub reads_in_flight: u64,
    pub writes_in_flight: u64,
}

impl PendingWork {
    pub fn total(&self) -> u64 {
        self.undelivered + self.unconsumed + self.active_entries + self.edges + self.reads_in_flight + self.writes_in_flight
    }
}

impl fmt::Display for PendingWork {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "undelivered={} unconsumed={} entries={} edges={} reads={} writes={}",
            self.undelivered, self.unconsumed, self.active_entries, self.edges, self.reads_in_flight, self.writes_in_flight
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChannelReport {
    pub info: ChannelInfo,
    pub config: ChannelConfig,
    pub stats: ChannelStats,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimReport {
    pub runtime_ps: Ps,
    pub events_executed: u64,
    pub workload: Workload,
    pub source: VertexId,
    pub channels: Vec<ChannelReport>,
    pub fabric: FabricCounters,
    pub cores: Vec<CoreCounters>,
    pub distances: Vec<u32>,
    pub distance_digest: String,
    pub graph_digest: String,
}

impl SimReport {
    pub fn runtime_ns(&self) -> f64 {
        ps_to_ns(self.runtime_ps)
    }

    /// Vertices with a finite distance.
    pub fn reached(&self) -> usize {
        self.distances.iter().filter(|&&d| d != INFINITY).count()
    }
}

/// SHA-256 over the little-endian distance words.
pub fn distance_digest(distances: &[u32]) -> String {
    let mut h = Sha256::new();
    for d in distances {
        h.update(d.to_le_bytes());
    }
    hex::encode(h.finalize())
}

/// A fully wired simulated machine.
pub struct System {
    cfg: SimConfig,
    graph: Arc<CsrGraph>,
    map: AddressMap,
    channel_info: Vec<ChannelInfo>,
    memory: MemorySystem,
    fabric: Fabric,
    events: EventQueue,
    cores: Vec<Core>,
    distances: Vec<u32>,
    now: Ps,
    last_event: Ps,
    events_executed: u64,
    outstanding_writes: u64,
    consumer_cost: Ps,
    generator_cost: Ps,
    source: Option<VertexId>,
    trace: Option<Vec<TraceRecord>>,
    scratch: Vec<Span>,
}

impl System {
    pub fn new(cfg: &SimConfig, graph: Arc<CsrGraph>) -> Result<Self, SimError> {
        cfg.validate()?;
        let plan = plan_memory(cfg);
        let mut memory = MemorySystem::new();
        let mut channel_info = Vec::with_capacity(plan.channels.len());
        for (info, config) in plan.channels {
            memory.add_channel(config)?;
            channel_info.push(info);
        }
        let cores = cfg.system.cores;
        let partition = Partition::new(cores, graph.num_vertices(), cfg.system.partition);
        let map = AddressMap::build(&graph, partition, &plan.placement)?;
        let fabric = Fabric::new(cores, &cfg.fabric);
        let cores = (0..cores)
            .map(|c| {
                let list = ActiveList::new(cfg.core.active_list_capacity as usize, cfg.core.overflow_entries);
                Core::new(c, list)
            })
            .collect();
        Ok(Self {
            distances: vec![INFINITY; graph.num_vertices()],
            cfg: cfg.clone(),
            graph,
            map,
            channel_info,
            memory,
            fabric,
            events: EventQueue::new(),
            cores,
            now: 0,
            last_event: 0,
            events_executed: 0,
            outstanding_writes: 0,
            consumer_cost: ns_to_ps(cfg.core.consumer_cost_ns),
            generator_cost: ns_to_ps(cfg.core.generator_cost_ns),
            source: None,
            trace: None,
            scratch: Vec::new(),
        })
    }

    /// Records every consumer decision from now on.
    pub fn enable_trace(&mut self) {
        self.trace.get_or_insert_with(Vec::new);
    }

    pub fn trace(&self) -> &[TraceRecord] {
        self.trace.as_deref().unwrap_or(&[])
    }

    /// Seeds the source vertex at distance 0 and queues it for its owner's
    /// generator.
    pub fn init_workload(&mut self, source: VertexId) -> Result<(), SimError> {
        let n = self.graph.num_vertices();
        if source as usize >= n {
            return Err(SimError::BadSource {
                vertex: source,
                num_vertices: n,
            });
        }
        self.source = Some(source);
        self.distances[source as usize] = 0;
        let entry = ActiveEntry {
            edge_offset: self.graph.edge_offset(source),
            edge_count: self.graph.out_degree(source),
            distance: 0,
        };
        let owner = self.map.partition().owner(source);
        let (core, mut ctx) = self.split(owner);
        core.push_entry(entry, &mut ctx)
    }

    fn split(&mut self, core: u32) -> (&mut Core, Ctx<'_>) {
        let ctx = Ctx {
            now: self.now,
            graph: &self.graph,
            map: &self.map,
            memory: &mut self.memory,
            fabric: &mut self.fabric,
            events: &mut self.events,
            distances: &mut self.distances,
            workload: self.cfg.workload.kind,
            consumer_cost: self.consumer_cost,
            generator_cost: self.generator_cost,
            outstanding_writes: &mut self.outstanding_writes,
            trace: self.trace.as_mut(),
            scratch: &mut self.scratch,
        };
        (&mut self.cores[core as usize], ctx)
    }

    /// Executes the next event; `None` once the queue is empty.
    pub fn step(&mut self) -> Result<Option<Event>, SimError> {
        let Some(event) = self.events.pop() else {
            return Ok(None);
        };
        debug_assert!(event.time >= self.now, "clock moved backwards");
        self.now = event.time;
        self.last_event = event.time;
        self.events_executed += 1;
        match event.kind {
            EventKind::MessageArrival { core } => {
                self.fabric.mark_delivered();
                let (c, mut ctx) = self.split(core);
                if c.consumer == ConsumerState::Idle {
                    c.consumer_poll(&mut ctx)?;
                }
            }
            EventKind::MemCompletion { core, op } => match op {
                MemOp::VertexRead => {
                    let (c, mut ctx) = self.split(core);
                    c.consumer_read_done(&mut ctx)?;
                }
                MemOp::Refill => {
                    let (c, mut ctx) = self.split(core);
                    c.generator_refill_done(&mut ctx)?;
                }
                MemOp::WriteAck => self.outstanding_writes -= 1,
            },
            EventKind::ProcessWake { core, process } => {
                let (c, mut ctx) = self.split(core);
                match process {
                    Process::Generator => c.generator_wake(&mut ctx)?,
                    Process::Consumer => {
                        if c.consumer == ConsumerState::Idle {
                            c.consumer_poll(&mut ctx)?;
                        }
                    }
                }
            }
        }
        Ok(Some(event))
    }

    pub fn pending(&self) -> PendingWork {
        let f = self.fabric.counters();
        let mut p = PendingWork {
            undelivered: f.sent - f.delivered,
            writes_in_flight: self.outstanding_writes,
            ..Default::default()
        };
        let mut generated = 0;
        let mut consumed = 0;
        for c in &self.cores {
            generated += c.counters.generated;
            consumed += c.counters.consumed;
            p.active_entries += c.counters.entries_pushed - c.counters.entries_popped;
            p.edges += c.edges_pending();
            p.reads_in_flight += c.reads_in_flight();
        }
        p.unconsumed = generated - consumed;
        p
    }

    /// Counter-based quiescence.
    pub fn quiescent(&self) -> bool {
        self.pending().total() == 0
    }

    /// Quiescence by inspecting every queue, list, process and the event
    /// heap directly.
    pub fn quiescent_by_scan(&self) -> bool {
        self.events.is_empty()
            && self.cores.iter().all(|c| {
                c.consumer_status() == ProcessStatus::Idle
                    && c.generator_status() == ProcessStatus::Idle
                    && c.active.is_empty()
                    && self.fabric.occupancy(c.id) == 0
                    && self.fabric.waiting_senders(c.id) == 0
            })
    }

    pub fn now(&self) -> Ps {
        self.now
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn graph(&self) -> &CsrGraph {
        &self.graph
    }

    pub fn address_map(&self) -> &AddressMap {
        &self.map
    }

    pub fn channel_info(&self) -> &[ChannelInfo] {
        &self.channel_info
    }

    pub fn memory(&self) -> &MemorySystem {
        &self.memory
    }

    pub fn fabric(&self) -> &Fabric {
        &self.fabric
    }

    pub fn distances(&self) -> &[u32] {
        &self.distances
    }

    pub fn core_counters(&self, core: u32) -> &CoreCounters {
        &self.cores[core as usize].counters
    }

    pub fn core_status(&self, core: u32) -> (ProcessStatus, ProcessStatus) {
        let c = &self.cores[core as usize];
        (c.consumer_status(), c.generator_status())
    }

    pub fn generator_state(&self, core: u32) -> GeneratorState {
        self.cores[core as usize].generator
    }

    pub fn pending_events(&self) -> usize {
        self.events.len()
    }

    /// Executes events until none are left, then checks that nothing is
    /// still pending.
    pub fn run_to_quiescence(&mut self) -> Result<(), SimError> {
        while self.step()?.is_some() {}
        if !self.quiescent() || !self.quiescent_by_scan() {
            return Err(SimError::NoProgress {
                time: self.now,
                pending: self.pending(),
            });
        }
        Ok(())
    }

    /// Runs to quiescence and returns the report.
    pub fn run(mut self) -> Result<SimReport, SimError> {
        self.run_to_quiescence()?;
        Ok(self.into_report())
    }

    /// Report of the state reached so far.
    pub fn into_report(self) -> SimReport {
        let fabric = self.fabric.counters();
        let channels = self
            .memory
            .into_channels()
            .into_iter()
            .zip(self.channel_info)
            .map(|(ch, info)| ChannelReport {
                info,
                config: ch.config().clone(),
                stats: ch.into_stats(),
            })
            .collect();
        SimReport {
            runtime_ps: self.last_event,
            events_executed: self.events_executed,
            workload: self.cfg.workload.kind,
            source: self.source.unwrap_or(self.cfg.workload.source),
            channels,
            fabric,
            cores: self.cores.into_iter().map(|c| c.counters).collect(),
            distance_digest: distance_digest(&self.distances),
            distances: self.distances,
            graph_digest: self.graph.digest(),
        }
    }
}

/// Builds the system for `cfg`, seeds `cfg.workload.source` and runs it.
pub fn simulate(cfg: &SimConfig, graph: Arc<CsrGraph>) -> Result<SimReport, SimError> {
    let mut system = System::new(cfg, graph)?;
    system.init_workload(cfg.workload.source)?;
    system.run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::GraphSource;
    use crate::graph::Edge;

    fn chain() -> Arc<CsrGraph> {
        Arc::new(CsrGraph::build(3, &[Edge::new(0, 1, 5), Edge::new(1, 2, 2)]).unwrap())
    }

    fn one_core() -> SimConfig {
        let mut cfg = SimConfig::default();
        cfg.system.cores = 1;
        cfg.core.overflow_entries = 64;
        cfg
    }

    #[test]
    fn chain_matches_hand_trace() {
        // Edge read 0: pool, 64 B at 19.2 B/ns = 3334 ps, + 50 + 150 ns.
        //   done 203334; emit +1 ns = 204334; arrives +50 ns = 254334.
        // Vertex read of 1: issued +1 ns = 255334, one 32 B HBM beat of
        //   1000 ps + 30 ns -> 286334. Accept; write done 317334.
        // Edge read 1 issued at 286334 -> 489668; emit 490668; arrive 540668.
        // Vertex read of 2: issued 541668 -> 572668; write done 603668.
        let report = simulate(&one_core(), chain()).unwrap();
        assert_eq!(report.distances, vec![0, 5, 7]);
        assert_eq!(report.runtime_ps, 603_668);
    }

    #[test]
    fn singleton_graph_runs_only_bootstrap() {
        let g = Arc::new(CsrGraph::build(1, &[]).unwrap());
        let report = simulate(&one_core(), g).unwrap();
        assert_eq!(report.distances, vec![0]);
        assert_eq!(report.runtime_ps, 0);
        assert_eq!(report.events_executed, 1);
    }

    #[test]
    fn fresh_system_is_not_quiescent() {
        let mut s = System::new(&one_core(), chain()).unwrap();
        assert!(s.quiescent() && s.quiescent_by_scan());
        s.init_workload(0).unwrap();
        assert!(!s.quiescent());
        assert!(!s.quiescent_by_scan());
    }

    #[test]
    fn bad_source() {
        let mut s = System::new(&one_core(), chain()).unwrap();
        assert!(matches!(s.init_workload(3), Err(SimError::BadSource { vertex: 3, num_vertices: 3 })));
    }

    #[test]
    fn counters_agree_with_scan_at_every_step() {
        for topology in Topology::ALL {
            let mut cfg = SimConfig::default();
            cfg.system.topology = topology;
            cfg.system.cores = 4;
            cfg.fabric.queue_capacity = 2;
            cfg.core.active_list_capacity = 1;
            cfg.core.overflow_entries = 4096;
            cfg.graph = GraphSource::rmat(7, 8);
            let g = Arc::new(cfg.graph.load(cfg.seed).unwrap());
            let mut s = System::new(&cfg, g).unwrap();
            s.init_workload(0).unwrap();
            let mut last = 0;
            while let Some(e) = s.step().unwrap() {
                assert!(e.time >= last);
                last = e.time;
                assert_eq!(s.quiescent(), s.quiescent_by_scan(), "{topology} at {}", e.time);
            }
            assert!(s.quiescent());
        }
    }

    #[test]
    fn overflow_region_exhaustion_is_reported() {
        let mut cfg = one_core();
        cfg.core.active_list_capacity = 1;
        cfg.core.overflow_entries = 1;
        // A star whose leaves point back at the hub: leaves are accepted far
        // faster than their edges can be streamed.
        let mut edges: Vec<_> = (1..40).map(|v| Edge::new(0, v, 1)).collect();
        edges.extend((1..40).map(|v| Edge::new(v, 0, 1)));
        let g = Arc::new(CsrGraph::build(40, &edges).unwrap());
        assert!(matches!(simulate(&cfg, g), Err(SimError::OverflowRegionFull { core: 0, slots: 1 })));
    }

    #[test]
    fn bfs_levels() {
        let mut cfg = one_core();
        cfg.workload.kind = Workload::Bfs;
        let report = simulate(&cfg, chain()).unwrap();
        assert_eq!(report.distances, vec![0, 1, 2]);
    }
}
