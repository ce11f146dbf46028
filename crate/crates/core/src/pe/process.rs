//! Consumer and generator state machines of one core.
//!
//! Both processes are driven by engine events and never interleave within an
//! event. The consumer pays its compute cost before issuing the vertex read;
//! accepted updates post their writes (record, then spill if any) and push
//! to the active list at read completion, after which the consumer polls its
//! queue again. The generator drains one entry at a time: it issues all
//! edge bursts for the entry at once, then emits one message per edge, each
//! no earlier than its burst's completion and one compute cost after the
//! previous message.

use crate::engine::event::{EventKind, EventQueue, MemOp, Process};
use crate::engine::{SimError, TraceRecord};
use crate::fabric::{Fabric, Message, SendOutcome};
use crate::graph::{AddressMap, CsrGraph, Span};
use crate::memory::{MemRequest, MemorySystem};
use crate::time::Ps;

use super::{ActiveEntry, ActiveList, CoreCounters, Popped, Pushed, Workload};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProcessStatus {
    Running,
    StalledOnMemory,
    StalledOnSend,
    Idle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConsumerState {
    Idle,
    /// Vertex read for this message is in flight.
    Reading(Message),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GeneratorState {
    Idle,
    /// A wake-up is queued to start on new work.
    Scheduled,
    /// Emitting messages for the current entry; a wake-up is queued.
    Streaming,
    /// Reading an entry back from the overflow region.
    Refilling(ActiveEntry),
    /// The last message is parked in the fabric.
    StalledOnSend,
}

#[derive(Clone, Debug)]
struct EdgeJob {
    entry: ActiveEntry,
    next: u32,
    prev_emit: Ps,
    /// Bytes of the first burst before the entry's first edge.
    lead: u64,
    /// Cumulative end (bytes from the first burst's start) and completion
    /// time of each burst.
    bursts: Vec<(u64, Ps)>,
    cursor: usize,
}

impl EdgeJob {
    fn ready_time(&mut self, edge: u32) -> Ps {
        let byte = self.lead + edge as u64 * crate::graph::EDGE_BYTES;
        while byte >= self.bursts[self.cursor].0 {
            self.cursor += 1;
        }
        self.bursts[self.cursor].1
    }
}

/// Everything a process touches outside its own core.
pub(crate) struct Ctx<'a> {
    pub now: Ps,
    pub graph: &'a CsrGraph,
    pub map: &'a AddressMap,
    pub memory: &'a mut MemorySystem,
    pub fabric: &'a mut Fabric,
    pub events: &'a mut EventQueue,
    pub distances: &'a mut [u32],
    pub workload: Workload,
    pub consumer_cost: Ps,
    pub generator_cost: Ps,
    pub outstanding_writes: &'a mut u64,
    pub trace: Option<&'a mut Vec<TraceRecord>>,
    pub scratch: &'a mut Vec<Span>,
}

impl Ctx<'_> {
    fn access(&mut self, span: Span, is_write: bool, at: Ps) -> Result<Ps, SimError> {
        Ok(self.memory.submit(&MemRequest {
            channel: span.channel,
            address: span.address,
            size: span.size,
            is_write,
            issue_time: at,
        })?)
    }

    fn posted_write(&mut self, core: u32, span: Span) -> Result<(), SimError> {
        let done = self.access(span, true, self.now)?;
        *self.outstanding_writes += 1;
        self.events.schedule(
            done,
            EventKind::MemCompletion {
                core,
                op: MemOp::WriteAck,
            },
        );
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Core {
    pub id: u32,
    pub consumer: ConsumerState,
    pub generator: GeneratorState,
    pub active: ActiveList,
    pub counters: CoreCounters,
    job: Option<EdgeJob>,
    reads_in_flight: u64,
}

impl Core {
    pub fn new(id: u32, active: ActiveList) -> Self {
        Self {
            id,
            consumer: ConsumerState::Idle,
            generator: GeneratorState::Idle,
            active,
            counters: CoreCounters::default(),
            job: None,
            reads_in_flight: 0,
        }
    }

    pub fn consumer_status(&self) -> ProcessStatus {
        match self.consumer {
            ConsumerState::Idle => ProcessStatus::Idle,
            ConsumerState::Reading(_) => ProcessStatus::StalledOnMemory,
        }
    }

    pub fn generator_status(&self) -> ProcessStatus {
        match self.generator {
            GeneratorState::Idle => ProcessStatus::Idle,
            GeneratorState::Scheduled | GeneratorState::Streaming => ProcessStatus::Running,
            GeneratorState::Refilling(_) => ProcessStatus::StalledOnMemory,
            GeneratorState::StalledOnSend => ProcessStatus::StalledOnSend,
        }
    }

    pub fn reads_in_flight(&self) -> u64 {
        self.reads_in_flight
    }

    /// Edges of taken entries that have not yet become messages.
    pub fn edges_pending(&self) -> u64 {
        self.counters.popped_out_degree - self.counters.generated
    }

    /// Puts an entry on the active list and wakes the generator if it sleeps.
    pub fn push_entry(&mut self, entry: ActiveEntry, ctx: &mut Ctx) -> Result<(), SimError> {
        let pushed = self.active.push(entry).map_err(|e| SimError::OverflowRegionFull {
            core: self.id,
            slots: e.slots,
        })?;
        self.counters.entries_pushed += 1;
        self.counters.pushed_out_degree += entry.edge_count as u64;
        self.counters.active_list_high_water = self.active.high_water() as u64;
        if let Pushed::Spilled { slot } = pushed {
            self.counters.spills += 1;
            ctx.posted_write(self.id, ctx.map.overflow_location(self.id, slot))?;
        }
        if self.generator == GeneratorState::Idle {
            self.generator = GeneratorState::Scheduled;
            ctx.events.schedule(
                ctx.now,
                EventKind::ProcessWake {
                    core: self.id,
                    process: Process::Generator,
                },
            );
        }
        Ok(())
    }

    /// Takes the next arrived message, if any, and issues its vertex read.
    pub fn consumer_poll(&mut self, ctx: &mut Ctx) -> Result<(), SimError> {
        debug_assert_eq!(self.consumer, ConsumerState::Idle);
        let Some(received) = ctx.fabric.recv(self.id, ctx.now) else {
            return Ok(());
        };
        self.counters.consumed += 1;
        if let Some(u) = received.unblocked {
            ctx.events.schedule(
                u.inject,
                EventKind::ProcessWake {
                    core: u.src,
                    process: Process::Generator,
                },
            );
            ctx.events.schedule(u.arrival, EventKind::MessageArrival { core: self.id });
        }
        let span = ctx.map.vertex_location(received.msg.dest_vertex);
        let done = ctx.access(span, false, ctx.now + ctx.consumer_cost)?;
        self.counters.vertex_reads += 1;
        self.reads_in_flight += 1;
        self.consumer = ConsumerState::Reading(received.msg);
        ctx.events.schedule(
            done,
            EventKind::MemCompletion {
                core: self.id,
                op: MemOp::VertexRead,
            },
        );
        Ok(())
    }

    /// Vertex record has arrived: compare, and on acceptance write back and
    /// activate the vertex.
    pub fn consumer_read_done(&mut self, ctx: &mut Ctx) -> Result<(), SimError> {
        let ConsumerState::Reading(msg) = self.consumer else {
            unreachable!("vertex read completed for an idle consumer");
        };
        self.consumer = ConsumerState::Idle;
        self.reads_in_flight -= 1;

        let v = msg.dest_vertex;
        let stored = ctx.distances[v as usize];
        let accepted = ctx.workload.accepts(msg.value, stored);
        if let Some(trace) = ctx.trace.as_deref_mut() {
            trace.push(TraceRecord {
                time: ctx.now,
                core: self.id,
                vertex: v,
                value: msg.value,
                stored,
                accepted,
            });
        }
        if accepted {
            self.counters.accepted += 1;
            ctx.distances[v as usize] = msg.value;
            ctx.posted_write(self.id, ctx.map.vertex_location(v))?;
            self.counters.vertex_writes += 1;
            let entry = ActiveEntry {
                edge_offset: ctx.graph.edge_offset(v),
                edge_count: ctx.graph.out_degree(v),
                distance: msg.value,
            };
            self.push_entry(entry, ctx)?;
        } else {
            self.counters.rejected += 1;
        }
        self.consumer_poll(ctx)
    }

    pub fn generator_wake(&mut self, ctx: &mut Ctx) -> Result<(), SimError> {
        match self.generator {
            GeneratorState::StalledOnSend => {
                // The parked message was injected just now.
                if let Some(job) = self.job.as_mut() {
                    job.prev_emit = ctx.now;
                }
            }
            GeneratorState::Scheduled | GeneratorState::Streaming => {}
            other => unreachable!("generator woken in state {other:?}"),
        }
        self.generator = GeneratorState::Streaming;
        self.generator_advance(ctx)
    }

    pub fn generator_refill_done(&mut self, ctx: &mut Ctx) -> Result<(), SimError> {
        let GeneratorState::Refilling(entry) = self.generator else {
            unreachable!("refill completed outside a refill");
        };
        self.reads_in_flight -= 1;
        self.generator = GeneratorState::Streaming;
        self.start_job(entry, ctx)?;
        self.generator_advance(ctx)
    }

    fn start_job(&mut self, entry: ActiveEntry, ctx: &mut Ctx) -> Result<(), SimError> {
        self.counters.entries_popped += 1;
        self.counters.popped_out_degree += entry.edge_count as u64;
        if entry.edge_count == 0 {
            return Ok(());
        }
        ctx.scratch.clear();
        let lead = ctx
            .map
            .edge_bursts(ctx.graph, entry.edge_offset, entry.edge_count, ctx.scratch);
        let mut bursts = Vec::with_capacity(ctx.scratch.len());
        let mut cumulative = 0;
        for i in 0..ctx.scratch.len() {
            let span = ctx.scratch[i];
            let done = ctx.access(span, false, ctx.now)?;
            cumulative += span.size;
            bursts.push((cumulative, done));
            self.counters.edge_bytes_burst += span.size;
        }
        self.counters.edge_bytes_raw += entry.edge_count as u64 * crate::graph::EDGE_BYTES;
        self.job = Some(EdgeJob {
            entry,
            next: 0,
            prev_emit: ctx.now,
            lead,
            bursts,
            cursor: 0,
        });
        Ok(())
    }

    fn generator_advance(&mut self, ctx: &mut Ctx) -> Result<(), SimError> {
        loop {
            if let Some(job) = self.job.as_mut() {
                if job.next < job.entry.edge_count {
                    let emit = job.prev_emit.max(job.ready_time(job.next)) + ctx.generator_cost;
                    if emit > ctx.now {
                        ctx.events.schedule(
                            emit,
                            EventKind::ProcessWake {
                                core: self.id,
                                process: Process::Generator,
                            },
                        );
                        return Ok(());
                    }
                    let index = job.entry.edge_offset + job.next as u64;
                    let (dst, weight) = ctx.graph.edge(index);
                    let value = ctx
                        .workload
                        .propagate(job.entry.distance, weight)
                        .ok_or(SimError::ArithmeticOverflow {
                            vertex: dst,
                            distance: job.entry.distance,
                            weight,
                        })?;
                    job.next += 1;
                    self.counters.generated += 1;
                    let dst_core = ctx.map.partition().owner(dst);
                    match ctx.fabric.send(self.id, dst_core, Message::new(dst, value), ctx.now) {
                        SendOutcome::Injected { arrival, .. } => {
                            job.prev_emit = ctx.now;
                            ctx.events.schedule(arrival, EventKind::MessageArrival { core: dst_core });
                        }
                        SendOutcome::Blocked => {
                            self.counters.send_stalls += 1;
                            self.generator = GeneratorState::StalledOnSend;
                            return Ok(());
                        }
                    }
                    continue;
                }
                self.job = None;
            }

            match self.active.pop() {
                Some(Popped::Hardware(entry)) => self.start_job(entry, ctx)?,
                Some(Popped::Overflow { entry, slot }) => {
                    self.counters.refills += 1;
                    let span = ctx.map.overflow_location(self.id, slot);
                    let done = ctx.access(span, false, ctx.now)?;
                    self.reads_in_flight += 1;
                    self.generator = GeneratorState::Refilling(entry);
                    ctx.events.schedule(
                        done,
                        EventKind::MemCompletion {
                            core: self.id,
                            op: MemOp::Refill,
                        },
                    );
                    return Ok(());
                }
                None => {
                    self.generator = GeneratorState::Idle;
                    return Ok(());
                }
            }
        }
    }
}
