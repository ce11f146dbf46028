//! All-to-all message fabric: one bounded FIFO per core, a flat traversal
//! latency between any pair of cores, and sender backpressure.
//!
//! A slot in the destination queue is reserved when a message is injected,
//! so the occupancy of a queue counts messages still in flight to it. A send
//! into a full queue parks the message with the fabric; the next `recv` on
//! that queue injects it and reports the sender as unblocked.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::graph::VertexId;
use crate::time::{ns_to_ps, Ps};

/// Vertex update carried between cores: the vertex to update and the
/// candidate value (distance for SSSP, level for BFS).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Message {
    pub dest_vertex: VertexId,
    pub value: u32,
}

impl Message {
    pub const BYTES: usize = 8;

    pub fn new(dest_vertex: VertexId, value: u32) -> Self {
        Self { dest_vertex, value }
    }

    pub fn to_bytes(self) -> [u8; Self::BYTES] {
        let mut b = [0; Self::BYTES];
        b[..4].copy_from_slice(&self.dest_vertex.to_le_bytes());
        b[4..].copy_from_slice(&self.value.to_le_bytes());
        b
    }

    pub fn from_bytes(b: [u8; Self::BYTES]) -> Self {
        Self {
            dest_vertex: u32::from_le_bytes(b[..4].try_into().unwrap()),
            value: u32::from_le_bytes(b[4..].try_into().unwrap()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FabricConfig {
    pub hop_latency_ns: f64,
    /// Messages per queue, including those in flight to it.
    pub queue_capacity: u32,
    /// Messages per ns each port can inject.
    pub injection_rate: f64,
}

impl Default for FabricConfig {
    fn default() -> Self {
        Self {
            hop_latency_ns: 50.0,
            queue_capacity: 1024,
            injection_rate: 1.0,
        }
    }
}

impl FabricConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.hop_latency_ns.is_finite() && self.hop_latency_ns > 0.0) {
            return Err("hop_latency_ns must be positive".into());
        }
        if self.queue_capacity == 0 {
            return Err("queue_capacity must be positive".into());
        }
        if !(self.injection_rate.is_finite() && self.injection_rate > 0.0) {
            return Err("injection_rate must be positive".into());
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SendOutcome {
    Injected { inject: Ps, arrival: Ps },
    /// Queue full; the fabric holds the message until a slot frees.
    Blocked,
}

/// A parked message that a `recv` just injected.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Unblocked {
    pub src: u32,
    pub inject: Ps,
    pub arrival: Ps,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Received {
    pub msg: Message,
    pub src: u32,
    pub unblocked: Option<Unblocked>,
}

#[derive(Clone, Copy, Debug)]
struct InFlight {
    arrival: Ps,
    src: u32,
    msg: Message,
}

#[derive(Clone, Debug)]
struct MessageQueue {
    fifo: VecDeque<InFlight>,
    waiters: VecDeque<(u32, Message, Ps)>,
    high_water: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FabricCounters {
    pub num_cores: u32,
    /// Row-major `[src][dst]` message counts.
    pub link_counts: Vec<u64>,
    pub blocked_ps: Vec<u64>,
    pub blocked_sends: Vec<u64>,
    pub high_water: Vec<u32>,
    pub sent: u64,
    pub delivered: u64,
    pub received: u64,
}

impl FabricCounters {
    pub fn link(&self, src: u32, dst: u32) -> u64 {
        self.link_counts[(src * self.num_cores + dst) as usize]
    }

    pub fn total_link_messages(&self) -> u64 {
        self.link_counts.iter().sum()
    }
}

#[derive(Clone, Debug)]
pub struct Fabric {
    capacity: u32,
    hop_ps: Ps,
    inject_interval_ps: Ps,
    queues: Vec<MessageQueue>,
    port_free: Vec<Ps>,
    counters: FabricCounters,
}

impl Fabric {
    pub fn new(num_cores: u32, cfg: &FabricConfig) -> Self {
        let n = num_cores as usize;
        Self {
            capacity: cfg.queue_capacity,
            hop_ps: ns_to_ps(cfg.hop_latency_ns),
            inject_interval_ps: ns_to_ps(1.0 / cfg.injection_rate).max(1),
            queues: vec![
                MessageQueue {
                    fifo: VecDeque::new(),
                    waiters: VecDeque::new(),
                    high_water: 0,
                };
                n
            ],
            port_free: vec![0; n],
            counters: FabricCounters {
                num_cores,
                link_counts: vec![0; n * n],
                blocked_ps: vec![0; n],
                blocked_sends: vec![0; n],
                high_water: vec![0; n],
                sent: 0,
                delivered: 0,
                received: 0,
            },
        }
    }

    pub fn hop_ps(&self) -> Ps {
        self.hop_ps
    }

    fn inject(&mut self, src: u32, dst: u32, msg: Message, now: Ps) -> (Ps, Ps) {
        let inject = now.max(self.port_free[src as usize]);
        self.port_free[src as usize] = inject + self.inject_interval_ps;
        let arrival = inject + self.hop_ps;
        let q = &mut self.queues[dst as usize];
        q.fifo.push_back(InFlight { arrival, src, msg });
        q.high_water = q.high_water.max(q.fifo.len() as u32);
        self.counters.sent += 1;
        self.counters.link_counts[(src * self.counters.num_cores + dst) as usize] += 1;
        (inject, arrival)
    }

    pub fn send(&mut self, src: u32, dst: u32, msg: Message, now: Ps) -> SendOutcome {
        let q = &mut self.queues[dst as usize];
        if (q.fifo.len() as u32) < self.capacity && q.waiters.is_empty() {
            let (inject, arrival) = self.inject(src, dst, msg, now);
            SendOutcome::Injected { inject, arrival }
        } else {
            q.waiters.push_back((src, msg, now));
            self.counters.blocked_sends[src as usize] += 1;
            SendOutcome::Blocked
        }
    }

    /// Pops the head of `core`'s queue if it has arrived by `now`.
    pub fn recv(&mut self, core: u32, now: Ps) -> Option<Received> {
        let q = &mut self.queues[core as usize];
        if q.fifo.front().is_none_or(|m| m.arrival > now) {
            return None;
        }
        let head = q.fifo.pop_front().unwrap();
        self.counters.received += 1;
        let unblocked = q.waiters.pop_front().map(|(src, msg, since)| {
            self.counters.blocked_ps[src as usize] += now - since;
            let (inject, arrival) = self.inject(src, core, msg, now);
            Unblocked { src, inject, arrival }
        });
        Some(Received {
            msg: head.msg,
            src: head.src,
            unblocked,
        })
    }

    /// Arrival time of the next message bound for `core`, if any.
    pub fn next_arrival(&self, core: u32) -> Option<Ps> {
        self.queues[core as usize].fifo.front().map(|m| m.arrival)
    }

    /// Counts a message reaching its destination queue.
    pub fn mark_delivered(&mut self) {
        self.counters.delivered += 1;
    }

    pub fn occupancy(&self, core: u32) -> usize {
        self.queues[core as usize].fifo.len()
    }

    pub fn waiting_senders(&self, core: u32) -> usize {
        self.queues[core as usize].waiters.len()
    }

    /// Messages injected or parked but not yet received.
    pub fn in_system(&self) -> u64 {
        self.queues
            .iter()
            .map(|q| (q.fifo.len() + q.waiters.len()) as u64)
            .sum()
    }

    pub fn counters(&self) -> FabricCounters {
        let mut c = self.counters.clone();
        c.high_water = self.queues.iter().map(|q| q.high_water).collect();
        c
    }
}
