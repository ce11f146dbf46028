//! Memory channels as queued bandwidth/latency servers.
//!
//! A channel has one or more lanes (HBM pseudo-channels; DDR has one). A
//! request is cut into granularity-sized beats; each beat occupies its lane
//! for `granularity / bandwidth` and completes a fixed latency after leaving
//! the lane. Latency is pipelined and never occupies the lane, so
//! disaggregation only shifts completion times.

use serde::{Deserialize, Serialize};

use crate::time::{ns_to_ps, transfer_ps, Ps, PS_PER_NS};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum MemoryError {
    #[error("unknown memory channel {0}")]
    UnknownChannel(usize),
    #[error("channel {channel}: access [{address}, {address}+{size}) exceeds capacity {capacity}")]
    AddressOutOfRange {
        channel: usize,
        address: u64,
        size: u64,
        capacity: u64,
    },
    #[error("zero-sized memory request")]
    EmptyRequest,
    #[error("utilization window must have positive length")]
    EmptyWindow,
    #[error("invalid channel parameters: {0}")]
    InvalidConfig(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemoryKind {
    Ddr4,
    Hbm2,
}

impl MemoryKind {
    pub fn label(self) -> &'static str {
        match self {
            MemoryKind::Ddr4 => "ddr4",
            MemoryKind::Hbm2 => "hbm2",
        }
    }
}

/// Technology parameters of one channel (or one HBM stack).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelParams {
    /// Per lane.
    pub bandwidth_bytes_per_ns: f64,
    pub base_latency_ns: f64,
    pub capacity_bytes: u64,
    pub access_granularity: u64,
    /// Independent lanes sharing the channel; HBM pseudo-channels.
    pub pseudo_channels: u32,
}

impl ChannelParams {
    pub fn ddr4() -> Self {
        Self {
            bandwidth_bytes_per_ns: 19.2,
            base_latency_ns: 50.0,
            capacity_bytes: 16 << 30,
            access_granularity: 64,
            pseudo_channels: 1,
        }
    }

    pub fn hbm2() -> Self {
        Self {
            bandwidth_bytes_per_ns: 32.0,
            base_latency_ns: 30.0,
            capacity_bytes: 8 << 30,
            access_granularity: 32,
            pseudo_channels: 8,
        }
    }

    pub fn validate(&self) -> Result<(), MemoryError> {
        let bad = |msg: &str| Err(MemoryError::InvalidConfig(msg.to_string()));
        if !(self.bandwidth_bytes_per_ns.is_finite() && self.bandwidth_bytes_per_ns > 0.0) {
            return bad("bandwidth must be positive");
        }
        if !(self.base_latency_ns.is_finite() && self.base_latency_ns >= 0.0) {
            return bad("base latency must be non-negative");
        }
        if !self.access_granularity.is_power_of_two() {
            return bad("access granularity must be a power of two");
        }
        if self.pseudo_channels == 0 {
            return bad("a channel needs at least one pseudo-channel");
        }
        if self.capacity_bytes == 0 {
            return bad("capacity must be positive");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub kind: MemoryKind,
    pub params: ChannelParams,
    /// Added to every access; zero for local memory.
    pub extra_latency_ns: f64,
}

impl ChannelConfig {
    pub fn new(kind: MemoryKind, params: ChannelParams, extra_latency_ns: f64) -> Self {
        Self {
            kind,
            params,
            extra_latency_ns,
        }
    }

    pub fn validate(&self) -> Result<(), MemoryError> {
        self.params.validate()?;
        if !(self.extra_latency_ns.is_finite() && self.extra_latency_ns >= 0.0) {
            return Err(MemoryError::InvalidConfig("extra latency must be non-negative".into()));
        }
        Ok(())
    }

    /// Aggregate bandwidth over all lanes.
    pub fn peak_bandwidth(&self) -> f64 {
        self.params.bandwidth_bytes_per_ns * self.params.pseudo_channels as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MemRequest {
    pub channel: usize,
    pub address: u64,
    pub size: u64,
    pub is_write: bool,
    pub issue_time: Ps,
}

/// Buckets of the queue-wait histogram: bucket 0 holds zero waits, bucket 1
/// waits under 1 ns, bucket `k >= 2` waits in `[2^(k-2), 2^(k-1))` ns.
pub const WAIT_BUCKETS: usize = 24;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChannelStats {
    /// Busy intervals `[start, end)` in ps, one list per lane. Adjacent
    /// intervals are merged.
    pub lanes: Vec<Vec<(Ps, Ps)>>,
    pub bytes_read: u64,
    pub bytes_written: u64,
    pub requests: u64,
    pub beats: u64,
    pub wait_histogram: [u64; WAIT_BUCKETS],
}

impl ChannelStats {
    fn new(lanes: usize) -> Self {
        Self {
            lanes: vec![Vec::new(); lanes],
            bytes_read: 0,
            bytes_written: 0,
            requests: 0,
            beats: 0,
            wait_histogram: [0; WAIT_BUCKETS],
        }
    }

    pub fn busy_ps(&self) -> u64 {
        self.lanes.iter().flatten().map(|(s, e)| e - s).sum()
    }

    fn record_busy(&mut self, lane: usize, start: Ps, end: Ps) {
        let intervals = &mut self.lanes[lane];
        match intervals.last_mut() {
            Some(last) if last.1 == start => last.1 = end,
            _ => intervals.push((start, end)),
        }
    }

    fn record_wait(&mut self, wait: Ps) {
        let ns = wait / PS_PER_NS;
        let bucket = if wait == 0 {
            0
        } else {
            (64 - ns.leading_zeros() as usize + 1).min(WAIT_BUCKETS - 1)
        };
        self.wait_histogram[bucket] += 1;
    }
}

/// Busy time of `intervals` inside `[start, end)`.
fn overlap(intervals: &[(Ps, Ps)], start: Ps, end: Ps) -> u64 {
    let first = intervals.partition_point(|&(_, e)| e <= start);
    intervals[first..]
        .iter()
        .take_while(|&&(s, _)| s < end)
        .map(|&(s, e)| e.min(end) - s.max(start))
        .sum()
}

/// Fraction of lane-time busy inside `[window_start, window_end)`.
pub fn utilization(stats: &ChannelStats, window_start: Ps, window_end: Ps) -> Result<f64, MemoryError> {
    if window_end <= window_start {
        return Err(MemoryError::EmptyWindow);
    }
    let busy: u64 = stats.lanes.iter().map(|l| overlap(l, window_start, window_end)).sum();
    let capacity = (window_end - window_start) * stats.lanes.len() as u64;
    Ok(busy as f64 / capacity as f64)
}

/// Utilization of each consecutive `window` covering `[0, horizon)`; the last
/// window is clipped at `horizon`.
pub fn utilization_series(stats: &ChannelStats, window: Ps, horizon: Ps) -> Vec<f64> {
    assert!(window > 0, "utilization window must be positive");
    (0..horizon.div_ceil(window))
        .map(|i| {
            let start = i * window;
            let end = (start + window).min(horizon);
            utilization(stats, start, end).expect("non-empty window")
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct MemoryChannel {
    config: ChannelConfig,
    beat_ps: Ps,
    latency_ps: Ps,
    lane_free: Vec<Ps>,
    stats: ChannelStats,
}

impl MemoryChannel {
    pub fn new(config: ChannelConfig) -> Result<Self, MemoryError> {
        config.validate()?;
        let lanes = config.params.pseudo_channels as usize;
        Ok(Self {
            beat_ps: transfer_ps(config.params.access_granularity, config.params.bandwidth_bytes_per_ns),
            latency_ps: ns_to_ps(config.params.base_latency_ns) + ns_to_ps(config.extra_latency_ns),
            lane_free: vec![0; lanes],
            stats: ChannelStats::new(lanes),
            config,
        })
    }

    pub fn config(&self) -> &ChannelConfig {
        &self.config
    }

    pub fn stats(&self) -> &ChannelStats {
        &self.stats
    }

    pub fn into_stats(self) -> ChannelStats {
        self.stats
    }

    /// Total fixed latency (base plus disaggregation) in ps.
    pub fn latency_ps(&self) -> Ps {
        self.latency_ps
    }

    /// Bytes actually moved for a request of `size` at `address`: every
    /// granule it touches.
    pub fn transferred_bytes(&self, address: u64, size: u64) -> u64 {
        let g = self.config.params.access_granularity;
        ((address + size).div_ceil(g) - address / g) * g
    }

    fn submit(&mut self, id: usize, req: &MemRequest) -> Result<Ps, MemoryError> {
        if req.size == 0 {
            return Err(MemoryError::EmptyRequest);
        }
        let capacity = self.config.params.capacity_bytes;
        if req.address.checked_add(req.size).is_none_or(|end| end > capacity) {
            return Err(MemoryError::AddressOutOfRange {
                channel: id,
                address: req.address,
                size: req.size,
                capacity,
            });
        }
        let g = self.config.params.access_granularity;
        let lanes = self.lane_free.len() as u64;
        let first = req.address / g;
        let last = (req.address + req.size).div_ceil(g);
        let mut completion = req.issue_time;
        for granule in first..last {
            let lane = (granule % lanes) as usize;
            let start = req.issue_time.max(self.lane_free[lane]);
            let end = start + self.beat_ps;
            self.lane_free[lane] = end;
            self.stats.record_busy(lane, start, end);
            self.stats.record_wait(start - req.issue_time);
            completion = completion.max(end + self.latency_ps);
        }
        let beats = last - first;
        self.stats.beats += beats;
        self.stats.requests += 1;
        if req.is_write {
            self.stats.bytes_written += beats * g;
        } else {
            self.stats.bytes_read += beats * g;
        }
        Ok(completion)
    }
}

/// All channels of a system, indexed by channel id.
#[derive(Clone, Debug, Default)]
pub struct MemorySystem {
    channels: Vec<MemoryChannel>,
}

impl MemorySystem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_channel(&mut self, config: ChannelConfig) -> Result<usize, MemoryError> {
        self.channels.push(MemoryChannel::new(config)?);
        Ok(self.channels.len() - 1)
    }

    pub fn channel(&self, id: usize) -> Option<&MemoryChannel> {
        self.channels.get(id)
    }

    pub fn channels(&self) -> &[MemoryChannel] {
        &self.channels
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    /// Queues `req` at its issue time and returns when its last beat completes.
    pub fn submit(&mut self, req: &MemRequest) -> Result<Ps, MemoryError> {
        let channel = self
            .channels
            .get_mut(req.channel)
            .ok_or(MemoryError::UnknownChannel(req.channel))?;
        channel.submit(req.channel, req)
    }

    pub fn into_channels(self) -> Vec<MemoryChannel> {
        self.channels
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn single_lane(bandwidth: f64, base: f64, extra: f64) -> MemorySystem {
        let params = ChannelParams {
            bandwidth_bytes_per_ns: bandwidth,
            base_latency_ns: base,
            capacity_bytes: 1 << 20,
            access_granularity: 64,
            pseudo_channels: 1,
        };
        let mut m = MemorySystem::new();
        m.add_channel(ChannelConfig::new(MemoryKind::Hbm2, params, extra)).unwrap();
        m
    }

    fn read(address: u64, size: u64, at: Ps) -> MemRequest {
        MemRequest {
            channel: 0,
            address,
            size,
            is_write: false,
            issue_time: at,
        }
    }

    #[test]
    fn idle_channel_arithmetic() {
        let mut m = single_lane(32.0, 30.0, 0.0);
        assert_eq!(m.submit(&read(0, 64, 100_000)), Ok(132_000));
        assert_eq!(m.channel(0).unwrap().stats().lanes[0], vec![(100_000, 102_000)]);
    }

    #[test]
    fn disaggregation_adds_150ns() {
        let mut m = single_lane(32.0, 30.0, 150.0);
        assert_eq!(m.submit(&read(0, 64, 100_000)), Ok(282_000));
    }

    #[test]
    fn back_to_back_requests_serialize() {
        // Hand trace at 32 B/ns, 30 ns latency:
        //   first:  busy [0, 2) ns, done 2 + 30 = 32 ns
        //   second: waits for the lane, busy [2, 4) ns, done 4 + 30 = 34 ns
        let mut m = single_lane(32.0, 30.0, 0.0);
        let first = m.submit(&read(0, 64, 0)).unwrap();
        let second = m.submit(&read(64, 64, 0)).unwrap();
        assert_eq!(first, 32_000);
        assert_eq!(second, 34_000);
        assert_eq!(second - first, 2_000);
        assert_eq!(m.channel(0).unwrap().stats().lanes[0], vec![(0, 4_000)]);
        assert_eq!(m.channel(0).unwrap().stats().wait_histogram[0], 1);
    }

    #[test]
    fn large_request_splits_into_beats() {
        let mut m = single_lane(32.0, 30.0, 0.0);
        assert_eq!(m.submit(&read(0, 256, 0)), Ok(8_000 + 30_000));
        let stats = m.channel(0).unwrap().stats();
        assert_eq!(stats.beats, 4);
        assert_eq!(stats.bytes_read, 256);
    }

    #[test]
    fn small_request_rounds_to_a_beat() {
        let mut m = single_lane(32.0, 30.0, 0.0);
        m.submit(&MemRequest {
            is_write: true,
            ..read(16, 16, 0)
        })
        .unwrap();
        let stats = m.channel(0).unwrap().stats();
        assert_eq!(stats.bytes_written, 64);
        assert_eq!(stats.bytes_read, 0);
    }

    #[test]
    fn pseudo_channels_serve_in_parallel() {
        let mut m = MemorySystem::new();
        m.add_channel(ChannelConfig::new(MemoryKind::Hbm2, ChannelParams::hbm2(), 0.0))
            .unwrap();
        // 64 B over two 32 B granules lands on lanes 0 and 1 at the same time.
        let done = m.submit(&read(0, 64, 0)).unwrap();
        assert_eq!(done, 1_000 + 30_000);
    }

    #[test]
    fn errors() {
        let mut m = single_lane(32.0, 30.0, 0.0);
        assert_eq!(
            m.submit(&MemRequest { channel: 3, ..read(0, 64, 0) }),
            Err(MemoryError::UnknownChannel(3))
        );
        assert!(matches!(
            m.submit(&read((1 << 20) - 32, 64, 0)),
            Err(MemoryError::AddressOutOfRange { .. })
        ));
        assert_eq!(m.submit(&read(0, 0, 0)), Err(MemoryError::EmptyRequest));
        let mut bad = ChannelParams::ddr4();
        bad.access_granularity = 48;
        assert!(bad.validate().is_err());
        bad = ChannelParams::ddr4();
        bad.bandwidth_bytes_per_ns = 0.0;
        assert!(bad.validate().is_err());
    }

    fn stats_with(intervals: Vec<(Ps, Ps)>) -> ChannelStats {
        let mut s = ChannelStats::new(1);
        s.lanes[0] = intervals;
        s
    }

    #[test]
    fn utilization_examples() {
        let s = stats_with(vec![(100, 102)]);
        assert_eq!(utilization(&s, 100, 110), Ok(0.2));
        assert_eq!(utilization(&stats_with(vec![]), 0, 10), Ok(0.0));
        assert_eq!(utilization(&s, 10, 10), Err(MemoryError::EmptyWindow));
    }

    #[test]
    fn series_counts_and_saturation() {
        let s = stats_with(vec![(0, 100)]);
        let series = utilization_series(&s, 10, 100);
        assert_eq!(series.len(), 10);
        assert!(series.iter().all(|&u| u == 1.0));
        assert_eq!(utilization_series(&s, 30, 100).len(), 4);
    }

    fn random_intervals() -> impl Strategy<Value = Vec<(Ps, Ps)>> {
        prop::collection::vec((0u64..20, 1u64..15), 0..30).prop_map(|gaps| {
            let mut t = 0;
            gaps.into_iter()
                .map(|(gap, len)| {
                    let s = t + gap;
                    t = s + len;
                    (s, t)
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn matches_dense_scan(intervals in random_intervals(), a in 0u64..400, len in 1u64..400) {
            let s = stats_with(intervals.clone());
            let b = a + len;
            let busy = (a..b).filter(|t| intervals.iter().any(|&(s, e)| s <= *t && *t < e)).count();
            let expected = busy as f64 / len as f64;
            prop_assert_eq!(utilization(&s, a, b).unwrap(), expected);
        }

        #[test]
        fn series_weighted_mean_is_whole_run(intervals in random_intervals(), window in 1u64..50, horizon in 1u64..500) {
            let s = stats_with(intervals);
            let series = utilization_series(&s, window, horizon);
            let weighted: f64 = series
                .iter()
                .enumerate()
                .map(|(i, u)| u * ((i as u64 * window + window).min(horizon) - i as u64 * window) as f64)
                .sum();
            let whole = utilization(&s, 0, horizon).unwrap();
            prop_assert!((weighted / horizon as f64 - whole).abs() < 1e-12);
            prop_assert!(series.iter().all(|u| (0.0..=1.0).contains(u)));
        }

        #[test]
        fn channel_invariants(
            reqs in prop::collection::vec((0u64..4096, 1u64..300, 0u64..50_000, any::<bool>()), 1..60),
            extra in 0.0f64..200.0,
        ) {
            let mut m = MemorySystem::new();
            let params = ChannelParams { capacity_bytes: 1 << 16, ..ChannelParams::hbm2() };
            m.add_channel(ChannelConfig::new(MemoryKind::Hbm2, params, extra)).unwrap();
            let mut sorted = reqs.clone();
            sorted.sort_by_key(|r| r.2);
            let latency = m.channel(0).unwrap().latency_ps();
            for (addr, size, at, w) in sorted {
                let done = m.submit(&MemRequest { channel: 0, address: addr, size, is_write: w, issue_time: at }).unwrap();
                prop_assert!(done >= at + latency);
            }
            let ch = m.channel(0).unwrap();
            for lane in &ch.stats().lanes {
                prop_assert!(lane.windows(2).all(|w| w[0].1 < w[1].0));
            }
            // Bytes served never exceed what peak bandwidth allows over the busy span.
            let horizon = ch.stats().lanes.iter().flatten().map(|i| i.1).max().unwrap_or(1);
            let bytes = ch.stats().bytes_read + ch.stats().bytes_written;
            prop_assert!(bytes as f64 <= ch.config().peak_bandwidth() * horizon as f64 / 1000.0 + 1e-9);
        }
    }
}
