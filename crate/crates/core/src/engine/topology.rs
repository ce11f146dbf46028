use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::config::SimConfig;
use crate::graph::{ChannelRef, Placement, Region};
use crate::memory::{ChannelConfig, ChannelParams, MemoryKind};

/// The three evaluated memory organizations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    /// Scale-out style: every core has its own local HBM2 vertex stack and
    /// local DDR4 edge channel.
    Accelerator,
    /// Vertices and edges all live in one shared pool behind the
    /// disaggregation latency.
    AllDisaggregated,
    /// Local HBM2 vertex stack per core, edges in a shared disaggregated DDR4
    /// pool.
    Tegra,
}

impl Topology {
    pub const ALL: [Topology; 3] = [Topology::Accelerator, Topology::Tegra, Topology::AllDisaggregated];

    pub fn label(self) -> &'static str {
        match self {
            Topology::Accelerator => "accelerator",
            Topology::AllDisaggregated => "all_disaggregated",
            Topology::Tegra => "tegra",
        }
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Topology {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "accelerator" => Ok(Topology::Accelerator),
            "all_disaggregated" | "all-disaggregated" | "disaggregated" => Ok(Topology::AllDisaggregated),
            "tegra" => Ok(Topology::Tegra),
            other => Err(format!(
                "unknown topology `{other}` (expected accelerator, tegra or all_disaggregated)"
            )),
        }
    }
}

/// What a channel holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelClass {
    VertexLocal,
    EdgeLocal,
    EdgePool,
    /// Vertices and edges together.
    SharedPool,
}

impl ChannelClass {
    pub fn label(self) -> &'static str {
        match self {
            ChannelClass::VertexLocal => "vertex_local",
            ChannelClass::EdgeLocal => "edge_local",
            ChannelClass::EdgePool => "edge_pool",
            ChannelClass::SharedPool => "shared_pool",
        }
    }

    /// Whether edges are streamed from this class.
    pub fn holds_edges(self) -> bool {
        !matches!(self, ChannelClass::VertexLocal)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelInfo {
    pub label: String,
    pub class: ChannelClass,
    /// Owning core of a local channel.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub owner: Option<u32>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MemoryPlan {
    pub channels: Vec<(ChannelInfo, ChannelConfig)>,
    pub placement: Placement,
}

fn channel_ref(id: usize, cfg: &ChannelConfig) -> ChannelRef {
    ChannelRef {
        id,
        capacity: cfg.params.capacity_bytes,
        granularity: cfg.params.access_granularity,
    }
}

/// Channels and data placement for a configuration's topology preset.
pub fn plan_memory(cfg: &SimConfig) -> MemoryPlan {
    let cores = cfg.system.cores;
    let extra = cfg.system.disaggregation_latency_ns;
    let mut channels: Vec<(ChannelInfo, ChannelConfig)> = Vec::new();

    let mut add = |label: String, class: ChannelClass, owner: Option<u32>, kind: MemoryKind, params: &ChannelParams, extra: f64| {
        let config = ChannelConfig::new(kind, params.clone(), extra);
        let r = channel_ref(channels.len(), &config);
        channels.push((ChannelInfo { label, class, owner }, config));
        r
    };

    let mut local = |prefix: &str, class: ChannelClass, kind: MemoryKind, params: &ChannelParams| {
        (0..cores)
            .map(|c| add(format!("{prefix}.c{c}"), class, Some(c), kind, params, 0.0))
            .collect::<Vec<_>>()
    };

    let (vertices, edges) = match cfg.system.topology {
        Topology::Accelerator => {
            let hbm = local("hbm", ChannelClass::VertexLocal, MemoryKind::Hbm2, &cfg.memory.hbm2);
            let ddr = local("ddr", ChannelClass::EdgeLocal, MemoryKind::Ddr4, &cfg.memory.ddr4);
            (Region::PerCore(hbm), Region::PerCore(ddr))
        }
        Topology::Tegra => {
            let hbm = local("hbm", ChannelClass::VertexLocal, MemoryKind::Hbm2, &cfg.memory.hbm2);
            let pool: Vec<ChannelRef> = (0..cfg.system.effective_pool_channels())
                .map(|i| add(format!("pool.{i}"), ChannelClass::EdgePool, None, MemoryKind::Ddr4, &cfg.memory.ddr4, extra))
                .collect();
            let edges = Region::Pool {
                channels: pool,
                interleave: cfg.system.interleave_bytes,
            };
            (Region::PerCore(hbm), edges)
        }
        Topology::AllDisaggregated => {
            let pool: Vec<ChannelRef> = (0..cfg.system.effective_pool_channels())
                .map(|i| add(format!("pool.{i}"), ChannelClass::SharedPool, None, MemoryKind::Ddr4, &cfg.memory.ddr4, extra))
                .collect();
            let region = Region::Pool {
                channels: pool,
                interleave: cfg.system.interleave_bytes,
            };
            (region.clone(), region)
        }
    };

    MemoryPlan {
        channels,
        placement: Placement {
            vertices,
            edges,
            overflow_entries: cfg.core.overflow_entries,
        },
    }
}
