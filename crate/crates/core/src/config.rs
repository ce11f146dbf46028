//! Experiment configuration. Stored as TOML; every section has defaults so a
//! file only needs the values it changes.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::engine::Topology;
use crate::fabric::FabricConfig;
use crate::graph::{relabel_vertices, 
    generate_rmat, generate_uniform, load_edge_list, CsrGraph, EdgeListFormat, GraphError, PartitionScheme,
    RmatParams, GRAPH500_PROBS, MAX_GENERATED_WEIGHT,
};
use crate::memory::ChannelParams;
use crate::pe::Workload;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{field}: {reason}")]
pub struct ConfigError {
    pub field: String,
    pub reason: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphSource {
    Rmat {
        scale: u32,
        edge_factor: u32,
        #[serde(default = "graph500_probs")]
        probs: [f64; 4],
        /// Randomly relabel vertices after generation.
        #[serde(default = "yes")]
        permute: bool,
    },
    Uniform {
        vertices: usize,
        edges: usize,
        #[serde(default = "max_weight")]
        max_weight: u32,
    },
    File {
        path: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        format: Option<EdgeListFormat>,
    },
}

fn graph500_probs() -> [f64; 4] {
    GRAPH500_PROBS
}

fn yes() -> bool {
    true
}

fn max_weight() -> u32 {
    MAX_GENERATED_WEIGHT
}

impl GraphSource {
    /// Graph500-style RMAT with relabelled vertices.
    pub fn rmat(scale: u32, edge_factor: u32) -> Self {
        GraphSource::Rmat {
            scale,
            edge_factor,
            probs: GRAPH500_PROBS,
            permute: true,
        }
    }

    /// Generates or loads the graph; generators draw from `seed`.
    pub fn load(&self, seed: u64) -> Result<CsrGraph, GraphError> {
        match self {
            GraphSource::Rmat {
                scale,
                edge_factor,
                probs,
                permute,
            } => {
                let params = RmatParams {
                    scale: *scale,
                    edge_factor: *edge_factor,
                    probs: *probs,
                    seed,
                };
                let mut edges = generate_rmat(&params)?;
                if *permute {
                    relabel_vertices(&mut edges, params.num_vertices(), seed);
                }
                CsrGraph::build(params.num_vertices(), &edges)
            }
            GraphSource::Uniform {
                vertices,
                edges,
                max_weight,
            } => CsrGraph::build(*vertices, &generate_uniform(*vertices, *edges, *max_weight, seed)?),
            GraphSource::File { path, format } => {
                load_edge_list(path, format.unwrap_or_else(|| EdgeListFormat::from_path(path)))
            }
        }
    }

    /// Short tag for labels, e.g. `rmat16`.
    pub fn tag(&self) -> String {
        match self {
            GraphSource::Rmat { scale, .. } => format!("rmat{scale}"),
            GraphSource::Uniform { vertices, .. } => format!("uniform{vertices}"),
            GraphSource::File { path, .. } => path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "file".into()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    pub topology: Topology,
    pub cores: u32,
    pub partition: PartitionScheme,
    /// DDR channels in the shared pool; one per 8 cores when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pool_channels: Option<u32>,
    pub interleave_bytes: u64,
    pub disaggregation_latency_ns: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            topology: Topology::Tegra,
            cores: 32,
            partition: PartitionScheme::Modulo,
            pool_channels: None,
            interleave_bytes: 256,
            disaggregation_latency_ns: 150.0,
        }
    }
}

impl SystemConfig {
    pub fn effective_pool_channels(&self) -> u32 {
        self.pool_channels.unwrap_or_else(|| self.cores.div_ceil(8))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MemoryConfig {
    pub ddr4: ChannelParams,
    pub hbm2: ChannelParams,
}

impl Default for MemoryConfig {
    fn default() -> Self {
        Self {
            ddr4: ChannelParams::ddr4(),
            hbm2: ChannelParams::hbm2(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoreConfig {
    pub consumer_cost_ns: f64,
    pub generator_cost_ns: f64,
    /// Hardware active-list slots.
    pub active_list_capacity: u32,
    /// Overflow slots reserved per core in vertex memory.
    pub overflow_entries: u64,
}

impl Default for CoreConfig {
    fn default() -> Self {
        Self {
            consumer_cost_ns: 1.0,
            generator_cost_ns: 1.0,
            active_list_capacity: 64,
            overflow_entries: 1 << 20,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkloadConfig {
    pub kind: Workload,
    pub source: u32,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TelemetryConfig {
    /// Utilization sampling window; a hundredth of the runtime when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window_ns: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Seeds graph generation; the simulation itself is deterministic.
    pub seed: u64,
    pub graph: GraphSource,
    pub system: SystemConfig,
    pub memory: MemoryConfig,
    pub fabric: FabricConfig,
    pub core: CoreConfig,
    pub workload: WorkloadConfig,
    pub telemetry: TelemetryConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            graph: GraphSource::rmat(16, 16),
            system: SystemConfig::default(),
            memory: MemoryConfig::default(),
            fabric: FabricConfig::default(),
            core: CoreConfig::default(),
            workload: WorkloadConfig::default(),
            telemetry: TelemetryConfig::default(),
        }
    }
}

fn positive(field: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::new(field, format!("must be positive, got {v}")))
    }
}

fn non_negative(field: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(ConfigError::new(field, format!("must be non-negative, got {v}")))
    }
}

impl SimConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| ConfigError::new("<document>", e.to_string().trim_end()))?;
        Self::from_table(table)
    }

    pub fn from_table(table: toml::Table) -> Result<Self, ConfigError> {
        let cfg: SimConfig = serde_path_to_error::deserialize(toml::Value::Table(table)).map_err(|e| {
            let path = e.path().to_string();
            let field = if path == "." { "<document>".to_string() } else { path };
            ConfigError::new(field, e.into_inner().to_string().trim_end())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        match &self.graph {
            GraphSource::Rmat { scale, probs, .. } => {
                if *scale > crate::graph::MAX_RMAT_SCALE {
                    return Err(ConfigError::new("graph.scale", format!("{scale} exceeds the maximum of 24")));
                }
                let sum: f64 = probs.iter().sum();
                if probs.iter().any(|p| !p.is_finite() || *p < 0.0) || (sum - 1.0).abs() > 1e-9 {
                    return Err(ConfigError::new("graph.probs", "must be non-negative and sum to 1"));
                }
            }
            GraphSource::Uniform { vertices, edges, max_weight } => {
                if *vertices == 0 && *edges > 0 {
                    return Err(ConfigError::new("graph.vertices", "edges need at least one vertex"));
                }
                if *max_weight == 0 {
                    return Err(ConfigError::new("graph.max_weight", "must be at least 1"));
                }
            }
            GraphSource::File { .. } => {}
        }

        let s = &self.system;
        if s.cores == 0 {
            return Err(ConfigError::new("system.cores", "must be at least 1"));
        }
        if s.pool_channels == Some(0) {
            return Err(ConfigError::new("system.pool_channels", "must be at least 1"));
        }
        if s.interleave_bytes == 0 || !s.interleave_bytes.is_power_of_two() {
            return Err(ConfigError::new("system.interleave_bytes", "must be a power of two"));
        }
        non_negative("system.disaggregation_latency_ns", s.disaggregation_latency_ns)?;

        for (name, p) in [("memory.ddr4", &self.memory.ddr4), ("memory.hbm2", &self.memory.hbm2)] {
            p.validate().map_err(|e| ConfigError::new(name, e.to_string()))?;
        }
        if !s.interleave_bytes.is_multiple_of(self.memory.ddr4.access_granularity) {
            return Err(ConfigError::new(
                "system.interleave_bytes",
                "must be a multiple of the DDR4 access granularity",
            ));
        }

        self.fabric.validate().map_err(|e| ConfigError::new("fabric", e))?;

        non_negative("core.consumer_cost_ns", self.core.consumer_cost_ns)?;
        non_negative("core.generator_cost_ns", self.core.generator_cost_ns)?;
        if self.core.active_list_capacity == 0 {
            return Err(ConfigError::new("core.active_list_capacity", "must be at least 1"));
        }
        if self.core.overflow_entries == 0 {
            return Err(ConfigError::new("core.overflow_entries", "must be at least 1"));
        }
        if let Some(w) = self.telemetry.window_ns {
            positive("telemetry.window_ns", w)?;
        }
        Ok(())
    }

    /// Short run label such as `tegra-c32-rmat16`.
    pub fn label(&self) -> String {
        format!(
            "{}-c{}-{}",
            self.system.topology.label(),
            self.system.cores,
            self.graph.tag()
        )
    }
}
