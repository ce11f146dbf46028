use std::path::{Path, PathBuf};

use serde::Deserialize;
use tegra_sim::{ConfigError, GraphSource, SimConfig, Topology};

/// The `[experiment]` table of a config file; everything else in the file is
/// a [`SimConfig`].
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentTable {
    pub out_dir: Option<PathBuf>,
    pub label: Option<String>,
    pub check_oracle: bool,
    /// Baseline run label for comparison tables.
    pub baseline: Option<String>,
    pub cores: Vec<u32>,
    pub topologies: Vec<Topology>,
    /// RMAT scales; only valid with an RMAT graph.
    pub scales: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub config: SimConfig,
    pub experiment: ExperimentTable,
}

impl ExperimentSpec {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| ConfigError::new("<document>", e.to_string().trim_end()))?;
        let experiment = match table.remove("experiment") {
            None => ExperimentTable::default(),
            Some(v) => parse_experiment(v)?,
        };
        let config = SimConfig::from_table(table)?;
        Ok(Self { config, experiment })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("<file>", format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Cross product of the sweep axes, each point fully validated. Empty
    /// axes fall back to the base config's value.
    pub fn points(&self) -> Result<Vec<SimConfig>, ConfigError> {
        let e = &self.experiment;
        let base = &self.config;
        let topologies = if e.topologies.is_empty() { vec![base.system.topology] } else { e.topologies.clone() };
        let cores = if e.cores.is_empty() { vec![base.system.cores] } else { e.cores.clone() };
        let graphs: Vec<GraphSource> = if e.scales.is_empty() {
            vec![base.graph.clone()]
        } else {
            let GraphSource::Rmat { edge_factor, probs, permute, .. } = &base.graph else {
                return Err(ConfigError::new("experiment.scales", "sweeping scales needs an rmat graph"));
            };
            e.scales
                .iter()
                .map(|&scale| GraphSource::Rmat {
                    scale,
                    edge_factor: *edge_factor,
                    probs: *probs,
                    permute: *permute,
                })
                .collect()
        };

        let mut points = Vec::with_capacity(graphs.len() * topologies.len() * cores.len());
        for graph in &graphs {
            for &topology in &topologies {
                for &c in &cores {
                    let mut cfg = base.clone();
                    cfg.graph = graph.clone();
                    cfg.system.topology = topology;
                    cfg.system.cores = c;
                    cfg.validate()?;
                    points.push(cfg);
                }
            }
        }
        Ok(points)
    }
}

fn parse_experiment(v: toml::Value) -> Result<ExperimentTable, ConfigError> {
    ExperimentTable::deserialize(v).map_err(|e| ConfigError::new("experiment", e.to_string().trim_end()))
}
