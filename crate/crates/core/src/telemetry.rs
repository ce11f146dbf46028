//! Run artifacts: the report document, per-channel utilization tables, the
//! fabric link table and cross-run comparison.
//!
//! Layout of an exported run directory:
//!
//! ```text
//! report.toml          every scalar of the run plus the config echo
//! util/<channel>.csv   window_index,utilization
//! links.csv            src,dst,count (one row per core pair)
//! cores.csv            core,<per-core counters>
//! ```
//!
//! All tables are comma-separated with a header row and LF line endings;
//! fractions carry six decimals.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::SimConfig;
use crate::engine::{ChannelClass, SimReport};
use crate::memory::{utilization, utilization_series, MemoryKind};
use crate::pe::CoreCounters;
use crate::time::{ns_to_ps, ps_to_ns, Ps};

pub const REPORT_FILE: &str = "report.toml";
pub const LINKS_FILE: &str = "links.csv";
pub const CORES_FILE: &str = "cores.csv";
pub const UTIL_DIR: &str = "util";
/// Windows per run when no explicit window is configured.
pub const DEFAULT_WINDOWS: u64 = 100;

#[derive(Debug, Error)]
pub enum TelemetryError {
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot parse report {path}: {reason}")]
    BadReport { path: PathBuf, reason: String },
    #[error("run `{label}` used graph {found}, expected {expected}")]
    MismatchedWorkload { label: String, expected: String, found: String },
    #[error("baseline `{0}` is not among the compared runs")]
    UnknownBaseline(String),
    #[error("nothing to compare")]
    Empty,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> TelemetryError + '_ {
    move |source| TelemetryError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Scalars of a run, as written to `report.toml`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run: RunInfo,
    pub totals: Totals,
    /// Mean utilization of the channels in each class.
    pub class_utilization: BTreeMap<String, f64>,
    pub channels: Vec<ChannelSummary>,
    pub cores: Vec<CoreSummary>,
    pub config: SimConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub label: String,
    pub workload: String,
    pub source: u32,
    pub num_vertices: u64,
    pub reached_vertices: u64,
    pub runtime_ps: u64,
    pub runtime_ns: f64,
    pub events_executed: u64,
    pub window_ps: u64,
    pub windows: u64,
    pub graph_digest: String,
    pub distance_digest: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Totals {
    pub messages_sent: u64,
    pub messages_delivered: u64,
    pub messages_received: u64,
    pub messages_generated: u64,
    pub messages_consumed: u64,
    pub updates_accepted: u64,
    pub updates_rejected: u64,
    pub entries_pushed: u64,
    pub pushed_out_degree: u64,
    pub vertex_reads: u64,
    pub vertex_writes: u64,
    pub edge_bytes_raw: u64,
    pub edge_bytes_burst: u64,
    pub spills: u64,
    pub refills: u64,
    pub send_stalls: u64,
    pub blocked_sends: u64,
    pub blocked_ps: u64,
    pub bytes_read: u64,
    pub bytes_written: u64,
    pub memory_requests: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelSummary {
    pub label: String,
    pub class: ChannelClass,
    pub kind: MemoryKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub owner: Option<u32>,
    pub extra_latency_ns: f64,
    pub peak_bytes_per_ns: f64,
    pub bytes_read: u64,
    pub bytes_written: u64,
    pub requests: u64,
    pub beats: u64,
    pub busy_ps: u64,
    /// Whole-run utilization; 0 for a zero-length run.
    pub utilization: f64,
    pub wait_histogram: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoreSummary {
    pub core: u32,
    pub queue_high_water: u32,
    #[serde(flatten)]
    pub counters: CoreCounters,
}

/// A finished run together with everything derived from it.
#[derive(Clone, Debug, PartialEq)]
pub struct RunArtifact {
    pub summary: RunSummary,
    /// Utilization per window, one series per channel in channel order.
    pub series: Vec<Vec<f64>>,
    /// Row-major `cores x cores` message counts.
    pub links: Vec<u64>,
}

fn window_for(cfg: &SimConfig, runtime: Ps) -> Ps {
    match cfg.telemetry.window_ns {
        Some(ns) => ns_to_ps(ns).max(1),
        None => runtime.div_ceil(DEFAULT_WINDOWS).max(1),
    }
}

impl RunArtifact {
    pub fn new(label: impl Into<String>, config: &SimConfig, report: &SimReport) -> Self {
        let runtime = report.runtime_ps;
        let window = window_for(config, runtime);

        let mut class_sums: BTreeMap<String, (f64, u32)> = BTreeMap::new();
        let mut channels = Vec::with_capacity(report.channels.len());
        let mut series = Vec::with_capacity(report.channels.len());
        for ch in &report.channels {
            let util = if runtime == 0 {
                0.0
            } else {
                utilization(&ch.stats, 0, runtime).expect("non-empty run")
            };
            let slot = class_sums.entry(ch.info.class.label().to_string()).or_default();
            slot.0 += util;
            slot.1 += 1;
            channels.push(ChannelSummary {
                label: ch.info.label.clone(),
                class: ch.info.class,
                kind: ch.config.kind,
                owner: ch.info.owner,
                extra_latency_ns: ch.config.extra_latency_ns,
                peak_bytes_per_ns: ch.config.peak_bandwidth(),
                bytes_read: ch.stats.bytes_read,
                bytes_written: ch.stats.bytes_written,
                requests: ch.stats.requests,
                beats: ch.stats.beats,
                busy_ps: ch.stats.busy_ps(),
                utilization: util,
                wait_histogram: ch.stats.wait_histogram.to_vec(),
            });
            series.push(utilization_series(&ch.stats, window, runtime));
        }

        let f = &report.fabric;
        let mut totals = Totals {
            messages_sent: f.sent,
            messages_delivered: f.delivered,
            messages_received: f.received,
            blocked_sends: f.blocked_sends.iter().sum(),
            blocked_ps: f.blocked_ps.iter().sum(),
            ..Totals::default()
        };
        for c in &report.cores {
            totals.messages_generated += c.generated;
            totals.messages_consumed += c.consumed;
            totals.updates_accepted += c.accepted;
            totals.updates_rejected += c.rejected;
            totals.entries_pushed += c.entries_pushed;
            totals.pushed_out_degree += c.pushed_out_degree;
            totals.vertex_reads += c.vertex_reads;
            totals.vertex_writes += c.vertex_writes;
            totals.edge_bytes_raw += c.edge_bytes_raw;
            totals.edge_bytes_burst += c.edge_bytes_burst;
            totals.spills += c.spills;
            totals.refills += c.refills;
            totals.send_stalls += c.send_stalls;
        }
        for ch in &channels {
            totals.bytes_read += ch.bytes_read;
            totals.bytes_written += ch.bytes_written;
            totals.memory_requests += ch.requests;
        }

        let cores = report
            .cores
            .iter()
            .enumerate()
            .map(|(i, c)| CoreSummary {
                core: i as u32,
                queue_high_water: f.high_water[i],
                counters: c.clone(),
            })
            .collect();

        let summary = RunSummary {
            run: RunInfo {
                label: label.into(),
                workload: report.workload.label().to_string(),
                source: report.source,
                num_vertices: report.distances.len() as u64,
                reached_vertices: report.reached() as u64,
                runtime_ps: runtime,
                runtime_ns: ps_to_ns(runtime),
                events_executed: report.events_executed,
                window_ps: window,
                windows: series.first().map_or(0, |s| s.len() as u64),
                graph_digest: report.graph_digest.clone(),
                distance_digest: report.distance_digest.clone(),
            },
            totals,
            class_utilization: class_sums.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect(),
            channels,
            cores,
            config: config.clone(),
        };
        Self {
            summary,
            series,
            links: f.link_counts.clone(),
        }
    }

    pub fn label(&self) -> &str {
        &self.summary.run.label
    }
}

impl RunSummary {
    /// Mean utilization over the channels edges are streamed from.
    pub fn edge_utilization(&self) -> f64 {
        let edge: Vec<f64> = self
            .channels
            .iter()
            .filter(|c| c.class.holds_edges())
            .map(|c| c.utilization)
            .collect();
        if edge.is_empty() {
            0.0
        } else {
            edge.iter().sum::<f64>() / edge.len() as f64
        }
    }

    /// Mean utilization over all channels.
    pub fn mean_utilization(&self) -> f64 {
        if self.channels.is_empty() {
            return 0.0;
        }
        self.channels.iter().map(|c| c.utilization).sum::<f64>() / self.channels.len() as f64
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("summary is always representable as TOML")
    }

    pub fn from_toml_str(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    /// Reads `report.toml` from a run directory (or the file itself).
    pub fn import(path: &Path) -> Result<Self, TelemetryError> {
        let file = if path.is_dir() { path.join(REPORT_FILE) } else { path.to_path_buf() };
        let text = fs::read_to_string(&file).map_err(io_err(&file))?;
        Self::from_toml_str(&text).map_err(|reason| TelemetryError::BadReport { path: file, reason })
    }
}

/// File-name-safe form of a channel label.
pub fn file_stem(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

pub fn series_csv(series: &[f64]) -> String {
    let mut out = String::from("window_index,utilization\n");
    for (i, u) in series.iter().enumerate() {
        writeln!(out, "{i},{u:.6}").unwrap();
    }
    out
}

pub fn links_csv(links: &[u64], num_cores: usize) -> String {
    let mut out = String::from("src,dst,count\n");
    for s in 0..num_cores {
        for d in 0..num_cores {
            writeln!(out, "{s},{d},{}", links[s * num_cores + d]).unwrap();
        }
    }
    out
}

const CORE_COLUMNS: [&str; 17] = [
    "core",
    "consumed",
    "accepted",
    "rejected",
    "generated",
    "vertex_reads",
    "vertex_writes",
    "edge_bytes_raw",
    "edge_bytes_burst",
    "entries_pushed",
    "entries_popped",
    "spills",
    "refills",
    "send_stalls",
    "active_list_high_water",
    "queue_high_water",
    "pushed_out_degree",
];

pub fn cores_csv(cores: &[CoreSummary]) -> String {
    let mut out = CORE_COLUMNS.join(",");
    out.push('\n');
    for c in cores {
        let k = &c.counters;
        let row = [
            c.core as u64,
            k.consumed,
            k.accepted,
            k.rejected,
            k.generated,
            k.vertex_reads,
            k.vertex_writes,
            k.edge_bytes_raw,
            k.edge_bytes_burst,
            k.entries_pushed,
            k.entries_popped,
            k.spills,
            k.refills,
            k.send_stalls,
            k.active_list_high_water,
            c.queue_high_water as u64,
            k.pushed_out_degree,
        ];
        let cells: Vec<String> = row.iter().map(u64::to_string).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Writes the artifact into `dir`, creating it if needed. Returns the paths
/// written, report first.
pub fn export_run(artifact: &RunArtifact, dir: &Path) -> Result<Vec<PathBuf>, TelemetryError> {
    let util_dir = dir.join(UTIL_DIR);
    fs::create_dir_all(&util_dir).map_err(io_err(&util_dir))?;
    let mut written = Vec::new();
    let mut write = |path: PathBuf, text: String| -> Result<(), TelemetryError> {
        fs::write(&path, text).map_err(io_err(&path))?;
        written.push(path);
        Ok(())
    };

    write(dir.join(REPORT_FILE), artifact.summary.to_toml_string())?;
    for (ch, series) in artifact.summary.channels.iter().zip(&artifact.series) {
        write(util_dir.join(format!("{}.csv", file_stem(&ch.label))), series_csv(series))?;
    }
    write(dir.join(LINKS_FILE), links_csv(&artifact.links, artifact.summary.cores.len()))?;
    write(dir.join(CORES_FILE), cores_csv(&artifact.summary.cores))?;
    Ok(written)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub label: String,
    pub runtime_ns: f64,
    /// Baseline runtime over this runtime; higher is faster.
    pub normalized_performance: f64,
    pub mean_utilization: f64,
    pub edge_utilization: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub baseline: String,
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonTable {
    pub fn row(&self, label: &str) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.label == label)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("label,runtime_ns,normalized_performance,mean_utilization,edge_utilization\n");
        for r in &self.rows {
            writeln!(
                out,
                "{},{:.3},{:.6},{:.6},{:.6}",
                r.label, r.runtime_ns, r.normalized_performance, r.mean_utilization, r.edge_utilization
            )
            .unwrap();
        }
        out
    }
}

/// Normalizes every run against the one labelled `baseline`. Rows keep the
/// input order.
pub fn compare(runs: &[RunSummary], baseline: &str) -> Result<ComparisonTable, TelemetryError> {
    let first = runs.first().ok_or(TelemetryError::Empty)?;
    for r in runs {
        if r.run.graph_digest != first.run.graph_digest {
            return Err(TelemetryError::MismatchedWorkload {
                label: r.run.label.clone(),
                expected: first.run.graph_digest.clone(),
                found: r.run.graph_digest.clone(),
            });
        }
    }
    let base = runs
        .iter()
        .find(|r| r.run.label == baseline)
        .ok_or_else(|| TelemetryError::UnknownBaseline(baseline.to_string()))?;
    let base_runtime = base.run.runtime_ps;
    let rows = runs
        .iter()
        .map(|r| ComparisonRow {
            label: r.run.label.clone(),
            runtime_ns: r.run.runtime_ns,
            normalized_performance: if r.run.runtime_ps == base_runtime {
                1.0
            } else {
                base_runtime as f64 / r.run.runtime_ps as f64
            },
            mean_utilization: r.mean_utilization(),
            edge_utilization: r.edge_utilization(),
        })
        .collect();
    Ok(ComparisonTable {
        baseline: baseline.to_string(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::config::GraphSource;
    use crate::engine::simulate;

    fn small_run(label: &str) -> RunArtifact {
        let mut cfg = SimConfig {
            graph: GraphSource::rmat(8, 8),
            ..SimConfig::default()
        };
        cfg.system.cores = 4;
        let g = Arc::new(cfg.graph.load(cfg.seed).unwrap());
        cfg.workload.source = (0..g.num_vertices() as u32).max_by_key(|&v| g.out_degree(v)).unwrap();
        let report = simulate(&cfg, g).unwrap();
        RunArtifact::new(label, &cfg, &report)
    }

    fn with_runtime(label: &str, runtime_ps: u64) -> RunSummary {
        let mut s = small_run("x").summary;
        s.run.label = label.into();
        s.run.runtime_ps = runtime_ps;
        s.run.runtime_ns = ps_to_ns(runtime_ps);
        s
    }

    #[test]
    fn normalization() {
        let a = with_runtime("A", 100_000);
        let b = with_runtime("B", 130_000);
        let t = compare(&[a.clone(), b.clone()], "B").unwrap();
        assert_eq!(t.row("A").unwrap().normalized_performance, 1.3);
        assert_eq!(t.row("B").unwrap().normalized_performance, 1.0);
        let t = compare(std::slice::from_ref(&a), "A").unwrap();
        assert_eq!(t.rows[0].normalized_performance, 1.0);
        assert!(matches!(compare(&[a], "C"), Err(TelemetryError::UnknownBaseline(_))));
    }

    #[test]
    fn mismatched_graphs_are_rejected() {
        let a = with_runtime("A", 1);
        let mut b = with_runtime("B", 2);
        b.run.graph_digest = "00".into();
        assert!(matches!(compare(&[a, b], "A"), Err(TelemetryError::MismatchedWorkload { .. })));
    }

    #[test]
    fn summary_round_trips() {
        let art = small_run("rt");
        let text = art.summary.to_toml_string();
        assert_eq!(RunSummary::from_toml_str(&text).unwrap(), art.summary);
    }

    #[test]
    fn default_window_gives_hundred_samples() {
        let art = small_run("w");
        assert_eq!(art.summary.run.windows, DEFAULT_WINDOWS);
        assert!(art.series.iter().flatten().all(|u| (0.0..=1.0).contains(u)));
    }

    #[test]
    fn window_count_follows_horizon() {
        let mut cfg = SimConfig::default();
        cfg.telemetry.window_ns = Some(100.0);
        assert_eq!(window_for(&cfg, 1_000_000), 100_000);
        assert_eq!(1_000_000u64.div_ceil(window_for(&cfg, 1_000_000)), 10);
    }

    #[test]
    fn csv_shapes() {
        assert_eq!(series_csv(&[0.5, 1.0 / 3.0]), "window_index,utilization\n0,0.500000\n1,0.333333\n");
        assert_eq!(links_csv(&[1, 2, 3, 4], 2), "src,dst,count\n0,0,1\n0,1,2\n1,0,3\n1,1,4\n");
        assert_eq!(file_stem("hbm.c3"), "hbm.c3");
        assert_eq!(file_stem("a/b c"), "a_b_c");
    }
}
