mod experiment;
mod template;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use tegra_sim::graph::{generate_rmat, relabel_vertices, save_edge_list, EdgeListFormat, RmatParams};
use tegra_sim::reference::{first_mismatch, shortest_paths};
use tegra_sim::telemetry::{compare, export_run, ComparisonTable, RunArtifact, RunSummary};
use tegra_sim::{simulate, ConfigError, CsrGraph, GraphSource, SimConfig, SimError, Topology, Workload};

use experiment::ExperimentSpec;

const DEFAULT_OUT_DIR: &str = "tegra-out";
const THREADS_ENV: &str = "TEGRA_SIM_THREADS";

#[derive(Parser, Debug)]
#[command(name = "tegra-sim", version, about = "Simulate message-passing graph processors with disaggregated memory")]
struct Cli {
    /// Graph generation seed (overrides `seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (overrides `experiment.out_dir`).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Only print errors.
    #[arg(long, short, global = true)]
    quiet: bool,
    /// Print a commented configuration with every default and exit.
    #[arg(long)]
    print_default_config: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate an RMAT graph file.
    Gen(GenArgs),
    /// Run one simulation and export its artifacts.
    Run(RunArgs),
    /// Run the cross product of core counts, topologies and graph scales.
    Sweep(SweepArgs),
    /// Build a comparison table from exported runs.
    Compare(CompareArgs),
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long)]
    scale: u32,
    #[arg(long, default_value_t = 16)]
    edge_factor: u32,
    /// Keep RMAT's raw vertex numbering.
    #[arg(long)]
    no_permute: bool,
    /// `binary` or `plain_text`; taken from the extension when absent.
    #[arg(long)]
    format: Option<EdgeListFormat>,
    #[arg(short, long)]
    output: PathBuf,
}

/// Flags that override config values.
#[derive(Args, Debug, Default)]
struct Overrides {
    /// Configuration file; built-in defaults when absent.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// accelerator, tegra or all_disaggregated.
    #[arg(long)]
    topology: Option<Topology>,
    /// Number of processing cores.
    #[arg(long)]
    cores: Option<u32>,
    /// DDR4 channels in the shared pool.
    #[arg(long)]
    pool_channels: Option<u32>,
    /// Edge-list file to load instead of generating a graph.
    #[arg(long, conflicts_with = "scale")]
    graph: Option<PathBuf>,
    /// RMAT scale for a generated graph.
    #[arg(long)]
    scale: Option<u32>,
    /// Edges per vertex for a generated RMAT graph.
    #[arg(long)]
    edge_factor: Option<u32>,
    /// sssp or bfs.
    #[arg(long, value_parser = parse_workload)]
    workload: Option<Workload>,
    /// Source vertex.
    #[arg(long)]
    source: Option<u32>,
    /// Utilization sampling window in ns.
    #[arg(long)]
    window_ns: Option<f64>,
    /// Verify distances against a reference shortest-path solver.
    #[arg(long)]
    check_oracle: bool,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    overrides: Overrides,
    /// Run label; derived from topology, cores and graph when absent.
    #[arg(long)]
    label: Option<String>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    overrides: Overrides,
    /// Comma-separated core counts.
    #[arg(long = "sweep-cores", value_delimiter = ',')]
    sweep_cores: Vec<u32>,
    /// Comma-separated topologies.
    #[arg(long = "sweep-topologies", value_delimiter = ',')]
    sweep_topologies: Vec<Topology>,
    /// Comma-separated RMAT scales.
    #[arg(long = "sweep-scales", value_delimiter = ',')]
    sweep_scales: Vec<u32>,
    /// Baseline run label, with or without the graph suffix. Defaults to the
    /// first point.
    #[arg(long)]
    baseline: Option<String>,
}

#[derive(Args, Debug)]
struct CompareArgs {
    /// Run directories or report files.
    #[arg(required = true)]
    runs: Vec<PathBuf>,
    /// Defaults to the first run.
    #[arg(long)]
    baseline: Option<String>,
    /// Write the table here instead of standard output.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn parse_workload(s: &str) -> Result<Workload, String> {
    match s {
        "sssp" => Ok(Workload::Sssp),
        "bfs" => Ok(Workload::Bfs),
        other => Err(format!("unknown workload `{other}` (expected sssp or bfs)")),
    }
}

#[derive(Debug)]
enum Failure {
    /// Bad flags or configuration; exit status 2.
    Usage(String),
    /// The run itself failed; exit status 1.
    Runtime(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(c) => c.into(),
            SimError::BadSource { .. } => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn runtime<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Runtime(e.to_string())
}

struct Ctx {
    seed: Option<u64>,
    out_dir: Option<PathBuf>,
    quiet: bool,
}

impl Ctx {
    fn say(&self, line: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", line.as_ref());
        }
    }

    fn out_dir(&self, spec: &ExperimentSpec) -> PathBuf {
        self.out_dir
            .clone()
            .or_else(|| spec.experiment.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.print_default_config {
        print!("{}", template::DEFAULT_CONFIG);
        return ExitCode::SUCCESS;
    }
    let Some(command) = cli.command else {
        eprintln!("error: a subcommand is required (gen, run, sweep or compare); see --help");
        return ExitCode::from(2);
    };
    let ctx = Ctx {
        seed: cli.seed,
        out_dir: cli.out_dir,
        quiet: cli.quiet,
    };
    let result = match command {
        Command::Gen(args) => cmd_gen(&ctx, args),
        Command::Run(args) => cmd_run(&ctx, args),
        Command::Sweep(args) => cmd_sweep(&ctx, args),
        Command::Compare(args) => cmd_compare(&ctx, args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn cmd_gen(ctx: &Ctx, args: GenArgs) -> Result<(), Failure> {
    let params = RmatParams::new(args.scale, args.edge_factor, ctx.seed.unwrap_or(1));
    let mut edges = generate_rmat(&params).map_err(|e| Failure::Usage(e.to_string()))?;
    if !args.no_permute {
        relabel_vertices(&mut edges, params.num_vertices(), params.seed);
    }
    let graph = CsrGraph::build(params.num_vertices(), &edges).map_err(runtime)?;
    let format = args.format.unwrap_or_else(|| match EdgeListFormat::from_path(&args.output) {
        EdgeListFormat::PlainText if args.output.extension().is_none() => EdgeListFormat::Binary,
        f => f,
    });
    save_edge_list(&graph, &args.output, format).map_err(runtime)?;
    ctx.say(format!(
        "wrote {}: {} vertices, {} edges",
        args.output.display(),
        graph.num_vertices(),
        graph.num_edges()
    ));
    Ok(())
}

/// Loads the config file (or defaults) and applies flag overrides.
fn load_spec(ctx: &Ctx, o: &Overrides) -> Result<ExperimentSpec, Failure> {
    let mut spec = match &o.config {
        Some(path) => ExperimentSpec::load(path)?,
        None => ExperimentSpec {
            config: SimConfig::default(),
            experiment: Default::default(),
        },
    };
    let cfg = &mut spec.config;
    if let Some(seed) = ctx.seed {
        cfg.seed = seed;
    }
    if let Some(t) = o.topology {
        cfg.system.topology = t;
    }
    if let Some(c) = o.cores {
        cfg.system.cores = c;
    }
    if let Some(p) = o.pool_channels {
        cfg.system.pool_channels = Some(p);
    }
    if let Some(path) = &o.graph {
        cfg.graph = GraphSource::File {
            path: path.clone(),
            format: None,
        };
    }
    if o.scale.is_some() || o.edge_factor.is_some() {
        let (scale, edge_factor) = match &cfg.graph {
            GraphSource::Rmat { scale, edge_factor, .. } => (*scale, *edge_factor),
            _ => (16, 16),
        };
        let mut g = match &cfg.graph {
            g @ GraphSource::Rmat { .. } => g.clone(),
            _ => GraphSource::rmat(scale, edge_factor),
        };
        if let GraphSource::Rmat { scale, edge_factor, .. } = &mut g {
            *scale = o.scale.unwrap_or(*scale);
            *edge_factor = o.edge_factor.unwrap_or(*edge_factor);
        }
        cfg.graph = g;
    }
    if let Some(w) = o.workload {
        cfg.workload.kind = w;
    }
    if let Some(s) = o.source {
        cfg.workload.source = s;
    }
    if let Some(w) = o.window_ns {
        cfg.telemetry.window_ns = Some(w);
    }
    if o.check_oracle {
        spec.experiment.check_oracle = true;
    }
    cfg.validate()?;
    Ok(spec)
}

fn load_graph(cfg: &SimConfig) -> Result<Arc<CsrGraph>, Failure> {
    cfg.graph.load(cfg.seed).map(Arc::new).map_err(runtime)
}

/// Runs one point, optionally checks it against the reference solver, and
/// exports it under `dir`.
fn execute(cfg: &SimConfig, graph: Arc<CsrGraph>, label: &str, check_oracle: bool, dir: &Path) -> Result<RunSummary, Failure> {
    let report = simulate(cfg, graph.clone())?;
    if check_oracle {
        let expected = shortest_paths(&graph, cfg.workload.source, cfg.workload.kind);
        if let Some((v, e, a)) = first_mismatch(&expected, &report.distances) {
            return Err(Failure::Runtime(format!(
                "{label}: distance of vertex {v} is {a}, reference solver says {e}"
            )));
        }
    }
    let artifact = RunArtifact::new(label, cfg, &report);
    export_run(&artifact, dir).map_err(runtime)?;
    Ok(artifact.summary)
}

fn summary_line(s: &RunSummary) -> String {
    let utils: Vec<String> = s
        .class_utilization
        .iter()
        .map(|(class, u)| format!("{class}={u:.4}"))
        .collect();
    format!(
        "{}: runtime {:.3} ns, {} events, {} messages; mean utilization {}",
        s.run.label,
        s.run.runtime_ns,
        s.run.events_executed,
        s.totals.messages_sent,
        utils.join(" ")
    )
}

fn cmd_run(ctx: &Ctx, args: RunArgs) -> Result<(), Failure> {
    let spec = load_spec(ctx, &args.overrides)?;
    let cfg = &spec.config;
    let label = args
        .label
        .or_else(|| spec.experiment.label.clone())
        .unwrap_or_else(|| cfg.label());
    let graph = load_graph(cfg)?;
    let dir = ctx.out_dir(&spec).join(&label);
    let summary = execute(cfg, graph, &label, spec.experiment.check_oracle, &dir)?;
    ctx.say(summary_line(&summary));
    if spec.experiment.check_oracle {
        ctx.say(format!("{label}: distances match the reference solver"));
    }
    ctx.say(format!("artifacts in {}", dir.display()));
    Ok(())
}

fn thread_pool() -> Result<rayon::ThreadPool, Failure> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Failure::Usage(format!("{THREADS_ENV} must be a positive integer, got `{v}`")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(runtime)
}

/// Baseline label inside one graph's group of runs.
fn resolve_baseline(wanted: Option<&str>, tag: &str, labels: &[&str]) -> Result<String, Failure> {
    let Some(wanted) = wanted else {
        return Ok(labels[0].to_string());
    };
    let with_tag = format!("{wanted}-{tag}");
    labels
        .iter()
        .find(|l| **l == wanted || **l == with_tag)
        .map(|l| l.to_string())
        .ok_or_else(|| Failure::Usage(format!("baseline `{wanted}` matches no sweep point")))
}

fn cmd_sweep(ctx: &Ctx, args: SweepArgs) -> Result<(), Failure> {
    let mut spec = load_spec(ctx, &args.overrides)?;
    if !args.sweep_cores.is_empty() {
        spec.experiment.cores = args.sweep_cores;
    }
    if !args.sweep_topologies.is_empty() {
        spec.experiment.topologies = args.sweep_topologies;
    }
    if !args.sweep_scales.is_empty() {
        spec.experiment.scales = args.sweep_scales;
    }
    let baseline = args.baseline.or_else(|| spec.experiment.baseline.clone());
    let points = spec.points()?;
    let out = ctx.out_dir(&spec);

    // One graph per distinct source, shared by every point that uses it.
    let mut graphs: BTreeMap<String, Arc<CsrGraph>> = BTreeMap::new();
    for p in &points {
        let key = p.graph.tag();
        if let std::collections::btree_map::Entry::Vacant(slot) = graphs.entry(key) {
            slot.insert(load_graph(p)?);
        }
    }
    let mut groups: Vec<(String, Vec<String>)> = Vec::new();
    for p in &points {
        let tag = p.graph.tag();
        match groups.iter_mut().find(|(t, _)| *t == tag) {
            Some((_, labels)) => labels.push(p.label()),
            None => groups.push((tag, vec![p.label()])),
        }
    }
    let baselines = groups
        .iter()
        .map(|(tag, labels)| {
            let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
            resolve_baseline(baseline.as_deref(), tag, &refs)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let check = spec.experiment.check_oracle;
    let pool = thread_pool()?;
    let summaries: Vec<RunSummary> = pool.install(|| {
        points
            .par_iter()
            .map(|p| {
                let label = p.label();
                let summary = execute(p, graphs[&p.graph.tag()].clone(), &label, check, &out.join(&label))?;
                ctx.say(summary_line(&summary));
                Ok(summary)
            })
            .collect::<Result<Vec<_>, Failure>>()
    })?;

    let single = groups.len() == 1;
    for ((tag, _), base) in groups.iter().zip(&baselines) {
        let runs: Vec<RunSummary> = summaries
            .iter()
            .filter(|s| s.config.graph.tag() == *tag)
            .cloned()
            .collect();
        let table = compare(&runs, base).map_err(runtime)?;
        let name = if single { "comparison.csv".to_string() } else { format!("comparison-{tag}.csv") };
        let path = out.join(name);
        std::fs::write(&path, table.to_csv()).map_err(runtime)?;
        print_table(ctx, &table);
        ctx.say(format!("table in {}", path.display()));
    }
    Ok(())
}

fn print_table(ctx: &Ctx, table: &ComparisonTable) {
    for r in &table.rows {
        ctx.say(format!(
            "{:<32} {:>16.3} ns  x{:.4} vs {}",
            r.label, r.runtime_ns, r.normalized_performance, table.baseline
        ));
    }
}

fn cmd_compare(ctx: &Ctx, args: CompareArgs) -> Result<(), Failure> {
    let runs = args
        .runs
        .iter()
        .map(|p| RunSummary::import(p).map_err(|e| Failure::Usage(e.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    let baseline = args.baseline.unwrap_or_else(|| runs[0].run.label.clone());
    let table = compare(&runs, &baseline).map_err(|e| Failure::Usage(e.to_string()))?;
    match &args.output {
        Some(path) => {
            std::fs::write(path, table.to_csv()).map_err(runtime)?;
            print_table(ctx, &table);
        }
        None => print!("{}", table.to_csv()),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn baseline_resolution() {
        let labels = ["tegra-c32-rmat14", "tegra-c48-rmat14"];
        assert_eq!(resolve_baseline(None, "rmat14", &labels).unwrap(), "tegra-c32-rmat14");
        assert_eq!(resolve_baseline(Some("tegra-c48"), "rmat14", &labels).unwrap(), "tegra-c48-rmat14");
        assert_eq!(resolve_baseline(Some("tegra-c48-rmat14"), "rmat14", &labels).unwrap(), "tegra-c48-rmat14");
        assert!(resolve_baseline(Some("tegra-c4"), "rmat14", &labels).is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
