use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tegra_sim::graph::{load_edge_list, EdgeListFormat};
use tegra_sim::telemetry::RunSummary;
use tegra_sim::SimConfig;

fn tegra_sim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tegra-sim"))
        .args(args)
        .env_remove("TEGRA_SIM_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: &str = "[graph]\nkind = \"uniform\"\nvertices = 300\nedges = 3000\n[system]\ncores = 4\n";

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn printed_default_config_parses_to_defaults() {
    let o = tegra_sim(&["--print-default-config"]);
    assert!(o.status.success());
    assert_eq!(SimConfig::from_toml_str(&stdout(&o)).unwrap(), SimConfig::default());
}

#[test]
fn gen_writes_deterministic_binary_graphs() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.tgra");
    let b = dir.path().join("b.tgra");
    for path in [&a, &b] {
        let o = tegra_sim(&["gen", "--scale", "10", "--edge-factor", "16", "--seed", "1", "-o", path.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
        assert!(stdout(&o).contains("16384 edges"), "{}", stdout(&o));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(&fs::read(&a).unwrap()[..4], b"TGRA");
    let g = load_edge_list(&a, EdgeListFormat::Binary).unwrap();
    assert_eq!((g.num_vertices(), g.num_edges()), (1024, 16384));
}

#[test]
fn run_exports_artifacts_and_checks_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.toml", SMALL);
    let out = dir.path().join("out");
    let o = tegra_sim(&["run", "-c", &cfg, "--check-oracle", "--out-dir", out.to_str().unwrap(), "--label", "small"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("runtime") && text.contains(" ns"), "{text}");
    assert!(text.contains("match the reference solver"), "{text}");

    let run = out.join("small");
    let summary = RunSummary::import(&run).unwrap();
    assert_eq!(summary.run.label, "small");
    assert_eq!(summary.config.system.cores, 4);
    assert!(run.join("links.csv").is_file());
    assert!(run.join("cores.csv").is_file());
    let util: Vec<_> = fs::read_dir(run.join("util")).unwrap().collect();
    assert_eq!(util.len(), summary.channels.len());
}

#[test]
fn flags_override_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.toml", SMALL);
    let out = dir.path().join("out");
    let o = tegra_sim(&[
        "run", "-c", &cfg, "--topology", "accelerator", "--cores", "2", "--quiet", "--out-dir", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).is_empty());
    let summary = RunSummary::import(&out.join("accelerator-c2-uniform300")).unwrap();
    assert_eq!(summary.config.system.topology, tegra_sim::Topology::Accelerator);
    assert_eq!(summary.channels.len(), 4);
}

#[test]
fn unknown_topology_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", "[system]\ntopology = \"ring\"\n");
    let o = tegra_sim(&["run", "-c", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("system.topology"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(tegra_sim(&[]).status.code(), Some(2));
    assert_eq!(tegra_sim(&["run", "--cores", "many"]).status.code(), Some(2));
    let o = Command::new(env!("CARGO_BIN_EXE_tegra-sim"))
        .args(["sweep", "--sweep-cores", "1"])
        .env("TEGRA_SIM_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn runtime_failures_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "missing.toml",
        "[graph]\nkind = \"file\"\npath = \"/nonexistent/graph.tgra\"\n",
    );
    let o = tegra_sim(&["run", "-c", &cfg, "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn sweep_writes_one_run_per_point_and_a_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "sweep.toml",
        &format!("{SMALL}[experiment]\ncores = [2, 4]\ntopologies = [\"tegra\", \"accelerator\", \"all_disaggregated\"]\nbaseline = \"all_disaggregated-c4\"\n"),
    );
    let out = dir.path().join("sweep");
    let o = tegra_sim(&["sweep", "-c", &cfg, "--check-oracle", "--out-dir", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = fs::read_to_string(out.join("comparison.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "label,runtime_ns,normalized_performance,mean_utilization,edge_utilization");
    assert_eq!(lines.len(), 7);
    assert!(lines.iter().any(|l| l.starts_with("all_disaggregated-c4-uniform300,") && l.contains(",1.000000,")));
    for t in ["tegra", "accelerator", "all_disaggregated"] {
        for c in [2, 4] {
            assert!(out.join(format!("{t}-c{c}-uniform300")).join("report.toml").is_file());
        }
    }
}

#[test]
fn single_point_sweep_matches_run_and_compare() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.toml", SMALL);
    let sweep_out = dir.path().join("sweep");
    let run_out = dir.path().join("run");
    let o = tegra_sim(&["sweep", "-c", &cfg, "--quiet", "--out-dir", sweep_out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = tegra_sim(&["run", "-c", &cfg, "--quiet", "--out-dir", run_out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let label = "tegra-c4-uniform300";
    assert_eq!(
        fs::read(sweep_out.join(label).join("report.toml")).unwrap(),
        fs::read(run_out.join(label).join("report.toml")).unwrap()
    );
    let table_path = dir.path().join("table.csv");
    let o = tegra_sim(&[
        "compare",
        run_out.join(label).to_str().unwrap(),
        "-o",
        table_path.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        fs::read_to_string(table_path).unwrap(),
        fs::read_to_string(sweep_out.join("comparison.csv")).unwrap()
    );
}

#[test]
fn compare_rejects_different_graphs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    for (name, text) in [
        ("a.toml", SMALL.to_string()),
        ("b.toml", SMALL.replace("edges = 3000", "edges = 2000")),
    ] {
        let cfg = write_config(dir.path(), name, &text);
        let o = tegra_sim(&["run", "-c", &cfg, "--quiet", "--label", name, "--out-dir", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let o = tegra_sim(&["compare", out.join("a.toml").to_str().unwrap(), out.join("b.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("graph"), "{}", stderr(&o));
}

#[test]
fn scale_sweep_groups_tables_by_graph() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = Command::new(env!("CARGO_BIN_EXE_tegra-sim"))
        .args([
            "sweep",
            "--sweep-scales",
            "6,7",
            "--sweep-cores",
            "2,4",
            "--baseline",
            "tegra-c2",
            "--quiet",
            "--out-dir",
            out.to_str().unwrap(),
        ])
        .env("TEGRA_SIM_THREADS", "2")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    for scale in [6, 7] {
        let table = fs::read_to_string(out.join(format!("comparison-rmat{scale}.csv"))).unwrap();
        assert_eq!(table.lines().count(), 3);
        assert!(table.contains(&format!("tegra-c2-rmat{scale},")));
    }
}
