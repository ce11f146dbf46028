/// Commented configuration printed by `--print-default-config`. Parsing it
/// yields exactly the built-in defaults.
pub const DEFAULT_CONFIG: &str = r#"# tegra-sim experiment configuration.
# Every key is optional; omitted keys take the values shown here.

# Seeds graph generation. The simulation itself has no randomness.
seed = 1

[graph]
# rmat | uniform | file
kind = "rmat"
# 2^scale vertices, 2^scale * edge_factor edges, weights uniform in [1, 64].
scale = 16
edge_factor = 16
# Quadrant probabilities (a, b, c, d); must sum to 1.
probs = [0.57, 0.19, 0.19, 0.05]
# Randomly relabel vertex ids after generation.
permute = true
# kind = "uniform" takes: vertices, edges, max_weight (default 64).
# kind = "file" takes: path, format ("plain_text" or "binary"; guessed from
# the extension when absent, .tgra/.bin meaning binary).

[system]
# accelerator | tegra | all_disaggregated
topology = "tegra"
cores = 32
# modulo | range
partition = "modulo"
# DDR4 channels in the shared pool. Defaults to one per 8 cores.
# pool_channels = 4
# Pool address interleave in bytes.
interleave_bytes = 256
# Added to every access of disaggregated memory.
disaggregation_latency_ns = 150.0

# Channel technology. Each block must be given in full if present.
[memory.ddr4]
bandwidth_bytes_per_ns = 19.2
base_latency_ns = 50.0
capacity_bytes = 17179869184
access_granularity = 64
pseudo_channels = 1

# One HBM2 stack per core for vertex memory.
[memory.hbm2]
bandwidth_bytes_per_ns = 32.0
base_latency_ns = 30.0
capacity_bytes = 8589934592
access_granularity = 32
pseudo_channels = 8

[fabric]
hop_latency_ns = 50.0
# Per destination queue, counting messages still in flight to it.
queue_capacity = 1024
# Messages per ns each core can inject.
injection_rate = 1.0

[core]
# Compute time per consumed message and per generated message.
consumer_cost_ns = 1.0
generator_cost_ns = 1.0
# Hardware active-list entries before spilling to memory.
active_list_capacity = 64
# Overflow entries reserved per core in vertex memory.
overflow_entries = 1048576

[workload]
# sssp | bfs
kind = "sssp"
source = 0

[telemetry]
# Utilization sampling window. A hundredth of the runtime when absent.
# window_ns = 1000.0
"#;

#[cfg(test)]
mod tests {
    use tegra_sim::SimConfig;

    use super::*;

    #[test]
    fn template_is_the_default() {
        assert_eq!(SimConfig::from_toml_str(DEFAULT_CONFIG).unwrap(), SimConfig::default());
    }
}
