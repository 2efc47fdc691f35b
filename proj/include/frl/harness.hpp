// Experiment harness: configuration, multi-seed execution with worker
// threads, regret computation, quantile aggregation, CSV and plot-script
// output, and the command-line front end.
#pragma once

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "frl/agents.hpp"
#include "frl/factored.hpp"

namespace frl {

/// One agent configuration expanded to a single sweep value, with the sweep
/// coordinates that feed the per-run seed split.
struct PlannedAgent {
    std::string name;
    std::string param;
    size_t agent_index = 0;
    size_t sweep_index = 0;
    AgentConfig cfg;
};

struct ExperimentConfig {
    FactoredMdp env;
    std::string env_label = "env";
    std::vector<PlannedAgent> agents;
    uint64_t T = 100000;
    uint64_t L = 0;  // 0: use the environment's largest scoped table
    size_t num_seeds = 20;
    uint64_t master_seed = 1;
    std::string out_dir = "results";
    uint64_t log_stride = 100;
    size_t workers = 0;  // 0: FRL_WORKERS, then hardware concurrency
    long initial_state = -1;  // -1: all components at their highest value
};

ExperimentConfig parse_experiment(const std::string& text);
ExperimentConfig load_experiment(const std::string& path);

/// Cumulative reward and regret per step: regret[t-1] = t*gain - creward[t-1].
struct RegretSeries {
    double gain = 0.0;
    numvec cum_reward;
    numvec cum_regret;
};

RegretSeries compute_regret(const numvec& rewards, double gain);

struct QuantileRow {
    double q25 = 0.0, q50 = 0.0, q75 = 0.0;
};

/// Linear-interpolation quantiles (the convention with h = (n-1)p).
QuantileRow quantiles_25_50_75(numvec values);

/// Per-index quantiles across equally long series. Throws on length mismatch.
std::vector<QuantileRow> aggregate_quantiles(
    const std::vector<numvec>& series);

/// Logged time steps for a run of length T: multiples of the stride, every
/// episode end, and T itself.
std::vector<uint64_t> log_points(uint64_t T, uint64_t L, uint64_t stride);

struct ExperimentResult {
    double gain = 0.0;  // exact optimal gain of the environment
    uint64_t L = 0;
    std::vector<uint64_t> points;
    /// cum_regret[agent][seed][point], aligned with `points`.
    std::vector<std::vector<numvec>> cum_regret;
    std::vector<std::vector<numvec>> cum_reward;
    std::vector<std::vector<size_t>> planner_failures;
    std::vector<std::string> run_files;
    std::string aggregate_file;
    std::string plot_file;
};

/// Runs every (agent, seed) pair, writes per-run CSVs, the aggregate
/// quantile CSV and a plot script into cfg.out_dir. Deterministic given the
/// config and master seed; the worker count only affects wall time.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Per-run seed split, fixed across releases.
uint64_t run_seed(uint64_t master_seed, size_t agent_index, size_t sweep_index,
                  size_t seed_index);

/// Command-line entry: run / gen-env / validate / analyze. Returns 0 on
/// success, 1 on validation failure, 2 on runtime failure.
int cli(const std::vector<std::string>& args, std::ostream& out = std::cout,
        std::ostream& err = std::cerr);

}  // namespace frl
