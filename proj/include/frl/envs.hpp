// Benchmark environment generators: computer-network (sysadmin) instances on
// circle and three-leg topologies, Cartesian products of independent tabular
// MDPs, products of deterministic cycle walks (whose joint diameter is
// infinite by a parity obstruction), and products of two-state switching
// chains with one slightly better action.
#pragma once

#include <cstdint>
#include <vector>

#include "frl/factored.hpp"

namespace frl {

enum class Topology { circle, three_leg };

struct SysadminSpec {
    Topology topology = Topology::circle;
    size_t size = 4;
    double alpha1 = 0.1;
    double alpha2 = 0.1;
    double reboot_success = 0.95;
    uint64_t noise_seed = 1;
};

/// In-neighbor lists, self excluded. Circle: machine i-1 feeds machine i.
/// Three-leg: machine 0 is the hub, the rest split into three legs as equal
/// as possible, each node fed by its hub-ward neighbor.
std::vector<ScopeSet> sysadmin_neighbors(Topology topology, size_t size);

/// Network of m binary machines (1 = working). Actions: reboot machine a for
/// a < m, noop for a = m. Rebooting a machine makes it work with probability
/// reboot_success regardless of neighbors; otherwise a working machine fails
/// with probability min{1, alpha1*|eps1_i| + sum_j alpha2*|eta1_ij|*[j down]}
/// and a failed machine stays down with probability
/// min{1, max{|eps0_i|, 0.5} + sum_j alpha2*|eta0_ij|*[j down]}, the sums
/// ranging over in-neighbors. The eps/eta draws are standard normal, taken
/// once from noise_seed at construction and frozen into the tables. Reward
/// factor i pays 1/m while machine i works, so the total lies in [0, 1].
FactoredMdp build_sysadmin(const SysadminSpec& spec);

/// Product of independent MDPs: one state and one action component per input;
/// transition and reward factor i scoped to {state_i, action_i}. renormalize
/// scales every reward by 1/n to keep the total in [0, 1].
FactoredMdp cartesian_product(const std::vector<TabularMdp>& components,
                              bool renormalize);

/// Deterministic walk on an even cycle: action 0 steps forward, action 1
/// steps backward, reward 1 at state 0.
TabularMdp cycle_walk(size_t cycle_len);

/// Renormalized product of identical cycle walks. Every action moves every
/// copy, so the sum of positions keeps its parity and the joint chain is not
/// communicating even though each copy alone has diameter cycle_len/2.
FactoredMdp build_product_circle(size_t copies = 2, size_t cycle_len = 4);

struct ChainSpec {
    size_t copies = 1;
    double delta = 0.1;
    double eps = 0.05;
    size_t actions = 2;
};

/// Two-state switching chain: from state 0 every action moves up with
/// probability delta except action 0, which moves with delta + eps; from
/// state 1 every action falls back with probability delta. Reward equals the
/// state.
TabularMdp two_state_chain(double delta, double eps, size_t actions);

/// Renormalized product of identical two-state switching chains.
FactoredMdp build_chain_product(const ChainSpec& spec);

}  // namespace frl
