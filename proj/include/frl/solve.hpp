// Average-reward solving for tabular MDPs: relative value iteration with an
// aperiodicity transform, exact policy evaluation, diameter via hitting-time
// value iteration, span and factored-span analytics, and a brute-force
// reference optimizer.
#pragma once

#include <cstdint>

#include "frl/common.hpp"
#include "frl/factored.hpp"

namespace frl {

struct GainBias {
    double gain = 0.0;
    numvec bias;
};

struct SolveReport {
    double gain = 0.0;
    numvec bias;
    indvec policy;
    double residual = 0.0;
    size_t iterations = 0;
};

/// Optimal average reward by relative value iteration. The update uses the
/// aperiodicity transform P <- tau*I + (1-tau)*P with rewards unchanged,
/// which leaves the gain unchanged and scales the bias, un-scaled on return.
/// Stops when the span of the Bellman residual certifies that
///   max_s |gain + h(s) - R(s,pi(s)) - P(s,pi(s))h| <= tol,
/// a certificate independent of the transform. Bias is normalized to
/// h(0) = 0; greedy ties break toward the lowest action index. `warm`
/// optionally seeds the value vector with a previous bias.
SolveReport solve_average_reward(const TabularMdp& mdp, double tol = 1e-8,
                                 size_t max_iters = 1000000, double tau = 0.5,
                                 const numvec* warm = nullptr);

/// Exact gain and bias of a stationary deterministic policy. Recurrent
/// classes are found on the positive-probability graph; gains differing
/// across classes by more than `class_tol` raise EvaluationError because the
/// policy's gain is not start-state independent. Bias solves
/// gain + h = r + P h, normalized to h(0) = 0.
GainBias policy_gain_bias(const TabularMdp& mdp, const indvec& policy,
                          double class_tol = 1e-8);

struct DiameterResult {
    double diameter = 0.0;
    bool infinite = false;
    size_t worst_from = 0;
    size_t worst_to = 0;
};

/// Diameter: the largest over ordered state pairs of the minimum expected
/// hitting time, solved per target by value iteration. Reports infinite when
/// an estimate exceeds `cap` (a reachability prepass on the any-action edge
/// graph settles plainly unreachable targets without iterating).
DiameterResult diameter(const TabularMdp& mdp, double cap = 1e6);

double span(const numvec& h);

struct SpanProfile {
    double total_span = 0.0;
    numvec factor_spans;
    double q = 0.0;
};

/// Per-factor spans sp_i(h) = max over the other components of the span of h
/// along component i, and their sum Q(h). `sizes` lists the state component
/// sizes, first component least significant in the flat index.
SpanProfile factored_span(const numvec& h, const sizvec& sizes);

/// sp(h) <= Q(h) <= m * sp(h), within slack.
bool check_span_bounds(const numvec& h, const sizvec& sizes,
                       double slack = 1e-9);

/// Exhaustive policy search: every deterministic policy is evaluated exactly
/// and the best gain wins; gains tied within `gain_tol` prefer the larger
/// bias span. Policies without a start-state-independent gain are excluded.
/// Throws SizeError when A^S exceeds `cap`.
SolveReport brute_force_optimal(const TabularMdp& mdp, size_t cap = 1000000,
                                double gain_tol = 1e-9);

/// Solves the square system M x = rhs in place by partial-pivot elimination.
/// Returns false when the matrix is numerically singular.
bool solve_linear(std::vector<numvec>& M, numvec& rhs);

}  // namespace frl
