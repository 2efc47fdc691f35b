// Planning front-end: exact average-reward planning (flatten + relative VI,
// with a specialized kernel for extended MDPs that never materializes the
// S x (A*S) table) and approximate linear programming with per-state-factor
// basis functions.
#pragma once

#include "frl/common.hpp"
#include "frl/extended.hpp"
#include "frl/factored.hpp"
#include "frl/simplex.hpp"
#include "frl/solve.hpp"

namespace frl {

enum class PlannerKind { exact, alp };

struct PlannerChoice {
    PlannerKind kind = PlannerKind::exact;
    double tol = 1e-8;
    size_t max_iters = 1000000;
};

struct PlanResult {
    indvec policy;
    double gain = 0.0;
    numvec bias;
    double residual = 0.0;
    size_t iterations = 0;
};

/// Plans on a factored MDP. Exact: flatten and solve. ALP: build and solve
/// the LP, then act greedily on the learned weights; the reported gain is
/// the LP objective (an upper bound on the optimal gain).
PlanResult plan(const FactoredMdp& mdp, const PlannerChoice& choice,
                const numvec* warm = nullptr);

PlanResult plan_tabular(const TabularMdp& mdp, const PlannerChoice& choice,
                        const numvec* warm = nullptr);

/// Plans on an extended MDP. The exact path exploits the rank-one structure
/// of extreme rows: for one (s, a) the backup over all targets costs
/// O(m * S) instead of O(S^2). Returns a policy over extended actions.
PlanResult plan_extended(const ExtendedFmdp& ext, const PlannerChoice& choice,
                         const numvec* warm = nullptr);

/// ALP over basis {1} + {h_i(s) = s_i}: variables (lambda, w_1..w_m), one
/// constraint per flat (s, a):
///   lambda + sum_i w_i (s_i - E[s'_i | s, a]) >= R(s, a).
struct AlpModel {
    LinearProgram lp;
    size_t num_factors = 0;
};

AlpModel build_alp(const FactoredMdp& mdp, size_t max_pairs = size_t(1) << 20);

/// Greedy policy for basis weights: argmax_a R(s,a) + sum_i w_i E[s'_i|s,a],
/// lowest action index on ties.
indvec greedy_from_weights(const FactoredMdp& mdp, const numvec& weights);

}  // namespace frl
