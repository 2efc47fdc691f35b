// Extended-MDP construction: extreme transition dynamics, the extended
// factored MDP whose action carries a target state, policy mapping back to
// base actions, and the optimism and deviation diagnostics built on it.
#pragma once

#include "frl/common.hpp"
#include "frl/confidence.hpp"
#include "frl/factored.hpp"
#include "frl/solve.hpp"

namespace frl {

/// The extreme row p - w + e_target * sum(w): all width mass is moved onto
/// the target value. Requires 0 <= w <= p componentwise.
numvec extreme_dynamic(const numvec& phat, const numvec& width, size_t target);

/// Extended MDP over the base state space with action set A x S. Stored both
/// as a genuine factored MDP (target components appended as action
/// components; transition factor i gains target component i in its scope)
/// and as the rank-one form q(x) + g(x) * e_target used by the fast planner.
struct ExtendedFmdp {
    FactoredMdp ext;
    size_t base_actions = 0;
    sizvec factor_sizes;       // state component sizes S_i
    std::vector<numvec> q;     // [i][x * S_i + s'], phat - wp, nonnegative
    std::vector<numvec> g;     // [i][x], total width mass per row
    std::vector<numvec> rtilde;  // [i][x], rhat + wr

    size_t num_states() const { return ext.num_states(); }
    size_t num_actions() const { return ext.num_actions(); }
};

/// Builds the extended MDP from empirical estimates and widths: transitions
/// use extreme dynamics toward the target component, rewards are rhat + wr
/// (not clipped).
ExtendedFmdp build_extended(const FactoredMdp& shape, const EmpiricalModel& emp,
                            const WidthTables& widths);

/// Base-action component of an extended policy.
indvec map_policy(const ExtendedFmdp& ext, const indvec& extended_policy);

/// Extended action index for (base action, target state).
size_t extended_action(const ExtendedFmdp& ext, size_t action, size_t target);

/// Componentwise optimism transfer: lift the true policy to the extended MDP
/// with target argmax h (lowest index on ties) and check
/// (P(ext, lifted) - P(truth, policy)) h >= -slack in every component.
bool optimism_predicate(const FactoredMdp& truth, const ExtendedFmdp& ext,
                        const numvec& h, const indvec& policy,
                        double slack = 1e-9);

/// D(extended) <= D(truth) + slack, with infinite diameters compared
/// consistently (an infinite true diameter accepts anything).
bool extended_diameter_predicate(const FactoredMdp& truth,
                                 const ExtendedFmdp& ext, double slack = 1e-6);

/// Deviation inequality for product distributions: for P and P-tilde given
/// per factor, sum_s (Ptilde(s) - P(s)) h(s) <= sum_i |P_i - Ptilde_i|_1 *
/// sp_i(h). Returns both sides.
struct DeviationBound {
    double lhs = 0.0;
    double rhs = 0.0;
};

DeviationBound factored_deviation_bound(const std::vector<numvec>& p,
                                        const std::vector<numvec>& ptilde,
                                        const numvec& h, const sizvec& sizes);

}  // namespace frl
