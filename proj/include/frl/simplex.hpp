// A small dense LP solver: minimize c.x subject to row constraints with
// relations >=, <=, =, and per-variable bounds (free or boxed). Two-phase
// primal simplex with Dantzig pricing, switching to Bland's rule to escape
// cycling.
#pragma once

#include <limits>

#include "frl/common.hpp"

namespace frl {

enum class Relation { ge, le, eq };

struct LinearProgram {
    numvec objective;               // minimized
    std::vector<numvec> rows;
    numvec rhs;
    std::vector<Relation> relations;
    numvec lower;                   // -inf for free below
    numvec upper;                   // +inf for free above

    size_t num_vars() const { return objective.size(); }
    size_t num_rows() const { return rows.size(); }

    /// All-free variable bounds sized to the objective.
    void default_bounds();
    void add_row(const numvec& coef, Relation rel, double b);
};

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };

struct LpResult {
    LpStatus status = LpStatus::optimal;
    numvec x;
    double objective = 0.0;
    size_t iterations = 0;
};

LpResult solve_lp(const LinearProgram& lp, double tol = 1e-9);

}  // namespace frl
