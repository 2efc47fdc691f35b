#include "frl/simplex.hpp"

#include <algorithm>
#include <cmath>

namespace frl {

void LinearProgram::default_bounds() {
    lower.assign(objective.size(), -std::numeric_limits<double>::infinity());
    upper.assign(objective.size(), std::numeric_limits<double>::infinity());
}

void LinearProgram::add_row(const numvec& coef, Relation rel, double b) {
    rows.push_back(coef);
    relations.push_back(rel);
    rhs.push_back(b);
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Standard-form tableau: minimize cost over y >= 0 with Ey = f, f >= 0.
/// Basis starts as one artificial per row; phase 1 drives their sum to 0.
struct Tableau {
    size_t rows, cols;           // structural columns, artificials excluded
    std::vector<numvec> a;       // rows x (cols + rows) coefficient matrix
    numvec f;                    // right-hand side, kept nonnegative
    numvec cost;                 // phase-2 costs of structural columns
    sizvec basis;                // basic column per row

    size_t width() const { return cols + rows; }
};

void pivot(Tableau& t, size_t prow, size_t pcol) {
    double d = t.a[prow][pcol];
    for (double& v : t.a[prow]) v /= d;
    t.f[prow] /= d;
    for (size_t r = 0; r < t.rows; ++r) {
        if (r == prow) continue;
        double m = t.a[r][pcol];
        if (m == 0.0) continue;
        for (size_t c = 0; c < t.width(); ++c) t.a[r][c] -= m * t.a[prow][c];
        t.f[r] -= m * t.f[prow];
    }
    t.basis[prow] = pcol;
}

/// Runs simplex on the given reduced-cost vector. Returns status; `active`
/// restricts the columns eligible to enter.
LpStatus run_simplex(Tableau& t, const numvec& colcost, size_t active,
                     double tol, size_t& iterations, size_t max_iters,
                     size_t bland_after) {
    size_t w = t.width();
    while (true) {
        if (iterations >= max_iters) return LpStatus::iteration_limit;
        bool bland = iterations >= bland_after;

        // Reduced costs: rc_j = c_j - cB . column_j.
        numvec cb(t.rows);
        for (size_t r = 0; r < t.rows; ++r)
            cb[r] = t.basis[r] < w ? colcost[t.basis[r]] : 0.0;
        size_t enter = w;
        double best = -tol;
        for (size_t j = 0; j < active; ++j) {
            double rc = colcost[j];
            for (size_t r = 0; r < t.rows; ++r) rc -= cb[r] * t.a[r][j];
            if (rc < -tol) {
                if (bland) {
                    enter = j;
                    break;
                }
                if (rc < best) {
                    best = rc;
                    enter = j;
                }
            }
        }
        if (enter == w) return LpStatus::optimal;

        size_t leave = t.rows;
        double ratio = kInf;
        for (size_t r = 0; r < t.rows; ++r) {
            if (t.a[r][enter] > tol) {
                double q = t.f[r] / t.a[r][enter];
                if (q < ratio - 1e-12 ||
                    (q < ratio + 1e-12 &&
                     (leave == t.rows || t.basis[r] < t.basis[leave]))) {
                    ratio = q;
                    leave = r;
                }
            }
        }
        if (leave == t.rows) return LpStatus::unbounded;
        pivot(t, leave, enter);
        ++iterations;
    }
}

}  // namespace

LpResult solve_lp(const LinearProgram& lp, double tol) {
    size_t n = lp.num_vars(), m = lp.num_rows();
    if (lp.rhs.size() != m || lp.relations.size() != m)
        throw ValidationError("solve_lp: inconsistent row data");
    for (const auto& r : lp.rows)
        if (r.size() != n) throw ValidationError("solve_lp: row width mismatch");
    numvec lower = lp.lower, upper = lp.upper;
    if (lower.empty()) lower.assign(n, -kInf);
    if (upper.empty()) upper.assign(n, kInf);

    // Standard-form columns: for each variable either a shifted column
    // (finite lower bound) or a +/- pair (free); finite upper bounds become
    // extra <= rows. Then one slack per inequality row.
    struct VarMap {
        size_t pos;          // column of the positive part
        size_t neg = SIZE_MAX;  // column of the negative part when free
        double shift = 0.0;
    };
    std::vector<VarMap> vmap(n);
    size_t ncols = 0;
    size_t extra_rows = 0;
    for (size_t j = 0; j < n; ++j) {
        if (lower[j] == -kInf) {
            vmap[j].pos = ncols++;
            vmap[j].neg = ncols++;
        } else {
            vmap[j].pos = ncols++;
            vmap[j].shift = lower[j];
        }
        if (upper[j] != kInf) ++extra_rows;
    }
    size_t total_rows = m + extra_rows;
    size_t slack_base = ncols;
    size_t nslack = 0;
    for (size_t r = 0; r < m; ++r)
        if (lp.relations[r] != Relation::eq) ++nslack;
    nslack += extra_rows;
    size_t ncols_all = ncols + nslack;

    Tableau t;
    t.rows = total_rows;
    t.cols = ncols_all;
    t.a.assign(total_rows, numvec(ncols_all + total_rows, 0.0));
    t.f.assign(total_rows, 0.0);
    t.basis.assign(total_rows, 0);

    auto fill_var_coefs = [&](numvec& row, size_t j, double coef) {
        row[vmap[j].pos] += coef;
        if (vmap[j].neg != SIZE_MAX) row[vmap[j].neg] -= coef;
    };

    size_t slack = slack_base;
    for (size_t r = 0; r < m; ++r) {
        numvec& row = t.a[r];
        double b = lp.rhs[r];
        for (size_t j = 0; j < n; ++j) {
            fill_var_coefs(row, j, lp.rows[r][j]);
            b -= lp.rows[r][j] * vmap[j].shift;
        }
        if (lp.relations[r] == Relation::ge)
            row[slack] = -1.0, ++slack;
        else if (lp.relations[r] == Relation::le)
            row[slack] = 1.0, ++slack;
        t.f[r] = b;
    }
    size_t er = m;
    for (size_t j = 0; j < n; ++j) {
        if (upper[j] == kInf) continue;
        numvec& row = t.a[er];
        fill_var_coefs(row, j, 1.0);
        row[slack] = 1.0;
        ++slack;
        t.f[er] = upper[j] - vmap[j].shift;
        ++er;
    }

    // Nonnegative right-hand sides, then one artificial per row.
    for (size_t r = 0; r < total_rows; ++r) {
        if (t.f[r] < 0.0) {
            for (double& v : t.a[r]) v = -v;
            t.f[r] = -t.f[r];
        }
        t.a[r][ncols_all + r] = 1.0;
        t.basis[r] = ncols_all + r;
    }

    size_t max_iters = 200 * (total_rows + ncols_all) + 2000;
    size_t bland_after = 10 * (total_rows + ncols_all);

    LpResult res;

    // Phase 1: minimize the artificial sum.
    numvec phase1(ncols_all + total_rows, 0.0);
    for (size_t r = 0; r < total_rows; ++r) phase1[ncols_all + r] = 1.0;
    LpStatus st = run_simplex(t, phase1, ncols_all + total_rows, tol,
                              res.iterations, max_iters, bland_after);
    if (st == LpStatus::iteration_limit) {
        res.status = st;
        return res;
    }
    double art = 0.0;
    for (size_t r = 0; r < total_rows; ++r)
        if (t.basis[r] >= ncols_all) art += t.f[r];
    if (art > 1e-7) {
        res.status = LpStatus::infeasible;
        return res;
    }
    // Drive leftover degenerate artificials out of the basis when possible.
    for (size_t r = 0; r < total_rows; ++r) {
        if (t.basis[r] < ncols_all) continue;
        for (size_t j = 0; j < ncols_all; ++j)
            if (std::abs(t.a[r][j]) > tol) {
                pivot(t, r, j);
                break;
            }
    }

    // Phase 2.
    numvec phase2(ncols_all + total_rows, 0.0);
    for (size_t j = 0; j < n; ++j) {
        phase2[vmap[j].pos] += lp.objective[j];
        if (vmap[j].neg != SIZE_MAX) phase2[vmap[j].neg] -= lp.objective[j];
    }
    st = run_simplex(t, phase2, ncols_all, tol, res.iterations, max_iters,
                     bland_after);
    res.status = st;
    if (st != LpStatus::optimal) return res;

    numvec y(ncols_all, 0.0);
    for (size_t r = 0; r < total_rows; ++r)
        if (t.basis[r] < ncols_all) y[t.basis[r]] = t.f[r];
    res.x.assign(n, 0.0);
    res.objective = 0.0;
    for (size_t j = 0; j < n; ++j) {
        double v = y[vmap[j].pos];
        if (vmap[j].neg != SIZE_MAX) v -= y[vmap[j].neg];
        res.x[j] = v + vmap[j].shift;
        res.objective += lp.objective[j] * res.x[j];
    }
    return res;
}

}  // namespace frl
