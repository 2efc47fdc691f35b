#include "frl/planners.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace frl {

namespace {

/// Expected successor component value E[s'_i | x] of one factor row.
double row_mean(const double* row, size_t size) {
    double e = 0.0;
    for (size_t v = 1; v < size; ++v) e += row[v] * double(v);
    return e;
}

PlanResult alp_plan(const FactoredMdp& mdp) {
    AlpModel model = build_alp(mdp);
    LpResult lp = solve_lp(model.lp);
    if (lp.status != LpStatus::optimal)
        throw ConvergenceError("alp: LP did not reach an optimum", 0.0);

    PlanResult out;
    out.gain = lp.x[0];
    out.iterations = lp.iterations;
    numvec w(lp.x.begin() + 1, lp.x.end());
    out.policy = greedy_from_weights(mdp, w);

    // Approximate bias from the basis, normalized like exact biases.
    size_t S = mdp.num_states();
    ScopeSet states = mdp.spec.state_components();
    out.bias.assign(S, 0.0);
    for (size_t s = 0; s < S; ++s) {
        size_t rem = s;
        double h = 0.0;
        for (size_t i = 0; i < states.size(); ++i) {
            size_t size = mdp.spec.component_sizes[states[i]];
            h += w[i] * double(rem % size);
            rem /= size;
        }
        out.bias[s] = h;
    }
    double h0 = out.bias[0];
    for (double& v : out.bias) v -= h0;
    return out;
}

}  // namespace

PlanResult plan_tabular(const TabularMdp& mdp, const PlannerChoice& choice,
                        const numvec* warm) {
    if (choice.kind != PlannerKind::exact)
        throw ValidationError("plan_tabular: only the exact planner applies");
    SolveReport rep =
        solve_average_reward(mdp, choice.tol, choice.max_iters, 0.5, warm);
    PlanResult out;
    out.policy = std::move(rep.policy);
    out.gain = rep.gain;
    out.bias = std::move(rep.bias);
    out.residual = rep.residual;
    out.iterations = rep.iterations;
    return out;
}

PlanResult plan(const FactoredMdp& mdp, const PlannerChoice& choice,
                const numvec* warm) {
    if (choice.kind == PlannerKind::alp) return alp_plan(mdp);
    return plan_tabular(flatten(mdp), choice, warm);
}

PlanResult plan_extended(const ExtendedFmdp& ext, const PlannerChoice& choice,
                         const numvec* warm) {
    if (choice.kind == PlannerKind::alp) return alp_plan(ext.ext);

    const FactoredMdp& shape = ext.ext;
    size_t S = shape.num_states();
    size_t A = ext.base_actions;
    size_t m = ext.factor_sizes.size();
    const sizvec& sizes = ext.factor_sizes;
    const double tau = 0.5;

    // Scoped indexers of the BASE scopes (target components excluded); the
    // kernel handles targets analytically.
    std::vector<ScopeIndexer> tix(m);
    for (size_t i = 0; i < m; ++i) {
        ScopeSet base_scope = shape.transition.factors[i].scope;
        base_scope.pop_back();  // target component was appended last
        tix[i] = ScopeIndexer(shape.spec, base_scope);
    }
    std::vector<ScopeIndexer> rix;
    for (const auto& f : shape.reward.factors)
        rix.emplace_back(shape.spec, f.scope);

    // R~(s, a): independent of the target.
    numvec rsa(S * A, 0.0);
    for (size_t s = 0; s < S; ++s)
        for (size_t a = 0; a < A; ++a) {
            double r = 0.0;
            for (size_t i = 0; i < shape.reward.factors.size(); ++i)
                r += ext.rtilde[i][rix[i](s, a)];
            rsa[s * A + a] = r;
        }

    numvec v(S, 0.0);
    if (warm && warm->size() == S)
        for (size_t s = 0; s < S; ++s) v[s] = (*warm)[s] / (1.0 - tau);
    numvec tv(S, 0.0), bufs(A * S);
    indvec policy(S, 0);

    // E(t) for all targets t at once: process factors in flat order; after
    // step i, buf holds contractions over s'_1..s'_i with targets t_1..t_i
    // in their place. Each step needs the q-contraction along the axis plus
    // the rank-one g term.
    auto backup_targets = [&](size_t s, size_t a, double* buf) {
        std::copy(v.begin(), v.end(), buf);
        size_t stride = 1;
        for (size_t i = 0; i < m; ++i) {
            size_t size = sizes[i];
            size_t x = tix[i](s, a);
            const double* q = ext.q[i].data() + x * size;
            double gm = ext.g[i][x];
            size_t rest = S / size;
            for (size_t r = 0; r < rest; ++r) {
                size_t low = r % stride, high = r / stride;
                size_t base = low + high * stride * size;
                double contr = 0.0;
                for (size_t vv = 0; vv < size; ++vv)
                    contr += q[vv] * buf[base + vv * stride];
                for (size_t vv = 0; vv < size; ++vv) {
                    double* cell = buf + base + vv * stride;
                    *cell = contr + gm * (*cell);
                }
            }
            stride *= size;
        }
    };

    const size_t eval_sweeps = 20;
    // Materialized rows of the current greedy policy for evaluation sweeps.
    numvec pi_rows(S * S, 0.0);
    numvec pi_rew(S, 0.0);
    std::vector<const double*> frows(m);
    std::vector<numvec> frow_store(m);
    for (size_t i = 0; i < m; ++i) frow_store[i].resize(sizes[i]);

    PlanResult rep;
    double lo = 0.0, hi = 0.0;
    for (size_t it = 0; it < choice.max_iters; ++it) {
        // Optimality sweep over (a, t) jointly. Ties break toward the lowest
        // flat extended action a + A*t, so scan targets in the outer loop.
        for (size_t s = 0; s < S; ++s) {
            for (size_t a = 0; a < A; ++a)
                backup_targets(s, a, bufs.data() + a * S);
            double best = -std::numeric_limits<double>::infinity();
            size_t best_a = 0, best_t = 0;
            for (size_t tgt = 0; tgt < S; ++tgt)
                for (size_t a = 0; a < A; ++a) {
                    double val =
                        rsa[s * A + a] + (1.0 - tau) * bufs[a * S + tgt];
                    if (val > best + 1e-14) {
                        best = val;
                        best_a = a;
                        best_t = tgt;
                    }
                }
            tv[s] = best + tau * v[s];
            policy[s] = long(best_t * A + best_a);
        }
        rep.iterations = it + 1;
        lo = std::numeric_limits<double>::infinity();
        hi = -lo;
        for (size_t s = 0; s < S; ++s) {
            double d = tv[s] - v[s];
            lo = std::min(lo, d);
            hi = std::max(hi, d);
        }
        if (hi - lo <= 2.0 * choice.tol) break;
        if (it + 1 == choice.max_iters)
            throw ConvergenceError("plan_extended: iteration cap hit",
                                   (hi - lo) / 2.0);
        double shift = tv[0];
        for (size_t s = 0; s < S; ++s) v[s] = tv[s] - shift;

        // Evaluation sweeps of the greedy extended policy on materialized
        // rows.
        for (size_t s = 0; s < S; ++s) {
            size_t a = size_t(policy[s]) % A;
            size_t tgt = size_t(policy[s]) / A;
            size_t rem = tgt;
            for (size_t i = 0; i < m; ++i) {
                size_t size = sizes[i];
                size_t x = tix[i](s, a);
                const double* q = ext.q[i].data() + x * size;
                size_t tv_i = rem % size;
                rem /= size;
                for (size_t vv = 0; vv < size; ++vv)
                    frow_store[i][vv] = q[vv];
                frow_store[i][tv_i] += ext.g[i][x];
                frows[i] = frow_store[i].data();
            }
            product_row(frows, sizes, pi_rows.data() + s * S);
            pi_rew[s] = rsa[s * A + a];
        }
        for (size_t k = 0; k < eval_sweeps; ++k) {
            for (size_t s = 0; s < S; ++s) {
                const double* row = pi_rows.data() + s * S;
                double ev = 0.0;
                for (size_t s2 = 0; s2 < S; ++s2) ev += row[s2] * v[s2];
                tv[s] = pi_rew[s] + tau * v[s] + (1.0 - tau) * ev;
            }
            double shift2 = tv[0];
            for (size_t s = 0; s < S; ++s) v[s] = tv[s] - shift2;
        }
    }

    rep.gain = (hi + lo) / 2.0;
    rep.residual = (hi - lo) / 2.0;
    rep.policy = policy;
    rep.bias.resize(S);
    double v0 = v[0];
    for (size_t s = 0; s < S; ++s) rep.bias[s] = (1.0 - tau) * (v[s] - v0);
    return rep;
}

AlpModel build_alp(const FactoredMdp& mdp, size_t max_pairs) {
    size_t S = mdp.num_states(), A = mdp.num_actions();
    if (S * A > max_pairs)
        throw SizeError("build_alp: state-action pairs exceed the cap");
    ScopeSet states = mdp.spec.state_components();
    size_t m = states.size();

    AlpModel model;
    model.num_factors = m;
    model.lp.objective.assign(m + 1, 0.0);
    model.lp.objective[0] = 1.0;
    model.lp.default_bounds();

    std::vector<ScopeIndexer> tix, rix;
    for (const auto& f : mdp.transition.factors)
        tix.emplace_back(mdp.spec, f.scope);
    for (const auto& f : mdp.reward.factors)
        rix.emplace_back(mdp.spec, f.scope);

    numvec coef(m + 1);
    for (size_t s = 0; s < S; ++s) {
        sizvec svals(m);
        size_t rem = s;
        for (size_t i = 0; i < m; ++i) {
            size_t size = mdp.spec.component_sizes[states[i]];
            svals[i] = rem % size;
            rem /= size;
        }
        for (size_t a = 0; a < A; ++a) {
            coef[0] = 1.0;
            for (size_t i = 0; i < m; ++i) {
                const auto& f = mdp.transition.factors[i];
                size_t size = mdp.spec.component_sizes[states[i]];
                const double* row = f.table.data() + tix[i](s, a) * size;
                coef[i + 1] = double(svals[i]) - row_mean(row, size);
            }
            double r = 0.0;
            for (size_t i = 0; i < mdp.reward.factors.size(); ++i)
                r += mdp.reward.factors[i].means[rix[i](s, a)];
            model.lp.add_row(coef, Relation::ge, r);
        }
    }
    return model;
}

indvec greedy_from_weights(const FactoredMdp& mdp, const numvec& weights) {
    size_t S = mdp.num_states(), A = mdp.num_actions();
    ScopeSet states = mdp.spec.state_components();
    size_t m = states.size();
    if (weights.size() != m)
        throw ValidationError("greedy_from_weights: weight count mismatch");

    std::vector<ScopeIndexer> tix, rix;
    for (const auto& f : mdp.transition.factors)
        tix.emplace_back(mdp.spec, f.scope);
    for (const auto& f : mdp.reward.factors)
        rix.emplace_back(mdp.spec, f.scope);

    indvec policy(S, 0);
    for (size_t s = 0; s < S; ++s) {
        double best = -std::numeric_limits<double>::infinity();
        size_t best_a = 0;
        for (size_t a = 0; a < A; ++a) {
            double val = 0.0;
            for (size_t i = 0; i < mdp.reward.factors.size(); ++i)
                val += mdp.reward.factors[i].means[rix[i](s, a)];
            for (size_t i = 0; i < m; ++i) {
                const auto& f = mdp.transition.factors[i];
                size_t size = mdp.spec.component_sizes[states[i]];
                const double* row = f.table.data() + tix[i](s, a) * size;
                val += weights[i] * row_mean(row, size);
            }
            if (val > best + 1e-14) {
                best = val;
                best_a = a;
            }
        }
        policy[s] = long(best_a);
    }
    return policy;
}

}  // namespace frl
