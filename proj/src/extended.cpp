#include "frl/extended.hpp"

#include <algorithm>
#include <cmath>

namespace frl {

numvec extreme_dynamic(const numvec& phat, const numvec& width, size_t target) {
    if (phat.size() != width.size())
        throw ValidationError("extreme_dynamic: size mismatch");
    if (target >= phat.size())
        throw ValidationError("extreme_dynamic: target out of range");
    double mass = 0.0;
    for (size_t v = 0; v < phat.size(); ++v) {
        if (width[v] < -1e-12 || width[v] > phat[v] + 1e-12)
            throw ValidationError(
                "extreme_dynamic: width outside [0, phat] at entry " +
                std::to_string(v));
        mass += width[v];
    }
    numvec out(phat.size());
    for (size_t v = 0; v < phat.size(); ++v) out[v] = phat[v] - width[v];
    out[target] += mass;
    return out;
}

ExtendedFmdp build_extended(const FactoredMdp& shape, const EmpiricalModel& emp,
                            const WidthTables& widths) {
    ExtendedFmdp ext;
    ext.base_actions = shape.num_actions();

    const FactorSpec& spec = shape.spec;
    ScopeSet states = spec.state_components();
    size_t n = spec.num_components(), m = states.size();
    for (size_t i = 0; i < m; ++i)
        ext.factor_sizes.push_back(spec.component_sizes[states[i]]);

    // Component layout: base components, then one target component per
    // state factor, all appended to the action.
    FactorSpec espec;
    espec.component_sizes = spec.component_sizes;
    espec.action_components = spec.action_components;
    for (size_t i = 0; i < m; ++i) {
        espec.component_sizes.push_back(ext.factor_sizes[i]);
        espec.action_components.push_back(n + i);
    }

    FactoredMdp emdp;
    emdp.spec = espec;
    for (size_t i = 0; i < m; ++i) {
        const auto& base = shape.transition.factors[i];
        size_t size = ext.factor_sizes[i];
        size_t tab = scope_table_size(spec, base.scope);

        numvec q(tab * size), g(tab, 0.0);
        for (size_t x = 0; x < tab; ++x) {
            double mass = 0.0;
            for (size_t v = 0; v < size; ++v) {
                double p = emp.phat[i][x * size + v];
                double w = widths.wp[i][x * size + v];
                if (w < -1e-12 || w > p + 1e-12)
                    throw ValidationError(
                        "build_extended: width exceeds empirical probability");
                q[x * size + v] = std::max(p - w, 0.0);
                mass += w;
            }
            g[x] = mass;
        }

        TransitionFactor ef;
        ef.scope = base.scope;
        ef.scope.push_back(n + i);
        // Scoped index is x + tab * target; each row is the extreme dynamic
        // toward the target value.
        ef.table.assign(tab * size * size, 0.0);
        for (size_t tgt = 0; tgt < size; ++tgt)
            for (size_t x = 0; x < tab; ++x) {
                double* row = ef.table.data() + (x + tab * tgt) * size;
                for (size_t v = 0; v < size; ++v) row[v] = q[x * size + v];
                row[tgt] += g[x];
            }
        emdp.transition.factors.push_back(std::move(ef));
        ext.q.push_back(std::move(q));
        ext.g.push_back(std::move(g));
    }

    for (size_t i = 0; i < shape.reward.factors.size(); ++i) {
        const auto& base = shape.reward.factors[i];
        size_t tab = scope_table_size(spec, base.scope);
        RewardFactor rf;
        rf.scope = base.scope;
        rf.kind = RewardKind::deterministic;
        rf.means.resize(tab);
        for (size_t x = 0; x < tab; ++x)
            rf.means[x] = emp.rhat[i][x] + widths.wr[i][x];
        emdp.reward.factors.push_back(rf);
        ext.rtilde.push_back(rf.means);
    }

    ext.ext = std::move(emdp);
    return ext;
}

indvec map_policy(const ExtendedFmdp& ext, const indvec& extended_policy) {
    indvec out(extended_policy.size());
    for (size_t s = 0; s < extended_policy.size(); ++s)
        out[s] = long(size_t(extended_policy[s]) % ext.base_actions);
    return out;
}

size_t extended_action(const ExtendedFmdp& ext, size_t action, size_t target) {
    return action + ext.base_actions * target;
}

bool optimism_predicate(const FactoredMdp& truth, const ExtendedFmdp& ext,
                        const numvec& h, const indvec& policy, double slack) {
    size_t S = truth.num_states();
    if (h.size() != S || policy.size() != S)
        throw ValidationError("optimism_predicate: size mismatch");
    size_t target =
        size_t(std::max_element(h.begin(), h.end()) - h.begin());

    ScopeSet states = truth.spec.state_components();
    size_t m = states.size();
    sizvec sizes = ext.factor_sizes;
    sizvec tvals(m);
    {
        size_t rem = target;
        for (size_t i = 0; i < m; ++i) {
            tvals[i] = rem % sizes[i];
            rem /= sizes[i];
        }
    }

    numvec true_row(S), ext_row(S);
    std::vector<const double*> rows(m);
    std::vector<numvec> ext_factor_rows(m);
    for (size_t s = 0; s < S; ++s) {
        size_t a = size_t(policy[s]);
        for (size_t i = 0; i < m; ++i) {
            const auto& f = truth.transition.factors[i];
            rows[i] =
                f.table.data() + scope_project(truth.spec, f.scope, s, a) * sizes[i];
        }
        product_row(rows, sizes, true_row.data());
        for (size_t i = 0; i < m; ++i) {
            const auto& f = truth.transition.factors[i];
            size_t x = scope_project(truth.spec, f.scope, s, a);
            ext_factor_rows[i].assign(sizes[i], 0.0);
            for (size_t v = 0; v < sizes[i]; ++v)
                ext_factor_rows[i][v] = ext.q[i][x * sizes[i] + v];
            ext_factor_rows[i][tvals[i]] += ext.g[i][x];
            rows[i] = ext_factor_rows[i].data();
        }
        product_row(rows, sizes, ext_row.data());
        double dot = 0.0;
        for (size_t s2 = 0; s2 < S; ++s2)
            dot += (ext_row[s2] - true_row[s2]) * h[s2];
        if (dot < -slack) return false;
    }
    return true;
}

bool extended_diameter_predicate(const FactoredMdp& truth,
                                 const ExtendedFmdp& ext, double slack) {
    DiameterResult dt = diameter(flatten(truth));
    if (dt.infinite) return true;
    DiameterResult de = diameter(flatten(ext.ext));
    if (de.infinite) return false;
    return de.diameter <= dt.diameter + slack;
}

DeviationBound factored_deviation_bound(const std::vector<numvec>& p,
                                        const std::vector<numvec>& ptilde,
                                        const numvec& h, const sizvec& sizes) {
    size_t m = sizes.size();
    if (p.size() != m || ptilde.size() != m)
        throw ValidationError("factored_deviation_bound: factor count mismatch");
    size_t S = 1;
    for (size_t z : sizes) S *= z;
    if (h.size() != S)
        throw ValidationError("factored_deviation_bound: h size mismatch");

    numvec prow(S), qrow(S);
    std::vector<const double*> rows(m);
    for (size_t i = 0; i < m; ++i) rows[i] = p[i].data();
    product_row(rows, sizes, prow.data());
    for (size_t i = 0; i < m; ++i) rows[i] = ptilde[i].data();
    product_row(rows, sizes, qrow.data());

    DeviationBound out;
    for (size_t s = 0; s < S; ++s) out.lhs += (qrow[s] - prow[s]) * h[s];

    SpanProfile prof = factored_span(h, sizes);
    for (size_t i = 0; i < m; ++i) {
        double l1 = 0.0;
        for (size_t v = 0; v < sizes[i]; ++v)
            l1 += std::abs(p[i][v] - ptilde[i][v]);
        out.rhs += l1 * prof.factor_spans[i];
    }
    return out;
}

}  // namespace frl
