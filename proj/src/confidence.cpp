#include "frl/confidence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace frl {

VisitStatistics make_statistics(const FactoredMdp& mdp) {
    VisitStatistics st;
    ScopeSet states = mdp.spec.state_components();
    for (size_t i = 0; i < mdp.transition.factors.size(); ++i) {
        size_t tab = scope_table_size(mdp.spec, mdp.transition.factors[i].scope);
        size_t size = mdp.spec.component_sizes[states[i]];
        st.trans_visits.emplace_back(tab, 0);
        st.trans_counts.emplace_back(tab * size, 0);
    }
    for (const auto& f : mdp.reward.factors) {
        size_t tab = scope_table_size(mdp.spec, f.scope);
        st.reward_visits.emplace_back(tab, 0);
        st.reward_sums.emplace_back(tab, 0.0);
    }
    return st;
}

void record_step(VisitStatistics& stats, const FactoredMdp& mdp, size_t state,
                 size_t action, size_t next_state,
                 const numvec& factor_rewards) {
    ScopeSet states = mdp.spec.state_components();
    size_t rem = next_state;
    for (size_t i = 0; i < mdp.transition.factors.size(); ++i) {
        size_t size = mdp.spec.component_sizes[states[i]];
        size_t x = scope_project(mdp.spec, mdp.transition.factors[i].scope,
                                 state, action);
        size_t v = rem % size;
        rem /= size;
        ++stats.trans_visits[i][x];
        ++stats.trans_counts[i][x * size + v];
    }
    for (size_t i = 0; i < mdp.reward.factors.size(); ++i) {
        size_t x = scope_project(mdp.spec, mdp.reward.factors[i].scope, state,
                                 action);
        ++stats.reward_visits[i][x];
        stats.reward_sums[i][x] += factor_rewards[i];
    }
    ++stats.t;
}

EmpiricalModel empirical_model(const VisitStatistics& stats,
                               const FactoredMdp& mdp) {
    EmpiricalModel emp;
    ScopeSet states = mdp.spec.state_components();
    for (size_t i = 0; i < stats.trans_visits.size(); ++i) {
        size_t tab = stats.trans_visits[i].size();
        size_t size = mdp.spec.component_sizes[states[i]];
        numvec rows(tab * size);
        for (size_t x = 0; x < tab; ++x) {
            uint64_t n = stats.trans_visits[i][x];
            if (n == 0) {
                for (size_t v = 0; v < size; ++v)
                    rows[x * size + v] = 1.0 / double(size);
            } else {
                for (size_t v = 0; v < size; ++v)
                    rows[x * size + v] =
                        double(stats.trans_counts[i][x * size + v]) / double(n);
            }
        }
        emp.phat.push_back(std::move(rows));
    }
    for (size_t i = 0; i < stats.reward_visits.size(); ++i) {
        size_t tab = stats.reward_visits[i].size();
        numvec means(tab, 0.0);
        for (size_t x = 0; x < tab; ++x) {
            uint64_t n = stats.reward_visits[i][x];
            if (n > 0) means[x] = stats.reward_sums[i][x] / double(n);
        }
        emp.rhat.push_back(std::move(means));
    }
    return emp;
}

WidthTables width_tables(const VisitStatistics& stats, const FactoredMdp& mdp,
                         const EmpiricalModel& emp, uint64_t t_k, double rho,
                         double c_p, double c_r) {
    WidthTables w;
    ScopeSet states = mdp.spec.state_components();
    size_t m = stats.trans_visits.size();
    size_t l = stats.reward_visits.size();
    for (size_t i = 0; i < m; ++i) {
        size_t tab = stats.trans_visits[i].size();
        size_t size = mdp.spec.component_sizes[states[i]];
        numvec wp(tab * size), wp_raw(tab * size), l1(tab);
        double logc = std::log(6.0 * double(m) * double(size) * double(tab) *
                               double(t_k) / rho);
        logc = std::max(logc, 0.0);
        for (size_t x = 0; x < tab; ++x) {
            double n = double(std::max<uint64_t>(stats.trans_visits[i][x], 1));
            for (size_t v = 0; v < size; ++v) {
                double p = emp.phat[i][x * size + v];
                double raw = std::sqrt(c_p * p * logc / n) + c_p * logc / n;
                wp_raw[x * size + v] = raw;
                wp[x * size + v] = std::min(raw, p);
            }
            l1[x] = 2.0 * std::sqrt(c_p * double(size) * logc / n);
        }
        w.wp.push_back(std::move(wp));
        w.wp_raw.push_back(std::move(wp_raw));
        w.l1.push_back(std::move(l1));
    }
    for (size_t i = 0; i < l; ++i) {
        size_t tab = stats.reward_visits[i].size();
        numvec wr(tab);
        double logc =
            std::log(6.0 * double(l) * double(tab) * double(t_k) / rho);
        logc = std::max(logc, 0.0);
        for (size_t x = 0; x < tab; ++x) {
            double n = double(std::max<uint64_t>(stats.reward_visits[i][x], 1));
            wr[x] = std::sqrt(c_r * logc / n);
        }
        w.wr.push_back(std::move(wr));
    }
    return w;
}

MembershipReport in_confidence_set(const FactoredMdp& truth,
                                   const EmpiricalModel& emp,
                                   const WidthTables& widths) {
    MembershipReport rep;
    rep.min_slack = std::numeric_limits<double>::infinity();
    ScopeSet states = truth.spec.state_components();
    for (size_t i = 0; i < truth.transition.factors.size(); ++i) {
        const auto& f = truth.transition.factors[i];
        size_t size = truth.spec.component_sizes[states[i]];
        size_t tab = scope_table_size(truth.spec, f.scope);
        for (size_t x = 0; x < tab; ++x)
            for (size_t v = 0; v < size; ++v) {
                double dev = std::abs(f.table[x * size + v] -
                                      emp.phat[i][x * size + v]);
                double slack = widths.wp_raw[i][x * size + v] - dev;
                rep.min_slack = std::min(rep.min_slack, slack);
                if (slack < 0.0) {
                    rep.member = false;
                    rep.violations.push_back({true, i, x, v, -slack});
                }
            }
    }
    for (size_t i = 0; i < truth.reward.factors.size(); ++i) {
        const auto& f = truth.reward.factors[i];
        size_t tab = scope_table_size(truth.spec, f.scope);
        for (size_t x = 0; x < tab; ++x) {
            double dev = std::abs(f.means[x] - emp.rhat[i][x]);
            double slack = widths.wr[i][x] - dev;
            rep.min_slack = std::min(rep.min_slack, slack);
            if (slack < 0.0) {
                rep.member = false;
                rep.violations.push_back({false, i, x, 0, -slack});
            }
        }
    }
    return rep;
}

uint64_t projected_transition_count(const VisitStatistics& stats,
                                    const FactoredMdp& mdp,
                                    size_t reward_factor, size_t x) {
    if (reward_factor >= stats.trans_visits.size())
        return stats.reward_visits[reward_factor][x];
    const ScopeSet& rscope = mdp.reward.factors[reward_factor].scope;
    const ScopeSet& pscope = mdp.transition.factors[reward_factor].scope;
    sizvec rvals = scope_values(mdp.spec, rscope, x);

    uint64_t total = 0;
    size_t tab = stats.trans_visits[reward_factor].size();
    for (size_t px = 0; px < tab; ++px) {
        sizvec pvals = scope_values(mdp.spec, pscope, px);
        bool consistent = true;
        for (size_t rk = 0; rk < rscope.size() && consistent; ++rk) {
            auto it = std::find(pscope.begin(), pscope.end(), rscope[rk]);
            if (it != pscope.end() &&
                pvals[size_t(it - pscope.begin())] != rvals[rk])
                consistent = false;
        }
        if (consistent) total += stats.trans_visits[reward_factor][px];
    }
    return total;
}

}  // namespace frl
