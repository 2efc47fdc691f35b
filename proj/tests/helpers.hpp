// Shared builders for the test suites: smoothed random distributions, random
// tabular MDPs, and random factored MDPs with bounded scope tables.
#pragma once

#include <algorithm>
#include <cmath>
#include <random>

#include "frl/common.hpp"
#include "frl/factored.hpp"

namespace frl_test {

using namespace frl;

/// Random point of the simplex, mixed with the uniform distribution so every
/// entry is at least smooth/n (keeps chains irreducible and aperiodic).
inline numvec random_dist(Rng& rng, size_t n, double smooth = 0.1) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    numvec p(n);
    double tot = 0.0;
    for (auto& v : p) {
        v = -std::log(std::max(u(rng), 1e-12));
        tot += v;
    }
    for (auto& v : p) v = (1.0 - smooth) * (v / tot) + smooth / double(n);
    return p;
}

inline TabularMdp random_tabular(Rng& rng, size_t S, size_t A,
                                 double smooth = 0.1) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    TabularMdp m;
    m.num_states = S;
    m.num_actions = A;
    m.transition.assign(S * A * S, 0.0);
    m.reward.assign(S * A, 0.0);
    for (size_t s = 0; s < S; ++s)
        for (size_t a = 0; a < A; ++a) {
            numvec row = random_dist(rng, S, smooth);
            std::copy(row.begin(), row.end(),
                      m.transition.begin() + long((s * A + a) * S));
            m.reward[s * A + a] = u(rng);
        }
    return m;
}

/// Random FMDP: up to mmax state factors with sizes in [2, wmax], one action
/// component with size in [2, amax]. Every transition scope holds the owning
/// factor and the action plus random extra state factors while its table
/// stays within lmax entries. One deterministic reward factor per state
/// factor, maxima summing to at most 1.
inline FactoredMdp random_fmdp(Rng& rng, size_t mmax = 3, size_t wmax = 3,
                               size_t amax = 3, size_t lmax = 24,
                               double smooth = 0.1) {
    std::uniform_int_distribution<size_t> md(1, mmax), wd(2, wmax),
        ad(2, amax);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    FactoredMdp mdp;
    size_t m = md(rng);
    for (size_t i = 0; i < m; ++i)
        mdp.spec.component_sizes.push_back(wd(rng));
    size_t n = m;
    mdp.spec.component_sizes.push_back(ad(rng));
    mdp.spec.action_components = {n};
    size_t asz = mdp.spec.component_sizes[n];
    for (size_t i = 0; i < m; ++i) {
        ScopeSet scope = {i};
        size_t state_tab = mdp.spec.component_sizes[i];
        for (size_t j = 0; j < m; ++j) {
            if (j == i) continue;
            size_t grown = state_tab * mdp.spec.component_sizes[j];
            if (u(rng) < 0.4 && grown * asz <= lmax) {
                scope.push_back(j);
                state_tab = grown;
            }
        }
        scope.push_back(n);
        std::sort(scope.begin(), scope.end());
        size_t tab = state_tab * asz;
        TransitionFactor f;
        f.scope = scope;
        size_t si = mdp.spec.component_sizes[i];
        f.table.assign(tab * si, 0.0);
        for (size_t x = 0; x < tab; ++x) {
            numvec row = random_dist(rng, si, smooth);
            std::copy(row.begin(), row.end(), f.table.begin() + long(x * si));
        }
        mdp.transition.factors.push_back(std::move(f));
    }
    for (size_t i = 0; i < m; ++i) {
        RewardFactor r;
        r.scope = {i, n};
        r.means.assign(mdp.spec.component_sizes[i] * asz, 0.0);
        for (auto& v : r.means) v = u(rng) / double(m);
        mdp.reward.factors.push_back(std::move(r));
    }
    return mdp;
}

}  // namespace frl_test
