#include "frl/envs.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "frl/common.hpp"

namespace frl {

std::vector<ScopeSet> sysadmin_neighbors(Topology topology, size_t size) {
    std::vector<ScopeSet> nbrs(size);
    if (topology == Topology::circle) {
        if (size < 3)
            throw ValidationError("circle topology needs at least 3 machines");
        for (size_t i = 0; i < size; ++i) nbrs[i] = {(i + size - 1) % size};
    } else {
        if (size < 4)
            throw ValidationError(
                "three-leg topology needs at least 4 machines");
        size_t rest = size - 1, base = rest / 3, extra = rest % 3;
        size_t node = 1;
        for (size_t leg = 0; leg < 3; ++leg) {
            size_t len = base + (leg < extra ? 1 : 0);
            size_t prev = 0;
            for (size_t k = 0; k < len; ++k) {
                nbrs[node] = {prev};
                prev = node++;
            }
        }
    }
    return nbrs;
}

FactoredMdp build_sysadmin(const SysadminSpec& spec) {
    const size_t m = spec.size;
    auto is_prob = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!is_prob(spec.alpha1) || !is_prob(spec.alpha2) ||
        !is_prob(spec.reboot_success))
        throw ValidationError("sysadmin probabilities must lie in [0, 1]");
    auto nbrs = sysadmin_neighbors(spec.topology, m);

    // Frozen instance noise. The draw order is part of the construction: for
    // each machine in index order, the working-state then failed-state
    // epsilon, then one eta pair per in-neighbor in list order.
    Rng rng = make_rng(spec.noise_seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    numvec eps_work(m), eps_fail(m);
    std::vector<numvec> eta_work(m), eta_fail(m);
    for (size_t i = 0; i < m; ++i) {
        eps_work[i] = std::abs(normal(rng));
        eps_fail[i] = std::abs(normal(rng));
        for (size_t k = 0; k < nbrs[i].size(); ++k) {
            eta_work[i].push_back(std::abs(normal(rng)));
            eta_fail[i].push_back(std::abs(normal(rng)));
        }
    }

    FactoredMdp mdp;
    mdp.spec.component_sizes.assign(m, 2);
    mdp.spec.component_sizes.push_back(m + 1);
    mdp.spec.action_components = {m};

    for (size_t i = 0; i < m; ++i) {
        ScopeSet deps = nbrs[i];
        deps.push_back(i);
        std::sort(deps.begin(), deps.end());

        TransitionFactor f;
        f.scope = deps;
        f.scope.push_back(m);
        size_t own =
            size_t(std::find(deps.begin(), deps.end(), i) - deps.begin());
        sizvec nbr_pos(nbrs[i].size());
        for (size_t k = 0; k < nbrs[i].size(); ++k)
            nbr_pos[k] = size_t(
                std::find(deps.begin(), deps.end(), nbrs[i][k]) - deps.begin());

        size_t tab = scope_table_size(mdp.spec, f.scope);
        f.table.assign(tab * 2, 0.0);
        for (size_t x = 0; x < tab; ++x) {
            sizvec vals = scope_values(mdp.spec, f.scope, x);
            size_t action = vals.back();
            double fail;
            if (action == i) {
                fail = 1.0 - spec.reboot_success;
            } else {
                double down_sum = 0.0;
                const numvec& eta = vals[own] == 1 ? eta_work[i] : eta_fail[i];
                for (size_t k = 0; k < nbrs[i].size(); ++k)
                    if (vals[nbr_pos[k]] == 0)
                        down_sum += spec.alpha2 * eta[k];
                if (vals[own] == 1)
                    fail = std::min(1.0, spec.alpha1 * eps_work[i] + down_sum);
                else
                    fail = std::min(
                        1.0, std::max(eps_fail[i], 0.5) + down_sum);
            }
            f.table[x * 2 + 0] = fail;
            f.table[x * 2 + 1] = 1.0 - fail;
        }
        mdp.transition.factors.push_back(std::move(f));

        RewardFactor r;
        r.scope = {i};
        r.means = {0.0, 1.0 / double(m)};
        mdp.reward.factors.push_back(std::move(r));
    }
    return mdp;
}

FactoredMdp cartesian_product(const std::vector<TabularMdp>& components,
                              bool renormalize) {
    if (components.empty())
        throw ValidationError("product of zero component MDPs");
    const size_t n = components.size();

    FactoredMdp mdp;
    for (const auto& c : components) {
        if (c.num_states == 0 || c.num_actions == 0)
            throw ValidationError("component MDP has no states or actions");
        mdp.spec.component_sizes.push_back(c.num_states);
    }
    for (const auto& c : components)
        mdp.spec.component_sizes.push_back(c.num_actions);
    for (size_t i = 0; i < n; ++i)
        mdp.spec.action_components.push_back(n + i);

    const size_t cap = size_t(1) << 20;
    if (mdp.spec.num_states() > cap || mdp.spec.num_actions() > cap)
        throw SizeError("product state or action space exceeds 2^20");

    const double scale = renormalize ? 1.0 / double(n) : 1.0;
    for (size_t i = 0; i < n; ++i) {
        const TabularMdp& c = components[i];
        const size_t S = c.num_states, A = c.num_actions;

        TransitionFactor f;
        f.scope = {i, n + i};
        f.table.assign(S * A * S, 0.0);
        RewardFactor r;
        r.scope = {i, n + i};
        r.means.assign(S * A, 0.0);
        for (size_t a = 0; a < A; ++a)
            for (size_t s = 0; s < S; ++s) {
                size_t x = s + S * a;
                for (size_t s2 = 0; s2 < S; ++s2)
                    f.table[x * S + s2] = c.prob(s, a, s2);
                r.means[x] = scale * c.rew(s, a);
            }
        mdp.transition.factors.push_back(std::move(f));
        mdp.reward.factors.push_back(std::move(r));
    }
    return mdp;
}

TabularMdp cycle_walk(size_t cycle_len) {
    if (cycle_len < 4 || cycle_len % 2 != 0)
        throw ValidationError("cycle length must be even and at least 4");
    TabularMdp c;
    c.num_states = cycle_len;
    c.num_actions = 2;
    c.transition.assign(cycle_len * 2 * cycle_len, 0.0);
    c.reward.assign(cycle_len * 2, 0.0);
    for (size_t s = 0; s < cycle_len; ++s) {
        size_t fwd = (s + 1) % cycle_len;
        size_t bwd = (s + cycle_len - 1) % cycle_len;
        c.transition[(s * 2 + 0) * cycle_len + fwd] = 1.0;
        c.transition[(s * 2 + 1) * cycle_len + bwd] = 1.0;
    }
    c.reward[0 * 2 + 0] = 1.0;
    c.reward[0 * 2 + 1] = 1.0;
    return c;
}

FactoredMdp build_product_circle(size_t copies, size_t cycle_len) {
    if (copies < 1) throw ValidationError("need at least one cycle copy");
    std::vector<TabularMdp> comps(copies, cycle_walk(cycle_len));
    return cartesian_product(comps, true);
}

TabularMdp two_state_chain(double delta, double eps, size_t actions) {
    if (!(delta > 0.0) || eps < 0.0 || delta + eps > 1.0)
        throw ValidationError(
            "switching chain needs 0 < delta, 0 <= eps, delta + eps <= 1");
    if (actions < 1) throw ValidationError("need at least one action");
    TabularMdp c;
    c.num_states = 2;
    c.num_actions = actions;
    c.transition.assign(2 * actions * 2, 0.0);
    c.reward.assign(2 * actions, 0.0);
    for (size_t a = 0; a < actions; ++a) {
        double up = delta + (a == 0 ? eps : 0.0);
        c.transition[(0 * actions + a) * 2 + 1] = up;
        c.transition[(0 * actions + a) * 2 + 0] = 1.0 - up;
        c.transition[(1 * actions + a) * 2 + 0] = delta;
        c.transition[(1 * actions + a) * 2 + 1] = 1.0 - delta;
        c.reward[1 * actions + a] = 1.0;
    }
    return c;
}

FactoredMdp build_chain_product(const ChainSpec& spec) {
    if (spec.copies < 1) throw ValidationError("need at least one chain copy");
    std::vector<TabularMdp> comps(
        spec.copies, two_state_chain(spec.delta, spec.eps, spec.actions));
    return cartesian_product(comps, true);
}

}  // namespace frl
