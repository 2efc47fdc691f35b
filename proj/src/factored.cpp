#include "frl/factored.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace frl {

ScopeSet FactorSpec::state_components() const {
    ScopeSet out;
    size_t n = component_sizes.size();
    for (size_t c = 0; c < n; ++c)
        if (!std::binary_search(action_components.begin(),
                                action_components.end(), c))
            out.push_back(c);
    return out;
}

size_t FactorSpec::num_state_factors() const {
    return component_sizes.size() - action_components.size();
}

size_t FactorSpec::num_states() const {
    size_t p = 1;
    for (size_t c : state_components()) p *= component_sizes[c];
    return p;
}

size_t FactorSpec::num_actions() const {
    size_t p = 1;
    for (size_t c : action_components) p *= component_sizes[c];
    return p;
}

sizvec FactorSpec::component_values(size_t state, size_t action) const {
    sizvec vals(component_sizes.size());
    for (size_t c : state_components()) {
        vals[c] = state % component_sizes[c];
        state /= component_sizes[c];
    }
    for (size_t c : action_components) {
        vals[c] = action % component_sizes[c];
        action /= component_sizes[c];
    }
    return vals;
}

size_t FactorSpec::state_index(const sizvec& state_values) const {
    ScopeSet sc = state_components();
    if (state_values.size() != sc.size())
        throw ValidationError("state_index: wrong number of values");
    size_t idx = 0, stride = 1;
    for (size_t k = 0; k < sc.size(); ++k) {
        size_t size = component_sizes[sc[k]];
        if (state_values[k] >= size)
            throw ValidationError("state_index: component value out of range");
        idx += state_values[k] * stride;
        stride *= size;
    }
    return idx;
}

size_t scope_table_size(const FactorSpec& spec, const ScopeSet& scope) {
    size_t p = 1;
    for (size_t c : scope) {
        if (c >= spec.component_sizes.size())
            throw ValidationError("scope component out of range");
        p *= spec.component_sizes[c];
    }
    return p;
}

ScopeIndexer::ScopeIndexer(const FactorSpec& spec, const ScopeSet& scope) {
    ScopeSet states = spec.state_components();
    size_t stride = 1;
    for (size_t c : scope) {
        if (c >= spec.component_sizes.size())
            throw ValidationError("scope component out of range");
        Entry e;
        e.from_action = std::binary_search(spec.action_components.begin(),
                                           spec.action_components.end(), c);
        const ScopeSet& group = e.from_action ? spec.action_components : states;
        e.div = 1;
        for (size_t g : group) {
            if (g == c) break;
            e.div *= spec.component_sizes[g];
        }
        e.size = spec.component_sizes[c];
        e.stride = stride;
        stride *= e.size;
        entries_.push_back(e);
    }
    table_size_ = stride;
}

size_t scope_project(const FactorSpec& spec, const ScopeSet& scope,
                     size_t state, size_t action) {
    return ScopeIndexer(spec, scope)(state, action);
}

sizvec scope_values(const FactorSpec& spec, const ScopeSet& scope, size_t x) {
    sizvec vals(scope.size());
    for (size_t k = 0; k < scope.size(); ++k) {
        size_t size = spec.component_sizes[scope[k]];
        vals[k] = x % size;
        x /= size;
    }
    return vals;
}

size_t FactoredMdp::max_scope_table() const {
    size_t best = 1;
    for (const auto& f : transition.factors)
        best = std::max(best, scope_table_size(spec, f.scope));
    for (const auto& f : reward.factors)
        best = std::max(best, scope_table_size(spec, f.scope));
    return best;
}

size_t FactoredMdp::max_factor_size() const {
    size_t best = 1;
    for (size_t c : spec.state_components())
        best = std::max(best, spec.component_sizes[c]);
    return best;
}

double joint_transition_prob(const FactoredMdp& mdp, size_t state,
                             size_t action, size_t next_state) {
    ScopeSet states = mdp.spec.state_components();
    double p = 1.0;
    for (size_t i = 0; i < mdp.transition.factors.size(); ++i) {
        const auto& f = mdp.transition.factors[i];
        size_t size = mdp.spec.component_sizes[states[i]];
        size_t x = scope_project(mdp.spec, f.scope, state, action);
        size_t v = next_state % size;
        next_state /= size;
        p *= f.table[x * size + v];
    }
    return p;
}

double expected_reward(const FactoredMdp& mdp, size_t state, size_t action) {
    double r = 0.0;
    for (const auto& f : mdp.reward.factors)
        r += f.means[scope_project(mdp.spec, f.scope, state, action)];
    return r;
}

void product_row(const std::vector<const double*>& rows, const sizvec& sizes,
                 double* out) {
    out[0] = 1.0;
    size_t len = 1;
    for (size_t i = 0; i < rows.size(); ++i) {
        size_t size = sizes[i];
        // Highest value first so the v = 0 block can be scaled in place.
        for (size_t v = size; v-- > 0;) {
            double p = rows[i][v];
            double* dst = out + v * len;
            for (size_t k = 0; k < len; ++k) dst[k] = out[k] * p;
        }
        len *= size;
    }
}

TabularMdp flatten(const FactoredMdp& mdp, size_t max_pairs) {
    size_t S = mdp.num_states(), A = mdp.num_actions();
    if (S * A > max_pairs)
        throw SizeError("flatten: state-action pairs exceed the cap");
    TabularMdp out;
    out.num_states = S;
    out.num_actions = A;
    out.transition.assign(S * A * S, 0.0);
    out.reward.assign(S * A, 0.0);

    size_t m = mdp.transition.factors.size();
    ScopeSet states = mdp.spec.state_components();
    sizvec sizes(m);
    for (size_t i = 0; i < m; ++i) sizes[i] = mdp.spec.component_sizes[states[i]];

    std::vector<ScopeIndexer> tix, rix;
    for (const auto& f : mdp.transition.factors)
        tix.emplace_back(mdp.spec, f.scope);
    for (const auto& f : mdp.reward.factors)
        rix.emplace_back(mdp.spec, f.scope);

    std::vector<const double*> rows(m);
    for (size_t s = 0; s < S; ++s) {
        for (size_t a = 0; a < A; ++a) {
            for (size_t i = 0; i < m; ++i) {
                const auto& f = mdp.transition.factors[i];
                rows[i] = f.table.data() + tix[i](s, a) * sizes[i];
            }
            product_row(rows, sizes,
                        out.transition.data() + (s * A + a) * S);
            double r = 0.0;
            for (size_t i = 0; i < mdp.reward.factors.size(); ++i)
                r += mdp.reward.factors[i].means[rix[i](s, a)];
            out.reward[s * A + a] = r;
        }
    }
    return out;
}

namespace {

/// Largest value a reward factor can realize; used by the total-reward check.
double max_realization(const RewardFactor& f) {
    double max_mean = 0.0;
    for (double v : f.means) max_mean = std::max(max_mean, v);
    switch (f.kind) {
        case RewardKind::deterministic:
            return max_mean;
        case RewardKind::bernoulli:
            return max_mean > 0.0 ? 1.0 : 0.0;
        case RewardKind::truncated_gaussian:
            return f.sigma > 0.0 ? 1.0 : max_mean;
    }
    return max_mean;
}

}  // namespace

ValidationReport validate(const FactoredMdp& mdp) {
    ValidationReport rep;
    auto bad = [&rep](const std::string& msg) { rep.problems.push_back(msg); };

    const auto& spec = mdp.spec;
    size_t n = spec.component_sizes.size();
    if (n == 0) bad("no components");
    for (size_t c = 0; c < n; ++c)
        if (spec.component_sizes[c] == 0)
            bad("component " + std::to_string(c + 1) + " has size 0");
    if (!std::is_sorted(spec.action_components.begin(),
                        spec.action_components.end()) ||
        std::adjacent_find(spec.action_components.begin(),
                           spec.action_components.end()) !=
            spec.action_components.end())
        bad("action components not sorted or not distinct");
    for (size_t c : spec.action_components)
        if (c >= n) bad("action component index out of range");
    if (spec.action_components.size() >= n)
        bad("no state components");
    if (!rep.ok()) return rep;

    ScopeSet states = spec.state_components();
    size_t m = states.size();
    if (mdp.transition.factors.size() != m)
        bad("expected one transition factor per state component");

    auto check_scope = [&](const ScopeSet& scope, const std::string& who) {
        if (!std::is_sorted(scope.begin(), scope.end()) ||
            std::adjacent_find(scope.begin(), scope.end()) != scope.end())
            bad(who + ": scope not sorted or not distinct");
        for (size_t c : scope)
            if (c >= n) bad(who + ": scope component out of range");
    };

    for (size_t i = 0; i < mdp.transition.factors.size() && i < m; ++i) {
        const auto& f = mdp.transition.factors[i];
        std::string who = "transition factor " + std::to_string(i + 1);
        check_scope(f.scope, who);
        for (size_t c : f.scope)
            if (c >= n) return rep;
        size_t tab = scope_table_size(spec, f.scope);
        size_t size = spec.component_sizes[states[i]];
        if (f.table.size() != tab * size) {
            bad(who + ": table has " + std::to_string(f.table.size()) +
                " entries, expected " + std::to_string(tab * size));
            continue;
        }
        for (size_t x = 0; x < tab; ++x) {
            double sum = 0.0;
            for (size_t v = 0; v < size; ++v) {
                double p = f.table[x * size + v];
                if (p < -1e-12)
                    bad(who + ": negative probability at x=" +
                        std::to_string(x));
                sum += p;
            }
            if (std::abs(sum - 1.0) > 1e-9)
                bad(who + ": row x=" + std::to_string(x) +
                    " sums to " + std::to_string(sum));
        }
    }

    double total_max = 0.0;
    for (size_t i = 0; i < mdp.reward.factors.size(); ++i) {
        const auto& f = mdp.reward.factors[i];
        std::string who = "reward factor " + std::to_string(i + 1);
        check_scope(f.scope, who);
        for (size_t c : f.scope)
            if (c >= n) return rep;
        size_t tab = scope_table_size(spec, f.scope);
        if (f.means.size() != tab) {
            bad(who + ": table has " + std::to_string(f.means.size()) +
                " entries, expected " + std::to_string(tab));
            continue;
        }
        for (double v : f.means)
            if (v < -1e-12 || v > 1.0 + 1e-12) {
                bad(who + ": mean outside [0, 1]");
                break;
            }
        if (f.kind == RewardKind::truncated_gaussian && f.sigma < 0.0)
            bad(who + ": negative sigma");
        total_max += max_realization(f);
    }
    if (total_max > 1.0 + 1e-9)
        bad("total reward can exceed 1 (per-factor maxima sum to " +
            std::to_string(total_max) + ")");
    return rep;
}

StepResult sample_step(const FactoredMdp& mdp, size_t state, size_t action,
                       Rng& rng) {
    ScopeSet states = mdp.spec.state_components();
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    StepResult out;
    size_t next = 0, stride = 1;
    for (size_t i = 0; i < mdp.transition.factors.size(); ++i) {
        const auto& f = mdp.transition.factors[i];
        size_t size = mdp.spec.component_sizes[states[i]];
        size_t x = scope_project(mdp.spec, f.scope, state, action);
        const double* row = f.table.data() + x * size;
        double u = unif(rng), acc = 0.0;
        size_t v = size - 1;
        for (size_t k = 0; k < size; ++k) {
            acc += row[k];
            if (u < acc) {
                v = k;
                break;
            }
        }
        next += v * stride;
        stride *= size;
    }
    out.next_state = next;

    out.factor_rewards.reserve(mdp.reward.factors.size());
    double total = 0.0;
    for (const auto& f : mdp.reward.factors) {
        size_t x = scope_project(mdp.spec, f.scope, state, action);
        double mean = f.means[x], r = mean;
        switch (f.kind) {
            case RewardKind::deterministic:
                break;
            case RewardKind::bernoulli:
                r = unif(rng) < mean ? 1.0 : 0.0;
                break;
            case RewardKind::truncated_gaussian: {
                std::normal_distribution<double> norm(mean, f.sigma);
                r = norm(rng);
                for (int att = 0; att < 16 && (r < 0.0 || r > 1.0); ++att)
                    r = norm(rng);
                r = std::clamp(r, 0.0, 1.0);
                break;
            }
        }
        out.factor_rewards.push_back(r);
        total += r;
    }
    out.reward = total;
    return out;
}

}  // namespace frl
