// Core types for factored MDPs: component specs, scopes, factored transition
// and reward structure, the flat tabular form, and the operations connecting
// them (scope projection, joint probabilities, flattening, validation and
// trajectory sampling).
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "frl/common.hpp"

namespace frl {

/// Sorted duplicate-free set of component indices (0-based internally;
/// serialized 1-based).
using ScopeSet = std::vector<size_t>;

/// Component layout of a factored MDP: every component has a size, and a
/// subset of components forms the action. State components are the rest.
/// Flat indices are mixed-radix with the first (lowest-index) component least
/// significant.
struct FactorSpec {
    sizvec component_sizes;
    ScopeSet action_components;

    ScopeSet state_components() const;
    size_t num_components() const { return component_sizes.size(); }
    size_t num_state_factors() const;
    size_t num_states() const;
    size_t num_actions() const;

    /// Component values of a flat (state, action) pair.
    sizvec component_values(size_t state, size_t action) const;
    /// Flat state index from per-state-component values.
    size_t state_index(const sizvec& state_values) const;
};

/// Number of joint values of the scoped components.
size_t scope_table_size(const FactorSpec& spec, const ScopeSet& scope);

/// Mixed-radix index of x[Z] for a flat (state, action) pair; the first
/// scope component is least significant.
size_t scope_project(const FactorSpec& spec, const ScopeSet& scope,
                     size_t state, size_t action);

/// Component values of a scoped index, in scope order.
sizvec scope_values(const FactorSpec& spec, const ScopeSet& scope, size_t x);

/// Precomputed projection onto one scope; used on hot paths instead of
/// scope_project.
class ScopeIndexer {
public:
    ScopeIndexer() = default;
    ScopeIndexer(const FactorSpec& spec, const ScopeSet& scope);
    size_t operator()(size_t state, size_t action) const {
        size_t x = 0;
        for (const auto& e : entries_)
            x += ((e.from_action ? action : state) / e.div) % e.size * e.stride;
        return x;
    }
    size_t table_size() const { return table_size_; }

private:
    struct Entry {
        bool from_action;
        size_t div, size, stride;
    };
    std::vector<Entry> entries_;
    size_t table_size_ = 1;
};

/// One transition factor: the distribution of state component `factor` as a
/// function of x[scope]. Rows are stored contiguously: table[x * size + s].
struct TransitionFactor {
    ScopeSet scope;
    numvec table;
};

/// DBN-structured transition model, one factor per state component.
struct FactoredTransition {
    std::vector<TransitionFactor> factors;
};

enum class RewardKind { deterministic, bernoulli, truncated_gaussian };

/// One reward factor: mean reward as a function of x[scope], with a noise
/// model for sampling.
struct RewardFactor {
    ScopeSet scope;
    numvec means;
    RewardKind kind = RewardKind::deterministic;
    double sigma = 0.0;
};

struct FactoredReward {
    std::vector<RewardFactor> factors;
};

/// Factored MDP: component layout plus factored transitions and rewards.
struct FactoredMdp {
    FactorSpec spec;
    FactoredTransition transition;
    FactoredReward reward;

    size_t num_states() const { return spec.num_states(); }
    size_t num_actions() const { return spec.num_actions(); }
    /// Largest scoped table over all transition and reward factors (the
    /// quantity the schedule parameter L bounds).
    size_t max_scope_table() const;
    /// Largest state component size.
    size_t max_factor_size() const;
};

/// Flat tabular MDP. transition[(s * A + a) * S + s'], reward[s * A + a].
struct TabularMdp {
    size_t num_states = 0;
    size_t num_actions = 0;
    numvec transition;
    numvec reward;

    double prob(size_t s, size_t a, size_t s2) const {
        return transition[(s * num_actions + a) * num_states + s2];
    }
    const double* row(size_t s, size_t a) const {
        return transition.data() + (s * num_actions + a) * num_states;
    }
    double rew(size_t s, size_t a) const { return reward[s * num_actions + a]; }
};

/// Joint probability of a flat successor state: the product of factor rows.
double joint_transition_prob(const FactoredMdp& mdp, size_t state,
                             size_t action, size_t next_state);

/// Expected total reward of a flat (state, action) pair.
double expected_reward(const FactoredMdp& mdp, size_t state, size_t action);

/// Dense tabular form. Throws SizeError when S * A exceeds max_pairs.
TabularMdp flatten(const FactoredMdp& mdp, size_t max_pairs = size_t(1) << 20);

/// Every invariant violation found, in a human-readable report.
struct ValidationReport {
    std::vector<std::string> problems;
    bool ok() const { return problems.empty(); }
};

ValidationReport validate(const FactoredMdp& mdp);

/// One sampled environment step.
struct StepResult {
    size_t next_state;
    double reward;
    numvec factor_rewards;
};

StepResult sample_step(const FactoredMdp& mdp, size_t state, size_t action,
                       Rng& rng);

/// Writes the product of per-factor rows into out[0..len), where len is the
/// product of sizes and the first factor is least significant. `rows[i]`
/// points at a distribution over sizes[i] values.
void product_row(const std::vector<const double*>& rows, const sizvec& sizes,
                 double* out);

}  // namespace frl
