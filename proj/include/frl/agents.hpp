// Online learners over a shared episode schedule: optimism via the extended
// MDP (DORL), posterior sampling (PSRL), a factored Rmax baseline, and an
// approximate span-constrained learner (FSRL).
#pragma once

#include <cstdint>
#include <optional>

#include "frl/common.hpp"
#include "frl/confidence.hpp"
#include "frl/extended.hpp"
#include "frl/factored.hpp"
#include "frl/planners.hpp"

namespace frl {

/// Episode lengths T_k = ceil(k / L), k = 1, 2, ..., truncated so the total
/// equals T. starts[k] is the time step at which episode k begins (1-based).
struct EpisodeSchedule {
    std::vector<uint64_t> lengths;
    std::vector<uint64_t> starts;
    uint64_t total = 0;

    size_t num_episodes() const { return lengths.size(); }
};

EpisodeSchedule make_schedule(uint64_t T, uint64_t L);

enum class AgentKind { dorl, psrl, frmax, fsrl };

struct AgentConfig {
    AgentKind kind = AgentKind::dorl;
    double rho = 0.05;
    /// DORL: one coefficient replacing both width constants 18 and 12.
    /// PSRL: Dirichlet/variance scale (0.75 when unset).
    std::optional<double> c;
    uint64_t m_known = 300;     // frmax knownness threshold
    double span_budget = 10.0;  // fsrl Q
    size_t candidates = 128;    // fsrl random candidate count
    PlannerChoice planner;
};

/// What one episode's planning produced.
struct EpisodeOutcome {
    indvec policy;        // base actions
    double planner_gain = 0.0;
};

/// The empirical model as a factored MDP over the environment's shape, with
/// deterministic rewards at the empirical means.
FactoredMdp empirical_fmdp(const FactoredMdp& shape, const EmpiricalModel& emp);

/// DORL episode: widths at t = stats.t, extended MDP from extreme dynamics,
/// exact (or ALP) planning, policy mapped back to base actions.
EpisodeOutcome dorl_episode(const VisitStatistics& stats,
                            const FactoredMdp& env, const AgentConfig& cfg,
                            numvec* warm = nullptr);

/// PSRL episode: transitions sampled per scoped value from
/// Dirichlet((N(s',x) + 1)/c), reward means from a Gaussian with variance
/// c / max{1, N} (transition counts projected onto the reward scope),
/// truncated to [0, 1] by up to 16 resamples then clamped.
EpisodeOutcome psrl_episode(const VisitStatistics& stats,
                            const FactoredMdp& env, const AgentConfig& cfg,
                            Rng& rng, numvec* warm = nullptr);

/// The factored model one PSRL episode plans on.
FactoredMdp psrl_sample_model(const VisitStatistics& stats,
                              const FactoredMdp& env, const AgentConfig& cfg,
                              Rng& rng);

/// Factored Rmax episode: a flat (s, a) is known when every scoped pair it
/// touches has at least m_known visits; unknown pairs are rerouted to a
/// fictitious absorbing state paying the maximum reward.
EpisodeOutcome frmax_episode(const VisitStatistics& stats,
                             const FactoredMdp& env, const AgentConfig& cfg,
                             numvec* warm = nullptr);

/// FSRL episode: randomized search over confidence-set candidates plus the
/// extended-MDP extreme candidates; candidates whose optimal bias violates
/// the factored-span budget Q are discarded; the best surviving gain's
/// policy is returned, falling back to planning on the empirical model.
EpisodeOutcome fsrl_episode(const VisitStatistics& stats,
                            const FactoredMdp& env, const AgentConfig& cfg,
                            Rng& rng);

struct EpisodeDiag {
    uint64_t t_start = 0;
    uint64_t length = 0;
    double planner_gain = 0.0;
    bool member = false;       // truth inside the confidence set at t_start
    bool planner_failed = false;
};

struct RunRecord {
    uint64_t seed = 0;
    numvec rewards;            // one entry per step
    std::vector<size_t> states;   // state the step was taken from
    std::vector<size_t> actions;  // action taken at that step
    std::vector<EpisodeDiag> episodes;
    size_t planner_failures = 0;
};

/// Runs one agent for T steps under the episode schedule. Planning failures
/// keep the previous policy. Deterministic for a fixed seed.
RunRecord run_agent(const FactoredMdp& env, const AgentConfig& cfg, uint64_t T,
                    uint64_t L, uint64_t seed, size_t initial_state = 0);

}  // namespace frl
