#include "frl/agents.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace frl {

EpisodeSchedule make_schedule(uint64_t T, uint64_t L) {
    if (T == 0 || L == 0)
        throw ValidationError("make_schedule: T and L must be positive");
    EpisodeSchedule sched;
    sched.total = T;
    uint64_t t = 1, k = 1;
    while (t <= T) {
        uint64_t len = (k + L - 1) / L;
        len = std::min(len, T - t + 1);
        sched.lengths.push_back(len);
        sched.starts.push_back(t);
        t += len;
        ++k;
    }
    return sched;
}

FactoredMdp empirical_fmdp(const FactoredMdp& shape,
                           const EmpiricalModel& emp) {
    FactoredMdp out;
    out.spec = shape.spec;
    out.transition.factors.reserve(shape.transition.factors.size());
    for (size_t i = 0; i < shape.transition.factors.size(); ++i) {
        TransitionFactor f;
        f.scope = shape.transition.factors[i].scope;
        f.table = emp.phat[i];
        out.transition.factors.push_back(std::move(f));
    }
    out.reward.factors.reserve(shape.reward.factors.size());
    for (size_t i = 0; i < shape.reward.factors.size(); ++i) {
        RewardFactor f;
        f.scope = shape.reward.factors[i].scope;
        f.means = emp.rhat[i];
        f.kind = RewardKind::deterministic;
        out.reward.factors.push_back(std::move(f));
    }
    return out;
}

EpisodeOutcome dorl_episode(const VisitStatistics& stats,
                            const FactoredMdp& env, const AgentConfig& cfg,
                            numvec* warm) {
    double c_p = cfg.c.value_or(18.0);
    double c_r = cfg.c.value_or(12.0);
    EmpiricalModel emp = empirical_model(stats, env);
    WidthTables widths =
        width_tables(stats, env, emp, stats.t, cfg.rho, c_p, c_r);
    ExtendedFmdp ext = build_extended(env, emp, widths);
    PlanResult res = plan_extended(ext, cfg.planner, warm);
    EpisodeOutcome out;
    out.policy = map_policy(ext, res.policy);
    out.planner_gain = res.gain;
    if (warm) *warm = res.bias;
    return out;
}

namespace {

/// Draws a Dirichlet vector with parameters alpha via Gamma sampling.
numvec sample_dirichlet(const numvec& alpha, Rng& rng) {
    numvec out(alpha.size());
    double sum = 0.0;
    for (size_t i = 0; i < alpha.size(); ++i) {
        std::gamma_distribution<double> gamma(alpha[i], 1.0);
        out[i] = gamma(rng);
        sum += out[i];
    }
    if (sum <= 0.0) {
        std::fill(out.begin(), out.end(), 1.0 / double(out.size()));
    } else {
        for (double& v : out) v /= sum;
    }
    return out;
}

double truncated_normal(double mean, double sd, Rng& rng) {
    std::normal_distribution<double> norm(mean, sd);
    double r = norm(rng);
    for (int att = 0; att < 16 && (r < 0.0 || r > 1.0); ++att) r = norm(rng);
    return std::clamp(r, 0.0, 1.0);
}

/// Euclidean projection onto the probability simplex.
numvec project_simplex(numvec v) {
    numvec u = v;
    std::sort(u.begin(), u.end(), std::greater<double>());
    double cum = 0.0, theta = 0.0;
    size_t rho = 0;
    for (size_t j = 0; j < u.size(); ++j) {
        cum += u[j];
        double t = (1.0 - cum) / double(j + 1);
        if (u[j] + t > 0.0) {
            rho = j + 1;
            theta = t;
        }
    }
    (void)rho;
    for (double& x : v) x = std::max(x + theta, 0.0);
    // Normalization guard against rounding drift.
    double s = std::accumulate(v.begin(), v.end(), 0.0);
    if (s > 0.0)
        for (double& x : v) x /= s;
    return v;
}

}  // namespace

FactoredMdp psrl_sample_model(const VisitStatistics& stats,
                              const FactoredMdp& env, const AgentConfig& cfg,
                              Rng& rng) {
    double c = cfg.c.value_or(0.75);
    ScopeSet states = env.spec.state_components();

    FactoredMdp model;
    model.spec = env.spec;
    for (size_t i = 0; i < env.transition.factors.size(); ++i) {
        const auto& base = env.transition.factors[i];
        size_t size = env.spec.component_sizes[states[i]];
        size_t tab = scope_table_size(env.spec, base.scope);
        TransitionFactor f;
        f.scope = base.scope;
        f.table.resize(tab * size);
        numvec alpha(size);
        for (size_t x = 0; x < tab; ++x) {
            for (size_t v = 0; v < size; ++v)
                alpha[v] =
                    (double(stats.trans_counts[i][x * size + v]) + 1.0) / c;
            numvec row = sample_dirichlet(alpha, rng);
            std::copy(row.begin(), row.end(), f.table.begin() + x * size);
        }
        model.transition.factors.push_back(std::move(f));
    }
    EmpiricalModel emp = empirical_model(stats, env);
    for (size_t i = 0; i < env.reward.factors.size(); ++i) {
        const auto& base = env.reward.factors[i];
        size_t tab = scope_table_size(env.spec, base.scope);
        RewardFactor f;
        f.scope = base.scope;
        f.kind = RewardKind::deterministic;
        f.means.resize(tab);
        for (size_t x = 0; x < tab; ++x) {
            uint64_t n = projected_transition_count(stats, env, i, x);
            double sd = std::sqrt(c / double(std::max<uint64_t>(n, 1)));
            f.means[x] = truncated_normal(emp.rhat[i][x], sd, rng);
        }
        model.reward.factors.push_back(std::move(f));
    }
    return model;
}

EpisodeOutcome psrl_episode(const VisitStatistics& stats,
                            const FactoredMdp& env, const AgentConfig& cfg,
                            Rng& rng, numvec* warm) {
    FactoredMdp model = psrl_sample_model(stats, env, cfg, rng);
    PlanResult res = plan(model, cfg.planner, warm);
    EpisodeOutcome out;
    out.policy = std::move(res.policy);
    out.planner_gain = res.gain;
    if (warm) *warm = res.bias;
    return out;
}

EpisodeOutcome frmax_episode(const VisitStatistics& stats,
                             const FactoredMdp& env, const AgentConfig& cfg,
                             numvec* warm) {
    size_t S = env.num_states(), A = env.num_actions();
    EmpiricalModel emp = empirical_model(stats, env);
    TabularMdp flat = flatten(empirical_fmdp(env, emp));

    std::vector<ScopeIndexer> tix, rix;
    for (const auto& f : env.transition.factors)
        tix.emplace_back(env.spec, f.scope);
    for (const auto& f : env.reward.factors)
        rix.emplace_back(env.spec, f.scope);

    std::vector<char> known(S * A, 1);
    bool all_known = true;
    for (size_t s = 0; s < S; ++s)
        for (size_t a = 0; a < A; ++a) {
            bool k = true;
            for (size_t i = 0; i < tix.size() && k; ++i)
                k = stats.trans_visits[i][tix[i](s, a)] >= cfg.m_known;
            for (size_t i = 0; i < rix.size() && k; ++i)
                k = stats.reward_visits[i][rix[i](s, a)] >= cfg.m_known;
            known[s * A + a] = k;
            all_known = all_known && k;
        }

    // With everything known the fictitious state would be unreachable and
    // the padded model multichain, which stalls relative value iteration.
    // Plan the empirical model directly instead.
    if (all_known) {
        PlanResult res = plan_tabular(flat, cfg.planner, warm);
        EpisodeOutcome out;
        out.policy = std::move(res.policy);
        out.planner_gain = res.gain;
        if (warm) *warm = res.bias;
        return out;
    }

    // One extra absorbing state paying the maximum reward; unknown pairs
    // are rerouted there.
    TabularMdp model;
    model.num_states = S + 1;
    model.num_actions = A;
    model.transition.assign((S + 1) * A * (S + 1), 0.0);
    model.reward.assign((S + 1) * A, 0.0);
    for (size_t s = 0; s < S; ++s)
        for (size_t a = 0; a < A; ++a) {
            double* row =
                model.transition.data() + (s * A + a) * (S + 1);
            if (known[s * A + a]) {
                const double* src = flat.row(s, a);
                std::copy(src, src + S, row);
                model.reward[s * A + a] = flat.rew(s, a);
            } else {
                row[S] = 1.0;
                model.reward[s * A + a] = 1.0;
            }
        }
    for (size_t a = 0; a < A; ++a) {
        model.transition[(S * A + a) * (S + 1) + S] = 1.0;
        model.reward[S * A + a] = 1.0;
    }

    PlanResult res = plan_tabular(model, cfg.planner, warm);
    EpisodeOutcome out;
    out.policy.assign(res.policy.begin(), res.policy.begin() + long(S));
    out.planner_gain = res.gain;
    if (warm) *warm = res.bias;
    return out;
}

EpisodeOutcome fsrl_episode(const VisitStatistics& stats,
                            const FactoredMdp& env, const AgentConfig& cfg,
                            Rng& rng) {
    size_t S = env.num_states();
    if (S > (size_t(1) << 10))
        throw SizeError("fsrl_episode: flattened size exceeds the cap");
    double c_p = cfg.c.value_or(18.0);
    double c_r = cfg.c.value_or(12.0);
    ScopeSet states = env.spec.state_components();
    sizvec sizes;
    for (size_t c0 : states) sizes.push_back(env.spec.component_sizes[c0]);

    EmpiricalModel emp = empirical_model(stats, env);
    WidthTables widths =
        width_tables(stats, env, emp, stats.t, cfg.rho, c_p, c_r);

    EpisodeOutcome best;
    double best_gain = -std::numeric_limits<double>::infinity();

    auto consider = [&](const FactoredMdp& candidate) {
        PlanResult res;
        try {
            res = plan(candidate, cfg.planner);
        } catch (const ConvergenceError&) {
            return;
        }
        SpanProfile prof = factored_span(res.bias, sizes);
        if (prof.q > cfg.span_budget + 1e-12) return;
        if (res.gain > best_gain) {
            best_gain = res.gain;
            best.policy = std::move(res.policy);
            best.planner_gain = res.gain;
        }
    };

    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    FactoredMdp cand = empirical_fmdp(env, emp);
    // The set's center is itself a member; keeping it in the pool makes the
    // unconstrained search at least match planning on the empirical model.
    consider(cand);
    for (size_t k = 0; k < cfg.candidates; ++k) {
        for (size_t i = 0; i < cand.transition.factors.size(); ++i) {
            auto& f = cand.transition.factors[i];
            size_t size = sizes[i];
            size_t tab = scope_table_size(env.spec, f.scope);
            numvec row(size);
            for (size_t x = 0; x < tab; ++x) {
                for (size_t v = 0; v < size; ++v)
                    row[v] = emp.phat[i][x * size + v] +
                             unif(rng) * widths.wp[i][x * size + v];
                row = project_simplex(std::move(row));
                std::copy(row.begin(), row.end(),
                          f.table.begin() + x * size);
            }
        }
        for (size_t i = 0; i < cand.reward.factors.size(); ++i) {
            auto& f = cand.reward.factors[i];
            for (size_t x = 0; x < f.means.size(); ++x)
                f.means[x] = std::clamp(
                    emp.rhat[i][x] + unif(rng) * widths.wr[i][x], 0.0, 1.0);
        }
        consider(cand);
    }

    // Extreme candidates: one per flat target state, with the optimistic
    // rewards of the extended construction.
    FactoredMdp extreme = empirical_fmdp(env, emp);
    for (size_t i = 0; i < extreme.reward.factors.size(); ++i)
        for (size_t x = 0; x < extreme.reward.factors[i].means.size(); ++x)
            extreme.reward.factors[i].means[x] =
                emp.rhat[i][x] + widths.wr[i][x];
    for (size_t target = 0; target < S; ++target) {
        size_t rem = target;
        for (size_t i = 0; i < extreme.transition.factors.size(); ++i) {
            auto& f = extreme.transition.factors[i];
            size_t size = sizes[i];
            size_t tval = rem % size;
            rem /= size;
            size_t tab = scope_table_size(env.spec, f.scope);
            for (size_t x = 0; x < tab; ++x) {
                numvec phat(emp.phat[i].begin() + x * size,
                            emp.phat[i].begin() + (x + 1) * size);
                numvec w(widths.wp[i].begin() + x * size,
                         widths.wp[i].begin() + (x + 1) * size);
                numvec row = extreme_dynamic(phat, w, tval);
                std::copy(row.begin(), row.end(), f.table.begin() + x * size);
            }
        }
        consider(extreme);
    }

    if (best.policy.empty()) {
        PlanResult res = plan(empirical_fmdp(env, emp), cfg.planner);
        best.policy = std::move(res.policy);
        best.planner_gain = res.gain;
    }
    return best;
}

RunRecord run_agent(const FactoredMdp& env, const AgentConfig& cfg, uint64_t T,
                    uint64_t L, uint64_t seed, size_t initial_state) {
    if (T == 0) {
        RunRecord empty;
        empty.seed = seed;
        return empty;
    }
    EpisodeSchedule sched = make_schedule(T, L);
    VisitStatistics stats = make_statistics(env);
    Rng rng = make_rng(seed);

    RunRecord rec;
    rec.seed = seed;
    rec.rewards.reserve(T);
    rec.states.reserve(T);
    rec.actions.reserve(T);
    rec.episodes.reserve(sched.num_episodes());

    size_t state = initial_state;
    indvec policy(env.num_states(), 0);
    numvec warm;
    bool have_policy = false;

    double memb_cp = cfg.kind == AgentKind::dorl ? cfg.c.value_or(18.0) : 18.0;
    double memb_cr = cfg.kind == AgentKind::dorl ? cfg.c.value_or(12.0) : 12.0;

    for (size_t k = 0; k < sched.num_episodes(); ++k) {
        EpisodeDiag diag;
        diag.t_start = sched.starts[k];
        diag.length = sched.lengths[k];

        {
            EmpiricalModel emp = empirical_model(stats, env);
            WidthTables widths = width_tables(stats, env, emp, stats.t,
                                              cfg.rho, memb_cp, memb_cr);
            diag.member = in_confidence_set(env, emp, widths).member;
        }

        try {
            EpisodeOutcome out;
            switch (cfg.kind) {
                case AgentKind::dorl:
                    out = dorl_episode(stats, env, cfg, &warm);
                    break;
                case AgentKind::psrl:
                    out = psrl_episode(stats, env, cfg, rng, &warm);
                    break;
                case AgentKind::frmax:
                    out = frmax_episode(stats, env, cfg, &warm);
                    break;
                case AgentKind::fsrl:
                    out = fsrl_episode(stats, env, cfg, rng);
                    break;
            }
            policy = std::move(out.policy);
            diag.planner_gain = out.planner_gain;
            have_policy = true;
        } catch (const ConvergenceError& e) {
            diag.planner_failed = true;
            diag.planner_gain = std::numeric_limits<double>::quiet_NaN();
            ++rec.planner_failures;
            if (!have_policy) policy.assign(env.num_states(), 0);
            (void)e;
        }

        for (uint64_t step = 0; step < sched.lengths[k]; ++step) {
            size_t a = size_t(policy[state]);
            StepResult sr = sample_step(env, state, a, rng);
            record_step(stats, env, state, a, sr.next_state,
                        sr.factor_rewards);
            rec.rewards.push_back(sr.reward);
            rec.states.push_back(state);
            rec.actions.push_back(a);
            state = sr.next_state;
        }
        rec.episodes.push_back(diag);
    }
    return rec;
}

}  // namespace frl
