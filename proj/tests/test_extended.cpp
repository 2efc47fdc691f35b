#include <doctest.h>

#include <cmath>

#include "frl/confidence.hpp"
#include "frl/envs.hpp"
#include "frl/extended.hpp"
#include "frl/solve.hpp"
#include "helpers.hpp"

using namespace frl;
using frl_test::random_dist;
using frl_test::random_fmdp;

namespace {

/// Collects statistics from a uniformly random rollout and returns the
/// episode-start style widths at the final time.
struct Fitted {
    VisitStatistics stats;
    EmpiricalModel emp;
    WidthTables widths;
    bool member = false;
};

Fitted fit(const FactoredMdp& env, size_t steps, uint64_t seed,
           double rho = 0.05) {
    Fitted f;
    f.stats = make_statistics(env);
    Rng rng = make_rng(seed);
    std::uniform_int_distribution<size_t> act(0, env.num_actions() - 1);
    size_t s = 0;
    for (size_t t = 0; t < steps; ++t) {
        size_t a = act(rng);
        StepResult step = sample_step(env, s, a, rng);
        record_step(f.stats, env, s, a, step.next_state, step.factor_rewards);
        s = step.next_state;
    }
    f.emp = empirical_model(f.stats, env);
    f.widths = width_tables(f.stats, env, f.emp, f.stats.t, rho);
    f.member = in_confidence_set(env, f.emp, f.widths).member;
    return f;
}

WidthTables zero_widths(const FactoredMdp& env) {
    VisitStatistics st = make_statistics(env);
    WidthTables w;
    for (const auto& tab : st.trans_counts) {
        w.wp.emplace_back(tab.size(), 0.0);
        w.wp_raw.emplace_back(tab.size(), 0.0);
    }
    for (const auto& tab : st.trans_visits) w.l1.emplace_back(tab.size(), 0.0);
    for (const auto& tab : st.reward_visits)
        w.wr.emplace_back(tab.size(), 0.0);
    return w;
}

/// EmpiricalModel whose tables equal the true model exactly.
EmpiricalModel truth_as_empirical(const FactoredMdp& env) {
    EmpiricalModel emp;
    for (const auto& f : env.transition.factors) emp.phat.push_back(f.table);
    for (const auto& f : env.reward.factors) emp.rhat.push_back(f.means);
    return emp;
}

}  // namespace

TEST_SUITE("extended-mdp") {

TEST_CASE("extreme row moves the removed mass onto the target") {
    // target is the second value (index 1): its entry gains the whole
    // removed mass 0.2
    numvec out = extreme_dynamic({0.5, 0.3, 0.2}, {0.1, 0.05, 0.05}, 1);
    REQUIRE(out.size() == 3);
    CHECK(std::abs(out[0] - 0.4) <= 1e-12);
    CHECK(std::abs(out[1] - 0.45) <= 1e-12);
    CHECK(std::abs(out[2] - 0.15) <= 1e-12);
    CHECK(std::abs(out[0] + out[1] + out[2] - 1.0) <= 1e-12);
}

TEST_CASE("zero width leaves the row unchanged for every target") {
    numvec p = {0.25, 0.5, 0.25};
    for (size_t tgt = 0; tgt < 3; ++tgt) {
        numvec out = extreme_dynamic(p, {0, 0, 0}, tgt);
        for (size_t v = 0; v < 3; ++v) CHECK(out[v] == p[v]);
    }
}

TEST_CASE("full-width redistribution yields the point mass") {
    numvec p = {0.6, 0.1, 0.3};
    for (size_t tgt = 0; tgt < 3; ++tgt) {
        numvec out = extreme_dynamic(p, p, tgt);
        for (size_t v = 0; v < 3; ++v)
            CHECK(out[v] == doctest::Approx(v == tgt ? 1.0 : 0.0));
    }
}

TEST_CASE("invalid extreme inputs are rejected") {
    CHECK_THROWS_AS(extreme_dynamic({0.5, 0.5}, {0.6, 0.0}, 0),
                    ValidationError);
    CHECK_THROWS_AS(extreme_dynamic({0.5, 0.5}, {0.1, -0.2}, 0),
                    ValidationError);
    CHECK_THROWS_AS(extreme_dynamic({0.5, 0.5}, {0.1}, 0), ValidationError);
    CHECK_THROWS_AS(extreme_dynamic({0.5, 0.5}, {0.1, 0.1}, 2),
                    ValidationError);
}

TEST_CASE("extreme rows stay distributions on random inputs") {
    Rng rng = make_rng(41);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        numvec p = random_dist(rng, 2 + trial % 4, 0.0);
        numvec w(p.size());
        for (size_t v = 0; v < p.size(); ++v) w[v] = u(rng) * p[v];
        numvec out = extreme_dynamic(p, w, trial % p.size());
        double sum = 0.0;
        for (double v : out) {
            CHECK(v >= -1e-15);
            sum += v;
        }
        CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
}

TEST_CASE("zero widths replicate the empirical model for every target") {
    FactoredMdp env = build_sysadmin({Topology::circle, 3});
    EmpiricalModel emp = truth_as_empirical(env);
    ExtendedFmdp ext = build_extended(env, emp, zero_widths(env));
    CHECK(ext.num_actions() == env.num_actions() * env.num_states());
    ScopeSet states = env.spec.state_components();
    for (size_t i = 0; i < env.transition.factors.size(); ++i) {
        size_t size = env.spec.component_sizes[states[i]];
        size_t tab = scope_table_size(env.spec, env.transition.factors[i].scope);
        for (size_t tgt = 0; tgt < size; ++tgt)
            for (size_t x = 0; x < tab; ++x)
                for (size_t v = 0; v < size; ++v)
                    CHECK(ext.ext.transition.factors[i]
                              .table[(x + tab * tgt) * size + v] ==
                          doctest::Approx(emp.phat[i][x * size + v]));
    }
    for (size_t i = 0; i < env.reward.factors.size(); ++i)
        for (size_t x = 0; x < ext.rtilde[i].size(); ++x)
            CHECK(ext.rtilde[i][x] == doctest::Approx(emp.rhat[i][x]));
}

TEST_CASE("fresh statistics produce pure target point masses") {
    // N = 0 everywhere: phat uniform, capped width equals phat, so the
    // extreme row is the point mass on the target value.
    FactoredMdp env = build_sysadmin({});
    VisitStatistics st = make_statistics(env);
    EmpiricalModel emp = empirical_model(st, env);
    WidthTables w = width_tables(st, env, emp, 1, 0.05);
    ExtendedFmdp ext = build_extended(env, emp, w);
    for (size_t i = 0; i < ext.q.size(); ++i) {
        for (double v : ext.q[i]) CHECK(v == doctest::Approx(0.0));
        for (double v : ext.g[i]) CHECK(v == doctest::Approx(1.0));
    }
}

TEST_CASE("scope tables satisfy the product bound") {
    Rng rng = make_rng(42);
    for (int trial = 0; trial < 40; ++trial) {
        FactoredMdp env = random_fmdp(rng, 3, 3, 3, 8);
        size_t L = env.max_scope_table();
        size_t W = env.max_factor_size();
        Fitted f = fit(env, 50, 100 + uint64_t(trial));
        ExtendedFmdp ext = build_extended(env, f.emp, f.widths);
        for (const auto& tf : ext.ext.transition.factors)
            CHECK(scope_table_size(ext.ext.spec, tf.scope) <= L * W);
        for (const auto& rf : ext.ext.reward.factors)
            CHECK(scope_table_size(ext.ext.spec, rf.scope) <= L * W);
    }
}

TEST_CASE("extended rows flatten to the factored product") {
    Rng rng = make_rng(43);
    FactoredMdp env = random_fmdp(rng, 2, 3, 3);
    Fitted f = fit(env, 500, 7);
    ExtendedFmdp ext = build_extended(env, f.emp, f.widths);
    TabularMdp flat = flatten(ext.ext);
    size_t S = env.num_states(), A = env.num_actions();
    ScopeSet states = env.spec.state_components();
    for (size_t s = 0; s < S; ++s)
        for (size_t tgt = 0; tgt < S; ++tgt)
            for (size_t a = 0; a < A; ++a) {
                size_t ea = extended_action(ext, a, tgt);
                sizvec tv = env.spec.component_values(tgt, 0);
                std::vector<numvec> rows;
                for (size_t i = 0; i < ext.factor_sizes.size(); ++i) {
                    const auto& bf = env.transition.factors[i];
                    size_t x = scope_project(env.spec, bf.scope, s, a);
                    size_t size = ext.factor_sizes[i];
                    numvec row(ext.q[i].begin() + x * size,
                               ext.q[i].begin() + (x + 1) * size);
                    row[tv[i]] += ext.g[i][x];
                    rows.push_back(std::move(row));
                }
                std::vector<const double*> ptr;
                for (const auto& r : rows) ptr.push_back(r.data());
                numvec joint(S);
                product_row(ptr, ext.factor_sizes, joint.data());
                for (size_t s2 = 0; s2 < S; ++s2)
                    CHECK(std::abs(flat.prob(s, ea, s2) - joint[s2]) <= 1e-12);
                (void)states;
            }
}

TEST_CASE("policy mapping projects the base action") {
    FactoredMdp env = build_sysadmin({Topology::circle, 3});
    Fitted f = fit(env, 200, 11);
    ExtendedFmdp ext = build_extended(env, f.emp, f.widths);
    size_t S = env.num_states(), A = env.num_actions();
    Rng rng = make_rng(44);
    std::uniform_int_distribution<size_t> act(0, A - 1), st(0, S - 1);
    indvec epol(S), want(S);
    for (size_t s = 0; s < S; ++s) {
        size_t a = act(rng), tgt = st(rng);
        epol[s] = long(extended_action(ext, a, tgt));
        want[s] = long(a);
    }
    CHECK(map_policy(ext, epol) == want);

    indvec constant(S, long(extended_action(ext, 2, 5)));
    CHECK(map_policy(ext, constant) == indvec(S, 2));
}

TEST_CASE("optimistic gain dominates the truth inside the confidence set") {
    Rng rng = make_rng(45);
    size_t members = 0;
    for (int trial = 0; trial < 30; ++trial) {
        FactoredMdp env = random_fmdp(rng, 2, 3, 3);
        Fitted f = fit(env, 3000, 500 + uint64_t(trial));
        if (!f.member) continue;
        ++members;
        ExtendedFmdp ext = build_extended(env, f.emp, f.widths);
        SolveReport truth = solve_average_reward(flatten(env), 1e-9);
        SolveReport opt = solve_average_reward(flatten(ext.ext), 1e-9);
        CHECK(opt.gain >= truth.gain - 1e-6);

        CHECK(optimism_predicate(env, ext, truth.bias, truth.policy));
        numvec flat_h(env.num_states(), 3.5);
        CHECK(optimism_predicate(env, ext, flat_h, truth.policy, 1e-12));
    }
    CHECK(members >= 25);
}

TEST_CASE("a wrong model with zero widths breaks optimism") {
    FactoredMdp env = build_chain_product({1, 0.1, 0.05, 2});
    SolveReport truth = solve_average_reward(flatten(env), 1e-10);
    REQUIRE(truth.gain == doctest::Approx(0.6).epsilon(1e-6));

    // claim the chain never moves: state 1 becomes unreachable
    EmpiricalModel emp = truth_as_empirical(env);
    for (size_t j = 0; j < emp.phat[0].size(); j += 2) {
        emp.phat[0][j] = 1.0;
        emp.phat[0][j + 1] = 0.0;
    }
    ExtendedFmdp ext = build_extended(env, emp, zero_widths(env));
    SolveReport opt = solve_average_reward(flatten(ext.ext), 1e-10);
    CHECK(opt.gain < truth.gain - 1e-6);
    CHECK(!optimism_predicate(env, ext, truth.bias, truth.policy));
}

TEST_CASE("extended diameter stays within the true diameter") {
    Rng rng = make_rng(46);
    size_t members = 0;
    for (int trial = 0; trial < 15; ++trial) {
        FactoredMdp env = random_fmdp(rng, 2, 3, 2);
        Fitted f = fit(env, 2000, 900 + uint64_t(trial));
        if (!f.member) continue;
        ++members;
        ExtendedFmdp ext = build_extended(env, f.emp, f.widths);
        CHECK(extended_diameter_predicate(env, ext));
    }
    CHECK(members >= 12);
}

TEST_CASE("zero widths reproduce the true diameter exactly") {
    FactoredMdp env = build_sysadmin({Topology::circle, 3});
    ExtendedFmdp ext =
        build_extended(env, truth_as_empirical(env), zero_widths(env));
    DiameterResult dt = diameter(flatten(env));
    DiameterResult de = diameter(flatten(ext.ext));
    REQUIRE(!dt.infinite);
    REQUIRE(!de.infinite);
    CHECK(de.diameter == doctest::Approx(dt.diameter).epsilon(1e-9));
    CHECK(extended_diameter_predicate(env, ext, 1e-9));
}

TEST_CASE("disconnected truth keeps both diameters infinite") {
    FactoredMdp env;
    env.spec.component_sizes = {2, 2};
    env.spec.action_components = {1};
    env.transition.factors.push_back({{0, 1}, {1, 0, 0, 1, 1, 0, 0, 1}});
    env.reward.factors.push_back({{0}, {0.0, 1.0}, RewardKind::deterministic,
                                  0.0});
    ExtendedFmdp ext =
        build_extended(env, truth_as_empirical(env), zero_widths(env));
    CHECK(diameter(flatten(env)).infinite);
    CHECK(diameter(flatten(ext.ext)).infinite);
    CHECK(extended_diameter_predicate(env, ext));
}

TEST_CASE("deviation bound on hand cases") {
    std::vector<numvec> p = {{0.6, 0.4}, {0.2, 0.3, 0.5}};
    numvec h(6);
    const double a = 0.7, b = 0.4;
    for (size_t s2 = 0; s2 < 3; ++s2)
        for (size_t s1 = 0; s1 < 2; ++s1)
            h[s1 + 2 * s2] = a * double(s1) + b * double(s2);

    DeviationBound same = factored_deviation_bound(p, p, h, {2, 3});
    CHECK(same.lhs == doctest::Approx(0.0));
    CHECK(same.rhs == doctest::Approx(0.0));

    // perturb only the first factor: lhs collapses to a * delta(1)
    std::vector<numvec> pt = {{0.5, 0.5}, {0.2, 0.3, 0.5}};
    DeviationBound d = factored_deviation_bound(p, pt, h, {2, 3});
    CHECK(d.lhs == doctest::Approx(a * 0.1).epsilon(1e-12));
    CHECK(d.rhs == doctest::Approx(0.2 * a).epsilon(1e-12));
    CHECK(d.lhs <= d.rhs + 1e-9);

    CHECK_THROWS_AS(factored_deviation_bound(p, pt, {0.0, 1.0}, {2, 3}),
                    ValidationError);
}

TEST_CASE("deviation bound holds on random factored triples") {
    Rng rng = make_rng(47);
    std::uniform_int_distribution<size_t> nf(1, 3), sz(2, 4);
    std::uniform_real_distribution<double> hv(-3.0, 3.0);
    for (int trial = 0; trial < 1000; ++trial) {
        sizvec sizes(nf(rng));
        size_t S = 1;
        for (auto& s : sizes) {
            s = sz(rng);
            S *= s;
        }
        std::vector<numvec> p, pt;
        for (size_t i = 0; i < sizes.size(); ++i) {
            p.push_back(random_dist(rng, sizes[i], 0.0));
            pt.push_back(random_dist(rng, sizes[i], 0.0));
        }
        numvec h(S);
        for (auto& v : h) v = hv(rng);
        DeviationBound d = factored_deviation_bound(p, pt, h, sizes);
        CHECK(d.lhs <= d.rhs + 1e-9);
    }
}

}  // TEST_SUITE
