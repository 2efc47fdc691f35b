#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <functional>

#include "frl/confidence.hpp"
#include "frl/envs.hpp"
#include "frl/planners.hpp"
#include "helpers.hpp"

using namespace frl;
using frl_test::random_fmdp;

namespace {

/// Minimum objective over all vertices of a small boxed LP, by enumerating
/// intersections of constraint/bound hyperplanes.
double vertex_enumeration(const LinearProgram& lp, double feas_tol = 1e-7) {
    size_t n = lp.num_vars();
    struct Plane {
        numvec a;
        double b;
    };
    std::vector<Plane> planes;
    for (size_t r = 0; r < lp.num_rows(); ++r)
        planes.push_back({lp.rows[r], lp.rhs[r]});
    for (size_t j = 0; j < n; ++j) {
        numvec e(n, 0.0);
        e[j] = 1.0;
        if (std::isfinite(lp.lower[j])) planes.push_back({e, lp.lower[j]});
        if (std::isfinite(lp.upper[j])) planes.push_back({e, lp.upper[j]});
    }

    double best = std::numeric_limits<double>::infinity();
    std::vector<size_t> idx(n);
    size_t P = planes.size();
    std::function<void(size_t, size_t)> rec = [&](size_t start, size_t depth) {
        if (depth == n) {
            Eigen::MatrixXd M(n, n);
            Eigen::VectorXd b(n);
            for (size_t r = 0; r < n; ++r) {
                for (size_t c = 0; c < n; ++c) M(r, c) = planes[idx[r]].a[c];
                b(r) = planes[idx[r]].b;
            }
            Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
            if (!lu.isInvertible()) return;
            Eigen::VectorXd x = lu.solve(b);
            for (size_t r = 0; r < lp.num_rows(); ++r) {
                double dot = 0.0;
                for (size_t c = 0; c < n; ++c) dot += lp.rows[r][c] * x(c);
                if (lp.relations[r] == Relation::ge && dot < lp.rhs[r] - feas_tol)
                    return;
                if (lp.relations[r] == Relation::le && dot > lp.rhs[r] + feas_tol)
                    return;
                if (lp.relations[r] == Relation::eq &&
                    std::abs(dot - lp.rhs[r]) > feas_tol)
                    return;
            }
            for (size_t j = 0; j < n; ++j) {
                if (x(j) < lp.lower[j] - feas_tol) return;
                if (x(j) > lp.upper[j] + feas_tol) return;
            }
            double obj = 0.0;
            for (size_t j = 0; j < n; ++j) obj += lp.objective[j] * x(j);
            best = std::min(best, obj);
            return;
        }
        for (size_t p = start; p < P; ++p) {
            idx[depth] = p;
            rec(p + 1, depth + 1);
        }
    };
    rec(0, 0);
    return best;
}

}  // namespace

TEST_SUITE("planners") {

TEST_CASE("one-variable programs") {
    LinearProgram lp;
    lp.objective = {1.0};
    lp.default_bounds();
    lp.add_row({1.0}, Relation::ge, 3.0);
    LpResult r = solve_lp(lp);
    REQUIRE(r.status == LpStatus::optimal);
    CHECK(r.x[0] == doctest::Approx(3.0));
    CHECK(r.objective == doctest::Approx(3.0));

    LinearProgram one;
    one.objective = {1.0};
    one.default_bounds();
    one.add_row({1.0}, Relation::ge, 0.7);
    LpResult r2 = solve_lp(one);
    REQUIRE(r2.status == LpStatus::optimal);
    CHECK(r2.objective == doctest::Approx(0.7));
}

TEST_CASE("hand-checked corner solutions") {
    LinearProgram lp;
    lp.objective = {-1.0, -2.0};
    lp.lower = {0.0, 0.0};
    lp.upper = {std::numeric_limits<double>::infinity(),
                std::numeric_limits<double>::infinity()};
    lp.add_row({1.0, 1.0}, Relation::le, 4.0);
    lp.add_row({0.0, 1.0}, Relation::le, 2.0);
    LpResult r = solve_lp(lp);
    REQUIRE(r.status == LpStatus::optimal);
    CHECK(r.objective == doctest::Approx(-6.0));
    CHECK(r.x[0] == doctest::Approx(2.0));
    CHECK(r.x[1] == doctest::Approx(2.0));

    LinearProgram eq;
    eq.objective = {1.0, 1.0};
    eq.default_bounds();
    eq.add_row({1.0, 1.0}, Relation::eq, 5.0);
    eq.add_row({1.0, -1.0}, Relation::ge, 1.0);
    LpResult re = solve_lp(eq);
    REQUIRE(re.status == LpStatus::optimal);
    CHECK(re.objective == doctest::Approx(5.0));
}

TEST_CASE("infeasible and unbounded detection") {
    LinearProgram bad;
    bad.objective = {1.0};
    bad.default_bounds();
    bad.add_row({1.0}, Relation::ge, 2.0);
    bad.add_row({1.0}, Relation::le, 1.0);
    CHECK(solve_lp(bad).status == LpStatus::infeasible);

    LinearProgram unb;
    unb.objective = {-1.0};
    unb.lower = {0.0};
    unb.upper = {std::numeric_limits<double>::infinity()};
    CHECK(solve_lp(unb).status == LpStatus::unbounded);
}

TEST_CASE("random boxed programs match vertex enumeration") {
    Rng rng = make_rng(51);
    std::uniform_real_distribution<double> coef(-2.0, 2.0), pt(0.2, 2.8),
        margin(0.1, 1.0);
    for (int trial = 0; trial < 30; ++trial) {
        const size_t n = 3, rows = 6;
        LinearProgram lp;
        lp.objective.resize(n);
        for (auto& c : lp.objective) c = coef(rng);
        lp.lower.assign(n, 0.0);
        lp.upper.assign(n, 3.0);
        numvec x0(n);
        for (auto& v : x0) v = pt(rng);
        for (size_t r = 0; r < rows; ++r) {
            numvec a(n);
            double dot = 0.0;
            for (size_t j = 0; j < n; ++j) {
                a[j] = coef(rng);
                dot += a[j] * x0[j];
            }
            bool ge = (r % 2 == 0);
            lp.add_row(a, ge ? Relation::ge : Relation::le,
                       ge ? dot - margin(rng) : dot + margin(rng));
        }
        LpResult r = solve_lp(lp);
        REQUIRE(r.status == LpStatus::optimal);
        double oracle = vertex_enumeration(lp);
        CHECK(std::abs(r.objective - oracle) <= 1e-6);
        // returned point satisfies every constraint
        for (size_t row = 0; row < lp.num_rows(); ++row) {
            double dot = 0.0;
            for (size_t j = 0; j < n; ++j) dot += lp.rows[row][j] * r.x[j];
            if (lp.relations[row] == Relation::ge)
                CHECK(dot >= lp.rhs[row] - 1e-8);
            else
                CHECK(dot <= lp.rhs[row] + 1e-8);
        }
    }
}

TEST_CASE("single-state program returns the reward") {
    FactoredMdp m;
    m.spec.component_sizes = {1, 1};
    m.spec.action_components = {1};
    m.transition.factors.push_back({{0, 1}, {1.0}});
    m.reward.factors.push_back({{0}, {0.7}, RewardKind::deterministic, 0.0});
    AlpModel model = build_alp(m);
    CHECK(model.lp.num_rows() == 1);
    PlanResult res = plan(m, {PlannerKind::alp});
    CHECK(res.gain == doctest::Approx(0.7));
    CHECK(res.policy == indvec{0});
}

TEST_CASE("alp rows encode the factored expectations") {
    FactoredMdp env = build_sysadmin({Topology::circle, 3});
    AlpModel model = build_alp(env);
    size_t S = env.num_states(), A = env.num_actions();
    CHECK(model.lp.num_rows() == S * A);
    CHECK(model.num_factors == 3);

    TabularMdp flat = flatten(env);
    for (size_t s = 0; s < S; s += 3)
        for (size_t a = 0; a < A; ++a) {
            const numvec& row = model.lp.rows[s * A + a];
            CHECK(row[0] == 1.0);
            CHECK(model.lp.relations[s * A + a] == Relation::ge);
            CHECK(std::abs(model.lp.rhs[s * A + a] - flat.rew(s, a)) <= 1e-12);
            for (size_t i = 0; i < 3; ++i) {
                double e = 0.0;
                for (size_t s2 = 0; s2 < S; ++s2)
                    e += flat.prob(s, a, s2) * double((s2 >> i) & 1);
                double si = double((s >> i) & 1);
                CHECK(std::abs(row[i + 1] - (si - e)) <= 1e-12);
            }
        }
}

TEST_CASE("binary single-factor basis is complete") {
    FactoredMdp chain = build_chain_product({1, 0.1, 0.05, 2});
    PlanResult exact = plan(chain, {PlannerKind::exact, 1e-10});
    PlanResult alp = plan(chain, {PlannerKind::alp});
    CHECK(alp.gain == doctest::Approx(exact.gain).epsilon(1e-6));
    GainBias eval = policy_gain_bias(flatten(chain), alp.policy);
    CHECK(eval.gain == doctest::Approx(exact.gain).epsilon(1e-6));
}

TEST_CASE("alp upper-bounds the exact gain") {
    Rng rng = make_rng(52);
    for (int trial = 0; trial < 10; ++trial) {
        FactoredMdp env = random_fmdp(rng, 2, 3, 3);
        PlanResult exact = plan(env, {PlannerKind::exact, 1e-9});
        PlanResult alp = plan(env, {PlannerKind::alp});
        CHECK(alp.gain >= exact.gain - 1e-6);
    }
}

TEST_CASE("alp policy is near optimal on the four-machine ring") {
    FactoredMdp env = build_sysadmin({});
    PlanResult exact = plan(env, {PlannerKind::exact, 1e-10});
    PlanResult alp = plan(env, {PlannerKind::alp});
    CHECK(alp.gain >= exact.gain - 1e-6);
    GainBias eval = policy_gain_bias(flatten(env), alp.policy);
    CHECK(eval.gain >= 0.95 * exact.gain);
}

TEST_CASE("zero weights act myopically") {
    Rng rng = make_rng(53);
    FactoredMdp env = random_fmdp(rng, 2, 3, 3);
    indvec pol = greedy_from_weights(env, numvec(ScopeSet(env.spec.state_components()).size(), 0.0));
    size_t S = env.num_states(), A = env.num_actions();
    for (size_t s = 0; s < S; ++s) {
        double best = -1.0;
        size_t best_a = 0;
        for (size_t a = 0; a < A; ++a) {
            double r = expected_reward(env, s, a);
            if (r > best + 1e-14) {
                best = r;
                best_a = a;
            }
        }
        CHECK(pol[s] == long(best_a));
    }
    CHECK_THROWS_AS(greedy_from_weights(env, numvec(7, 0.0)), ValidationError);
}

TEST_CASE("complete-basis weights recover the exact greedy policy") {
    FactoredMdp chain = build_chain_product({1, 0.1, 0.05, 2});
    PlanResult exact = plan(chain, {PlannerKind::exact, 1e-10});
    // with basis h(s) = s on two states, the weight is the bias difference
    indvec pol = greedy_from_weights(chain, {exact.bias[1] - exact.bias[0]});
    CHECK(pol == exact.policy);
}

TEST_CASE("exact plan agrees with exhaustive search on a small ring") {
    FactoredMdp env = build_sysadmin({Topology::circle, 3});
    PlanResult exact = plan(env, {PlannerKind::exact, 1e-9});
    SolveReport bf = brute_force_optimal(flatten(env));
    CHECK(std::abs(exact.gain - bf.gain) <= 1e-6);
}

TEST_CASE("exact plan satisfies the optimality equation on circle-4") {
    FactoredMdp env = build_sysadmin({});
    PlanResult res = plan(env, {PlannerKind::exact, 1e-9});
    TabularMdp flat = flatten(env);
    double sp = span(res.bias);
    for (size_t s = 0; s < flat.num_states; ++s) {
        double best = -std::numeric_limits<double>::infinity();
        for (size_t a = 0; a < flat.num_actions; ++a) {
            double val = flat.rew(s, a);
            for (size_t s2 = 0; s2 < flat.num_states; ++s2)
                val += flat.prob(s, a, s2) * res.bias[s2];
            best = std::max(best, val);
        }
        CHECK(std::abs(res.gain + res.bias[s] - best) <= 1e-6 * (1.0 + sp));
    }
}

TEST_CASE("extended kernel matches the flattened route") {
    FactoredMdp env = build_sysadmin({Topology::circle, 3});
    VisitStatistics st = make_statistics(env);
    Rng rng = make_rng(54);
    std::uniform_int_distribution<size_t> act(0, env.num_actions() - 1);
    size_t s = env.num_states() - 1;
    for (size_t t = 0; t < 800; ++t) {
        size_t a = act(rng);
        StepResult step = sample_step(env, s, a, rng);
        record_step(st, env, s, a, step.next_state, step.factor_rewards);
        s = step.next_state;
    }
    EmpiricalModel emp = empirical_model(st, env);
    WidthTables w = width_tables(st, env, emp, st.t, 0.05);
    ExtendedFmdp ext = build_extended(env, emp, w);

    PlannerChoice choice{PlannerKind::exact, 1e-9};
    PlanResult kernel = plan_extended(ext, choice);
    TabularMdp flat = flatten(ext.ext);
    PlanResult direct = plan_tabular(flat, choice);
    CHECK(std::abs(kernel.gain - direct.gain) <= 1e-7);
    GainBias ek = policy_gain_bias(flat, kernel.policy);
    GainBias ed = policy_gain_bias(flat, direct.policy);
    CHECK(std::abs(ek.gain - ed.gain) <= 1e-7);
    CHECK(kernel.policy == direct.policy);

    PlanResult warm = plan_extended(ext, choice, &kernel.bias);
    CHECK(std::abs(warm.gain - kernel.gain) <= 1e-7);
    CHECK(warm.iterations <= kernel.iterations);
}

}  // TEST_SUITE
