#include "frl/solve.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace frl {

namespace {

constexpr double kEdgeEps = 1e-15;

/// One full optimality sweep with the aperiodicity transform:
/// out(s) = max_a [R(s,a) + tau*V(s) + (1-tau) * P(s,a)V], greedy argmax
/// with lowest-index ties.
void bellman_sweep(const TabularMdp& mdp, double tau, const numvec& v,
                   numvec& out, indvec& policy) {
    size_t S = mdp.num_states, A = mdp.num_actions;
    for (size_t s = 0; s < S; ++s) {
        double best = -std::numeric_limits<double>::infinity();
        size_t best_a = 0;
        for (size_t a = 0; a < A; ++a) {
            const double* row = mdp.row(s, a);
            double ev = 0.0;
            for (size_t s2 = 0; s2 < S; ++s2) ev += row[s2] * v[s2];
            double val = mdp.rew(s, a) + (1.0 - tau) * ev;
            if (val > best + 1e-14) {
                best = val;
                best_a = a;
            }
        }
        out[s] = best + tau * v[s];
        policy[s] = long(best_a);
    }
}

}  // namespace

SolveReport solve_average_reward(const TabularMdp& mdp, double tol,
                                 size_t max_iters, double tau,
                                 const numvec* warm) {
    size_t S = mdp.num_states, A = mdp.num_actions;
    if (S == 0 || A == 0)
        throw ValidationError("solve_average_reward: empty model");
    if (tau <= 0.0 || tau >= 1.0)
        throw ValidationError("solve_average_reward: tau must be in (0,1)");

    numvec v(S, 0.0);
    if (warm && warm->size() == S)
        for (size_t s = 0; s < S; ++s) v[s] = (*warm)[s] / (1.0 - tau);
    numvec tv(S, 0.0);
    indvec policy(S, 0);

    // Between optimality sweeps, a few evaluation sweeps of the greedy
    // policy speed convergence without touching the stopping certificate.
    const size_t eval_sweeps = 20;
    numvec rpi(S, 0.0);

    SolveReport rep;
    double lo = 0.0, hi = 0.0;
    for (size_t it = 0; it < max_iters; ++it) {
        bellman_sweep(mdp, tau, v, tv, policy);
        rep.iterations = it + 1;
        lo = std::numeric_limits<double>::infinity();
        hi = -lo;
        for (size_t s = 0; s < S; ++s) {
            double d = tv[s] - v[s];
            lo = std::min(lo, d);
            hi = std::max(hi, d);
        }
        // The certificate holds for the pre-sweep v and its greedy policy:
        // R(pi) + P(pi)h - h = TV - V componentwise, so the span test bounds
        // the Bellman residual of (gain, h) directly.
        if (hi - lo <= 2.0 * tol) break;
        double shift = tv[0];
        for (size_t s = 0; s < S; ++s) v[s] = tv[s] - shift;

        for (size_t k = 0; k < eval_sweeps; ++k) {
            for (size_t s = 0; s < S; ++s) {
                const double* row = mdp.row(s, size_t(policy[s]));
                double ev = 0.0;
                for (size_t s2 = 0; s2 < S; ++s2) ev += row[s2] * v[s2];
                tv[s] = mdp.rew(s, size_t(policy[s])) + tau * v[s] +
                        (1.0 - tau) * ev;
            }
            double shift2 = tv[0];
            for (size_t s = 0; s < S; ++s) v[s] = tv[s] - shift2;
        }
        if (it + 1 == max_iters)
            throw ConvergenceError("solve_average_reward: iteration cap hit",
                                   (hi - lo) / 2.0);
    }

    rep.gain = (hi + lo) / 2.0;
    rep.residual = (hi - lo) / 2.0;
    rep.policy = policy;
    rep.bias.resize(S);
    double v0 = v[0];
    for (size_t s = 0; s < S; ++s) rep.bias[s] = (1.0 - tau) * (v[s] - v0);
    return rep;
}

bool solve_linear(std::vector<numvec>& M, numvec& rhs) {
    size_t n = M.size();
    for (size_t col = 0; col < n; ++col) {
        size_t piv = col;
        for (size_t r = col + 1; r < n; ++r)
            if (std::abs(M[r][col]) > std::abs(M[piv][col])) piv = r;
        if (std::abs(M[piv][col]) < 1e-12) return false;
        std::swap(M[piv], M[col]);
        std::swap(rhs[piv], rhs[col]);
        double d = M[col][col];
        for (size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            double f = M[r][col] / d;
            if (f == 0.0) continue;
            for (size_t c = col; c < n; ++c) M[r][c] -= f * M[col][c];
            rhs[r] -= f * rhs[col];
        }
    }
    for (size_t i = 0; i < n; ++i) rhs[i] /= M[i][i];
    return true;
}

namespace {

/// Strongly connected components of the policy graph (iterative Tarjan),
/// plus which components are recurrent (no edge leaving the component).
struct ClassInfo {
    std::vector<indvec> recurrent;   // states of each recurrent class
    indvec class_of;                 // recurrent class per state, -1 transient
};

ClassInfo recurrent_classes(const TabularMdp& mdp, const indvec& policy) {
    size_t S = mdp.num_states;
    std::vector<indvec> adj(S);
    for (size_t s = 0; s < S; ++s) {
        const double* row = mdp.row(s, size_t(policy[s]));
        for (size_t s2 = 0; s2 < S; ++s2)
            if (row[s2] > kEdgeEps) adj[s].push_back(long(s2));
    }

    indvec index(S, -1), low(S, 0), comp(S, -1);
    std::vector<char> on_stack(S, 0);
    indvec stack;
    long next_index = 0, ncomp = 0;

    struct Frame {
        size_t v;
        size_t edge;
    };
    for (size_t root = 0; root < S; ++root) {
        if (index[root] != -1) continue;
        std::vector<Frame> call;
        call.push_back({root, 0});
        index[root] = low[root] = next_index++;
        stack.push_back(long(root));
        on_stack[root] = 1;
        while (!call.empty()) {
            Frame& f = call.back();
            if (f.edge < adj[f.v].size()) {
                size_t w = size_t(adj[f.v][f.edge++]);
                if (index[w] == -1) {
                    index[w] = low[w] = next_index++;
                    stack.push_back(long(w));
                    on_stack[w] = 1;
                    call.push_back({w, 0});
                } else if (on_stack[w]) {
                    low[f.v] = std::min(low[f.v], index[w]);
                }
            } else {
                if (low[f.v] == index[f.v]) {
                    while (true) {
                        size_t w = size_t(stack.back());
                        stack.pop_back();
                        on_stack[w] = 0;
                        comp[w] = ncomp;
                        if (w == f.v) break;
                    }
                    ++ncomp;
                }
                size_t child = f.v;
                call.pop_back();
                if (!call.empty())
                    low[call.back().v] =
                        std::min(low[call.back().v], low[child]);
            }
        }
    }

    std::vector<char> closed(size_t(ncomp), 1);
    for (size_t s = 0; s < S; ++s)
        for (long w : adj[s])
            if (comp[size_t(w)] != comp[s]) closed[size_t(comp[s])] = 0;

    ClassInfo info;
    info.class_of.assign(S, -1);
    indvec remap(size_t(ncomp), -1);
    for (size_t s = 0; s < S; ++s) {
        long c = comp[s];
        if (!closed[size_t(c)]) continue;
        if (remap[size_t(c)] == -1) {
            remap[size_t(c)] = long(info.recurrent.size());
            info.recurrent.emplace_back();
        }
        info.class_of[s] = remap[size_t(c)];
        info.recurrent[size_t(remap[size_t(c)])].push_back(long(s));
    }
    for (auto& cls : info.recurrent) std::sort(cls.begin(), cls.end());
    return info;
}

}  // namespace

GainBias policy_gain_bias(const TabularMdp& mdp, const indvec& policy,
                          double class_tol) {
    size_t S = mdp.num_states;
    if (policy.size() != S)
        throw ValidationError("policy_gain_bias: policy size mismatch");
    for (size_t s = 0; s < S; ++s)
        if (policy[s] < 0 || size_t(policy[s]) >= mdp.num_actions)
            throw ValidationError("policy_gain_bias: action out of range");

    ClassInfo info = recurrent_classes(mdp, policy);
    size_t C = info.recurrent.size();

    // Gain per recurrent class from its stationary distribution.
    numvec class_gain(C, 0.0);
    for (size_t c = 0; c < C; ++c) {
        const indvec& cls = info.recurrent[c];
        size_t k = cls.size();
        std::vector<numvec> M(k, numvec(k, 0.0));
        numvec rhs(k, 0.0);
        // (P_c^T - I) d = 0 with the last equation replaced by sum(d) = 1.
        for (size_t col = 0; col < k; ++col) {
            const double* row = mdp.row(size_t(cls[col]), size_t(policy[cls[col]]));
            for (size_t r = 0; r < k; ++r)
                M[r][col] = row[cls[r]] - (r == col ? 1.0 : 0.0);
        }
        for (size_t col = 0; col < k; ++col) M[k - 1][col] = 1.0;
        rhs[k - 1] = 1.0;
        if (!solve_linear(M, rhs))
            throw EvaluationError("policy_gain_bias: singular stationary system");
        double g = 0.0;
        for (size_t j = 0; j < k; ++j)
            g += rhs[j] * mdp.rew(size_t(cls[j]), size_t(policy[cls[j]]));
        class_gain[c] = g;
    }

    double gmin = *std::min_element(class_gain.begin(), class_gain.end());
    double gmax = *std::max_element(class_gain.begin(), class_gain.end());
    if (gmax - gmin > class_tol)
        throw EvaluationError(
            "policy_gain_bias: gain differs across recurrent classes");
    double gain = class_gain[0];

    // Bias within each recurrent class: (I - P_c) h = r - gain, pinned to 0
    // at the class's lowest state (the pinned state's equation is redundant
    // for an irreducible class and is dropped).
    numvec h(S, 0.0);
    for (size_t c = 0; c < C; ++c) {
        const indvec& cls = info.recurrent[c];
        size_t k = cls.size();
        if (k == 1) {
            h[size_t(cls[0])] = 0.0;
            continue;
        }
        std::vector<numvec> M(k - 1, numvec(k - 1, 0.0));
        numvec rhs(k - 1, 0.0);
        for (size_t r = 1; r < k; ++r) {
            size_t s = size_t(cls[r]);
            const double* row = mdp.row(s, size_t(policy[s]));
            for (size_t j = 1; j < k; ++j)
                M[r - 1][j - 1] =
                    (r == j ? 1.0 : 0.0) - row[size_t(cls[j])];
            rhs[r - 1] = mdp.rew(s, size_t(policy[s])) - gain;
        }
        if (!solve_linear(M, rhs))
            throw EvaluationError("policy_gain_bias: singular bias system");
        for (size_t j = 1; j < k; ++j) h[size_t(cls[j])] = rhs[j - 1];
    }

    // Transient states: (I - P_TT) h_T = r_T - gain + P_TR h_R.
    indvec transient;
    for (size_t s = 0; s < S; ++s)
        if (info.class_of[s] == -1) transient.push_back(long(s));
    if (!transient.empty()) {
        size_t k = transient.size();
        indvec pos(S, -1);
        for (size_t j = 0; j < k; ++j) pos[size_t(transient[j])] = long(j);
        std::vector<numvec> M(k, numvec(k, 0.0));
        numvec rhs(k, 0.0);
        for (size_t r = 0; r < k; ++r) {
            size_t s = size_t(transient[r]);
            const double* row = mdp.row(s, size_t(policy[s]));
            rhs[r] = mdp.rew(s, size_t(policy[s])) - gain;
            for (size_t s2 = 0; s2 < S; ++s2) {
                if (row[s2] == 0.0) continue;
                if (pos[s2] >= 0)
                    M[r][size_t(pos[s2])] -= row[s2];
                else
                    rhs[r] += row[s2] * h[s2];
            }
            M[r][r] += 1.0;
        }
        if (!solve_linear(M, rhs))
            throw EvaluationError("policy_gain_bias: singular transient system");
        for (size_t j = 0; j < k; ++j) h[size_t(transient[j])] = rhs[j];
    }

    double h0 = h[0];
    for (double& v : h) v -= h0;
    return GainBias{gain, h};
}

DiameterResult diameter(const TabularMdp& mdp, double cap) {
    size_t S = mdp.num_states, A = mdp.num_actions;
    DiameterResult out;
    if (S <= 1) return out;

    // Any-action predecessor lists for the reachability prepass.
    std::vector<indvec> pred(S);
    for (size_t s = 0; s < S; ++s)
        for (size_t a = 0; a < A; ++a) {
            const double* row = mdp.row(s, a);
            for (size_t s2 = 0; s2 < S; ++s2)
                if (s2 != s && row[s2] > kEdgeEps) pred[s2].push_back(long(s));
        }
    for (auto& p : pred) {
        std::sort(p.begin(), p.end());
        p.erase(std::unique(p.begin(), p.end()), p.end());
    }

    numvec e(S), next(S);
    for (size_t target = 0; target < S; ++target) {
        std::vector<char> reach(S, 0);
        reach[target] = 1;
        std::deque<size_t> queue{target};
        while (!queue.empty()) {
            size_t v = queue.front();
            queue.pop_front();
            for (long p : pred[v])
                if (!reach[size_t(p)]) {
                    reach[size_t(p)] = 1;
                    queue.push_back(size_t(p));
                }
        }
        for (size_t s = 0; s < S; ++s)
            if (!reach[s]) {
                out.infinite = true;
                out.worst_from = s;
                out.worst_to = target;
                return out;
            }

        std::fill(e.begin(), e.end(), 0.0);
        size_t max_iters = size_t(cap);
        bool converged = false;
        for (size_t it = 0; it < max_iters; ++it) {
            double delta = 0.0, emax = 0.0;
            for (size_t s = 0; s < S; ++s) {
                if (s == target) {
                    next[s] = 0.0;
                    continue;
                }
                double best = std::numeric_limits<double>::infinity();
                for (size_t a = 0; a < A; ++a) {
                    const double* row = mdp.row(s, a);
                    double v = 1.0;
                    for (size_t s2 = 0; s2 < S; ++s2)
                        if (s2 != target) v += row[s2] * e[s2];
                    best = std::min(best, v);
                }
                next[s] = best;
                delta = std::max(delta, std::abs(next[s] - e[s]));
                emax = std::max(emax, next[s]);
            }
            e.swap(next);
            if (emax > cap) {
                out.infinite = true;
                out.worst_to = target;
                for (size_t s = 0; s < S; ++s)
                    if (e[s] > cap) { out.worst_from = s; break; }
                return out;
            }
            if (delta <= 1e-11 * (1.0 + emax)) {
                converged = true;
                break;
            }
        }
        if (!converged) {
            out.infinite = true;
            out.worst_to = target;
            return out;
        }
        for (size_t s = 0; s < S; ++s)
            if (s != target && e[s] > out.diameter) {
                out.diameter = e[s];
                out.worst_from = s;
                out.worst_to = target;
            }
    }
    return out;
}

double span(const numvec& h) {
    if (h.empty()) return 0.0;
    auto [lo, hi] = std::minmax_element(h.begin(), h.end());
    return *hi - *lo;
}

SpanProfile factored_span(const numvec& h, const sizvec& sizes) {
    size_t S = 1;
    for (size_t z : sizes) S *= z;
    if (h.size() != S)
        throw ValidationError("factored_span: h does not match sizes");

    SpanProfile out;
    out.total_span = span(h);
    out.factor_spans.assign(sizes.size(), 0.0);

    size_t stride = 1;
    for (size_t i = 0; i < sizes.size(); ++i) {
        size_t size = sizes[i];
        size_t rest = S / size;
        double worst = 0.0;
        // Enumerate assignments of the other components; the flat index of
        // (v, rest) is lowpart + v*stride + highpart*stride*size.
        for (size_t r = 0; r < rest; ++r) {
            size_t low = r % stride, high = r / stride;
            size_t base = low + high * stride * size;
            double mn = h[base], mx = h[base];
            for (size_t v = 1; v < size; ++v) {
                double val = h[base + v * stride];
                mn = std::min(mn, val);
                mx = std::max(mx, val);
            }
            worst = std::max(worst, mx - mn);
        }
        out.factor_spans[i] = worst;
        out.q += worst;
        stride *= size;
    }
    return out;
}

bool check_span_bounds(const numvec& h, const sizvec& sizes, double slack) {
    SpanProfile p = factored_span(h, sizes);
    double m = double(sizes.size());
    return p.total_span <= p.q + slack && p.q <= m * p.total_span + slack;
}

SolveReport brute_force_optimal(const TabularMdp& mdp, size_t cap,
                                double gain_tol) {
    size_t S = mdp.num_states, A = mdp.num_actions;
    double total = std::pow(double(A), double(S));
    if (total > double(cap))
        throw SizeError("brute_force_optimal: policy count exceeds cap");

    SolveReport best;
    best.gain = -std::numeric_limits<double>::infinity();
    double best_span = -1.0;
    indvec policy(S, 0);
    size_t count = size_t(total + 0.5);
    for (size_t code = 0; code < count; ++code) {
        size_t c = code;
        for (size_t s = 0; s < S; ++s) {
            policy[s] = long(c % A);
            c /= A;
        }
        GainBias gb;
        try {
            gb = policy_gain_bias(mdp, policy);
        } catch (const EvaluationError&) {
            continue;  // gain not start-state independent; outside the class
        }
        double sp = span(gb.bias);
        if (gb.gain > best.gain + gain_tol ||
            (gb.gain > best.gain - gain_tol && sp > best_span)) {
            best.gain = gb.gain;
            best.bias = gb.bias;
            best.policy = policy;
            best_span = sp;
        }
        ++best.iterations;
    }
    if (best.policy.empty())
        throw EvaluationError("brute_force_optimal: no evaluable policy");
    return best;
}

}  // namespace frl
