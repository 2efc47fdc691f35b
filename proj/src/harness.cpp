#include "frl/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "frl/envs.hpp"
#include "frl/io.hpp"
#include "frl/planners.hpp"
#include "frl/solve.hpp"

namespace frl {
namespace {

using nlohmann::json;

std::string fmt12(double v) {
    char b[40];
    std::snprintf(b, sizeof b, "%.12g", v);
    return b;
}

std::string fmtg(double v) {
    char b[40];
    std::snprintf(b, sizeof b, "%g", v);
    return b;
}

[[noreturn]] void parse_fail(const std::string& text, size_t byte,
                             const std::string& msg) {
    size_t line = 1, col = 1;
    for (size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    throw ValidationError("config line " + std::to_string(line) + ", column " +
                          std::to_string(col) + ": " + msg);
}

FactoredMdp resolve_environment(const json& e, std::string& label) {
    if (e.is_string()) {
        std::string p = e.get<std::string>();
        label = std::filesystem::path(p).stem().string();
        return load_fmdp(p);
    }
    if (!e.is_object())
        throw ValidationError(
            "environment must be a file path or a generator object");
    if (e.contains("file")) {
        std::string p = e["file"].get<std::string>();
        label = std::filesystem::path(p).stem().string();
        return load_fmdp(p);
    }
    std::string kind = e.value("kind", std::string("sysadmin"));
    if (kind == "sysadmin") {
        SysadminSpec s;
        std::string topo = e.value("topology", std::string("circle"));
        if (topo == "circle")
            s.topology = Topology::circle;
        else if (topo == "three-leg")
            s.topology = Topology::three_leg;
        else
            throw ValidationError("unknown topology: " + topo);
        s.size = e.value("size", size_t(4));
        s.alpha1 = e.value("alpha1", 0.1);
        s.alpha2 = e.value("alpha2", 0.1);
        s.reboot_success = e.value("reboot_success", 0.95);
        s.noise_seed = e.value("noise_seed", uint64_t(1));
        label = topo + "-" + std::to_string(s.size);
        return build_sysadmin(s);
    }
    if (kind == "product-circle") {
        size_t copies = e.value("copies", size_t(2));
        size_t cycle = e.value("cycle_len", size_t(4));
        label = "product-circle-" + std::to_string(copies) + "x" +
                std::to_string(cycle);
        return build_product_circle(copies, cycle);
    }
    if (kind == "chain-product") {
        ChainSpec s;
        s.copies = e.value("copies", size_t(2));
        s.delta = e.value("delta", 0.1);
        s.eps = e.value("eps", 0.05);
        s.actions = e.value("actions", size_t(2));
        label = "chain-product-" + std::to_string(s.copies);
        return build_chain_product(s);
    }
    throw ValidationError("unknown environment kind: " + kind);
}

AgentKind agent_kind(const std::string& s) {
    if (s == "dorl") return AgentKind::dorl;
    if (s == "psrl") return AgentKind::psrl;
    if (s == "frmax") return AgentKind::frmax;
    if (s == "fsrl") return AgentKind::fsrl;
    throw ValidationError("unknown agent kind: " + s);
}

numvec number_list(const json& v, const std::string& what) {
    numvec out;
    if (v.is_array())
        for (const auto& x : v) out.push_back(x.get<double>());
    else
        out.push_back(v.get<double>());
    if (out.empty())
        throw ValidationError(what + ": sweep list must not be empty");
    return out;
}

size_t worker_count(size_t configured) {
    if (configured) return configured;
    if (const char* env = std::getenv("FRL_WORKERS")) {
        long v = std::atol(env);
        if (v >= 1) return size_t(v);
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc ? hc : 1;
}

}  // namespace

ExperimentConfig parse_experiment(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        parse_fail(text, e.byte, e.what());
    }
    if (!doc.is_object())
        throw ValidationError("config must be a JSON object");

    ExperimentConfig cfg;
    if (!doc.contains("environment"))
        throw ValidationError("config needs an environment");
    cfg.env = resolve_environment(doc["environment"], cfg.env_label);
    cfg.T = doc.value("T", uint64_t(100000));
    if (cfg.T < 1) throw ValidationError("T must be at least 1");
    cfg.L = doc.value("L", uint64_t(0));
    cfg.num_seeds = doc.value("num_seeds", size_t(20));
    if (cfg.num_seeds < 1)
        throw ValidationError("num_seeds must be at least 1");
    cfg.master_seed = doc.value("master_seed", uint64_t(1));
    cfg.out_dir = doc.value("out_dir", std::string("results"));
    cfg.log_stride = doc.value("log_stride", uint64_t(100));
    cfg.workers = doc.value("workers", size_t(0));
    cfg.initial_state = doc.value("initial_state", long(-1));
    double rho = doc.value("rho", 0.05);
    if (!(rho > 0.0 && rho < 1.0))
        throw ValidationError("rho must lie in (0, 1)");

    if (!doc.contains("agents") || !doc["agents"].is_array() ||
        doc["agents"].empty())
        throw ValidationError("config needs a nonempty agents array");
    for (size_t ai = 0; ai < doc["agents"].size(); ++ai) {
        const json& a = doc["agents"][ai];
        std::string ctx = "agents[" + std::to_string(ai) + "]";
        if (!a.is_object() || !a.contains("kind"))
            throw ValidationError(ctx + " needs a kind");
        AgentConfig base;
        base.kind = agent_kind(a["kind"].get<std::string>());
        base.rho = a.value("rho", rho);
        if (!(base.rho > 0.0 && base.rho < 1.0))
            throw ValidationError(ctx + ".rho must lie in (0, 1)");
        base.span_budget = a.value("span_budget", 10.0);
        base.candidates = a.value("candidates", size_t(128));
        std::string planner = a.value("planner", std::string("exact"));
        if (planner == "exact")
            base.planner.kind = PlannerKind::exact;
        else if (planner == "alp")
            base.planner.kind = PlannerKind::alp;
        else
            throw ValidationError(ctx + ": unknown planner: " + planner);
        base.planner.tol = a.value("planner_tol", 1e-8);

        std::string name = a["kind"].get<std::string>();
        if (base.kind == AgentKind::dorl || base.kind == AgentKind::psrl) {
            if (a.contains("c")) {
                numvec cs = number_list(a["c"], ctx + ".c");
                for (size_t k = 0; k < cs.size(); ++k) {
                    if (!(cs[k] > 0.0))
                        throw ValidationError(ctx +
                                              ".c values must be positive");
                    PlannedAgent p{name, fmtg(cs[k]), ai, k, base};
                    p.cfg.c = cs[k];
                    cfg.agents.push_back(std::move(p));
                }
            } else {
                cfg.agents.push_back(PlannedAgent{name, "default", ai, 0,
                                                  base});
            }
        } else if (base.kind == AgentKind::frmax) {
            std::vector<uint64_t> ms;
            if (a.contains("m_known")) {
                const json& v = a["m_known"];
                if (v.is_array())
                    for (const auto& x : v) ms.push_back(x.get<uint64_t>());
                else
                    ms.push_back(v.get<uint64_t>());
                if (ms.empty())
                    throw ValidationError(
                        ctx + ".m_known: sweep list must not be empty");
            } else {
                ms.push_back(300);
            }
            for (size_t k = 0; k < ms.size(); ++k) {
                if (ms[k] < 1)
                    throw ValidationError(ctx +
                                          ".m_known values must be at least 1");
                PlannedAgent p{name, std::to_string(ms[k]), ai, k, base};
                p.cfg.m_known = ms[k];
                cfg.agents.push_back(std::move(p));
            }
        } else {
            cfg.agents.push_back(
                PlannedAgent{name, fmtg(base.span_budget), ai, 0, base});
        }
    }
    return cfg;
}

ExperimentConfig load_experiment(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_experiment(buf.str());
}

RegretSeries compute_regret(const numvec& rewards, double gain) {
    RegretSeries rs;
    rs.gain = gain;
    rs.cum_reward.resize(rewards.size());
    rs.cum_regret.resize(rewards.size());
    double acc = 0.0;
    for (size_t t = 0; t < rewards.size(); ++t) {
        acc += rewards[t];
        rs.cum_reward[t] = acc;
        rs.cum_regret[t] = double(t + 1) * gain - acc;
    }
    return rs;
}

QuantileRow quantiles_25_50_75(numvec values) {
    if (values.empty())
        throw ValidationError("quantiles of an empty value set");
    std::sort(values.begin(), values.end());
    auto q = [&](double p) {
        double h = double(values.size() - 1) * p;
        size_t lo = size_t(h);
        size_t hi = std::min(lo + 1, values.size() - 1);
        return values[lo] + (h - double(lo)) * (values[hi] - values[lo]);
    };
    QuantileRow row;
    row.q25 = q(0.25);
    row.q50 = q(0.50);
    row.q75 = q(0.75);
    return row;
}

std::vector<QuantileRow> aggregate_quantiles(
    const std::vector<numvec>& series) {
    if (series.empty()) throw ValidationError("no series to aggregate");
    size_t len = series.front().size();
    for (const auto& s : series)
        if (s.size() != len)
            throw ValidationError("aggregated series lengths differ");
    std::vector<QuantileRow> rows(len);
    numvec tmp(series.size());
    for (size_t p = 0; p < len; ++p) {
        for (size_t k = 0; k < series.size(); ++k) tmp[k] = series[k][p];
        rows[p] = quantiles_25_50_75(tmp);
    }
    return rows;
}

std::vector<uint64_t> log_points(uint64_t T, uint64_t L, uint64_t stride) {
    if (T < 1 || T > (uint64_t(1) << 32))
        throw ValidationError("T out of supported range");
    EpisodeSchedule sch = make_schedule(T, L);
    std::vector<char> mark(size_t(T) + 1, 0);
    if (stride >= 1)
        for (uint64_t t = stride; t <= T; t += stride) mark[size_t(t)] = 1;
    uint64_t acc = 0;
    for (uint64_t len : sch.lengths) {
        acc += len;
        mark[size_t(acc)] = 1;
    }
    mark.back() = 1;
    std::vector<uint64_t> pts;
    for (uint64_t t = 1; t <= T; ++t)
        if (mark[size_t(t)]) pts.push_back(t);
    return pts;
}

uint64_t run_seed(uint64_t master_seed, size_t agent_index, size_t sweep_index,
                  size_t seed_index) {
    return hash64({master_seed, uint64_t(agent_index), uint64_t(sweep_index),
                   uint64_t(seed_index)});
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    if (cfg.T < 1) throw ValidationError("T must be at least 1");
    if (cfg.num_seeds < 1)
        throw ValidationError("num_seeds must be at least 1");
    if (cfg.agents.empty()) throw ValidationError("no agents configured");
    ValidationReport rep = validate(cfg.env);
    if (!rep.ok())
        throw ValidationError("environment invalid: " + rep.problems.front());

    ExperimentResult res;
    res.L = cfg.L ? cfg.L : cfg.env.max_scope_table();
    PlanResult opt = plan(cfg.env, PlannerChoice{});
    res.gain = opt.gain;

    const size_t S = cfg.env.num_states();
    size_t init = cfg.initial_state >= 0 ? size_t(cfg.initial_state) : S - 1;
    if (init >= S) throw ValidationError("initial state out of range");

    res.points = log_points(cfg.T, res.L, cfg.log_stride);
    EpisodeSchedule sch = make_schedule(cfg.T, res.L);
    std::vector<size_t> ep_at(res.points.size());
    {
        size_t k = 0;
        for (size_t p = 0; p < res.points.size(); ++p) {
            while (k + 1 < sch.starts.size() &&
                   sch.starts[k + 1] <= res.points[p])
                ++k;
            ep_at[p] = k + 1;
        }
    }

    namespace fs = std::filesystem;
    fs::create_directories(fs::path(cfg.out_dir) / "runs");

    const size_t A = cfg.agents.size(), NS = cfg.num_seeds;
    res.cum_regret.assign(A, std::vector<numvec>(NS));
    res.cum_reward.assign(A, std::vector<numvec>(NS));
    res.planner_failures.assign(A, std::vector<size_t>(NS, 0));
    res.run_files.assign(A * NS, "");

    std::atomic<size_t> next{0};
    std::atomic<bool> failed{false};
    std::mutex err_mtx;
    std::exception_ptr first_error;

    auto work = [&]() {
        for (;;) {
            size_t k = next.fetch_add(1);
            if (k >= A * NS || failed.load()) return;
            const PlannedAgent& pa = cfg.agents[k / NS];
            size_t si = k % NS;
            try {
                uint64_t sd = run_seed(cfg.master_seed, pa.agent_index,
                                       pa.sweep_index, si);
                RunRecord rec =
                    run_agent(cfg.env, pa.cfg, cfg.T, res.L, sd, init);
                RegretSeries rs = compute_regret(rec.rewards, res.gain);
                numvec creg(res.points.size()), crew(res.points.size());
                for (size_t p = 0; p < res.points.size(); ++p) {
                    creg[p] = rs.cum_regret[size_t(res.points[p]) - 1];
                    crew[p] = rs.cum_reward[size_t(res.points[p]) - 1];
                }
                fs::path path = fs::path(cfg.out_dir) / "runs" /
                                (pa.name + "_" + pa.param + "_seed" +
                                 std::to_string(si) + ".csv");
                std::ofstream outf(path);
                if (!outf)
                    throw ValidationError("cannot write " + path.string());
                outf << "agent,param,seed,t,episode,cum_reward,cum_regret\n";
                for (size_t p = 0; p < res.points.size(); ++p)
                    outf << pa.name << ',' << pa.param << ',' << si << ','
                         << res.points[p] << ',' << ep_at[p] << ','
                         << fmt12(crew[p]) << ',' << fmt12(creg[p]) << "\n";
                if (!outf)
                    throw ValidationError("write failed: " + path.string());
                res.cum_regret[k / NS][si] = std::move(creg);
                res.cum_reward[k / NS][si] = std::move(crew);
                res.planner_failures[k / NS][si] = rec.planner_failures;
                res.run_files[k] = path.string();
            } catch (...) {
                std::lock_guard<std::mutex> g(err_mtx);
                if (!failed.exchange(true))
                    first_error = std::current_exception();
            }
        }
    };

    size_t nw = std::min(worker_count(cfg.workers), A * NS);
    std::vector<std::thread> pool;
    for (size_t i = 0; i + 1 < nw; ++i) pool.emplace_back(work);
    work();
    for (auto& th : pool) th.join();
    if (failed.load()) std::rethrow_exception(first_error);

    fs::path agg = fs::path(cfg.out_dir) / "aggregate.csv";
    {
        std::ofstream af(agg);
        if (!af) throw ValidationError("cannot write " + agg.string());
        af << "agent,param,t,q25,q50,q75\n";
        for (size_t a = 0; a < A; ++a) {
            auto rows = aggregate_quantiles(res.cum_regret[a]);
            for (size_t p = 0; p < rows.size(); ++p)
                af << cfg.agents[a].name << ',' << cfg.agents[a].param << ','
                   << res.points[p] << ',' << fmt12(rows[p].q25) << ','
                   << fmt12(rows[p].q50) << ',' << fmt12(rows[p].q75) << "\n";
        }
        if (!af) throw ValidationError("write failed: " + agg.string());
    }
    res.aggregate_file = agg.string();

    fs::path plot = fs::path(cfg.out_dir) / "plot.py";
    {
        std::ofstream pf(plot);
        if (!pf) throw ValidationError("cannot write " + plot.string());
        pf << R"PY(#!/usr/bin/env python3
# Plots median cumulative regret with interquartile bands from aggregate.csv.
import collections
import csv
import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
with open(os.path.join(here, "aggregate.csv")) as f:
    rows = list(csv.DictReader(f))
series = collections.defaultdict(list)
for r in rows:
    series[(r["agent"], r["param"])].append(
        (int(r["t"]), float(r["q25"]), float(r["q50"]), float(r["q75"])))
plt.figure(figsize=(7, 4.5))
for (agent, param), pts in sorted(series.items()):
    pts.sort()
    t = [p[0] for p in pts]
    (line,) = plt.plot(t, [p[2] for p in pts], label=f"{agent} {param}")
    plt.fill_between(t, [p[1] for p in pts], [p[3] for p in pts],
                     alpha=0.2, color=line.get_color())
plt.xlabel("t")
plt.ylabel("cumulative regret")
plt.legend()
plt.tight_layout()
plt.savefig(os.path.join(here, "regret.png"), dpi=150)
)PY";
    }
    res.plot_file = plot.string();
    return res;
}

int cli(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
    CLI::App app{"factored average-reward reinforcement learning toolkit"};
    app.require_subcommand(1);

    auto* run_cmd =
        app.add_subcommand("run", "run a regret experiment from a config");
    std::string config_path, out_override;
    size_t workers_override = 0;
    run_cmd->add_option("--config", config_path, "experiment config (JSON)")
        ->required();
    run_cmd->add_option("--workers", workers_override,
                        "parallel run workers (default: all cores)");
    run_cmd->add_option("--out", out_override, "output directory override");

    auto* gen_cmd =
        app.add_subcommand("gen-env", "write a benchmark environment file");
    std::string topology = "circle", gen_out;
    size_t size = 4, copies = 2, actions = 2;
    uint64_t gseed = 1;
    double alpha1 = 0.1, alpha2 = 0.1, reboot = 0.95;
    double delta = 0.1, geps = 0.05;
    gen_cmd->add_option("--topology", topology,
                        "circle|three-leg|product-circle|chain-product");
    gen_cmd->add_option(
        "--size", size,
        "machines (networks) or cycle length (product-circle)");
    gen_cmd->add_option("--seed", gseed, "noise seed (networks)");
    gen_cmd->add_option("--copies", copies, "copies (products)");
    gen_cmd->add_option("--alpha1", alpha1, "own-noise weight (networks)");
    gen_cmd->add_option("--alpha2", alpha2, "neighbor weight (networks)");
    gen_cmd->add_option("--reboot-success", reboot,
                        "reboot success probability (networks)");
    gen_cmd->add_option("--delta", delta, "switch probability (chains)");
    gen_cmd->add_option("--eps", geps, "good-action bonus (chains)");
    gen_cmd->add_option("--actions", actions, "actions per chain copy");
    gen_cmd->add_option("--out", gen_out, "output file")->required();

    auto* val_cmd =
        app.add_subcommand("validate", "check an environment file");
    std::string val_path;
    val_cmd->add_option("file", val_path, "environment file")->required();

    auto* ana_cmd = app.add_subcommand(
        "analyze", "print size, connectivity and planning quantities");
    std::string ana_path;
    double cap = 1e6;
    ana_cmd->add_option("file", ana_path, "environment file")->required();
    ana_cmd->add_option("--cap", cap, "diameter estimate cap");

    std::vector<std::string> full;
    full.reserve(args.size() + 1);
    full.push_back("frl");
    for (const auto& a : args) full.push_back(a);
    std::vector<const char*> argv;
    argv.reserve(full.size());
    for (const auto& s : full) argv.push_back(s.c_str());

    try {
        app.parse(int(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    try {
        if (run_cmd->parsed()) {
            ExperimentConfig c = load_experiment(config_path);
            if (workers_override) c.workers = workers_override;
            if (!out_override.empty()) c.out_dir = out_override;
            ExperimentResult r = run_experiment(c);
            out << "environment " << c.env_label << "\n";
            out << "gain " << fmt12(r.gain) << "\n";
            for (size_t a = 0; a < c.agents.size(); ++a) {
                numvec finals;
                for (const auto& s : r.cum_regret[a])
                    finals.push_back(s.back());
                QuantileRow q = quantiles_25_50_75(finals);
                out << c.agents[a].name << " " << c.agents[a].param
                    << " final_regret_q50 " << fmt12(q.q50) << "\n";
            }
            out << "wrote " << r.aggregate_file << "\n";
            return 0;
        }
        if (gen_cmd->parsed()) {
            FactoredMdp mdp;
            if (topology == "circle" || topology == "three-leg") {
                SysadminSpec s;
                s.topology = topology == "circle" ? Topology::circle
                                                  : Topology::three_leg;
                s.size = size;
                s.alpha1 = alpha1;
                s.alpha2 = alpha2;
                s.reboot_success = reboot;
                s.noise_seed = gseed;
                mdp = build_sysadmin(s);
            } else if (topology == "product-circle") {
                mdp = build_product_circle(copies, size);
            } else if (topology == "chain-product") {
                ChainSpec s;
                s.copies = copies;
                s.delta = delta;
                s.eps = geps;
                s.actions = actions;
                mdp = build_chain_product(s);
            } else {
                throw ValidationError("unknown topology: " + topology);
            }
            save_fmdp(mdp, gen_out);
            out << "wrote " << gen_out << "\n";
            return 0;
        }
        if (val_cmd->parsed()) {
            FactoredMdp mdp = load_fmdp(val_path);
            ValidationReport rep = validate(mdp);
            if (!rep.ok()) {
                for (const auto& p : rep.problems) err << p << "\n";
                return 1;
            }
            out << "ok\n";
            return 0;
        }
        if (ana_cmd->parsed()) {
            FactoredMdp mdp = load_fmdp(ana_path);
            TabularMdp tab = flatten(mdp);
            out << "S " << mdp.num_states() << "\n";
            out << "A " << mdp.num_actions() << "\n";
            out << "L " << mdp.max_scope_table() << "\n";
            out << "W " << mdp.max_factor_size() << "\n";
            DiameterResult d = diameter(tab, cap);
            out << "D "
                << (d.infinite ? std::string("infinite") : fmt12(d.diameter))
                << "\n";
            SolveReport sol = solve_average_reward(tab);
            out << "lambda " << fmt12(sol.gain) << "\n";
            out << "span " << fmt12(span(sol.bias)) << "\n";
            sizvec sizes;
            for (size_t c : mdp.spec.state_components())
                sizes.push_back(mdp.spec.component_sizes[c]);
            out << "Q " << fmt12(factored_span(sol.bias, sizes).q) << "\n";
            return 0;
        }
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}

}  // namespace frl
