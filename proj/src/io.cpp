#include "frl/io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "frl/common.hpp"

namespace frl {
namespace {

using nlohmann::json;

std::string tuple_key(const sizvec& vals) {
    std::string key;
    for (size_t k = 0; k < vals.size(); ++k) {
        if (k) key += ',';
        key += std::to_string(vals[k]);
    }
    return key;
}

json scope_to_json(const ScopeSet& scope) {
    json arr = json::array();
    for (size_t c : scope) arr.push_back(c + 1);
    return arr;
}

ScopeSet scope_from_json(const json& arr, size_t num_components,
                         const char* what) {
    if (!arr.is_array())
        throw ValidationError(std::string(what) + ": scope must be an array");
    ScopeSet scope;
    for (const auto& v : arr) {
        long idx = v.get<long>();
        if (idx < 1 || size_t(idx) > num_components)
            throw ValidationError(std::string(what) +
                                  ": scope index out of range (1-based): " +
                                  std::to_string(idx));
        scope.push_back(size_t(idx) - 1);
    }
    return scope;
}

const char* kind_name(RewardKind k) {
    switch (k) {
        case RewardKind::bernoulli:
            return "bernoulli";
        case RewardKind::truncated_gaussian:
            return "truncated_gaussian";
        case RewardKind::deterministic:
            break;
    }
    return "deterministic";
}

RewardKind kind_from_name(const std::string& name) {
    if (name == "deterministic") return RewardKind::deterministic;
    if (name == "bernoulli") return RewardKind::bernoulli;
    if (name == "truncated_gaussian") return RewardKind::truncated_gaussian;
    throw ValidationError("unknown reward kind: " + name);
}

}  // namespace

std::string fmdp_to_json(const FactoredMdp& mdp) {
    const FactorSpec& spec = mdp.spec;
    json doc;
    json ssz = json::array();
    for (size_t c : spec.state_components())
        ssz.push_back(spec.component_sizes[c]);
    doc["state_factor_sizes"] = ssz;
    doc["component_sizes"] = spec.component_sizes;
    json act = json::array();
    for (size_t c : spec.action_components) act.push_back(c + 1);
    doc["action_component_indices"] = act;

    ScopeSet state_comps = spec.state_components();
    json tf = json::array();
    for (size_t i = 0; i < mdp.transition.factors.size(); ++i) {
        const TransitionFactor& f = mdp.transition.factors[i];
        size_t si = i < state_comps.size()
                        ? spec.component_sizes[state_comps[i]]
                        : 0;
        size_t tab = scope_table_size(spec, f.scope);
        json table = json::object();
        for (size_t x = 0; x < tab; ++x) {
            json row = json::array();
            for (size_t s = 0; s < si; ++s) row.push_back(f.table[x * si + s]);
            table[tuple_key(scope_values(spec, f.scope, x))] = row;
        }
        tf.push_back(json{{"scope", scope_to_json(f.scope)}, {"table", table}});
    }
    doc["transition"] = tf;

    json rf = json::array();
    for (const RewardFactor& f : mdp.reward.factors) {
        size_t tab = scope_table_size(spec, f.scope);
        json table = json::object();
        for (size_t x = 0; x < tab; ++x)
            table[tuple_key(scope_values(spec, f.scope, x))] = f.means[x];
        json obj{{"scope", scope_to_json(f.scope)},
                 {"kind", kind_name(f.kind)},
                 {"table", table}};
        if (f.kind == RewardKind::truncated_gaussian) obj["sigma"] = f.sigma;
        rf.push_back(obj);
    }
    doc["reward"] = rf;
    return doc.dump(2) + "\n";
}

FactoredMdp fmdp_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("malformed JSON: ") + e.what());
    }
    if (!doc.is_object())
        throw ValidationError("top-level JSON value must be an object");
    if (!doc.contains("component_sizes") ||
        !doc.contains("action_component_indices") ||
        !doc.contains("transition") || !doc.contains("reward"))
        throw ValidationError(
            "document needs component_sizes, action_component_indices, "
            "transition and reward");

    FactoredMdp mdp;
    FactorSpec& spec = mdp.spec;
    for (const auto& v : doc["component_sizes"]) {
        long s = v.get<long>();
        if (s < 1)
            throw ValidationError("component sizes must be positive");
        spec.component_sizes.push_back(size_t(s));
    }
    spec.action_components = scope_from_json(doc["action_component_indices"],
                                             spec.num_components(),
                                             "action_component_indices");
    std::sort(spec.action_components.begin(), spec.action_components.end());
    if (std::adjacent_find(spec.action_components.begin(),
                           spec.action_components.end()) !=
        spec.action_components.end())
        throw ValidationError("duplicate action component index");

    ScopeSet state_comps = spec.state_components();
    if (doc.contains("state_factor_sizes")) {
        const json& ssz = doc["state_factor_sizes"];
        if (ssz.size() != state_comps.size())
            throw ValidationError(
                "state_factor_sizes disagrees with component layout");
        for (size_t i = 0; i < state_comps.size(); ++i)
            if (ssz[i].get<long>() !=
                long(spec.component_sizes[state_comps[i]]))
                throw ValidationError(
                    "state_factor_sizes disagrees with component_sizes");
    }

    const json& tf = doc["transition"];
    if (!tf.is_array() || tf.size() != state_comps.size())
        throw ValidationError(
            "need exactly one transition factor per state component");
    for (size_t i = 0; i < state_comps.size(); ++i) {
        const json& jf = tf[i];
        TransitionFactor f;
        f.scope = scope_from_json(jf.at("scope"), spec.num_components(),
                                  "transition scope");
        size_t si = spec.component_sizes[state_comps[i]];
        size_t tab = scope_table_size(spec, f.scope);
        const json& table = jf.at("table");
        if (!table.is_object())
            throw ValidationError("transition table must be an object");
        f.table.assign(tab * si, 0.0);
        for (size_t x = 0; x < tab; ++x) {
            std::string key = tuple_key(scope_values(spec, f.scope, x));
            if (!table.contains(key))
                throw ValidationError("transition factor " +
                                      std::to_string(i + 1) +
                                      " misses table row " + key);
            const json& row = table[key];
            if (!row.is_array() || row.size() != si)
                throw ValidationError("transition row " + key +
                                      " must hold " + std::to_string(si) +
                                      " probabilities");
            for (size_t s = 0; s < si; ++s)
                f.table[x * si + s] = row[s].get<double>();
        }
        if (table.size() != tab)
            throw ValidationError("transition factor " +
                                  std::to_string(i + 1) +
                                  " has extra table rows");
        mdp.transition.factors.push_back(std::move(f));
    }

    const json& rf = doc["reward"];
    if (!rf.is_array() || rf.empty())
        throw ValidationError("need at least one reward factor");
    for (size_t i = 0; i < rf.size(); ++i) {
        const json& jf = rf[i];
        RewardFactor f;
        f.scope = scope_from_json(jf.at("scope"), spec.num_components(),
                                  "reward scope");
        if (jf.contains("kind"))
            f.kind = kind_from_name(jf["kind"].get<std::string>());
        if (jf.contains("sigma")) f.sigma = jf["sigma"].get<double>();
        size_t tab = scope_table_size(spec, f.scope);
        const json& table = jf.at("table");
        if (!table.is_object())
            throw ValidationError("reward table must be an object");
        f.means.assign(tab, 0.0);
        for (size_t x = 0; x < tab; ++x) {
            std::string key = tuple_key(scope_values(spec, f.scope, x));
            if (!table.contains(key))
                throw ValidationError("reward factor " + std::to_string(i + 1) +
                                      " misses table entry " + key);
            f.means[x] = table[key].get<double>();
        }
        if (table.size() != tab)
            throw ValidationError("reward factor " + std::to_string(i + 1) +
                                  " has extra table entries");
        mdp.reward.factors.push_back(std::move(f));
    }
    return mdp;
}

void save_fmdp(const FactoredMdp& mdp, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot open for writing: " + path);
    out << fmdp_to_json(mdp);
    if (!out) throw ValidationError("write failed: " + path);
}

FactoredMdp load_fmdp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return fmdp_from_json(buf.str());
}

}  // namespace frl
