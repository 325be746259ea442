#include "tmc/policy.hpp"

#include <fstream>

#include <fmt/format.h>

#include "tmc/errors.hpp"

namespace tmc {

using nlohmann::json;

const char* to_string(PolicyKind k) noexcept {
    switch (k) {
        case PolicyKind::Neural:
            return "neural";
        case PolicyKind::Tabular:
            return "tabular";
        case PolicyKind::Scripted:
            return "scripted";
    }
    return "?";
}

namespace {

bool compare(std::int64_t lhs, pctl::CompareOp op, std::int64_t rhs) {
    using pctl::CompareOp;
    switch (op) {
        case CompareOp::Eq:
            return lhs == rhs;
        case CompareOp::Ne:
            return lhs != rhs;
        case CompareOp::Lt:
            return lhs < rhs;
        case CompareOp::Le:
            return lhs <= rhs;
        case CompareOp::Gt:
            return lhs > rhs;
        case CompareOp::Ge:
            return lhs >= rhs;
    }
    return false;
}

// Resolved condition: comparisons carry feature indices.
bool holds(const FeatureSchema& schema, const pctl::StateFormula& f, StateView s) {
    return std::visit(
        [&](const auto& n) -> bool {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, pctl::True>) {
                return true;
            } else if constexpr (std::is_same_v<T, pctl::Comparison>) {
                return compare(s[*schema.index_of(n.feature)], n.op, n.value);
            } else if constexpr (std::is_same_v<T, pctl::And>) {
                return holds(schema, *n.lhs, s) && holds(schema, *n.rhs, s);
            } else if constexpr (std::is_same_v<T, pctl::Not>) {
                return !holds(schema, *n.operand, s);
            } else {
                return false;
            }
        },
        f.node);
}

// Rewrites quoted comparison atoms and rejects anything but comparisons,
// conjunction, negation and true.
pctl::StatePtr resolve_condition(const FeatureSchema& schema, const pctl::StatePtr& f) {
    return std::visit(
        [&](const auto& n) -> pctl::StatePtr {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, pctl::True>) {
                return f;
            } else if constexpr (std::is_same_v<T, pctl::Comparison>) {
                if (!schema.index_of(n.feature)) {
                    throw PolicyFormatError(fmt::format("rule condition names unknown feature '{}'", n.feature));
                }
                return f;
            } else if constexpr (std::is_same_v<T, pctl::Atom>) {
                pctl::StatePtr inner;
                try {
                    inner = pctl::parse_property(n.label);
                } catch (const Error&) {
                    throw PolicyFormatError(fmt::format("rule condition uses label \"{}\"", n.label));
                }
                if (!std::holds_alternative<pctl::Comparison>(inner->node)) {
                    throw PolicyFormatError(fmt::format("rule condition uses label \"{}\"", n.label));
                }
                return resolve_condition(schema, inner);
            } else if constexpr (std::is_same_v<T, pctl::And>) {
                return pctl::make_and(resolve_condition(schema, n.lhs), resolve_condition(schema, n.rhs));
            } else if constexpr (std::is_same_v<T, pctl::Not>) {
                return pctl::make_not(resolve_condition(schema, n.operand));
            } else {
                throw PolicyFormatError("probability operators are not allowed in rule conditions");
            }
        },
        f->node);
}

ActionId action_index(const std::vector<std::string>& actions, const std::string& name) {
    for (std::size_t i = 0; i < actions.size(); ++i) {
        if (actions[i] == name) return static_cast<ActionId>(i);
    }
    throw PolicyFormatError(fmt::format("unknown action '{}'", name));
}

std::vector<FeatureValue> state_key(StateView s) { return {s.begin(), s.end()}; }

}  // namespace

AgentPolicy::AgentPolicy(FeatureSchema schema, std::vector<std::string> actions, Body body)
    : schema_(std::move(schema)), actions_(std::move(actions)), body_(std::move(body)) {
    if (actions_.empty()) throw PolicyFormatError("policy has no actions");
    if (const auto* n = std::get_if<NeuralPolicy>(&body_)) {
        if (n->net.inputs() != schema_.size() || n->net.outputs() != actions_.size()) {
            throw PolicyFormatError(fmt::format("network shape {}->{} does not match {} features and {} actions",
                                                n->net.inputs(), n->net.outputs(), schema_.size(), actions_.size()));
        }
    }
}

ActionId argmax(const Eigen::VectorXd& q) {
    ActionId best = 0;
    for (Eigen::Index i = 1; i < q.size(); ++i) {
        if (q(i) > q(best)) best = static_cast<ActionId>(i);
    }
    return best;
}

ActionId AgentPolicy::greedy_action(StateView s) const {
    return std::visit(
        [&](const auto& b) -> ActionId {
            using T = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<T, NeuralPolicy>) {
                return argmax(b.net.forward(normalize(schema_, s)));
            } else if constexpr (std::is_same_v<T, TabularPolicy>) {
                auto it = b.table.find(state_key(s));
                return it == b.table.end() ? b.default_action : it->second;
            } else {
                for (const ScriptedRule& r : b.rules) {
                    if (holds(schema_, *r.when, s)) return r.action;
                }
                return b.default_action;
            }
        },
        body_);
}

Eigen::VectorXd AgentPolicy::q_values(StateView s) const {
    const auto* n = std::get_if<NeuralPolicy>(&body_);
    if (!n) throw ConfigError(fmt::format("{} policies have no Q-values", to_string(kind())));
    return n->net.forward(normalize(schema_, s));
}

void AgentPolicy::require_compatible(const FeatureSchema& schema, const std::vector<std::string>& actions) const {
    if (!(schema_ == schema)) {
        std::string detail = "feature lists differ";
        for (std::size_t i = 0; i < std::min(schema.size(), schema_.size()); ++i) {
            if (schema.name(i) != schema_.name(i) || !(schema.bound(i) == schema_.bound(i))) {
                detail = fmt::format("feature {} is '{}' [{}..{}] in the policy but '{}' [{}..{}] in the model", i,
                                     schema_.name(i), schema_.bound(i).lo, schema_.bound(i).hi, schema.name(i),
                                     schema.bound(i).lo, schema.bound(i).hi);
                break;
            }
        }
        if (schema.size() != schema_.size()) {
            detail = fmt::format("policy has {} features, model has {}", schema_.size(), schema.size());
        }
        throw SchemaMismatch("policy schema does not match the model: " + detail);
    }
    if (actions != actions_) throw SchemaMismatch("policy action list does not match the model");
}

AgentPolicy make_neural_policy(const FeatureSchema& schema, const std::vector<std::string>& actions,
                               const std::vector<std::size_t>& hidden, Rng& rng) {
    std::vector<std::size_t> sizes{schema.size()};
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(actions.size());
    Mlp net(sizes);
    net.init_uniform(rng);
    return AgentPolicy(schema, actions, NeuralPolicy{std::move(net)});
}

AgentPolicy make_scripted_policy(const FeatureSchema& schema, const std::vector<std::string>& actions,
                                 std::string name, const std::vector<std::pair<std::string, std::string>>& rules,
                                 const std::string& default_action) {
    ScriptedPolicy p;
    p.name = std::move(name);
    for (const auto& [cond, action] : rules) {
        pctl::StatePtr f;
        try {
            f = pctl::parse_property(cond);
        } catch (const PositionedError& e) {
            throw PolicyFormatError(fmt::format("rule condition '{}': {}", cond, e.what()));
        }
        p.rules.push_back({resolve_condition(schema, f), action_index(actions, action)});
    }
    p.default_action = action_index(actions, default_action);
    return AgentPolicy(schema, actions, std::move(p));
}

// ---------------------------------------------------------------------------
// JSON.

namespace {

json schema_to_json(const FeatureSchema& s) {
    json features = json::array();
    for (std::size_t i = 0; i < s.size(); ++i) {
        features.push_back({{"name", s.name(i)}, {"lo", s.bound(i).lo}, {"hi", s.bound(i).hi}});
    }
    return {{"features", features}, {"turn", s.name(s.turn_index())}};
}

FeatureSchema schema_from_json(const json& j) {
    std::vector<std::string> names;
    std::vector<FeatureBound> bounds;
    for (const json& f : j.at("features")) {
        names.push_back(f.at("name").get<std::string>());
        bounds.push_back({f.at("lo").get<std::int64_t>(), f.at("hi").get<std::int64_t>()});
    }
    return FeatureSchema(names, bounds, j.at("turn").get<std::string>());
}

}  // namespace

json policy_to_json(const AgentPolicy& p) {
    json j;
    j["schema"] = schema_to_json(p.schema());
    j["actions"] = p.actions();
    j["kind"] = to_string(p.kind());
    std::visit(
        [&](const auto& b) {
            using T = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<T, NeuralPolicy>) {
                j["layers"] = b.net.sizes();
                json weights = json::array(), biases = json::array();
                for (std::size_t l = 0; l < b.net.layers(); ++l) {
                    const Eigen::MatrixXd& w = b.net.weights(l);
                    std::vector<double> flat;
                    flat.reserve(static_cast<std::size_t>(w.size()));
                    for (Eigen::Index r = 0; r < w.rows(); ++r) {
                        for (Eigen::Index c = 0; c < w.cols(); ++c) flat.push_back(w(r, c));
                    }
                    weights.push_back(flat);
                    const Eigen::VectorXd& bias = b.net.biases(l);
                    biases.push_back(std::vector<double>(bias.data(), bias.data() + bias.size()));
                }
                j["weights"] = std::move(weights);
                j["biases"] = std::move(biases);
                j["normalization"] = "minmax";
            } else if constexpr (std::is_same_v<T, TabularPolicy>) {
                json table = json::array();
                for (const auto& [state, action] : b.table) {
                    table.push_back({{"state", state}, {"action", p.actions()[action]}});
                }
                j["table"] = std::move(table);
                j["default"] = p.actions()[b.default_action];
            } else {
                j["name"] = b.name;
                json rules = json::array();
                for (const ScriptedRule& r : b.rules) {
                    rules.push_back({{"when", pctl::format_property(*r.when)}, {"action", p.actions()[r.action]}});
                }
                j["rules"] = std::move(rules);
                j["default"] = p.actions()[b.default_action];
            }
        },
        p.body());
    return j;
}

AgentPolicy policy_from_json(const json& j) {
    try {
        FeatureSchema schema = schema_from_json(j.at("schema"));
        auto actions = j.at("actions").get<std::vector<std::string>>();
        const std::string kind = j.at("kind").get<std::string>();
        if (kind == "neural") {
            if (j.value("normalization", "minmax") != "minmax") {
                throw PolicyFormatError("only minmax normalization is supported");
            }
            Mlp net(j.at("layers").get<std::vector<std::size_t>>());
            const json& weights = j.at("weights");
            const json& biases = j.at("biases");
            if (weights.size() != net.layers() || biases.size() != net.layers()) {
                throw PolicyFormatError("weights/biases do not match the layer list");
            }
            for (std::size_t l = 0; l < net.layers(); ++l) {
                auto flat = weights[l].get<std::vector<double>>();
                auto bias = biases[l].get<std::vector<double>>();
                Eigen::MatrixXd& w = net.weights(l);
                if (flat.size() != static_cast<std::size_t>(w.size()) ||
                    bias.size() != static_cast<std::size_t>(net.biases(l).size())) {
                    throw PolicyFormatError(fmt::format("layer {} has the wrong number of parameters", l));
                }
                std::size_t k = 0;
                for (Eigen::Index r = 0; r < w.rows(); ++r) {
                    for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = flat[k++];
                }
                for (std::size_t i = 0; i < bias.size(); ++i) net.biases(l)(static_cast<Eigen::Index>(i)) = bias[i];
            }
            return AgentPolicy(std::move(schema), std::move(actions), NeuralPolicy{std::move(net)});
        }
        if (kind == "tabular") {
            TabularPolicy t;
            for (const json& row : j.at("table")) {
                auto state = row.at("state").get<std::vector<FeatureValue>>();
                if (state.size() != schema.size()) throw PolicyFormatError("table state has the wrong width");
                t.table[state] = action_index(actions, row.at("action").get<std::string>());
            }
            t.default_action = action_index(actions, j.at("default").get<std::string>());
            return AgentPolicy(std::move(schema), std::move(actions), std::move(t));
        }
        if (kind == "scripted") {
            std::vector<std::pair<std::string, std::string>> rules;
            for (const json& r : j.at("rules")) {
                rules.emplace_back(r.at("when").get<std::string>(), r.at("action").get<std::string>());
            }
            return make_scripted_policy(schema, actions, j.value("name", "scripted"), rules,
                                        j.at("default").get<std::string>());
        }
        throw PolicyFormatError(fmt::format("unknown policy kind '{}'", kind));
    } catch (const json::exception& e) {
        throw PolicyFormatError(std::string("malformed policy: ") + e.what());
    }
}

void save_policy(const AgentPolicy& p, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError(fmt::format("cannot write policy file '{}'", path.string()));
    out << policy_to_json(p).dump() << '\n';
    if (!out) throw ConfigError(fmt::format("error writing policy file '{}'", path.string()));
}

AgentPolicy load_policy(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("cannot open policy file '{}'", path.string()));
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw PolicyFormatError(fmt::format("policy file '{}' is not valid JSON: {}", path.string(), e.what()));
    }
    return policy_from_json(j);
}

AgentPolicy load_policy(const std::filesystem::path& path, const FeatureSchema& schema,
                        const std::vector<std::string>& actions) {
    AgentPolicy p = load_policy(path);
    p.require_compatible(schema, actions);
    return p;
}

}  // namespace tmc
