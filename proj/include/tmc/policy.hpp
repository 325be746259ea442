#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "tmc/mlp.hpp"
#include "tmc/model.hpp"
#include "tmc/pctl.hpp"

namespace tmc {

struct NeuralPolicy {
    Mlp net;
};

struct TabularPolicy {
    std::map<std::vector<FeatureValue>, ActionId> table;
    ActionId default_action = 0;
};

// First rule whose condition holds picks the action. Conditions are
// conjunctions/negations of `feature OP int` comparisons.
struct ScriptedRule {
    pctl::StatePtr when;
    ActionId action;
};

struct ScriptedPolicy {
    std::string name;
    std::vector<ScriptedRule> rules;
    ActionId default_action = 0;
};

enum class PolicyKind { Neural, Tabular, Scripted };

const char* to_string(PolicyKind k) noexcept;

/// One agent's deterministic policy over a fixed schema and action list.
class AgentPolicy {
   public:
    using Body = std::variant<NeuralPolicy, TabularPolicy, ScriptedPolicy>;

    AgentPolicy(FeatureSchema schema, std::vector<std::string> actions, Body body);

    PolicyKind kind() const noexcept { return static_cast<PolicyKind>(body_.index()); }
    const FeatureSchema& schema() const noexcept { return schema_; }
    const std::vector<std::string>& actions() const noexcept { return actions_; }
    const Body& body() const noexcept { return body_; }
    Body& body() noexcept { return body_; }

    /// Argmax over the full action set, lowest index on ties, for neural
    /// policies; rule or table output otherwise.
    ActionId greedy_action(StateView s) const;

    // Q-values of a neural policy; throws ConfigError for other kinds.
    Eigen::VectorXd q_values(StateView s) const;

    // Throws SchemaMismatch unless schema and action names equal these.
    void require_compatible(const FeatureSchema& schema, const std::vector<std::string>& actions) const;

   private:
    FeatureSchema schema_;
    std::vector<std::string> actions_;
    Body body_;
};

// Lowest index on ties.
ActionId argmax(const Eigen::VectorXd& q);

AgentPolicy make_neural_policy(const FeatureSchema& schema, const std::vector<std::string>& actions,
                               const std::vector<std::size_t>& hidden, Rng& rng);

/// `rules` are (condition text, action name) pairs; the condition grammar is
/// the property language restricted to comparisons, `&`, `!` and `true`.
AgentPolicy make_scripted_policy(const FeatureSchema& schema, const std::vector<std::string>& actions,
                                 std::string name, const std::vector<std::pair<std::string, std::string>>& rules,
                                 const std::string& default_action);

nlohmann::json policy_to_json(const AgentPolicy& p);
AgentPolicy policy_from_json(const nlohmann::json& j);

void save_policy(const AgentPolicy& p, const std::filesystem::path& path);
AgentPolicy load_policy(const std::filesystem::path& path);
// Loads and checks against the model's schema and action list.
AgentPolicy load_policy(const std::filesystem::path& path, const FeatureSchema& schema,
                        const std::vector<std::string>& actions);

}  // namespace tmc
