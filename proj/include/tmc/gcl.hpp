#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tmc/model.hpp"

namespace tmc {

enum class ValueType { Int, Real, Bool };

const char* to_string(ValueType t) noexcept;

// Result of evaluating an expression. Exactly one member is meaningful,
// selected by `type`.
struct Value {
    ValueType type = ValueType::Int;
    std::int64_t int_value = 0;
    double real_value = 0.0;
    bool bool_value = false;

    static Value of_int(std::int64_t v) { return {ValueType::Int, v, 0.0, false}; }
    static Value of_real(double v) { return {ValueType::Real, 0, v, false}; }
    static Value of_bool(bool v) { return {ValueType::Bool, 0, 0.0, v}; }
    double as_real() const { return type == ValueType::Int ? static_cast<double>(int_value) : real_value; }
};

struct ExprNode;

/// Immutable, typed expression tree over the variables of one program.
/// Constant subtrees are folded when the tree is built.
class Expr {
   public:
    Expr() = default;
    explicit Expr(std::shared_ptr<const ExprNode> node) : node_(std::move(node)) {}

    ValueType type() const;
    bool is_constant() const;
    const ExprNode& node() const { return *node_; }
    explicit operator bool() const noexcept { return static_cast<bool>(node_); }

    std::int64_t eval_int(StateView s) const;
    double eval_real(StateView s) const;  // accepts Int and Real expressions
    bool eval_bool(StateView s) const;
    Value evaluate(StateView s) const;

   private:
    std::shared_ptr<const ExprNode> node_;
};

struct Assignment {
    std::size_t variable;
    Expr value;
};

struct Update {
    double probability;
    std::vector<Assignment> assignments;
};

struct Command {
    ActionId action;
    Expr guard;
    std::vector<Update> updates;
    std::size_t line;
};

// `[action] guard : value` items are evaluated on the source state of a
// transition labelled `action`; items without an action are evaluated on the
// state the transition reaches.
struct RewardItem {
    std::optional<ActionId> action;
    Expr guard;
    Expr value;
};

struct RewardStructure {
    std::string name;
    std::vector<RewardItem> items;
};

struct Successor {
    FactoredState state;
    double probability;
};

struct ConstantValue {
    ValueType type;
    std::int64_t int_value;
    double real_value;
};

/// Parsed guarded-command model: one implicit module of bounded integer
/// variables, a mandatory `turn` variable, probabilistic commands, labels and
/// reward structures. Immutable after parsing.
class GuardedProgram {
   public:
    const FeatureSchema& schema() const noexcept { return schema_; }
    const std::vector<std::string>& actions() const noexcept { return actions_; }
    std::optional<ActionId> action_id(const std::string& name) const;
    const std::vector<Command>& commands() const noexcept { return commands_; }
    const std::vector<std::pair<std::string, Expr>>& labels() const noexcept { return labels_; }
    std::optional<std::size_t> label_index(const std::string& name) const;
    const std::vector<RewardStructure>& rewards() const noexcept { return rewards_; }
    std::optional<std::size_t> reward_index(const std::string& name) const;
    const std::map<std::string, ConstantValue>& constants() const noexcept { return constants_; }
    std::optional<std::size_t> done_index() const noexcept { return done_index_; }
    std::size_t turn_index() const noexcept { return schema_.turn_index(); }
    const FeatureBound& turn_bound() const { return schema_.bound(schema_.turn_index()); }

    FactoredState initial_state() const { return initial_; }

    // A state is absorbing when the program declares `done` and it is nonzero.
    bool is_absorbing(StateView s) const;

    /// Actions with at least one enabled command, in declaration order. Returns
    /// an empty list only for absorbing states without a self-loop command;
    /// throws DeadlockState for any other state without enabled actions.
    std::vector<ActionId> enabled_actions(StateView s) const;

    /// True if some command for `a` is enabled in `s`.
    bool is_enabled(StateView s, ActionId a) const;

    /// Distribution obtained by applying the unique enabled command for `a`;
    /// identical successors are merged in first-occurrence order.
    std::vector<Successor> successors(StateView s, ActionId a) const;

    bool label_holds(std::size_t label, StateView s) const { return labels_.at(label).second.eval_bool(s); }

    // Reward collected by `structure` on the transition s --a--> next.
    double reward(std::size_t structure, StateView s, ActionId a, StateView next) const;

    /// Parses an expression in this program's scope (constants, formulas and
    /// variables).
    Expr parse_expression(std::string_view text) const;

    friend class ProgramParser;

   private:
    std::span<const std::uint32_t> commands_for(StateView s, ActionId a) const;
    std::span<const std::uint32_t> commands_for_turn(StateView s) const;
    void build_turn_index();

    FeatureSchema schema_;
    FactoredState initial_;
    std::vector<std::string> actions_;
    std::vector<Command> commands_;
    std::vector<std::pair<std::string, Expr>> labels_;
    std::vector<RewardStructure> rewards_;
    std::map<std::string, ConstantValue> constants_;
    std::map<std::string, Expr> formulas_;
    std::optional<std::size_t> done_index_;

    // Command indices by turn value, and by (turn value, action).
    std::vector<std::vector<std::uint32_t>> by_turn_;
    std::vector<std::vector<std::uint32_t>> by_turn_action_;
};

using ConstantOverrides = std::map<std::string, std::string>;

/// Parses model text. `overrides` replace the values of declared constants
/// (and supply values for constants declared without one).
GuardedProgram parse_program(std::string_view text, const ConstantOverrides& overrides = {});

Value eval_expr(const GuardedProgram& program, const Expr& e, StateView s);

}  // namespace tmc
