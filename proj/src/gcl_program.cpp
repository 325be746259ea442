#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "gcl_internal.hpp"
#include "tmc/errors.hpp"

namespace tmc {

std::optional<ActionId> GuardedProgram::action_id(const std::string& name) const {
    auto it = std::find(actions_.begin(), actions_.end(), name);
    if (it == actions_.end()) return std::nullopt;
    return static_cast<ActionId>(it - actions_.begin());
}

std::optional<std::size_t> GuardedProgram::label_index(const std::string& name) const {
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        if (labels_[i].first == name) return i;
    }
    return std::nullopt;
}

std::optional<std::size_t> GuardedProgram::reward_index(const std::string& name) const {
    for (std::size_t i = 0; i < rewards_.size(); ++i) {
        if (rewards_[i].name == name) return i;
    }
    return std::nullopt;
}

void GuardedProgram::build_turn_index() {
    const FeatureBound& tb = turn_bound();
    const std::size_t turns = static_cast<std::size_t>(tb.hi - tb.lo + 1);
    const std::size_t n_actions = actions_.size();
    by_turn_.assign(turns, {});
    by_turn_action_.assign(turns * n_actions, {});
    for (std::uint32_t c = 0; c < commands_.size(); ++c) {
        auto pinned = expr::equality_with(commands_[c].guard, turn_index());
        for (std::size_t t = 0; t < turns; ++t) {
            if (pinned && *pinned != tb.lo + static_cast<std::int64_t>(t)) continue;
            by_turn_[t].push_back(c);
            by_turn_action_[t * n_actions + commands_[c].action].push_back(c);
        }
    }
}

std::span<const std::uint32_t> GuardedProgram::commands_for_turn(StateView s) const {
    return by_turn_[static_cast<std::size_t>(s[turn_index()] - turn_bound().lo)];
}

std::span<const std::uint32_t> GuardedProgram::commands_for(StateView s, ActionId a) const {
    const std::size_t t = static_cast<std::size_t>(s[turn_index()] - turn_bound().lo);
    return by_turn_action_[t * actions_.size() + a];
}

bool GuardedProgram::is_absorbing(StateView s) const { return done_index_ && s[*done_index_] != 0; }

std::vector<ActionId> GuardedProgram::enabled_actions(StateView s) const {
    schema_.validate(s);
    std::vector<ActionId> out;
    for (std::uint32_t c : commands_for_turn(s)) {
        const Command& cmd = commands_[c];
        if (cmd.guard.eval_bool(s)) out.push_back(cmd.action);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    if (out.empty() && !is_absorbing(s)) {
        throw DeadlockState(fmt::format("no action enabled in non-absorbing state {}", format_state(schema_, s)));
    }
    return out;
}

bool GuardedProgram::is_enabled(StateView s, ActionId a) const {
    if (a >= actions_.size()) return false;
    for (std::uint32_t c : commands_for(s, a)) {
        if (commands_[c].guard.eval_bool(s)) return true;
    }
    return false;
}

std::vector<Successor> GuardedProgram::successors(StateView s, ActionId a) const {
    schema_.validate(s);
    if (a >= actions_.size()) throw ActionNotEnabled(fmt::format("unknown action id {}", a));
    const Command* chosen = nullptr;
    for (std::uint32_t c : commands_for(s, a)) {
        const Command& cmd = commands_[c];
        if (!cmd.guard.eval_bool(s)) continue;
        if (chosen) {
            throw NondeterministicAction(fmt::format("commands on lines {} and {} are both enabled for action '{}' in {}",
                                                     chosen->line, cmd.line, actions_[a], format_state(schema_, s)));
        }
        chosen = &cmd;
    }
    if (!chosen) {
        throw ActionNotEnabled(fmt::format("action '{}' is not enabled in {}", actions_[a], format_state(schema_, s)));
    }

    std::vector<Successor> out;
    out.reserve(chosen->updates.size());
    double total = 0.0;
    std::vector<FeatureValue> next(s.begin(), s.end());
    for (const Update& u : chosen->updates) {
        total += u.probability;
        if (u.probability == 0.0) continue;
        std::copy(s.begin(), s.end(), next.begin());
        for (const Assignment& asg : u.assignments) {
            std::int64_t v = asg.value.eval_int(s);
            const FeatureBound& b = schema_.bound(asg.variable);
            if (v < b.lo || v > b.hi) {
                const std::string& var = schema_.name(asg.variable);
                throw UpdateOutOfBounds(var, v,
                                        fmt::format("command on line {} sets '{}' to {} outside [{}..{}] in {}",
                                                    chosen->line, var, v, b.lo, b.hi, format_state(schema_, s)));
            }
            next[asg.variable] = static_cast<FeatureValue>(v);
        }
        auto same = std::find_if(out.begin(), out.end(),
                                 [&](const Successor& x) { return std::equal(next.begin(), next.end(), x.state.values.begin()); });
        if (same != out.end()) {
            same->probability += u.probability;
        } else {
            out.push_back({FactoredState(next), u.probability});
        }
    }
    if (std::abs(total - 1.0) > kStochasticTolerance) {
        throw ProbabilitiesDoNotSumToOne(fmt::format("command on line {} has update probabilities summing to {:.17g}",
                                                     chosen->line, total));
    }
    return out;
}

double GuardedProgram::reward(std::size_t structure, StateView s, ActionId a, StateView next) const {
    double total = 0.0;
    for (const RewardItem& item : rewards_.at(structure).items) {
        if (item.action) {
            if (*item.action == a && item.guard.eval_bool(s)) total += item.value.eval_real(s);
        } else if (item.guard.eval_bool(next)) {
            total += item.value.eval_real(next);
        }
    }
    return total;
}

}  // namespace tmc
