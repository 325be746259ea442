#include "tmc/environment.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace tmc {

FactoredState sample_successor(const GuardedProgram& program, StateView s, ActionId a, Rng& rng) {
    std::vector<Successor> next = program.successors(s, a);
    double u = rng.uniform(), acc = 0.0;
    for (Successor& x : next) {
        acc += x.probability;
        if (u < acc) return std::move(x.state);
    }
    return std::move(next.back().state);
}

FactoredState pass_turn(const GuardedProgram& program, StateView s) {
    FactoredState out(s);
    const FeatureBound& b = program.turn_bound();
    const std::size_t t = program.turn_index();
    const std::int64_t width = b.hi - b.lo + 1;
    out.values[t] = static_cast<FeatureValue>((out.values[t] - b.lo + 1) % width + b.lo);
    return out;
}

bool is_terminal(const GuardedProgram& program, StateView s) {
    if (program.is_absorbing(s)) return true;
    for (ActionId a : program.enabled_actions(s)) {
        for (const Successor& x : program.successors(s, a)) {
            if (!std::equal(s.begin(), s.end(), x.state.values.begin())) return false;
        }
    }
    return true;
}

std::optional<std::size_t> agent_reward_index(const GuardedProgram& program, std::size_t agent) {
    return program.reward_index(fmt::format("agent_{}", agent + 1));
}

std::size_t agent_count(const GuardedProgram& program) {
    const FeatureBound& b = program.turn_bound();
    return static_cast<std::size_t>(b.hi - b.lo + 1);
}

std::size_t agent_of(const GuardedProgram& program, StateView s) {
    return static_cast<std::size_t>(s[program.turn_index()] - program.turn_bound().lo);
}

}  // namespace tmc
