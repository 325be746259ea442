#pragma once

#include "tmc/gcl.hpp"
#include "tmc/rng.hpp"

namespace tmc {

// Draws one successor of `s` under the enabled action `a`.
FactoredState sample_successor(const GuardedProgram& program, StateView s, ActionId a, Rng& rng);

// `s` with the turn advanced to the next value, wrapping around.
FactoredState pass_turn(const GuardedProgram& program, StateView s);

/// Episode end: `done` set, or every enabled action only loops back to `s`.
bool is_terminal(const GuardedProgram& program, StateView s);

// Index of the reward structure `agent_<k>` for the 0-based agent k, if any.
std::optional<std::size_t> agent_reward_index(const GuardedProgram& program, std::size_t agent);

std::size_t agent_count(const GuardedProgram& program);
std::size_t agent_of(const GuardedProgram& program, StateView s);

}  // namespace tmc
