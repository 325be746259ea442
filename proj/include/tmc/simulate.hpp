#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "tmc/gcl.hpp"
#include "tmc/joint.hpp"
#include "tmc/pctl.hpp"

namespace tmc {

struct EpisodeStep {
    ActionId action;
    std::size_t agent;
    double reward;  // collected by the acting agent
};

/// `states` has one more entry than `steps`. A terminal episode ended in an
/// absorbing state or a state the policy never leaves; otherwise it stopped
/// at the horizon or when `stop` fired.
struct EpisodeTrace {
    std::vector<FactoredState> states;
    std::vector<EpisodeStep> steps;
    std::vector<bool> label_hit;  // per program label, anywhere on the trace
    bool terminal = false;
    bool stopped = false;
};

struct EpisodeOptions {
    std::uint64_t horizon = 10'000;
    // Checked on every state reached; ends the episode early.
    std::function<bool(StateView)> stop;
};

// Seeded by (seed, episode) through independent streams.
EpisodeTrace run_episode(const GuardedProgram& program, const JointPolicy& policy, std::uint64_t seed,
                         std::uint64_t episode, const EpisodeOptions& options = {});

struct Estimate {
    double estimate = 0.0;
    double std_error = 0.0;
    std::uint64_t episodes = 0;
    std::uint64_t hits = 0;
    std::uint64_t truncated = 0;  // undecided at the horizon, counted as misses
};

/// Fraction of episodes whose path satisfies `path`. State subformulas must be
/// free of probability operators. Terminal traces are read as ending in an
/// infinite repetition of their last state.
Estimate estimate_path(const GuardedProgram& program, const JointPolicy& policy, const pctl::PathFormula& path,
                       std::uint64_t episodes, std::uint64_t horizon, std::uint64_t seed);

// P(F label).
Estimate estimate_reachability(const GuardedProgram& program, const JointPolicy& policy, const std::string& label,
                               std::uint64_t episodes, std::uint64_t horizon, std::uint64_t seed);

/// Evaluates `path` on a lasso: the trace followed by its last state forever.
bool path_holds_on_lasso(const GuardedProgram& program, const pctl::PathFormula& path,
                         const std::vector<FactoredState>& states);

}  // namespace tmc
