#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "tmc/gcl.hpp"
#include "tmc/model.hpp"
#include "tmc/policy.hpp"

namespace tmc {

// Name of the implicit self-loop action added to absorbing states by the
// builders. Not a valid identifier, so it never clashes with model actions.
inline constexpr const char* kAbsorbAction = "<absorbing>";

struct Selection {
    ActionId action;
    bool fallback;  // the agent's own choice was disabled
};

/// Dispatches each state to the policy of the agent whose turn it is. Agent i
/// controls turn value lo + i of the program's turn range.
class JointPolicy {
   public:
    // Throws ConfigError on a count mismatch and SchemaMismatch if a policy
    // was made for a different schema or action list.
    JointPolicy(const GuardedProgram& program, std::vector<AgentPolicy> policies);

    std::size_t agents() const noexcept { return policies_.size(); }
    const AgentPolicy& agent(std::size_t i) const { return policies_.at(i); }
    std::size_t agent_of(StateView s) const;  // throws TurnOutOfRange

    // The acting agent's greedy action, enabled or not.
    ActionId choose(StateView s) const;
    /// The acting agent's action if enabled; otherwise the enabled action with
    /// the highest Q-value (neural) or the lowest index (tabular, scripted).
    /// `enabled` must be non-empty.
    Selection select(StateView s, const std::vector<ActionId>& enabled) const;

   private:
    std::size_t turn_index_;
    std::int64_t turn_lo_, turn_hi_;
    std::vector<AgentPolicy> policies_;
};

struct BuildOptions {
    std::size_t state_budget = 50'000'000;
    std::optional<double> timeout_seconds;
};

struct BuildStats {
    std::size_t states = 0;
    std::size_t transitions = 0;
    std::size_t choices = 0;          // monolithic only
    std::uint64_t policy_queries = 0;  // induced only
    std::uint64_t fallbacks = 0;
    double seconds = 0.0;
    double mean_query_seconds = 0.0;
};

struct InducedBuild {
    SparseDtmc dtmc;
    BuildStats stats;
};

struct MonolithicBuild {
    ExplicitMdp mdp;
    BuildStats stats;
};

/// Breadth-first construction of the chain induced by `policy`: only the
/// action selected at each reached state is expanded. Absorbing states get a
/// self-loop. Throws StateBudgetExceeded, Timeout and DeadlockState.
InducedBuild build_induced_dtmc(const GuardedProgram& program, const JointPolicy& policy,
                                const BuildOptions& options = {});

/// Breadth-first expansion of every enabled action. Throws
/// StateBudgetExceeded, Timeout and DeadlockState.
MonolithicBuild build_monolithic_mdp(const GuardedProgram& program, const BuildOptions& options = {});

// Restriction of a monolithic MDP to `policy`, with the same fallback rule as
// build_induced_dtmc.
SparseDtmc restrict_to_policy(const ExplicitMdp& mdp, const JointPolicy& policy);

struct QueryTiming {
    std::size_t states = 0;   // reachable states discovered
    bool complete = true;     // false when discovery stopped at the cap
    std::size_t sampled = 0;
    double mean = 0.0;
    double median = 0.0;
    double max = 0.0;
};

/// Wall time of one policy selection plus successor computation, measured on
/// up to `sample_size` reachable states drawn with `seed`. Candidates come
/// from a breadth-first walk of the induced chain that stops after
/// 8 * sample_size states. Each state gets `repeats` rounds of three
/// back-to-back calls and its fastest call is kept.
QueryTiming query_timing_profile(const GuardedProgram& program, const JointPolicy& policy, std::size_t sample_size,
                                 std::uint64_t seed = 0, std::size_t repeats = 5);

struct TimingTarget {
    const GuardedProgram* program;
    const JointPolicy* policy;
};

// Profiles several models together; each round visits every target, so slow
// drifts in machine load affect all of them alike.
std::vector<QueryTiming> query_timing_profiles(const std::vector<TimingTarget>& targets, std::size_t sample_size,
                                               std::uint64_t seed = 0, std::size_t repeats = 5);

}  // namespace tmc
