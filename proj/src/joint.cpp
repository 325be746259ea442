#include "tmc/joint.hpp"

#include <algorithm>
#include <chrono>
#include <deque>
#include <limits>
#include <numeric>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "tmc/errors.hpp"
#include "tmc/rng.hpp"

namespace tmc {

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

class Deadline {
   public:
    explicit Deadline(const std::optional<double>& seconds) : start_(Clock::now()), seconds_(seconds) {}
    void check(std::size_t states) {
        if (!seconds_ || (++calls_ & 1023) != 0) return;
        if (since(start_) > *seconds_) {
            throw Timeout(fmt::format("state space construction exceeded {} s after {} states", *seconds_, states));
        }
    }
    double elapsed() const { return since(start_); }

   private:
    Clock::time_point start_;
    std::optional<double> seconds_;
    std::uint64_t calls_ = 0;
};

std::vector<std::string> builder_actions(const GuardedProgram& program) {
    std::vector<std::string> names = program.actions();
    names.emplace_back(kAbsorbAction);
    return names;
}

StateIndex intern_within(StateStore& store, StateView s, std::size_t budget, bool& fresh) {
    if (!store.find(s) && store.size() >= budget) throw StateBudgetExceeded(budget, store.size());
    auto [idx, inserted] = store.intern(s);
    fresh = inserted;
    return idx;
}

std::map<std::string, StateSet> evaluate_labels(const GuardedProgram& program, const StateStore& store) {
    std::map<std::string, StateSet> out;
    for (std::size_t l = 0; l < program.labels().size(); ++l) {
        StateSet set(store.size());
        for (StateIndex s = 0; s < store.size(); ++s) set[s] = program.label_holds(l, store[s]);
        out.emplace(program.labels()[l].first, std::move(set));
    }
    return out;
}

void log_fallback(const FeatureSchema& schema, StateView s, const std::vector<std::string>& actions, ActionId wanted,
                  ActionId used) {
    spdlog::debug("policy chose disabled action '{}' in {}; using '{}'", actions[wanted], format_state(schema, s),
                  actions[used]);
}

}  // namespace

JointPolicy::JointPolicy(const GuardedProgram& program, std::vector<AgentPolicy> policies)
    : turn_index_(program.turn_index()),
      turn_lo_(program.turn_bound().lo),
      turn_hi_(program.turn_bound().hi),
      policies_(std::move(policies)) {
    const auto needed = static_cast<std::size_t>(turn_hi_ - turn_lo_ + 1);
    if (policies_.size() != needed) {
        throw ConfigError(fmt::format("turn takes {} values but {} policies were given", needed, policies_.size()));
    }
    for (const auto& p : policies_) p.require_compatible(program.schema(), program.actions());
}

std::size_t JointPolicy::agent_of(StateView s) const {
    const std::int64_t t = s[turn_index_];
    if (t < turn_lo_ || t > turn_hi_) {
        throw TurnOutOfRange(fmt::format("turn value {} outside [{}..{}]", t, turn_lo_, turn_hi_));
    }
    return static_cast<std::size_t>(t - turn_lo_);
}

ActionId JointPolicy::choose(StateView s) const { return policies_[agent_of(s)].greedy_action(s); }

Selection JointPolicy::select(StateView s, const std::vector<ActionId>& enabled) const {
    const AgentPolicy& p = policies_[agent_of(s)];
    if (p.kind() == PolicyKind::Neural) {
        Eigen::VectorXd q = p.q_values(s);
        ActionId best = argmax(q);
        if (std::find(enabled.begin(), enabled.end(), best) != enabled.end()) return {best, false};
        ActionId pick = enabled.front();
        for (ActionId a : enabled)
            if (q(a) > q(pick)) pick = a;
        return {pick, true};
    }
    ActionId a = p.greedy_action(s);
    if (std::find(enabled.begin(), enabled.end(), a) != enabled.end()) return {a, false};
    return {*std::min_element(enabled.begin(), enabled.end()), true};
}

InducedBuild build_induced_dtmc(const GuardedProgram& program, const JointPolicy& policy, const BuildOptions& options) {
    Deadline deadline(options.timeout_seconds);
    const FeatureSchema& schema = program.schema();
    const auto absorb = static_cast<ActionId>(program.actions().size());
    StateStore store(schema.size());
    BuildStats stats;
    double query_seconds = 0.0;

    bool fresh = false;
    intern_within(store, program.initial_state(), options.state_budget, fresh);
    std::vector<std::size_t> row_start{0};
    std::vector<MatrixEntry> entries;
    std::vector<ActionId> row_action;
    std::vector<FeatureValue> current(schema.size());

    // States are interned in BFS order, so the store doubles as the frontier.
    for (StateIndex s = 0; s < store.size(); ++s) {
        deadline.check(store.size());
        StateView view = store[s];
        current.assign(view.begin(), view.end());
        std::vector<ActionId> enabled = program.enabled_actions(current);
        if (enabled.empty()) {
            entries.push_back({s, 1.0});
            row_start.push_back(entries.size());
            row_action.push_back(absorb);
            continue;
        }
        auto t0 = Clock::now();
        Selection pick = policy.select(current, enabled);
        query_seconds += since(t0);
        ++stats.policy_queries;
        if (pick.fallback) {
            ++stats.fallbacks;
            log_fallback(schema, current, program.actions(), policy.choose(current), pick.action);
        }
        for (const Successor& x : program.successors(current, pick.action)) {
            StateIndex t = intern_within(store, x.state, options.state_budget, fresh);
            entries.push_back({t, x.probability});
        }
        row_start.push_back(entries.size());
        row_action.push_back(pick.action);
    }
    if (stats.fallbacks) spdlog::warn("joint policy fell back to another action in {} states", stats.fallbacks);

    StateSpace space{schema, std::move(store), {}, builder_actions(program)};
    space.labels = evaluate_labels(program, space.states);
    stats.states = space.size();
    stats.transitions = entries.size();
    stats.seconds = deadline.elapsed();
    stats.mean_query_seconds = stats.policy_queries ? query_seconds / static_cast<double>(stats.policy_queries) : 0.0;
    return {SparseDtmc(std::move(space), 0, std::move(row_start), std::move(entries), std::move(row_action)), stats};
}

MonolithicBuild build_monolithic_mdp(const GuardedProgram& program, const BuildOptions& options) {
    Deadline deadline(options.timeout_seconds);
    const FeatureSchema& schema = program.schema();
    const auto absorb = static_cast<ActionId>(program.actions().size());
    StateStore store(schema.size());
    BuildStats stats;

    bool fresh = false;
    intern_within(store, program.initial_state(), options.state_budget, fresh);
    std::vector<std::size_t> choice_start{0}, row_start{0};
    std::vector<ActionId> choice_action;
    std::vector<MatrixEntry> entries;
    std::vector<FeatureValue> current(schema.size());

    for (StateIndex s = 0; s < store.size(); ++s) {
        deadline.check(store.size());
        StateView view = store[s];
        current.assign(view.begin(), view.end());
        std::vector<ActionId> enabled = program.enabled_actions(current);
        if (enabled.empty()) {
            entries.push_back({s, 1.0});
            row_start.push_back(entries.size());
            choice_action.push_back(absorb);
        }
        for (ActionId a : enabled) {
            for (const Successor& x : program.successors(current, a)) {
                StateIndex t = intern_within(store, x.state, options.state_budget, fresh);
                entries.push_back({t, x.probability});
            }
            row_start.push_back(entries.size());
            choice_action.push_back(a);
        }
        choice_start.push_back(choice_action.size());
    }

    StateSpace space{schema, std::move(store), {}, builder_actions(program)};
    space.labels = evaluate_labels(program, space.states);
    stats.states = space.size();
    stats.choices = choice_action.size();
    stats.transitions = entries.size();
    stats.seconds = deadline.elapsed();
    return {ExplicitMdp(std::move(space), 0, std::move(choice_start), std::move(choice_action), std::move(row_start),
                        std::move(entries)),
            stats};
}

SparseDtmc restrict_to_policy(const ExplicitMdp& mdp, const JointPolicy& policy) {
    return induce_dtmc_monolithic(mdp, [&](StateIndex s) {
        std::vector<ActionId> enabled = enabled_actions(mdp, s);
        if (enabled.size() == 1 && mdp.space().action_names[enabled[0]] == kAbsorbAction) return enabled[0];
        return policy.select(mdp.state(s), enabled).action;
    });
}

namespace {

struct TimingPool {
    std::vector<std::vector<FeatureValue>> states;
    QueryTiming summary;
};

// Breadth-first walk of the induced chain, stopped once 8 * sample_size
// states are known; random policies can make the full chain exponential in
// the number of agents. Returns up to sample_size non-absorbing states.
TimingPool sample_states(const GuardedProgram& program, const JointPolicy& policy, std::size_t sample_size,
                         std::uint64_t seed) {
    const std::size_t cap = sample_size > SIZE_MAX / 8 ? SIZE_MAX : sample_size * 8;
    StateStore store(program.schema().size());
    store.intern(program.initial_state());
    std::vector<StateIndex> pool;
    std::vector<FeatureValue> current;
    bool complete = true;
    for (StateIndex next = 0; next < store.size() && complete; ++next) {
        StateView view = store[next];
        current.assign(view.begin(), view.end());
        std::vector<ActionId> enabled = program.enabled_actions(current);
        if (enabled.empty()) continue;
        pool.push_back(next);
        for (const auto& succ : program.successors(current, policy.select(current, enabled).action)) {
            if (store.find(succ.state)) continue;
            if (store.size() >= cap) {
                complete = false;
                break;
            }
            store.intern(succ.state);
        }
    }

    TimingPool out;
    out.summary.states = store.size();
    out.summary.complete = complete;
    out.summary.sampled = std::min(sample_size, pool.size());
    Rng rng = Rng::stream(seed, 0);
    for (std::size_t i = 0; i < out.summary.sampled; ++i) std::swap(pool[i], pool[i + rng.below(pool.size() - i)]);
    for (std::size_t i = 0; i < out.summary.sampled; ++i) {
        StateView v = store[pool[i]];
        out.states.emplace_back(v.begin(), v.end());
    }
    return out;
}

double time_query(const GuardedProgram& program, const JointPolicy& policy, const std::vector<FeatureValue>& state,
                  std::size_t& sink) {
    auto t0 = Clock::now();
    std::vector<ActionId> enabled = program.enabled_actions(state);
    Selection pick = policy.select(state, enabled);
    sink += program.successors(state, pick.action).size();
    return since(t0);
}

void summarize(std::vector<double> best, QueryTiming& out) {
    if (best.empty()) return;
    out.mean = std::accumulate(best.begin(), best.end(), 0.0) / static_cast<double>(best.size());
    out.max = *std::max_element(best.begin(), best.end());
    std::sort(best.begin(), best.end());
    const std::size_t mid = best.size() / 2;
    out.median = best.size() % 2 ? best[mid] : 0.5 * (best[mid - 1] + best[mid]);
}

}  // namespace

QueryTiming query_timing_profile(const GuardedProgram& program, const JointPolicy& policy, std::size_t sample_size,
                                 std::uint64_t seed, std::size_t repeats) {
    return query_timing_profiles({{&program, &policy}}, sample_size, seed, repeats).front();
}

std::vector<QueryTiming> query_timing_profiles(const std::vector<TimingTarget>& targets, std::size_t sample_size,
                                               std::uint64_t seed, std::size_t repeats) {
    if (sample_size == 0) throw ConfigError("sample size must be at least 1");
    if (repeats == 0) throw ConfigError("repeats must be at least 1");
    std::vector<TimingPool> pools;
    std::vector<std::vector<double>> best;
    for (const auto& t : targets) {
        pools.push_back(sample_states(*t.program, *t.policy, sample_size, seed));
        best.emplace_back(pools.back().states.size(), std::numeric_limits<double>::infinity());
    }
    // Rounds visit every target in turn so that slow drifts in machine load
    // affect all of them alike.
    std::size_t sink = 0;
    for (std::size_t r = 0; r < repeats; ++r) {
        for (std::size_t k = 0; k < targets.size(); ++k) {
            for (std::size_t i = 0; i < pools[k].states.size(); ++i) {
                // Back-to-back calls so the fastest sees warm caches.
                for (int warm = 0; warm < 3; ++warm) {
                    best[k][i] = std::min(best[k][i], time_query(*targets[k].program, *targets[k].policy,
                                                                 pools[k].states[i], sink));
                }
            }
        }
    }
    if (sink == 0) spdlog::debug("no successors during timing");
    std::vector<QueryTiming> out;
    for (std::size_t k = 0; k < targets.size(); ++k) {
        summarize(std::move(best[k]), pools[k].summary);
        out.push_back(pools[k].summary);
    }
    return out;
}

}  // namespace tmc
