#include "tmc/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "tmc/environment.hpp"
#include "tmc/errors.hpp"
#include "tmc/rng.hpp"

namespace tmc {

namespace {

using Predicate = std::function<bool(StateView)>;

bool compare(std::int64_t lhs, pctl::CompareOp op, std::int64_t rhs) {
    switch (op) {
        case pctl::CompareOp::Eq:
            return lhs == rhs;
        case pctl::CompareOp::Ne:
            return lhs != rhs;
        case pctl::CompareOp::Lt:
            return lhs < rhs;
        case pctl::CompareOp::Le:
            return lhs <= rhs;
        case pctl::CompareOp::Gt:
            return lhs > rhs;
        case pctl::CompareOp::Ge:
            return lhs >= rhs;
    }
    return false;
}

Predicate compile_comparison(const GuardedProgram& program, const pctl::Comparison& c) {
    auto idx = program.schema().index_of(c.feature);
    if (!idx) throw UnknownFeature(fmt::format("unknown feature '{}'", c.feature));
    return [i = *idx, op = c.op, v = c.value](StateView s) { return compare(s[i], op, v); };
}

Predicate compile(const GuardedProgram& program, const pctl::StateFormula& f) {
    return std::visit(
        [&](const auto& node) -> Predicate {
            using T = std::decay_t<decltype(node)>;
            if constexpr (std::is_same_v<T, pctl::True>) {
                return [](StateView) { return true; };
            } else if constexpr (std::is_same_v<T, pctl::Atom>) {
                if (auto l = program.label_index(node.label)) {
                    return [&program, l = *l](StateView s) { return program.label_holds(l, s); };
                }
                // Quoted comparisons such as "cell_10=0".
                pctl::StatePtr parsed;
                try {
                    parsed = pctl::parse_property(node.label);
                } catch (const Error&) {
                }
                if (parsed) {
                    if (const auto* c = std::get_if<pctl::Comparison>(&parsed->node);
                        c && program.schema().index_of(c->feature)) {
                        return compile_comparison(program, *c);
                    }
                }
                throw UnknownLabel(fmt::format("unknown label \"{}\"", node.label));
            } else if constexpr (std::is_same_v<T, pctl::Comparison>) {
                return compile_comparison(program, node);
            } else if constexpr (std::is_same_v<T, pctl::And>) {
                return [a = compile(program, *node.lhs), b = compile(program, *node.rhs)](StateView s) {
                    return a(s) && b(s);
                };
            } else if constexpr (std::is_same_v<T, pctl::Not>) {
                return [a = compile(program, *node.operand)](StateView s) { return !a(s); };
            } else {
                throw UnsupportedPathFormula("the simulator cannot evaluate nested probability operators");
            }
        },
        f.node);
}

std::uint64_t effective_steps(pctl::TimeBound op, std::uint64_t steps) {
    return op == pctl::TimeBound::Lt && steps > 0 ? steps - 1 : steps;
}

std::vector<bool> evaluate(const GuardedProgram& program, const pctl::PathFormula& p,
                           const std::vector<FactoredState>& states) {
    const std::size_t n = states.size();
    constexpr std::size_t kNever = std::numeric_limits<std::size_t>::max();
    return std::visit(
        [&](const auto& node) -> std::vector<bool> {
            using T = std::decay_t<decltype(node)>;
            std::vector<bool> r(n);
            if constexpr (std::is_same_v<T, pctl::Holds>) {
                Predicate f = compile(program, *node.formula);
                for (std::size_t i = 0; i < n; ++i) r[i] = f(states[i]);
            } else if constexpr (std::is_same_v<T, pctl::Next>) {
                std::vector<bool> a = evaluate(program, *node.operand, states);
                for (std::size_t i = 0; i < n; ++i) r[i] = a[std::min(i + 1, n - 1)];
            } else if constexpr (std::is_same_v<T, pctl::Until>) {
                std::vector<bool> a = evaluate(program, *node.lhs, states), b = evaluate(program, *node.rhs, states);
                r[n - 1] = b[n - 1];
                for (std::size_t i = n - 1; i-- > 0;) r[i] = b[i] || (a[i] && r[i + 1]);
            } else if constexpr (std::is_same_v<T, pctl::BoundedUntil>) {
                std::vector<bool> a = evaluate(program, *node.lhs, states), b = evaluate(program, *node.rhs, states);
                const std::uint64_t k = effective_steps(node.op, node.steps);
                std::size_t first_b = kNever, first_not_a = kNever;
                for (std::size_t i = n; i-- > 0;) {
                    if (b[i]) first_b = i;
                    if (!a[i]) first_not_a = i;
                    r[i] = first_b != kNever && first_b - i <= k && first_not_a >= first_b;
                }
            } else {
                std::vector<bool> a = evaluate(program, *node.operand, states);
                r[n - 1] = a[n - 1];
                for (std::size_t i = n - 1; i-- > 0;) r[i] = a[i] && r[i + 1];
            }
            return r;
        },
        p.node);
}

// For formulas whose truth is settled by a prefix, a stop condition that
// fires once it is. The trace reaching `step` states counts for bounds.
std::function<bool(StateView, std::uint64_t)> decision_point(const GuardedProgram& program,
                                                             const pctl::PathFormula& p) {
    auto holds = [&](const pctl::PathPtr& q) -> std::optional<Predicate> {
        if (const auto* h = std::get_if<pctl::Holds>(&q->node)) return compile(program, *h->formula);
        return std::nullopt;
    };
    if (const auto* u = std::get_if<pctl::Until>(&p.node)) {
        auto a = holds(u->lhs), b = holds(u->rhs);
        if (a && b) return [a = *a, b = *b](StateView s, std::uint64_t) { return b(s) || !a(s); };
    } else if (const auto* u = std::get_if<pctl::BoundedUntil>(&p.node)) {
        auto a = holds(u->lhs), b = holds(u->rhs);
        if (a && b) {
            return [a = *a, b = *b, k = effective_steps(u->op, u->steps)](StateView s, std::uint64_t step) {
                return b(s) || !a(s) || step >= k;
            };
        }
    } else if (const auto* x = std::get_if<pctl::Next>(&p.node)) {
        if (holds(x->operand)) return [](StateView, std::uint64_t step) { return step >= 1; };
    } else if (const auto* g = std::get_if<pctl::Globally>(&p.node)) {
        if (auto a = holds(g->operand)) return [a = *a](StateView s, std::uint64_t) { return !a(s); };
    }
    return {};
}

}  // namespace

EpisodeTrace run_episode(const GuardedProgram& program, const JointPolicy& policy, std::uint64_t seed,
                         std::uint64_t episode, const EpisodeOptions& options) {
    if (options.horizon == 0) throw ConfigError("horizon must be at least 1");
    Rng rng = Rng::stream(seed, episode);
    const std::size_t n_labels = program.labels().size();
    std::vector<std::optional<std::size_t>> reward_of(policy.agents());
    for (std::size_t i = 0; i < reward_of.size(); ++i) reward_of[i] = agent_reward_index(program, i);

    EpisodeTrace trace;
    trace.label_hit.assign(n_labels, false);
    auto visit = [&](const FactoredState& s) {
        for (std::size_t l = 0; l < n_labels; ++l)
            if (!trace.label_hit[l] && program.label_holds(l, s)) trace.label_hit[l] = true;
        trace.states.push_back(s);
        return options.stop && options.stop(s);
    };
    if (visit(program.initial_state())) {
        trace.stopped = true;
        return trace;
    }
    for (std::uint64_t step = 0; step < options.horizon; ++step) {
        const FactoredState s = trace.states.back();
        std::vector<ActionId> enabled = program.enabled_actions(s);
        if (enabled.empty()) {
            trace.terminal = true;
            return trace;
        }
        Selection pick = policy.select(s, enabled);
        std::vector<Successor> next = program.successors(s, pick.action);
        if (next.size() == 1 && next[0].state == s) {
            trace.terminal = true;
            return trace;
        }
        double u = rng.uniform(), acc = 0.0;
        std::size_t k = 0;
        for (; k + 1 < next.size(); ++k) {
            acc += next[k].probability;
            if (u < acc) break;
        }
        const std::size_t agent = policy.agent_of(s);
        double r = reward_of[agent] ? program.reward(*reward_of[agent], s, pick.action, next[k].state) : 0.0;
        trace.steps.push_back({pick.action, agent, r});
        if (visit(next[k].state)) {
            trace.stopped = true;
            return trace;
        }
    }
    return trace;
}

bool path_holds_on_lasso(const GuardedProgram& program, const pctl::PathFormula& path,
                         const std::vector<FactoredState>& states) {
    if (states.empty()) throw ConfigError("empty trace");
    return evaluate(program, path, states)[0];
}

Estimate estimate_path(const GuardedProgram& program, const JointPolicy& policy, const pctl::PathFormula& path,
                       std::uint64_t episodes, std::uint64_t horizon, std::uint64_t seed) {
    if (episodes == 0) throw ConfigError("episodes must be at least 1");
    // Compile once up front so unknown labels fail before any episode runs.
    (void)evaluate(program, path, {program.initial_state()});
    auto decided = decision_point(program, path);

    Estimate out;
    out.episodes = episodes;
    for (std::uint64_t e = 0; e < episodes; ++e) {
        EpisodeOptions options;
        options.horizon = horizon;
        std::uint64_t reached = 0;
        if (decided) {
            options.stop = [&](StateView s) { return decided(s, reached++); };
        }
        EpisodeTrace trace = run_episode(program, policy, seed, e, options);
        if (!trace.terminal && !trace.stopped) {
            ++out.truncated;
            continue;
        }
        if (path_holds_on_lasso(program, path, trace.states)) ++out.hits;
    }
    const double n = static_cast<double>(episodes);
    out.estimate = static_cast<double>(out.hits) / n;
    out.std_error = std::sqrt(out.estimate * (1.0 - out.estimate) / n);
    return out;
}

Estimate estimate_reachability(const GuardedProgram& program, const JointPolicy& policy, const std::string& label,
                               std::uint64_t episodes, std::uint64_t horizon, std::uint64_t seed) {
    if (!program.label_index(label)) throw UnknownLabel(fmt::format("unknown label \"{}\"", label));
    auto path = pctl::make_finally(pctl::make_holds(pctl::make_atom(label)));
    return estimate_path(program, policy, *path, episodes, horizon, seed);
}

}  // namespace tmc
