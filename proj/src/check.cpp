#include <algorithm>
#include <chrono>

#include <fmt/format.h>

#include "checker_internal.hpp"
#include "tmc/errors.hpp"

namespace tmc {

namespace {

using namespace pctl;

bool compare(std::int64_t lhs, CompareOp op, std::int64_t rhs) {
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

bool meets(double value, const ProbBound& b) {
    switch (b.op) {
        case BoundOp::Lt:
            return value < b.threshold;
        case BoundOp::Le:
            return value <= b.threshold;
        case BoundOp::Gt:
            return value > b.threshold;
        case BoundOp::Ge:
            return value >= b.threshold;
    }
    return false;
}

// A quoted atom such as "cell_10=0" that is not a label reads as a comparison.
const Comparison* comparison_atom(const std::string& label, StatePtr& holder) {
    try {
        holder = parse_property(label);
    } catch (const Error&) {
        return nullptr;
    }
    return std::get_if<Comparison>(&holder->node);
}

template <typename Model>
class Evaluator {
   public:
    Evaluator(const Model& model, const SolverOptions& options) : model_(model), options_(options) {}

    StateSet states(const StateFormula& f) {
        const std::size_t n = model_.num_states();
        return std::visit(
            [&](const auto& node) -> StateSet {
                using T = std::decay_t<decltype(node)>;
                if constexpr (std::is_same_v<T, True>) {
                    return StateSet(n, true);
                } else if constexpr (std::is_same_v<T, Atom>) {
                    return atom(node.label);
                } else if constexpr (std::is_same_v<T, Comparison>) {
                    return comparison(node);
                } else if constexpr (std::is_same_v<T, And>) {
                    StateSet a = states(*node.lhs), b = states(*node.rhs);
                    for (std::size_t s = 0; s < n; ++s) a[s] = a[s] && b[s];
                    return a;
                } else if constexpr (std::is_same_v<T, Not>) {
                    StateSet a = states(*node.operand);
                    a.flip();
                    return a;
                } else {
                    std::vector<double> v = values(node);
                    StateSet out(n);
                    for (std::size_t s = 0; s < n; ++s) out[s] = meets(std::clamp(v[s], 0.0, 1.0), *node.bound);
                    return out;
                }
            },
            f.node);
    }

    std::vector<double> values(const Prob& p) {
        constexpr bool is_chain = std::is_same_v<Model, SparseDtmc>;
        if constexpr (is_chain) {
            if (p.quantifier != Quantifier::Plain) {
                throw QuantifierOnDtmc("Pmax/Pmin apply to MDPs; the induced chain has one action per state, use P");
            }
            return chain_values(*p.path);
        } else {
            if (p.quantifier == Quantifier::Plain) {
                throw QuantifierRequired("an MDP has no single probability; use Pmax or Pmin");
            }
            auto [phi1, phi2] = operands(*p.path);
            return mdp_check_extremal(model_, p.quantifier, *p.path, phi1, phi2, options_, &stats_);
        }
    }

    SolverStats stats() const { return stats_; }

   private:
    // Satisfaction sets of a simple path formula's state operands; throws if
    // an operand is itself a path formula.
    std::pair<StateSet, StateSet> operands(const PathFormula& p) {
        auto state_of = [](const PathPtr& q) -> const StateFormula* {
            const auto* h = std::get_if<Holds>(&q->node);
            return h ? h->formula.get() : nullptr;
        };
        const std::size_t n = model_.num_states();
        return std::visit(
            [&](const auto& node) -> std::pair<StateSet, StateSet> {
                using T = std::decay_t<decltype(node)>;
                if constexpr (std::is_same_v<T, Holds>) {
                    throw UnsupportedPathFormula("expected a path operator");
                } else if constexpr (std::is_same_v<T, Next> || std::is_same_v<T, Globally>) {
                    const StateFormula* f = state_of(node.operand);
                    if (!f) throw UnsupportedPathFormula("nested path formulas are only supported on induced chains");
                    return {StateSet(n, true), states(*f)};
                } else {
                    const StateFormula* a = state_of(node.lhs);
                    const StateFormula* b = state_of(node.rhs);
                    if (!a || !b) throw UnsupportedPathFormula("nested path formulas are only supported on induced chains");
                    return {states(*a), states(*b)};
                }
            },
            p.node);
    }

    bool is_simple(const PathFormula& p) const {
        auto simple = [](const PathPtr& q) { return std::holds_alternative<Holds>(q->node); };
        return std::visit(
            [&](const auto& node) -> bool {
                using T = std::decay_t<decltype(node)>;
                if constexpr (std::is_same_v<T, Holds>) {
                    return false;
                } else if constexpr (std::is_same_v<T, Next> || std::is_same_v<T, Globally>) {
                    return simple(node.operand);
                } else {
                    return simple(node.lhs) && simple(node.rhs);
                }
            },
            p.node);
    }

    std::vector<double> chain_values(const PathFormula& p) {
        if constexpr (std::is_same_v<Model, SparseDtmc>) {
            if (!is_simple(p)) {
                if (std::holds_alternative<Holds>(p.node)) throw UnsupportedPathFormula("expected a path operator");
                return prob_path_product(
                    model_, p, [this](const StateFormula& f) { return states(f); }, options_, &stats_);
            }
            auto [phi1, phi2] = operands(p);
            return std::visit(
                [&](const auto& node) -> std::vector<double> {
                    using T = std::decay_t<decltype(node)>;
                    if constexpr (std::is_same_v<T, Next>) {
                        return prob_next(model_, phi2);
                    } else if constexpr (std::is_same_v<T, Until>) {
                        return solve_until(model_, phi1, phi2, options_, &stats_);
                    } else if constexpr (std::is_same_v<T, BoundedUntil>) {
                        return bounded_until(model_, phi1, phi2, node.op, node.steps);
                    } else if constexpr (std::is_same_v<T, Globally>) {
                        return prob_globally(model_, phi2, options_, &stats_);
                    } else {
                        return {};
                    }
                },
                p.node);
        } else {
            return {};
        }
    }

    StateSet atom(const std::string& label) {
        const auto& labels = model_.labels();
        if (auto it = labels.find(label); it != labels.end()) return it->second;
        StatePtr holder;
        if (const Comparison* c = comparison_atom(label, holder)) {
            if (model_.schema().index_of(c->feature)) return comparison(*c);
        }
        throw UnknownLabel(fmt::format("unknown label \"{}\"", label));
    }

    StateSet comparison(const Comparison& c) {
        auto idx = model_.schema().index_of(c.feature);
        if (!idx) throw UnknownFeature(fmt::format("unknown feature '{}'", c.feature));
        const std::size_t n = model_.num_states();
        StateSet out(n);
        for (std::size_t s = 0; s < n; ++s) {
            out[s] = compare(model_.state(static_cast<StateIndex>(s))[*idx], c.op, c.value);
        }
        return out;
    }

    const Model& model_;
    SolverOptions options_;
    SolverStats stats_;
};

template <typename Model>
CheckResult run(const Model& model, const StateFormula& formula, const SolverOptions& options) {
    auto start = std::chrono::steady_clock::now();
    Evaluator<Model> eval(model, options);
    CheckResult r;
    if (const auto* p = std::get_if<Prob>(&formula.node); p && !p->bound) {
        r.is_query = true;
        r.values = eval.values(*p);
        for (double& v : r.values) v = std::clamp(v, 0.0, 1.0);
        r.value_at_initial = r.values.empty() ? 0.0 : r.values[model.initial()];
    } else {
        r.satisfied = eval.states(formula);
        r.value_at_initial = r.satisfied.empty() ? 0.0 : (r.satisfied[model.initial()] ? 1.0 : 0.0);
    }
    r.stats = eval.stats();
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

}  // namespace

CheckResult check(const SparseDtmc& dtmc, const StateFormula& formula, const SolverOptions& options) {
    return run(dtmc, formula, options);
}

CheckResult check(const ExplicitMdp& mdp, const StateFormula& formula, const SolverOptions& options) {
    return run(mdp, formula, options);
}

}  // namespace tmc
