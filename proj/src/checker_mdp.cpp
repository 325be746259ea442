#include <algorithm>
#include <cmath>
#include <limits>

#include "checker_internal.hpp"
#include "tmc/errors.hpp"

namespace tmc {

namespace {

using pctl::Quantifier;

struct MdpPredecessors {
    std::vector<std::size_t> start;
    std::vector<StateIndex> pred;
};

MdpPredecessors reverse(const ExplicitMdp& mdp) {
    const std::size_t n = mdp.num_states();
    MdpPredecessors r;
    r.start.assign(n + 1, 0);
    for (StateIndex s = 0; s < n; ++s) {
        for (std::size_t c = mdp.choice_begin(s); c < mdp.choice_end(s); ++c) {
            for (const MatrixEntry& e : mdp.choice_row(c)) ++r.start[e.column + 1];
        }
    }
    for (std::size_t i = 0; i < n; ++i) r.start[i + 1] += r.start[i];
    r.pred.resize(r.start[n]);
    std::vector<std::size_t> fill(r.start.begin(), r.start.end() - 1);
    for (StateIndex s = 0; s < n; ++s) {
        for (std::size_t c = mdp.choice_begin(s); c < mdp.choice_end(s); ++c) {
            for (const MatrixEntry& e : mdp.choice_row(c)) r.pred[fill[e.column]++] = s;
        }
    }
    return r;
}

// States from which phi2 is reachable through phi1 under some scheduler.
StateSet exists_reach(const MdpPredecessors& rev, const StateSet& phi1, const StateSet& phi2) {
    StateSet seen = phi2;
    std::vector<StateIndex> stack;
    for (std::size_t s = 0; s < seen.size(); ++s) {
        if (seen[s]) stack.push_back(static_cast<StateIndex>(s));
    }
    while (!stack.empty()) {
        StateIndex t = stack.back();
        stack.pop_back();
        for (std::size_t i = rev.start[t]; i < rev.start[t + 1]; ++i) {
            StateIndex p = rev.pred[i];
            if (!seen[p] && phi1[p]) {
                seen[p] = true;
                stack.push_back(p);
            }
        }
    }
    return seen;
}

// States from which phi2 is reached with positive probability under every
// scheduler: least fixpoint of phi2 | (phi1 & every choice hits the set).
StateSet forall_reach(const ExplicitMdp& mdp, const StateSet& phi1, const StateSet& phi2) {
    const std::size_t n = mdp.num_states();
    StateSet r = phi2;
    bool changed = true;
    while (changed) {
        changed = false;
        for (StateIndex s = 0; s < n; ++s) {
            if (r[s] || !phi1[s]) continue;
            bool all = true;
            for (std::size_t c = mdp.choice_begin(s); c < mdp.choice_end(s) && all; ++c) {
                auto row = mdp.choice_row(c);
                all = std::any_of(row.begin(), row.end(), [&](const MatrixEntry& e) { return r[e.column]; });
            }
            if (all) {
                r[s] = true;
                changed = true;
            }
        }
    }
    return r;
}

double pick(Quantifier q, double a, double b) { return q == Quantifier::Max ? std::max(a, b) : std::min(a, b); }
double neutral(Quantifier q) {
    return q == Quantifier::Max ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
}

std::vector<double> extremal_until(const ExplicitMdp& mdp, Quantifier q, const StateSet& phi1, const StateSet& phi2,
                                   const SolverOptions& options, SolverStats* stats) {
    const std::size_t n = mdp.num_states();
    StateSet reach = q == Quantifier::Max ? exists_reach(reverse(mdp), phi1, phi2) : forall_reach(mdp, phi1, phi2);
    std::vector<double> x(n, 0.0);
    std::vector<StateIndex> maybe;
    for (StateIndex s = 0; s < n; ++s) {
        if (phi2[s]) {
            x[s] = 1.0;
        } else if (reach[s]) {
            maybe.push_back(s);
        }
    }
    SolverStats local;
    if (!maybe.empty()) {
        local.converged = false;
        while (local.iterations < options.max_iterations) {
            ++local.iterations;
            double delta = 0.0;
            for (StateIndex s : maybe) {
                double best = neutral(q);
                for (std::size_t c = mdp.choice_begin(s); c < mdp.choice_end(s); ++c) {
                    double acc = 0.0, diag = 0.0;
                    for (const MatrixEntry& e : mdp.choice_row(c)) {
                        if (e.column == s) {
                            diag += e.value;
                        } else {
                            acc += e.value * x[e.column];
                        }
                    }
                    // Repeating a choice with self-loop mass diag until it leaves.
                    double v = diag < 1.0 ? acc / (1.0 - diag) : 0.0;
                    best = pick(q, best, v);
                }
                double change = std::abs(best - x[s]);
                if (best != 0.0) change /= best;
                delta = std::max(delta, change);
                x[s] = best;
            }
            local.residual = delta;
            if (delta <= options.tolerance) {
                local.converged = true;
                break;
            }
        }
    }
    if (stats) stats->absorb(local);
    return x;
}

std::vector<double> extremal_bounded(const ExplicitMdp& mdp, Quantifier q, const StateSet& phi1, const StateSet& phi2,
                                     std::uint64_t rounds) {
    const std::size_t n = mdp.num_states();
    std::vector<double> x(n), next(n);
    for (std::size_t s = 0; s < n; ++s) x[s] = phi2[s] ? 1.0 : 0.0;
    for (std::uint64_t k = 0; k < rounds; ++k) {
        bool changed = false;
        for (StateIndex s = 0; s < n; ++s) {
            if (phi2[s] || !phi1[s]) {
                next[s] = x[s];
                continue;
            }
            double best = neutral(q);
            for (std::size_t c = mdp.choice_begin(s); c < mdp.choice_end(s); ++c) {
                double acc = 0.0;
                for (const MatrixEntry& e : mdp.choice_row(c)) acc += e.value * x[e.column];
                best = pick(q, best, acc);
            }
            next[s] = best;
            changed = changed || best != x[s];
        }
        x.swap(next);
        if (!changed) break;
    }
    return x;
}

}  // namespace

std::vector<double> mdp_check_extremal(const ExplicitMdp& mdp, Quantifier quantifier, const pctl::PathFormula& path,
                                       const StateSet& phi1, const StateSet& phi2, const SolverOptions& options,
                                       SolverStats* stats) {
    using namespace pctl;
    if (quantifier == Quantifier::Plain) {
        throw QuantifierRequired("an MDP has no single probability; use Pmax or Pmin");
    }
    const std::size_t n = mdp.num_states();
    return std::visit(
        [&](const auto& node) -> std::vector<double> {
            using T = std::decay_t<decltype(node)>;
            if constexpr (std::is_same_v<T, Holds>) {
                throw UnsupportedPathFormula("expected a path operator");
            } else if constexpr (std::is_same_v<T, Next>) {
                std::vector<double> x(n);
                for (StateIndex s = 0; s < n; ++s) {
                    double best = neutral(quantifier);
                    for (std::size_t c = mdp.choice_begin(s); c < mdp.choice_end(s); ++c) {
                        double acc = 0.0;
                        for (const MatrixEntry& e : mdp.choice_row(c)) {
                            if (phi2[e.column]) acc += e.value;
                        }
                        best = pick(quantifier, best, acc);
                    }
                    x[s] = best;
                }
                return x;
            } else if constexpr (std::is_same_v<T, Until>) {
                return extremal_until(mdp, quantifier, phi1, phi2, options, stats);
            } else if constexpr (std::is_same_v<T, BoundedUntil>) {
                std::uint64_t rounds = node.steps;
                if (node.op == TimeBound::Lt && rounds > 0) --rounds;
                return extremal_bounded(mdp, quantifier, phi1, phi2, rounds);
            } else {
                // Pmax(G phi) = 1 - Pmin(F !phi) and vice versa.
                Quantifier dual = quantifier == Quantifier::Max ? Quantifier::Min : Quantifier::Max;
                StateSet all(n, true), bad = phi2;
                bad.flip();
                std::vector<double> x = extremal_until(mdp, dual, all, bad, options, stats);
                for (double& v : x) v = 1.0 - v;
                return x;
            }
        },
        path.node);
}

}  // namespace tmc
