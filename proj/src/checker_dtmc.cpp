#include <algorithm>
#include <cmath>

#include "checker_internal.hpp"

namespace tmc {

void SolverStats::absorb(const SolverStats& other) {
    iterations += other.iterations;
    residual = std::max(residual, other.residual);
    converged = converged && other.converged;
}

namespace detail {

Predecessors reverse_graph(const Csr& m) {
    const std::size_t n = m.size();
    Predecessors r;
    r.start.assign(n + 1, 0);
    for (const MatrixEntry& e : m.entries) ++r.start[e.column + 1];
    for (std::size_t i = 0; i < n; ++i) r.start[i + 1] += r.start[i];
    r.pred.resize(m.entries.size());
    std::vector<std::size_t> fill(r.start.begin(), r.start.end() - 1);
    for (std::size_t s = 0; s < n; ++s) {
        for (const MatrixEntry& e : m.row(s)) r.pred[fill[e.column]++] = static_cast<StateIndex>(s);
    }
    return r;
}

namespace {

// States that can reach `target` moving only through `through` states.
StateSet backward_reach(const Predecessors& rev, const StateSet& through, const StateSet& target) {
    StateSet seen = target;
    std::vector<StateIndex> stack;
    for (std::size_t s = 0; s < target.size(); ++s) {
        if (target[s]) stack.push_back(static_cast<StateIndex>(s));
    }
    while (!stack.empty()) {
        StateIndex t = stack.back();
        stack.pop_back();
        for (StateIndex p : rev.of(t)) {
            if (!seen[p] && through[p]) {
                seen[p] = true;
                stack.push_back(p);
            }
        }
    }
    return seen;
}

}  // namespace

StateSet until_prob0(const Csr&, const Predecessors& rev, const StateSet& phi1, const StateSet& phi2) {
    StateSet reach = backward_reach(rev, phi1, phi2);
    reach.flip();
    return reach;
}

StateSet until_prob1(const Csr& m, const Predecessors& rev, const StateSet& phi1, const StateSet& phi2,
                     const StateSet& no) {
    // Complement of the states that can reach a prob0 state through phi1 & !phi2.
    const std::size_t n = m.size();
    StateSet through(n);
    for (std::size_t s = 0; s < n; ++s) through[s] = phi1[s] && !phi2[s];
    StateSet bad = backward_reach(rev, through, no);
    bad.flip();
    return bad;
}

std::vector<double> until_values(const Csr& m, const StateSet& phi1, const StateSet& phi2,
                                 const SolverOptions& options, SolverStats* stats) {
    const std::size_t n = m.size();
    Predecessors rev = reverse_graph(m);
    StateSet no = until_prob0(m, rev, phi1, phi2);
    StateSet yes = until_prob1(m, rev, phi1, phi2, no);

    std::vector<double> x(n, 0.0);
    std::vector<StateIndex> maybe;
    for (std::size_t s = 0; s < n; ++s) {
        if (yes[s]) {
            x[s] = 1.0;
        } else if (!no[s]) {
            maybe.push_back(static_cast<StateIndex>(s));
        }
    }

    SolverStats local;
    local.converged = true;
    if (!maybe.empty()) {
        local.converged = false;
        while (local.iterations < options.max_iterations) {
            ++local.iterations;
            double delta = 0.0;
            for (StateIndex s : maybe) {
                double acc = 0.0, diag = 0.0;
                for (const MatrixEntry& e : m.row(s)) {
                    if (e.column == s) {
                        diag += e.value;
                    } else {
                        acc += e.value * x[e.column];
                    }
                }
                double next = acc / (1.0 - diag);
                double change = std::abs(next - x[s]);
                if (next != 0.0) change /= next;
                delta = std::max(delta, change);
                x[s] = next;
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

}  // namespace detail

StateSet prob0(const SparseDtmc& dtmc, const StateSet& phi1, const StateSet& phi2) {
    auto m = detail::view(dtmc);
    return detail::until_prob0(m, detail::reverse_graph(m), phi1, phi2);
}

StateSet prob1(const SparseDtmc& dtmc, const StateSet& phi1, const StateSet& phi2) {
    auto m = detail::view(dtmc);
    auto rev = detail::reverse_graph(m);
    return detail::until_prob1(m, rev, phi1, phi2, detail::until_prob0(m, rev, phi1, phi2));
}

std::vector<double> solve_until(const SparseDtmc& dtmc, const StateSet& phi1, const StateSet& phi2,
                                const SolverOptions& options, SolverStats* stats) {
    return detail::until_values(detail::view(dtmc), phi1, phi2, options, stats);
}

std::vector<double> bounded_until(const SparseDtmc& dtmc, const StateSet& phi1, const StateSet& phi2,
                                  pctl::TimeBound op, std::uint64_t steps) {
    const std::size_t n = dtmc.num_states();
    std::uint64_t rounds = steps;
    if (op == pctl::TimeBound::Lt && rounds > 0) --rounds;
    std::vector<double> x(n), next(n);
    for (std::size_t s = 0; s < n; ++s) x[s] = phi2[s] ? 1.0 : 0.0;
    for (std::uint64_t k = 0; k < rounds; ++k) {
        bool changed = false;
        for (std::size_t s = 0; s < n; ++s) {
            if (phi2[s]) {
                next[s] = 1.0;
            } else if (!phi1[s]) {
                next[s] = 0.0;
            } else {
                double acc = 0.0;
                for (const MatrixEntry& e : dtmc.row(static_cast<StateIndex>(s))) acc += e.value * x[e.column];
                next[s] = acc;
                changed = changed || acc != x[s];
            }
        }
        x.swap(next);
        // Exact fixpoint: further rounds reproduce the same vector bit for bit.
        if (!changed) break;
    }
    return x;
}

std::vector<double> prob_next(const SparseDtmc& dtmc, const StateSet& phi) {
    std::vector<double> x(dtmc.num_states(), 0.0);
    for (std::size_t s = 0; s < x.size(); ++s) {
        double acc = 0.0;
        for (const MatrixEntry& e : dtmc.row(static_cast<StateIndex>(s))) {
            if (phi[e.column]) acc += e.value;
        }
        x[s] = acc;
    }
    return x;
}

std::vector<double> prob_globally(const SparseDtmc& dtmc, const StateSet& phi, const SolverOptions& options,
                                  SolverStats* stats) {
    StateSet all(dtmc.num_states(), true);
    StateSet bad = phi;
    bad.flip();
    std::vector<double> x = solve_until(dtmc, all, bad, options, stats);
    for (double& v : x) v = 1.0 - v;
    return x;
}

}  // namespace tmc
