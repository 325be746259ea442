#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "tmc/model.hpp"
#include "tmc/pctl.hpp"

namespace tmc {

struct SolverOptions {
    double tolerance = 1e-8;  // max relative change between sweeps
    std::uint64_t max_iterations = 1'000'000;
};

struct SolverStats {
    std::uint64_t iterations = 0;
    double residual = 0.0;
    bool converged = true;

    // Accumulates a nested solve into this one.
    void absorb(const SolverStats& other);
};

// Qualitative precomputation for P(phi1 U phi2) on a chain.
StateSet prob0(const SparseDtmc& dtmc, const StateSet& phi1, const StateSet& phi2);
StateSet prob1(const SparseDtmc& dtmc, const StateSet& phi1, const StateSet& phi2);

/// P(phi1 U phi2) for every state: prob0/prob1 followed by Gauss-Seidel over
/// the remaining states in ascending index order. On non-convergence the last
/// iterate is returned and `stats->converged` is false.
std::vector<double> solve_until(const SparseDtmc& dtmc, const StateSet& phi1, const StateSet& phi2,
                                const SolverOptions& options = {}, SolverStats* stats = nullptr);

// `<` with steps == 0 is treated like `<=0`: the indicator of phi2.
std::vector<double> bounded_until(const SparseDtmc& dtmc, const StateSet& phi1, const StateSet& phi2,
                                  pctl::TimeBound op, std::uint64_t steps);

std::vector<double> prob_next(const SparseDtmc& dtmc, const StateSet& phi);

// 1 - P(F !phi).
std::vector<double> prob_globally(const SparseDtmc& dtmc, const StateSet& phi, const SolverOptions& options = {},
                                  SolverStats* stats = nullptr);

/// Probability of an arbitrary co-safe path formula (nested until, next and
/// bounded until over path operands) via a product with the formula's
/// progression automaton. Throws UnsupportedPathFormula for G below the root.
/// `sat` returns the satisfaction set of a state formula in path position.
std::vector<double> prob_path_product(const SparseDtmc& dtmc, const pctl::PathFormula& path,
                                      const std::function<StateSet(const pctl::StateFormula&)>& sat,
                                      const SolverOptions& options = {}, SolverStats* stats = nullptr);

/// Pmax / Pmin of a path formula whose operands are state formulas, given
/// their satisfaction sets (`phi1` is ignored for X and G).
std::vector<double> mdp_check_extremal(const ExplicitMdp& mdp, pctl::Quantifier quantifier,
                                       const pctl::PathFormula& path, const StateSet& phi1, const StateSet& phi2,
                                       const SolverOptions& options = {}, SolverStats* stats = nullptr);

struct CheckResult {
    bool is_query = false;
    std::vector<double> values;  // per state, clamped to [0,1]; queries only
    StateSet satisfied;          // per state; boolean formulas only
    double value_at_initial = 0.0;
    SolverStats stats;
    double seconds = 0.0;
};

/// Evaluates a state formula bottom-up. A top-level query yields the value
/// vector; any other formula yields its satisfaction set and 1/0 at the
/// initial state. Atoms name labels; an atom that is not a label but reads as
/// `feature OP int` is evaluated as that comparison.
CheckResult check(const SparseDtmc& dtmc, const pctl::StateFormula& formula, const SolverOptions& options = {});
CheckResult check(const ExplicitMdp& mdp, const pctl::StateFormula& formula, const SolverOptions& options = {});

}  // namespace tmc
