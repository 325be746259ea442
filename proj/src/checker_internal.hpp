#pragma once

#include <span>
#include <vector>

#include "tmc/checker.hpp"

namespace tmc::detail {

// Borrowed row-compressed chain; the product construction reuses the same
// kernels as SparseDtmc.
struct Csr {
    std::span<const std::size_t> row_start;
    std::span<const MatrixEntry> entries;

    std::size_t size() const noexcept { return row_start.size() - 1; }
    std::span<const MatrixEntry> row(std::size_t s) const {
        return entries.subspan(row_start[s], row_start[s + 1] - row_start[s]);
    }
};

inline Csr view(const SparseDtmc& d) { return {d.row_start(), d.entries()}; }

// Reverse adjacency: predecessors of t are pred[start[t] .. start[t+1]).
struct Predecessors {
    std::vector<std::size_t> start;
    std::vector<StateIndex> pred;

    std::span<const StateIndex> of(std::size_t t) const { return {pred.data() + start[t], start[t + 1] - start[t]}; }
};

Predecessors reverse_graph(const Csr& m);

StateSet until_prob0(const Csr& m, const Predecessors& rev, const StateSet& phi1, const StateSet& phi2);
StateSet until_prob1(const Csr& m, const Predecessors& rev, const StateSet& phi1, const StateSet& phi2,
                     const StateSet& no);
std::vector<double> until_values(const Csr& m, const StateSet& phi1, const StateSet& phi2,
                                 const SolverOptions& options, SolverStats* stats);

}  // namespace tmc::detail
