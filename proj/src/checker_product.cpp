// Nested path formulas on chains: the formula is unrolled one state at a time
// (formula progression) and the chain is multiplied with the resulting finite
// set of obligations. Every supported operator is co-safe, so an obligation
// that stays pending forever is violated and the problem reduces to reaching
// the accepting sink.

#include <algorithm>
#include <map>
#include <unordered_map>

#include "checker_internal.hpp"
#include "tmc/errors.hpp"

namespace tmc {

namespace {

using Clause = std::vector<int>;   // sorted conjunction of pending atoms
using Dnf = std::vector<Clause>;   // sorted disjunction; {} is false, {{}} is true

bool is_true(const Dnf& d) { return d.size() == 1 && d.front().empty(); }

void normalize(Dnf& d) {
    std::sort(d.begin(), d.end(), [](const Clause& a, const Clause& b) {
        return a.size() != b.size() ? a.size() < b.size() : a < b;
    });
    d.erase(std::unique(d.begin(), d.end()), d.end());
    Dnf kept;
    for (const Clause& c : d) {
        bool subsumed = std::any_of(kept.begin(), kept.end(), [&](const Clause& k) {
            return std::includes(c.begin(), c.end(), k.begin(), k.end());
        });
        if (!subsumed) kept.push_back(c);
    }
    std::sort(kept.begin(), kept.end());
    d.swap(kept);
}

Dnf lor(Dnf a, const Dnf& b) {
    a.insert(a.end(), b.begin(), b.end());
    normalize(a);
    return a;
}

Dnf land(const Dnf& a, const Dnf& b) {
    Dnf out;
    for (const Clause& x : a) {
        for (const Clause& y : b) {
            Clause c;
            std::set_union(x.begin(), x.end(), y.begin(), y.end(), std::back_inserter(c));
            out.push_back(std::move(c));
        }
    }
    normalize(out);
    return out;
}

class Progression {
   public:
    Progression(const std::function<StateSet(const pctl::StateFormula&)>& sat) : sat_(sat) {}

    int atom(const pctl::PathPtr& p) {
        std::string key = pctl::format_path(*p);
        auto [it, inserted] = atom_ids_.emplace(std::move(key), static_cast<int>(atoms_.size()));
        if (inserted) atoms_.push_back(p);
        return it->second;
    }

    Dnf step(const Dnf& obligation, StateIndex s) {
        Dnf out;
        for (const Clause& c : obligation) {
            Dnf conj{{}};
            for (int a : c) {
                conj = land(conj, progress(a, s));
                if (conj.empty()) break;
            }
            out = lor(std::move(out), conj);
            if (is_true(out)) break;
        }
        return out;
    }

   private:
    Dnf progress(int id, StateIndex s) {
        auto key = std::make_pair(id, s);
        if (auto it = memo_.find(key); it != memo_.end()) return it->second;
        Dnf d = progress_formula(atoms_[id], s);
        memo_.emplace(key, d);
        return d;
    }

    Dnf progress_formula(const pctl::PathPtr& p, StateIndex s) {
        using namespace pctl;
        return std::visit(
            [&](const auto& n) -> Dnf {
                using T = std::decay_t<decltype(n)>;
                if constexpr (std::is_same_v<T, Holds>) {
                    return holds(n.formula)[s] ? Dnf{{}} : Dnf{};
                } else if constexpr (std::is_same_v<T, Next>) {
                    return Dnf{{atom(n.operand)}};
                } else if constexpr (std::is_same_v<T, Until>) {
                    Dnf rest = land(progress(atom(n.lhs), s), Dnf{{atom(p)}});
                    return lor(progress(atom(n.rhs), s), rest);
                } else if constexpr (std::is_same_v<T, BoundedUntil>) {
                    std::uint64_t k = n.steps;
                    if (n.op == TimeBound::Lt && k > 0) --k;
                    Dnf now = progress(atom(n.rhs), s);
                    if (k == 0) return now;
                    int later = atom(make_bounded_until(n.lhs, n.rhs, TimeBound::Le, k - 1));
                    return lor(now, land(progress(atom(n.lhs), s), Dnf{{later}}));
                } else {
                    throw UnsupportedPathFormula("G is only supported as the outermost path operator");
                }
            },
            p->node);
    }

    const StateSet& holds(const pctl::StatePtr& f) {
        auto it = holds_.find(f.get());
        if (it == holds_.end()) it = holds_.emplace(f.get(), sat_(*f)).first;
        return it->second;
    }

    const std::function<StateSet(const pctl::StateFormula&)>& sat_;
    std::vector<pctl::PathPtr> atoms_;
    std::map<std::string, int> atom_ids_;
    std::map<const pctl::StateFormula*, StateSet> holds_;
    std::map<std::pair<int, StateIndex>, Dnf> memo_;
};

}  // namespace

std::vector<double> prob_path_product(const SparseDtmc& dtmc, const pctl::PathFormula& path,
                                      const std::function<StateSet(const pctl::StateFormula&)>& sat,
                                      const SolverOptions& options, SolverStats* stats) {
    const std::size_t n = dtmc.num_states();
    Progression prog(sat);
    auto root = std::make_shared<const pctl::PathFormula>(path);

    std::map<Dnf, std::uint32_t> obligation_ids;
    std::vector<Dnf> obligations;
    auto intern = [&](Dnf d) {
        auto [it, inserted] = obligation_ids.emplace(d, static_cast<std::uint32_t>(obligations.size()));
        if (inserted) obligations.push_back(std::move(d));
        return it->second;
    };
    const std::uint32_t start = intern(Dnf{{prog.atom(root)}});

    // Nodes 0 and 1 are the accepting and rejecting sinks.
    constexpr std::uint32_t kAccept = 0, kReject = 1;
    std::unordered_map<std::uint64_t, std::uint32_t> index;
    std::vector<std::pair<StateIndex, std::uint32_t>> nodes{{0, 0}, {0, 0}};
    auto node_of = [&](StateIndex s, std::uint32_t o) {
        std::uint64_t key = (static_cast<std::uint64_t>(o) << 32) | s;
        auto [it, inserted] = index.emplace(key, static_cast<std::uint32_t>(nodes.size()));
        if (inserted) nodes.emplace_back(s, o);
        return it->second;
    };
    std::vector<std::uint32_t> seeds(n);
    for (std::size_t s = 0; s < n; ++s) seeds[s] = node_of(static_cast<StateIndex>(s), start);

    std::vector<std::size_t> row_start{0, 1, 2};
    std::vector<MatrixEntry> entries{{kAccept, 1.0}, {kReject, 1.0}};
    for (std::size_t i = 2; i < nodes.size(); ++i) {
        auto [s, o] = nodes[i];
        Dnf next = prog.step(obligations[o], s);
        if (next.empty()) {
            entries.push_back({kReject, 1.0});
        } else if (is_true(next)) {
            entries.push_back({kAccept, 1.0});
        } else {
            std::uint32_t o2 = intern(std::move(next));
            for (const MatrixEntry& e : dtmc.row(s)) entries.push_back({node_of(e.column, o2), e.value});
        }
        row_start.push_back(entries.size());
    }

    detail::Csr m{row_start, entries};
    StateSet all(nodes.size(), true), accept(nodes.size(), false);
    accept[kAccept] = true;
    std::vector<double> x = detail::until_values(m, all, accept, options, stats);
    std::vector<double> out(n);
    for (std::size_t s = 0; s < n; ++s) out[s] = x[seeds[s]];
    return out;
}

}  // namespace tmc
