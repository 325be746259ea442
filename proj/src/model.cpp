#include "tmc/model.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <ostream>

#include <fmt/format.h>

#include "tmc/errors.hpp"

namespace tmc {

namespace {

constexpr StateIndex kEmptySlot = std::numeric_limits<StateIndex>::max();

std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

void check_rows(std::span<const MatrixEntry> row, std::size_t num_states, const std::string& where) {
    double sum = 0.0;
    for (const auto& e : row) {
        if (e.column >= num_states) {
            throw ModelError(fmt::format("{}: successor index {} out of range", where, e.column));
        }
        if (!(e.value > 0.0)) {
            throw ModelError(fmt::format("{}: non-positive transition probability {}", where, e.value));
        }
        sum += e.value;
    }
    if (std::abs(sum - 1.0) > kStochasticTolerance) {
        throw ProbabilitiesDoNotSumToOne(fmt::format("{}: row sums to {:.17g}", where, sum));
    }
}

}  // namespace

// ---------------------------------------------------------------------------

FeatureSchema::FeatureSchema(std::vector<std::string> names, std::vector<FeatureBound> bounds,
                             const std::string& turn_feature)
    : names_(std::move(names)), bounds_(std::move(bounds)) {
    if (names_.size() != bounds_.size()) {
        throw Error("feature schema: names and bounds differ in length");
    }
    for (std::size_t i = 0; i < names_.size(); ++i) {
        if (names_[i].empty()) throw Error("feature schema: empty feature name");
        if (bounds_[i].lo > bounds_[i].hi) {
            throw Error(fmt::format("feature schema: empty range for '{}'", names_[i]));
        }
        if (bounds_[i].lo < std::numeric_limits<FeatureValue>::min() ||
            bounds_[i].hi > std::numeric_limits<FeatureValue>::max()) {
            throw Error(fmt::format("feature schema: range of '{}' exceeds 32 bits", names_[i]));
        }
        if (!index_.emplace(names_[i], i).second) {
            throw Error(fmt::format("feature schema: duplicate feature '{}'", names_[i]));
        }
    }
    auto turn = index_of(turn_feature);
    if (!turn) throw Error(fmt::format("feature schema: turn feature '{}' not declared", turn_feature));
    turn_index_ = *turn;
}

std::optional<std::size_t> FeatureSchema::index_of(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

bool FeatureSchema::admits(StateView s) const {
    if (s.size() != size()) return false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] < bounds_[i].lo || s[i] > bounds_[i].hi) return false;
    }
    return true;
}

void FeatureSchema::validate(StateView s) const {
    if (s.size() != size()) {
        throw InvalidState(fmt::format("state has {} features, schema has {}", s.size(), size()));
    }
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] < bounds_[i].lo || s[i] > bounds_[i].hi) {
            throw InvalidState(fmt::format("feature '{}' = {} outside [{}..{}]", names_[i], s[i],
                                           bounds_[i].lo, bounds_[i].hi));
        }
    }
}

std::uint64_t hash_state(StateView s) noexcept {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL ^ s.size();
    for (FeatureValue v : s) {
        h = mix64(h ^ static_cast<std::uint32_t>(v));
    }
    return h;
}

std::string format_state(const FeatureSchema& schema, StateView s) {
    std::string out = "(";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += ',';
        out += i < schema.size() ? fmt::format("{}={}", schema.name(i), s[i]) : std::to_string(s[i]);
    }
    return out + ")";
}

// ---------------------------------------------------------------------------

StateStore::StateStore(std::size_t width) : width_(width), slots_(64, kEmptySlot) {}

bool StateStore::equals(StateIndex i, StateView s) const {
    const FeatureValue* p = data_.data() + static_cast<std::size_t>(i) * width_;
    return std::equal(s.begin(), s.end(), p);
}

std::optional<StateIndex> StateStore::find(StateView s) const {
    const std::size_t mask = slots_.size() - 1;
    for (std::size_t pos = hash_state(s) & mask;; pos = (pos + 1) & mask) {
        StateIndex slot = slots_[pos];
        if (slot == kEmptySlot) return std::nullopt;
        if (equals(slot, s)) return slot;
    }
}

std::pair<StateIndex, bool> StateStore::intern(StateView s) {
    if (s.size() != width_) throw InvalidState("state width does not match store width");
    if ((count_ + 1) * 2 > slots_.size()) grow();
    const std::size_t mask = slots_.size() - 1;
    std::size_t pos = hash_state(s) & mask;
    for (;; pos = (pos + 1) & mask) {
        StateIndex slot = slots_[pos];
        if (slot == kEmptySlot) break;
        if (equals(slot, s)) return {slot, false};
    }
    if (count_ >= kEmptySlot) throw Error("state store: index space exhausted");
    auto index = static_cast<StateIndex>(count_++);
    data_.insert(data_.end(), s.begin(), s.end());
    slots_[pos] = index;
    return {index, true};
}

void StateStore::grow() {
    std::vector<StateIndex> fresh(slots_.size() * 2, kEmptySlot);
    const std::size_t mask = fresh.size() - 1;
    for (StateIndex i = 0; i < count_; ++i) {
        std::size_t pos = hash_state((*this)[i]) & mask;
        while (fresh[pos] != kEmptySlot) pos = (pos + 1) & mask;
        fresh[pos] = i;
    }
    slots_ = std::move(fresh);
}

// ---------------------------------------------------------------------------

SparseDtmc::SparseDtmc(StateSpace space, StateIndex initial, std::vector<std::size_t> row_start,
                       std::vector<MatrixEntry> entries, std::vector<ActionId> row_action)
    : space_(std::move(space)),
      initial_(initial),
      row_start_(std::move(row_start)),
      entries_(std::move(entries)),
      row_action_(std::move(row_action)) {
    const std::size_t n = space_.size();
    if (initial_ >= n) throw ModelError("dtmc: initial state index out of range");
    if (row_start_.size() != n + 1 || row_action_.size() != n || row_start_.back() != entries_.size()) {
        throw ModelError("dtmc: inconsistent row structure");
    }
    for (StateIndex s = 0; s < n; ++s) check_rows(row(s), n, fmt::format("dtmc row {}", s));
    for (const auto& [name, set] : space_.labels) {
        if (set.size() != n) throw ModelError(fmt::format("dtmc: label '{}' has wrong length", name));
    }
}

ExplicitMdp::ExplicitMdp(StateSpace space, StateIndex initial, std::vector<std::size_t> choice_start,
                         std::vector<ActionId> choice_action, std::vector<std::size_t> row_start,
                         std::vector<MatrixEntry> entries)
    : space_(std::move(space)),
      initial_(initial),
      choice_start_(std::move(choice_start)),
      choice_action_(std::move(choice_action)),
      row_start_(std::move(row_start)),
      entries_(std::move(entries)) {
    const std::size_t n = space_.size();
    if (initial_ >= n) throw ModelError("mdp: initial state index out of range");
    if (choice_start_.size() != n + 1 || choice_start_.back() != choice_action_.size() ||
        row_start_.size() != choice_action_.size() + 1 || row_start_.back() != entries_.size()) {
        throw ModelError("mdp: inconsistent row-group structure");
    }
    for (StateIndex s = 0; s < n; ++s) {
        if (choice_begin(s) == choice_end(s)) {
            throw DeadlockState(fmt::format("mdp: state {} has no enabled action", s));
        }
        for (std::size_t c = choice_begin(s); c < choice_end(s); ++c) {
            check_rows(choice_row(c), n, fmt::format("mdp state {} choice {}", s, c));
        }
    }
}

std::optional<std::size_t> ExplicitMdp::find_choice(StateIndex s, ActionId a) const {
    for (std::size_t c = choice_begin(s); c < choice_end(s); ++c) {
        if (choice_action_[c] == a) return c;
    }
    return std::nullopt;
}

std::vector<ActionId> enabled_actions(const ExplicitMdp& mdp, StateIndex s) {
    std::vector<ActionId> out;
    for (std::size_t c = mdp.choice_begin(s); c < mdp.choice_end(s); ++c) out.push_back(mdp.choice_action(c));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

SparseDtmc induce_dtmc_monolithic(const ExplicitMdp& mdp, const std::function<ActionId(StateIndex)>& policy) {
    const std::size_t n = mdp.num_states();
    std::vector<StateIndex> new_index(n, kEmptySlot);
    std::vector<StateIndex> order;
    std::deque<StateIndex> frontier;

    new_index[mdp.initial()] = 0;
    order.push_back(mdp.initial());
    frontier.push_back(mdp.initial());

    std::vector<std::size_t> row_start{0};
    std::vector<MatrixEntry> entries;
    std::vector<ActionId> row_action;
    while (!frontier.empty()) {
        StateIndex s = frontier.front();
        frontier.pop_front();
        ActionId a = policy(s);
        auto choice = mdp.find_choice(s, a);
        if (!choice) {
            const auto& names = mdp.space().action_names;
            throw PolicySelectsDisabledAction(
                fmt::format("policy selects disabled action '{}' in state {}",
                            a < names.size() ? names[a] : std::to_string(a),
                            format_state(mdp.schema(), mdp.state(s))));
        }
        for (const auto& e : mdp.choice_row(*choice)) {
            if (new_index[e.column] == kEmptySlot) {
                new_index[e.column] = static_cast<StateIndex>(order.size());
                order.push_back(e.column);
                frontier.push_back(e.column);
            }
            entries.push_back({new_index[e.column], e.value});
        }
        row_start.push_back(entries.size());
        row_action.push_back(a);
    }

    StateSpace space{mdp.schema(), StateStore(mdp.schema().size()), {}, mdp.space().action_names};
    for (StateIndex old : order) space.states.intern(mdp.state(old));
    for (const auto& [name, set] : mdp.labels()) {
        StateSet restricted(order.size());
        for (std::size_t i = 0; i < order.size(); ++i) restricted[i] = set[order[i]];
        space.labels.emplace(name, std::move(restricted));
    }
    return SparseDtmc(std::move(space), 0, std::move(row_start), std::move(entries), std::move(row_action));
}

SparseDtmc canonicalize(const SparseDtmc& dtmc) {
    const std::size_t n = dtmc.num_states();
    std::vector<StateIndex> order(n);
    std::iota(order.begin(), order.end(), StateIndex{0});
    std::sort(order.begin(), order.end(), [&](StateIndex a, StateIndex b) {
        auto x = dtmc.state(a);
        auto y = dtmc.state(b);
        return std::lexicographical_compare(x.begin(), x.end(), y.begin(), y.end());
    });
    std::vector<StateIndex> new_index(n);
    for (std::size_t i = 0; i < n; ++i) new_index[order[i]] = static_cast<StateIndex>(i);

    StateSpace space{dtmc.schema(), StateStore(dtmc.schema().size()), {}, dtmc.space().action_names};
    std::vector<std::size_t> row_start{0};
    std::vector<MatrixEntry> entries;
    std::vector<ActionId> row_action;
    for (StateIndex old : order) {
        space.states.intern(dtmc.state(old));
        std::vector<MatrixEntry> row;
        for (const auto& e : dtmc.row(old)) row.push_back({new_index[e.column], e.value});
        std::sort(row.begin(), row.end(), [](const auto& a, const auto& b) { return a.column < b.column; });
        entries.insert(entries.end(), row.begin(), row.end());
        row_start.push_back(entries.size());
        row_action.push_back(dtmc.row_action(old));
    }
    for (const auto& [name, set] : dtmc.labels()) {
        StateSet moved(n);
        for (std::size_t i = 0; i < n; ++i) moved[i] = set[order[i]];
        space.labels.emplace(name, std::move(moved));
    }
    return SparseDtmc(std::move(space), new_index[dtmc.initial()], std::move(row_start), std::move(entries),
                      std::move(row_action));
}

// ---------------------------------------------------------------------------

namespace {

struct ExportLine {
    StateIndex src;
    const std::string* action;
    StateIndex dst;
    double prob;
};

void write_export(std::ostream& out, std::size_t num_states, StateIndex initial, std::vector<ExportLine> lines,
                  const std::map<std::string, StateSet>& labels) {
    std::sort(lines.begin(), lines.end(), [](const ExportLine& a, const ExportLine& b) {
        if (a.src != b.src) return a.src < b.src;
        if (*a.action != *b.action) return *a.action < *b.action;
        return a.dst < b.dst;
    });
    out << fmt::format("states {} transitions {} initial {}\n", num_states, lines.size(), initial);
    for (const auto& l : lines) out << fmt::format("{} {} {} {:.17g}\n", l.src, *l.action, l.dst, l.prob);
    for (const auto& [name, set] : labels) {
        out << "label " << name << ':';
        for (std::size_t i = 0; i < set.size(); ++i) {
            if (set[i]) out << ' ' << i;
        }
        out << '\n';
    }
}

}  // namespace

void export_explicit(std::ostream& out, const ExplicitMdp& mdp) {
    std::vector<ExportLine> lines;
    lines.reserve(mdp.num_transitions());
    const auto& names = mdp.space().action_names;
    for (StateIndex s = 0; s < mdp.num_states(); ++s) {
        for (std::size_t c = mdp.choice_begin(s); c < mdp.choice_end(s); ++c) {
            for (const auto& e : mdp.choice_row(c)) {
                lines.push_back({s, &names.at(mdp.choice_action(c)), e.column, e.value});
            }
        }
    }
    write_export(out, mdp.num_states(), mdp.initial(), std::move(lines), mdp.labels());
}

void export_explicit(std::ostream& out, const SparseDtmc& dtmc) {
    std::vector<ExportLine> lines;
    lines.reserve(dtmc.num_transitions());
    const auto& names = dtmc.space().action_names;
    for (StateIndex s = 0; s < dtmc.num_states(); ++s) {
        for (const auto& e : dtmc.row(s)) lines.push_back({s, &names.at(dtmc.row_action(s)), e.column, e.value});
    }
    write_export(out, dtmc.num_states(), dtmc.initial(), std::move(lines), dtmc.labels());
}

}  // namespace tmc
