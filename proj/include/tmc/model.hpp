#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace tmc {

using StateIndex = std::uint32_t;
using ActionId = std::uint32_t;
using FeatureValue = std::int32_t;
using StateView = std::span<const FeatureValue>;

// Membership vector over state indices of one model.
using StateSet = std::vector<bool>;

inline constexpr double kStochasticTolerance = 1e-9;

struct FeatureBound {
    std::int64_t lo = 0;
    std::int64_t hi = 0;
    friend bool operator==(const FeatureBound&, const FeatureBound&) = default;
};

/// Ordered, named integer features with inclusive bounds. Exactly one feature
/// is the turn feature.
class FeatureSchema {
   public:
    FeatureSchema() = default;
    FeatureSchema(std::vector<std::string> names, std::vector<FeatureBound> bounds,
                  const std::string& turn_feature);

    std::size_t size() const noexcept { return names_.size(); }
    const std::string& name(std::size_t i) const { return names_.at(i); }
    const FeatureBound& bound(std::size_t i) const { return bounds_.at(i); }
    const std::vector<std::string>& names() const noexcept { return names_; }
    const std::vector<FeatureBound>& bounds() const noexcept { return bounds_; }
    std::size_t turn_index() const noexcept { return turn_index_; }
    std::optional<std::size_t> index_of(const std::string& name) const;

    bool admits(StateView s) const;
    // Throws InvalidState naming the first offending feature.
    void validate(StateView s) const;

    friend bool operator==(const FeatureSchema& a, const FeatureSchema& b) {
        return a.names_ == b.names_ && a.bounds_ == b.bounds_ && a.turn_index_ == b.turn_index_;
    }

   private:
    std::vector<std::string> names_;
    std::vector<FeatureBound> bounds_;
    std::size_t turn_index_ = 0;
    std::unordered_map<std::string, std::size_t> index_;
};

struct FactoredState {
    std::vector<FeatureValue> values;

    FactoredState() = default;
    explicit FactoredState(std::vector<FeatureValue> v) : values(std::move(v)) {}
    explicit FactoredState(StateView v) : values(v.begin(), v.end()) {}

    StateView view() const noexcept { return values; }
    operator StateView() const noexcept { return values; }
    std::size_t size() const noexcept { return values.size(); }
    FeatureValue operator[](std::size_t i) const { return values[i]; }

    friend auto operator<=>(const FactoredState&, const FactoredState&) = default;
    friend bool operator==(const FactoredState&, const FactoredState&) = default;
};

std::uint64_t hash_state(StateView s) noexcept;

struct FactoredStateHash {
    std::size_t operator()(const FactoredState& s) const noexcept { return hash_state(s.view()); }
};

std::string format_state(const FeatureSchema& schema, StateView s);

/// Interning store for fixed-width states. Indices are assigned in insertion
/// order and never change; lookups use an exact open-addressing hash index.
class StateStore {
   public:
    explicit StateStore(std::size_t width = 0);

    // Returns the index of `s` and whether it was newly inserted.
    std::pair<StateIndex, bool> intern(StateView s);
    std::optional<StateIndex> find(StateView s) const;

    StateView operator[](StateIndex i) const {
        return StateView(data_.data() + static_cast<std::size_t>(i) * width_, width_);
    }
    std::size_t size() const noexcept { return count_; }
    std::size_t width() const noexcept { return width_; }

   private:
    void grow();
    bool equals(StateIndex i, StateView s) const;

    std::size_t width_;
    std::size_t count_ = 0;
    std::vector<FeatureValue> data_;
    std::vector<StateIndex> slots_;
};

/// State storage, atomic-proposition labels and action names shared by the
/// explicit MDP and the DTMC.
struct StateSpace {
    FeatureSchema schema;
    StateStore states;
    std::map<std::string, StateSet> labels;
    std::vector<std::string> action_names;

    std::size_t size() const noexcept { return states.size(); }
    StateView state(StateIndex i) const { return states[i]; }
};

struct MatrixEntry {
    StateIndex column;
    double value;
    friend bool operator==(const MatrixEntry&, const MatrixEntry&) = default;
};

// Row-compressed, row-stochastic transition matrix with one action per state.
class SparseDtmc {
   public:
    SparseDtmc() = default;
    SparseDtmc(StateSpace space, StateIndex initial, std::vector<std::size_t> row_start,
               std::vector<MatrixEntry> entries, std::vector<ActionId> row_action);

    std::size_t num_states() const noexcept { return space_.size(); }
    std::size_t num_transitions() const noexcept { return entries_.size(); }
    StateIndex initial() const noexcept { return initial_; }
    const StateSpace& space() const noexcept { return space_; }
    const FeatureSchema& schema() const noexcept { return space_.schema; }
    StateView state(StateIndex i) const { return space_.state(i); }
    const std::map<std::string, StateSet>& labels() const noexcept { return space_.labels; }
    std::span<const MatrixEntry> row(StateIndex s) const {
        return {entries_.data() + row_start_[s], row_start_[s + 1] - row_start_[s]};
    }
    ActionId row_action(StateIndex s) const { return row_action_[s]; }
    const std::vector<std::size_t>& row_start() const noexcept { return row_start_; }
    const std::vector<MatrixEntry>& entries() const noexcept { return entries_; }

   private:
    StateSpace space_;
    StateIndex initial_ = 0;
    std::vector<std::size_t> row_start_{0};
    std::vector<MatrixEntry> entries_;
    std::vector<ActionId> row_action_;
};

// Explicit MDP in row-group layout: state s owns choices
// [choice_start[s], choice_start[s+1]), choice c owns entries
// [row_start[c], row_start[c+1]).
class ExplicitMdp {
   public:
    ExplicitMdp() = default;
    ExplicitMdp(StateSpace space, StateIndex initial, std::vector<std::size_t> choice_start,
                std::vector<ActionId> choice_action, std::vector<std::size_t> row_start,
                std::vector<MatrixEntry> entries);

    std::size_t num_states() const noexcept { return space_.size(); }
    std::size_t num_choices() const noexcept { return choice_action_.size(); }
    std::size_t num_transitions() const noexcept { return entries_.size(); }
    StateIndex initial() const noexcept { return initial_; }
    const StateSpace& space() const noexcept { return space_; }
    const FeatureSchema& schema() const noexcept { return space_.schema; }
    StateView state(StateIndex i) const { return space_.state(i); }
    const std::map<std::string, StateSet>& labels() const noexcept { return space_.labels; }

    std::size_t choice_begin(StateIndex s) const { return choice_start_[s]; }
    std::size_t choice_end(StateIndex s) const { return choice_start_[s + 1]; }
    ActionId choice_action(std::size_t c) const { return choice_action_[c]; }
    std::span<const MatrixEntry> choice_row(std::size_t c) const {
        return {entries_.data() + row_start_[c], row_start_[c + 1] - row_start_[c]};
    }
    // The choice of `s` labelled with `a`, if enabled.
    std::optional<std::size_t> find_choice(StateIndex s, ActionId a) const;

   private:
    StateSpace space_;
    StateIndex initial_ = 0;
    std::vector<std::size_t> choice_start_{0};
    std::vector<ActionId> choice_action_;
    std::vector<std::size_t> row_start_{0};
    std::vector<MatrixEntry> entries_;
};

/// Enabled actions of an explicit state, in action-id order.
std::vector<ActionId> enabled_actions(const ExplicitMdp& mdp, StateIndex s);

/// Restricts `mdp` to the states reachable from its initial state when every
/// state plays `policy(s)`; states are re-indexed in breadth-first order.
/// Throws PolicySelectsDisabledAction.
SparseDtmc induce_dtmc_monolithic(const ExplicitMdp& mdp,
                                  const std::function<ActionId(StateIndex)>& policy);

/// Copy of `dtmc` with states re-indexed in lexicographic feature order.
SparseDtmc canonicalize(const SparseDtmc& dtmc);

// Plain-text triple list: header, `src action dst prob` lines sorted by
// (src, action name, dst), then one `label NAME: ...` line per label.
void export_explicit(std::ostream& out, const ExplicitMdp& mdp);
void export_explicit(std::ostream& out, const SparseDtmc& dtmc);

}  // namespace tmc
