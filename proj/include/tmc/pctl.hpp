#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace tmc::pctl {

enum class CompareOp { Eq, Ne, Lt, Le, Gt, Ge };
enum class Quantifier { Plain, Max, Min };
enum class BoundOp { Lt, Le, Gt, Ge };
enum class TimeBound { Lt, Le };

struct StateFormula;
struct PathFormula;
using StatePtr = std::shared_ptr<const StateFormula>;
using PathPtr = std::shared_ptr<const PathFormula>;

struct True {};
struct Atom {
    std::string label;
};
struct Comparison {
    std::string feature;
    CompareOp op;
    std::int64_t value;
};
struct And {
    StatePtr lhs;
    StatePtr rhs;
};
struct Not {
    StatePtr operand;
};
struct ProbBound {
    BoundOp op;
    double threshold;
};
struct Prob {
    Quantifier quantifier;
    std::optional<ProbBound> bound;
    PathPtr path;
};

struct StateFormula {
    std::variant<True, Atom, Comparison, And, Not, Prob> node;
};

// A state formula in path position: holds on a path iff it holds in the
// path's first state. Lets until operands nest path formulas.
struct Holds {
    StatePtr formula;
};
struct Next {
    PathPtr operand;
};
struct Until {
    PathPtr lhs;
    PathPtr rhs;
};
struct BoundedUntil {
    PathPtr lhs;
    PathPtr rhs;
    TimeBound op;
    std::uint64_t steps;
};
struct Globally {
    PathPtr operand;
};

struct PathFormula {
    std::variant<Holds, Next, Until, BoundedUntil, Globally> node;
};

// Structural (deep) equality.
bool operator==(const StateFormula& a, const StateFormula& b);
bool operator==(const PathFormula& a, const PathFormula& b);

// Construction helpers.
StatePtr make_true();
StatePtr make_atom(std::string label);
StatePtr make_comparison(std::string feature, CompareOp op, std::int64_t value);
StatePtr make_and(StatePtr lhs, StatePtr rhs);
StatePtr make_not(StatePtr operand);
StatePtr make_prob(Quantifier q, std::optional<ProbBound> bound, PathPtr path);
PathPtr make_holds(StatePtr formula);
PathPtr make_next(PathPtr operand);
PathPtr make_until(PathPtr lhs, PathPtr rhs);
PathPtr make_bounded_until(PathPtr lhs, PathPtr rhs, TimeBound op, std::uint64_t steps);
PathPtr make_finally(PathPtr operand);  // true U operand
PathPtr make_bounded_finally(PathPtr operand, TimeBound op, std::uint64_t steps);
PathPtr make_globally(PathPtr operand);

/// Parses an ASCII property such as `P=? [ F "won_1" ]`,
/// `Pmax=? [ F<=10 x>=2 ]` or the shorthand `P(F won_1)`.
/// Throws SyntaxError or BoundOutOfRange, both carrying line and column.
StatePtr parse_property(std::string_view text);

/// Canonical text; parse_property(format_property(f)) is structurally equal
/// to f.
std::string format_property(const StateFormula& f);
std::string format_path(const PathFormula& p);

// True if `f` is a query (`P=?`, `Pmax=?`, `Pmin=?`) rather than a boolean
// state formula.
bool is_query(const StateFormula& f);

}  // namespace tmc::pctl
