#include "tmc/pctl.hpp"

#include <cctype>
#include <charconv>
#include <vector>

#include <fmt/format.h>

#include "tmc/errors.hpp"

namespace tmc::pctl {

// ---------------------------------------------------------------------------
// Equality and construction.

namespace {

bool same(const StatePtr& a, const StatePtr& b) { return a == b || (a && b && *a == *b); }
bool same(const PathPtr& a, const PathPtr& b) { return a == b || (a && b && *a == *b); }

}  // namespace

bool operator==(const StateFormula& a, const StateFormula& b) {
    if (a.node.index() != b.node.index()) return false;
    return std::visit(
        [&](const auto& x) -> bool {
            using T = std::decay_t<decltype(x)>;
            const T& y = std::get<T>(b.node);
            if constexpr (std::is_same_v<T, True>) {
                return true;
            } else if constexpr (std::is_same_v<T, Atom>) {
                return x.label == y.label;
            } else if constexpr (std::is_same_v<T, Comparison>) {
                return x.feature == y.feature && x.op == y.op && x.value == y.value;
            } else if constexpr (std::is_same_v<T, And>) {
                return same(x.lhs, y.lhs) && same(x.rhs, y.rhs);
            } else if constexpr (std::is_same_v<T, Not>) {
                return same(x.operand, y.operand);
            } else {
                if (x.quantifier != y.quantifier || x.bound.has_value() != y.bound.has_value()) return false;
                if (x.bound && (x.bound->op != y.bound->op || x.bound->threshold != y.bound->threshold)) return false;
                return same(x.path, y.path);
            }
        },
        a.node);
}

bool operator==(const PathFormula& a, const PathFormula& b) {
    if (a.node.index() != b.node.index()) return false;
    return std::visit(
        [&](const auto& x) -> bool {
            using T = std::decay_t<decltype(x)>;
            const T& y = std::get<T>(b.node);
            if constexpr (std::is_same_v<T, Holds>) {
                return same(x.formula, y.formula);
            } else if constexpr (std::is_same_v<T, Next> || std::is_same_v<T, Globally>) {
                return same(x.operand, y.operand);
            } else if constexpr (std::is_same_v<T, Until>) {
                return same(x.lhs, y.lhs) && same(x.rhs, y.rhs);
            } else {
                return x.op == y.op && x.steps == y.steps && same(x.lhs, y.lhs) && same(x.rhs, y.rhs);
            }
        },
        a.node);
}

StatePtr make_true() { return std::make_shared<const StateFormula>(StateFormula{True{}}); }
StatePtr make_atom(std::string label) {
    return std::make_shared<const StateFormula>(StateFormula{Atom{std::move(label)}});
}
StatePtr make_comparison(std::string feature, CompareOp op, std::int64_t value) {
    return std::make_shared<const StateFormula>(StateFormula{Comparison{std::move(feature), op, value}});
}
StatePtr make_and(StatePtr lhs, StatePtr rhs) {
    return std::make_shared<const StateFormula>(StateFormula{And{std::move(lhs), std::move(rhs)}});
}
StatePtr make_not(StatePtr operand) {
    return std::make_shared<const StateFormula>(StateFormula{Not{std::move(operand)}});
}
StatePtr make_prob(Quantifier q, std::optional<ProbBound> bound, PathPtr path) {
    return std::make_shared<const StateFormula>(StateFormula{Prob{q, bound, std::move(path)}});
}
PathPtr make_holds(StatePtr formula) {
    return std::make_shared<const PathFormula>(PathFormula{Holds{std::move(formula)}});
}
PathPtr make_next(PathPtr operand) { return std::make_shared<const PathFormula>(PathFormula{Next{std::move(operand)}}); }
PathPtr make_until(PathPtr lhs, PathPtr rhs) {
    return std::make_shared<const PathFormula>(PathFormula{Until{std::move(lhs), std::move(rhs)}});
}
PathPtr make_bounded_until(PathPtr lhs, PathPtr rhs, TimeBound op, std::uint64_t steps) {
    return std::make_shared<const PathFormula>(PathFormula{BoundedUntil{std::move(lhs), std::move(rhs), op, steps}});
}
PathPtr make_finally(PathPtr operand) { return make_until(make_holds(make_true()), std::move(operand)); }
PathPtr make_bounded_finally(PathPtr operand, TimeBound op, std::uint64_t steps) {
    return make_bounded_until(make_holds(make_true()), std::move(operand), op, steps);
}
PathPtr make_globally(PathPtr operand) {
    return std::make_shared<const PathFormula>(PathFormula{Globally{std::move(operand)}});
}

bool is_query(const StateFormula& f) {
    const auto* p = std::get_if<Prob>(&f.node);
    return p && !p->bound;
}

// ---------------------------------------------------------------------------
// Parser.

namespace {

enum class Tok { Ident, Number, String, Punct, End };

struct Token {
    Tok kind;
    std::string text;
    std::size_t line;
    std::size_t col;
};

std::vector<Token> tokenize(std::string_view src) {
    std::vector<Token> out;
    std::size_t i = 0, line = 1, col = 1;
    auto advance = [&](std::size_t n) {
        for (std::size_t k = 0; k < n && i < src.size(); ++k, ++i) {
            if (src[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
    };
    while (i < src.size()) {
        char c = src[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            advance(1);
            continue;
        }
        std::size_t tl = line, tc = col, start = i;
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            while (i < src.size() && (std::isalnum(static_cast<unsigned char>(src[i])) || src[i] == '_')) advance(1);
            out.push_back({Tok::Ident, std::string(src.substr(start, i - start)), tl, tc});
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || (c == '.' && i + 1 < src.size() && std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
            while (i < src.size() && (std::isdigit(static_cast<unsigned char>(src[i])) || src[i] == '.')) advance(1);
            if (i < src.size() && (src[i] == 'e' || src[i] == 'E')) {
                advance(1);
                if (i < src.size() && (src[i] == '+' || src[i] == '-')) advance(1);
                while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) advance(1);
            }
            out.push_back({Tok::Number, std::string(src.substr(start, i - start)), tl, tc});
            continue;
        }
        if (c == '"') {
            advance(1);
            while (i < src.size() && src[i] != '"') advance(1);
            if (i >= src.size()) throw SyntaxError("unterminated quoted label", tl, tc);
            out.push_back({Tok::String, std::string(src.substr(start + 1, i - start - 1)), tl, tc});
            advance(1);
            continue;
        }
        if (src.substr(i, 2) == "<=" || src.substr(i, 2) == ">=" || src.substr(i, 2) == "!=") {
            out.push_back({Tok::Punct, std::string(src.substr(i, 2)), tl, tc});
            advance(2);
            continue;
        }
        if (std::string_view("()[]{}&|!=<>?-,").find(c) != std::string_view::npos) {
            out.push_back({Tok::Punct, std::string(1, c), tl, tc});
            advance(1);
            continue;
        }
        throw SyntaxError(fmt::format("unexpected character '{}'", c), tl, tc);
    }
    out.push_back({Tok::End, "", line, col});
    return out;
}

class PropertyParser {
   public:
    explicit PropertyParser(std::string_view text) : tokens_(tokenize(text)) {}

    StatePtr parse() {
        const Token& start = peek();
        PathPtr f = parse_expr();
        if (peek().kind != Tok::End) throw unexpected("end of property");
        return as_state(f, start, "a property must be a state formula (wrap path formulas in P=? [ ... ])");
    }

   private:
    const Token& peek(std::size_t ahead = 0) const { return tokens_[std::min(pos_ + ahead, tokens_.size() - 1)]; }
    const Token& next() { return tokens_[pos_ < tokens_.size() - 1 ? pos_++ : pos_]; }
    bool is_punct(const char* p, std::size_t ahead = 0) const {
        return peek(ahead).kind == Tok::Punct && peek(ahead).text == p;
    }
    bool is_ident(const char* w, std::size_t ahead = 0) const {
        return peek(ahead).kind == Tok::Ident && peek(ahead).text == w;
    }
    SyntaxError unexpected(const std::string& expected) const {
        const Token& t = peek();
        std::string found = t.kind == Tok::End ? "end of input" : fmt::format("'{}'", t.text);
        return SyntaxError(fmt::format("expected {}, found {}", expected, found), t.line, t.col);
    }
    void expect_punct(const char* p) {
        if (!is_punct(p)) throw unexpected(fmt::format("'{}'", p));
        next();
    }

    StatePtr as_state(const PathPtr& p, const Token& at, const char* message) const {
        if (const auto* h = std::get_if<Holds>(&p->node)) return h->formula;
        throw SyntaxError(message, at.line, at.col);
    }

    void reject_unsupported() const {
        const Token& t = peek();
        if (t.kind != Tok::Ident) return;
        if (t.text == "W") throw SyntaxError("weak until (W) is not supported", t.line, t.col);
        if (t.text == "R" || t.text == "Rmax" || t.text == "Rmin") {
            throw SyntaxError("reward operators (R) are not supported", t.line, t.col);
        }
    }

    std::optional<std::pair<TimeBound, std::uint64_t>> parse_time_bound() {
        if (!is_punct("<") && !is_punct("<=")) {
            if (is_punct(">") || is_punct(">=") || is_punct("=")) {
                throw SyntaxError("only upper time bounds (<k, <=k) are supported", peek().line, peek().col);
            }
            return std::nullopt;
        }
        TimeBound op = next().text == "<" ? TimeBound::Lt : TimeBound::Le;
        const Token& t = peek();
        if (t.kind != Tok::Number) throw unexpected("a non-negative integer step bound");
        std::uint64_t steps = 0;
        auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), steps);
        if (ec != std::errc() || ptr != t.text.data() + t.text.size()) {
            throw SyntaxError(fmt::format("step bound '{}' is not a non-negative integer", t.text), t.line, t.col);
        }
        next();
        return std::make_pair(op, steps);
    }

    // expr := and ( 'U' bound? and )*      (left-associative)
    PathPtr parse_expr() {
        PathPtr lhs = parse_and();
        for (;;) {
            reject_unsupported();
            if (!is_ident("U")) break;
            next();
            auto bound = parse_time_bound();
            PathPtr rhs = parse_and();
            lhs = bound ? make_bounded_until(lhs, rhs, bound->first, bound->second) : make_until(lhs, rhs);
        }
        return lhs;
    }

    PathPtr parse_and() {
        const Token& start = peek();
        PathPtr lhs = parse_unary();
        while (is_punct("&")) {
            const Token& at = next();
            PathPtr rhs = parse_unary();
            StatePtr l = as_state(lhs, start, "'&' applies to state formulas only");
            StatePtr r = as_state(rhs, at, "'&' applies to state formulas only");
            lhs = make_holds(make_and(l, r));
        }
        if (is_punct("|")) {
            throw SyntaxError("'|' is not part of the supported logic; use !(!a & !b)", peek().line, peek().col);
        }
        return lhs;
    }

    PathPtr parse_unary() {
        reject_unsupported();
        const Token& t = peek();
        if (is_punct("!")) {
            next();
            PathPtr operand = parse_unary();
            return make_holds(make_not(as_state(operand, t, "'!' applies to state formulas only")));
        }
        if (is_ident("X")) {
            next();
            return make_next(parse_unary());
        }
        if (is_ident("G")) {
            next();
            if (is_punct("<") || is_punct("<=")) {
                throw SyntaxError("time-bounded G is not supported", peek().line, peek().col);
            }
            return make_globally(parse_unary());
        }
        if (is_ident("F")) {
            next();
            auto bound = parse_time_bound();
            PathPtr operand = parse_unary();
            return bound ? make_bounded_finally(operand, bound->first, bound->second) : make_finally(operand);
        }
        return parse_primary();
    }

    PathPtr parse_primary() {
        const Token& t = peek();
        if (t.kind == Tok::String) {
            next();
            if (t.text.empty()) throw SyntaxError("empty label name", t.line, t.col);
            return make_holds(make_atom(t.text));
        }
        if (is_punct("(")) {
            next();
            PathPtr inner = parse_expr();
            expect_punct(")");
            return inner;
        }
        if (t.kind == Tok::Ident) {
            if (t.text == "true") {
                next();
                return make_holds(make_true());
            }
            if (t.text == "P" || t.text == "Pmax" || t.text == "Pmin") return make_holds(parse_prob());
            if (t.text == "U") throw unexpected("a formula before 'U'");
            next();
            return make_holds(parse_atom_or_comparison(t));
        }
        throw unexpected("a formula");
    }

    StatePtr parse_atom_or_comparison(const Token& name) {
        static const std::pair<const char*, CompareOp> ops[] = {{"=", CompareOp::Eq},  {"!=", CompareOp::Ne},
                                                                {"<=", CompareOp::Le}, {"<", CompareOp::Lt},
                                                                {">=", CompareOp::Ge}, {">", CompareOp::Gt}};
        for (const auto& [text, op] : ops) {
            if (!is_punct(text)) continue;
            next();
            bool negative = false;
            if (is_punct("-")) {
                next();
                negative = true;
            }
            const Token& v = peek();
            std::int64_t value = 0;
            if (v.kind != Tok::Number) throw unexpected("an integer");
            auto [ptr, ec] = std::from_chars(v.text.data(), v.text.data() + v.text.size(), value);
            if (ec != std::errc() || ptr != v.text.data() + v.text.size()) {
                throw SyntaxError(fmt::format("'{}' is not an integer", v.text), v.line, v.col);
            }
            next();
            return make_comparison(name.text, op, negative ? -value : value);
        }
        return make_atom(name.text);
    }

    StatePtr parse_prob() {
        const Token& op = next();
        Quantifier q = op.text == "P" ? Quantifier::Plain : op.text == "Pmax" ? Quantifier::Max : Quantifier::Min;
        std::optional<ProbBound> bound;
        bool shorthand = false;
        if (is_punct("=") && is_punct("?", 1)) {
            next();
            next();
        } else if (is_punct("<") || is_punct("<=") || is_punct(">") || is_punct(">=")) {
            const Token& rel = next();
            BoundOp bop = rel.text == "<" ? BoundOp::Lt : rel.text == "<=" ? BoundOp::Le : rel.text == ">" ? BoundOp::Gt : BoundOp::Ge;
            const Token& v = peek();
            if (v.kind != Tok::Number) throw unexpected("a probability threshold");
            double p = 0.0;
            try {
                std::size_t used = 0;
                p = std::stod(v.text, &used);
                if (used != v.text.size()) throw std::invalid_argument(v.text);
            } catch (const std::exception&) {
                throw SyntaxError(fmt::format("'{}' is not a number", v.text), v.line, v.col);
            }
            if (!(p >= 0.0 && p <= 1.0)) {
                throw BoundOutOfRange(fmt::format("probability bound {} outside [0,1]", v.text), v.line, v.col);
            }
            next();
            bound = ProbBound{bop, p};
        } else if (is_punct("(") && q == Quantifier::Plain) {
            shorthand = true;
        } else {
            throw unexpected("'=?' or a probability bound after " + op.text);
        }
        if (!bound && depth_ > 0) {
            throw SyntaxError("a query (=?) is only allowed as the outermost operator", op.line, op.col);
        }
        const char* close = shorthand ? ")" : "]";
        expect_punct(shorthand ? "(" : "[");
        ++depth_;
        const Token& at = peek();
        PathPtr path = parse_expr();
        --depth_;
        expect_punct(close);
        if (std::holds_alternative<Holds>(path->node)) {
            throw SyntaxError("expected a path formula (X, U, F or G) inside the probability operator", at.line, at.col);
        }
        return make_prob(q, bound, std::move(path));
    }

    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
    int depth_ = 0;
};

}  // namespace

StatePtr parse_property(std::string_view text) {
    StatePtr f = PropertyParser(text).parse();
    // A query is only meaningful at the root; reject it under && or !.
    struct Walk {
        void operator()(const StateFormula& s, bool at_root) const {
            std::visit(
                [&](const auto& n) {
                    using T = std::decay_t<decltype(n)>;
                    if constexpr (std::is_same_v<T, And>) {
                        (*this)(*n.lhs, false);
                        (*this)(*n.rhs, false);
                    } else if constexpr (std::is_same_v<T, Not>) {
                        (*this)(*n.operand, false);
                    } else if constexpr (std::is_same_v<T, Prob>) {
                        if (!n.bound && !at_root) {
                            throw SyntaxError("a query (=?) is only allowed as the outermost operator", 1, 1);
                        }
                    }
                },
                s.node);
        }
    };
    Walk{}(*f, true);
    return f;
}

// ---------------------------------------------------------------------------
// Printer.

namespace {

const char* text(CompareOp op) {
    switch (op) {
        case CompareOp::Eq:
            return "=";
        case CompareOp::Ne:
            return "!=";
        case CompareOp::Lt:
            return "<";
        case CompareOp::Le:
            return "<=";
        case CompareOp::Gt:
            return ">";
        case CompareOp::Ge:
            return ">=";
    }
    return "?";
}

const char* text(BoundOp op) {
    switch (op) {
        case BoundOp::Lt:
            return "<";
        case BoundOp::Le:
            return "<=";
        case BoundOp::Gt:
            return ">";
        case BoundOp::Ge:
            return ">=";
    }
    return "?";
}

std::string print_state(const StateFormula& f);

std::string print_operand(const PathFormula& p, bool unary_context) {
    if (const auto* h = std::get_if<Holds>(&p.node)) {
        std::string s = print_state(*h->formula);
        return unary_context && std::holds_alternative<And>(h->formula->node) ? "(" + s + ")" : s;
    }
    return "(" + format_path(p) + ")";
}

std::string print_state(const StateFormula& f) {
    return std::visit(
        [](const auto& n) -> std::string {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, True>) {
                return "true";
            } else if constexpr (std::is_same_v<T, Atom>) {
                return fmt::format("\"{}\"", n.label);
            } else if constexpr (std::is_same_v<T, Comparison>) {
                return fmt::format("{}{}{}", n.feature, text(n.op), n.value);
            } else if constexpr (std::is_same_v<T, And>) {
                std::string rhs = print_state(*n.rhs);
                if (std::holds_alternative<And>(n.rhs->node)) rhs = "(" + rhs + ")";
                return print_state(*n.lhs) + " & " + rhs;
            } else if constexpr (std::is_same_v<T, Not>) {
                const auto& inner = n.operand->node;
                std::string s = print_state(*n.operand);
                bool bare = std::holds_alternative<True>(inner) || std::holds_alternative<Atom>(inner);
                return bare ? "!" + s : "!(" + s + ")";
            } else {
                std::string head = n.quantifier == Quantifier::Plain ? "P"
                                   : n.quantifier == Quantifier::Max ? "Pmax"
                                                                     : "Pmin";
                std::string bound = n.bound ? fmt::format("{}{}", text(n.bound->op), n.bound->threshold) : "=?";
                return fmt::format("{}{} [ {} ]", head, bound, format_path(*n.path));
            }
        },
        f.node);
}

}  // namespace

std::string format_path(const PathFormula& p) {
    return std::visit(
        [](const auto& n) -> std::string {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Holds>) {
                return print_state(*n.formula);
            } else if constexpr (std::is_same_v<T, Next>) {
                return "X " + print_operand(*n.operand, true);
            } else if constexpr (std::is_same_v<T, Globally>) {
                return "G " + print_operand(*n.operand, true);
            } else if constexpr (std::is_same_v<T, Until>) {
                return print_operand(*n.lhs, false) + " U " + print_operand(*n.rhs, false);
            } else {
                return fmt::format("{} U{}{} {}", print_operand(*n.lhs, false), n.op == TimeBound::Lt ? "<" : "<=",
                                   n.steps, print_operand(*n.rhs, false));
            }
        },
        p.node);
}

std::string format_property(const StateFormula& f) { return print_state(f); }

}  // namespace tmc::pctl
