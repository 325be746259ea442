#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include <fmt/format.h>

#include "gcl_internal.hpp"
#include "tmc/errors.hpp"

namespace tmc {

namespace {

enum class Tok { Ident, Int, Real, String, Punct, End };

struct Token {
    Tok kind;
    std::string text;
    std::size_t line;
    std::size_t col;
};

const std::set<std::string> kKeywords = {"const", "int",   "double",     "init",    "label", "rewards",
                                         "endrewards", "formula", "true", "false", "min",   "max",
                                         "mdp",   "module", "endmodule"};

std::vector<Token> tokenize(std::string_view src) {
    std::vector<Token> out;
    std::size_t i = 0, line = 1, col = 1;
    auto advance = [&](std::size_t n) {
        for (std::size_t k = 0; k < n; ++k) {
            if (src[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
            ++i;
        }
    };
    while (i < src.size()) {
        char c = src[i];
        if (c == '\n' || c == ' ' || c == '\t' || c == '\r') {
            advance(1);
            continue;
        }
        if (c == '/' && i + 1 < src.size() && src[i + 1] == '/') {
            while (i < src.size() && src[i] != '\n') advance(1);
            continue;
        }
        std::size_t tl = line, tc = col, start = i;
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            while (i < src.size() && (std::isalnum(static_cast<unsigned char>(src[i])) || src[i] == '_')) advance(1);
            out.push_back({Tok::Ident, std::string(src.substr(start, i - start)), tl, tc});
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) advance(1);
            bool real = false;
            if (i + 1 < src.size() && src[i] == '.' && std::isdigit(static_cast<unsigned char>(src[i + 1]))) {
                real = true;
                advance(1);
                while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) advance(1);
            }
            if (i < src.size() && (src[i] == 'e' || src[i] == 'E')) {
                std::size_t j = i + 1;
                if (j < src.size() && (src[j] == '+' || src[j] == '-')) ++j;
                if (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) {
                    real = true;
                    advance(j - i);
                    while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) advance(1);
                }
            }
            out.push_back({real ? Tok::Real : Tok::Int, std::string(src.substr(start, i - start)), tl, tc});
            continue;
        }
        if (c == '"') {
            advance(1);
            while (i < src.size() && src[i] != '"' && src[i] != '\n') advance(1);
            if (i >= src.size() || src[i] != '"') throw SyntaxError("unterminated string literal", tl, tc);
            out.push_back({Tok::String, std::string(src.substr(start + 1, i - start - 1)), tl, tc});
            advance(1);
            continue;
        }
        static const char* const two_char[] = {"->", "..", "!=", "<=", ">="};
        bool matched = false;
        for (const char* p : two_char) {
            if (src.substr(i, 2) == p) {
                out.push_back({Tok::Punct, p, tl, tc});
                advance(2);
                matched = true;
                break;
            }
        }
        if (matched) continue;
        if (std::string_view("[]();:,'+-*/=<>&|!?").find(c) != std::string_view::npos) {
            out.push_back({Tok::Punct, std::string(1, c), tl, tc});
            advance(1);
            continue;
        }
        throw SyntaxError(fmt::format("unexpected character '{}'", c), tl, tc);
    }
    out.push_back({Tok::End, "", line, col});
    return out;
}

std::string describe(const Token& t) {
    switch (t.kind) {
        case Tok::End:
            return "end of input";
        case Tok::String:
            return fmt::format("string \"{}\"", t.text);
        default:
            return fmt::format("'{}'", t.text);
    }
}

}  // namespace

// Recursive-descent parser over the token stream; builds a GuardedProgram in
// place. Identifiers must be declared before use.
class ProgramParser {
   public:
    ProgramParser(std::string_view text, const ConstantOverrides& overrides)
        : tokens_(tokenize(text)), overrides_(overrides) {}

    // Expression-only mode over an existing program's scope.
    ProgramParser(std::string_view text, const GuardedProgram& scope) : tokens_(tokenize(text)) {
        program_.constants_ = scope.constants_;
        program_.formulas_ = scope.formulas_;
        for (std::size_t i = 0; i < scope.schema_.size(); ++i) {
            var_index_.emplace(scope.schema_.name(i), i);
        }
    }

    GuardedProgram parse_program() {
        if (is_ident("mdp")) next();
        while (peek().kind != Tok::End) {
            const Token& t = peek();
            if (is_ident("const")) {
                parse_constant();
            } else if (is_ident("formula")) {
                parse_formula();
            } else if (is_ident("label")) {
                parse_label();
            } else if (is_ident("rewards")) {
                parse_rewards();
            } else if (is_punct("[")) {
                parse_command();
            } else if (is_ident("module")) {
                next();
                expect_name("module name");
            } else if (is_ident("endmodule")) {
                next();
            } else if (t.kind == Tok::Ident && peek(1).kind == Tok::Punct && peek(1).text == ":") {
                parse_variable();
            } else {
                throw SyntaxError(fmt::format("expected a declaration, command, label or rewards block, found {}",
                                              describe(t)),
                                  t.line, t.col);
            }
        }
        for (const auto& [name, value] : overrides_) {
            if (!used_overrides_.count(name)) {
                throw InvalidParams(fmt::format("override for undeclared constant '{}'", name));
            }
        }
        auto turn = std::find(var_names_.begin(), var_names_.end(), "turn");
        if (turn == var_names_.end()) {
            throw MissingTurnVariable("model declares no 'turn' variable", peek().line, peek().col);
        }
        program_.schema_ = FeatureSchema(var_names_, var_bounds_, "turn");
        program_.initial_ = FactoredState(std::move(init_values_));
        program_.done_index_ = program_.schema_.index_of("done");
        program_.build_turn_index();
        return std::move(program_);
    }

    Expr parse_standalone_expression() {
        Expr e = parse_expr();
        if (peek().kind != Tok::End) throw unexpected("end of expression");
        return e;
    }

   private:
    // -- token helpers ------------------------------------------------------

    const Token& peek(std::size_t ahead = 0) const { return tokens_[std::min(pos_ + ahead, tokens_.size() - 1)]; }
    const Token& next() { return tokens_[pos_ < tokens_.size() - 1 ? pos_++ : pos_]; }
    bool is_punct(const char* p, std::size_t ahead = 0) const {
        return peek(ahead).kind == Tok::Punct && peek(ahead).text == p;
    }
    bool is_ident(const char* word) const { return peek().kind == Tok::Ident && peek().text == word; }

    SyntaxError unexpected(const std::string& expected) const {
        return SyntaxError(fmt::format("expected {}, found {}", expected, describe(peek())), peek().line,
                           peek().col);
    }
    const Token& expect_punct(const char* p) {
        if (!is_punct(p)) throw unexpected(fmt::format("'{}'", p));
        return next();
    }
    const Token& expect_keyword(const char* word) {
        if (!is_ident(word)) throw unexpected(fmt::format("'{}'", word));
        return next();
    }
    const Token& expect_name(const char* what) {
        if (peek().kind != Tok::Ident || kKeywords.count(peek().text)) throw unexpected(what);
        return next();
    }
    const Token& expect_string(const char* what) {
        if (peek().kind != Tok::String) throw unexpected(what);
        return next();
    }

    void declare(const Token& name) {
        if (!declared_.insert(name.text).second) {
            throw DuplicateDeclaration(fmt::format("'{}' is already declared", name.text), name.line, name.col);
        }
    }

    template <class F>
    Expr build(const Token& at, F&& f) {
        try {
            return f();
        } catch (const std::invalid_argument& e) {
            throw ModelSemanticError(e.what(), at.line, at.col);
        } catch (const DivisionByZero& e) {
            throw ModelSemanticError(e.what(), at.line, at.col);
        }
    }

    // -- declarations -------------------------------------------------------

    void parse_constant() {
        next();
        ValueType type = ValueType::Int;
        if (is_ident("int")) {
            next();
        } else if (is_ident("double")) {
            next();
            type = ValueType::Real;
        }
        const Token& name = expect_name("constant name");
        declare(name);
        ConstantValue value{type, 0, 0.0};
        auto override_it = overrides_.find(name.text);
        if (override_it != overrides_.end()) {
            used_overrides_.insert(name.text);
            value = parse_override(name, override_it->second, type);
            if (is_punct("=")) {
                next();
                (void)parse_expr();
            }
        } else {
            if (!is_punct("=")) {
                throw ModelSemanticError(fmt::format("constant '{}' has no value and no override", name.text),
                                         name.line, name.col);
            }
            next();
            const Token& at = peek();
            Expr e = parse_expr();
            if (!e.is_constant()) throw ModelSemanticError("constant value must be a constant expression", at.line, at.col);
            if (type == ValueType::Int) {
                if (e.type() != ValueType::Int) throw ModelSemanticError("int constant needs an integer value", at.line, at.col);
                value.int_value = e.eval_int({});
            } else {
                if (e.type() == ValueType::Bool) throw ModelSemanticError("double constant needs a numeric value", at.line, at.col);
                value.real_value = e.eval_real({});
            }
        }
        expect_punct(";");
        program_.constants_.emplace(name.text, value);
    }

    ConstantValue parse_override(const Token& name, const std::string& text, ValueType type) {
        ConstantValue v{type, 0, 0.0};
        const char* first = text.data();
        const char* last = text.data() + text.size();
        if (type == ValueType::Int) {
            auto [ptr, ec] = std::from_chars(first, last, v.int_value);
            if (ec != std::errc() || ptr != last) {
                throw InvalidParams(fmt::format("override '{}={}' is not an integer", name.text, text));
            }
        } else {
            try {
                std::size_t used = 0;
                v.real_value = std::stod(text, &used);
                if (used != text.size()) throw std::invalid_argument(text);
            } catch (const std::exception&) {
                throw InvalidParams(fmt::format("override '{}={}' is not a number", name.text, text));
            }
        }
        return v;
    }

    void parse_formula() {
        next();
        const Token& name = expect_name("formula name");
        declare(name);
        expect_punct("=");
        Expr e = parse_expr();
        expect_punct(";");
        program_.formulas_.emplace(name.text, std::move(e));
    }

    std::int64_t constant_int(const char* what) {
        const Token& at = peek();
        Expr e = parse_expr();
        if (!e.is_constant() || e.type() != ValueType::Int) {
            throw ModelSemanticError(fmt::format("{} must be a constant integer expression", what), at.line, at.col);
        }
        return e.eval_int({});
    }

    void parse_variable() {
        const Token& name = next();
        if (kKeywords.count(name.text)) throw SyntaxError("expected variable name", name.line, name.col);
        declare(name);
        expect_punct(":");
        expect_punct("[");
        std::int64_t lo = constant_int("lower bound");
        expect_punct("..");
        std::int64_t hi = constant_int("upper bound");
        expect_punct("]");
        if (lo > hi) {
            throw ModelSemanticError(fmt::format("empty range [{}..{}] for '{}'", lo, hi, name.text), name.line, name.col);
        }
        if (lo < INT32_MIN || hi > INT32_MAX) {
            throw ModelSemanticError(fmt::format("range of '{}' exceeds 32 bits", name.text), name.line, name.col);
        }
        std::int64_t init = lo;
        if (is_ident("init")) {
            next();
            const Token& at = peek();
            init = constant_int("initial value");
            if (init < lo || init > hi) {
                throw ModelSemanticError(fmt::format("initial value {} of '{}' outside [{}..{}]", init, name.text, lo, hi),
                                         at.line, at.col);
            }
        }
        expect_punct(";");
        var_index_.emplace(name.text, var_names_.size());
        var_names_.push_back(name.text);
        var_bounds_.push_back({lo, hi});
        init_values_.push_back(static_cast<FeatureValue>(init));
    }

    ActionId action(const std::string& name) {
        auto it = std::find(program_.actions_.begin(), program_.actions_.end(), name);
        if (it != program_.actions_.end()) return static_cast<ActionId>(it - program_.actions_.begin());
        program_.actions_.push_back(name);
        return static_cast<ActionId>(program_.actions_.size() - 1);
    }

    void parse_command() {
        const Token& open = expect_punct("[");
        const Token& name = expect_name("action name");
        ActionId a = action(name.text);
        expect_punct("]");
        const Token& guard_at = peek();
        Expr guard = parse_expr();
        if (guard.type() != ValueType::Bool) throw ModelSemanticError("guard must be a boolean expression", guard_at.line, guard_at.col);
        expect_punct("->");
        std::vector<Update> updates;
        do {
            updates.push_back(parse_update());
        } while (is_punct("+") && (next(), true));
        expect_punct(";");
        program_.commands_.push_back({a, std::move(guard), std::move(updates), open.line});
    }

    bool at_assignments() const {
        if (is_ident("true")) return is_punct(";", 1) || is_punct("+", 1);
        return is_punct("(") && peek(1).kind == Tok::Ident && is_punct("'", 2);
    }

    Update parse_update() {
        double probability = 1.0;
        if (!at_assignments()) {
            const Token& at = peek();
            Expr p = parse_expr();
            if (!p.is_constant() || p.type() == ValueType::Bool) {
                throw ModelSemanticError("update probability must be a constant numeric expression", at.line, at.col);
            }
            probability = p.eval_real({});
            if (!(probability >= 0.0) || !std::isfinite(probability)) {
                throw ModelSemanticError(fmt::format("invalid update probability {}", probability), at.line, at.col);
            }
            expect_punct(":");
        }
        Update u{probability, {}};
        if (is_ident("true")) {
            next();
            return u;
        }
        std::set<std::size_t> assigned;
        do {
            expect_punct("(");
            const Token& var = expect_name("variable name");
            auto it = var_index_.find(var.text);
            if (it == var_index_.end()) {
                throw UndeclaredIdentifier(fmt::format("assignment to undeclared variable '{}'", var.text), var.line, var.col);
            }
            if (!assigned.insert(it->second).second) {
                throw ModelSemanticError(fmt::format("variable '{}' assigned twice in one update", var.text), var.line, var.col);
            }
            expect_punct("'");
            expect_punct("=");
            const Token& at = peek();
            Expr value = parse_expr();
            if (value.type() != ValueType::Int) {
                throw ModelSemanticError(fmt::format("value assigned to '{}' must be an integer expression", var.text),
                                         at.line, at.col);
            }
            expect_punct(")");
            u.assignments.push_back({it->second, std::move(value)});
        } while (is_punct("&") && (next(), true));
        return u;
    }

    void parse_label() {
        next();
        const Token& name = expect_string("quoted label name");
        if (program_.label_index(name.text)) {
            throw DuplicateDeclaration(fmt::format("label \"{}\" is already declared", name.text), name.line, name.col);
        }
        expect_punct("=");
        const Token& at = peek();
        Expr e = parse_expr();
        if (e.type() != ValueType::Bool) throw ModelSemanticError("label must be a boolean expression", at.line, at.col);
        expect_punct(";");
        program_.labels_.emplace_back(name.text, std::move(e));
    }

    void parse_rewards() {
        next();
        const Token& name = expect_string("quoted reward structure name");
        if (program_.reward_index(name.text)) {
            throw DuplicateDeclaration(fmt::format("rewards \"{}\" is already declared", name.text), name.line, name.col);
        }
        RewardStructure rs{name.text, {}};
        while (!is_ident("endrewards")) {
            if (peek().kind == Tok::End) throw unexpected("'endrewards'");
            RewardItem item;
            if (is_punct("[")) {
                next();
                const Token& act = expect_name("action name");
                auto id = program_.action_id(act.text);
                if (!id) throw UndeclaredIdentifier(fmt::format("unknown action '{}'", act.text), act.line, act.col);
                item.action = *id;
                expect_punct("]");
            }
            const Token& gat = peek();
            item.guard = parse_expr();
            if (item.guard.type() != ValueType::Bool) throw ModelSemanticError("reward guard must be boolean", gat.line, gat.col);
            expect_punct(":");
            const Token& vat = peek();
            item.value = parse_expr();
            if (item.value.type() == ValueType::Bool) throw ModelSemanticError("reward value must be numeric", vat.line, vat.col);
            expect_punct(";");
            rs.items.push_back(std::move(item));
        }
        next();
        program_.rewards_.push_back(std::move(rs));
    }

    // -- expressions --------------------------------------------------------

    Expr parse_expr() {
        Expr cond = parse_or();
        if (!is_punct("?")) return cond;
        const Token& at = next();
        Expr a = parse_expr();
        expect_punct(":");
        Expr b = parse_expr();
        return build(at, [&] { return expr::ite(cond, a, b); });
    }

    Expr parse_or() {
        Expr lhs = parse_and();
        while (is_punct("|")) {
            const Token& at = next();
            Expr rhs = parse_and();
            lhs = build(at, [&] { return expr::binary(Op::Or, lhs, rhs); });
        }
        return lhs;
    }

    Expr parse_and() {
        Expr lhs = parse_not();
        while (is_punct("&")) {
            const Token& at = next();
            Expr rhs = parse_not();
            lhs = build(at, [&] { return expr::binary(Op::And, lhs, rhs); });
        }
        return lhs;
    }

    Expr parse_not() {
        if (is_punct("!")) {
            const Token& at = next();
            Expr e = parse_not();
            return build(at, [&] { return expr::unary(Op::Not, e); });
        }
        return parse_relational();
    }

    Expr parse_relational() {
        Expr lhs = parse_additive();
        static const std::pair<const char*, Op> ops[] = {{"=", Op::Eq},  {"!=", Op::Ne}, {"<", Op::Lt},
                                                         {"<=", Op::Le}, {">", Op::Gt},  {">=", Op::Ge}};
        for (const auto& [text, op] : ops) {
            if (is_punct(text)) {
                const Token& at = next();
                Expr rhs = parse_additive();
                return build(at, [&] { return expr::binary(op, lhs, rhs); });
            }
        }
        return lhs;
    }

    Expr parse_additive() {
        Expr lhs = parse_multiplicative();
        while (is_punct("+") || is_punct("-")) {
            Op op = peek().text == "+" ? Op::Add : Op::Sub;
            const Token& at = next();
            Expr rhs = parse_multiplicative();
            lhs = build(at, [&] { return expr::binary(op, lhs, rhs); });
        }
        return lhs;
    }

    Expr parse_multiplicative() {
        Expr lhs = parse_unary();
        while (is_punct("*") || is_punct("/")) {
            Op op = peek().text == "*" ? Op::Mul : Op::Div;
            const Token& at = next();
            Expr rhs = parse_unary();
            lhs = build(at, [&] { return expr::binary(op, lhs, rhs); });
        }
        return lhs;
    }

    Expr parse_unary() {
        if (is_punct("-")) {
            const Token& at = next();
            Expr e = parse_unary();
            return build(at, [&] { return expr::unary(Op::Neg, e); });
        }
        return parse_primary();
    }

    Expr parse_primary() {
        const Token& t = peek();
        switch (t.kind) {
            case Tok::Int: {
                next();
                std::int64_t v = 0;
                auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
                if (ec != std::errc()) throw SyntaxError("integer literal out of range", t.line, t.col);
                (void)ptr;
                return expr::int_literal(v);
            }
            case Tok::Real:
                next();
                return expr::real_literal(std::stod(t.text));
            case Tok::Punct:
                if (t.text == "(") {
                    next();
                    Expr e = parse_expr();
                    expect_punct(")");
                    return e;
                }
                break;
            case Tok::Ident: {
                if (t.text == "true" || t.text == "false") {
                    next();
                    return expr::bool_literal(t.text == "true");
                }
                if (t.text == "min" || t.text == "max") {
                    next();
                    Op op = t.text == "min" ? Op::Min : Op::Max;
                    expect_punct("(");
                    std::vector<Expr> args{parse_expr()};
                    while (is_punct(",")) {
                        next();
                        args.push_back(parse_expr());
                    }
                    expect_punct(")");
                    return build(t, [&] { return expr::call(op, args); });
                }
                if (kKeywords.count(t.text)) break;
                next();
                return resolve(t);
            }
            default:
                break;
        }
        throw unexpected("an expression");
    }

    Expr resolve(const Token& name) {
        if (auto c = program_.constants_.find(name.text); c != program_.constants_.end()) {
            return c->second.type == ValueType::Int ? expr::int_literal(c->second.int_value)
                                                    : expr::real_literal(c->second.real_value);
        }
        if (auto f = program_.formulas_.find(name.text); f != program_.formulas_.end()) return f->second;
        if (auto v = var_index_.find(name.text); v != var_index_.end()) return expr::variable(v->second);
        throw UndeclaredIdentifier(fmt::format("undeclared identifier '{}'", name.text), name.line, name.col);
    }

    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
    ConstantOverrides overrides_;
    std::set<std::string> used_overrides_;
    std::set<std::string> declared_;
    GuardedProgram program_;
    std::unordered_map<std::string, std::size_t> var_index_;
    std::vector<std::string> var_names_;
    std::vector<FeatureBound> var_bounds_;
    std::vector<FeatureValue> init_values_;
};

GuardedProgram parse_program(std::string_view text, const ConstantOverrides& overrides) {
    return ProgramParser(text, overrides).parse_program();
}

Expr GuardedProgram::parse_expression(std::string_view text) const {
    return ProgramParser(text, *this).parse_standalone_expression();
}

}  // namespace tmc
