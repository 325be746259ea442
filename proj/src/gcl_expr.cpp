#include <algorithm>
#include <stdexcept>

#include <fmt/format.h>

#include "gcl_internal.hpp"
#include "tmc/errors.hpp"

namespace tmc {

const char* to_string(ValueType t) noexcept {
    switch (t) {
        case ValueType::Int:
            return "int";
        case ValueType::Real:
            return "double";
        case ValueType::Bool:
            return "bool";
    }
    return "?";
}

namespace {

bool numeric(ValueType t) { return t != ValueType::Bool; }

std::int64_t eval_int_node(const ExprNode& n, StateView s);
double eval_real_node(const ExprNode& n, StateView s);
bool eval_bool_node(const ExprNode& n, StateView s);

std::int64_t eval_int_node(const ExprNode& n, StateView s) {
    switch (n.op) {
        case Op::IntLit:
            return n.int_value;
        case Op::Var:
            return s[n.var];
        case Op::Neg:
            return -eval_int_node(n.args[0].node(), s);
        case Op::Add:
            return eval_int_node(n.args[0].node(), s) + eval_int_node(n.args[1].node(), s);
        case Op::Sub:
            return eval_int_node(n.args[0].node(), s) - eval_int_node(n.args[1].node(), s);
        case Op::Mul:
            return eval_int_node(n.args[0].node(), s) * eval_int_node(n.args[1].node(), s);
        case Op::Div: {
            std::int64_t d = eval_int_node(n.args[1].node(), s);
            if (d == 0) throw DivisionByZero("integer division by zero");
            return eval_int_node(n.args[0].node(), s) / d;
        }
        case Op::Min:
        case Op::Max: {
            std::int64_t acc = eval_int_node(n.args[0].node(), s);
            for (std::size_t i = 1; i < n.args.size(); ++i) {
                std::int64_t v = eval_int_node(n.args[i].node(), s);
                acc = n.op == Op::Min ? std::min(acc, v) : std::max(acc, v);
            }
            return acc;
        }
        case Op::Ite:
            return eval_bool_node(n.args[0].node(), s) ? eval_int_node(n.args[1].node(), s)
                                                       : eval_int_node(n.args[2].node(), s);
        default:
            throw std::logic_error("expression is not of type int");
    }
}

double eval_real_node(const ExprNode& n, StateView s) {
    if (n.type == ValueType::Int) return static_cast<double>(eval_int_node(n, s));
    switch (n.op) {
        case Op::RealLit:
            return n.real_value;
        case Op::Neg:
            return -eval_real_node(n.args[0].node(), s);
        case Op::Add:
            return eval_real_node(n.args[0].node(), s) + eval_real_node(n.args[1].node(), s);
        case Op::Sub:
            return eval_real_node(n.args[0].node(), s) - eval_real_node(n.args[1].node(), s);
        case Op::Mul:
            return eval_real_node(n.args[0].node(), s) * eval_real_node(n.args[1].node(), s);
        case Op::Div: {
            double d = eval_real_node(n.args[1].node(), s);
            if (d == 0.0) throw DivisionByZero("division by zero");
            return eval_real_node(n.args[0].node(), s) / d;
        }
        case Op::Min:
        case Op::Max: {
            double acc = eval_real_node(n.args[0].node(), s);
            for (std::size_t i = 1; i < n.args.size(); ++i) {
                double v = eval_real_node(n.args[i].node(), s);
                acc = n.op == Op::Min ? std::min(acc, v) : std::max(acc, v);
            }
            return acc;
        }
        case Op::Ite:
            return eval_bool_node(n.args[0].node(), s) ? eval_real_node(n.args[1].node(), s)
                                                       : eval_real_node(n.args[2].node(), s);
        default:
            throw std::logic_error("expression is not numeric");
    }
}

template <class Cmp>
bool compare(const ExprNode& n, StateView s, Cmp cmp) {
    const ExprNode& a = n.args[0].node();
    const ExprNode& b = n.args[1].node();
    if (a.type == ValueType::Bool) return cmp(eval_bool_node(a, s), eval_bool_node(b, s));
    if (a.type == ValueType::Int && b.type == ValueType::Int) return cmp(eval_int_node(a, s), eval_int_node(b, s));
    return cmp(eval_real_node(a, s), eval_real_node(b, s));
}

bool eval_bool_node(const ExprNode& n, StateView s) {
    switch (n.op) {
        case Op::BoolLit:
            return n.bool_value;
        case Op::Not:
            return !eval_bool_node(n.args[0].node(), s);
        case Op::And:
            return eval_bool_node(n.args[0].node(), s) && eval_bool_node(n.args[1].node(), s);
        case Op::Or:
            return eval_bool_node(n.args[0].node(), s) || eval_bool_node(n.args[1].node(), s);
        case Op::Eq:
            return compare(n, s, [](auto x, auto y) { return x == y; });
        case Op::Ne:
            return compare(n, s, [](auto x, auto y) { return x != y; });
        case Op::Lt:
            return compare(n, s, [](auto x, auto y) { return x < y; });
        case Op::Le:
            return compare(n, s, [](auto x, auto y) { return x <= y; });
        case Op::Gt:
            return compare(n, s, [](auto x, auto y) { return x > y; });
        case Op::Ge:
            return compare(n, s, [](auto x, auto y) { return x >= y; });
        case Op::Ite:
            return eval_bool_node(n.args[0].node(), s) ? eval_bool_node(n.args[1].node(), s)
                                                       : eval_bool_node(n.args[2].node(), s);
        default:
            throw std::logic_error("expression is not of type bool");
    }
}

Expr make(ExprNode node) {
    bool foldable = node.op != Op::Var && !node.args.empty() &&
                    std::all_of(node.args.begin(), node.args.end(), [](const Expr& e) { return e.is_constant(); });
    if (!foldable) return Expr(std::make_shared<const ExprNode>(std::move(node)));
    StateView none;
    switch (node.type) {
        case ValueType::Int:
            return expr::int_literal(eval_int_node(node, none));
        case ValueType::Real:
            return expr::real_literal(eval_real_node(node, none));
        case ValueType::Bool:
            return expr::bool_literal(eval_bool_node(node, none));
    }
    throw std::logic_error("unreachable");
}

const char* op_name(Op op) {
    switch (op) {
        case Op::Neg:
        case Op::Sub:
            return "-";
        case Op::Not:
            return "!";
        case Op::Add:
            return "+";
        case Op::Mul:
            return "*";
        case Op::Div:
            return "/";
        case Op::Min:
            return "min";
        case Op::Max:
            return "max";
        case Op::Eq:
            return "=";
        case Op::Ne:
            return "!=";
        case Op::Lt:
            return "<";
        case Op::Le:
            return "<=";
        case Op::Gt:
            return ">";
        case Op::Ge:
            return ">=";
        case Op::And:
            return "&";
        case Op::Or:
            return "|";
        default:
            return "?";
    }
}

ValueType arithmetic_result(ValueType a, ValueType b) {
    return a == ValueType::Int && b == ValueType::Int ? ValueType::Int : ValueType::Real;
}

}  // namespace

// ---------------------------------------------------------------------------

ValueType Expr::type() const { return node_->type; }

bool Expr::is_constant() const {
    switch (node_->op) {
        case Op::IntLit:
        case Op::RealLit:
        case Op::BoolLit:
            return true;
        default:
            return false;
    }
}

std::int64_t Expr::eval_int(StateView s) const { return eval_int_node(*node_, s); }
double Expr::eval_real(StateView s) const { return eval_real_node(*node_, s); }
bool Expr::eval_bool(StateView s) const { return eval_bool_node(*node_, s); }

Value Expr::evaluate(StateView s) const {
    switch (node_->type) {
        case ValueType::Int:
            return Value::of_int(eval_int(s));
        case ValueType::Real:
            return Value::of_real(eval_real(s));
        case ValueType::Bool:
            return Value::of_bool(eval_bool(s));
    }
    throw std::logic_error("unreachable");
}

Value eval_expr(const GuardedProgram& program, const Expr& e, StateView s) {
    program.schema().validate(s);
    return e.evaluate(s);
}

namespace expr {

Expr int_literal(std::int64_t v) {
    ExprNode n;
    n.op = Op::IntLit;
    n.type = ValueType::Int;
    n.int_value = v;
    return Expr(std::make_shared<const ExprNode>(std::move(n)));
}

Expr real_literal(double v) {
    ExprNode n;
    n.op = Op::RealLit;
    n.type = ValueType::Real;
    n.real_value = v;
    return Expr(std::make_shared<const ExprNode>(std::move(n)));
}

Expr bool_literal(bool v) {
    ExprNode n;
    n.op = Op::BoolLit;
    n.type = ValueType::Bool;
    n.bool_value = v;
    return Expr(std::make_shared<const ExprNode>(std::move(n)));
}

Expr variable(std::size_t index) {
    ExprNode n;
    n.op = Op::Var;
    n.type = ValueType::Int;
    n.var = index;
    return Expr(std::make_shared<const ExprNode>(std::move(n)));
}

Expr unary(Op op, Expr operand) {
    ExprNode n;
    n.op = op;
    if (op == Op::Not) {
        if (operand.type() != ValueType::Bool) throw std::invalid_argument("operand of '!' must be bool");
        n.type = ValueType::Bool;
    } else {
        if (!numeric(operand.type())) throw std::invalid_argument("operand of unary '-' must be numeric");
        n.type = operand.type();
    }
    n.args.push_back(std::move(operand));
    return make(std::move(n));
}

Expr binary(Op op, Expr lhs, Expr rhs) {
    ExprNode n;
    n.op = op;
    ValueType a = lhs.type();
    ValueType b = rhs.type();
    switch (op) {
        case Op::Add:
        case Op::Sub:
        case Op::Mul:
        case Op::Div:
            if (!numeric(a) || !numeric(b)) {
                throw std::invalid_argument(fmt::format("operands of '{}' must be numeric", op_name(op)));
            }
            n.type = arithmetic_result(a, b);
            break;
        case Op::Lt:
        case Op::Le:
        case Op::Gt:
        case Op::Ge:
            if (!numeric(a) || !numeric(b)) {
                throw std::invalid_argument(fmt::format("operands of '{}' must be numeric", op_name(op)));
            }
            n.type = ValueType::Bool;
            break;
        case Op::Eq:
        case Op::Ne:
            if (numeric(a) != numeric(b)) {
                throw std::invalid_argument(fmt::format("cannot compare {} with {}", to_string(a), to_string(b)));
            }
            n.type = ValueType::Bool;
            break;
        case Op::And:
        case Op::Or:
            if (a != ValueType::Bool || b != ValueType::Bool) {
                throw std::invalid_argument(fmt::format("operands of '{}' must be bool", op_name(op)));
            }
            n.type = ValueType::Bool;
            break;
        default:
            throw std::logic_error("not a binary operator");
    }
    n.args.push_back(std::move(lhs));
    n.args.push_back(std::move(rhs));
    return make(std::move(n));
}

Expr call(Op op, std::vector<Expr> args) {
    if (args.size() < 2) throw std::invalid_argument(fmt::format("{} needs at least two arguments", op_name(op)));
    ExprNode n;
    n.op = op;
    n.type = ValueType::Int;
    for (const auto& a : args) {
        if (!numeric(a.type())) throw std::invalid_argument(fmt::format("arguments of {} must be numeric", op_name(op)));
        n.type = arithmetic_result(n.type, a.type());
    }
    n.args = std::move(args);
    return make(std::move(n));
}

Expr ite(Expr cond, Expr then_branch, Expr else_branch) {
    if (cond.type() != ValueType::Bool) throw std::invalid_argument("condition of '?' must be bool");
    ValueType a = then_branch.type();
    ValueType b = else_branch.type();
    if (numeric(a) != numeric(b)) throw std::invalid_argument("branches of '?' have incompatible types");
    if (cond.is_constant()) return cond.eval_bool({}) ? then_branch : else_branch;
    ExprNode n;
    n.op = Op::Ite;
    n.type = a == ValueType::Bool ? ValueType::Bool : arithmetic_result(a, b);
    n.args = {std::move(cond), std::move(then_branch), std::move(else_branch)};
    return make(std::move(n));
}

std::optional<std::int64_t> equality_with(const Expr& e, std::size_t var) {
    const ExprNode& n = e.node();
    if (n.op == Op::And) {
        if (auto v = equality_with(n.args[0], var)) return v;
        return equality_with(n.args[1], var);
    }
    if (n.op != Op::Eq) return std::nullopt;
    const ExprNode& a = n.args[0].node();
    const ExprNode& b = n.args[1].node();
    if (a.op == Op::Var && a.var == var && b.op == Op::IntLit) return b.int_value;
    if (b.op == Op::Var && b.var == var && a.op == Op::IntLit) return a.int_value;
    return std::nullopt;
}

}  // namespace expr
}  // namespace tmc
