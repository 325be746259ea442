#pragma once

#include <cstdint>
#include <vector>

#include "tmc/gcl.hpp"

namespace tmc {

enum class Op {
    IntLit,
    RealLit,
    BoolLit,
    Var,
    Neg,
    Not,
    Add,
    Sub,
    Mul,
    Div,
    Min,
    Max,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
    Ite
};

struct ExprNode {
    Op op = Op::IntLit;
    ValueType type = ValueType::Int;
    std::int64_t int_value = 0;
    double real_value = 0.0;
    bool bool_value = false;
    std::size_t var = 0;
    std::vector<Expr> args;
};

// Node constructors. They type-check their operands (throwing
// std::invalid_argument with a readable message) and fold constant operands.
namespace expr {

Expr int_literal(std::int64_t v);
Expr real_literal(double v);
Expr bool_literal(bool v);
Expr variable(std::size_t index);
Expr unary(Op op, Expr operand);
Expr binary(Op op, Expr lhs, Expr rhs);
Expr call(Op op, std::vector<Expr> args);
Expr ite(Expr cond, Expr then_branch, Expr else_branch);

// Matches `turn = c` or `c = turn` for the given variable index.
std::optional<std::int64_t> equality_with(const Expr& e, std::size_t var);

}  // namespace expr
}  // namespace tmc
