#include "support/corpora.hpp"

namespace corpora {

using namespace tmc;
using namespace tmc::pctl;

StatePtr AstGen::state(int depth, bool allow_query) {
    int pick = uniform(0, depth <= 0 ? 2 : 6);
    switch (pick) {
        case 0:
            return make_true();
        case 1:
            return make_atom(label());
        case 2: {
            static const CompareOp ops[] = {CompareOp::Eq, CompareOp::Ne, CompareOp::Lt,
                                            CompareOp::Le, CompareOp::Gt, CompareOp::Ge};
            return make_comparison(ident(), ops[uniform(0, 5)], uniform(-3, 120));
        }
        case 3:
            return make_and(state(depth - 1, false), state(depth - 1, false));
        case 4:
            return make_not(state(depth - 1, false));
        default: {
            static const Quantifier qs[] = {Quantifier::Plain, Quantifier::Max, Quantifier::Min};
            std::optional<ProbBound> bound;
            if (!allow_query || uniform(0, 1) == 0) {
                static const BoundOp bs[] = {BoundOp::Lt, BoundOp::Le, BoundOp::Gt, BoundOp::Ge};
                bound = ProbBound{bs[uniform(0, 3)], uniform(0, 1000) / 1000.0};
            }
            return make_prob(qs[uniform(0, 2)], bound, path(depth - 1));
        }
    }
}

PathPtr AstGen::path(int depth) {
    auto operand = [&](int d) -> PathPtr {
        if (d > 0 && uniform(0, 3) == 0) return path(d - 1);
        return make_holds(state(d, false));
    };
    switch (uniform(0, 4)) {
        case 0:
            return make_next(operand(depth));
        case 1:
            return make_until(operand(depth), operand(depth));
        case 2:
            return make_bounded_until(operand(depth), operand(depth), uniform(0, 1) ? TimeBound::Lt : TimeBound::Le,
                                      static_cast<std::uint64_t>(uniform(0, 50)));
        case 3:
            return make_globally(operand(depth));
        default:
            return make_finally(operand(depth));
    }
}

std::string AstGen::ident() {
    static const char* names[] = {"x", "hp_1", "cell_10", "turn", "done", "poisons_0"};
    return names[uniform(0, 5)];
}

std::string AstGen::label() {
    static const char* names[] = {"won_1", "lost_2", "collision", "cell_10=0", "a b"};
    return names[uniform(0, 4)];
}

namespace {

template <class E>
std::function<bool(const PositionedError&)> is() {
    return [](const PositionedError& e) { return dynamic_cast<const E*>(&e) != nullptr; };
}

const std::string kHead = "turn : [1..2] init 1;\nx : [0..1] init 0;\n";

}  // namespace

std::vector<Malformed> malformed_models() {
    return {
        {"missing_semicolon", "turn : [1..2] init 1;\nx : [0..1] init 0\n[a] turn=1 -> (x'=1);\n", is<SyntaxError>(), 3, 1},
        {"missing_turn", "x : [0..1] init 0;\n[a] x=0 -> (x'=1);\n", is<MissingTurnVariable>(), 3, 1},
        {"undeclared_in_guard", kHead + "[a] y=0 -> (turn'=1);\n", is<UndeclaredIdentifier>(), 3, 5},
        {"duplicate_variable", kHead + "turn : [1..2];\n", is<DuplicateDeclaration>(), 3, 1},
        {"empty_range", kHead + "z : [3..1];\n", is<ModelSemanticError>(), 3, 1},
        {"init_out_of_range", kHead + "z : [0..1] init 5;\n", is<ModelSemanticError>(), 3, 17},
        {"state_dependent_probability", kHead + "[a] turn=1 -> x:(turn'=2);\n", is<ModelSemanticError>(), 3, 15},
        {"numeric_guard", kHead + "[a] x+1 -> (turn'=2);\n", is<ModelSemanticError>(), 3, 5},
        {"assign_undeclared", kHead + "[a] turn=1 -> (y'=1);\n", is<UndeclaredIdentifier>(), 3, 16},
        {"assign_twice", kHead + "[a] turn=1 -> (x'=1)&(x'=0);\n", is<ModelSemanticError>(), 3, 23},
        {"assign_bool", kHead + "[a] turn=1 -> (x'=true);\n", is<ModelSemanticError>(), 3, 19},
        {"unterminated_string", kHead + "label \"abc = x=1;\n", is<SyntaxError>(), 3, 7},
        {"stray_character", kHead + "[a] turn=1 @ x=0 -> (x'=1);\n", is<SyntaxError>(), 3, 12},
        {"numeric_label", kHead + "label \"a\" = x+1;\n", is<ModelSemanticError>(), 3, 13},
        {"duplicate_label", kHead + "label \"a\" = x=1;\nlabel \"a\" = x=0;\n", is<DuplicateDeclaration>(), 4, 7},
        {"reward_unknown_action", kHead + "[a] turn=1 -> (x'=1);\nrewards \"r\"\n  [zzz] true : 1;\nendrewards\n",
         is<UndeclaredIdentifier>(), 5, 4},
        {"boolean_reward", kHead + "rewards \"r\"\n  true : true;\nendrewards\n", is<ModelSemanticError>(), 4, 10},
        {"missing_endrewards", kHead + "rewards \"r\"\n  true : 1;\n", is<SyntaxError>(), 5, 1},
        {"unbalanced_guard", kHead + "[a] (turn=1 -> (turn'=2);\n", is<SyntaxError>(), 3, 13},
        {"real_int_constant", "const int N = 0.5;\n" + kHead, is<ModelSemanticError>(), 1, 15},
        {"missing_arrow", kHead + "[a] turn=1 (turn'=2);\n", is<SyntaxError>(), 3, 12},
        {"missing_init_value", kHead + "z : [0..1] init ;\n", is<SyntaxError>(), 3, 17},
        {"bool_operand_mismatch", kHead + "[a] x & true -> (turn'=2);\n", is<ModelSemanticError>(), 3, 7},
        {"undeclared_bound", kHead + "z : [0..M];\n", is<UndeclaredIdentifier>(), 3, 9},
        {"unclosed_assignment", kHead + "[a] turn=1 -> 0.5:(turn'=2) + 0.5:(x'=1;\n", is<SyntaxError>(), 3, 40},
    };
}

}  // namespace corpora
