#include <random>

#include <gtest/gtest.h>

#include "tmc/errors.hpp"
#include "support/corpora.hpp"
#include "tmc/pctl.hpp"

using namespace tmc::pctl;

namespace {

const Until& top_until(const StatePtr& f) {
    const auto& p = std::get<Prob>(f->node);
    return std::get<Until>(p.path->node);
}

const StateFormula& holds(const PathPtr& p) { return *std::get<Holds>(p->node).formula; }

}  // namespace

TEST(PctlParse, FinallyDesugarsToTrueUntil) {
    auto f = parse_property("P=? [ F \"won_1\" ]");
    const auto& p = std::get<Prob>(f->node);
    EXPECT_EQ(p.quantifier, Quantifier::Plain);
    EXPECT_FALSE(p.bound);
    const Until& u = top_until(f);
    EXPECT_TRUE(std::holds_alternative<True>(holds(u.lhs).node));
    EXPECT_EQ(std::get<Atom>(holds(u.rhs).node).label, "won_1");
    EXPECT_TRUE(*f == *make_prob(Quantifier::Plain, std::nullopt, make_finally(make_holds(make_atom("won_1")))));
}

TEST(PctlParse, MarkingOrderIsLeftNested) {
    auto f = parse_property("P=? [ ((\"cell_10=0\" U cell_10=2) U cell_12=2) U cell_11=2 ]");
    const Until& outer = top_until(f);
    const auto& rhs = std::get<Comparison>(holds(outer.rhs).node);
    EXPECT_EQ(rhs.feature, "cell_11");
    EXPECT_EQ(rhs.value, 2);
    const auto& mid = std::get<Until>(outer.lhs->node);
    const auto& inner = std::get<Until>(mid.lhs->node);
    EXPECT_EQ(std::get<Atom>(holds(inner.lhs).node).label, "cell_10=0");
    EXPECT_EQ(std::get<Comparison>(holds(inner.rhs).node).feature, "cell_10");
}

TEST(PctlParse, UntilIsLeftAssociativeWithoutParentheses) {
    auto a = parse_property("P=? [ x=0 U y=1 U z=2 ]");
    auto b = parse_property("P=? [ (x=0 U y=1) U z=2 ]");
    EXPECT_TRUE(*a == *b);
}

TEST(PctlParse, ConjunctionBindsTighterThanUntil) {
    auto a = parse_property("P=? [ a & b U c ]");
    auto b = parse_property("P=? [ (a & b) U c ]");
    EXPECT_TRUE(*a == *b);
}

TEST(PctlParse, QuantifiedVariants) {
    EXPECT_EQ(std::get<Prob>(parse_property("Pmax=? [ F \"lost_1\" ]")->node).quantifier, Quantifier::Max);
    EXPECT_EQ(std::get<Prob>(parse_property("Pmin=? [ G !\"lost_1\" ]")->node).quantifier, Quantifier::Min);
    auto b = std::get<Prob>(parse_property("P>=0.5 [ X true ]")->node).bound;
    ASSERT_TRUE(b);
    EXPECT_EQ(b->op, BoundOp::Ge);
    EXPECT_EQ(b->threshold, 0.5);
}

TEST(PctlParse, ShorthandApplication) {
    EXPECT_TRUE(*parse_property("P(F won_1)") == *parse_property("P=? [ F won_1 ]"));
    EXPECT_TRUE(*parse_property("P(healpots_1=1 U healpots_1=0)") ==
                *parse_property("P=? [ healpots_1=1 U healpots_1=0 ]"));
}

TEST(PctlParse, BoundedOperators) {
    auto f = parse_property("P=? [ F<=10 x>=2 ]");
    const auto& bu = std::get<BoundedUntil>(std::get<Prob>(f->node).path->node);
    EXPECT_EQ(bu.op, TimeBound::Le);
    EXPECT_EQ(bu.steps, 10u);
    auto g = parse_property("P=? [ a U<3 b ]");
    const auto& bu2 = std::get<BoundedUntil>(std::get<Prob>(g->node).path->node);
    EXPECT_EQ(bu2.op, TimeBound::Lt);
    EXPECT_EQ(bu2.steps, 3u);
}

TEST(PctlParse, NegationBindsComparisonTightly) {
    auto f = parse_property("P>0 [ G !hp1<=5 ]");
    const auto& g = std::get<Globally>(std::get<Prob>(f->node).path->node);
    const auto& n = std::get<Not>(holds(g.operand).node);
    EXPECT_EQ(std::get<Comparison>(n.operand->node).op, CompareOp::Le);
}

TEST(PctlParse, BoundOutsideUnitIntervalRejected) {
    EXPECT_THROW(parse_property("P>=1.5 [ X true ]"), tmc::BoundOutOfRange);
    EXPECT_THROW(parse_property("P<-0.1 [ X true ]"), tmc::SyntaxError);
}

TEST(PctlParse, RejectsUnsupportedOperatorsWithDedicatedMessage) {
    try {
        parse_property("P=? [ a W b ]");
        FAIL();
    } catch (const tmc::SyntaxError& e) {
        EXPECT_NE(std::string(e.what()).find("weak until"), std::string::npos);
    }
    try {
        parse_property("R=? [ F done=1 ]");
        FAIL();
    } catch (const tmc::SyntaxError& e) {
        EXPECT_NE(std::string(e.what()).find("reward"), std::string::npos);
    }
}

TEST(PctlParse, ErrorsCarryPosition) {
    try {
        parse_property("P=? [ F\n  ( a ]");
        FAIL();
    } catch (const tmc::SyntaxError& e) {
        EXPECT_EQ(e.line(), 2u);
        EXPECT_EQ(e.column(), 7u);
    }
}

TEST(PctlParse, MalformedInputs) {
    for (const char* bad : {"", "P=? [", "P=? [ a ]", "P=? [ F ]", "a U b", "P=? [ F a ] & b", "!P=? [ F a ]",
                            "P>=0.5 [ F P=? [ F a ] ]", "P=? [ F a & X b ]", "P=? [ a | b ]", "P=? [ F<=-1 a ]",
                            "Pmax [ F a ]", "P=? [ G<=3 a ]", "P=? [ F \"\" ]", "x = 1.5"}) {
        EXPECT_THROW(parse_property(bad), tmc::PositionedError) << bad;
    }
}

TEST(PctlFormat, CanonicalText) {
    EXPECT_EQ(format_property(*parse_property("P(F won_1)")), "P=? [ true U \"won_1\" ]");
    EXPECT_EQ(format_property(*make_not(make_comparison("hp1", CompareOp::Le, 5))), "!(hp1<=5)");
    auto nested = parse_property("P=? [ ((\"cell_10=0\" U cell_10=2) U cell_12=2) U cell_11=2 ]");
    EXPECT_EQ(format_property(*nested), "P=? [ ((\"cell_10=0\" U cell_10=2) U cell_12=2) U cell_11=2 ]");
    EXPECT_TRUE(*parse_property(format_property(*nested)) == *nested);
}

TEST(PctlFormat, TableQueriesRoundTrip) {
    for (const char* q : {"P(F won_1)", "P(F won_2)", "P(poisons_1=2 U poisons_1<2)",
                          "P(healpots_1=1 U healpots_1=0)", "P(F lost_1)",
                          "P(((cell_10=0 U cell_10=2) U cell_12=2) U cell_11=2)", "P(F player1_ko)",
                          "P(F player2_ko)", "P(F player3_ko)", "P(F collision)"}) {
        auto f = parse_property(q);
        EXPECT_TRUE(is_query(*f));
        EXPECT_TRUE(*parse_property(format_property(*f)) == *f) << q;
    }
}

TEST(PctlFormat, RandomAstsRoundTrip) {
    corpora::AstGen gen(2024);
    for (int i = 0; i < 1000; ++i) {
        StatePtr f = gen.state(6, true);
        std::string text = format_property(*f);
        StatePtr g;
        ASSERT_NO_THROW(g = parse_property(text)) << text;
        ASSERT_TRUE(*g == *f) << text << "\n" << format_property(*g);
    }
}
