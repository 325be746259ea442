#include <cmath>

#include <gtest/gtest.h>

#include "tmc/checker.hpp"
#include "tmc/envs.hpp"
#include "tmc/errors.hpp"
#include "tmc/joint.hpp"
#include "tmc/simulate.hpp"

using namespace tmc;

namespace {

JointPolicy always(const GuardedProgram& p, const std::string& action) {
    TabularPolicy t;
    t.default_action = *p.action_id(action);
    std::vector<AgentPolicy> pols;
    for (std::int64_t v = p.turn_bound().lo; v <= p.turn_bound().hi; ++v) pols.emplace_back(p.schema(), p.actions(), t);
    return JointPolicy(p, std::move(pols));
}

const char* kFlip =
    "turn : [1..1] init 1;\ndone : [0..1] init 0;\nheads : [0..1] init 0;\n"
    "[flip] done=0 -> 0.3:(heads'=1)&(done'=1) + 0.7:(done'=1);\n"
    "label \"heads\" = heads=1;\nlabel \"never\" = heads=2;\nlabel \"start\" = done=0;\n";

// Walk on 0..N from `start`, up with p, absorbed at both ends.
std::string gambler(int n, int start, double p) {
    return "const int N = " + std::to_string(n) + ";\nturn : [1..1] init 1;\ndone : [0..1] init 0;\n" +
           "x : [0..N] init " + std::to_string(start) + ";\n[step] done=0 -> " + std::to_string(p) +
           ":(x'=x+1)&(done'=x+1=N?1:0) + " + std::to_string(1 - p) +
           ":(x'=x-1)&(done'=x-1=0?1:0);\nlabel \"win\" = x=N;\n";
}

}  // namespace

TEST(Simulate, FlipFrequency) {
    GuardedProgram p = parse_program(kFlip);
    JointPolicy jp = always(p, "flip");
    Estimate e = estimate_reachability(p, jp, "heads", 100000, 100, 11);
    EXPECT_EQ(e.episodes, 100000u);
    EXPECT_EQ(e.truncated, 0u);
    EXPECT_NEAR(e.estimate, 0.3, 4 * std::sqrt(0.3 * 0.7 / 1e5));
    EXPECT_NEAR(e.std_error, std::sqrt(e.estimate * (1 - e.estimate) / 1e5), 1e-15);
}

TEST(Simulate, GamblerRuinMatchesClosedForm) {
    const int n = 10, start = 4;
    const double p = 0.45, r = (1 - p) / p;
    const double exact = (1 - std::pow(r, start)) / (1 - std::pow(r, n));
    GuardedProgram prog = parse_program(gambler(n, start, p));
    JointPolicy jp = always(prog, "step");
    Estimate e = estimate_reachability(prog, jp, "win", 100000, 100000, 5);
    EXPECT_EQ(e.truncated, 0u);
    EXPECT_NEAR(e.estimate, exact, 4 * std::sqrt(exact * (1 - exact) / 1e5));
    InducedBuild b = build_induced_dtmc(prog, jp);
    SolverOptions tight;
    tight.tolerance = 1e-13;
    EXPECT_NEAR(check(b.dtmc, *pctl::parse_property("P=? [F \"win\"]"), tight).value_at_initial, exact, 1e-9);
}

TEST(Simulate, LabelAtInitialAndUnreachable) {
    GuardedProgram p = parse_program(kFlip);
    JointPolicy jp = always(p, "flip");
    Estimate at_start = estimate_reachability(p, jp, "start", 1000, 10, 1);
    EXPECT_EQ(at_start.estimate, 1.0);
    EXPECT_EQ(at_start.std_error, 0.0);
    Estimate never = estimate_reachability(p, jp, "never", 1000, 10, 1);
    EXPECT_EQ(never.estimate, 0.0);
    EXPECT_EQ(never.truncated, 0u);
    EXPECT_THROW(estimate_reachability(p, jp, "nope", 10, 10, 1), UnknownLabel);
    EXPECT_THROW(estimate_reachability(p, jp, "heads", 0, 10, 1), ConfigError);
}

TEST(Simulate, TruncatedEpisodesCountAsMisses) {
    GuardedProgram p = parse_program(
        "turn : [1..1] init 1;\nx : [0..1] init 0;\n[tick] true -> (x'=1-x);\nlabel \"two\" = x=2;\n");
    JointPolicy jp = always(p, "tick");
    Estimate e = estimate_reachability(p, jp, "two", 50, 20, 1);
    EXPECT_EQ(e.truncated, 50u);
    EXPECT_EQ(e.estimate, 0.0);
}

TEST(Simulate, SeededRunsReproduce) {
    BenchmarkSpec spec = benchmark("cc", {{"grid", 3}});
    GuardedProgram p = instantiate(spec);
    JointPolicy jp(p, scripted_policies(spec, p));
    EpisodeOptions opt;
    opt.horizon = 200;
    EpisodeTrace a = run_episode(p, jp, 42, 7, opt), b = run_episode(p, jp, 42, 7, opt);
    ASSERT_EQ(a.states.size(), b.states.size());
    for (std::size_t i = 0; i < a.states.size(); ++i) EXPECT_EQ(a.states[i], b.states[i]);
    ASSERT_EQ(a.steps.size(), a.states.size() - 1);
    for (std::size_t i = 0; i < a.steps.size(); ++i) {
        EXPECT_EQ(a.steps[i].action, b.steps[i].action);
        EXPECT_EQ(a.steps[i].agent, jp.agent_of(a.states[i]));
    }
    Estimate x = estimate_reachability(p, jp, "player2_ko", 2000, 100, 9);
    Estimate y = estimate_reachability(p, jp, "player2_ko", 2000, 100, 9);
    EXPECT_EQ(x.hits, y.hits);
    EXPECT_THROW(run_episode(p, jp, 1, 1, EpisodeOptions{0, {}}), ConfigError);
}

TEST(Simulate, MarkingOrderPathHoldsSurely) {
    BenchmarkSpec spec = benchmark("tictactoe");
    GuardedProgram p = instantiate(spec);
    JointPolicy jp(p, scripted_policies(spec, p, "marking_order"));
    auto f = pctl::parse_property("P=? [ ((\"cell_10=0\" U cell_10=2) U cell_12=2) U cell_11=2 ]");
    Estimate e = estimate_path(p, jp, *std::get<pctl::Prob>(f->node).path, 10000, 10000, 3);
    EXPECT_EQ(e.estimate, 1.0);
    EXPECT_EQ(estimate_reachability(p, jp, "won_2", 1000, 10000, 3).estimate, 1.0);
    EXPECT_EQ(e.truncated, 0u);
}

TEST(Simulate, LassoSemantics) {
    GuardedProgram p = parse_program(kFlip);
    FactoredState s0 = p.initial_state(), tails(std::vector<FeatureValue>{1, 1, 0}),
                  heads(std::vector<FeatureValue>{1, 1, 1});
    auto path = [](const char* text) {
        auto f = pctl::parse_property(text);
        return std::get<pctl::Prob>(f->node).path;
    };
    EXPECT_TRUE(path_holds_on_lasso(p, *path("P=? [F \"heads\"]"), {s0, heads}));
    EXPECT_FALSE(path_holds_on_lasso(p, *path("P=? [F \"heads\"]"), {s0, tails}));
    // The last state repeats forever.
    EXPECT_TRUE(path_holds_on_lasso(p, *path("P=? [X X X \"heads\"]"), {s0, heads}));
    EXPECT_TRUE(path_holds_on_lasso(p, *path("P=? [G !\"never\"]"), {s0, tails}));
    EXPECT_FALSE(path_holds_on_lasso(p, *path("P=? [G \"start\"]"), {s0, tails}));
    EXPECT_TRUE(path_holds_on_lasso(p, *path("P=? [\"start\" U<=1 \"heads\"]"), {s0, heads}));
    EXPECT_FALSE(path_holds_on_lasso(p, *path("P=? [\"start\" U<1 \"heads\"]"), {s0, heads}));
    EXPECT_THROW(path_holds_on_lasso(p, *path("P=? [F \"heads\"]"), {}), ConfigError);
}

TEST(Simulate, AgreesWithCheckerOnBoundedUntil) {
    BenchmarkSpec spec = benchmark("mabp", {{"n_agents", 4}});
    GuardedProgram p = instantiate(spec);
    JointPolicy jp(p, scripted_policies(spec, p, "risky_first"));
    InducedBuild b = build_induced_dtmc(p, jp);
    for (const char* text : {"P=? [F<=1 \"lost_1\"]", "P=? [!\"lost_2\" U<=3 \"lost_1\"]", "P=? [G !\"lost_1\"]"}) {
        auto f = pctl::parse_property(text);
        double exact = check(b.dtmc, *f).value_at_initial;
        Estimate e = estimate_path(p, jp, *std::get<pctl::Prob>(f->node).path, 100000, 100, 17);
        double se = std::max(std::sqrt(exact * (1 - exact) / 1e5), 1e-12);
        EXPECT_LE(std::abs(e.estimate - exact), 4 * se) << text;
    }
}

TEST(Simulate, NestedProbabilityUnsupported) {
    GuardedProgram p = parse_program(kFlip);
    JointPolicy jp = always(p, "flip");
    auto f = pctl::parse_property("P=? [F P>0.5 [X \"heads\"]]");
    EXPECT_THROW(estimate_path(p, jp, *std::get<pctl::Prob>(f->node).path, 10, 10, 1), UnsupportedPathFormula);
}
