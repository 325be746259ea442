#include <algorithm>
#include <deque>
#include <random>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "support/oracles.hpp"
#include "tmc/checker.hpp"
#include "tmc/errors.hpp"
#include "tmc/model.hpp"

using namespace tmc;

TEST(Model, SchemaInvariants) {
    EXPECT_THROW(FeatureSchema({"a", "turn"}, {{0, 1}}, "turn"), Error);
    EXPECT_THROW(FeatureSchema({"a", "turn"}, {{2, 1}, {1, 1}}, "turn"), Error);
    EXPECT_THROW(FeatureSchema({"a", "a"}, {{0, 1}, {0, 1}}, "a"), Error);
    EXPECT_THROW(FeatureSchema({"a", "b"}, {{0, 1}, {0, 1}}, "turn"), Error);
    FeatureSchema s({"a", "turn"}, {{0, 3}, {1, 2}}, "turn");
    EXPECT_EQ(s.turn_index(), 1u);
    std::vector<FeatureValue> ok{3, 2}, bad{4, 1}, short_state{1};
    EXPECT_TRUE(s.admits(ok));
    EXPECT_FALSE(s.admits(bad));
    EXPECT_THROW(s.validate(bad), InvalidState);
    EXPECT_THROW(s.validate(short_state), InvalidState);
}

TEST(Model, StateStoreInternsExactly) {
    StateStore store(3);
    std::mt19937_64 rng(5);
    std::map<std::vector<FeatureValue>, StateIndex> reference;
    for (int i = 0; i < 20000; ++i) {
        std::vector<FeatureValue> v{static_cast<FeatureValue>(rng() % 40), static_cast<FeatureValue>(rng() % 40),
                                    static_cast<FeatureValue>(rng() % 3)};
        auto [idx, fresh] = store.intern(v);
        auto it = reference.find(v);
        if (it == reference.end()) {
            EXPECT_TRUE(fresh);
            EXPECT_EQ(idx, reference.size());
            reference.emplace(v, idx);
        } else {
            EXPECT_FALSE(fresh);
            EXPECT_EQ(idx, it->second);
        }
    }
    EXPECT_EQ(store.size(), reference.size());
    for (const auto& [v, idx] : reference) {
        EXPECT_TRUE(std::equal(v.begin(), v.end(), store[idx].begin()));
        EXPECT_EQ(store.find(v), idx);
    }
    std::vector<FeatureValue> absent{99, 99, 99};
    EXPECT_FALSE(store.find(absent));
}

TEST(Model, DtmcRowsMustBeStochastic) {
    FeatureSchema schema({"turn"}, {{0, 1}}, "turn");
    StateSpace space{schema, StateStore(1), {}, {"a"}};
    std::vector<FeatureValue> s0{0}, s1{1};
    space.states.intern(s0);
    space.states.intern(s1);
    EXPECT_THROW(SparseDtmc(space, 0, {0, 1, 2}, {{1, 0.9}, {1, 1.0}}, {0, 0}), ProbabilitiesDoNotSumToOne);
    EXPECT_THROW(SparseDtmc(space, 0, {0, 1, 2}, {{2, 1.0}, {1, 1.0}}, {0, 0}), ModelError);
    EXPECT_NO_THROW(SparseDtmc(space, 0, {0, 1, 2}, {{1, 1.0}, {1, 1.0}}, {0, 0}));
}

TEST(Model, SingleStateIdentity) {
    FeatureSchema schema({"turn"}, {{1, 1}}, "turn");
    StateSpace space{schema, StateStore(1), {}, {"loop"}};
    std::vector<FeatureValue> s{1};
    space.states.intern(s);
    ExplicitMdp mdp(space, 0, {0, 1}, {0}, {0, 1}, {{0, 1.0}});
    SparseDtmc d = induce_dtmc_monolithic(mdp, [](StateIndex) { return ActionId{0}; });
    ASSERT_EQ(d.num_states(), 1u);
    ASSERT_EQ(d.row(0).size(), 1u);
    EXPECT_EQ(d.row(0)[0].column, 0u);
    EXPECT_EQ(d.row(0)[0].value, 1.0);
}

TEST(Model, InducedGamblerChain) {
    FeatureSchema schema({"pos", "turn"}, {{0, 2}, {1, 1}}, "turn");
    StateSpace space{schema, StateStore(2), {}, {"a", "b"}};
    for (FeatureValue i = 0; i < 3; ++i) {
        std::vector<FeatureValue> v{i, 1};
        space.states.intern(v);
    }
    space.labels["s2"] = {false, false, true};
    // s1 has action a (fair step) and b (stay).
    ExplicitMdp mdp(space, 1, {0, 1, 3, 4}, {0, 0, 1, 0}, {0, 1, 3, 4, 5},
                    {{0, 1.0}, {0, 0.5}, {2, 0.5}, {1, 1.0}, {2, 1.0}});
    SparseDtmc d = induce_dtmc_monolithic(mdp, [](StateIndex) { return ActionId{0}; });
    EXPECT_EQ(d.num_states(), 3u);
    EXPECT_DOUBLE_EQ(check(d, *pctl::parse_property("P=? [F \"s2\"]")).value_at_initial, 0.5);
    EXPECT_THROW(induce_dtmc_monolithic(mdp, [](StateIndex s) { return ActionId{s == 1 ? 0u : 1u}; }), PolicySelectsDisabledAction);
}

TEST(Model, RandomRestrictionMatchesBruteForce) {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 10; ++trial) {
        ExplicitMdp mdp = oracle::random_mdp(50, rng);
        std::vector<ActionId> choice(mdp.num_states());
        for (StateIndex s = 0; s < mdp.num_states(); ++s) {
            auto en = enabled_actions(mdp, s);
            choice[s] = en[rng() % en.size()];
        }
        SparseDtmc d = induce_dtmc_monolithic(mdp, [&](StateIndex s) { return choice[s]; });

        // Brute force: reachable set under the policy and its rows.
        std::set<StateIndex> seen{mdp.initial()};
        std::deque<StateIndex> todo{mdp.initial()};
        while (!todo.empty()) {
            StateIndex s = todo.front();
            todo.pop_front();
            for (const auto& e : mdp.choice_row(*mdp.find_choice(s, choice[s])))
                if (seen.insert(e.column).second) todo.push_back(e.column);
        }
        ASSERT_EQ(d.num_states(), seen.size());
        for (StateIndex i = 0; i < d.num_states(); ++i) {
            auto orig = mdp.space().states.find(d.state(i));
            ASSERT_TRUE(orig);
            auto want = mdp.choice_row(*mdp.find_choice(*orig, choice[*orig]));
            auto got = d.row(i);
            ASSERT_EQ(got.size(), want.size());
            for (std::size_t k = 0; k < got.size(); ++k) {
                EXPECT_TRUE(std::ranges::equal(d.state(got[k].column), mdp.state(want[k].column)));
                EXPECT_EQ(got[k].value, want[k].value);
            }
            for (const auto& [name, set] : d.labels()) EXPECT_EQ(set[i], mdp.labels().at(name)[*orig]);
        }
    }
}

TEST(Model, CanonicalizeSortsStates) {
    std::mt19937_64 rng(3);
    SparseDtmc d = oracle::random_dtmc(30, rng);
    SparseDtmc c = canonicalize(d);
    ASSERT_EQ(c.num_states(), d.num_states());
    for (StateIndex i = 1; i < c.num_states(); ++i) {
        EXPECT_TRUE(std::ranges::lexicographical_compare(c.state(i - 1), c.state(i)));
    }
    auto a = oracle::until(oracle::dense(d), oracle::label(d, "a"), oracle::label(d, "b"));
    auto b = oracle::until(oracle::dense(c), oracle::label(c, "a"), oracle::label(c, "b"));
    for (StateIndex i = 0; i < d.num_states(); ++i) {
        StateIndex j = *c.space().states.find(d.state(i));
        EXPECT_NEAR(a[i], b[j], 1e-12);
    }
    EXPECT_TRUE(std::ranges::equal(c.state(c.initial()), d.state(d.initial())));
}

TEST(Model, ExportFormat) {
    FeatureSchema schema({"x", "turn"}, {{0, 1}, {1, 1}}, "turn");
    StateSpace space{schema, StateStore(2), {}, {"go"}};
    std::vector<FeatureValue> s0{0, 1}, s1{1, 1};
    space.states.intern(s0);
    space.states.intern(s1);
    space.labels["one"] = {false, true};
    SparseDtmc d(space, 0, {0, 2, 3}, {{1, 0.1}, {0, 0.9}, {1, 1.0}}, {0, 0});
    std::ostringstream out;
    export_explicit(out, d);
    EXPECT_EQ(out.str(),
              "states 2 transitions 3 initial 0\n"
              "0 go 0 0.90000000000000002\n"
              "0 go 1 0.10000000000000001\n"
              "1 go 1 1\n"
              "label one: 1\n");
}
