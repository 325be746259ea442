#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include <gtest/gtest.h>

#include "tmc/dqn.hpp"
#include "tmc/environment.hpp"
#include "tmc/envs.hpp"
#include "tmc/errors.hpp"
#include "tmc/mlp.hpp"
#include "tmc/policy.hpp"

using namespace tmc;

namespace {

// Plain-loop forward pass, no Eigen arithmetic.
std::vector<double> naive_forward(const Mlp& net, std::vector<double> x) {
    for (std::size_t l = 0; l < net.layers(); ++l) {
        const auto& w = net.weights(l);
        const auto& b = net.biases(l);
        std::vector<double> y(static_cast<std::size_t>(w.rows()));
        for (Eigen::Index r = 0; r < w.rows(); ++r) {
            double acc = b(r);
            for (Eigen::Index c = 0; c < w.cols(); ++c) acc += w(r, c) * x[static_cast<std::size_t>(c)];
            y[static_cast<std::size_t>(r)] = (l + 1 < net.layers()) ? std::max(acc, 0.0) : acc;
        }
        x = std::move(y);
    }
    return x;
}

Mlp random_net(std::vector<std::size_t> sizes, std::uint64_t seed) {
    Mlp net(std::move(sizes));
    Rng rng(seed);
    net.init_uniform(rng);
    return net;
}

FeatureSchema small_schema() { return FeatureSchema({"turn", "a", "b"}, {{1, 2}, {0, 4}, {-3, 3}}, "turn"); }

}  // namespace

TEST(Mlp, ForwardMatchesNaiveLoops) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Mlp net = random_net({4, 7, 5, 3}, seed);
        Rng rng(seed + 100);
        for (int k = 0; k < 20; ++k) {
            Eigen::VectorXd x(4);
            for (int i = 0; i < 4; ++i) x(i) = rng.uniform(-2, 2);
            Eigen::VectorXd got = net.forward(x);
            auto want = naive_forward(net, {x(0), x(1), x(2), x(3)});
            for (int i = 0; i < 3; ++i) EXPECT_NEAR(got(i), want[static_cast<std::size_t>(i)], 1e-12);
        }
    }
}

TEST(Mlp, ZeroWeightsGiveBias) {
    Mlp net({3, 4, 2});
    for (std::size_t l = 0; l < net.layers(); ++l) {
        net.weights(l).setZero();
        net.biases(l).setZero();
    }
    net.biases(1) << 1.5, -2.0;
    Eigen::VectorXd y = net.forward(Eigen::VectorXd::Constant(3, 0.7));
    EXPECT_EQ(y(0), 1.5);
    EXPECT_EQ(y(1), -2.0);
    EXPECT_EQ(net.parameter_count(), 3u * 4 + 4 + 4 * 2 + 2);
}

TEST(Mlp, InitWithinFanInBounds) {
    Mlp net = random_net({9, 16, 4}, 3);
    for (std::size_t l = 0; l < net.layers(); ++l) {
        double bound = 1.0 / std::sqrt(static_cast<double>(net.sizes()[l]));
        EXPECT_LE(net.weights(l).cwiseAbs().maxCoeff(), bound);
        EXPECT_LE(net.biases(l).cwiseAbs().maxCoeff(), bound);
    }
}

TEST(Mlp, TdLossGradientMatchesFiniteDifferences) {
    Mlp net = random_net({3, 6, 4}, 11);
    Rng rng(12);
    Eigen::MatrixXd x(3, 5);
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = rng.uniform(-1, 1);
    std::vector<ActionId> actions{0, 3, 1, 1, 2};
    Eigen::VectorXd y(5);
    y << 0.5, -1.0, 2.0, 0.0, 1.0;
    Mlp::Gradients grad;
    td_loss(net, x, actions, y, &grad);
    const double h = 1e-6;
    for (std::size_t l = 0; l < net.layers(); ++l) {
        for (Eigen::Index i = 0; i < net.weights(l).size(); ++i) {
            Mlp plus = net, minus = net;
            plus.weights(l)(i) += h;
            minus.weights(l)(i) -= h;
            double fd = (td_loss(plus, x, actions, y, nullptr) - td_loss(minus, x, actions, y, nullptr)) / (2 * h);
            EXPECT_NEAR(grad.weights[l](i), fd, 1e-6);
        }
        for (Eigen::Index i = 0; i < net.biases(l).size(); ++i) {
            Mlp plus = net, minus = net;
            plus.biases(l)(i) += h;
            minus.biases(l)(i) -= h;
            double fd = (td_loss(plus, x, actions, y, nullptr) - td_loss(minus, x, actions, y, nullptr)) / (2 * h);
            EXPECT_NEAR(grad.biases[l](i), fd, 1e-6);
        }
    }
}

TEST(Mlp, AdamFirstStepIsSignedLearningRate) {
    Mlp net = random_net({2, 2}, 1);
    Mlp before = net;
    Adam adam(net, 0.01);
    Mlp::Gradients g;
    g.weights.push_back(Eigen::MatrixXd(2, 2));
    g.weights[0] << 3.0, -0.5, 0.0, 1e-3;
    g.biases.push_back(Eigen::VectorXd(2));
    g.biases[0] << -2.0, 4.0;
    adam.step(net, g);
    for (Eigen::Index i = 0; i < 4; ++i) {
        double gi = g.weights[0](i);
        double want = before.weights(0)(i) - 0.01 * gi / (std::abs(gi) + 1e-8);
        EXPECT_NEAR(net.weights(0)(i), want, 1e-12);
    }
    EXPECT_NEAR(net.biases(0)(0), before.biases(0)(0) + 0.01, 1e-9);
    EXPECT_NEAR(net.biases(0)(1), before.biases(0)(1) - 0.01, 1e-9);
}

TEST(Dqn, TrainStepTargetsAndFixedPoint) {
    // No hidden layer: Q(s) = W x + b. Two terminal transitions whose targets a
    // linear map fits exactly; repeated steps drive the loss to zero.
    FeatureSchema schema({"turn", "x"}, {{1, 1}, {0, 1}}, "turn");
    Mlp net({2, 2});
    net.weights(0).setZero();
    net.biases(0).setZero();
    Mlp target = net;
    Adam adam(net, 0.05);
    Transition t0{{1, 0}, 0, 1.0, {1, 1}, true}, t1{{1, 1}, 1, -2.0, {1, 0}, true};
    std::vector<const Transition*> batch{&t0, &t1};
    double first = train_step(net, target, adam, schema, batch, 0.9);
    EXPECT_DOUBLE_EQ(first, (1.0 + 4.0) / 2);
    double loss = first;
    for (int i = 0; i < 3000; ++i) loss = train_step(net, target, adam, schema, batch, 0.9);
    EXPECT_LT(loss, 1e-8);
    EXPECT_NEAR(net.forward(normalize(schema, std::vector<FeatureValue>{1, 0}))(0), 1.0, 1e-4);
    EXPECT_NEAR(net.forward(normalize(schema, std::vector<FeatureValue>{1, 1}))(1), -2.0, 1e-4);

    // Bootstrapped target: y = r + gamma * max target(s').
    Mlp fresh({2, 2});
    fresh.weights(0).setZero();
    fresh.biases(0).setZero();
    Mlp tgt = fresh;
    tgt.biases(0) << 3.0, 5.0;
    Adam adam2(fresh, 1e-3);
    Transition t2{{1, 0}, 0, 1.0, {1, 1}, false};
    double l = train_step(fresh, tgt, adam2, schema, {&t2}, 0.5);
    EXPECT_DOUBLE_EQ(l, (1.0 + 0.5 * 5.0) * (1.0 + 0.5 * 5.0));
}

TEST(Dqn, NonFiniteLossThrows) {
    FeatureSchema schema({"turn"}, {{1, 1}}, "turn");
    Mlp net({1, 1});
    Mlp target = net;
    Adam adam(net, 1e-3);
    Transition t{{1}, 0, std::numeric_limits<double>::infinity(), {1}, true};
    EXPECT_THROW(train_step(net, target, adam, schema, {&t}, 0.9), NonFiniteLoss);
}

TEST(Dqn, EpsilonSchedule) {
    DqnConfig c;
    EXPECT_DOUBLE_EQ(c.epsilon_after(0), 0.5);
    EXPECT_DOUBLE_EQ(c.epsilon_after(1), 0.5 * 0.9999);
    EXPECT_NEAR(c.epsilon_after(1000), 0.5 * std::pow(0.9999, 1000), 1e-15);
    EXPECT_DOUBLE_EQ(c.epsilon_after(100000), 0.1);
    for (std::uint64_t s = 0; s < 30000; s += 1000) EXPECT_GE(c.epsilon_after(s), c.epsilon_after(s + 1000));
}

TEST(Dqn, ConfigValidation) {
    DqnConfig c;
    EXPECT_NO_THROW(c.validate());
    auto bad = [](auto mutate) {
        DqnConfig d;
        mutate(d);
        return d;
    };
    EXPECT_THROW(bad([](DqnConfig& d) { d.epsilon = 1.5; }).validate(), ConfigError);
    EXPECT_THROW(bad([](DqnConfig& d) { d.epsilon_min = 0.6; }).validate(), ConfigError);
    EXPECT_THROW(bad([](DqnConfig& d) { d.gamma = 0; }).validate(), ConfigError);
    EXPECT_THROW(bad([](DqnConfig& d) { d.learning_rate = -1; }).validate(), ConfigError);
    EXPECT_THROW(bad([](DqnConfig& d) { d.batch_size = 0; }).validate(), ConfigError);
    EXPECT_THROW(bad([](DqnConfig& d) { d.replay_capacity = 4; }).validate(), ConfigError);
    EXPECT_THROW(bad([](DqnConfig& d) { d.episodes = 0; }).validate(), ConfigError);
}

TEST(Dqn, ReplayBufferRingAndSampling) {
    ReplayBuffer buf(4);
    for (int i = 0; i < 6; ++i) buf.push({{i}, 0, static_cast<double>(i), {i}, false});
    EXPECT_EQ(buf.size(), 4u);
    std::multiset<double> rewards;
    for (std::size_t i = 0; i < buf.size(); ++i) rewards.insert(buf[i].reward);
    EXPECT_EQ(rewards, (std::multiset<double>{2, 3, 4, 5}));

    ReplayBuffer big(1000);
    for (int i = 0; i < 1000; ++i) big.push({{i}, 0, 0.0, {i}, false});
    Rng rng(9);
    std::vector<int> hits(1000, 0);
    for (int rep = 0; rep < 2000; ++rep) {
        auto idx = big.sample_indices(32, rng);
        std::set<std::size_t> distinct(idx.begin(), idx.end());
        ASSERT_EQ(distinct.size(), 32u);
        for (auto i : idx) ++hits[i];
    }
    // 64 expected hits per index; a crude uniformity check.
    for (int h : hits) {
        EXPECT_GT(h, 25);
        EXPECT_LT(h, 115);
    }
}

TEST(Policy, ArgmaxTiesAndScaling) {
    Eigen::VectorXd q(4);
    q << 1.0, 3.0, 3.0, -1.0;
    EXPECT_EQ(argmax(q), 1u);
    q << 0.0, 0.0, 0.0, 0.0;
    EXPECT_EQ(argmax(q), 0u);

    FeatureSchema schema = small_schema();
    std::vector<std::string> actions{"p", "q", "r"};
    Rng rng(4);
    AgentPolicy p = make_neural_policy(schema, actions, {8}, rng);
    AgentPolicy scaled = p;
    auto& net = std::get<NeuralPolicy>(scaled.body()).net;
    net.weights(net.layers() - 1) *= 3.5;
    net.biases(net.layers() - 1) *= 3.5;
    for (FeatureValue t = 1; t <= 2; ++t)
        for (FeatureValue a = 0; a <= 4; ++a)
            for (FeatureValue b = -3; b <= 3; ++b) {
                std::vector<FeatureValue> s{t, a, b};
                EXPECT_EQ(p.greedy_action(s), scaled.greedy_action(s));
            }
}

TEST(Policy, NeuralJsonRoundTripIsBitExact) {
    FeatureSchema schema = small_schema();
    std::vector<std::string> actions{"p", "q", "r"};
    Rng rng(21);
    AgentPolicy p = make_neural_policy(schema, actions, {16, 16}, rng);
    auto path = std::filesystem::temp_directory_path() / "tmc_policy_roundtrip.json";
    save_policy(p, path);
    AgentPolicy back = load_policy(path, schema, actions);
    std::filesystem::remove(path);
    Rng pick(5);
    for (int k = 0; k < 100; ++k) {
        std::vector<FeatureValue> s{static_cast<FeatureValue>(1 + pick.below(2)),
                                    static_cast<FeatureValue>(pick.below(5)),
                                    static_cast<FeatureValue>(pick.below(7)) - 3};
        Eigen::VectorXd a = p.q_values(s), b = back.q_values(s);
        for (Eigen::Index i = 0; i < a.size(); ++i) EXPECT_EQ(a(i), b(i));
        EXPECT_EQ(p.greedy_action(s), back.greedy_action(s));
    }
    EXPECT_EQ(policy_to_json(p), policy_to_json(back));
}

TEST(Policy, TabularAndScriptedRoundTrip) {
    FeatureSchema schema = small_schema();
    std::vector<std::string> actions{"p", "q", "r"};
    TabularPolicy t;
    t.table[{1, 2, -1}] = 2;
    t.table[{2, 0, 3}] = 1;
    t.default_action = 0;
    AgentPolicy p(schema, actions, t);
    AgentPolicy back = policy_from_json(policy_to_json(p));
    EXPECT_EQ(back.kind(), PolicyKind::Tabular);
    EXPECT_EQ(back.greedy_action(std::vector<FeatureValue>{1, 2, -1}), 2u);
    EXPECT_EQ(back.greedy_action(std::vector<FeatureValue>{2, 0, 3}), 1u);
    EXPECT_EQ(back.greedy_action(std::vector<FeatureValue>{2, 0, 2}), 0u);

    AgentPolicy s = make_scripted_policy(schema, actions, "demo", {{"a>2 & b<0", "r"}, {"!(a=0)", "q"}}, "p");
    AgentPolicy sb = policy_from_json(policy_to_json(s));
    for (FeatureValue a = 0; a <= 4; ++a)
        for (FeatureValue b = -3; b <= 3; ++b) {
            std::vector<FeatureValue> st{1, a, b};
            ActionId want = (a > 2 && b < 0) ? 2 : (a != 0 ? 1 : 0);
            EXPECT_EQ(s.greedy_action(st), want);
            EXPECT_EQ(sb.greedy_action(st), want);
        }
    EXPECT_THROW(make_scripted_policy(schema, actions, "bad", {{"a>2", "zap"}}, "p"), Error);
    EXPECT_THROW(make_scripted_policy(schema, actions, "bad", {{"nope=1", "p"}}, "p"), Error);
}

TEST(Policy, SchemaMismatchAcrossBenchmarks) {
    GuardedProgram ttt = instantiate("tictactoe", {{"size", 2}});
    GuardedProgram poke = instantiate("pokemon", {{"hp", 5}});
    Rng rng(1);
    AgentPolicy p = make_neural_policy(ttt.schema(), ttt.actions(), {4}, rng);
    EXPECT_NO_THROW(p.require_compatible(ttt.schema(), ttt.actions()));
    EXPECT_THROW(p.require_compatible(poke.schema(), poke.actions()), SchemaMismatch);
    auto path = std::filesystem::temp_directory_path() / "tmc_policy_mismatch.json";
    save_policy(p, path);
    EXPECT_THROW(load_policy(path, poke.schema(), poke.actions()), SchemaMismatch);
    std::filesystem::remove(path);
}

TEST(Policy, MalformedJsonRejected) {
    EXPECT_THROW(policy_from_json(nlohmann::json::parse(R"({"kind":"neural"})")), PolicyFormatError);
    EXPECT_THROW(policy_from_json(nlohmann::json::parse("[1,2,3]")), PolicyFormatError);
    auto path = std::filesystem::temp_directory_path() / "tmc_policy_garbage.json";
    {
        std::ofstream out(path);
        out << "{not json";
    }
    EXPECT_THROW(load_policy(path), PolicyFormatError);
    std::filesystem::remove(path);
}

TEST(Environment, SamplingFrequenciesAndTurnPassing) {
    GuardedProgram p = parse_program(
        "turn : [1..3] init 1;\nx : [0..2] init 0;\n"
        "[flip] true -> 0.25:(x'=1)&(turn'=turn=3?1:turn+1) + 0.75:(x'=2)&(turn'=turn=3?1:turn+1);\n");
    Rng rng(77);
    int ones = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        FactoredState s = sample_successor(p, p.initial_state(), 0, rng);
        ASSERT_EQ(s[0], 2);
        ones += s[1] == 1;
    }
    EXPECT_NEAR(ones / double(n), 0.25, 4 * std::sqrt(0.25 * 0.75 / n));
    EXPECT_EQ(pass_turn(p, std::vector<FeatureValue>{3, 2}), FactoredState(std::vector<FeatureValue>{1, 2}));
    EXPECT_EQ(agent_count(p), 3u);
    EXPECT_EQ(agent_of(p, std::vector<FeatureValue>{2, 0}), 1u);
    EXPECT_FALSE(is_terminal(p, p.initial_state()));
}

TEST(Dqn, SeededTrainingIsDeterministic) {
    GuardedProgram p = instantiate("mabp", {{"n_agents", 2}});
    DqnConfig c;
    c.episodes = 60;
    c.hidden = {8};
    c.batch_size = 8;
    c.replay_capacity = 64;
    c.target_sync_interval = 10;
    c.seed = 7;
    TrainingResult a = train_tmarl(p, c), b = train_tmarl(p, c);
    ASSERT_EQ(a.policies.size(), 2u);
    EXPECT_EQ(a.steps, b.steps);
    for (std::size_t i = 0; i < 2; ++i) EXPECT_EQ(policy_to_json(a.policies[i]), policy_to_json(b.policies[i]));
    ASSERT_EQ(a.log.size(), 120u);
    for (std::size_t i = 0; i < a.log.size(); ++i) {
        EXPECT_EQ(a.log[i].reward, b.log[i].reward);
        EXPECT_EQ(a.log[i].agent, i % 2 + 1);
    }
    c.seed = 8;
    TrainingResult other = train_tmarl(p, c);
    EXPECT_NE(policy_to_json(a.policies[0]), policy_to_json(other.policies[0]));
}

TEST(Dqn, LearnsForcedBestAction) {
    // One agent, one decision: action "good" pays 1, "bad" pays 0.
    GuardedProgram p = parse_program(
        "turn : [1..1] init 1;\ndone : [0..1] init 0;\n"
        "[good] done=0 -> (done'=1);\n[bad] done=0 -> (done'=1);\n"
        "rewards \"agent_1\"\n  [good] true : 1;\nendrewards\n");
    DqnConfig c;
    c.episodes = 400;
    c.hidden = {8};
    c.batch_size = 8;
    c.learning_rate = 1e-2;
    c.epsilon = 1.0;
    c.epsilon_min = 1.0;
    TrainingResult r = train_tmarl(p, c);
    EXPECT_EQ(r.policies[0].greedy_action(p.initial_state()), *p.action_id("good"));
    EXPECT_EQ(r.steps, 400u);
}
