#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "tmc/gcl.hpp"
#include "tmc/policy.hpp"
#include "tmc/rng.hpp"

namespace tmc {

struct DqnConfig {
    std::uint64_t seed = 128;
    double epsilon = 0.5;
    double epsilon_min = 0.1;
    double epsilon_decay = 0.9999;  // per environment step
    double gamma = 0.99;
    double learning_rate = 1e-4;
    std::size_t batch_size = 32;
    std::size_t replay_capacity = 300'000;
    std::uint64_t target_sync_interval = 304;  // environment steps
    std::uint64_t episodes = 10'000;
    std::uint64_t max_episode_steps = 1'000;
    std::vector<std::size_t> hidden{256, 256};

    // Throws ConfigError.
    void validate() const;
    // max(epsilon_min, epsilon * epsilon_decay^steps)
    double epsilon_after(std::uint64_t steps) const;
};

struct Transition {
    std::vector<FeatureValue> state;
    ActionId action;
    double reward;
    std::vector<FeatureValue> next;
    bool terminal;
};

class ReplayBuffer {
   public:
    explicit ReplayBuffer(std::size_t capacity);

    void push(Transition t);
    std::size_t size() const noexcept { return items_.size(); }
    std::size_t capacity() const noexcept { return capacity_; }
    // `n` distinct indices, uniformly; requires n <= size().
    std::vector<std::size_t> sample_indices(std::size_t n, Rng& rng) const;
    const Transition& operator[](std::size_t i) const { return items_[i]; }

   private:
    std::size_t capacity_;
    std::size_t next_ = 0;
    std::vector<Transition> items_;
};

/// One gradient step on the TD loss: y = r + gamma * max_a' target(s', a'),
/// y = r on terminal transitions. Returns the loss before the step and
/// throws NonFiniteLoss if it (or any updated weight) is not finite.
double train_step(Mlp& net, const Mlp& target, Adam& optimizer, const FeatureSchema& schema,
                  const std::vector<const Transition*>& batch, double gamma);

struct TrainingLogRow {
    std::uint64_t episode;
    std::size_t agent;  // 1-based
    double reward;
    double epsilon;
};

struct TrainingResult {
    std::vector<AgentPolicy> policies;  // agent i controls turn value lo + i
    std::vector<TrainingLogRow> log;
    std::uint64_t steps = 0;
};

/// Independent DQN learners, one per turn value. Agent i is rewarded by the
/// reward structure named `agent_<i+1>`. Its transitions span from one of its
/// decisions to its next decision (or the end of the episode).
TrainingResult train_tmarl(const GuardedProgram& program, const DqnConfig& config,
                           const std::function<void(const TrainingLogRow&)>& on_episode = {});

}  // namespace tmc
