#include "tmc/dqn.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "tmc/environment.hpp"
#include "tmc/errors.hpp"

namespace tmc {

void DqnConfig::validate() const {
    if (!(epsilon_min >= 0.0 && epsilon_min <= epsilon && epsilon <= 1.0)) {
        throw ConfigError("need 0 <= epsilon_min <= epsilon <= 1");
    }
    if (!(epsilon_decay > 0.0 && epsilon_decay <= 1.0)) throw ConfigError("epsilon_decay must be in (0, 1]");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("gamma must be in (0, 1]");
    if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
    if (batch_size == 0) throw ConfigError("batch size must be positive");
    if (replay_capacity < batch_size) throw ConfigError("replay capacity must be at least the batch size");
    if (target_sync_interval == 0) throw ConfigError("target sync interval must be positive");
    if (episodes == 0) throw ConfigError("episodes must be at least 1");
    if (max_episode_steps == 0) throw ConfigError("max episode steps must be at least 1");
}

double DqnConfig::epsilon_after(std::uint64_t steps) const {
    return std::max(epsilon_min, epsilon * std::pow(epsilon_decay, static_cast<double>(steps)));
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw ConfigError("replay capacity must be positive");
}

void ReplayBuffer::push(Transition t) {
    if (items_.size() < capacity_) {
        items_.push_back(std::move(t));
    } else {
        items_[next_] = std::move(t);
    }
    next_ = (next_ + 1) % capacity_;
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t n, Rng& rng) const {
    std::vector<std::size_t> out;
    out.reserve(n);
    if (n * 4 >= items_.size()) {
        // Partial Fisher-Yates over all indices.
        std::vector<std::size_t> all(items_.size());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t j = i + rng.below(all.size() - i);
            std::swap(all[i], all[j]);
            out.push_back(all[i]);
        }
        return out;
    }
    while (out.size() < n) {
        std::size_t k = rng.below(items_.size());
        if (std::find(out.begin(), out.end(), k) == out.end()) out.push_back(k);
    }
    return out;
}

double train_step(Mlp& net, const Mlp& target, Adam& optimizer, const FeatureSchema& schema,
                  const std::vector<const Transition*>& batch, double gamma) {
    const Eigen::Index b = static_cast<Eigen::Index>(batch.size());
    const Eigen::Index width = static_cast<Eigen::Index>(schema.size());
    Eigen::MatrixXd x(width, b), next(width, b);
    std::vector<ActionId> actions(batch.size());
    for (Eigen::Index j = 0; j < b; ++j) {
        const Transition& t = *batch[static_cast<std::size_t>(j)];
        x.col(j) = normalize(schema, t.state);
        next.col(j) = normalize(schema, t.next);
        actions[static_cast<std::size_t>(j)] = t.action;
    }
    Eigen::MatrixXd q_next = target.forward_batch(next);
    Eigen::VectorXd y(b);
    for (Eigen::Index j = 0; j < b; ++j) {
        const Transition& t = *batch[static_cast<std::size_t>(j)];
        y(j) = t.terminal ? t.reward : t.reward + gamma * q_next.col(j).maxCoeff();
    }
    Mlp::Gradients grad;
    double loss = td_loss(net, x, actions, y, &grad);
    if (!std::isfinite(loss)) throw NonFiniteLoss(fmt::format("training loss became {}", loss));
    optimizer.step(net, grad);
    if (!net.all_finite()) throw NonFiniteLoss(fmt::format("non-finite weights after a step with loss {}", loss));
    return loss;
}

namespace {

struct Pending {
    std::vector<FeatureValue> state;
    ActionId action;
    double reward;
};

}  // namespace

TrainingResult train_tmarl(const GuardedProgram& program, const DqnConfig& config,
                           const std::function<void(const TrainingLogRow&)>& on_episode) {
    config.validate();
    const std::size_t n_agents = agent_count(program);
    const FeatureSchema& schema = program.schema();
    const auto& actions = program.actions();
    const std::size_t n_actions = actions.size();

    Rng init_rng = Rng::stream(config.seed, 0);
    Rng act_rng = Rng::stream(config.seed, 1);
    Rng env_rng = Rng::stream(config.seed, 2);
    Rng replay_rng = Rng::stream(config.seed, 3);

    std::vector<Mlp> nets, targets;
    std::vector<Adam> optimizers;
    std::vector<ReplayBuffer> buffers;
    std::vector<std::optional<std::size_t>> reward_of(n_agents);
    for (std::size_t i = 0; i < n_agents; ++i) {
        std::vector<std::size_t> sizes{schema.size()};
        sizes.insert(sizes.end(), config.hidden.begin(), config.hidden.end());
        sizes.push_back(n_actions);
        Mlp net(sizes);
        net.init_uniform(init_rng);
        targets.push_back(net);
        optimizers.emplace_back(net, config.learning_rate);
        nets.push_back(std::move(net));
        buffers.emplace_back(config.replay_capacity);
        reward_of[i] = agent_reward_index(program, i);
        if (!reward_of[i]) spdlog::warn("no reward structure agent_{}; agent {} is trained on zero reward", i + 1, i + 1);
    }

    TrainingResult result;
    std::uint64_t step = 0;
    std::vector<const Transition*> batch(config.batch_size);

    for (std::uint64_t episode = 1; episode <= config.episodes; ++episode) {
        FactoredState s = program.initial_state();
        std::vector<std::optional<Pending>> pending(n_agents);
        std::vector<double> episode_reward(n_agents, 0.0);
        bool terminal = is_terminal(program, s);
        for (std::uint64_t t = 0; t < config.max_episode_steps && !terminal; ++t) {
            const std::size_t agent = agent_of(program, s);
            if (pending[agent]) {
                buffers[agent].push({std::move(pending[agent]->state), pending[agent]->action, pending[agent]->reward,
                                     s.values, false});
                pending[agent].reset();
            }

            const double eps = config.epsilon_after(step);
            ActionId a;
            if (act_rng.uniform() < eps) {
                a = static_cast<ActionId>(act_rng.below(n_actions));
            } else {
                a = argmax(nets[agent].forward(normalize(schema, s)));
            }

            FactoredState next;
            double r = 0.0;
            if (program.is_enabled(s, a)) {
                next = sample_successor(program, s, a, env_rng);
                if (reward_of[agent]) r = program.reward(*reward_of[agent], s, a, next);
            } else {
                next = pass_turn(program, s);
            }
            pending[agent] = Pending{s.values, a, r};
            episode_reward[agent] += r;
            ++step;

            if (buffers[agent].size() >= config.batch_size) {
                auto idx = buffers[agent].sample_indices(config.batch_size, replay_rng);
                for (std::size_t k = 0; k < idx.size(); ++k) batch[k] = &buffers[agent][idx[k]];
                train_step(nets[agent], targets[agent], optimizers[agent], schema, batch, config.gamma);
            }
            if (step % config.target_sync_interval == 0) targets = nets;

            s = std::move(next);
            terminal = is_terminal(program, s);
        }
        for (std::size_t i = 0; i < n_agents; ++i) {
            if (pending[i]) buffers[i].push({std::move(pending[i]->state), pending[i]->action, pending[i]->reward,
                                             s.values, terminal});
        }
        for (std::size_t i = 0; i < n_agents; ++i) {
            TrainingLogRow row{episode, i + 1, episode_reward[i], config.epsilon_after(step)};
            if (on_episode) on_episode(row);
            result.log.push_back(row);
        }
    }

    for (std::size_t i = 0; i < n_agents; ++i) {
        result.policies.emplace_back(schema, actions, NeuralPolicy{std::move(nets[i])});
    }
    result.steps = step;
    return result;
}

}  // namespace tmc
