#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "tmc/model.hpp"
#include "tmc/rng.hpp"

namespace tmc {

/// Fully connected network: ReLU hidden layers, linear output. Layer l maps
/// sizes[l] inputs to sizes[l+1] outputs with weights(l) of shape
/// sizes[l+1] x sizes[l]. Batches are column-major (one sample per column).
class Mlp {
   public:
    Mlp() = default;
    explicit Mlp(std::vector<std::size_t> sizes);

    // Weights and biases ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
    void init_uniform(Rng& rng);

    const std::vector<std::size_t>& sizes() const noexcept { return sizes_; }
    std::size_t layers() const noexcept { return weights_.size(); }
    std::size_t inputs() const { return sizes_.front(); }
    std::size_t outputs() const { return sizes_.back(); }
    std::size_t parameter_count() const;

    Eigen::MatrixXd& weights(std::size_t l) { return weights_[l]; }
    const Eigen::MatrixXd& weights(std::size_t l) const { return weights_[l]; }
    Eigen::VectorXd& biases(std::size_t l) { return biases_[l]; }
    const Eigen::VectorXd& biases(std::size_t l) const { return biases_[l]; }

    Eigen::VectorXd forward(const Eigen::VectorXd& x) const;

    // Pre-activations and activations kept for backprop.
    struct Tape {
        std::vector<Eigen::MatrixXd> activations;  // [0] is the input batch
        std::vector<Eigen::MatrixXd> pre;
    };
    Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& x, Tape* tape = nullptr) const;

    struct Gradients {
        std::vector<Eigen::MatrixXd> weights;
        std::vector<Eigen::VectorXd> biases;
    };
    // Gradients of sum(d_out .* output) w.r.t. every parameter.
    Gradients backward(const Tape& tape, const Eigen::MatrixXd& d_out) const;

    bool all_finite() const;

   private:
    std::vector<std::size_t> sizes_;
    std::vector<Eigen::MatrixXd> weights_;
    std::vector<Eigen::VectorXd> biases_;
};

// Features scaled to [0,1] by their declared bounds (0 when lo == hi).
Eigen::VectorXd normalize(const FeatureSchema& schema, StateView s);

/// mean((Q(x_j)[a_j] - y_j)^2) over the batch; fills `grad` when non-null.
double td_loss(const Mlp& net, const Eigen::MatrixXd& x, const std::vector<ActionId>& actions,
               const Eigen::VectorXd& targets, Mlp::Gradients* grad);

class Adam {
   public:
    Adam(const Mlp& net, double learning_rate, double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8);
    void step(Mlp& net, const Mlp::Gradients& grad);

   private:
    double lr_, b1_, b2_, eps_;
    std::uint64_t t_ = 0;
    Mlp::Gradients m_, v_;
};

}  // namespace tmc
