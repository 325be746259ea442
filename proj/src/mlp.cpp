#include "tmc/mlp.hpp"

#include <cmath>

#include "tmc/errors.hpp"

namespace tmc {

Mlp::Mlp(std::vector<std::size_t> sizes) : sizes_(std::move(sizes)) {
    if (sizes_.size() < 2) throw ConfigError("a network needs an input and an output layer");
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
        weights_.push_back(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(sizes_[l + 1]),
                                                 static_cast<Eigen::Index>(sizes_[l])));
        biases_.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sizes_[l + 1])));
    }
}

void Mlp::init_uniform(Rng& rng) {
    for (std::size_t l = 0; l < layers(); ++l) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(sizes_[l]));
        // Column-major fill order keeps the stream layout fixed.
        for (Eigen::Index j = 0; j < weights_[l].cols(); ++j) {
            for (Eigen::Index i = 0; i < weights_[l].rows(); ++i) weights_[l](i, j) = rng.uniform(-bound, bound);
        }
        for (Eigen::Index i = 0; i < biases_[l].size(); ++i) biases_[l](i) = rng.uniform(-bound, bound);
    }
}

std::size_t Mlp::parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < layers(); ++l) n += static_cast<std::size_t>(weights_[l].size() + biases_[l].size());
    return n;
}

Eigen::VectorXd Mlp::forward(const Eigen::VectorXd& x) const {
    Eigen::VectorXd a = x;
    for (std::size_t l = 0; l < layers(); ++l) {
        Eigen::VectorXd z = weights_[l] * a + biases_[l];
        a = l + 1 < layers() ? Eigen::VectorXd(z.cwiseMax(0.0)) : z;
    }
    return a;
}

Eigen::MatrixXd Mlp::forward_batch(const Eigen::MatrixXd& x, Tape* tape) const {
    Eigen::MatrixXd a = x;
    if (tape) {
        tape->activations.assign(1, x);
        tape->pre.clear();
    }
    for (std::size_t l = 0; l < layers(); ++l) {
        Eigen::MatrixXd z = weights_[l] * a;
        z.colwise() += biases_[l];
        a = l + 1 < layers() ? Eigen::MatrixXd(z.cwiseMax(0.0)) : z;
        if (tape) {
            tape->pre.push_back(std::move(z));
            tape->activations.push_back(a);
        }
    }
    return a;
}

Mlp::Gradients Mlp::backward(const Tape& tape, const Eigen::MatrixXd& d_out) const {
    Gradients g;
    g.weights.resize(layers());
    g.biases.resize(layers());
    Eigen::MatrixXd delta = d_out;
    for (std::size_t l = layers(); l-- > 0;) {
        if (l + 1 < layers()) delta = delta.cwiseProduct((tape.pre[l].array() > 0.0).cast<double>().matrix());
        g.weights[l] = delta * tape.activations[l].transpose();
        g.biases[l] = delta.rowwise().sum();
        if (l > 0) delta = weights_[l].transpose() * delta;
    }
    return g;
}

bool Mlp::all_finite() const {
    for (std::size_t l = 0; l < layers(); ++l) {
        if (!weights_[l].allFinite() || !biases_[l].allFinite()) return false;
    }
    return true;
}

Eigen::VectorXd normalize(const FeatureSchema& schema, StateView s) {
    Eigen::VectorXd x(static_cast<Eigen::Index>(s.size()));
    for (std::size_t i = 0; i < s.size(); ++i) {
        const FeatureBound& b = schema.bound(i);
        x(static_cast<Eigen::Index>(i)) =
            b.hi == b.lo ? 0.0 : static_cast<double>(s[i] - b.lo) / static_cast<double>(b.hi - b.lo);
    }
    return x;
}

double td_loss(const Mlp& net, const Eigen::MatrixXd& x, const std::vector<ActionId>& actions,
               const Eigen::VectorXd& targets, Mlp::Gradients* grad) {
    Mlp::Tape tape;
    Eigen::MatrixXd q = net.forward_batch(x, grad ? &tape : nullptr);
    const Eigen::Index batch = x.cols();
    Eigen::MatrixXd d_out = Eigen::MatrixXd::Zero(q.rows(), batch);
    double loss = 0.0;
    for (Eigen::Index j = 0; j < batch; ++j) {
        double err = q(actions[static_cast<std::size_t>(j)], j) - targets(j);
        loss += err * err;
        d_out(actions[static_cast<std::size_t>(j)], j) = 2.0 * err / static_cast<double>(batch);
    }
    loss /= static_cast<double>(batch);
    if (grad) *grad = net.backward(tape, d_out);
    return loss;
}

Adam::Adam(const Mlp& net, double learning_rate, double beta1, double beta2, double epsilon)
    : lr_(learning_rate), b1_(beta1), b2_(beta2), eps_(epsilon) {
    for (std::size_t l = 0; l < net.layers(); ++l) {
        m_.weights.push_back(Eigen::MatrixXd::Zero(net.weights(l).rows(), net.weights(l).cols()));
        m_.biases.push_back(Eigen::VectorXd::Zero(net.biases(l).size()));
    }
    v_ = m_;
}

void Adam::step(Mlp& net, const Mlp::Gradients& grad) {
    ++t_;
    const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
    auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
        m = b1_ * m + (1.0 - b1_) * g;
        v = b2_ * v + (1.0 - b2_) * g.cwiseProduct(g);
        param.array() -= lr_ * (m.array() / c1) / ((v.array() / c2).sqrt() + eps_);
    };
    for (std::size_t l = 0; l < net.layers(); ++l) {
        update(net.weights(l), m_.weights[l], v_.weights[l], grad.weights[l]);
        update(net.biases(l), m_.biases[l], v_.biases[l], grad.biases[l]);
    }
}

}  // namespace tmc
