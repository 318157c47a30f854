#include "hsprobe/optimizer.hpp"

#include <cmath>

namespace hsprobe {

std::string to_string(UpdateRule rule)
{
    return rule == UpdateRule::sgd ? "sgd" : "adam";
}

UpdateRule update_rule_from_string(const std::string& s)
{
    if (s == "sgd") return UpdateRule::sgd;
    if (s == "adam") return UpdateRule::adam;
    throw std::invalid_argument("unknown update rule '" + s + "'");
}

Optimizer::Optimizer(OptimizerConfig config) : config_(config)
{
    if (!(config_.learning_rate > 0.0) || !std::isfinite(config_.learning_rate))
        throw std::invalid_argument("learning rate must be positive and finite");
}

void Optimizer::step(ParamSet& params, const ParamGrads& grads)
{
    if (grads.weights.size() != params.size() || grads.biases.size() != params.size())
        throw ShapeError("gradient buffers do not match parameter layers");
    for (std::size_t l = 0; l < params.size(); ++l)
        if (grads.weights[l].shape() != params.layers()[l].weights.shape() ||
            grads.biases[l].shape() != params.layers()[l].bias.shape())
            throw ShapeError("gradient shape mismatch at layer " + std::to_string(l));
    if (!grads.all_finite()) throw NonFiniteError("non-finite gradient; aborting update");

    const double lr = config_.learning_rate;
    if (config_.rule == UpdateRule::sgd) {
        for (std::size_t l = 0; l < params.size(); ++l) {
            auto& layer = params.layers()[l];
            for (std::size_t i = 0; i < layer.weights.size(); ++i) layer.weights[i] -= lr * grads.weights[l][i];
            for (std::size_t i = 0; i < layer.bias.size(); ++i) layer.bias[i] -= lr * grads.biases[l][i];
        }
        ++t_;
        return;
    }

    if (t_ == 0) {
        m_ = ParamGrads::zeros_like(params);
        v_ = ParamGrads::zeros_like(params);
    }
    ++t_;
    const double b1 = config_.beta1, b2 = config_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    auto update = [&](Tensor& theta, const Tensor& g, Tensor& m, Tensor& v) {
        for (std::size_t i = 0; i < theta.size(); ++i) {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            const double mhat = m[i] / c1, vhat = v[i] / c2;
            theta[i] -= lr * mhat / (std::sqrt(vhat) + config_.epsilon);
        }
    };
    for (std::size_t l = 0; l < params.size(); ++l) {
        auto& layer = params.layers()[l];
        update(layer.weights, grads.weights[l], m_.weights[l], v_.weights[l]);
        update(layer.bias, grads.biases[l], m_.biases[l], v_.biases[l]);
    }
}

}  // namespace hsprobe
