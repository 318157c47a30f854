#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "hsprobe/network.hpp"

namespace hsprobe {

enum class UpdateRule { sgd, adam };

std::string to_string(UpdateRule rule);
UpdateRule update_rule_from_string(const std::string& s);

struct OptimizerConfig {
    UpdateRule rule = UpdateRule::adam;
    double learning_rate = 1e-3;
    // Adaptive-moment defaults.
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

class NonFiniteError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Gradient-descent updates. sgd: theta -= lr * g. adam: bias-corrected
/// first/second moment estimates.
class Optimizer {
public:
    explicit Optimizer(OptimizerConfig config = {});

    /// Throws NonFiniteError (leaving params untouched) on NaN/Inf gradients.
    void step(ParamSet& params, const ParamGrads& grads);

    const OptimizerConfig& config() const noexcept { return config_; }
    long steps_taken() const noexcept { return t_; }

private:
    OptimizerConfig config_;
    long t_ = 0;
    ParamGrads m_;
    ParamGrads v_;
};

}  // namespace hsprobe
