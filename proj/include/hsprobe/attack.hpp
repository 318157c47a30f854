#pragma once

#include <string>

#include "hsprobe/network.hpp"
#include "hsprobe/observation.hpp"

namespace hsprobe {

enum class NormOrder { l2, linf };
enum class AttackMethod { fgm, cw };

std::string to_string(NormOrder p);
std::string to_string(AttackMethod m);
NormOrder norm_from_string(const std::string& s);
AttackMethod attack_method_from_string(const std::string& s);

/// Policy-dependent perturbation inside the eps-ball D_{eps,p}(s), measured
/// on [0,1]-scaled pixels.
struct AttackSpec {
    AttackMethod method = AttackMethod::fgm;
    NormOrder norm = NormOrder::l2;
    double epsilon = 0.05;
    // Penalty-method settings (cw only).
    std::size_t iterations = 200;
    double step_size = 0.01;
    double penalty_init = 1.0;
    double penalty_max = 1e4;
    std::size_t binary_steps = 8;
    /// Margin the greedy action must lose by before the penalty switches off.
    double confidence = 1e-6;

    void validate() const;
    friend bool operator==(const AttackSpec&, const AttackSpec&) = default;
};

struct AttackResult {
    Observation adversarial;
    /// ||adversarial - s||_p on the [0,1] scale.
    double distance = 0.0;
    /// Greedy action differs from the clean one.
    bool success = false;
    std::size_t clean_action = 0;
    std::size_t adversarial_action = 0;
};

double perturbation_norm(const Tensor& a, const Tensor& b, NormOrder p);

/// eps * g / ||g||_2 for l2, eps * sign(g) for linf; zero when g is zero.
Tensor fgm_perturbation(const Tensor& grad, NormOrder p, double eps);

/// Input gradient of J = -log softmax(Q(x))[a*] with a* the greedy action at x.
Tensor fgm_cost_gradient(const ParamSet& net, const Tensor& x);

Observation fgm(const ParamSet& net, const Observation& s, const AttackSpec& spec);
AttackResult fgm_attack(const ParamSet& net, const Observation& s, const AttackSpec& spec);

/// Minimizes ||s_hat - s||_p + c * max(0, margin(s_hat)) by projected
/// gradient steps, binary-searching c, and keeps the closest point whose
/// greedy action differs from the clean one. Failure returns s unchanged.
AttackResult cw_minimal(const ParamSet& net, const Observation& s, const AttackSpec& spec);

AttackResult run_attack(const ParamSet& net, const Observation& s, const AttackSpec& spec);

}  // namespace hsprobe
