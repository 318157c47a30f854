#include "hsprobe/attack.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

#include "hsprobe/qlearning.hpp"

namespace hsprobe {

std::string to_string(NormOrder p)
{
    return p == NormOrder::l2 ? "l2" : "linf";
}

std::string to_string(AttackMethod m)
{
    return m == AttackMethod::fgm ? "fgm" : "cw";
}

NormOrder norm_from_string(const std::string& s)
{
    if (s == "l2" || s == "2") return NormOrder::l2;
    if (s == "linf" || s == "inf") return NormOrder::linf;
    throw std::invalid_argument("unknown norm '" + s + "' (expected l2 or linf)");
}

AttackMethod attack_method_from_string(const std::string& s)
{
    if (s == "fgm") return AttackMethod::fgm;
    if (s == "cw") return AttackMethod::cw;
    throw std::invalid_argument("unknown attack method '" + s + "'");
}

void AttackSpec::validate() const
{
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw std::invalid_argument("attack epsilon must be finite and >= 0");
    if (iterations < 1) throw std::invalid_argument("attack iterations must be >= 1");
    if (!(step_size > 0.0)) throw std::invalid_argument("attack step size must be > 0");
    if (!(penalty_init > 0.0) || !(penalty_max >= penalty_init))
        throw std::invalid_argument("attack penalty range must satisfy 0 < init <= max");
    if (!(confidence >= 0.0)) throw std::invalid_argument("attack confidence must be >= 0");
}

double perturbation_norm(const Tensor& a, const Tensor& b, NormOrder p)
{
    if (a.shape() != b.shape()) throw ShapeError("perturbation_norm: shapes differ");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = std::fabs(a[i] - b[i]);
        acc = p == NormOrder::l2 ? acc + d * d : std::max(acc, d);
    }
    return p == NormOrder::l2 ? std::sqrt(acc) : acc;
}

Tensor fgm_perturbation(const Tensor& grad, NormOrder p, double eps)
{
    Tensor out(grad.shape());
    if (p == NormOrder::linf) {
        for (std::size_t i = 0; i < grad.size(); ++i)
            out[i] = grad[i] > 0.0 ? eps : (grad[i] < 0.0 ? -eps : 0.0);
        return out;
    }
    double sq = 0.0;
    for (double g : grad.storage()) sq += g * g;
    if (sq == 0.0) return out;
    const double norm = std::sqrt(sq);
    for (std::size_t i = 0; i < grad.size(); ++i) out[i] = eps * grad[i] / norm;
    return out;
}

Tensor fgm_cost_gradient(const ParamSet& net, const Tensor& x)
{
    const Activations acts = forward(net, x);
    const Tensor& q = acts.back();
    const std::size_t best = greedy_action(q);
    double peak = q[best];
    double z = 0.0;
    for (double v : q.storage()) z += std::exp(v - peak);
    Tensor g(q.shape());
    for (std::size_t k = 0; k < q.size(); ++k) g[k] = std::exp(q[k] - peak) / z - (k == best ? 1.0 : 0.0);
    ParamGrads scratch = ParamGrads::zeros_like(net);
    return backprop_into(net, acts, g, scratch);
}

namespace {

Tensor clip_unit(Tensor x)
{
    for (auto& v : x.storage()) v = std::clamp(v, 0.0, 1.0);
    return x;
}

}  // namespace

AttackResult fgm_attack(const ParamSet& net, const Observation& s, const AttackSpec& spec)
{
    spec.validate();
    const Tensor x = to_network_input(s);
    AttackResult r;
    r.clean_action = greedy_action(forward_output(net, x));
    const Tensor step = fgm_perturbation(fgm_cost_gradient(net, x), spec.norm, spec.epsilon);
    Tensor adv = x;
    for (std::size_t i = 0; i < adv.size(); ++i) adv[i] += step[i];
    adv = clip_unit(std::move(adv));
    r.adversarial = from_network_input(adv);
    const Tensor rescaled = to_network_input(r.adversarial);
    r.adversarial_action = greedy_action(forward_output(net, rescaled));
    r.distance = perturbation_norm(rescaled, x, spec.norm);
    r.success = r.adversarial_action != r.clean_action;
    return r;
}

Observation fgm(const ParamSet& net, const Observation& s, const AttackSpec& spec)
{
    return fgm_attack(net, s, spec).adversarial;
}

namespace {

struct Candidate {
    Tensor x;
    double distance;
};

// Closest flipping point on the segment from x0 to a flipping point x1.
Candidate refine_along_ray(const ParamSet& net, const Tensor& x0, const Tensor& x1, std::size_t clean, NormOrder p)
{
    auto point = [&](double t) {
        Tensor x = x0;
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = x0[i] + t * (x1[i] - x0[i]);
        return x;
    };
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 40; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (greedy_action(forward_output(net, point(mid))) != clean) hi = mid;
        else lo = mid;
    }
    Tensor best = point(hi);
    if (greedy_action(forward_output(net, best)) == clean) best = x1;
    const double d = perturbation_norm(best, x0, p);
    return {std::move(best), d};
}

void project(Tensor& delta, const Tensor& x0, NormOrder p, double eps)
{
    if (p == NormOrder::l2) {
        double sq = 0.0;
        for (double v : delta.storage()) sq += v * v;
        const double n = std::sqrt(sq);
        if (n > eps) {
            const double f = eps / n;
            for (auto& v : delta.storage()) v *= f;
        }
    } else {
        for (auto& v : delta.storage()) v = std::clamp(v, -eps, eps);
    }
    for (std::size_t i = 0; i < delta.size(); ++i) delta[i] = std::clamp(x0[i] + delta[i], 0.0, 1.0) - x0[i];
}

}  // namespace

AttackResult cw_minimal(const ParamSet& net, const Observation& s, const AttackSpec& spec)
{
    spec.validate();
    const Tensor x0 = to_network_input(s);
    const std::size_t clean = greedy_action(forward_output(net, x0));
    const std::size_t n_actions = net.output_shape().at(0);
    std::optional<Candidate> best;

    auto consider = [&](const Tensor& x) {
        if (greedy_action(forward_output(net, x)) == clean) return false;
        Candidate c = refine_along_ray(net, x0, x, clean, spec.norm);
        if (c.distance <= spec.epsilon + 1e-12 && (!best || c.distance < best->distance)) best = std::move(c);
        return true;
    };

    if (spec.epsilon > 0.0 && n_actions > 1) {
        // Warm start from the one-step gradient direction.
        const Tensor step = fgm_perturbation(fgm_cost_gradient(net, x0), spec.norm, spec.epsilon);
        Tensor warm = x0;
        for (std::size_t i = 0; i < warm.size(); ++i) warm[i] += step[i];
        consider(clip_unit(std::move(warm)));

        double c = spec.penalty_init, lo = 0.0, hi = std::numeric_limits<double>::infinity();
        const double b1 = 0.9, b2 = 0.999, adam_eps = 1e-12;
        for (std::size_t round = 0; round < spec.binary_steps; ++round) {
            Tensor delta(x0.shape()), m(x0.shape()), v(x0.shape());
            bool flipped = false;
            for (std::size_t it = 0; it < spec.iterations; ++it) {
                Tensor x = x0;
                for (std::size_t i = 0; i < x.size(); ++i) x[i] += delta[i];
                const Activations acts = forward(net, x);
                const Tensor& q = acts.back();
                if (greedy_action(q) != clean) flipped = consider(x) || flipped;

                std::size_t rival = clean == 0 ? 1 : 0;
                for (std::size_t a = 0; a < q.size(); ++a)
                    if (a != clean && q[a] > q[rival]) rival = a;
                const double margin = q[clean] - q[rival] + spec.confidence;

                Tensor grad(x0.shape());
                if (spec.norm == NormOrder::l2) {
                    double sq = 0.0;
                    for (double d : delta.storage()) sq += d * d;
                    if (sq > 0.0) {
                        const double n = std::sqrt(sq);
                        for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = delta[i] / n;
                    }
                } else {
                    std::size_t k = 0;
                    for (std::size_t i = 1; i < delta.size(); ++i)
                        if (std::fabs(delta[i]) > std::fabs(delta[k])) k = i;
                    if (delta[k] != 0.0) grad[k] = delta[k] > 0.0 ? 1.0 : -1.0;
                }
                if (margin > 0.0) {
                    Tensor gq(q.shape());
                    gq[clean] = c;
                    gq[rival] = -c;
                    ParamGrads scratch = ParamGrads::zeros_like(net);
                    const Tensor gx = backprop_into(net, acts, gq, scratch);
                    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += gx[i];
                }
                const double t = static_cast<double>(it + 1);
                const double c1 = 1.0 - std::pow(b1, t), c2 = 1.0 - std::pow(b2, t);
                for (std::size_t i = 0; i < delta.size(); ++i) {
                    m[i] = b1 * m[i] + (1.0 - b1) * grad[i];
                    v[i] = b2 * v[i] + (1.0 - b2) * grad[i] * grad[i];
                    delta[i] -= spec.step_size * (m[i] / c1) / (std::sqrt(v[i] / c2) + adam_eps);
                }
                project(delta, x0, spec.norm, spec.epsilon);
            }
            Tensor x = x0;
            for (std::size_t i = 0; i < x.size(); ++i) x[i] += delta[i];
            flipped = consider(x) || flipped;

            if (flipped) {
                hi = std::min(hi, c);
                c = 0.5 * (lo + hi);
            } else {
                lo = std::max(lo, c);
                c = std::isinf(hi) ? std::min(c * 10.0, spec.penalty_max) : 0.5 * (lo + hi);
            }
        }
    }

    AttackResult r;
    r.clean_action = clean;
    if (!best) {
        r.adversarial = s;
        r.adversarial_action = clean;
        return r;
    }
    r.adversarial = from_network_input(best->x);
    // Report against the observation actually returned.
    const Tensor returned = to_network_input(r.adversarial);
    r.adversarial_action = greedy_action(forward_output(net, returned));
    r.success = r.adversarial_action != clean;
    r.distance = perturbation_norm(returned, x0, spec.norm);
    if (!r.success) {
        r.adversarial = s;
        r.adversarial_action = clean;
        r.distance = 0.0;
    }
    return r;
}

AttackResult run_attack(const ParamSet& net, const Observation& s, const AttackSpec& spec)
{
    return spec.method == AttackMethod::fgm ? fgm_attack(net, s, spec) : cw_minimal(net, s, spec);
}

}  // namespace hsprobe
