#pragma once

// Shared fixtures for the unit and acceptance tests.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "hsprobe/network.hpp"
#include "hsprobe/observation.hpp"
#include "hsprobe/rng.hpp"

namespace hsprobe::testing {

inline Observation noise_image(std::size_t h, std::size_t w, std::size_t c, std::uint64_t seed, double lo = 0.0,
                               double hi = 255.0)
{
    Observation o(h, w, c);
    Rng rng(seed);
    for (auto& p : o.pixels) p = rng.uniform(lo, hi);
    return o;
}

/// Integer-valued noise, like an env rendering.
inline Observation integer_image(std::size_t h, std::size_t w, std::size_t c, std::uint64_t seed)
{
    Observation o(h, w, c);
    Rng rng(seed);
    for (auto& p : o.pixels) p = static_cast<double>(rng.index(256));
    return o;
}

inline Tensor random_tensor(const Shape& shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0)
{
    Tensor t(shape);
    Rng rng(seed);
    for (auto& v : t.storage()) v = rng.uniform(lo, hi);
    return t;
}

/// conv(3x3, stride 1, pad 1, relu) -> conv(3x3, stride 2, relu) -> dense(relu) -> dense.
inline ParamSet small_conv_net(const Shape& input, std::size_t actions, std::uint64_t seed)
{
    std::vector<Layer> layers;
    layers.push_back(make_conv2d("c1", input, 3, 3, 1, 1, Activation::relu));
    layers.push_back(make_conv2d("c2", layers.back().output_shape, 4, 3, 2, 0, Activation::relu));
    layers.push_back(make_dense("d1", layers.back().output_shape, 8, Activation::relu));
    layers.push_back(make_dense("q", layers.back().output_shape, actions, Activation::identity));
    ParamSet net(std::move(layers));
    net.initialize(seed);
    // Nonzero biases so relu kinks are not all at the origin.
    Rng rng(derive_seed(seed, 99));
    for (auto& l : net.layers())
        for (auto& b : l.bias.storage()) b = rng.uniform(-0.1, 0.1);
    return net;
}

inline ParamSet small_dense_net(const Shape& input, std::size_t hidden, std::size_t outputs, std::uint64_t seed)
{
    std::vector<Layer> layers;
    layers.push_back(make_dense("d1", input, hidden, Activation::relu));
    layers.push_back(make_dense("d2", Shape{hidden}, outputs, Activation::identity));
    ParamSet net(std::move(layers));
    net.initialize(seed);
    Rng rng(derive_seed(seed, 99));
    for (auto& l : net.layers())
        for (auto& b : l.bias.storage()) b = rng.uniform(-0.1, 0.1);
    return net;
}

inline ParamSet small_dense_net(std::size_t inputs, std::size_t hidden, std::size_t outputs, std::uint64_t seed)
{
    return small_dense_net(Shape{inputs}, hidden, outputs, seed);
}

/// Two-action linear Q-network on a 1x2x1 observation: Q = W x with
/// rows `w1` and `w2` and no bias.
inline ParamSet linear_two_action(std::array<double, 2> w1, std::array<double, 2> w2)
{
    std::vector<Layer> layers;
    layers.push_back(make_dense("q", Shape{1, 2, 1}, 2, Activation::identity));
    layers[0].weights = Tensor({2, 2}, {w1[0], w1[1], w2[0], w2[1]});
    return ParamSet(std::move(layers));
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b)
{
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
    return m;
}

struct FdStats {
    double max_rel_error = 0.0;
    std::size_t checked = 0;
    /// Coordinates skipped because the probe points straddle a relu kink.
    std::size_t kinks = 0;
};

/// Relu on/off pattern of a forward pass.
inline std::vector<bool> relu_pattern(const ParamSet& net, const Tensor& x)
{
    std::vector<bool> pattern;
    const auto acts = forward(net, x);
    for (std::size_t l = 0; l < net.size(); ++l) {
        if (net.layers()[l].activation != Activation::relu) continue;
        for (double v : acts[l + 1].storage()) pattern.push_back(v > 0.0);
    }
    return pattern;
}

inline double fd_relative_error(double analytic, double numeric)
{
    return std::fabs(analytic - numeric) / std::max({std::fabs(analytic), std::fabs(numeric), 1e-6});
}

/// Central differences of L = <forward(net, x), g> against backprop, over
/// every parameter and every input coordinate.
inline FdStats finite_difference_check(const ParamSet& net, const Tensor& x, const Tensor& g, double h = 1e-4)
{
    FdStats stats;
    const auto bp = backprop(net, x, g);
    auto loss = [&](const ParamSet& n, const Tensor& in) {
        const Tensor out = forward_output(n, in);
        double acc = 0.0;
        for (std::size_t i = 0; i < out.size(); ++i) acc += out[i] * g[i];
        return acc;
    };
    auto record = [&](double analytic, double numeric, bool kink) {
        if (kink) {
            ++stats.kinks;
            return;
        }
        ++stats.checked;
        stats.max_rel_error = std::max(stats.max_rel_error, fd_relative_error(analytic, numeric));
    };

    const auto base_pattern = relu_pattern(net, x);
    ParamSet probe = net;
    for (std::size_t l = 0; l < net.size(); ++l) {
        for (int which = 0; which < 2; ++which) {
            auto& values = which == 0 ? probe.layers()[l].weights.storage() : probe.layers()[l].bias.storage();
            const auto& grads = which == 0 ? bp.param_grads.weights[l] : bp.param_grads.biases[l];
            for (std::size_t i = 0; i < values.size(); ++i) {
                const double saved = values[i];
                values[i] = saved + h;
                const double up = loss(probe, x);
                const bool kink_up = relu_pattern(probe, x) != base_pattern;
                values[i] = saved - h;
                const double down = loss(probe, x);
                const bool kink_down = relu_pattern(probe, x) != base_pattern;
                values[i] = saved;
                record(grads[i], (up - down) / (2 * h), kink_up || kink_down);
            }
        }
    }
    Tensor xp = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double saved = xp[i];
        xp[i] = saved + h;
        const double up = loss(net, xp);
        const bool kink_up = relu_pattern(net, xp) != base_pattern;
        xp[i] = saved - h;
        const double down = loss(net, xp);
        const bool kink_down = relu_pattern(net, xp) != base_pattern;
        xp[i] = saved;
        record(bp.input_grad[i], (up - down) / (2 * h), kink_up || kink_down);
    }
    return stats;
}

/// Two convolutions and one dense layer, seeded; used by the gradient checks.
inline ParamSet fd_net(std::uint64_t seed)
{
    std::vector<Layer> layers;
    layers.push_back(make_conv2d("c1", Shape{6, 6, 2}, 3, 3, 1, 1, Activation::relu));
    layers.push_back(make_conv2d("c2", layers.back().output_shape, 4, 3, 2, 0, Activation::relu));
    layers.push_back(make_dense("q", layers.back().output_shape, 3, Activation::identity));
    ParamSet net(std::move(layers));
    net.initialize(seed);
    Rng rng(derive_seed(seed, 99));
    for (auto& l : net.layers())
        for (auto& b : l.bias.storage()) b = rng.uniform(-0.1, 0.1);
    return net;
}

/// Greedy action of `net` on a [0,1]-scaled input.
inline std::size_t greedy_of(const ParamSet& net, const Tensor& x)
{
    const Tensor q = forward_output(net, x);
    std::size_t best = 0;
    for (std::size_t a = 1; a < q.size(); ++a)
        if (q[a] > q[best]) best = a;
    return best;
}

/// Smallest l2 distance among `samples` random points of the eps-ball
/// (clipped to the pixel box) whose greedy action differs from the clean
/// one; infinity when none flips.
inline double random_search_l2(const ParamSet& net, const Tensor& x, double eps, std::size_t samples,
                               std::uint64_t seed)
{
    Rng rng(seed);
    const std::size_t clean = greedy_of(net, x);
    const std::size_t n = x.size();
    double best = std::numeric_limits<double>::infinity();
    Tensor p = x;
    std::vector<double> dir(n);
    for (std::size_t k = 0; k < samples; ++k) {
        double norm = 0.0;
        for (auto& d : dir) {
            d = rng.normal();
            norm += d * d;
        }
        norm = std::sqrt(norm);
        const double radius = eps * rng.uniform();
        double dist = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            p[i] = std::clamp(x[i] + radius * dir[i] / norm, 0.0, 1.0);
            dist += (p[i] - x[i]) * (p[i] - x[i]);
        }
        dist = std::sqrt(dist);
        if (dist < best && greedy_of(net, p) != clean) best = dist;
    }
    return best;
}

/// Among `candidates` seeded images, the one whose greedy decision boundary
/// is closest under a first-order estimate margin / ||grad margin||_2.
inline Observation near_boundary_state(const ParamSet& net, std::size_t candidates, std::uint64_t seed,
                                       double* estimate = nullptr)
{
    const Shape& shape = net.input_shape();
    Observation best;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < candidates; ++k) {
        const auto s = noise_image(shape[0], shape[1], shape[2], derive_seed(seed, k), 20, 235);
        const Tensor x = to_network_input(s);
        const Tensor q = forward_output(net, x);
        const std::size_t a = greedy_of(net, x);
        std::size_t rival = a == 0 ? 1 : 0;
        for (std::size_t i = 0; i < q.size(); ++i)
            if (i != a && q[i] > q[rival]) rival = i;
        Tensor g(q.shape());
        g[a] = 1.0;
        g[rival] = -1.0;
        const auto bp = backprop(net, x, g);
        double norm = 0.0;
        for (double v : bp.input_grad.storage()) norm += v * v;
        const double d = (q[a] - q[rival]) / std::max(std::sqrt(norm), 1e-300);
        if (d < best_d) {
            best_d = d;
            best = s;
        }
    }
    if (estimate) *estimate = best_d;
    return best;
}

/// Scratch directory under the build tree, emptied on construction.
inline std::filesystem::path scratch_dir(const std::string& name)
{
    const auto dir = std::filesystem::temp_directory_path() / ("hsprobe-test-" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace hsprobe::testing
