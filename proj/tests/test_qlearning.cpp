#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numeric>

#include "hsprobe/qlearning.hpp"
#include "support.hpp"

using namespace hsprobe;
using namespace hsprobe::testing;

namespace {

// Q(s, .) = bias, whatever the input.
ParamSet constant_q(std::vector<double> q, Shape input = {2, 2, 1})
{
    const std::size_t n = q.size();
    std::vector<Layer> layers;
    layers.push_back(make_dense("q", input, n, Activation::identity));
    layers[0].bias = Tensor({n}, std::move(q));
    return ParamSet(std::move(layers));
}

Transition make_transition(std::uint64_t seed, std::size_t action, double reward, bool terminal)
{
    Transition t;
    t.state = integer_image(2, 2, 1, seed);
    t.next_state = integer_image(2, 2, 1, seed + 1000);
    t.action = action;
    t.reward = reward;
    t.terminal = terminal;
    return t;
}

std::vector<Transition> random_batch(std::size_t n, std::size_t actions, std::uint64_t seed)
{
    std::vector<Transition> batch;
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i)
        batch.push_back(make_transition(seed * 100 + i, rng.index(actions), rng.uniform(-1, 1), rng.uniform() < 0.3));
    return batch;
}

// Central differences of a scalar loss of the parameters.
template <class F>
double max_param_fd_error(const ParamSet& net, const ParamGrads& grads, F loss)
{
    const double h = 1e-6;
    double worst = 0.0;
    ParamSet probe = net;
    for (std::size_t l = 0; l < net.size(); ++l)
        for (int which = 0; which < 2; ++which) {
            auto& values = which == 0 ? probe.layers()[l].weights.storage() : probe.layers()[l].bias.storage();
            const auto& g = which == 0 ? grads.weights[l] : grads.biases[l];
            for (std::size_t i = 0; i < values.size(); ++i) {
                const double saved = values[i];
                values[i] = saved + h;
                const double up = loss(probe);
                values[i] = saved - h;
                const double down = loss(probe);
                values[i] = saved;
                worst = std::max(worst, fd_relative_error(g[i], (up - down) / (2 * h)));
            }
        }
    return worst;
}

}  // namespace

TEST(GreedyAction, ArgmaxWithLowestIndexTieBreak)
{
    EXPECT_EQ(greedy_action(Tensor({3}, {0.1, 0.9, 0.3})), 1u);
    EXPECT_EQ(greedy_action(Tensor({2}, {0.5, 0.5})), 0u);
    auto zero = small_conv_net({6, 6, 1}, 4, 1);
    for (auto& l : zero.layers()) {
        l.weights.fill(0);
        l.bias.fill(0);
    }
    for (std::uint64_t s = 0; s < 5; ++s) EXPECT_EQ(greedy_action(zero, integer_image(6, 6, 1, s)), 0u);
}

TEST(Huber, BothBranches)
{
    EXPECT_DOUBLE_EQ(huber(0.5), 0.125);
    EXPECT_DOUBLE_EQ(huber(-0.5), 0.125);
    EXPECT_DOUBLE_EQ(huber(2.0), 1.5);
    EXPECT_DOUBLE_EQ(huber_derivative(2.0), 1.0);
    EXPECT_DOUBLE_EQ(huber_derivative(-0.3), -0.3);
}

TEST(TdLoss, TerminalSampleQuadraticBranch)
{
    const auto net = constant_q({0.5, 0.0});
    const std::vector<Transition> batch{make_transition(1, 0, 1.0, true)};
    const std::vector<double> w{1.0};
    std::vector<double> residuals;
    const double loss = td_loss(net, net, batch, w, 0.99, 1.0, nullptr, &residuals);
    EXPECT_DOUBLE_EQ(loss, 0.125);
    ASSERT_EQ(residuals.size(), 1u);
    EXPECT_DOUBLE_EQ(std::fabs(residuals[0]), 0.5);
}

TEST(TdLoss, TargetUsesOnlineArgmaxAndTargetValue)
{
    // Online prefers action 1 at s', target would prefer action 0.
    const auto online = constant_q({1.0, 2.0});
    const auto target = constant_q({5.0, 3.0});
    const auto t = make_transition(2, 0, 0.25, false);
    EXPECT_DOUBLE_EQ(double_dqn_target(online, target, t, 0.9), 0.25 + 0.9 * 3.0);
    auto terminal = t;
    terminal.terminal = true;
    EXPECT_DOUBLE_EQ(double_dqn_target(online, target, terminal, 0.9), 0.25);

    // td residual Q_online(s,0) - target = 1 - 2.95, Huber linear branch.
    const std::vector<Transition> batch{t};
    const std::vector<double> w{1.0};
    EXPECT_DOUBLE_EQ(td_loss(online, target, batch, w, 0.9), 1.95 - 0.5);
}

TEST(TdLoss, ImportanceWeightsScaleSamples)
{
    const auto net = constant_q({0.5, 0.0});
    const std::vector<Transition> batch{make_transition(1, 0, 1.0, true), make_transition(2, 0, 3.0, true)};
    // Huber(0.5) = 0.125, Huber(2.5) = 2.
    const std::vector<double> w{1.0, 0.5};
    EXPECT_DOUBLE_EQ(td_loss(net, net, batch, w, 0.99), (0.125 + 0.5 * 2.0) / 2.0);
}

TEST(TdLoss, GradientMatchesFiniteDifferences)
{
    const auto online = small_dense_net(Shape{2, 2, 1}, 6, 3, 11);
    const auto target = small_dense_net(Shape{2, 2, 1}, 6, 3, 12);
    const auto batch = random_batch(8, 3, 13);
    std::vector<double> w(batch.size());
    Rng rng(14);
    for (auto& v : w) v = rng.uniform(0.2, 1.0);
    auto grads = ParamGrads::zeros_like(online);
    td_loss(online, target, batch, w, 0.9, 1.0, &grads);
    const double err = max_param_fd_error(online, grads, [&](const ParamSet& n) {
        return td_loss(n, target, batch, w, 0.9);
    });
    EXPECT_LT(err, 1e-4);
}

TEST(SaRegularizer, DegenerateBallGivesCleanMargin)
{
    const auto net = small_dense_net(Shape{2, 2, 1}, 6, 3, 21);
    const auto s = integer_image(2, 2, 1, 22);
    const Tensor q = forward_output(net, to_network_input(s));
    const std::size_t a = greedy_action(q);
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < 3; ++i)
        if (i != a) best = std::max(best, q[i] - q[a]);
    EXPECT_LT(best, 0.0);
    EXPECT_NEAR(sa_regularizer(net, s, 0.0, 100.0), best, 1e-12);
}

TEST(SaRegularizer, HingeFloor)
{
    const auto net = constant_q({10.0, 0.0, 1.0});
    EXPECT_DOUBLE_EQ(sa_regularizer(net, integer_image(2, 2, 1, 1), 0.1, 2.0), -2.0);
}

TEST(SaRegularizer, UpperBoundsSampledInnerMax)
{
    const auto net = small_dense_net(Shape{2, 2, 1}, 8, 3, 31);
    const auto s = integer_image(2, 2, 1, 32);
    const double eps = 0.05, c = 100.0;
    const Tensor x = to_network_input(s);
    const std::size_t a = greedy_action(forward_output(net, x));
    const double ibp = sa_regularizer(net, s, eps, c);
    const auto ball = input_ball(s, eps);
    Rng rng(33);
    double sampled = -std::numeric_limits<double>::infinity();
    for (int n = 0; n < 100000; ++n) {
        Tensor p = x;
        for (std::size_t i = 0; i < p.size(); ++i) p[i] = rng.uniform(ball.lower[i], ball.upper[i]);
        const Tensor q = forward_output(net, p);
        for (std::size_t i = 0; i < q.size(); ++i)
            if (i != a) sampled = std::max(sampled, q[i] - q[a]);
    }
    EXPECT_GE(ibp, sampled);
}

TEST(SaRegularizer, BoundedBelowAndMonotoneInRadius)
{
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto net = small_dense_net(Shape{2, 2, 1}, 8, 3, 40 + seed);
        const auto s = integer_image(2, 2, 1, 60 + seed);
        double prev = -std::numeric_limits<double>::infinity();
        for (double eps : {0.0, 0.01, 0.02, 0.05, 0.1, 0.2}) {
            const double r = sa_regularizer(net, s, eps, 0.5);
            EXPECT_GE(r, -0.5);
            EXPECT_GE(r, prev - 1e-12);
            prev = r;
        }
    }
}

TEST(SaRegularizer, GradientMatchesFiniteDifferences)
{
    const auto net = small_dense_net(Shape{2, 2, 1}, 6, 3, 71);
    const auto s = integer_image(2, 2, 1, 72);
    auto grads = ParamGrads::zeros_like(net);
    const double value = sa_regularizer(net, s, 0.05, 100.0, &grads);
    ASSERT_GT(value, -100.0);
    const double err =
        max_param_fd_error(net, grads, [&](const ParamSet& n) { return sa_regularizer(n, s, 0.05, 100.0); });
    EXPECT_LT(err, 1e-4);
}

TEST(Radial, HandExample)
{
    // Taken action 0 with Q = 0.5, alternative 1 with Q = 0.7.
    const std::vector<double> q{0.5, 0.7};
    const std::vector<double> lower{0.7, 0.6};
    const std::vector<double> upper{0.9, 1.0};
    EXPECT_NEAR(radial_term(q, lower, upper, 0), 0.4 * 0.2, 1e-15);
}

TEST(Radial, SeparatedBoundsAndNoGapGiveZero)
{
    const std::vector<double> q{1.0, 0.2};
    const std::vector<double> lower{0.9, 0.1};
    const std::vector<double> upper{1.1, 0.3};
    EXPECT_EQ(radial_term(q, lower, upper, 0), 0.0);
}

TEST(Radial, LossNonnegative)
{
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto net = small_dense_net(Shape{2, 2, 1}, 8, 3, 80 + seed);
        const auto batch = random_batch(6, 3, 90 + seed);
        for (double eps : {0.0, 0.02, 0.1}) EXPECT_GE(radial_loss(net, batch, eps), 0.0);
    }
}

TEST(Radial, ZeroRadiusClosedForm)
{
    const auto net = small_dense_net(Shape{2, 2, 1}, 8, 3, 101);
    const auto batch = random_batch(8, 3, 102);
    // With a degenerate ball OV = 1.5 Q_diff, so the loss is 1.5 * mean sum Q_diff^2.
    double expected = 0.0;
    for (const auto& t : batch) {
        const Tensor q = forward_output(net, to_network_input(t.state));
        for (std::size_t a = 0; a < q.size(); ++a) {
            const double diff = std::max(0.0, q[a] - q[t.action]);
            expected += 1.5 * diff * diff;
        }
    }
    expected /= static_cast<double>(batch.size());
    EXPECT_NEAR(radial_loss(net, batch, 0.0), expected, 1e-12);

    TrainConfig cfg;
    cfg.objective = Objective::radial;
    cfg.robust_radius = 0.0;
    const std::vector<double> w(batch.size(), 1.0);
    const auto parts = minibatch_loss(net, net, batch, w, cfg, nullptr, nullptr);
    EXPECT_NEAR(parts.adversarial, expected, 1e-12);
    EXPECT_NEAR(parts.total, parts.td + cfg.adversarial_weight * parts.adversarial, 1e-12);
}

TEST(Radial, ZeroForGreedyActionsWithZeroRadius)
{
    const auto net = small_dense_net(Shape{2, 2, 1}, 8, 3, 111);
    auto batch = random_batch(8, 3, 112);
    for (auto& t : batch) t.action = greedy_action(net, t.state);
    EXPECT_EQ(radial_loss(net, batch, 0.0), 0.0);
}

TEST(Radial, GradientMatchesFiniteDifferences)
{
    const auto net = small_dense_net(Shape{2, 2, 1}, 6, 3, 121);
    const auto batch = random_batch(6, 3, 122);
    auto grads = ParamGrads::zeros_like(net);
    const double v = radial_loss(net, batch, 0.03, &grads);
    ASSERT_GT(v, 0.0);
    const double err = max_param_fd_error(net, grads, [&](const ParamSet& n) { return radial_loss(n, batch, 0.03); });
    EXPECT_LT(err, 1e-4);
}

TEST(Certification, MonotoneInRadius)
{
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto net = small_dense_net(Shape{2, 2, 1}, 8, 3, 130 + seed);
        const auto s = integer_image(2, 2, 1, 150 + seed);
        bool prev = true;
        for (double eps : {0.0, 0.001, 0.01, 0.05, 0.1, 0.3}) {
            const bool c = certified(net, s, eps);
            if (!prev) {
                EXPECT_FALSE(c);
            }
            prev = c;
        }
    }
}

TEST(Certification, ConstantNetIsCertifiedEverywhere)
{
    EXPECT_TRUE(certified(constant_q({1.0, 0.0}), integer_image(2, 2, 1, 1), 1.0));
    EXPECT_FALSE(certified(constant_q({1.0, 1.0}), integer_image(2, 2, 1, 1), 0.0));
}

TEST(Replay, UniformWhenExponentZero)
{
    ReplayBuffer buf({10, 0.0, 1e-6});
    for (int i = 0; i < 4; ++i) buf.push(make_transition(i, 0, 0.0, false));
    buf.set_priority(0, 5.0);
    buf.set_priority(2, 0.1);
    for (double p : buf.probabilities()) EXPECT_DOUBLE_EQ(p, 0.25);
}

TEST(Replay, ProportionalProbabilitiesAndWeights)
{
    ReplayBuffer buf({10, 1.0, 1e-6});
    buf.push(make_transition(1, 0, 0.0, false));
    buf.push(make_transition(2, 0, 0.0, false));
    buf.set_priority(0, 1.0);
    buf.set_priority(1, 3.0);
    const auto p = buf.probabilities();
    EXPECT_DOUBLE_EQ(p[0], 0.25);
    EXPECT_DOUBLE_EQ(p[1], 0.75);
    Rng rng(1);
    for (int trial = 0; trial < 20; ++trial) {
        const auto s = buf.sample(2, 1.0, rng);
        for (std::size_t k = 0; k < s.indices.size(); ++k)
            EXPECT_NEAR(s.weights[k], s.indices[k] == 0 ? 1.0 : 1.0 / 3.0, 1e-12);
    }
}

TEST(Replay, RandomPrioritiesGiveValidDistribution)
{
    ReplayBuffer buf({64, 0.6, 1e-6});
    Rng rng(3);
    for (int i = 0; i < 50; ++i) buf.push(make_transition(i, i % 3, 0.0, false));
    for (std::size_t i = 0; i < buf.size(); ++i) buf.set_priority(i, rng.uniform(0.01, 5.0));
    const auto p = buf.probabilities();
    EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-12);
    const auto s = buf.sample(16, 0.4, rng);
    for (double w : s.weights) {
        EXPECT_GT(w, 0.0);
        EXPECT_LE(w, 1.0 + 1e-12);
    }
    const std::vector<double> td{-0.5, 2.0};
    const std::vector<std::size_t> idx{3, 7};
    buf.update_priorities(idx, td);
    EXPECT_DOUBLE_EQ(buf.priority(3), 0.5 + 1e-6);
    EXPECT_DOUBLE_EQ(buf.priority(7), 2.0 + 1e-6);
}

TEST(Replay, RingOverwritesOldest)
{
    ReplayBuffer buf({3, 0.6, 1e-6});
    for (int i = 0; i < 5; ++i) buf.push(make_transition(i, static_cast<std::size_t>(i % 4), i, false));
    EXPECT_EQ(buf.size(), 3u);
    EXPECT_DOUBLE_EQ(buf.get(0).reward, 3.0);
    EXPECT_EQ(buf.get(1).state, integer_image(2, 2, 1, 4));
}

TEST(Replay, EmptyOrShortBufferRejected)
{
    ReplayBuffer buf({8, 0.6, 1e-6});
    Rng rng(1);
    EXPECT_THROW(buf.sample(1, 0.4, rng), std::logic_error);
    buf.push(make_transition(1, 0, 0, false));
    EXPECT_THROW(buf.sample(2, 0.4, rng), std::logic_error);
}

TEST(Train, ZeroStepsReturnsInitialization)
{
    const auto env = pixel_grid_spec(8, 8, 7);
    TrainConfig cfg;
    cfg.total_steps = 0;
    const auto ck = train(env, cfg);
    EXPECT_EQ(ck.params, initial_q_network(env, cfg));
    EXPECT_TRUE(ck.curve.empty());
}

TEST(Train, ShortRunIsDeterministic)
{
    const auto env = pixel_grid_spec(6, 6, 3);
    TrainConfig cfg;
    cfg.total_steps = 600;
    cfg.learning_starts = 100;
    cfg.objective = Objective::sa_ddqn;
    const auto a = train(env, cfg);
    const auto b = train(env, cfg);
    EXPECT_EQ(a.params, b.params);
    EXPECT_EQ(a.curve.size(), b.curve.size());
    EXPECT_NE(a.params, initial_q_network(env, cfg));
}

TEST(Train, DivergenceIsReported)
{
    const auto env = pixel_grid_spec(6, 6, 3);
    TrainConfig cfg;
    cfg.total_steps = 400;
    cfg.learning_starts = 50;
    cfg.train_every = 1;
    cfg.grad_clip_norm = 0.0;
    cfg.optimizer.rule = UpdateRule::sgd;
    cfg.optimizer.learning_rate = 1e200;
    EXPECT_THROW(train(env, cfg), TrainingError);
}

TEST(Train, ConfigValidation)
{
    TrainConfig cfg;
    cfg.gamma = 0.0;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg = TrainConfig{};
    cfg.sa_cap = 0.0;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
    cfg = TrainConfig{};
    cfg.robust_radius = -0.1;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(Train, RadiusRamp)
{
    TrainConfig cfg;
    cfg.robust_radius = 0.04;
    cfg.robust_start = 100;
    cfg.robust_ramp = 200;
    EXPECT_EQ(cfg.radius_at(50), 0.0);
    EXPECT_NEAR(cfg.radius_at(200), 0.02, 1e-15);
    EXPECT_EQ(cfg.radius_at(1000), 0.04);
}
