#include <gtest/gtest.h>

#include <cmath>

#include "hsprobe/attack.hpp"
#include "hsprobe/qlearning.hpp"
#include "support.hpp"

using namespace hsprobe;
using namespace hsprobe::testing;

namespace {

Observation pixels_153_102()
{
    Observation s(1, 2, 1);
    s.pixels = {153, 102};  // (0.6, 0.4) after scaling
    return s;
}

double softmax_cost(const ParamSet& net, const Tensor& x, std::size_t a)
{
    const Tensor q = forward_output(net, x);
    double m = q[0];
    for (double v : q.storage()) m = std::max(m, v);
    double z = 0.0;
    for (double v : q.storage()) z += std::exp(v - m);
    return -(q[a] - m - std::log(z));
}

AttackSpec cw_spec(NormOrder p, double eps)
{
    AttackSpec s;
    s.method = AttackMethod::cw;
    s.norm = p;
    s.epsilon = eps;
    return s;
}

void expect_sound(const ParamSet& net, const Observation& s, const AttackSpec& spec, const AttackResult& r)
{
    EXPECT_TRUE(r.adversarial.valid());
    const double d = perturbation_norm(to_network_input(r.adversarial), to_network_input(s), spec.norm);
    EXPECT_LE(d, spec.epsilon + 1e-9);
    EXPECT_NEAR(d, r.distance, 1e-9);
    EXPECT_EQ(r.clean_action, greedy_action(net, s));
    EXPECT_EQ(r.adversarial_action, greedy_action(net, r.adversarial));
    EXPECT_EQ(r.success, r.adversarial_action != r.clean_action);
}

}  // namespace

TEST(Fgm, PerturbationExamples)
{
    const Tensor g({2}, {3.0, 4.0});
    const Tensor d = fgm_perturbation(g, NormOrder::l2, 0.1);
    EXPECT_NEAR(d[0], 0.06, 1e-15);
    EXPECT_NEAR(d[1], 0.08, 1e-15);
    const Tensor z = fgm_perturbation(Tensor({3}), NormOrder::l2, 0.1);
    for (double v : z.storage()) EXPECT_EQ(v, 0.0);
    const Tensor s = fgm_perturbation(Tensor({3}, {-2.0, 0.0, 1e-9}), NormOrder::linf, 0.05);
    EXPECT_EQ(s.storage(), (std::vector<double>{-0.05, 0.0, 0.05}));
}

TEST(Fgm, CostGradientMatchesFiniteDifferences)
{
    const auto net = small_conv_net({6, 6, 1}, 3, 1);
    const Tensor x = to_network_input(noise_image(6, 6, 1, 2));
    const std::size_t a = greedy_of(net, x);
    const Tensor g = fgm_cost_gradient(net, x);
    Tensor p = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        p[i] = x[i] + 1e-5;
        const double up = softmax_cost(net, p, a);
        p[i] = x[i] - 1e-5;
        const double down = softmax_cost(net, p, a);
        p[i] = x[i];
        EXPECT_LT(fd_relative_error(g[i], (up - down) / 2e-5), 1e-4);
    }
}

TEST(Fgm, ZeroGradientLeavesInput)
{
    std::vector<Layer> layers;
    layers.push_back(make_dense("q", Shape{2, 2, 1}, 2, Activation::identity));
    layers[0].bias = Tensor({2}, {1.0, 0.0});
    const ParamSet net(std::move(layers));
    const auto s = integer_image(2, 2, 1, 3);
    AttackSpec spec;
    spec.epsilon = 0.2;
    EXPECT_EQ(fgm(net, s, spec), s);
}

TEST(Fgm, LinfStepIsSignOfGradient)
{
    const auto net = small_conv_net({6, 6, 1}, 3, 4);
    const auto s = noise_image(6, 6, 1, 5, 30, 220);
    AttackSpec spec;
    spec.norm = NormOrder::linf;
    spec.epsilon = 0.02;
    const Tensor x = to_network_input(s);
    const Tensor g = fgm_cost_gradient(net, x);
    const Tensor adv = to_network_input(fgm(net, s, spec));
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double sign = g[i] > 0 ? 1.0 : g[i] < 0 ? -1.0 : 0.0;
        EXPECT_NEAR(adv[i] - x[i], 0.02 * sign, 1e-12);
    }
}

TEST(Fgm, ZeroRadiusIsIdentity)
{
    const auto net = small_conv_net({6, 6, 1}, 3, 6);
    const auto s = integer_image(6, 6, 1, 7);
    AttackSpec spec;
    spec.epsilon = 0.0;
    const auto r = fgm_attack(net, s, spec);
    EXPECT_EQ(r.adversarial, s);
    EXPECT_EQ(r.distance, 0.0);
    EXPECT_FALSE(r.success);
}

TEST(Cw, LinearFixtureL2)
{
    const auto net = linear_two_action({1, 0}, {0, 1});
    const auto r = cw_minimal(net, pixels_153_102(), cw_spec(NormOrder::l2, 0.3));
    ASSERT_TRUE(r.success);
    const double oracle = 0.2 / std::sqrt(2.0);
    EXPECT_NEAR(r.distance, oracle, 0.05 * oracle);
    EXPECT_GE(r.distance, oracle - 1e-9);
}

TEST(Cw, LinearFixtureLinf)
{
    // l-inf distance to the boundary of (w1 - w2) . x = 0 is margin / ||w1 - w2||_1.
    const auto net = linear_two_action({1, 0}, {0, 1});
    const auto r = cw_minimal(net, pixels_153_102(), cw_spec(NormOrder::linf, 0.3));
    ASSERT_TRUE(r.success);
    EXPECT_NEAR(r.distance, 0.1, 0.005);
    EXPECT_GE(r.distance, 0.1 - 1e-9);
}

TEST(Cw, FailsWhenBoundaryOutsideBall)
{
    const auto net = linear_two_action({1, 0}, {0, 1});
    const auto s = pixels_153_102();
    const auto r = cw_minimal(net, s, cw_spec(NormOrder::l2, 0.1));
    EXPECT_FALSE(r.success);
    EXPECT_EQ(r.adversarial, s);
    EXPECT_EQ(r.distance, 0.0);
    EXPECT_TRUE(certified(net, s, 0.09));
}

TEST(Cw, CertifiedStatesCannotBeFlipped)
{
    std::size_t certified_count = 0;
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
        const auto net = small_conv_net({6, 6, 1}, 3, 20 + seed);
        const auto s = noise_image(6, 6, 1, 40 + seed, 20, 235);
        for (double eps : {0.001, 0.005, 0.02}) {
            if (!certified(net, s, eps)) continue;
            ++certified_count;
            for (auto p : {NormOrder::l2, NormOrder::linf}) {
                const auto spec = cw_spec(p, eps);
                const auto r = cw_minimal(net, s, spec);
                EXPECT_FALSE(r.success) << "seed " << seed << " eps " << eps;
                expect_sound(net, s, spec, r);
            }
        }
    }
    EXPECT_GT(certified_count, 0u);
}

TEST(Cw, SoundAndNoWorseThanFgm)
{
    std::size_t both = 0, violations = 0;
    for (std::uint64_t seed = 0; seed < 15; ++seed) {
        const auto net = small_conv_net({6, 6, 1}, 3, 60 + seed);
        const auto s = near_boundary_state(net, 50, 80 + seed);
        for (auto p : {NormOrder::l2, NormOrder::linf}) {
            AttackSpec fs;
            fs.norm = p;
            fs.epsilon = 0.1;
            const auto f = fgm_attack(net, s, fs);
            expect_sound(net, s, fs, f);
            const auto cs = cw_spec(p, 0.1);
            const auto c = cw_minimal(net, s, cs);
            expect_sound(net, s, cs, c);
            if (f.success) {
                EXPECT_TRUE(c.success);
            }
            if (f.success && c.success) {
                ++both;
                if (c.distance > f.distance + 1e-9) ++violations;
            }
        }
    }
    EXPECT_GT(both, 0u);
    EXPECT_EQ(violations, 0u);
}

TEST(Cw, BeatsRandomSearch)
{
    std::size_t compared = 0;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const auto net = small_conv_net({6, 6, 1}, 3, 100 + seed);
        const auto s = near_boundary_state(net, 100, 120 + seed);
        const double rs = random_search_l2(net, to_network_input(s), 0.1, 10000, 140 + seed);
        const auto c = cw_minimal(net, s, cw_spec(NormOrder::l2, 0.1));
        if (std::isfinite(rs)) {
            ++compared;
            ASSERT_TRUE(c.success);
            EXPECT_LE(c.distance, rs);
        }
    }
    EXPECT_GT(compared, 0u);
}

TEST(AttackSpecTest, ValidationAndParsing)
{
    AttackSpec s;
    s.epsilon = -0.1;
    EXPECT_THROW(s.validate(), std::invalid_argument);
    s = AttackSpec{};
    s.iterations = 0;
    EXPECT_THROW(s.validate(), std::invalid_argument);
    EXPECT_EQ(norm_from_string("2"), NormOrder::l2);
    EXPECT_EQ(norm_from_string("inf"), NormOrder::linf);
    EXPECT_EQ(attack_method_from_string("cw"), AttackMethod::cw);
    EXPECT_THROW(norm_from_string("l1"), std::invalid_argument);
}

TEST(AttackSpecTest, RunAttackDispatches)
{
    const auto net = linear_two_action({1, 0}, {0, 1});
    const auto s = pixels_153_102();
    AttackSpec f;
    f.epsilon = 0.3;
    EXPECT_EQ(run_attack(net, s, f).adversarial, fgm_attack(net, s, f).adversarial);
    const auto c = cw_spec(NormOrder::l2, 0.3);
    EXPECT_EQ(run_attack(net, s, c).distance, cw_minimal(net, s, c).distance);
}
