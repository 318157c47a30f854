#include <gtest/gtest.h>

#include <cmath>

#include "hsprobe/harness.hpp"
#include "hsprobe/qlearning.hpp"
#include "support.hpp"

using namespace hsprobe;
using namespace hsprobe::testing;

namespace {

class HarnessTest : public ::testing::Test {
protected:
    static void SetUpTestSuite()
    {
        env_ = new EnvSpec(pixel_grid_spec(6, 6, 3));
        TrainConfig cfg;
        cfg.total_steps = 8000;
        cfg.learning_starts = 500;
        cfg.exploration.decay_steps = 4000;
        policy_ = new ParamSet(train(*env_, cfg).params);
        cfg.seed = 8;
        other_ = new ParamSet(train(*env_, cfg).params);
        features_ = new FeatureNet(default_feature_net());
    }
    static void TearDownTestSuite()
    {
        delete env_;
        delete policy_;
        delete other_;
        delete features_;
    }

    static EnvSpec* env_;
    static ParamSet* policy_;
    static ParamSet* other_;
    static FeatureNet* features_;
};

EnvSpec* HarnessTest::env_ = nullptr;
ParamSet* HarnessTest::policy_ = nullptr;
ParamSet* HarnessTest::other_ = nullptr;
FeatureNet* HarnessTest::features_ = nullptr;

std::vector<RunRecord> runs_with_scores(std::vector<double> scores, double similarity)
{
    std::vector<RunRecord> out;
    for (std::size_t i = 0; i < scores.size(); ++i) out.push_back({1000 + i, scores[i], similarity, 10});
    return out;
}

double direct_sem(const std::vector<double>& xs)
{
    double m = 0.0;
    for (double x : xs) m += x;
    m /= static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(xs.size() - 1)) / std::sqrt(static_cast<double>(xs.size()));
}

}  // namespace

TEST(Impact, Examples)
{
    EXPECT_NEAR(impact(21, -20.8, -21), 0.99524, 5e-4);
    EXPECT_DOUBLE_EQ(impact(21, -20.8, -21), 41.8 / 42.0);
    EXPECT_EQ(impact(5, 5, -5), 0.0);
    EXPECT_DOUBLE_EQ(impact(100, 40, 0), 0.6);
    EXPECT_DOUBLE_EQ(impact(1, -3, -2), 4.0 / 3.0);  // no clamping
    EXPECT_LT(impact(1, 2, 0), 0.0);
    EXPECT_THROW(impact(-2, -2, -2), std::invalid_argument);
    EXPECT_THROW(impact(-3, 0, -2), std::invalid_argument);
}

TEST(Aggregation, MeanAndStandardError)
{
    const std::vector<double> two{1.0, 3.0};
    EXPECT_DOUBLE_EQ(mean_of(two), 2.0);
    EXPECT_DOUBLE_EQ(standard_error(two), 1.0);
    const std::vector<double> same(7, 0.37);
    EXPECT_EQ(mean_of(same), 0.37);
    EXPECT_EQ(standard_error(same), 0.0);
    const std::vector<double> one{4.0};
    EXPECT_EQ(standard_error(one), 0.0);
    const auto runs = runs_with_scores({1.0, 3.0}, 0.5);
    const auto agg = aggregate(runs);
    EXPECT_EQ(agg.runs, 2u);
    EXPECT_DOUBLE_EQ(agg.mean_score, 2.0);
    EXPECT_DOUBLE_EQ(agg.sem_score, 1.0);
    EXPECT_EQ(agg.mean_similarity, 0.5);
    EXPECT_EQ(agg.sem_similarity, 0.0);
}

TEST_F(HarnessTest, CleanRunsWithinOracleBounds)
{
    ProbeSettings settings;
    const auto runs = clean_runs(*policy_, *env_, settings);
    ASSERT_EQ(runs.size(), 10u);
    std::vector<double> scores;
    double oracle = 0.0;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        EXPECT_EQ(runs[i].seed, settings.base_seed + i);
        scores.push_back(runs[i].score);
        oracle += oracle_return(*env_, runs[i].seed);
    }
    const auto agg = aggregate(runs);
    EXPECT_GE(agg.mean_score, env_->score_min - 1e-9);
    EXPECT_LE(agg.mean_score, oracle / 10.0 + 1e-9);
    EXPECT_NEAR(agg.sem_score, direct_sem(scores), 1e-12);
}

TEST_F(HarnessTest, IdentityProbeMatchesCleanRollout)
{
    const Direction id = PerturbationSpec{IdentityParams{}};
    for (std::uint64_t seed : {1000u, 1001u, 1002u}) {
        const auto p = probe_episode(*policy_, *env_, id, seed, *features_);
        EXPECT_EQ(p.total_reward, greedy_return(*policy_, *env_, seed));
        EXPECT_EQ(p.mean_similarity, 0.0);
    }
    ProbeSettings settings;
    settings.runs = 5;
    const auto report = probe(*policy_, "ck", *env_, id, settings, *features_);
    EXPECT_EQ(report.impact, 0.0);
    EXPECT_EQ(report.perturbed.mean_similarity, 0.0);
    EXPECT_TRUE(report.consistent());
    EXPECT_EQ(report.feature_net_version, features_->version);
    EXPECT_FALSE(hsd_verdict(report, report, 0.1, 0.5));
}

TEST_F(HarnessTest, ProbeIsDeterministic)
{
    const Direction blur = PerturbationSpec{MedianBlurParams{5}};
    const auto a = probe_episode(*policy_, *env_, blur, 1003, *features_);
    const auto b = probe_episode(*policy_, *env_, blur, 1003, *features_);
    EXPECT_EQ(a.total_reward, b.total_reward);
    EXPECT_EQ(a.mean_similarity, b.mean_similarity);
    EXPECT_EQ(a.length, b.length);
}

TEST_F(HarnessTest, TraceSimilarityMatchesOfflineLpips)
{
    const Direction blur = PerturbationSpec{MedianBlurParams{5}};
    const auto p = probe_episode(*policy_, *env_, blur, 1004, *features_, true);
    ASSERT_EQ(p.trace.size(), p.length);
    double mean = 0.0;
    for (const auto& step : p.trace) {
        EXPECT_EQ(step.perturbed, median_blur(step.state, 5));
        EXPECT_EQ(step.similarity, lpips(*features_, step.state, step.perturbed));
        mean += step.similarity;
    }
    EXPECT_NEAR(p.mean_similarity, mean / static_cast<double>(p.length), 1e-12);
    EXPECT_GT(p.mean_similarity, 0.0);
}

TEST_F(HarnessTest, PerturbationOnlyAffectsPolicyInput)
{
    const Direction rot = PerturbationSpec{RotationParams{10.0}};
    const auto p = probe_episode(*policy_, *env_, rot, 1005, *features_, true);
    auto env = make_env(*env_);
    Observation s = env->reset(1005);
    double total = 0.0;
    for (const auto& step : p.trace) {
        EXPECT_EQ(s, step.state);
        EXPECT_EQ(step.action, greedy_action(*policy_, step.perturbed));
        const auto r = env->step(step.action);
        EXPECT_EQ(r.reward, step.reward);
        total += r.reward;
        s = r.observation;
    }
    EXPECT_EQ(total, p.total_reward);
}

TEST_F(HarnessTest, AttackDirectionsRespectTheirBall)
{
    AttackSpec spec;
    spec.norm = NormOrder::l2;
    spec.epsilon = 0.05;
    for (auto method : {AttackMethod::fgm, AttackMethod::cw}) {
        spec.method = method;
        spec.iterations = 50;
        const auto p = probe_episode(*policy_, *env_, Direction{spec}, 1006, *features_, true);
        for (const auto& step : p.trace) {
            const double d =
                perturbation_norm(to_network_input(step.perturbed), to_network_input(step.state), spec.norm);
            EXPECT_LE(d, spec.epsilon + 1e-9);
            EXPECT_NEAR(d, step.attack_distance, 1e-9);
            if (step.attack_success) {
                EXPECT_NE(greedy_action(*policy_, step.perturbed), greedy_action(*policy_, step.state));
            }
        }
    }
}

TEST_F(HarnessTest, ThreadCountDoesNotChangeResults)
{
    const Direction d = PerturbationSpec{BrightnessContrastParams{1.2, 40}};
    ProbeSettings one;
    one.runs = 6;
    auto many = one;
    many.threads = 3;
    const auto a = probe(*policy_, "ck", *env_, d, one, *features_);
    const auto b = probe(*policy_, "ck", *env_, d, many, *features_);
    EXPECT_EQ(a.runs, b.runs);
    EXPECT_EQ(a.clean_runs, b.clean_runs);
    EXPECT_EQ(a.impact, b.impact);
    EXPECT_EQ(a.seeds(), b.seeds());
    EXPECT_EQ(a.seeds().front(), one.base_seed);
}

TEST_F(HarnessTest, ReportConsistencyDetectsTampering)
{
    ProbeSettings settings;
    settings.runs = 4;
    auto r = probe(*policy_, "ck", *env_, Direction{PerturbationSpec{ShiftParams{1, 1}}}, settings, *features_);
    EXPECT_TRUE(r.consistent());
    EXPECT_EQ(r.impact, impact(r.score_clean, r.perturbed.mean_score, r.score_min));
    auto bad = r;
    bad.impact += 1e-12;
    EXPECT_FALSE(bad.consistent());
    bad = r;
    bad.runs[0].score += 1.0;
    EXPECT_FALSE(bad.consistent());
}

TEST(Verdict, DefinitionApplication)
{
    const EnvSpec env = pixel_grid_spec(6, 6, 1);
    const Direction d = PerturbationSpec{BrightnessContrastParams{1.0, 30}};
    const auto clean = runs_with_scores({0.9, 0.8, 0.95}, 0.0);
    const auto drop = runs_with_scores({0.5, 0.4, 0.6}, 0.05);
    const auto report = make_report(d, env, clean, drop, 1000, "ck", "featurenet-v1");
    const auto clean_report =
        make_report(PerturbationSpec{IdentityParams{}}, env, clean, clean, 1000, "ck", "featurenet-v1");
    EXPECT_TRUE(hsd_verdict(report, clean_report, 0.1, 1.0));
    EXPECT_FALSE(hsd_verdict(report, clean_report, 0.01, 1.0));  // too dissimilar
    EXPECT_FALSE(hsd_verdict(report, clean_report, 0.1, 0.5));   // drop not large enough
    auto other = clean_report;
    other.checkpoint_id = "other";
    EXPECT_THROW(hsd_verdict(report, other, 0.1, 1.0), std::invalid_argument);

    const auto no_drop = make_report(d, env, clean, runs_with_scores({0.9, 0.8, 0.95}, 0.05), 1000, "ck2", "v");
    const auto no_drop_clean = make_report(PerturbationSpec{IdentityParams{}}, env, clean, clean, 1000, "ck2", "v");
    const std::vector<PolicyVerdictInput> both{{&report, &clean_report}, {&no_drop, &no_drop_clean}};
    EXPECT_FALSE(fixed_direction_verdict(both, 0.1, 1.0));
    const std::vector<PolicyVerdictInput> first{{&report, &clean_report}};
    EXPECT_TRUE(fixed_direction_verdict(first, 0.1, 1.0));
}

TEST_F(HarnessTest, FixedVerdictIsConjunction)
{
    const Direction d = PerturbationSpec{BrightnessContrastParams{1.0, 80}};
    const Direction id = PerturbationSpec{IdentityParams{}};
    ProbeSettings settings;
    settings.runs = 3;
    const auto ra = probe(*policy_, "a", *env_, d, settings, *features_);
    const auto ca = probe(*policy_, "a", *env_, id, settings, *features_);
    const auto rb = probe(*other_, "b", *env_, d, settings, *features_);
    const auto cb = probe(*other_, "b", *env_, id, settings, *features_);
    for (double delta : {0.5, 1.0, 2.0}) {
        const std::vector<PolicyVerdictInput> in{{&ra, &ca}, {&rb, &cb}};
        EXPECT_EQ(fixed_direction_verdict(in, 1.0, delta),
                  hsd_verdict(ra, ca, 1.0, delta) && hsd_verdict(rb, cb, 1.0, delta));
    }
}

TEST(WithParameter, ReplacesNamedField)
{
    const auto bc = with_parameter(BrightnessContrastParams{1.2, 40}, "beta", 7);
    EXPECT_EQ(std::get<BrightnessContrastParams>(bc).beta, 7.0);
    EXPECT_EQ(std::get<BrightnessContrastParams>(bc).alpha, 1.2);
    EXPECT_EQ(std::get<DctArtifactParams>(with_parameter(DctArtifactParams{}, "kappa", 0.5)).kappa, 0.5);
    EXPECT_EQ(std::get<MedianBlurParams>(with_parameter(MedianBlurParams{}, "kernel", 5)).kernel, 5u);
    EXPECT_THROW(with_parameter(MedianBlurParams{}, "beta", 1), std::invalid_argument);
}

TEST_F(HarnessTest, SweepOrderingAndConsistency)
{
    const std::vector<SweepPolicy> policies{{"trained", *policy_, "a"}, {"second", *other_, "b"}};
    const std::vector<double> grid{0.0, 20.0, 60.0};
    ProbeSettings settings;
    settings.runs = 3;
    const auto res = sweep(policies, *env_, BrightnessContrastParams{1.0, 0.0}, "beta", grid, settings, *features_);
    EXPECT_EQ(res.parameter, "beta");
    EXPECT_EQ(res.family, "brightness_contrast");
    ASSERT_EQ(res.points.size(), 6u);
    for (std::size_t k = 0; k < res.points.size(); ++k) {
        const auto& pt = res.points[k];
        EXPECT_EQ(pt.value, grid[k / 2]);
        EXPECT_EQ(pt.policy, policies[k % 2].name);
        EXPECT_TRUE(pt.report.consistent());
        EXPECT_EQ(pt.report.impact, impact(pt.report.score_clean, pt.report.perturbed.mean_score, pt.report.score_min));
    }
    // Beta 0 with alpha 1 is the identity point.
    EXPECT_EQ(res.points[0].report.impact, 0.0);
    EXPECT_EQ(res.points[1].report.impact, 0.0);

    const std::vector<double> unsorted{0.0, 20.0, 20.0};
    EXPECT_THROW(sweep(policies, *env_, BrightnessContrastParams{}, "beta", unsorted, settings, *features_),
                 std::invalid_argument);
    const std::vector<double> bad_kernel{1.0, 2.0};
    EXPECT_THROW(sweep(policies, *env_, MedianBlurParams{}, "kernel", bad_kernel, settings, *features_),
                 std::invalid_argument);
}
