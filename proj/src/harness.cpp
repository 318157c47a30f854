#include "hsprobe/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "hsprobe/qlearning.hpp"

namespace hsprobe {

std::string describe(const Direction& d)
{
    if (const auto* p = std::get_if<PerturbationSpec>(&d)) return describe(*p);
    const auto& a = std::get<AttackSpec>(d);
    return to_string(a.method) + "(norm=" + to_string(a.norm) + ", epsilon=" + std::to_string(a.epsilon) + ")";
}

void validate(const Direction& d)
{
    if (const auto* p = std::get_if<PerturbationSpec>(&d)) validate(*p);
    else std::get<AttackSpec>(d).validate();
}

bool is_identity(const Direction& d)
{
    const auto* p = std::get_if<PerturbationSpec>(&d);
    return p && std::holds_alternative<IdentityParams>(*p);
}

EpisodeProbe probe_episode(const ParamSet& policy, const EnvSpec& env, const Direction& direction,
                           std::uint64_t episode_seed, const FeatureNet& features, bool record_states)
{
    validate(direction);
    auto world = make_env(env);
    Observation s = world->reset(episode_seed);
    EpisodeProbe out;
    out.seed = episode_seed;
    double similarity_sum = 0.0;
    for (;;) {
        TraceStep step;
        Observation s_hat;
        if (const auto* p = std::get_if<PerturbationSpec>(&direction)) {
            s_hat = hsprobe::apply(*p, s);
        } else {
            AttackResult r = run_attack(policy, s, std::get<AttackSpec>(direction));
            step.attack_distance = r.distance;
            step.attack_success = r.success;
            s_hat = std::move(r.adversarial);
        }
        // lpips(s, s) is exactly zero; skip the feature pass.
        step.similarity = s_hat == s ? 0.0 : lpips(features, s, s_hat);
        step.action = greedy_action(policy, s_hat);
        StepResult r = world->step(step.action);
        step.reward = r.reward;
        out.total_reward += r.reward;
        similarity_sum += step.similarity;
        if (record_states) {
            step.state = std::move(s);
            step.perturbed = std::move(s_hat);
        }
        out.trace.push_back(std::move(step));
        s = std::move(r.observation);
        if (r.terminal) break;
    }
    out.length = out.trace.size();
    out.mean_similarity = similarity_sum / static_cast<double>(out.length);
    return out;
}

double impact(double score_clean, double score_adv, double score_min)
{
    if (!(score_clean > score_min))
        throw std::invalid_argument("impact needs score_clean > score_min (got " + std::to_string(score_clean) +
                                    " <= " + std::to_string(score_min) + ")");
    return (score_clean - score_adv) / (score_clean - score_min);
}

double mean_of(std::span<const double> xs)
{
    if (xs.empty()) throw std::invalid_argument("mean of an empty list");
    // Identical values would otherwise pick up summation rounding.
    if (std::all_of(xs.begin(), xs.end(), [&](double x) { return x == xs.front(); })) return xs.front();
    double acc = 0.0;
    for (double x : xs) acc += x;
    return acc / static_cast<double>(xs.size());
}

double standard_error(std::span<const double> xs)
{
    if (xs.size() < 2) return 0.0;
    const double m = mean_of(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    const double n = static_cast<double>(xs.size());
    return std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
}

Aggregate aggregate(std::span<const RunRecord> runs)
{
    if (runs.empty()) throw std::invalid_argument("aggregate needs at least one run");
    std::vector<double> score, sim;
    for (const auto& r : runs) {
        score.push_back(r.score);
        sim.push_back(r.similarity);
    }
    return {runs.size(), mean_of(score), standard_error(score), mean_of(sim), standard_error(sim)};
}

std::vector<std::uint64_t> ProbeReport::seeds() const
{
    std::vector<std::uint64_t> out;
    for (const auto& r : runs) out.push_back(r.seed);
    return out;
}

namespace {

bool same(const Aggregate& a, const Aggregate& b)
{
    return a.runs == b.runs && a.mean_score == b.mean_score && a.sem_score == b.sem_score &&
           a.mean_similarity == b.mean_similarity && a.sem_similarity == b.sem_similarity;
}

// Runs fn(i) for i in [0, n) and returns the results in index order.
template <class Fn>
std::vector<RunRecord> run_indexed(std::size_t n, std::size_t threads, Fn fn)
{
    std::vector<RunRecord> out(n);
    threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(n, 1));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    out[i] = fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
    return out;
}

}  // namespace

bool ProbeReport::consistent() const
{
    if (runs.empty() || clean_runs.size() != runs.size()) return false;
    for (std::size_t i = 0; i < runs.size(); ++i)
        if (runs[i].seed != clean_runs[i].seed) return false;
    const Aggregate c = aggregate(clean_runs), p = aggregate(runs);
    if (!same(c, clean) || !same(p, perturbed)) return false;
    if (score_clean != c.mean_score || score_min != env.score_min) return false;
    return score_clean > score_min && impact == hsprobe::impact(score_clean, p.mean_score, score_min);
}

std::vector<RunRecord> clean_runs(const ParamSet& policy, const EnvSpec& env, const ProbeSettings& settings)
{
    const Direction identity = PerturbationSpec{IdentityParams{}};
    const FeatureNet unused;
    return run_indexed(settings.runs, settings.threads, [&](std::size_t i) {
        const std::uint64_t seed = settings.base_seed + i;
        const EpisodeProbe e = probe_episode(policy, env, identity, seed, unused);
        return RunRecord{seed, e.total_reward, e.mean_similarity, e.length};
    });
}

ProbeReport make_report(const Direction& direction, const EnvSpec& env, std::vector<RunRecord> clean,
                        std::vector<RunRecord> perturbed, std::uint64_t base_seed, std::string checkpoint_id,
                        std::string feature_net_version)
{
    ProbeReport r;
    r.direction = direction;
    r.env = env;
    r.clean_runs = std::move(clean);
    r.runs = std::move(perturbed);
    r.clean = aggregate(r.clean_runs);
    r.perturbed = aggregate(r.runs);
    r.score_clean = r.clean.mean_score;
    r.score_min = env.score_min;
    r.impact = impact(r.score_clean, r.perturbed.mean_score, r.score_min);
    r.base_seed = base_seed;
    r.checkpoint_id = std::move(checkpoint_id);
    r.feature_net_version = std::move(feature_net_version);
    return r;
}

ProbeReport probe(const ParamSet& policy, const std::string& checkpoint_id, const EnvSpec& env,
                  const Direction& direction, const ProbeSettings& settings, const FeatureNet& features)
{
    env.validate();
    validate(direction);
    if (settings.runs < 1) throw std::invalid_argument("probe needs at least one run");
    std::vector<RunRecord> clean = clean_runs(policy, env, settings);
    std::vector<RunRecord> perturbed;
    if (is_identity(direction)) {
        perturbed = clean;
    } else {
        perturbed = run_indexed(settings.runs, settings.threads, [&](std::size_t i) {
            const std::uint64_t seed = settings.base_seed + i;
            const EpisodeProbe e = probe_episode(policy, env, direction, seed, features);
            return RunRecord{seed, e.total_reward, e.mean_similarity, e.length};
        });
    }
    return make_report(direction, env, std::move(clean), std::move(perturbed), settings.base_seed, checkpoint_id,
                       features.version);
}

bool hsd_verdict(const ProbeReport& report, const ProbeReport& clean_report, double eps_threshold,
                 double delta_threshold)
{
    if (report.env != clean_report.env || report.checkpoint_id != clean_report.checkpoint_id)
        throw std::invalid_argument("verdict inputs come from different environments or policies");
    return report.perturbed.mean_similarity <= eps_threshold &&
           report.perturbed.mean_score < delta_threshold * clean_report.perturbed.mean_score;
}

bool fixed_direction_verdict(std::span<const PolicyVerdictInput> policies, double eps_threshold,
                             double delta_threshold)
{
    if (policies.empty()) throw std::invalid_argument("fixed-direction verdict needs at least one policy");
    const Direction& first = policies.front().report->direction;
    if (!std::holds_alternative<PerturbationSpec>(first))
        throw std::invalid_argument("fixed-direction verdict applies to policy-independent directions only");
    bool all = true;
    for (const auto& p : policies) {
        if (!(p.report->direction == first)) throw std::invalid_argument("fixed-direction verdict mixes directions");
        all = hsd_verdict(*p.report, *p.clean_report, eps_threshold, delta_threshold) && all;
    }
    return all;
}

PerturbationSpec with_parameter(const PerturbationSpec& base, const std::string& parameter, double value)
{
    auto reject = [&]() -> PerturbationSpec {
        throw std::invalid_argument("family " + family_name(base) + " has no parameter '" + parameter + "'");
    };
    auto as_count = [&](double v) {
        if (v != std::floor(v)) throw std::invalid_argument(parameter + " must be an integer");
        return v;
    };
    PerturbationSpec out = base;
    return std::visit(
        [&](auto p) -> PerturbationSpec {
            using T = decltype(p);
            if constexpr (std::is_same_v<T, BrightnessContrastParams>) {
                if (parameter == "alpha") p.alpha = value;
                else if (parameter == "beta") p.beta = value;
                else return reject();
            } else if constexpr (std::is_same_v<T, MedianBlurParams>) {
                if (parameter != "kernel" || value < 1) return reject();
                p.kernel = static_cast<std::size_t>(as_count(value));
            } else if constexpr (std::is_same_v<T, RotationParams>) {
                if (parameter != "degrees") return reject();
                p.degrees = value;
            } else if constexpr (std::is_same_v<T, ShiftParams>) {
                if (parameter == "ti") p.ti = static_cast<long>(as_count(value));
                else if (parameter == "tj") p.tj = static_cast<long>(as_count(value));
                else return reject();
            } else if constexpr (std::is_same_v<T, PerspectiveParams>) {
                if (parameter != "pt_norm") return reject();
                p.pt_norm = value;
            } else if constexpr (std::is_same_v<T, DctArtifactParams>) {
                if (parameter != "kappa") return reject();
                p.kappa = value;
            } else {
                return reject();
            }
            return p;
        },
        out);
}

SweepResult sweep(std::span<const SweepPolicy> policies, const EnvSpec& env, const PerturbationSpec& base,
                  const std::string& parameter, std::span<const double> grid, const ProbeSettings& settings,
                  const FeatureNet& features)
{
    if (policies.empty()) throw std::invalid_argument("sweep needs at least one policy");
    if (grid.empty()) throw std::invalid_argument("sweep grid is empty");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1])) throw std::invalid_argument("sweep grid must be strictly increasing");
    // Validate the whole grid before any rollouts.
    std::vector<PerturbationSpec> specs;
    for (double v : grid) {
        specs.push_back(with_parameter(base, parameter, v));
        validate(specs.back());
    }
    env.validate();

    SweepResult out{family_name(base), parameter, {grid.begin(), grid.end()}, {}, {}};
    std::vector<std::vector<RunRecord>> baselines;
    for (const auto& p : policies) {
        out.policies.push_back(p.name);
        baselines.push_back(clean_runs(p.net, env, settings));
    }
    for (std::size_t g = 0; g < grid.size(); ++g) {
        const Direction d = specs[g];
        for (std::size_t k = 0; k < policies.size(); ++k) {
            const auto& pol = policies[k];
            std::vector<RunRecord> perturbed =
                is_identity(d) ? baselines[k] : run_indexed(settings.runs, settings.threads, [&](std::size_t i) {
                    const std::uint64_t seed = settings.base_seed + i;
                    const EpisodeProbe e = probe_episode(pol.net, env, d, seed, features);
                    return RunRecord{seed, e.total_reward, e.mean_similarity, e.length};
                });
            out.points.push_back({grid[g], pol.name,
                                  make_report(d, env, baselines[k], std::move(perturbed), settings.base_seed,
                                              pol.checkpoint_id, features.version)});
        }
    }
    return out;
}

}  // namespace hsprobe
