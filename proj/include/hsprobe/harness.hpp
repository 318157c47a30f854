#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "hsprobe/attack.hpp"
#include "hsprobe/envs.hpp"
#include "hsprobe/network.hpp"
#include "hsprobe/perceptual.hpp"
#include "hsprobe/perturb.hpp"

namespace hsprobe {

/// A fixed transform applied to every state, or an attack recomputed per state.
using Direction = std::variant<PerturbationSpec, AttackSpec>;

std::string describe(const Direction& d);
void validate(const Direction& d);
bool is_identity(const Direction& d);

struct TraceStep {
    Observation state;      // kept only when states are recorded
    Observation perturbed;  // kept only when states are recorded
    std::size_t action = 0;
    double reward = 0.0;
    double similarity = 0.0;
    /// Attack directions only.
    double attack_distance = 0.0;
    bool attack_success = false;
};

struct EpisodeProbe {
    std::uint64_t seed = 0;
    double total_reward = 0.0;
    double mean_similarity = 0.0;
    std::size_t length = 0;
    std::vector<TraceStep> trace;
};

/// One rollout: the policy acts on the perturbed state, the environment
/// steps on the true one.
EpisodeProbe probe_episode(const ParamSet& policy, const EnvSpec& env, const Direction& direction,
                           std::uint64_t episode_seed, const FeatureNet& features, bool record_states = false);

/// (clean - adv) / (clean - min); rejects clean <= min.
double impact(double score_clean, double score_adv, double score_min);

struct RunRecord {
    std::uint64_t seed = 0;
    double score = 0.0;
    double similarity = 0.0;
    std::size_t length = 0;
    friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

struct Aggregate {
    std::size_t runs = 0;
    double mean_score = 0.0;
    double sem_score = 0.0;
    double mean_similarity = 0.0;
    double sem_similarity = 0.0;
};

double mean_of(std::span<const double> xs);
/// Sample standard deviation over sqrt(n); 0 for a single value.
double standard_error(std::span<const double> xs);
Aggregate aggregate(std::span<const RunRecord> runs);

struct ProbeSettings {
    std::size_t runs = 10;
    /// Run i uses episode seed base_seed + i for both clean and perturbed rollouts.
    std::uint64_t base_seed = 1000;
    std::size_t threads = 1;
};

struct ProbeReport {
    Direction direction;
    EnvSpec env;
    std::vector<RunRecord> clean_runs;
    std::vector<RunRecord> runs;
    Aggregate clean;
    Aggregate perturbed;
    double score_clean = 0.0;
    double score_min = 0.0;
    double impact = 0.0;
    std::uint64_t base_seed = 0;
    std::string checkpoint_id;
    std::string feature_net_version;

    std::vector<std::uint64_t> seeds() const;
    /// Stored aggregates and impact equal a recomputation from the stored runs.
    bool consistent() const;
};

/// Paired clean and perturbed rollouts; results are ordered by run index
/// whatever the thread count.
ProbeReport probe(const ParamSet& policy, const std::string& checkpoint_id, const EnvSpec& env,
                  const Direction& direction, const ProbeSettings& settings, const FeatureNet& features);

/// Clean rollouts only, reusable as the baseline of several probes.
std::vector<RunRecord> clean_runs(const ParamSet& policy, const EnvSpec& env, const ProbeSettings& settings);

/// Builds a report from already computed runs.
ProbeReport make_report(const Direction& direction, const EnvSpec& env, std::vector<RunRecord> clean,
                        std::vector<RunRecord> perturbed, std::uint64_t base_seed, std::string checkpoint_id,
                        std::string feature_net_version);

/// Mean similarity <= eps_threshold and mean perturbed return < delta_threshold * mean clean return.
/// clean_report must come from the same policy and environment.
bool hsd_verdict(const ProbeReport& report, const ProbeReport& clean_report, double eps_threshold,
                 double delta_threshold);

struct PolicyVerdictInput {
    const ProbeReport* report = nullptr;
    const ProbeReport* clean_report = nullptr;
};

/// A fixed direction qualifies iff it qualifies against every supplied policy.
bool fixed_direction_verdict(std::span<const PolicyVerdictInput> policies, double eps_threshold,
                             double delta_threshold);

/// Copy of `base` with one numeric parameter replaced.
PerturbationSpec with_parameter(const PerturbationSpec& base, const std::string& parameter, double value);

struct SweepPolicy {
    std::string name;
    ParamSet net;
    std::string checkpoint_id;
};

struct SweepPoint {
    double value = 0.0;
    std::string policy;
    ProbeReport report;
};

struct SweepResult {
    std::string family;
    std::string parameter;
    std::vector<double> grid;
    std::vector<std::string> policies;
    /// Ordered by grid value, then by policy order.
    std::vector<SweepPoint> points;
};

SweepResult sweep(std::span<const SweepPolicy> policies, const EnvSpec& env, const PerturbationSpec& base,
                  const std::string& parameter, std::span<const double> grid, const ProbeSettings& settings,
                  const FeatureNet& features);

}  // namespace hsprobe
