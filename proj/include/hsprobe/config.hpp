#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "hsprobe/attack.hpp"
#include "hsprobe/envs.hpp"
#include "hsprobe/harness.hpp"
#include "hsprobe/perturb.hpp"
#include "hsprobe/qlearning.hpp"

namespace hsprobe {

using Json = nlohmann::ordered_json;

/// Bad configuration; the message names the offending field.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ProbeSection {
    std::string checkpoint;
    Direction direction = PerturbationSpec{IdentityParams{}};
    ProbeSettings settings;
    double eps_threshold = 0.1;
    double delta_threshold = 0.5;
};

struct AttackSection {
    std::string checkpoint;
    AttackSpec spec;
    /// Greedy clean rollouts from seeds base_seed + i supply the attacked states.
    std::size_t episodes = 2;
    std::size_t max_states = 64;
    std::uint64_t base_seed = 1000;
    /// Attack these stored observations instead of rollout states.
    std::vector<std::string> observations;
    /// Also run the attack as a paired rollout probe.
    bool rollout = false;
};

struct SweepPolicyEntry {
    std::string name;
    std::string checkpoint;
};

struct SweepSection {
    PerturbationSpec base = BrightnessContrastParams{};
    std::string parameter = "beta";
    std::vector<double> grid;
    std::vector<SweepPolicyEntry> policies;
    ProbeSettings settings;
};

enum class SpectrumSource { env, noise };

struct SpectrumSection {
    std::vector<PerturbationSpec> directions;
    SpectrumSource source = SpectrumSource::env;
    std::size_t images = 4;
    /// Noise source only.
    std::size_t rows = 32;
    std::size_t cols = 32;
    double noise_min = 0.0;
    double noise_max = 255.0;
    std::uint64_t seed = 7;
};

struct RunConfig {
    std::uint64_t seed = 7;
    EnvSpec env = pixel_grid_spec(8, 8, 7);
    TrainConfig train;
    ProbeSection probe;
    AttackSection attack;
    SweepSection sweep;
    SpectrumSection spectrum;
    /// Empty: fall back to the output-root environment variable.
    std::string output_dir;

    /// Every section checked against its module's preconditions.
    void validate() const;
};

Json to_json(const EnvSpec& e);
Json to_json(const TrainConfig& t);
Json to_json(const PerturbationSpec& p);
Json to_json(const AttackSpec& a);
Json to_json(const Direction& d);
Json to_json(const RunConfig& c);

EnvSpec env_from_json(const Json& j, const std::string& where = "env");
TrainConfig train_from_json(const Json& j, const std::string& where = "train");
PerturbationSpec perturbation_from_json(const Json& j, const std::string& where);
AttackSpec attack_from_json(const Json& j, const std::string& where);
/// "family" selects a perturbation family or an attack method (fgm, cw).
Direction direction_from_json(const Json& j, const std::string& where);

/// Parses and validates; unknown keys are rejected.
RunConfig config_from_json(const Json& j);
Json read_json_file(const std::filesystem::path& path);
RunConfig load_config(const std::filesystem::path& path);

/// Applies "dotted.key=value"; the value is parsed as JSON, falling back to
/// a plain string.
void apply_override(Json& j, const std::string& assignment);

}  // namespace hsprobe
