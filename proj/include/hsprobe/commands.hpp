#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hsprobe/config.hpp"
#include "hsprobe/harness.hpp"
#include "hsprobe/io.hpp"

namespace hsprobe {

// Each command validates its inputs before doing any work, writes into a
// fresh timestamped directory under `out_root`, and prints a one-line summary
// to `log`. Errors are thrown; the CLI maps them to a nonzero exit.

struct TrainOutput {
    std::filesystem::path dir;
    std::filesystem::path checkpoint;
    std::filesystem::path curve;
    Checkpoint result;
};

struct ProbeOutput {
    std::filesystem::path dir;
    ProbeReport report;
};

struct AttackRow {
    std::string source;  // "seed:<episode seed>:<step>" or the observation file
    std::size_t clean_action = 0;
    std::size_t adversarial_action = 0;
    bool success = false;
    double distance = 0.0;
    double similarity = 0.0;
    /// IBP certificate at the attack radius (l-inf ball of that radius).
    bool certified = false;
};

struct AttackOutput {
    std::filesystem::path dir;
    std::vector<AttackRow> rows;
    double success_rate = 0.0;
    double mean_distance = 0.0;  // over successful attacks
    std::optional<ProbeReport> rollout;
};

struct SpectrumOutput {
    std::filesystem::path dir;
    /// Mean band profiles over the input images, one per direction.
    std::vector<BandDelta> deltas;
    std::vector<std::filesystem::path> files;
};

struct SweepOutput {
    std::filesystem::path dir;
    SweepResult result;
};

struct ReportOutput {
    std::filesystem::path dir;
    bool consistent = false;
};

TrainOutput cmd_train(const RunConfig& config, const std::filesystem::path& out_root, std::ostream& log);
ProbeOutput cmd_probe(const RunConfig& config, const std::filesystem::path& out_root, std::ostream& log);
AttackOutput cmd_attack(const RunConfig& config, const std::filesystem::path& out_root, std::ostream& log);
SpectrumOutput cmd_spectrum(const RunConfig& config, const std::filesystem::path& out_root, std::ostream& log);
SweepOutput cmd_sweep(const RunConfig& config, const std::filesystem::path& out_root, std::ostream& log);
/// Re-renders the CSVs of a stored report.json or sweep.json from its raw runs.
ReportOutput cmd_report(const std::filesystem::path& input, const std::filesystem::path& out_root, std::ostream& log);

/// Observations the spectrum command analyses.
std::vector<Observation> spectrum_inputs(const RunConfig& config);

}  // namespace hsprobe
