#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "hsprobe/config.hpp"
#include "hsprobe/harness.hpp"
#include "hsprobe/qlearning.hpp"
#include "hsprobe/spectral.hpp"

namespace hsprobe {

inline constexpr int kCheckpointVersion = 1;

// CSV schema tags, written as the first "# schema=..." line of each file.
inline constexpr const char* kCurveSchema = "hsprobe-curve-v1";
inline constexpr const char* kRunsSchema = "hsprobe-runs-v1";
inline constexpr const char* kSweepSchema = "hsprobe-sweep-v1";
inline constexpr const char* kSweepRunsSchema = "hsprobe-sweep-runs-v1";
inline constexpr const char* kBandSchema = "hsprobe-band-v1";
inline constexpr const char* kSpectrumSummarySchema = "hsprobe-spectrum-summary-v1";
inline constexpr const char* kAttackSchema = "hsprobe-attack-v1";

/// Writes to a sibling temp file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

/// Fresh <root>/<command>-<UTC timestamp>[-n] directory; never reuses one.
std::filesystem::path make_run_dir(const std::filesystem::path& root, const std::string& command);

/// --out flag, then config.output_dir, then $HSPROBE_OUT, then "hsprobe-runs".
std::filesystem::path output_root(const std::string& flag, const RunConfig& config);

std::string checkpoint_to_string(const Checkpoint& c);
/// Rejects version mismatch, truncation, and an id not matching the parameters.
Checkpoint checkpoint_from_string(const std::string& text);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string curve_csv(const std::vector<EpisodeRecord>& curve);

Json to_json(const RunRecord& r);
Json to_json(const Aggregate& a);
/// Everything needed to re-run the probe: config echo, seeds, checkpoint id,
/// feature-net version, raw runs.
Json report_to_json(const ProbeReport& r, const Json& config_echo);
ProbeReport report_from_json(const Json& j);

/// One row per run: run,seed,clean_score,clean_length,score,similarity,length,score_min
std::string runs_csv(const ProbeReport& r);

Json sweep_to_json(const SweepResult& s, const Json& config_echo);
SweepResult sweep_from_json(const Json& j);
/// One row per (grid value, policy).
std::string sweep_csv(const SweepResult& s);
/// One row per (grid value, policy, run).
std::string sweep_runs_csv(const SweepResult& s);

std::string band_csv(const BandDelta& d);

/// Full-precision decimal rendering used in every CSV.
std::string format_double(double v);

}  // namespace hsprobe
