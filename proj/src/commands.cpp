#include "hsprobe/commands.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "hsprobe/perceptual.hpp"
#include "hsprobe/rng.hpp"

namespace hsprobe {

namespace {

std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

void write_json(const std::filesystem::path& path, const Json& j)
{
    write_file_atomic(path, j.dump(2) + "\n");
}

Checkpoint require_checkpoint(const std::string& path, const std::string& field)
{
    if (path.empty()) throw ConfigError(field + " is required");
    if (!std::filesystem::exists(path)) throw ConfigError(field + ": checkpoint " + path + " does not exist");
    return load_checkpoint(path);
}

}  // namespace

TrainOutput cmd_train(const RunConfig& config, const std::filesystem::path& out_root, std::ostream& log)
{
    config.validate();
    TrainOutput out;
    out.result = train(config.env, config.train);
    out.dir = make_run_dir(out_root, "train");
    out.checkpoint = out.dir / "checkpoint.txt";
    out.curve = out.dir / "curve.csv";
    save_checkpoint(out.checkpoint, out.result);
    write_file_atomic(out.curve, curve_csv(out.result.curve));
    write_json(out.dir / "config.json", to_json(config));
    log << "trained " << to_string(config.train.objective) << " for " << config.train.total_steps << " steps ("
        << out.result.curve.size() << " episodes), checkpoint " << out.result.id() << " -> " << out.checkpoint.string()
        << "\n";
    return out;
}

ProbeOutput cmd_probe(const RunConfig& config, const std::filesystem::path& out_root, std::ostream& log)
{
    config.validate();
    const Checkpoint ck = require_checkpoint(config.probe.checkpoint, "probe.checkpoint");
    const FeatureNet features = default_feature_net();
    ProbeOutput out;
    out.report = probe(ck.params, ck.id(), ck.env, config.probe.direction, config.probe.settings, features);
    out.dir = make_run_dir(out_root, "probe");
    write_json(out.dir / "report.json", report_to_json(out.report, to_json(config)));
    write_file_atomic(out.dir / "runs.csv", runs_csv(out.report));
    log << "impact=" << fmt(out.report.impact) << " similarity=" << fmt(out.report.perturbed.mean_similarity)
        << " similarity_sem=" << fmt(out.report.perturbed.sem_similarity)
        << " score=" << fmt(out.report.perturbed.mean_score) << " score_sem=" << fmt(out.report.perturbed.sem_score)
        << " clean=" << fmt(out.report.score_clean) << " direction=" << describe(out.report.direction)
        << " report=" << out.dir.string() << "\n";
    return out;
}

AttackOutput cmd_attack(const RunConfig& config, const std::filesystem::path& out_root, std::ostream& log)
{
    config.validate();
    const Checkpoint ck = require_checkpoint(config.attack.checkpoint, "attack.checkpoint");
    const AttackSpec& spec = config.attack.spec;
    const FeatureNet features = default_feature_net();

    std::vector<std::pair<std::string, Observation>> states;
    if (!config.attack.observations.empty()) {
        for (const auto& file : config.attack.observations) states.emplace_back(file, read_pgm(file));
    } else {
        auto env = make_env(ck.env);
        for (std::size_t e = 0; e < config.attack.episodes && states.size() < config.attack.max_states; ++e) {
            const std::uint64_t seed = config.attack.base_seed + e;
            Observation s = env->reset(seed);
            for (std::size_t t = 0; states.size() < config.attack.max_states; ++t) {
                states.emplace_back("seed:" + std::to_string(seed) + ":" + std::to_string(t), s);
                StepResult r = env->step(greedy_action(ck.params, s));
                if (r.terminal) break;
                s = std::move(r.observation);
            }
        }
    }
    for (const auto& [name, s] : states)
        if (Shape{s.height, s.width, s.channels} != ck.params.input_shape())
            throw ConfigError("attack input " + name + " does not match the network input shape");

    AttackOutput out;
    std::size_t successes = 0;
    double distance_sum = 0.0;
    for (const auto& [name, s] : states) {
        const AttackResult r = run_attack(ck.params, s, spec);
        AttackRow row{name, r.clean_action, r.adversarial_action, r.success, r.distance, 0.0, false};
        row.similarity = r.adversarial == s ? 0.0 : lpips(features, s, r.adversarial);
        row.certified = spec.epsilon > 0.0 && certified(ck.params, s, spec.epsilon);
        if (r.success) {
            ++successes;
            distance_sum += r.distance;
        }
        out.rows.push_back(row);
    }
    out.success_rate = states.empty() ? 0.0 : static_cast<double>(successes) / static_cast<double>(states.size());
    out.mean_distance = successes ? distance_sum / static_cast<double>(successes) : 0.0;
    if (config.attack.rollout) {
        ProbeSettings settings = config.probe.settings;
        settings.base_seed = config.attack.base_seed;
        out.rollout = probe(ck.params, ck.id(), ck.env, spec, settings, features);
    }

    out.dir = make_run_dir(out_root, "attack");
    std::string csv = std::string("# schema=") + kAttackSchema + "\n";
    csv += "state,source,clean_action,adversarial_action,success,distance,similarity,certified\n";
    for (std::size_t i = 0; i < out.rows.size(); ++i) {
        const auto& r = out.rows[i];
        csv += std::to_string(i) + "," + r.source + "," + std::to_string(r.clean_action) + "," +
               std::to_string(r.adversarial_action) + "," + (r.success ? "1" : "0") + "," + format_double(r.distance) +
               "," + format_double(r.similarity) + "," + (r.certified ? "1" : "0") + "\n";
    }
    write_file_atomic(out.dir / "attack.csv", csv);
    Json summary{{"schema", "hsprobe-attack-summary-v1"},
                 {"spec", to_json(spec)},
                 {"checkpoint_id", ck.id()},
                 {"feature_net_version", features.version},
                 {"states", out.rows.size()},
                 {"success_rate", out.success_rate},
                 {"mean_distance", out.mean_distance},
                 {"config", to_json(config)}};
    write_json(out.dir / "attack.json", summary);
    if (out.rollout) {
        write_json(out.dir / "report.json", report_to_json(*out.rollout, to_json(config)));
        write_file_atomic(out.dir / "runs.csv", runs_csv(*out.rollout));
    }
    log << "states=" << out.rows.size() << " success_rate=" << fmt(out.success_rate)
        << " mean_distance=" << fmt(out.mean_distance);
    if (out.rollout) log << " impact=" << fmt(out.rollout->impact);
    log << " report=" << out.dir.string() << "\n";
    return out;
}

std::vector<Observation> spectrum_inputs(const RunConfig& config)
{
    const SpectrumSection& sp = config.spectrum;
    std::vector<Observation> out;
    if (sp.source == SpectrumSource::env) {
        auto env = make_env(config.env);
        for (std::size_t i = 0; i < sp.images; ++i) out.push_back(env->reset(sp.seed + i));
        return out;
    }
    for (std::size_t i = 0; i < sp.images; ++i) {
        Rng rng(derive_seed(sp.seed, i));
        Observation s;
        s.height = sp.rows;
        s.width = sp.cols;
        s.channels = 1;
        s.pixels.resize(sp.rows * sp.cols);
        for (auto& v : s.pixels) v = rng.uniform(sp.noise_min, sp.noise_max);
        out.push_back(std::move(s));
    }
    return out;
}

SpectrumOutput cmd_spectrum(const RunConfig& config, const std::filesystem::path& out_root, std::ostream& log)
{
    config.validate();
    if (config.spectrum.directions.empty()) throw ConfigError("spectrum.directions must list at least one direction");
    const std::vector<Observation> images = spectrum_inputs(config);
    SpectrumOutput out;
    for (const auto& d : config.spectrum.directions) {
        BandDelta mean;
        for (const auto& s : images) {
            const BandDelta b = band_delta(s, hsprobe::apply(d, s));
            if (mean.base.empty()) {
                mean.base.assign(b.base.size(), 0.0);
                mean.perturbed.assign(b.base.size(), 0.0);
                mean.delta.assign(b.base.size(), 0.0);
            }
            for (std::size_t f = 0; f < b.base.size(); ++f) {
                mean.base[f] += b.base[f];
                mean.perturbed[f] += b.perturbed[f];
                mean.delta[f] += b.delta[f];
            }
            mean.low_band_delta += b.low_band_delta;
            mean.high_band_delta += b.high_band_delta;
        }
        const double n = static_cast<double>(images.size());
        for (std::size_t f = 0; f < mean.base.size(); ++f) {
            mean.base[f] /= n;
            mean.perturbed[f] /= n;
            mean.delta[f] /= n;
        }
        mean.low_band_delta /= n;
        mean.high_band_delta /= n;
        out.deltas.push_back(std::move(mean));
    }

    out.dir = make_run_dir(out_root, "spectrum");
    std::string summary = std::string("# schema=") + kSpectrumSummarySchema + "\n";
    summary += "direction,family,description,low_band_delta,high_band_delta,total_delta,file\n";
    for (std::size_t i = 0; i < out.deltas.size(); ++i) {
        const auto& d = config.spectrum.directions[i];
        const std::string file = "band-" + std::to_string(i) + "-" + family_name(d) + ".csv";
        write_file_atomic(out.dir / file, band_csv(out.deltas[i]));
        out.files.push_back(out.dir / file);
        double total = 0.0;
        for (double v : out.deltas[i].delta) total += v;
        std::string desc = describe(d);
        for (auto& ch : desc)
            if (ch == ',') ch = ';';
        summary += std::to_string(i) + "," + family_name(d) + "," + desc + "," +
                   format_double(out.deltas[i].low_band_delta) + "," + format_double(out.deltas[i].high_band_delta) +
                   "," + format_double(total) + "," + file + "\n";
        log << describe(d) << ": low_band_delta=" << fmt(out.deltas[i].low_band_delta)
            << " high_band_delta=" << fmt(out.deltas[i].high_band_delta) << "\n";
    }
    write_file_atomic(out.dir / "spectrum.csv", summary);
    write_json(out.dir / "config.json", to_json(config));
    log << "spectrum of " << images.size() << " images -> " << out.dir.string() << "\n";
    return out;
}

SweepOutput cmd_sweep(const RunConfig& config, const std::filesystem::path& out_root, std::ostream& log)
{
    config.validate();
    if (config.sweep.grid.empty()) throw ConfigError("sweep.grid must not be empty");
    if (config.sweep.policies.empty()) throw ConfigError("sweep.policies must list at least one checkpoint");
    std::vector<SweepPolicy> policies;
    std::optional<EnvSpec> env;
    for (std::size_t i = 0; i < config.sweep.policies.size(); ++i) {
        const auto& entry = config.sweep.policies[i];
        Checkpoint ck = require_checkpoint(entry.checkpoint, "sweep.policies[" + std::to_string(i) + "].checkpoint");
        if (env && !(*env == ck.env)) throw ConfigError("sweep checkpoints were trained on different environments");
        env = ck.env;
        policies.push_back({entry.name, std::move(ck.params), ck.id()});
    }
    const FeatureNet features = default_feature_net();
    SweepOutput out;
    out.result = sweep(policies, *env, config.sweep.base, config.sweep.parameter, config.sweep.grid,
                       config.sweep.settings, features);
    out.dir = make_run_dir(out_root, "sweep");
    write_json(out.dir / "sweep.json", sweep_to_json(out.result, to_json(config)));
    write_file_atomic(out.dir / "sweep.csv", sweep_csv(out.result));
    write_file_atomic(out.dir / "sweep_runs.csv", sweep_runs_csv(out.result));
    log << "sweep " << out.result.family << "." << out.result.parameter << " over " << out.result.grid.size()
        << " values x " << policies.size() << " policies -> " << out.dir.string() << "\n";
    return out;
}

ReportOutput cmd_report(const std::filesystem::path& input, const std::filesystem::path& out_root, std::ostream& log)
{
    const Json j = read_json_file(input);
    const std::string schema = j.value("schema", "");
    ReportOutput out;
    auto rebuilt = [](const ProbeReport& r) {
        return make_report(r.direction, r.env, r.clean_runs, r.runs, r.base_seed, r.checkpoint_id,
                           r.feature_net_version);
    };
    if (schema == "hsprobe-report-v1") {
        const ProbeReport stored = report_from_json(j);
        const ProbeReport fresh = rebuilt(stored);
        out.consistent = stored.consistent();
        out.dir = make_run_dir(out_root, "report");
        write_file_atomic(out.dir / "runs.csv", runs_csv(fresh));
        log << "report " << input.string() << ": impact=" << fmt(fresh.impact)
            << (out.consistent ? " consistent" : " INCONSISTENT") << " -> " << out.dir.string() << "\n";
    } else if (schema == "hsprobe-sweep-v1") {
        SweepResult s = sweep_from_json(j);
        out.consistent = true;
        for (auto& p : s.points) {
            out.consistent = out.consistent && p.report.consistent();
            p.report = rebuilt(p.report);
        }
        out.dir = make_run_dir(out_root, "report");
        write_file_atomic(out.dir / "sweep.csv", sweep_csv(s));
        write_file_atomic(out.dir / "sweep_runs.csv", sweep_runs_csv(s));
        log << "sweep " << input.string() << ": " << s.points.size() << " points"
            << (out.consistent ? " consistent" : " INCONSISTENT") << " -> " << out.dir.string() << "\n";
    } else {
        throw FormatError(input.string() + " is neither a probe report nor a sweep result");
    }
    return out;
}

}  // namespace hsprobe
