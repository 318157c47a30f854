#include "hsprobe/io.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>
#include <system_error>

#include <unistd.h>

namespace hsprobe {

std::string format_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents)
{
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << contents;
        out.flush();
        if (!out) throw std::runtime_error("error writing " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw std::runtime_error("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
    }
}

std::filesystem::path make_run_dir(const std::filesystem::path& root, const std::string& command)
{
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm utc{};
    gmtime_r(&now, &utc);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y%m%dT%H%M%SZ", &utc);
    std::filesystem::create_directories(root);
    const std::string base = command + "-" + stamp;
    for (int n = 0;; ++n) {
        const std::filesystem::path dir = root / (n == 0 ? base : base + "-" + std::to_string(n));
        // create_directory reports false when the directory already exists.
        if (std::filesystem::create_directory(dir)) return dir;
    }
}

std::filesystem::path output_root(const std::string& flag, const RunConfig& config)
{
    if (!flag.empty()) return flag;
    if (!config.output_dir.empty()) return config.output_dir;
    if (const char* env = std::getenv("HSPROBE_OUT"); env && *env) return env;
    return "hsprobe-runs";
}

// ---------------------------------------------------------------------------
// Checkpoints

std::string checkpoint_to_string(const Checkpoint& c)
{
    std::ostringstream out;
    out << "hsprobe-checkpoint " << kCheckpointVersion << '\n';
    out << "id " << c.id() << '\n';
    out << "config " << Json{{"env", to_json(c.env)}, {"train", to_json(c.config)}}.dump() << '\n';
    out << "curve " << c.curve.size() << '\n';
    for (const auto& e : c.curve) out << format_double(e.episode_return) << ' ' << e.length << '\n';
    write_paramset(out, c.params, c.id());
    out << "end-checkpoint\n";
    return out.str();
}

Checkpoint checkpoint_from_string(const std::string& text)
{
    std::istringstream in(text);
    std::string word, line;
    int version = 0;
    if (!(in >> word >> version) || word != "hsprobe-checkpoint")
        throw FormatError("not an hsprobe checkpoint (missing header)");
    if (version != kCheckpointVersion)
        throw FormatError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                          std::to_string(kCheckpointVersion) + ")");
    std::string id;
    if (!(in >> word >> id) || word != "id") throw FormatError("checkpoint truncated before id");
    if (!(in >> word) || word != "config") throw FormatError("checkpoint truncated before config");
    std::getline(in >> std::ws, line);
    Checkpoint c;
    try {
        const Json j = Json::parse(line);
        c.env = env_from_json(j.at("env"), "checkpoint.env");
        c.config = train_from_json(j.at("train"), "checkpoint.train");
    } catch (const std::exception& e) {
        throw FormatError(std::string("checkpoint config unreadable: ") + e.what());
    }
    std::size_t n = 0;
    if (!(in >> word >> n) || word != "curve") throw FormatError("checkpoint truncated before curve");
    for (std::size_t i = 0; i < n; ++i) {
        std::string ret;
        EpisodeRecord e;
        if (!(in >> ret >> e.length)) throw FormatError("checkpoint curve truncated");
        char* end = nullptr;
        e.episode_return = std::strtod(ret.c_str(), &end);
        if (end == ret.c_str() || *end != '\0') throw FormatError("checkpoint curve has a bad value '" + ret + "'");
        c.curve.push_back(e);
    }
    std::string tag;
    c.params = read_paramset(in, &tag);
    if (!(in >> word) || word != "end-checkpoint") throw FormatError("checkpoint truncated (missing end marker)");
    if (c.id() != id || tag != id) throw FormatError("checkpoint id does not match its parameters");
    if (c.params.input_shape() != c.env.observation_shape() || c.params.output_shape() != Shape{c.env.action_count})
        throw FormatError("checkpoint network does not fit its environment");
    return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c)
{
    write_file_atomic(path, checkpoint_to_string(c));
}

Checkpoint load_checkpoint(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return checkpoint_from_string(buf.str());
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

std::string curve_csv(const std::vector<EpisodeRecord>& curve)
{
    std::string out = std::string("# schema=") + kCurveSchema + "\nepisode,return,length\n";
    for (std::size_t i = 0; i < curve.size(); ++i)
        out += std::to_string(i) + "," + format_double(curve[i].episode_return) + "," + std::to_string(curve[i].length) +
               "\n";
    return out;
}

// ---------------------------------------------------------------------------
// Reports

Json to_json(const RunRecord& r)
{
    return Json{{"seed", r.seed}, {"score", r.score}, {"similarity", r.similarity}, {"length", r.length}};
}

Json to_json(const Aggregate& a)
{
    return Json{{"runs", a.runs},
                {"mean_score", a.mean_score},
                {"sem_score", a.sem_score},
                {"mean_similarity", a.mean_similarity},
                {"sem_similarity", a.sem_similarity}};
}

namespace {

RunRecord run_from_json(const Json& j)
{
    return {j.at("seed").get<std::uint64_t>(), j.at("score").get<double>(), j.at("similarity").get<double>(),
            j.at("length").get<std::size_t>()};
}

Aggregate aggregate_from_json(const Json& j)
{
    return {j.at("runs").get<std::size_t>(), j.at("mean_score").get<double>(), j.at("sem_score").get<double>(),
            j.at("mean_similarity").get<double>(), j.at("sem_similarity").get<double>()};
}

Json runs_json(const std::vector<RunRecord>& runs)
{
    Json out = Json::array();
    for (const auto& r : runs) out.push_back(to_json(r));
    return out;
}

std::vector<RunRecord> runs_from_json(const Json& j)
{
    std::vector<RunRecord> out;
    for (const auto& r : j) out.push_back(run_from_json(r));
    return out;
}

}  // namespace

Json report_to_json(const ProbeReport& r, const Json& config_echo)
{
    return Json{{"schema", "hsprobe-report-v1"},
                {"direction", to_json(r.direction)},
                {"direction_description", describe(r.direction)},
                {"env", to_json(r.env)},
                {"checkpoint_id", r.checkpoint_id},
                {"feature_net_version", r.feature_net_version},
                {"base_seed", r.base_seed},
                {"seeds", r.seeds()},
                {"run_count", r.runs.size()},
                {"score_clean", r.score_clean},
                {"score_min", r.score_min},
                {"impact", r.impact},
                {"clean", to_json(r.clean)},
                {"perturbed", to_json(r.perturbed)},
                {"clean_runs", runs_json(r.clean_runs)},
                {"runs", runs_json(r.runs)},
                {"config", config_echo}};
}

ProbeReport report_from_json(const Json& j)
{
    try {
        if (j.at("schema").get<std::string>() != "hsprobe-report-v1") throw FormatError("unknown report schema");
        ProbeReport r;
        r.direction = direction_from_json(j.at("direction"), "report.direction");
        r.env = env_from_json(j.at("env"), "report.env");
        r.checkpoint_id = j.at("checkpoint_id").get<std::string>();
        r.feature_net_version = j.at("feature_net_version").get<std::string>();
        r.base_seed = j.at("base_seed").get<std::uint64_t>();
        r.score_clean = j.at("score_clean").get<double>();
        r.score_min = j.at("score_min").get<double>();
        r.impact = j.at("impact").get<double>();
        r.clean = aggregate_from_json(j.at("clean"));
        r.perturbed = aggregate_from_json(j.at("perturbed"));
        r.clean_runs = runs_from_json(j.at("clean_runs"));
        r.runs = runs_from_json(j.at("runs"));
        return r;
    } catch (const FormatError&) {
        throw;
    } catch (const std::exception& e) {
        throw FormatError(std::string("report unreadable: ") + e.what());
    }
}

std::string runs_csv(const ProbeReport& r)
{
    std::string out = std::string("# schema=") + kRunsSchema + "\n";
    out += "run,seed,clean_score,clean_length,score,similarity,length,score_min\n";
    for (std::size_t i = 0; i < r.runs.size(); ++i) {
        const auto& c = r.clean_runs.at(i);
        const auto& p = r.runs[i];
        out += std::to_string(i) + "," + std::to_string(p.seed) + "," + format_double(c.score) + "," +
               std::to_string(c.length) + "," + format_double(p.score) + "," + format_double(p.similarity) + "," +
               std::to_string(p.length) + "," + format_double(r.score_min) + "\n";
    }
    return out;
}

Json sweep_to_json(const SweepResult& s, const Json& config_echo)
{
    Json points = Json::array();
    for (const auto& p : s.points)
        points.push_back(Json{{"value", p.value}, {"policy", p.policy}, {"report", report_to_json(p.report, Json())}});
    return Json{{"schema", "hsprobe-sweep-v1"}, {"family", s.family},     {"parameter", s.parameter},
                {"grid", s.grid},               {"policies", s.policies}, {"points", points},
                {"config", config_echo}};
}

SweepResult sweep_from_json(const Json& j)
{
    try {
        if (j.at("schema").get<std::string>() != "hsprobe-sweep-v1") throw FormatError("unknown sweep schema");
        SweepResult s;
        s.family = j.at("family").get<std::string>();
        s.parameter = j.at("parameter").get<std::string>();
        s.grid = j.at("grid").get<std::vector<double>>();
        s.policies = j.at("policies").get<std::vector<std::string>>();
        for (const auto& p : j.at("points"))
            s.points.push_back(
                {p.at("value").get<double>(), p.at("policy").get<std::string>(), report_from_json(p.at("report"))});
        return s;
    } catch (const FormatError&) {
        throw;
    } catch (const std::exception& e) {
        throw FormatError(std::string("sweep unreadable: ") + e.what());
    }
}

std::string sweep_csv(const SweepResult& s)
{
    std::string out = std::string("# schema=") + kSweepSchema + "\n";
    out += "parameter,value,policy,checkpoint_id,runs,score_clean,score_mean,score_sem,similarity_mean,"
           "similarity_sem,score_min,impact\n";
    for (const auto& p : s.points) {
        const auto& r = p.report;
        out += s.parameter + "," + format_double(p.value) + "," + p.policy + "," + r.checkpoint_id + "," +
               std::to_string(r.runs.size()) + "," + format_double(r.score_clean) + "," +
               format_double(r.perturbed.mean_score) + "," + format_double(r.perturbed.sem_score) + "," +
               format_double(r.perturbed.mean_similarity) + "," + format_double(r.perturbed.sem_similarity) + "," +
               format_double(r.score_min) + "," + format_double(r.impact) + "\n";
    }
    return out;
}

std::string sweep_runs_csv(const SweepResult& s)
{
    std::string out = std::string("# schema=") + kSweepRunsSchema + "\n";
    out += "value,policy,run,seed,clean_score,score,similarity,length\n";
    for (const auto& p : s.points)
        for (std::size_t i = 0; i < p.report.runs.size(); ++i) {
            const auto& r = p.report.runs[i];
            out += format_double(p.value) + "," + p.policy + "," + std::to_string(i) + "," + std::to_string(r.seed) +
                   "," + format_double(p.report.clean_runs.at(i).score) + "," + format_double(r.score) + "," +
                   format_double(r.similarity) + "," + std::to_string(r.length) + "\n";
        }
    return out;
}

std::string band_csv(const BandDelta& d)
{
    std::ostringstream out;
    out << "# schema=" << kBandSchema << '\n';
    write_band_csv(out, d);
    return out.str();
}

}  // namespace hsprobe
