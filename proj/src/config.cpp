#include "hsprobe/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace hsprobe {

namespace {

// Reads fields of one JSON object and remembers which keys were consumed.
class Reader {
public:
    Reader(const Json& j, std::string where) : j_(j), where_(std::move(where))
    {
        if (!j_.is_object()) throw ConfigError(where_ + " must be an object");
    }

    bool has(const std::string& key) const { return j_.contains(key); }
    std::string path(const std::string& key) const { return where_ + "." + key; }

    const Json* raw(const std::string& key)
    {
        if (!j_.contains(key)) return nullptr;
        used_.insert(key);
        return &j_.at(key);
    }

    void get(const std::string& key, double& out)
    {
        if (const Json* v = raw(key)) {
            if (!v->is_number()) throw ConfigError(path(key) + " must be a number");
            out = v->get<double>();
        }
    }
    template <class U>
        requires(std::is_unsigned_v<U> && !std::is_same_v<U, bool>)
    void get(const std::string& key, U& out)
    {
        if (const Json* v = raw(key)) {
            if (v->is_number_unsigned()) out = v->get<U>();
            else if (v->is_number_integer() && v->get<std::int64_t>() >= 0) out = static_cast<U>(v->get<std::int64_t>());
            else if (v->is_number_float() && v->get<double>() >= 0 && v->get<double>() == std::floor(v->get<double>()))
                out = static_cast<U>(v->get<double>());
            else throw ConfigError(path(key) + " must be a non-negative integer");
        }
    }
    void get(const std::string& key, long& out)
    {
        if (const Json* v = raw(key)) {
            if (!v->is_number_integer()) throw ConfigError(path(key) + " must be an integer");
            out = v->get<long>();
        }
    }
    void get(const std::string& key, bool& out)
    {
        if (const Json* v = raw(key)) {
            if (!v->is_boolean()) throw ConfigError(path(key) + " must be true or false");
            out = v->get<bool>();
        }
    }
    void get(const std::string& key, std::string& out)
    {
        if (const Json* v = raw(key)) {
            if (!v->is_string()) throw ConfigError(path(key) + " must be a string");
            out = v->get<std::string>();
        }
    }
    void get(const std::string& key, std::vector<double>& out)
    {
        if (const Json* v = raw(key)) {
            if (!v->is_array()) throw ConfigError(path(key) + " must be a list of numbers");
            out.clear();
            for (const auto& x : *v) {
                if (!x.is_number()) throw ConfigError(path(key) + " must be a list of numbers");
                out.push_back(x.get<double>());
            }
        }
    }
    void get(const std::string& key, std::vector<std::string>& out)
    {
        if (const Json* v = raw(key)) {
            if (!v->is_array()) throw ConfigError(path(key) + " must be a list of strings");
            out.clear();
            for (const auto& x : *v) {
                if (!x.is_string()) throw ConfigError(path(key) + " must be a list of strings");
                out.push_back(x.get<std::string>());
            }
        }
    }

    void finish() const
    {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!used_.count(it.key())) throw ConfigError("unknown key " + path(it.key()));
    }

private:
    const Json& j_;
    std::string where_;
    std::set<std::string> used_;
};

// Runs a module validator and reports its complaint against a config path.
template <class Fn>
void checked(const std::string& where, Fn fn)
{
    try {
        fn();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(where + ": " + e.what());
    }
}

std::string corner_mode_name(CornerMode m)
{
    return m == CornerMode::fixed ? "fixed" : "seeded";
}

}  // namespace

Json to_json(const EnvSpec& e)
{
    return Json{{"kind", to_string(e.kind)},
                {"rows", e.rows},
                {"cols", e.cols},
                {"cell_pixels", e.cell_pixels},
                {"action_count", e.action_count},
                {"gamma", e.gamma},
                {"episode_cap", e.episode_cap},
                {"score_min", e.score_min},
                {"score_max", e.score_max},
                {"seed", e.seed},
                {"wall_density", e.wall_density}};
}

Json to_json(const TrainConfig& t)
{
    return Json{{"objective", to_string(t.objective)},
                {"optimizer", to_string(t.optimizer.rule)},
                {"learning_rate", t.optimizer.learning_rate},
                {"beta1", t.optimizer.beta1},
                {"beta2", t.optimizer.beta2},
                {"adam_epsilon", t.optimizer.epsilon},
                {"gamma", t.gamma},
                {"epsilon_start", t.exploration.start},
                {"epsilon_end", t.exploration.end},
                {"epsilon_decay_steps", t.exploration.decay_steps},
                {"target_sync", t.target_sync},
                {"robust_radius", t.robust_radius},
                {"robust_start", t.robust_start},
                {"robust_ramp", t.robust_ramp},
                {"sa_cap", t.sa_cap},
                {"sa_weight", t.sa_weight},
                {"adversarial_weight", t.adversarial_weight},
                {"huber_threshold", t.huber_threshold},
                {"grad_clip_norm", t.grad_clip_norm},
                {"total_steps", t.total_steps},
                {"learning_starts", t.learning_starts},
                {"train_every", t.train_every},
                {"batch_size", t.batch_size},
                {"replay_capacity", t.replay.capacity},
                {"priority_exponent", t.replay.priority_exponent},
                {"priority_floor", t.replay.priority_floor},
                {"importance_start", t.importance_start},
                {"importance_end", t.importance_end},
                {"conv_channels", t.conv_channels},
                {"hidden_units", t.hidden_units},
                {"seed", t.seed}};
}

Json to_json(const PerturbationSpec& p)
{
    Json j{{"family", family_name(p)}};
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, BrightnessContrastParams>) {
                j["alpha"] = v.alpha;
                j["beta"] = v.beta;
            } else if constexpr (std::is_same_v<T, MedianBlurParams>) {
                j["kernel"] = v.kernel;
            } else if constexpr (std::is_same_v<T, RotationParams>) {
                j["degrees"] = v.degrees;
            } else if constexpr (std::is_same_v<T, ShiftParams>) {
                j["ti"] = v.ti;
                j["tj"] = v.tj;
                j["circular"] = v.circular;
            } else if constexpr (std::is_same_v<T, PerspectiveParams>) {
                j["pt_norm"] = v.pt_norm;
                j["corners"] = corner_mode_name(v.mode);
                j["seed"] = v.seed;
            } else if constexpr (std::is_same_v<T, DctArtifactParams>) {
                j["kappa"] = v.kappa;
            }
        },
        p);
    return j;
}

Json to_json(const AttackSpec& a)
{
    return Json{{"family", to_string(a.method)},
                {"norm", to_string(a.norm)},
                {"epsilon", a.epsilon},
                {"iterations", a.iterations},
                {"step_size", a.step_size},
                {"penalty_init", a.penalty_init},
                {"penalty_max", a.penalty_max},
                {"binary_steps", a.binary_steps},
                {"confidence", a.confidence}};
}

Json to_json(const Direction& d)
{
    return std::visit([](const auto& v) { return to_json(v); }, d);
}

Json to_json(const RunConfig& c)
{
    Json probe{{"checkpoint", c.probe.checkpoint},
               {"direction", to_json(c.probe.direction)},
               {"runs", c.probe.settings.runs},
               {"base_seed", c.probe.settings.base_seed},
               {"threads", c.probe.settings.threads},
               {"eps_threshold", c.probe.eps_threshold},
               {"delta_threshold", c.probe.delta_threshold}};
    Json attack{{"checkpoint", c.attack.checkpoint},
                {"spec", to_json(c.attack.spec)},
                {"episodes", c.attack.episodes},
                {"max_states", c.attack.max_states},
                {"base_seed", c.attack.base_seed},
                {"observations", c.attack.observations},
                {"rollout", c.attack.rollout}};
    Json policies = Json::array();
    for (const auto& p : c.sweep.policies) policies.push_back(Json{{"name", p.name}, {"checkpoint", p.checkpoint}});
    Json sweep{{"base", to_json(c.sweep.base)},
               {"parameter", c.sweep.parameter},
               {"grid", c.sweep.grid},
               {"policies", policies},
               {"runs", c.sweep.settings.runs},
               {"base_seed", c.sweep.settings.base_seed},
               {"threads", c.sweep.settings.threads}};
    Json directions = Json::array();
    for (const auto& d : c.spectrum.directions) directions.push_back(to_json(d));
    Json spectrum{{"directions", directions},
                  {"source", c.spectrum.source == SpectrumSource::env ? "env" : "noise"},
                  {"images", c.spectrum.images},
                  {"rows", c.spectrum.rows},
                  {"cols", c.spectrum.cols},
                  {"noise_min", c.spectrum.noise_min},
                  {"noise_max", c.spectrum.noise_max},
                  {"seed", c.spectrum.seed}};
    return Json{{"seed", c.seed},         {"output_dir", c.output_dir}, {"env", to_json(c.env)},
                {"train", to_json(c.train)}, {"probe", probe},         {"attack", attack},
                {"sweep", sweep},           {"spectrum", spectrum}};
}

EnvSpec env_from_json(const Json& j, const std::string& where)
{
    Reader r(j, where);
    std::string kind = "pixelgrid";
    r.get("kind", kind);
    EnvSpec e;
    checked(where + ".kind", [&] { e.kind = env_kind_from_string(kind); });
    std::uint64_t seed = 0;
    r.get("seed", seed);
    e = e.kind == EnvKind::pixel_grid ? pixel_grid_spec(8, 8, seed) : mini_pong_spec(seed);
    r.get("rows", e.rows);
    r.get("cols", e.cols);
    r.get("cell_pixels", e.cell_pixels);
    r.get("action_count", e.action_count);
    r.get("gamma", e.gamma);
    r.get("episode_cap", e.episode_cap);
    // PixelGrid's worst return follows the cap unless given explicitly.
    if (e.kind == EnvKind::pixel_grid) e.score_min = -0.01 * static_cast<double>(e.episode_cap);
    r.get("score_min", e.score_min);
    r.get("score_max", e.score_max);
    r.get("wall_density", e.wall_density);
    r.finish();
    checked(where, [&] { e.validate(); });
    return e;
}

TrainConfig train_from_json(const Json& j, const std::string& where)
{
    Reader r(j, where);
    TrainConfig t;
    std::string objective = to_string(t.objective), rule = to_string(t.optimizer.rule);
    r.get("objective", objective);
    r.get("optimizer", rule);
    checked(where + ".objective", [&] { t.objective = objective_from_string(objective); });
    checked(where + ".optimizer", [&] { t.optimizer.rule = update_rule_from_string(rule); });
    r.get("learning_rate", t.optimizer.learning_rate);
    r.get("beta1", t.optimizer.beta1);
    r.get("beta2", t.optimizer.beta2);
    r.get("adam_epsilon", t.optimizer.epsilon);
    r.get("gamma", t.gamma);
    r.get("epsilon_start", t.exploration.start);
    r.get("epsilon_end", t.exploration.end);
    r.get("epsilon_decay_steps", t.exploration.decay_steps);
    r.get("target_sync", t.target_sync);
    r.get("robust_radius", t.robust_radius);
    r.get("robust_start", t.robust_start);
    r.get("robust_ramp", t.robust_ramp);
    r.get("sa_cap", t.sa_cap);
    r.get("sa_weight", t.sa_weight);
    r.get("adversarial_weight", t.adversarial_weight);
    r.get("huber_threshold", t.huber_threshold);
    r.get("grad_clip_norm", t.grad_clip_norm);
    r.get("total_steps", t.total_steps);
    r.get("learning_starts", t.learning_starts);
    r.get("train_every", t.train_every);
    r.get("batch_size", t.batch_size);
    r.get("replay_capacity", t.replay.capacity);
    r.get("priority_exponent", t.replay.priority_exponent);
    r.get("priority_floor", t.replay.priority_floor);
    r.get("importance_start", t.importance_start);
    r.get("importance_end", t.importance_end);
    r.get("conv_channels", t.conv_channels);
    r.get("hidden_units", t.hidden_units);
    r.get("seed", t.seed);
    r.finish();
    checked(where, [&] { t.validate(); });
    return t;
}

PerturbationSpec perturbation_from_json(const Json& j, const std::string& where)
{
    Reader r(j, where);
    std::string family;
    r.get("family", family);
    if (family.empty()) throw ConfigError(where + ".family is required");
    PerturbationSpec out;
    if (family == "identity") {
        out = IdentityParams{};
    } else if (family == "brightness_contrast") {
        BrightnessContrastParams p;
        r.get("alpha", p.alpha);
        r.get("beta", p.beta);
        out = p;
    } else if (family == "median_blur") {
        MedianBlurParams p;
        r.get("kernel", p.kernel);
        out = p;
    } else if (family == "rotation") {
        RotationParams p;
        r.get("degrees", p.degrees);
        out = p;
    } else if (family == "shift") {
        ShiftParams p;
        r.get("ti", p.ti);
        r.get("tj", p.tj);
        r.get("circular", p.circular);
        out = p;
    } else if (family == "perspective") {
        PerspectiveParams p;
        std::string corners = "fixed";
        r.get("pt_norm", p.pt_norm);
        r.get("corners", corners);
        r.get("seed", p.seed);
        if (corners == "fixed") p.mode = CornerMode::fixed;
        else if (corners == "seeded") p.mode = CornerMode::seeded;
        else throw ConfigError(where + ".corners must be fixed or seeded");
        out = p;
    } else if (family == "dct_artifacts") {
        DctArtifactParams p;
        r.get("kappa", p.kappa);
        out = p;
    } else {
        throw ConfigError(where + ".family '" + family + "' is not a perturbation family");
    }
    r.finish();
    checked(where, [&] { validate(out); });
    return out;
}

AttackSpec attack_from_json(const Json& j, const std::string& where)
{
    Reader r(j, where);
    AttackSpec a;
    std::string method = "fgm", norm = to_string(a.norm);
    r.get("family", method);
    r.get("norm", norm);
    checked(where + ".family", [&] { a.method = attack_method_from_string(method); });
    checked(where + ".norm", [&] { a.norm = norm_from_string(norm); });
    r.get("epsilon", a.epsilon);
    r.get("iterations", a.iterations);
    r.get("step_size", a.step_size);
    r.get("penalty_init", a.penalty_init);
    r.get("penalty_max", a.penalty_max);
    r.get("binary_steps", a.binary_steps);
    r.get("confidence", a.confidence);
    r.finish();
    checked(where, [&] { a.validate(); });
    return a;
}

Direction direction_from_json(const Json& j, const std::string& where)
{
    if (!j.is_object() || !j.contains("family") || !j.at("family").is_string())
        throw ConfigError(where + ".family is required");
    const std::string family = j.at("family").get<std::string>();
    if (family == "fgm" || family == "cw") return attack_from_json(j, where);
    return perturbation_from_json(j, where);
}

void RunConfig::validate() const
{
    checked("env", [&] { env.validate(); });
    checked("train", [&] { train.validate(); });
    checked("probe.direction", [&] { hsprobe::validate(probe.direction); });
    if (probe.settings.runs < 1) throw ConfigError("probe.runs must be >= 1");
    if (probe.settings.threads < 1) throw ConfigError("probe.threads must be >= 1");
    if (!(probe.eps_threshold >= 0.0)) throw ConfigError("probe.eps_threshold must be >= 0");
    if (!(probe.delta_threshold > 0.0)) throw ConfigError("probe.delta_threshold must be > 0");
    checked("attack.spec", [&] { attack.spec.validate(); });
    if (attack.episodes < 1 && attack.observations.empty()) throw ConfigError("attack.episodes must be >= 1");
    if (attack.max_states < 1) throw ConfigError("attack.max_states must be >= 1");
    for (std::size_t i = 1; i < sweep.grid.size(); ++i)
        if (!(sweep.grid[i] > sweep.grid[i - 1])) throw ConfigError("sweep.grid must be strictly increasing");
    for (double v : sweep.grid)
        checked("sweep.grid", [&] { hsprobe::validate(with_parameter(sweep.base, sweep.parameter, v)); });
    if (sweep.settings.runs < 1) throw ConfigError("sweep.runs must be >= 1");
    if (sweep.settings.threads < 1) throw ConfigError("sweep.threads must be >= 1");
    for (const auto& d : spectrum.directions) checked("spectrum.directions", [&] { hsprobe::validate(d); });
    if (spectrum.images < 1) throw ConfigError("spectrum.images must be >= 1");
    if (spectrum.rows < 1 || spectrum.cols < 1) throw ConfigError("spectrum image size must be >= 1");
    if (!(spectrum.noise_min >= 0.0 && spectrum.noise_min <= spectrum.noise_max && spectrum.noise_max <= kPixelMax))
        throw ConfigError("spectrum noise range must satisfy 0 <= noise_min <= noise_max <= 255");
}

RunConfig config_from_json(const Json& j)
{
    Reader r(j, "config");
    RunConfig c;
    r.get("seed", c.seed);
    r.get("output_dir", c.output_dir);

    // The global seed fills in section seeds that are not given.
    auto with_seed = [&](const Json* section) {
        Json s = section ? *section : Json::object();
        if (s.is_object() && !s.contains("seed")) s["seed"] = c.seed;
        return s;
    };
    c.env = env_from_json(with_seed(r.raw("env")), "env");
    c.train = train_from_json(with_seed(r.raw("train")), "train");

    if (const Json* p = r.raw("probe")) {
        Reader pr(*p, "probe");
        pr.get("checkpoint", c.probe.checkpoint);
        if (const Json* d = pr.raw("direction")) c.probe.direction = direction_from_json(*d, "probe.direction");
        pr.get("runs", c.probe.settings.runs);
        pr.get("base_seed", c.probe.settings.base_seed);
        pr.get("threads", c.probe.settings.threads);
        pr.get("eps_threshold", c.probe.eps_threshold);
        pr.get("delta_threshold", c.probe.delta_threshold);
        pr.finish();
    }
    if (const Json* a = r.raw("attack")) {
        Reader ar(*a, "attack");
        ar.get("checkpoint", c.attack.checkpoint);
        if (const Json* s = ar.raw("spec")) c.attack.spec = attack_from_json(*s, "attack.spec");
        ar.get("episodes", c.attack.episodes);
        ar.get("max_states", c.attack.max_states);
        ar.get("base_seed", c.attack.base_seed);
        ar.get("observations", c.attack.observations);
        ar.get("rollout", c.attack.rollout);
        ar.finish();
    }
    if (const Json* s = r.raw("sweep")) {
        Reader sr(*s, "sweep");
        if (const Json* b = sr.raw("base")) c.sweep.base = perturbation_from_json(*b, "sweep.base");
        sr.get("parameter", c.sweep.parameter);
        sr.get("grid", c.sweep.grid);
        if (const Json* pol = sr.raw("policies")) {
            if (!pol->is_array()) throw ConfigError("sweep.policies must be a list");
            for (std::size_t i = 0; i < pol->size(); ++i) {
                Reader one((*pol)[i], "sweep.policies[" + std::to_string(i) + "]");
                SweepPolicyEntry e;
                one.get("name", e.name);
                one.get("checkpoint", e.checkpoint);
                one.finish();
                if (e.name.empty() || e.checkpoint.empty())
                    throw ConfigError("sweep.policies[" + std::to_string(i) + "] needs name and checkpoint");
                c.sweep.policies.push_back(e);
            }
        }
        sr.get("runs", c.sweep.settings.runs);
        sr.get("base_seed", c.sweep.settings.base_seed);
        sr.get("threads", c.sweep.settings.threads);
        sr.finish();
    }
    Json spectrum = with_seed(r.raw("spectrum"));
    {
        Reader sr(spectrum, "spectrum");
        if (const Json* d = sr.raw("directions")) {
            if (!d->is_array()) throw ConfigError("spectrum.directions must be a list");
            for (std::size_t i = 0; i < d->size(); ++i)
                c.spectrum.directions.push_back(
                    perturbation_from_json((*d)[i], "spectrum.directions[" + std::to_string(i) + "]"));
        }
        std::string source = "env";
        sr.get("source", source);
        if (source == "env") c.spectrum.source = SpectrumSource::env;
        else if (source == "noise") c.spectrum.source = SpectrumSource::noise;
        else throw ConfigError("spectrum.source must be env or noise");
        sr.get("images", c.spectrum.images);
        sr.get("rows", c.spectrum.rows);
        sr.get("cols", c.spectrum.cols);
        sr.get("noise_min", c.spectrum.noise_min);
        sr.get("noise_max", c.spectrum.noise_max);
        sr.get("seed", c.spectrum.seed);
        sr.finish();
    }
    r.finish();
    c.validate();
    return c;
}

Json read_json_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

RunConfig load_config(const std::filesystem::path& path)
{
    return config_from_json(read_json_file(path));
}

void apply_override(Json& j, const std::string& assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
    const std::string key = assignment.substr(0, eq), text = assignment.substr(eq + 1);
    Json value;
    try {
        value = Json::parse(text);
    } catch (const Json::parse_error&) {
        value = text;
    }
    Json* node = &j;
    std::stringstream parts(key);
    std::string part;
    std::vector<std::string> path;
    while (std::getline(parts, part, '.')) path.push_back(part);
    for (std::size_t i = 0; i < path.size(); ++i) {
        if (path[i].empty()) throw ConfigError("override key '" + key + "' has an empty component");
        if (node->is_null()) *node = Json::object();
        if (!node->is_object()) throw ConfigError("override key '" + key + "' descends into a non-object");
        if (i + 1 == path.size()) (*node)[path[i]] = value;
        else node = &(*node)[path[i]];
    }
}

}  // namespace hsprobe
