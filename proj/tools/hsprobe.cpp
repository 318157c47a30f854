// hsprobe: train policies, probe them along high-sensitivity directions,
// attack them, and analyse observation spectra.

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "hsprobe/commands.hpp"

namespace {

struct Common {
    std::string config;
    std::vector<std::string> overrides;
    std::string out;
};

void add_common(CLI::App* cmd, Common& c, bool needs_config)
{
    auto* opt = cmd->add_option("-c,--config", c.config, "run configuration (JSON)");
    if (needs_config) opt->required()->check(CLI::ExistingFile);
    else opt->check(CLI::ExistingFile);
    cmd->add_option("-s,--set", c.overrides, "override a config field, e.g. --set train.total_steps=5000")
        ->take_all();
    cmd->add_option("-o,--out", c.out, "output root (default: config output_dir, then $HSPROBE_OUT)");
}

hsprobe::RunConfig resolve(const Common& c)
{
    hsprobe::Json j = c.config.empty() ? hsprobe::Json::object() : hsprobe::read_json_file(c.config);
    for (const auto& o : c.overrides) hsprobe::apply_override(j, o);
    return hsprobe::config_from_json(j);
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"hsprobe: probing deep Q-network policies along high-sensitivity directions"};
    app.require_subcommand(1);

    Common train_opts, probe_opts, attack_opts, spectrum_opts, sweep_opts;
    std::string report_input, report_out;
    auto* train = app.add_subcommand("train", "train a Double-DQN policy and write a checkpoint");
    add_common(train, train_opts, false);
    auto* probe = app.add_subcommand("probe", "roll out a checkpoint under a fixed or adversarial direction");
    add_common(probe, probe_opts, false);
    auto* attack = app.add_subcommand("attack", "run FGM or minimal-distance attacks on policy states");
    add_common(attack, attack_opts, false);
    auto* spectrum = app.add_subcommand("spectrum", "Fourier energy-band deltas of perturbation families");
    add_common(spectrum, spectrum_opts, false);
    auto* sweep = app.add_subcommand("sweep", "impact-versus-parameter sweep over several checkpoints");
    add_common(sweep, sweep_opts, false);
    auto* report = app.add_subcommand("report", "re-render CSVs from a stored report.json or sweep.json");
    report->add_option("input", report_input, "report.json or sweep.json")->required()->check(CLI::ExistingFile);
    report->add_option("-o,--out", report_out, "output root");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) {
            const auto cfg = resolve(train_opts);
            hsprobe::cmd_train(cfg, hsprobe::output_root(train_opts.out, cfg), std::cout);
        } else if (probe->parsed()) {
            const auto cfg = resolve(probe_opts);
            hsprobe::cmd_probe(cfg, hsprobe::output_root(probe_opts.out, cfg), std::cout);
        } else if (attack->parsed()) {
            const auto cfg = resolve(attack_opts);
            hsprobe::cmd_attack(cfg, hsprobe::output_root(attack_opts.out, cfg), std::cout);
        } else if (spectrum->parsed()) {
            const auto cfg = resolve(spectrum_opts);
            hsprobe::cmd_spectrum(cfg, hsprobe::output_root(spectrum_opts.out, cfg), std::cout);
        } else if (sweep->parsed()) {
            const auto cfg = resolve(sweep_opts);
            hsprobe::cmd_sweep(cfg, hsprobe::output_root(sweep_opts.out, cfg), std::cout);
        } else if (report->parsed()) {
            const auto out = hsprobe::cmd_report(report_input, hsprobe::output_root(report_out, hsprobe::RunConfig{}),
                                                 std::cout);
            return out.consistent ? 0 : 3;
        }
    } catch (const hsprobe::ConfigError& e) {
        std::cerr << "hsprobe: invalid configuration: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "hsprobe: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
