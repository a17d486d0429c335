// Command-line front end: run, presets, validate, norm.
#include <iostream>

#include "CLI11.hpp"

#include "hhlab/experiment.hpp"

namespace {

using namespace hhlab;

int run_cmd(const std::string& config, const std::string& preset) {
    const std::string path = preset.empty() ? config : preset_path(preset);
    ExperimentConfig cfg = load_config(path);
    ReportBundle b = run_experiment(cfg);
    for (const auto& r : b.results) fmt::print("{:<24} {}\n", r.name, to_string(r.verdict));
    fmt::print("bundle: {}\n", b.directory);
    return b.exit_code;
}

int validate_cmd(const std::string& config, const std::string& preset) {
    const std::string path = preset.empty() ? config : preset_path(preset);
    validate_config(load_config(path));
    fmt::print("{}: ok\n", path);
    return exit_ok;
}

int norm_cmd(const std::string& csv, const std::string& space, int dim) {
    const SpaceIndex idx = parse_space("--space", space, false);
    RadialField f = read_snapshot_csv(csv, dim);
    json out{{"space", {{"s", idx.s.str()}, {"q", idx.q.str()}, {"r", idx.r.str()}}},
             {"value", lorentz_quasi_norm(f, idx)}};
    std::cout << out.dump() << '\n';
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Radial heat-equation lab: solver checks and report bundles"};
    app.require_subcommand(1);

    std::string config, preset, csv, space;
    int dim = 3;

    auto* run = app.add_subcommand("run", "run every check in a config and write a report bundle");
    run->add_option("config", config, "config file");
    run->add_option("--preset", preset, "run a named preset instead");

    auto* presets = app.add_subcommand("presets", "list the preset catalogue");

    auto* validate = app.add_subcommand("validate", "check a config without solving");
    validate->add_option("config", config, "config file");
    validate->add_option("--preset", preset, "validate a named preset instead");

    auto* norm = app.add_subcommand("norm", "Lorentz norm of a snapshot CSV (r,re,im)");
    norm->add_option("snapshot", csv, "snapshot file")->required();
    norm->add_option("--space", space, "index s,q,r")->required();
    norm->add_option("--dim", dim, "space dimension")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : hhlab::exit_config;
    }

    try {
        if (run->parsed() || validate->parsed()) {
            if (config.empty() == preset.empty()) {
                std::cerr << "give either a config file or --preset\n";
                return hhlab::exit_config;
            }
            return run->parsed() ? run_cmd(config, preset) : validate_cmd(config, preset);
        }
        if (presets->parsed()) {
            for (const auto& n : hhlab::list_presets()) std::cout << n << '\n';
            return hhlab::exit_ok;
        }
        return norm_cmd(csv, space, dim);
    } catch (const hhlab::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return hhlab::exit_config;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return hhlab::exit_config;
    }
}
