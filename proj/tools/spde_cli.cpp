#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "spde/config.hpp"
#include "spde/experiments.hpp"

namespace {

constexpr int kExitFailed = 1;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

spde::RunConfig prepare(const std::string& path, const std::string& seeds, const std::string& out, int threads) {
    spde::RunConfig cfg = spde::load_config(path);
    if (const char* env = std::getenv("SPDE_OUT_DIR"); env && *env) spde::set_config_value(cfg, "out_dir", env);
    if (!out.empty()) spde::set_config_value(cfg, "out_dir", out);
    if (!seeds.empty()) spde::set_config_value(cfg, "seeds", seeds);
    if (threads > 0) spde::set_config_value(cfg, "threads", std::to_string(threads));
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stochastic heat equation experiments"};
    app.require_subcommand(1);

    std::string config_path, seeds, out;
    int threads = 0;
    auto* run = app.add_subcommand("run", "run the experiment named in a config file");
    run->add_option("config", config_path, "config file (key = value, or JSON)")->required();
    run->add_option("--seeds", seeds, "seed range a..b");
    run->add_option("--out", out, "output directory (overrides SPDE_OUT_DIR)");
    run->add_option("--threads", threads, "worker threads; results do not depend on it");

    auto* list = app.add_subcommand("list-experiments", "list experiment names and their keys");

    std::string validate_path;
    auto* validate = app.add_subcommand("validate", "parse and validate a config without running it");
    validate->add_option("config", validate_path, "config file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (list->parsed()) {
            for (const auto& info : spde::experiment_registry()) {
                std::cout << info.name << "  " << info.summary << "\n";
                for (const auto& k : info.knobs) {
                    std::cout << "    " << k.key << " = " << k.default_value << "  # " << k.doc << "\n";
                }
            }
            return 0;
        }
        if (validate->parsed()) {
            const spde::RunConfig cfg = spde::load_config(validate_path);
            std::cout << cfg.canonical();
            std::cout << "config ok: " << cfg.experiment << "\n";
            return 0;
        }
        const spde::RunConfig cfg = prepare(config_path, seeds, out, threads);
        const spde::ExperimentResult result = spde::run_experiment(cfg);
        spde::emit_manifest(cfg, result);
        for (const auto& a : result.assertions) std::cout << spde::format_assertion(a) << "\n";
        std::cout << (result.passed() ? "PASS " : "FAIL ") << cfg.experiment << " (" << result.assertions.size()
                  << " assertions, artifacts in " << cfg.out_dir.string() << ")\n";
        return result.passed() ? 0 : kExitFailed;
    } catch (const spde::ConfigError& e) {
        std::cerr << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}
