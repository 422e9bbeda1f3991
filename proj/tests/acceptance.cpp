// Acceptance run: one PASS/FAIL line per criterion. Thresholds and runtime
// budgets are fixed here, independent of the experiment defaults.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "spde/config.hpp"
#include "spde/experiments.hpp"
#include "spde/heat_kernel.hpp"

namespace fs = std::filesystem;
using namespace spde;

namespace {

struct Outcome {
    bool passed = false;
    std::string summary;
};

struct Criterion {
    int id;
    std::string title;
    double budget_seconds;
    std::function<Outcome(const fs::path&)> run;
};

std::string num(double v) {
    std::ostringstream s;
    s.precision(4);
    s << v;
    return s.str();
}

/// Runs an experiment from pinned config text and folds its assertions into one line.
Outcome experiment(const std::string& text, const fs::path& out) {
    RunConfig cfg = parse_config(text);
    set_config_value(cfg, "out_dir", out.string());
    const ExperimentResult r = run_experiment(cfg);
    emit_manifest(cfg, r);
    Outcome o{r.passed(), ""};
    for (const auto& a : r.assertions) {
        if (!o.summary.empty()) o.summary += ", ";
        o.summary += a.name + "=" + num(a.value) + (a.passed ? "" : " [fail: " + num(a.threshold) + "]");
    }
    return o;
}

Outcome series_bound(const fs::path&) {
    const KernelSpec spec = KernelSpec::for_floor(1e-4, 1e-12);
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
        const double t = 1e-4 * std::pow(1e5, u(rng));
        worst = std::max(worst, l2_time_integral(spec, t, u(rng)));
    }
    const double odd = std::abs(l2_time_integral(spec, std::numeric_limits<double>::infinity(), 0.5) - 0.125);
    return {worst <= 1.0 / 6.0 && odd < 1e-10, "max=" + num(worst) + " (<= 1/6), |limit - 1/8|=" + num(odd)};
}

std::string read_all(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome determinism(const fs::path& out) {
    const std::vector<std::pair<std::string, std::string>> runs{
        {"picard", "experiment = picard-convergence\nseeds = 1..50\n"},
        {"positivity", "experiment = positivity-probe\nseeds = 1..32\n"},
        {"kolmogorov", "experiment = kolmogorov-fit\nseeds = 1..16\n"},
    };
    std::size_t compared = 0;
    std::vector<std::string> mismatched;
    for (const auto& [name, text] : runs) {
        std::vector<fs::path> dirs;
        std::vector<ExperimentResult> results;
        for (int threads : {1, 8}) {
            RunConfig cfg = parse_config(text);
            dirs.push_back(out / (name + "_t" + std::to_string(threads)));
            set_config_value(cfg, "out_dir", dirs.back().string());
            set_config_value(cfg, "threads", std::to_string(threads));
            results.push_back(run_experiment(cfg));
            emit_manifest(cfg, results.back());
        }
        if (results[0].artifacts != results[1].artifacts) mismatched.push_back(name + ": artifact lists");
        for (const auto& rel : results[0].artifacts) {
            ++compared;
            if (read_all(dirs[0] / rel) != read_all(dirs[1] / rel)) mismatched.push_back(name + "/" + rel.string());
        }
        auto m0 = nlohmann::json::parse(read_all(dirs[0] / "manifest.json"));
        auto m1 = nlohmann::json::parse(read_all(dirs[1] / "manifest.json"));
        m0.erase("timestamp");
        m1.erase("timestamp");
        if (m0 != m1) mismatched.push_back(name + "/manifest.json");
    }
    std::string s = std::to_string(compared) + " artifacts compared at 1 vs 8 threads";
    for (const auto& m : mismatched) s += "; differs: " + m;
    return {mismatched.empty() && compared > 0, s};
}

const std::vector<Criterion>& criteria() {
    static const std::vector<Criterion> list{
        {1, "kernel identities", 10.0,
         [](const fs::path& o) {
             return experiment("experiment = kernel-checks\ntriples = 1000\nt_floor = 1e-4\ntail_tol = 1e-12\n"
                               "semigroup_max = 1e-8\ngaussian_slack = 1e-8\n", o);
         }},
        {2, "time-integrated L2 bound", 1.0, series_bound},
        {3, "lemma ratio sweeps", 120.0,
         [](const fs::path& o) {
             return experiment("experiment = kernel-lemmas\ntuples = 1000\np = 6, 12\ndrift_max = 0.1\n", o);
         }},
        {4, "Picard convergence", 300.0,
         [](const fs::path& o) {
             return experiment("experiment = picard-convergence\nfamily = nonlinear\nT = 0.5\nnx = 64\nnt = 2048\n"
                               "seeds = 1..50\nk_max = 12\ntol = 1e-4\ndecrease_after = 2\n", o);
         }},
        {5, "solver vs finite-difference oracle", 300.0,
         [](const fs::path& o) {
             return experiment("experiment = solver-oracle\nfamily = additive\nnx = 64\nnt = 4096\nseeds = 1..10\n"
                               "disc_max = 0.05\n", o);
         }},
        {6, "additive-case Gaussian law", 600.0,
         [](const fs::path& o) {
             return experiment("experiment = density-gaussian\nfamily = additive\nseeds = 1..10000\nt = 0.25\nx = 0.5\n"
                               "ks_max = 0.05\n", o);
         }},
        {7, "additive derivative identity and norm", 300.0,
         [](const fs::path& o) {
             return experiment("experiment = malliavin-additive\nfamily = additive\nsub_grid = 32\nidentity_max = 1e-6\n"
                               "norm_rel_max = 0.03\n", o);
         }},
        {8, "positivity probe", 900.0,
         [](const fs::path& o) {
             return experiment("experiment = positivity-probe\nfamily = nonlinear\nseeds = 1..500\nx = 0.5\nl = 0.25\n"
                               "eps = 0.04, 0.02, 0.01, 0.005\nfraction_min = 1\n", o);
         }},
        {9, "localized derivative exponent", 600.0,
         [](const fs::path& o) {
             return experiment("experiment = derivative-localization\nfamily = nonlinear\n"
                               "eps = 0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1\nexponent_min = 0.4\n", o);
         }},
        {10, "Kolmogorov exponents", 900.0,
         [](const fs::path& o) {
             return experiment("experiment = kolmogorov-fit\nfamily = nonlinear\np = 12\nalpha_min = 1.5\nbeta_min = 3\n", o);
         }},
        {11, "supremum density", 1200.0,
         [](const fs::path& o) {
             return experiment("experiment = sup-density\nseeds = 1..10000\nl = 0.25\nl1_max = 0.1\n", o);
         }},
        {12, "moment bound", 600.0,
         [](const fs::path& o) {
             return experiment("experiment = moment-report\nfamily = nonlinear\np = 2, 8\ndrift_max = 0.15\n", o);
         }},
        {13, "thread-count determinism", 1800.0, determinism},
    };
    return list;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance criteria"};
    int only = 0;
    std::string out = (fs::temp_directory_path() / "spde_acceptance").string();
    app.add_option("--only", only, "run a single criterion (1-13)");
    app.add_option("--out", out, "scratch directory for artifacts");
    CLI11_PARSE(app, argc, argv);

    bool all = true;
    for (const auto& c : criteria()) {
        if (only != 0 && c.id != only) continue;
        const fs::path dir = fs::path(out) / ("criterion_" + std::to_string(c.id));
        fs::remove_all(dir);
        fs::create_directories(dir);
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run(dir);
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = secs < c.budget_seconds;
        const bool ok = o.passed && in_time;
        all = all && ok;
        std::printf("criterion %2d %s  %s: %s [%.1f s of %.0f s%s]\n", c.id, ok ? "PASS" : "FAIL", c.title.c_str(),
                    o.summary.c_str(), secs, c.budget_seconds, in_time ? "" : ", over budget");
        std::fflush(stdout);
    }
    return all ? 0 : 1;
}
