#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "spde/config.hpp"
#include "spde/experiments.hpp"
#include "spde/stats.hpp"

using namespace spde;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("spde_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(SPDE_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("key = value grammar") {
    const RunConfig c = parse_config(R"(
        # comment line
        experiment = positivity-probe
        nx = 32      # trailing comment
        nt = 800
        seeds = 0x10..0x12
        eps = 0.04, 0.02
    )");
    CHECK(c.experiment == "positivity-probe");
    CHECK(c.grid.nx == 32);
    CHECK(c.grid.nt == 800);
    CHECK(c.family == "nonlinear");
    CHECK(c.seeds.first == 16);
    CHECK(c.seeds.size() == 3);
    CHECK(c.seeds.at(2) == 18);
    CHECK(c.numbers("eps") == std::vector<double>{0.04, 0.02});
    CHECK(c.number("l") == 0.25);
    CHECK_THROWS_AS(c.text("nope"), ConfigError);
}

TEST_CASE("JSON configs are equivalent") {
    const RunConfig a = parse_config("experiment = kernel-checks\ntriples = 50\nseeds = 3..4\n");
    const RunConfig b = parse_config(R"({"experiment": "kernel-checks", "triples": 50, "seeds": "3..4"})");
    CHECK(a.canonical() == b.canonical());
    const RunConfig c = parse_config(R"({"experiment": "positivity-probe", "eps": [0.04, 0.01]})");
    CHECK(c.numbers("eps") == std::vector<double>{0.04, 0.01});
}

TEST_CASE("config errors") {
    CHECK_THROWS_AS(parse_config("nx = 8\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("experiment = nothing\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("experiment = kernel-checks\nnx = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("experiment = kernel-checks\nnt = 0\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("experiment = kernel-checks\nT = -1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("experiment = kernel-checks\nbogus = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("experiment = kernel-checks\nseeds = 5..2\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("experiment = kernel-checks\nnx = 8\nnx = 16\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("experiment = kernel-checks\nnx = eight\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("experiment = kernel-checks\nthis line has no equals\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("experiment = kernel-checks\nfamily = cubic\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("experiment = kernel-checks\nfamily = nonlinear\nfamily_params = 0.5, 1.5\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("{\"experiment\": "), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/config.cfg"), ConfigError);
}

TEST_CASE("seed ranges and hashing") {
    CHECK(format_seed_range(parse_seed_range("7")) == "7..7");
    CHECK(parse_seed_range(" 1 .. 10000 ").size() == 10000);
    CHECK(parse_seed_range("1..10").prefix(4).last == 4);
    CHECK_THROWS_AS(parse_seed_range("a..b"), ConfigError);
    // FNV-1a 64 reference values
    CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("canonical form ignores output location and threads") {
    RunConfig a = parse_config("experiment = kernel-checks\n");
    RunConfig b = a;
    set_config_value(b, "out_dir", "/tmp/elsewhere");
    set_config_value(b, "threads", "8");
    CHECK(a.canonical() == b.canonical());
    set_config_value(b, "seeds", "2..3");
    CHECK(a.canonical() != b.canonical());
    CHECK_THROWS_AS(set_config_value(b, "threads", "0"), ConfigError);
}

TEST_CASE("every experiment parses with its defaults") {
    CHECK(experiment_registry().size() == 11);
    for (const auto& info : experiment_registry()) {
        const RunConfig c = parse_config("experiment = " + info.name + "\n");
        CHECK(c.experiment == info.name);
        CHECK(find_experiment(info.name).name == info.name);
    }
    CHECK_THROWS_AS(find_experiment("nope"), ConfigError);
}

TEST_CASE("least squares and trapezoid") {
    const std::vector<double> x{1, 2, 3, 4}, y{3, 5, 7, 9};
    const LineFit f = least_squares(x, y);
    CHECK(f.slope == doctest::Approx(2.0));
    CHECK(f.intercept == doctest::Approx(1.0));
    const std::vector<double> h{0.1, 0.2, 0.4}, m{2e-3, 1.6e-2, 0.128};
    CHECK(power_law_exponent(h, m) == doctest::Approx(3.0));
    CHECK(trapezoid(x, y) == doctest::Approx(18.0));
}

TEST_CASE("experiment run writes a manifest of its artifacts") {
    RunConfig c = parse_config("experiment = kernel-checks\ntriples = 100\nsemigroup_triples = 20\nmass_triples = 20\n");
    const fs::path dir = scratch("manifest");
    set_config_value(c, "out_dir", dir.string());
    const ExperimentResult r = run_experiment(c);
    CHECK(r.passed());
    CHECK_FALSE(r.assertions.empty());
    const fs::path mpath = emit_manifest(c, r);
    const auto m = nlohmann::json::parse(slurp(mpath));
    CHECK(m["experiment"] == "kernel-checks");
    CHECK(m["seed_range"] == "1..1");
    CHECK(m["config"] == c.canonical());
    CHECK(m["artifacts"].size() == r.artifacts.size());
    for (const auto& a : m["artifacts"]) {
        const std::string bytes = slurp(dir / a["path"].get<std::string>());
        CHECK(a["bytes"] == bytes.size());
        std::ostringstream hex;
        hex << std::hex << fnv1a(bytes);
        CHECK(a["fnv1a"].get<std::string>().find(hex.str()) != std::string::npos);
    }
    CHECK(format_assertion(r.assertions[0]).rfind("PASS ", 0) == 0);
}

TEST_CASE("artifacts do not depend on the thread count") {
    const std::string text = "experiment = picard-convergence\nnx = 16\nnt = 256\nseeds = 1..6\n";
    RunConfig one = parse_config(text), many = parse_config(text);
    const fs::path d1 = scratch("threads1"), d4 = scratch("threads4");
    set_config_value(one, "out_dir", d1.string());
    set_config_value(many, "out_dir", d4.string());
    set_config_value(many, "threads", "4");
    const ExperimentResult a = run_experiment(one), b = run_experiment(many);
    REQUIRE(a.artifacts == b.artifacts);
    for (const auto& rel : a.artifacts) CHECK(slurp(d1 / rel) == slurp(d4 / rel));
}

TEST_CASE("command-line exit codes") {
    const fs::path dir = scratch("cli");
    std::ofstream(dir / "good.cfg") << "experiment = kernel-checks\ntriples = 50\nsemigroup_triples = 10\nmass_triples = 10\n";
    std::ofstream(dir / "bad.cfg") << "experiment = kernel-checks\nnx = 1\n";
    std::ofstream(dir / "failing.cfg") << "experiment = kernel-checks\ntriples = 50\nsemigroup_triples = 10\n"
                                          "mass_triples = 10\nsemigroup_max = -1\n";
    CHECK(run_cli("validate " + (dir / "good.cfg").string()) == 0);
    CHECK(run_cli("validate " + (dir / "bad.cfg").string()) == 2);
    CHECK(run_cli("validate " + (dir / "missing.cfg").string()) == 2);
    CHECK(run_cli("list-experiments") == 0);
    CHECK(run_cli("frobnicate") == 2);
    CHECK(run_cli("run " + (dir / "good.cfg").string() + " --out " + (dir / "out").string()) == 0);
    CHECK(fs::exists(dir / "out" / "manifest.json"));
    CHECK(run_cli("run " + (dir / "failing.cfg").string() + " --out " + (dir / "fail").string()) == 1);
    CHECK(run_cli("run " + (dir / "good.cfg").string() + " --seeds 9..1 --out " + (dir / "x").string()) == 2);
    // SPDE_OUT_DIR is honoured when --out is absent
    const std::string env = "SPDE_OUT_DIR=" + (dir / "env").string() + " ";
    const int status = std::system((env + SPDE_CLI_PATH + " run " + (dir / "good.cfg").string() + " > /dev/null").c_str());
    CHECK(WEXITSTATUS(status) == 0);
    CHECK(fs::exists(dir / "env" / "manifest.json"));
}
