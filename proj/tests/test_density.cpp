#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <stdexcept>

#include "spde/density.hpp"

using namespace spde;

namespace {

std::vector<double> normal_draws(std::size_t n, std::uint64_t seed, double mean = 0.0, double sd = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> d(mean, sd);
    std::vector<double> out(n);
    for (auto& v : out) v = d(rng);
    return out;
}

}  // namespace

TEST_CASE("KDE of normal draws") {
    const auto x = normal_draws(10000, 1, 0.3, 2.0);
    const DensityEstimate e = estimate_density(x);
    CHECK(e.samples == 10000);
    CHECK(e.eval_grid.size() == kDensityGridPoints);
    CHECK(e.bandwidth == doctest::Approx(1.06 * std::sqrt(sample_variance(x)) * std::pow(10000.0, -0.2)));
    CHECK(e.mass() == doctest::Approx(1.0).epsilon(0.01));
    for (double d : e.density) CHECK(d >= 0.0);
    const double peak = 1.0 / (2.0 * std::sqrt(2.0 * std::numbers::pi));
    CHECK(e(0.3) == doctest::Approx(peak).epsilon(0.05));
    CHECK(e(1e6) == 0.0);
    CHECK(ks_statistic(x, [](double v) { return normal_cdf(v, 0.3, 2.0); }) < 0.02);
    CHECK(ks_statistic(x, [](double v) { return normal_cdf(v, 1.0, 2.0); }) > 0.1);
}

TEST_CASE("KS statistic for a tiny sample by hand") {
    // F = uniform on [0,1]; empirical steps at 0.2, 0.4, 0.9
    const std::vector<double> v{0.9, 0.2, 0.4};
    const double ks = ks_statistic(v, [](double x) { return std::clamp(x, 0.0, 1.0); });
    CHECK(ks == doctest::Approx(std::max({0.2, 1.0 / 3 - 0.2, 2.0 / 3 - 0.4, 0.4 - 1.0 / 3, 0.9 - 2.0 / 3, 1.0 - 0.9})));
}

TEST_CASE("normal CDF and moments") {
    CHECK(normal_cdf(0.0) == 0.5);
    CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-12));
    CHECK(normal_cdf(3.0, 1.0, 2.0) == doctest::Approx(normal_cdf(1.0)).epsilon(1e-15));
    const std::vector<double> v{1.0, 2.0, 3.0, 6.0};
    CHECK(sample_mean(v) == 3.0);
    CHECK(sample_variance(v) == doctest::Approx(14.0 / 3.0));
}

TEST_CASE("degenerate and short samples") {
    const std::vector<double> same(500, 1.25);
    CHECK_THROWS_AS(estimate_density(same), DegenerateLaw);
    try {
        estimate_density(same);
    } catch (const DegenerateLaw& e) {
        CHECK(e.location() == 1.25);
    }
    CHECK_THROWS_AS(estimate_density(std::vector<double>(99, 0.5)), std::invalid_argument);
    const auto x = normal_draws(200, 3);
    CHECK(estimate_density(x, BandwidthRule::fixed(0.5)).bandwidth == 0.5);
    CHECK_THROWS(estimate_density(x, BandwidthRule::fixed(-1.0)));
}

TEST_CASE("L1 distance") {
    const auto a = estimate_density(normal_draws(4000, 5));
    const auto far = estimate_density(normal_draws(4000, 6, 40.0));
    CHECK(l1_distance(a, a) == 0.0);
    CHECK(l1_distance(a, far) == doctest::Approx(2.0).epsilon(0.02));
    // more draws from the same law: L1 shrinks with the sample size
    const auto b = estimate_density(normal_draws(8000, 7));
    CHECK(l1_distance(a, b) < 0.06);
}

TEST_CASE("refinement report") {
    const std::vector<double> p(300, 2.0), q(300, 2.0), r(300, 3.0);
    const auto same = refinement_stability(p, q);
    CHECK(same.coarse_degenerate);
    CHECK(same.fine_degenerate);
    CHECK(same.l1 == 0.0);
    const auto moved = refinement_stability(p, r);
    CHECK(moved.l1 == 2.0);
    CHECK(moved.location_gap == 1.0);
    const auto mixed = refinement_stability(p, normal_draws(300, 8));
    CHECK(mixed.coarse_degenerate);
    CHECK_FALSE(mixed.fine_degenerate);
    CHECK(mixed.l1 == 2.0);
    const auto fine = refinement_stability(normal_draws(3000, 9), normal_draws(3000, 10));
    CHECK(fine.l1 < 0.1);
}

TEST_CASE("window supremum on a deterministic field") {
    Problem p;
    p.grid = GridSpec(16, 64, 0.25);
    p.pair = additive_family(0.0);
    p.u0 = InitialCondition::sine(0.1);
    const SolutionField u = picard_solve(p, std::make_shared<const NoiseField>(zero_noise(p.grid)));
    const double pi = std::numbers::pi;
    // largest value: first grid time inside the window, at x = 1/2
    CHECK(window_sup(u, {0.0, 0.25}) == doctest::Approx(0.1 * std::exp(-pi * pi * p.grid.t(1))).epsilon(1e-10));
    CHECK(window_sup(u, {0.1, 0.2, 0.1, 0.2}) ==
          doctest::Approx(0.1 * std::exp(-pi * pi * p.grid.t(26)) * std::sin(pi * 0.1875)).epsilon(1e-10));
    CHECK_THROWS_AS(window_sup(u, {0.1, 0.101}), std::invalid_argument);
    CHECK_THROWS_AS(window_sup(u, {0.0, 0.3}), std::invalid_argument);
    const std::vector<SolutionField> ens{u, u};
    CHECK(sup_samples(ens, {0.0, 0.25}).size() == 2);
}

TEST_CASE("density CSV layout") {
    const auto e = estimate_density(normal_draws(300, 11));
    const auto path = std::filesystem::temp_directory_path() / "spde_density.csv";
    write_density_csv(path, e, R"({"n":300})");
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == R"(# {"n":300})");
    std::getline(in, line);
    CHECK(line == "abscissa,density");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == static_cast<int>(kDensityGridPoints));
    std::filesystem::remove(path);
}
