#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <stdexcept>

#include "spde/solver.hpp"
#include "spde/spectral.hpp"

using namespace spde;

namespace {

Problem small_problem(CoefficientPair pair, int nx = 16, int nt = 64, double T = 0.25) {
    Problem p;
    p.grid = GridSpec(nx, nt, T);
    p.pair = std::move(pair);
    return p;
}

}  // namespace

TEST_CASE("deterministic heat flow matches the exact sine decay") {
    Problem p = small_problem(additive_family(0.0));
    p.u0 = InitialCondition::sine(0.7);
    const auto noise = std::make_shared<const NoiseField>(zero_noise(p.grid));
    const SolutionField u = picard_solve(p, noise);
    const double pi = std::numbers::pi;
    double worst = 0.0;
    for (int i = 0; i <= p.grid.nt; ++i)
        for (int j = 0; j <= p.grid.nx; ++j)
            worst = std::max(worst, std::abs(u(i, j) - 0.7 * std::exp(-pi * pi * p.grid.t(i)) * std::sin(pi * p.grid.x(j))));
    CHECK(worst < 1e-12);
    const RowMatrix g = heat_semigroup_field(p);
    CHECK((g - u.values).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("additive solution is the Walsh sum of cell-averaged kernel weights") {
    // Oracle: u(t_i, x) = G_{t_i} u0 + sum_{k<i, j} w(i, k, j; x) dW_kj with
    // w = sum_n sin(n pi x) cellavg_j(2 sin(n pi .)) int_{t_k}^{t_{k+1}} e^{-lam (t_i - r)} dr / dt
    Problem p = small_problem(additive_family(1.3), 8, 16, 0.1);
    const auto noise = std::make_shared<const NoiseField>(sample_noise(p.grid, 77));
    const SolutionField u = picard_solve(p, noise);
    const GridSpec& g = p.grid;
    const int M = p.mode_count();
    const double pi = std::numbers::pi;
    for (int i : {1, 5, 16}) {
        for (int xj : {1, 3, 7}) {
            const double x = g.x(xj);
            const double walsh = walsh_integral(*noise, [&](int k, int j) {
                if (k >= i) return 0.0;
                double w = 0.0;
                for (int n = 1; n <= M; ++n) {
                    const double lam = pi * pi * n * n;
                    const double avg = 2.0 * (std::cos(n * pi * g.x(j)) - std::cos(n * pi * g.x(j + 1))) / (n * pi * g.dx());
                    const double time = (std::exp(-lam * (g.t(i) - g.t(k + 1))) - std::exp(-lam * (g.t(i) - g.t(k)))) / (lam * g.dt());
                    w += std::sin(n * pi * x) * avg * time;
                }
                return 1.3 * w;
            });
            const double ref = std::exp(-pi * pi * g.t(i)) * std::sin(pi * x) + walsh;
            CHECK(u(i, xj) == doctest::Approx(ref).epsilon(1e-10));
        }
    }
}

TEST_CASE("solutions vanish on the boundary and start from u0") {
    Problem p = small_problem(nonlinear_family());
    const auto noise = std::make_shared<const NoiseField>(sample_noise(p.grid, 3));
    const SolutionField u = picard_solve(p, noise);
    for (int i = 0; i <= p.grid.nt; ++i) {
        CHECK(u(i, 0) == 0.0);
        CHECK(u(i, p.grid.nx) == 0.0);
    }
    for (int j = 0; j <= p.grid.nx; ++j) CHECK(u(0, j) == doctest::Approx(std::sin(std::numbers::pi * p.grid.x(j))).epsilon(1e-15));
    CHECK(u.converged);
}

TEST_CASE("additive Picard is exact after one sweep") {
    Problem p = small_problem(additive_family());
    const auto noise = std::make_shared<const NoiseField>(sample_noise(p.grid, 4));
    const SolutionField u = picard_solve(p, noise);
    REQUIRE(u.deltas.size() >= 2);
    CHECK(u.deltas[1] < 1e-13);
}

TEST_CASE("nonlinear Picard deltas contract") {
    Problem p = small_problem(nonlinear_family(), 32, 512, 0.5);
    const auto noise = std::make_shared<const NoiseField>(sample_noise(p.grid, 11));
    SolverOptions opts;
    opts.tol = 1e-12;
    opts.k_max = 30;
    const SolutionField u = picard_solve(p, noise, opts);
    CHECK(u.converged);
    for (std::size_t k = 2; k < u.deltas.size(); ++k) CHECK(u.deltas[k] < u.deltas[k - 1]);
}

TEST_CASE("same seed gives the same field") {
    Problem p = small_problem(nonlinear_family());
    const auto a = picard_solve(p, std::make_shared<const NoiseField>(sample_noise(p.grid, 8)));
    const auto b = picard_solve(p, std::make_shared<const NoiseField>(sample_noise(p.grid, 8)));
    CHECK(a.values == b.values);
}

TEST_CASE("finite-difference oracle") {
    Problem p = small_problem(additive_family(0.0), 16, 256, 0.1);
    const auto zero = std::make_shared<const NoiseField>(zero_noise(p.grid));
    const SolutionField fd = fd_oracle_solve(p, zero);
    // semi-implicit three-point scheme: mode 1 decays by (1 + 4 dt/dx^2 sin^2(pi dx / 2))^{-1} per step
    const double dx = p.grid.dx(), dt = p.grid.dt();
    const double factor = 1.0 / (1.0 + 4.0 * dt / (dx * dx) * std::pow(std::sin(std::numbers::pi * dx / 2), 2));
    CHECK(fd(256, 8) == doctest::Approx(std::pow(factor, 256)).epsilon(1e-10));
    Problem q = small_problem(additive_family(), 16, 16, 0.25);
    CHECK_THROWS_AS(fd_oracle_solve(q, std::make_shared<const NoiseField>(zero_noise(q.grid)), FdScheme::explicit_euler),
                    std::invalid_argument);
    Problem r = small_problem(nonlinear_family(), 8, 2048, 0.1);
    const auto noise = std::make_shared<const NoiseField>(sample_noise(r.grid, 2));
    const auto imp = fd_oracle_solve(r, noise);
    const auto exp = fd_oracle_solve(r, noise, FdScheme::explicit_euler);
    CHECK(relative_sup_discrepancy(imp, exp) < 0.02);
}

TEST_CASE("spectral and finite-difference solvers agree on a shared noise path") {
    Problem p = small_problem(additive_family(), 32, 1024, 0.25);
    const auto noise = std::make_shared<const NoiseField>(sample_noise(p.grid, 5));
    const auto a = picard_solve(p, noise);
    const auto b = fd_oracle_solve(p, noise);
    CHECK(relative_sup_discrepancy(a, b) < 0.1);
    CHECK(relative_sup_discrepancy(a, a) == 0.0);
}

TEST_CASE("restriction to a coarse grid reads the shared nodes") {
    Problem p = small_problem(nonlinear_family(), 8, 8, 0.25);
    const auto coarse_noise = std::make_shared<const NoiseField>(sample_noise(p.grid, 6));
    Problem fine = p;
    fine.grid = p.grid.refined();
    const auto fine_noise = std::make_shared<const NoiseField>(refine_noise(*coarse_noise));
    const auto u = picard_solve(fine, fine_noise);
    const RowMatrix r = restrict_to(u, p.grid);
    REQUIRE(r.rows() == 9);
    REQUIRE(r.cols() == 9);
    CHECK(r(3, 5) == u(12, 10));
    CHECK_THROWS(restrict_to(u, GridSpec(5, 8, 0.25)));
}

TEST_CASE("moments and localization") {
    Problem p = small_problem(nonlinear_family());
    std::vector<SolutionField> ensemble;
    MomentAccumulator acc(4.0);
    for (int s = 1; s <= 6; ++s) {
        ensemble.push_back(picard_solve(p, std::make_shared<const NoiseField>(sample_noise(p.grid, s))));
        acc.add(row_sup_norms(ensemble.back()));
    }
    // oracle: direct loops
    double best = 0.0;
    for (int i = 0; i <= p.grid.nt; ++i) {
        double mean = 0.0;
        for (const auto& u : ensemble) {
            double sup = 0.0;
            for (int j = 0; j <= p.grid.nx; ++j) sup = std::max(sup, std::abs(u(i, j)));
            mean += std::pow(sup, 4.0);
        }
        best = std::max(best, mean / 6.0);
    }
    CHECK(moment_report(ensemble, 4.0) == doctest::Approx(best).epsilon(1e-14));
    CHECK(acc.value() == doctest::Approx(best).epsilon(1e-14));
    CHECK(acc.count() == 6);
    CHECK_THROWS(moment_report(ensemble, 1.0));
    CHECK(localization_check(ensemble[0], 1e6));
    CHECK_FALSE(localization_check(ensemble[0], 0.5));
}

TEST_CASE("modal basis") {
    const GridSpec g(8, 10, 0.1);
    const ModalBasis basis(g, ModalBasis::default_modes(g));
    CHECK(basis.modes == 15);
    CHECK(basis.node_to_mode.col(8).cwiseAbs().maxCoeff() == 0.0);
    CHECK(sin_ratio(3, 2) == -1.0);
    CHECK(sin_ratio(8, 4) == 0.0);
    const auto coeffs = initial_modes(InitialCondition::sine(2.0), 5);
    CHECK(coeffs[0] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(std::abs(coeffs[2]) < 1e-12);
    const RowMatrix rows = kernel_lag_rows(KernelSpec::for_floor(), g, 3, 4);
    CHECK(rows(2, 5) == doctest::Approx(eval_kernel_any(KernelSpec::for_floor(), 2 * g.dt(), g.x(5), g.x(3))).epsilon(1e-12));
}

TEST_CASE("solution dump round trip") {
    Problem p = small_problem(nonlinear_family(), 4, 4, 0.25);
    const auto u = picard_solve(p, std::make_shared<const NoiseField>(sample_noise(p.grid, 1)));
    const auto path = std::filesystem::temp_directory_path() / "spde_solution.bin";
    write_solution(path, u);
    GridSpec g;
    const auto values = read_grid_binary(path, g);
    CHECK(values.size() == 25);
    CHECK(values[7] == u.values.data()[7]);
    CHECK(std::filesystem::exists(path.string() + ".json"));
    std::filesystem::remove(path);
    std::filesystem::remove(path.string() + ".json");
}
