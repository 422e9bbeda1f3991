#include "spde/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "spde/parallel.hpp"
#include "spde/stats.hpp"

namespace spde {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string hex64(std::uint64_t v) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// Index of `value` on a grid of step `step`; throws ConfigError if it is off the grid.
int grid_index(double value, double step, const std::string& what) {
    const double r = value / step;
    const long long k = std::llround(r);
    if (std::abs(r - static_cast<double>(k)) > 1e-6) {
        throw ConfigError("config: " + what + " = " + fmt(value) + " is not a grid point");
    }
    return static_cast<int>(k);
}

class Run {
public:
    Run(const RunConfig& cfg, ExperimentResult& res) : cfg_(cfg), res_(res) {
        std::filesystem::create_directories(cfg.out_dir);
    }

    void check(const std::string& name, bool passed, double value, double threshold,
               const std::string& detail = {}) {
        res_.assertions.push_back({cfg_.experiment + "/" + name, passed, value, threshold, detail});
    }

    std::ofstream open(const std::string& name) {
        res_.artifacts.emplace_back(name);
        std::ofstream out(cfg_.out_dir / name);
        if (!out) throw std::runtime_error("cannot write artifact " + (cfg_.out_dir / name).string());
        return out;
    }

    std::filesystem::path path(const std::string& name) {
        res_.artifacts.emplace_back(name);
        return cfg_.out_dir / name;
    }

    void couple(std::uint64_t seed, const GridSpec& parent, const GridSpec& child) {
        res_.couplings.push_back({seed, parent, child});
    }

private:
    const RunConfig& cfg_;
    ExperimentResult& res_;
};

std::mt19937_64 config_rng(const RunConfig& cfg) { return std::mt19937_64(cfg.seeds.first); }

// ---------------------------------------------------------------- kernel-checks

void run_kernel_checks(const RunConfig& cfg, Run& run) {
    const KernelSpec spec = KernelSpec::for_floor(cfg.number("t_floor"), cfg.number("tail_tol"));
    const int count = cfg.integer("triples");
    auto rng = config_rng(cfg);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto rand_t = [&](double lo, double hi) { return lo * std::pow(hi / lo, unit(rng)); };

    double boundary = 0.0;
    int asym = 0;
    double semigroup = 0.0, gaussian = 0.0, mass = 0.0, l2 = 0.0;
    for (int k = 0; k < count; ++k) {
        const double t = rand_t(spec.t_floor(), 1.0);
        const double x = unit(rng), y = unit(rng);
        boundary = std::max({boundary, std::abs(eval_kernel(spec, t, 0.0, y)), std::abs(eval_kernel(spec, t, x, 1.0)),
                             std::abs(eval_kernel(spec, t, 1.0, y)), std::abs(eval_kernel(spec, t, x, 0.0))});
        if (eval_kernel(spec, t, x, y) != eval_kernel(spec, t, y, x)) ++asym;
        gaussian = std::max(gaussian, gaussian_bound_check(spec, t, x, y));
        const double s1 = rand_t(1e-3, 0.5), s2 = rand_t(1e-3, 0.5);
        if (k < cfg.integer("semigroup_triples")) semigroup = std::max(semigroup, semigroup_defect(spec, s1, s2, x, y));
        if (k < cfg.integer("mass_triples")) mass = std::max(mass, mass_integral(spec, t, x, 4096));
        l2 = std::max(l2, l2_time_integral(spec, rand_t(1e-6, 10.0), unit(rng)));
    }
    const double odd = std::abs(l2_time_integral(spec, std::numeric_limits<double>::infinity(), 0.5) - 0.125);

    const double sg_max = cfg.number("semigroup_max");
    const double ga_max = 1.0 + cfg.number("gaussian_slack");
    const double l2_max = 1.0 / 6.0;
    const double odd_max = cfg.number("odd_limit_tol");
    run.check("boundary", boundary == 0.0, boundary, 0.0, "G_t vanishes exactly at x or y in {0,1}");
    run.check("symmetry", asym == 0, asym, 0.0, "bit-exact G_t(x,y) == G_t(y,x)");
    run.check("semigroup", semigroup < sg_max, semigroup, sg_max, "N=" + std::to_string(spec.n_terms()));
    run.check("gaussian", gaussian <= ga_max, gaussian, ga_max, "G_t over the free kernel");
    run.check("mass", mass <= 1.0 + 1e-10, mass, 1.0 + 1e-10, "int G_t(x,y) dy <= 1");
    run.check("l2-bound", l2 <= l2_max, l2, l2_max, "int int G^2 <= 1/6");
    run.check("odd-limit", odd < odd_max, odd, odd_max, "t = inf, x = 1/2 gives 1/8");

    auto out = run.open("kernel_checks.csv");
    out << "check,value\n";
    out << "boundary," << fmt(boundary) << "\nsymmetry," << asym << "\nsemigroup," << fmt(semigroup)
        << "\ngaussian," << fmt(gaussian) << "\nmass," << fmt(mass) << "\nl2-bound," << fmt(l2)
        << "\nodd-limit," << fmt(odd) << "\n";
}

// --------------------------------------------------------------- kernel-lemmas

void run_kernel_lemmas(const RunConfig& cfg, Run& run) {
    const int count = cfg.integer("tuples");
    const KernelSpec base(static_cast<std::size_t>(cfg.integer("n_terms")), cfg.number("t_floor"));
    const KernelSpec doubled(2 * base.n_terms(), base.t_floor());
    const GradedQuadrature quad{static_cast<std::size_t>(cfg.integer("panels")), 8};
    const auto ps = cfg.numbers("p");
    const double drift_max = cfg.number("drift_max");
    const double T = cfg.grid.T;

    auto rng = config_rng(cfg);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    struct Tuple {
        double s, t, x, y;
    };
    std::vector<Tuple> tuples(count);
    for (auto& tp : tuples) {
        const double a = T * unit(rng), b = T * unit(rng);
        tp = {std::min(a, b), std::max(a, b), unit(rng), unit(rng)};
    }

    // columns: A.1, then A.2 for every p; coarse and refined
    const std::size_t cols = 1 + ps.size();
    std::vector<double> coarse(count * cols), fine(count * cols);
    parallel_for(static_cast<std::size_t>(count), cfg.threads, [&](std::size_t k) {
        const auto& tp = tuples[k];
        coarse[k * cols] = lemma_a1_ratio(base, tp.s, tp.t, tp.x, tp.y, quad);
        fine[k * cols] = lemma_a1_ratio(doubled, tp.s, tp.t, tp.x, tp.y, quad.refined());
        for (std::size_t q = 0; q < ps.size(); ++q) {
            coarse[k * cols + 1 + q] = lemma_a2_ratio(base, tp.s, tp.t, tp.x, tp.y, ps[q], quad);
            fine[k * cols + 1 + q] = lemma_a2_ratio(doubled, tp.s, tp.t, tp.x, tp.y, ps[q], quad.refined());
        }
    });

    auto out = run.open("kernel_lemmas.csv");
    out << "s,t,x,y,a1,a1_refined";
    for (double p : ps) out << ",a2_p" << fmt(p) << ",a2_p" << fmt(p) << "_refined";
    out << "\n";
    for (int k = 0; k < count; ++k) {
        const auto& tp = tuples[k];
        out << fmt(tp.s) << "," << fmt(tp.t) << "," << fmt(tp.x) << "," << fmt(tp.y);
        for (std::size_t c = 0; c < cols; ++c) out << "," << fmt(coarse[k * cols + c]) << "," << fmt(fine[k * cols + c]);
        out << "\n";
    }
    for (std::size_t c = 0; c < cols; ++c) {
        const std::string label = c == 0 ? "a1" : "a2-p" + fmt(ps[c - 1]);
        double m1 = 0.0, m2 = 0.0;
        bool finite = true;
        for (int k = 0; k < count; ++k) {
            finite = finite && std::isfinite(coarse[k * cols + c]) && std::isfinite(fine[k * cols + c]);
            m1 = std::max(m1, coarse[k * cols + c]);
            m2 = std::max(m2, fine[k * cols + c]);
        }
        const double drift = std::abs(m2 - m1) / m1;
        run.check(label + "-finite", finite && std::isfinite(m1) && m1 > 0.0, m1, 0.0, "max ratio over tuples");
        run.check(label + "-drift", drift < drift_max, drift, drift_max,
                  "max " + fmt(m1) + " -> " + fmt(m2) + " under N and panel doubling");
    }
}

// ----------------------------------------------------------- picard-convergence

void run_picard_convergence(const RunConfig& cfg, Run& run) {
    const Problem problem = make_problem(cfg);
    SolverOptions opt{cfg.integer("k_max"), cfg.number("tol")};
    const int after = cfg.integer("decrease_after");
    const std::size_t n = cfg.seeds.size();
    std::vector<std::vector<double>> deltas(n);
    std::vector<char> converged(n), localized(n);
    for_each_solution(problem, cfg.seeds, cfg.threads, 0, opt, [&](std::size_t k, const SolutionField& f) {
        deltas[k] = f.deltas;
        converged[k] = f.converged;
        localized[k] = f.localized;
    });
    std::size_t monotone = 0, conv = 0, local = 0;
    for (std::size_t k = 0; k < n; ++k) {
        // iterates are numbered from 1: delta_{i+1} < delta_i for every i >= after
        bool ok = true;
        for (std::size_t i = static_cast<std::size_t>(after); i < deltas[k].size(); ++i) {
            ok = ok && deltas[k][i] < deltas[k][i - 1];
        }
        monotone += ok;
        conv += converged[k] != 0;
        local += localized[k] != 0;
    }
    run.check("monotone-deltas", monotone == n, static_cast<double>(monotone), static_cast<double>(n),
              "seeds with strictly decreasing deltas after iterate " + std::to_string(after));
    run.check("converged", conv == n, static_cast<double>(conv), static_cast<double>(n),
              "seeds reaching tol " + fmt(opt.tol) + " within " + std::to_string(opt.k_max) + " sweeps");
    run.check("localized", true, static_cast<double>(local), static_cast<double>(n), "informational: seeds inside Omega_n");

    auto out = run.open("picard_deltas.csv");
    out << "seed,iterate,delta\n";
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t i = 0; i < deltas[k].size(); ++i) {
            out << cfg.seeds.at(k) << "," << i + 1 << "," << fmt(deltas[k][i]) << "\n";
        }
    }
}

// ---------------------------------------------------------------- solver-oracle

void run_solver_oracle(const RunConfig& cfg, Run& run) {
    const Problem coarse = make_problem(cfg);
    Problem fine = coarse;
    fine.grid = coarse.grid.refined();
    const double disc_max = cfg.number("disc_max");
    const std::size_t n = cfg.seeds.size();
    std::vector<double> d0(n), d1(n);
    parallel_for(n, cfg.threads, [&](std::size_t k) {
        const auto seed = cfg.seeds.at(k);
        auto noise = std::make_shared<const NoiseField>(sample_noise(coarse.grid, seed));
        d0[k] = relative_sup_discrepancy(picard_solve(coarse, noise), fd_oracle_solve(coarse, noise));
        auto child = std::make_shared<const NoiseField>(refine_noise(*noise));
        d1[k] = relative_sup_discrepancy(picard_solve(fine, child), fd_oracle_solve(fine, child));
    });
    double worst = 0.0;
    std::size_t decreasing = 0;
    auto out = run.open("solver_oracle.csv");
    out << "seed,nx,nt,discrepancy,refined_nx,refined_nt,refined_discrepancy\n";
    for (std::size_t k = 0; k < n; ++k) {
        worst = std::max(worst, d0[k]);
        decreasing += d1[k] < d0[k];
        run.couple(cfg.seeds.at(k), coarse.grid, fine.grid);
        out << cfg.seeds.at(k) << "," << coarse.grid.nx << "," << coarse.grid.nt << "," << fmt(d0[k]) << ","
            << fine.grid.nx << "," << fine.grid.nt << "," << fmt(d1[k]) << "\n";
    }
    run.check("discrepancy", worst < disc_max, worst, disc_max, "max over seeds of relative sup-norm gap");
    run.check("refinement-decreases", decreasing == n, static_cast<double>(decreasing), static_cast<double>(n),
              "seeds whose gap shrinks under (nx,nt) -> (2nx,4nt)");
}

// ------------------------------------------------------------ malliavin-additive

void run_malliavin_additive(const RunConfig& cfg, Run& run) {
    const Problem problem = make_problem(cfg);
    const auto& g = problem.grid;
    const int sub = cfg.integer("sub_grid");
    const int t_index = grid_index(cfg.number("t"), g.dt(), "t");
    const int x_index = grid_index(cfg.number("x"), g.dx(), "x");
    if (t_index % sub != 0 || g.nx % sub != 0) throw ConfigError("config: sub_grid must divide nx and the t index");
    const double sigma = problem.pair.sigma(0.5, 0.0);
    const int probes = cfg.integer("identity_sources");

    const std::size_t n = cfg.seeds.size();
    std::vector<double> norms(n);
    RowMatrix sub_values(sub, sub);
    double identity_err = 0.0, before_s = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        auto noise = std::make_shared<const NoiseField>(sample_noise(g, cfg.seeds.at(k)));
        auto base = std::make_shared<const SolutionField>(picard_solve(problem, noise));
        RowMatrix values(sub, sub);
        parallel_for(static_cast<std::size_t>(sub * sub), cfg.threads, [&](std::size_t q) {
            const int a = static_cast<int>(q) / sub, b = static_cast<int>(q) % sub;
            const DerivativeField f = derivative_solve(base, a * (t_index / sub), b * (g.nx / sub));
            values(a, b) = f.values(t_index, x_index);
        });
        std::vector<double> s_times(sub), y_points(sub);
        for (int a = 0; a < sub; ++a) s_times[a] = g.t(a * (t_index / sub));
        for (int b = 0; b < sub; ++b) y_points[b] = g.x(b * (g.nx / sub));
        norms[k] = malliavin_norm_quadrature(s_times, y_points, values, g.t(t_index));
        if (k == 0) sub_values = values;

        if (k == 0) {
            // one derivative iterate against sigma G_{t-s}(x, y) on whole fields
            std::vector<double> err(probes, 0.0), zero(probes, 0.0);
            parallel_for(static_cast<std::size_t>(probes), cfg.threads, [&](std::size_t q) {
                const int s = static_cast<int>((q * static_cast<std::size_t>(g.nt)) / (probes + 1));
                const int y = 1 + static_cast<int>((q * 7 + 3) % static_cast<std::size_t>(g.nx - 1));
                const DerivativeField f = derivative_solve(base, s, y, {1, 0.0});
                double num = 0.0, den = 0.0;
                for (int i = 0; i <= g.nt; ++i) {
                    for (int j = 0; j <= g.nx; ++j) {
                        if (i <= s) {
                            zero[q] = std::max(zero[q], std::abs(f.values(i, j)));
                            continue;
                        }
                        const double ref = sigma * eval_kernel_any(problem.kernel, (i - s) * g.dt(), g.x(j), g.x(y));
                        num += (f.values(i, j) - ref) * (f.values(i, j) - ref);
                        den += ref * ref;
                    }
                }
                err[q] = std::sqrt(num / den);
            });
            identity_err = *std::max_element(err.begin(), err.end());
            before_s = *std::max_element(zero.begin(), zero.end());
        }
    }
    const double series = sigma * sigma * l2_time_integral(problem.kernel, g.t(t_index), g.x(x_index));
    double worst_rel = 0.0, min_norm = std::numeric_limits<double>::infinity();
    for (double v : norms) {
        worst_rel = std::max(worst_rel, std::abs(v - series) / series);
        min_norm = std::min(min_norm, v);
    }
    const double floor = 10.0 * cfg.number("solver_tol") * cfg.number("solver_tol");
    run.check("identity", identity_err < cfg.number("identity_max"), identity_err, cfg.number("identity_max"),
              "relative L2 gap of D to sigma G_{t-s}(x,y) after one iterate");
    run.check("zero-before-s", before_s == 0.0, before_s, 0.0, "D vanishes for t <= s");
    run.check("norm-vs-series", worst_rel < cfg.number("norm_rel_max"), worst_rel, cfg.number("norm_rel_max"),
              "norm " + fmt(norms.front()) + " vs series " + fmt(series));
    run.check("norm-positive", min_norm > floor, min_norm, floor, "smallest norm over seeds");

    auto out = run.open("malliavin_subgrid.csv");
    out << "s,y,D\n";
    for (int a = 0; a < sub; ++a) {
        for (int b = 0; b < sub; ++b) {
            out << fmt(g.t(a * (t_index / sub))) << "," << fmt(g.x(b * (g.nx / sub))) << "," << fmt(sub_values(a, b)) << "\n";
        }
    }
    auto nout = run.open("malliavin_norms.csv");
    nout << "seed,norm,series\n";
    for (std::size_t k = 0; k < n; ++k) nout << cfg.seeds.at(k) << "," << fmt(norms[k]) << "," << fmt(series) << "\n";
}

// ------------------------------------------------------------- positivity-probe

void run_positivity_probe(const RunConfig& cfg, Run& run) {
    const Problem problem = make_problem(cfg);
    const double t = cfg.number("t"), x = cfg.number("x"), l = cfg.number("l");
    try {
        check_probe_point(x, l);
    } catch (const std::domain_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    auto eps = cfg.numbers("eps");
    std::sort(eps.begin(), eps.end(), std::greater<>());
    const auto windows = positivity_windows(problem, cfg.seeds, cfg.threads, t, x, eps);
    const auto table = positivity_table(windows, eps, x, l, problem.pair.c0, cfg.number("bound_tolerance"));

    auto out = run.open("positivity.csv");
    out << "eps,lower_bound,min_a2,mean_a2,mean_b2,fraction_positive,bound_holds\n";
    bool monotone = true, bound = true;
    for (std::size_t k = 0; k < table.size(); ++k) {
        const auto& r = table[k];
        out << fmt(r.eps) << "," << fmt(r.lower_bound) << "," << fmt(r.min_a2) << "," << fmt(r.mean_a2) << ","
            << fmt(r.mean_b2) << "," << fmt(r.fraction_positive) << "," << (r.bound_holds ? 1 : 0) << "\n";
        if (k > 0 && r.fraction_positive < table[k - 1].fraction_positive) monotone = false;
        bound = bound && r.bound_holds;
    }
    const double last = table.back().fraction_positive;
    const double need = cfg.number("fraction_min");
    run.check("fraction-monotone", monotone, table.front().fraction_positive, last,
              "fraction with a^2/2 - b^2 > 0 nondecreasing as eps decreases");
    run.check("fraction-smallest-eps", last >= need, last, need, "eps = " + fmt(table.back().eps));
    run.check("a2-lower-bound", bound, table.back().min_a2, table.back().lower_bound,
              "min int int a^2 >= c0^2 min sin^2 eps for eps < 3/(4 pi^2)");
}

// ---------------------------------------------------------------- kolmogorov-fit

void run_kolmogorov_fit(const RunConfig& cfg, Run& run) {
    const Problem problem = make_problem(cfg);
    const auto& g = problem.grid;
    const int s = grid_index(cfg.number("s"), g.dt(), "s");
    const int y = grid_index(cfg.number("y"), g.dx(), "y");
    const int t = grid_index(cfg.number("t"), g.dt(), "t");
    const int x = grid_index(cfg.number("x"), g.dx(), "x");
    const double p = cfg.number("p");
    const auto fit = kolmogorov_ensemble(problem, cfg.seeds, cfg.threads, s, y, t, x, p,
                                         cfg.integers("space_offsets"), cfg.integers("time_offsets"));
    const double a_min = cfg.number("alpha_min"), b_min = cfg.number("beta_min");
    run.check("alpha", fit.alpha > a_min, fit.alpha, a_min, "temporal exponent of E|D(t+h)-D(t)|^p");
    run.check("beta", fit.beta > b_min, fit.beta, b_min, "spatial exponent of E|D(x+h)-D(x)|^p");
    const double inv = 1.0 / fit.alpha + 1.0 / fit.beta;
    run.check("kolmogorov-sum", fit.alpha > 0.0 && fit.beta > 0.0 && inv < 1.0, inv, 1.0, "1/alpha + 1/beta");

    auto out = run.open("kolmogorov.csv");
    out << "axis,offset,h,moment\n";
    const auto so = cfg.integers("space_offsets"), to = cfg.integers("time_offsets");
    for (std::size_t k = 0; k < so.size(); ++k) {
        out << "space," << so[k] << "," << fmt(std::abs(so[k]) * g.dx()) << "," << fmt(fit.space_moments[k]) << "\n";
    }
    for (std::size_t k = 0; k < to.size(); ++k) {
        out << "time," << to[k] << "," << fmt(to[k] * g.dt()) << "," << fmt(fit.time_moments[k]) << "\n";
    }
}

// ------------------------------------------------------------- density-gaussian

void run_density_gaussian(const RunConfig& cfg, Run& run) {
    const Problem problem = make_problem(cfg);
    if (!problem.pair.additive) throw ConfigError("config: density-gaussian needs the additive family");
    const auto& g = problem.grid;
    const int ti = grid_index(cfg.number("t"), g.dt(), "t");
    const int xi = grid_index(cfg.number("x"), g.dx(), "x");
    const auto samples = point_samples(problem, cfg.seeds, cfg.threads, ti, xi);
    const double sigma = problem.pair.sigma(0.5, 0.0);
    const double t = g.t(ti), x = g.x(xi);
    const double mean = cfg.u0_amplitude * std::exp(-kPi2 * t) * std::sin(kPi * x);
    const double sd = std::abs(sigma) * std::sqrt(l2_time_integral(problem.kernel, t, x));
    const double ks = ks_statistic(samples, [&](double v) { return normal_cdf(v, mean, sd); });
    const double ks_max = cfg.number("ks_max");
    run.check("ks", ks < ks_max, ks, ks_max, "Normal(" + fmt(mean) + ", " + fmt(sd * sd) + ")");

    auto sout = run.open("samples.csv");
    sout << "seed,u\n";
    for (std::size_t k = 0; k < samples.size(); ++k) sout << cfg.seeds.at(k) << "," << fmt(samples[k]) << "\n";
    try {
        DensityEstimate est = estimate_density(samples);
        est.statistic_vs_reference = std::make_pair(std::string("ks"), ks);
        const double mass = est.mass();
        run.check("kde-mass", mass >= 0.98 && mass <= 1.02, mass, 1.0, "trapezoid integral of the KDE");
        nlohmann::json header{{"bandwidth", est.bandwidth}, {"n", est.samples}, {"ks", ks},
                              {"reference_mean", mean}, {"reference_variance", sd * sd}};
        write_density_csv(run.path("density.csv"), est, header.dump());
    } catch (const DegenerateLaw& e) {
        run.check("kde-mass", false, 0.0, 1.0, e.what());
    }
}

// ----------------------------------------------------------------- sup-density

void run_sup_density(const RunConfig& cfg, Run& run) {
    const Problem problem = make_problem(cfg);
    const double l = cfg.number("l");
    SupWindow window{cfg.number("t_lo"), cfg.grid.T, l, 1.0 - l};
    const int level = cfg.integer("coarse_level");
    const auto coarse = window_sup_samples(problem, cfg.seeds, cfg.threads, level, window);
    const auto fine = window_sup_samples(problem, cfg.seeds, cfg.threads, level + 1, window);
    GridSpec gc = problem.grid;
    for (int k = 0; k < level; ++k) gc = gc.refined();
    for (std::size_t k = 0; k < cfg.seeds.size(); ++k) run.couple(cfg.seeds.at(k), gc, gc.refined());

    auto sout = run.open("sup_samples.csv");
    sout << "seed,coarse,fine\n";
    for (std::size_t k = 0; k < coarse.size(); ++k) {
        sout << cfg.seeds.at(k) << "," << fmt(coarse[k]) << "," << fmt(fine[k]) << "\n";
    }
    const double var = coarse.size() > 1 ? sample_variance(coarse) : 0.0;
    run.check("positive-variance", var > 0.0, var, 0.0, "sample variance of the coarse sup");
    const RefinementReport rep = refinement_stability(coarse, fine);
    run.check("no-degenerate-law", !rep.coarse_degenerate && !rep.fine_degenerate,
              rep.coarse_degenerate + rep.fine_degenerate, 0.0, "levels flagged as point masses");
    const double l1_max = cfg.number("l1_max");
    run.check("refinement-l1", rep.l1 < l1_max, rep.l1, l1_max,
              "(" + std::to_string(gc.nx) + "," + std::to_string(gc.nt) + ") -> (" + std::to_string(2 * gc.nx) +
                  "," + std::to_string(4 * gc.nt) + ")");
    std::vector<double> shift(coarse.size());
    for (std::size_t k = 0; k < coarse.size(); ++k) shift[k] = fine[k] - coarse[k];
    const double mean_shift = shift.empty() ? 0.0 : sample_mean(shift);
    run.check("grid-max-shift", true, mean_shift, std::sqrt(var),
              "informational: mean per-seed fine minus coarse sup, against the coarse sd");
    for (const auto& [name, s] : {std::pair{std::string("coarse"), &coarse}, std::pair{std::string("fine"), &fine}}) {
        try {
            const DensityEstimate est = estimate_density(*s);
            const double mass = est.mass();
            run.check(name + "-kde-mass", mass >= 0.98 && mass <= 1.02, mass, 1.0, "trapezoid integral of the KDE");
            nlohmann::json header{{"bandwidth", est.bandwidth}, {"n", est.samples}, {"level", name}};
            write_density_csv(run.path("sup_density_" + name + ".csv"), est, header.dump());
        } catch (const DegenerateLaw& e) {
            run.check(name + "-kde-mass", false, 0.0, 1.0, e.what());
        }
    }
}

// --------------------------------------------------------------- moment-report

void run_moment_report(const RunConfig& cfg, Run& run) {
    const Problem problem = make_problem(cfg);
    const std::size_t n = cfg.seeds.size();
    if (n < 2) throw ConfigError("config: moment-report needs at least two seeds");
    std::vector<std::vector<double>> sups(n);
    for_each_solution(problem, cfg.seeds, cfg.threads, 0, SolverOptions{},
                      [&](std::size_t k, const SolutionField& f) { sups[k] = row_sup_norms(f); });
    const double drift_max = cfg.number("drift_max");
    auto out = run.open("moments.csv");
    out << "p,seeds,moment\n";
    for (double p : cfg.numbers("p")) {
        if (!(p >= 2.0)) throw ConfigError("config: moment exponents must be >= 2");
        MomentAccumulator half(p), full(p);
        for (std::size_t k = 0; k < n; ++k) {
            if (k < n / 2) half.add(sups[k]);
            full.add(sups[k]);
        }
        const double a = half.value(), b = full.value();
        const double drift = std::abs(b - a) / a;
        out << fmt(p) << "," << n / 2 << "," << fmt(a) << "\n" << fmt(p) << "," << n << "," << fmt(b) << "\n";
        run.check("finite-p" + fmt(p), std::isfinite(a) && std::isfinite(b), b, 0.0, "E sup_x |u|^p, max over t");
        run.check("drift-p" + fmt(p), drift < drift_max, drift, drift_max,
                  std::to_string(n / 2) + " -> " + std::to_string(n) + " seeds");
    }
}

// ------------------------------------------------------- derivative-localization

void run_derivative_localization(const RunConfig& cfg, Run& run) {
    const Problem problem = make_problem(cfg);
    const auto& g = problem.grid;
    const int t_hat = grid_index(cfg.number("t_hat"), g.dt(), "t_hat");
    std::vector<int> steps;
    for (double e : cfg.numbers("eps")) steps.push_back(grid_index(e, g.dt(), "eps"));
    std::vector<int> lags{1};
    const int widest = *std::max_element(steps.begin(), steps.end());
    for (double v = 1.0; v < widest; v *= cfg.number("lag_ratio")) lags.push_back(static_cast<int>(std::lround(v)));
    lags.insert(lags.end(), steps.begin(), steps.end());
    std::sort(lags.begin(), lags.end());
    lags.erase(std::unique(lags.begin(), lags.end()), lags.end());
    std::vector<int> ys;
    for (int j = 1; j < g.nx; j += cfg.integer("y_stride")) ys.push_back(j);

    const auto norms = mean_localized_norms(problem, cfg.seeds, cfg.threads, t_hat, steps, lags, ys);
    std::vector<double> eps;
    for (int e : steps) eps.push_back(e * g.dt());
    const double slope = power_law_exponent(eps, norms);
    const double need = cfg.number("exponent_min");
    run.check("exponent", slope >= need, slope, need, "fit of the eps-localized derivative norm against eps");
    auto out = run.open("localization.csv");
    out << "eps,mean_norm\n";
    for (std::size_t k = 0; k < eps.size(); ++k) out << fmt(eps[k]) << "," << fmt(norms[k]) << "\n";
}

using Runner = void (*)(const RunConfig&, Run&);

struct Entry {
    ExperimentInfo info;
    Runner runner;
};

const std::vector<Entry>& entries() {
    static const std::vector<Entry> list{
        {{"kernel-checks",
          "heat kernel identities: boundary, symmetry, semigroup, Gaussian domination, mass, L2 bound, odd limit",
          {},
          {{"triples", "1000", "random (t, x, y) triples"},
           {"semigroup_triples", "200", "triples used for the semigroup defect"},
           {"mass_triples", "200", "triples used for the mass integral"},
           {"t_floor", "1e-4", "smallest time evaluated by the series"},
           {"tail_tol", "1e-12", "series tail bound at t_floor"},
           {"semigroup_max", "1e-8", "largest allowed semigroup defect"},
           {"gaussian_slack", "1e-8", "allowed excess of G over the free kernel"},
           {"odd_limit_tol", "1e-10", "tolerance on the t = inf value 1/8 at x = 1/2"}}},
         run_kernel_checks},
        {{"kernel-lemmas",
          "increment-ratio sweeps for the two kernel lemmas under truncation and quadrature doubling",
          {{"T", "1"}},
          {{"tuples", "1000", "random tuples s <= t in [0,T], x, y in [0,1]"},
           {"n_terms", "1024", "series terms (doubled for the refined pass)"},
           {"t_floor", "1e-4", "kernel time floor"},
           {"panels", "48", "graded panels per singular segment (doubled for the refined pass)"},
           {"p", "6,12", "exponents of the second lemma"},
           {"drift_max", "0.1", "largest allowed relative change of the maximum ratio"}}},
         run_kernel_lemmas},
        {{"picard-convergence",
          "successive Picard deltas on the nonlinear family",
          {{"nx", "64"}, {"nt", "2048"}, {"T", "0.5"}, {"family", "nonlinear"}, {"seeds", "1..50"}},
          {{"k_max", "12", "sweep budget"},
           {"tol", "1e-4", "sup-norm stopping tolerance"},
           {"decrease_after", "2", "deltas must strictly decrease after this iterate"}}},
         run_picard_convergence},
        {{"solver-oracle",
          "mild-form solver against the finite-difference oracle on shared noise, with one coupled refinement",
          {{"nx", "64"}, {"nt", "4096"}, {"seeds", "1..10"}},
          {{"disc_max", "0.05", "largest allowed relative sup-norm discrepancy"}}},
         run_solver_oracle},
        {{"malliavin-additive",
          "derivative field against the kernel and Malliavin norm against the series in the additive case",
          {{"nx", "64"}, {"nt", "1024"}},
          {{"t", "0.25", "evaluation time"},
           {"x", "0.5", "evaluation point"},
           {"sub_grid", "32", "sources per axis of the (s, y) sub-grid"},
           {"identity_sources", "8", "sources whose whole field is compared with the kernel"},
           {"identity_max", "1e-6", "largest allowed relative L2 gap"},
           {"norm_rel_max", "0.03", "largest allowed relative gap of the norm"},
           {"solver_tol", "1e-4", "solver tolerance entering the positivity floor 10 tol^2"}}},
         run_malliavin_additive},
        {{"positivity-probe",
          "a/b window integrals near t and the fraction of seeds with a^2/2 - b^2 > 0",
          {{"nx", "64"}, {"nt", "2000"}, {"family", "nonlinear"}, {"seeds", "1..500"}},
          {{"t", "0.25", "probe time"},
           {"x", "0.5", "probe point"},
           {"l", "0.25", "x must lie in [l, 1-l]"},
           {"eps", "0.04,0.02,0.01,0.005", "window lengths"},
           {"fraction_min", "1", "required fraction at the smallest window"},
           {"bound_tolerance", "1e-6", "relative slack of the a^2 lower bound"}}},
         run_positivity_probe},
        {{"kolmogorov-fit",
          "moment exponents of derivative increments in time and space",
          {{"nx", "64"}, {"nt", "1000"}, {"family", "nonlinear"}, {"seeds", "1..200"}},
          {{"p", "12", "moment exponent"},
           {"s", "0.05", "source time"},
           {"y", "0.5", "source point"},
           {"t", "0.2", "base time of the increments"},
           {"x", "0.25", "base point of the increments"},
           {"space_offsets", "1,2,4,8", "spatial offsets in cells"},
           {"time_offsets", "1,2,4,8", "temporal offsets in steps"},
           {"alpha_min", "1.5", "required temporal exponent"},
           {"beta_min", "3", "required spatial exponent"}}},
         run_kolmogorov_fit},
        {{"density-gaussian",
          "law of u(t,x) in the additive case against the exact Gaussian",
          {{"nx", "64"}, {"nt", "1024"}, {"seeds", "1..10000"}},
          {{"t", "0.25", "evaluation time"}, {"x", "0.5", "evaluation point"}, {"ks_max", "0.05", "largest allowed KS statistic"}}},
         run_density_gaussian},
        {{"sup-density",
          "law of the window supremum and its stability under one coupled refinement",
          {{"nx", "32"}, {"nt", "1024"}, {"seeds", "1..10000"}},
          {{"l", "0.25", "spatial window [l, 1-l]"},
           {"t_lo", "0", "window is (t_lo, T]"},
           {"coarse_level", "0", "refinements applied before the coarse level"},
           {"l1_max", "0.1", "largest allowed L1 distance between levels"}}},
         run_sup_density},
        {{"moment-report",
          "E sup_x |u|^p under ensemble doubling",
          {{"nx", "64"}, {"nt", "1024"}, {"family", "nonlinear"}, {"seeds", "1..2000"}},
          {{"p", "2,8", "moment exponents"}, {"drift_max", "0.15", "largest allowed relative drift"}}},
         run_moment_report},
        {{"derivative-localization",
          "eps-localized derivative norm and its power-law exponent",
          {{"nx", "32"}, {"nt", "1000"}, {"family", "nonlinear"}, {"seeds", "1..40"}},
          {{"t_hat", "0.25", "target time"},
           {"eps", "0.001,0.002,0.005,0.01,0.02,0.05,0.1", "window lengths"},
           {"lag_ratio", "1.4", "geometric spacing of source lags"},
           {"y_stride", "2", "stride of source nodes"},
           {"exponent_min", "0.4", "required exponent"}}},
         run_derivative_localization},
    };
    return list;
}

}  // namespace

const std::vector<ExperimentInfo>& experiment_registry() {
    static const std::vector<ExperimentInfo> infos = [] {
        std::vector<ExperimentInfo> v;
        for (const auto& e : entries()) v.push_back(e.info);
        return v;
    }();
    return infos;
}

const ExperimentInfo& find_experiment(const std::string& name) {
    for (const auto& info : experiment_registry()) {
        if (info.name == name) return info;
    }
    throw ConfigError("config: unknown experiment '" + name + "'");
}

bool ExperimentResult::passed() const {
    return std::all_of(assertions.begin(), assertions.end(), [](const Assertion& a) { return a.passed; });
}

std::string format_assertion(const Assertion& a) {
    std::string line = std::string(a.passed ? "PASS " : "FAIL ") + a.name + " value=" + fmt(a.value) +
                       " threshold=" + fmt(a.threshold);
    if (!a.detail.empty()) line += " (" + a.detail + ")";
    return line;
}

Problem make_problem(const RunConfig& config) {
    Problem p;
    p.grid = config.grid;
    p.pair = config.pair();
    p.cutoff = CutoffSpec(config.cutoff);
    p.u0 = InitialCondition::sine(config.u0_amplitude);
    return p;
}

ExperimentResult run_experiment(const RunConfig& config) {
    validate_config(config);
    ExperimentResult result;
    result.experiment = config.experiment;
    Run run(config, result);
    for (const auto& e : entries()) {
        if (e.info.name == config.experiment) {
            e.runner(config, run);
            break;
        }
    }
    nlohmann::ordered_json summary;
    summary["experiment"] = config.experiment;
    summary["passed"] = result.passed();
    summary["assertions"] = nlohmann::ordered_json::array();
    for (const auto& a : result.assertions) {
        summary["assertions"].push_back(
            {{"name", a.name}, {"passed", a.passed}, {"value", a.value}, {"threshold", a.threshold}, {"detail", a.detail}});
    }
    auto out = run.open("summary.json");
    out << summary.dump(2) << "\n";
    return result;
}

std::filesystem::path emit_manifest(const RunConfig& config, const ExperimentResult& result) {
    std::filesystem::create_directories(config.out_dir);
    nlohmann::ordered_json m;
    m["experiment"] = result.experiment;
    m["config_hash"] = hex64(fnv1a(config.canonical()));
    m["config"] = config.canonical();
    m["seed_range"] = format_seed_range(config.seeds);
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    m["timestamp"] = stamp;
    m["artifacts"] = nlohmann::ordered_json::array();
    for (const auto& rel : result.artifacts) {
        std::ifstream in(config.out_dir / rel, std::ios::binary);
        std::stringstream buf;
        buf << in.rdbuf();
        const std::string bytes = buf.str();
        m["artifacts"].push_back({{"path", rel.generic_string()},
                                  {"experiment", result.experiment},
                                  {"bytes", bytes.size()},
                                  {"fnv1a", hex64(fnv1a(bytes))}});
    }
    m["couplings"] = nlohmann::ordered_json::array();
    for (const auto& c : result.couplings) {
        m["couplings"].push_back({{"seed", c.seed},
                                  {"parent", {{"nx", c.parent.nx}, {"nt", c.parent.nt}, {"T", c.parent.T}}},
                                  {"child", {{"nx", c.child.nx}, {"nt", c.child.nt}, {"T", c.child.T}}}});
    }
    const auto path = config.out_dir / "manifest.json";
    std::ofstream out(path);
    out << m.dump(2) << "\n";
    return path;
}

// ----------------------------------------------------------------- pipelines

void for_each_solution(const Problem& problem, const SeedRange& seeds, int threads, int refine_levels,
                       const SolverOptions& options,
                       const std::function<void(std::size_t, const SolutionField&)>& consume) {
    Problem fine = problem;
    for (int k = 0; k < refine_levels; ++k) fine.grid = fine.grid.refined();
    parallel_for(seeds.size(), threads, [&](std::size_t k) {
        const auto seed = seeds.at(k);
        auto noise = std::make_shared<const NoiseField>(
            refine_levels > 0 ? sample_refined_noise(problem.grid, seed, refine_levels) : sample_noise(problem.grid, seed));
        consume(k, picard_solve(fine, noise, options));
    });
}

std::vector<WindowIntegrals> positivity_windows(const Problem& problem, const SeedRange& seeds, int threads,
                                                double t, double x, std::span<const double> eps_list) {
    const auto& g = problem.grid;
    const int ti = grid_index(t, g.dt(), "t");
    const int xi = grid_index(x, g.dx(), "x");
    std::vector<int> steps;
    for (double e : eps_list) steps.push_back(grid_index(e, g.dt(), "eps"));
    std::vector<WindowIntegrals> out(seeds.size());
    for_each_solution(problem, seeds, threads, 0, SolverOptions{}, [&](std::size_t k, const SolutionField& f) {
        out[k] = window_integrals(f, ti, xi, steps);
    });
    return out;
}

std::vector<double> mean_localized_norms(const Problem& problem, const SeedRange& seeds, int threads,
                                         int t_hat_index, std::span<const int> eps_steps,
                                         std::span<const int> lags, std::span<const int> y_indices) {
    std::vector<std::vector<double>> per(seeds.size());
    parallel_for(seeds.size(), threads, [&](std::size_t k) {
        auto noise = std::make_shared<const NoiseField>(sample_noise(problem.grid, seeds.at(k)));
        auto base = std::make_shared<const SolutionField>(picard_solve(problem, noise));
        const Linearization lin = linearize(*base);
        per[k] = localized_derivative_norms(base, lin, t_hat_index, eps_steps, lags, y_indices);
    });
    std::vector<double> mean(eps_steps.size(), 0.0);
    for (const auto& v : per) {
        for (std::size_t e = 0; e < v.size(); ++e) mean[e] += v[e];
    }
    for (double& v : mean) v /= static_cast<double>(seeds.size());
    return mean;
}

KolmogorovAccumulator::Fit kolmogorov_ensemble(const Problem& problem, const SeedRange& seeds, int threads,
                                               int s_index, int y_index, int t_index, int x_index, double p,
                                               std::vector<int> space_offsets, std::vector<int> time_offsets) {
    const int last = t_index + std::max(0, *std::max_element(time_offsets.begin(), time_offsets.end()));
    std::vector<KolmogorovAccumulator> per(seeds.size(),
                                           KolmogorovAccumulator(t_index, x_index, p, space_offsets, time_offsets));
    parallel_for(seeds.size(), threads, [&](std::size_t k) {
        auto noise = std::make_shared<const NoiseField>(sample_noise(problem.grid, seeds.at(k)));
        auto base = std::make_shared<const SolutionField>(picard_solve(problem, noise));
        per[k].add(derivative_march(base, s_index, y_index, last));
    });
    KolmogorovAccumulator total(t_index, x_index, p, std::move(space_offsets), std::move(time_offsets));
    for (const auto& a : per) total.merge(a);
    return total.fit(problem.grid);
}

std::vector<double> window_sup_samples(const Problem& problem, const SeedRange& seeds, int threads,
                                       int refine_levels, const SupWindow& window) {
    std::vector<double> out(seeds.size());
    for_each_solution(problem, seeds, threads, refine_levels, SolverOptions{},
                      [&](std::size_t k, const SolutionField& f) { out[k] = window_sup(f, window); });
    return out;
}

std::vector<double> point_samples(const Problem& problem, const SeedRange& seeds, int threads, int t_index,
                                  int x_index) {
    std::vector<double> out(seeds.size());
    for_each_solution(problem, seeds, threads, 0, SolverOptions{},
                      [&](std::size_t k, const SolutionField& f) { out[k] = f(t_index, x_index); });
    return out;
}

}  // namespace spde
