#include "spde/solver.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace spde {

namespace {

void check_compatible(const Problem& problem, const NoiseField& noise) {
    problem.grid.validate();
    problem.u0.validate();
    if (!(noise.grid() == problem.grid)) {
        throw std::invalid_argument("solver: noise grid does not match the problem grid");
    }
}

void finalize(SolutionField& field) {
    field.values.col(0).setZero();
    field.values.col(field.grid().nx).setZero();
    field.n_level = field.problem.cutoff.n;
    field.localized = localization_check(field, field.n_level);
    field.seed = field.noise ? field.noise->seed() : 0;
}

// Integrands of one Picard sweep, frozen on [t_i, t_{i+1}).
class PicardSweep {
public:
    PicardSweep(const Problem& problem, const NoiseField& noise)
        : problem_(problem), noise_(noise), basis_(problem.grid, problem.mode_count()),
          u0_modes_(initial_modes(problem.u0, basis_.modes)) {
        const auto& g = problem.grid;
        drift_.resize(g.nt, g.nx - 1);
        diffusion_.resize(g.nt, g.nx);
        proj_.resize(g.nt, basis_.modes);
        amps_.resize(g.nt + 1, basis_.modes);
        has_drift_ = problem.pair.K_f != 0.0;
    }

    // Writes Phi(u) into `out`; `u` and `out` must not alias.
    void apply(const RowMatrix& u, RowMatrix& out) {
        const auto& g = problem_.grid;
        const double inv_dt = 1.0 / g.dt();
        for (int i = 0; i < g.nt; ++i) {
            // row i of the integrand reads u(t_i) and the cell increments of [t_i, t_{i+1}) only
            if (has_drift_) {
                for (int j = 1; j < g.nx; ++j) {
                    drift_(i, j - 1) = truncated_drift(problem_.pair, problem_.cutoff, g.x(j), u(i, j));
                }
            }
            const auto dw = noise_.row(i);
            for (int j = 0; j < g.nx; ++j) {
                const double um = 0.5 * (u(i, j) + u(i, j + 1));
                diffusion_(i, j) =
                    truncated_diffusion(problem_.pair, problem_.cutoff, g.x_mid(j), um) * dw[j] * inv_dt;
            }
        }
        proj_.noalias() = diffusion_ * basis_.cell_to_mode;
        if (has_drift_) proj_.noalias() += drift_ * basis_.node_to_mode;
        propagate(proj_, out);
    }

    void initial(RowMatrix& out) {
        proj_.setZero();
        propagate(proj_, out);
    }

private:
    void propagate(const RowMatrix& proj, RowMatrix& out) {
        const auto& g = problem_.grid;
        const int m = basis_.modes;
        for (int n = 0; n < m; ++n) amps_(0, n) = u0_modes_[n];
        for (int i = 0; i < g.nt; ++i) {
            for (int n = 0; n < m; ++n) {
                amps_(i + 1, n) = basis_.decay[n] * amps_(i, n) + basis_.weight[n] * proj(i, n);
            }
        }
        out.resize(g.nt + 1, g.nx + 1);
        out.block(1, 1, g.nt, g.nx - 1).noalias() = amps_.bottomRows(g.nt) * basis_.mode_to_node;
        for (int j = 0; j <= g.nx; ++j) out(0, j) = problem_.u0(g.x(j));
        out.col(0).setZero();
        out.col(g.nx).setZero();
    }

    const Problem& problem_;
    const NoiseField& noise_;
    ModalBasis basis_;
    std::vector<double> u0_modes_;
    RowMatrix drift_, diffusion_, proj_, amps_;
    bool has_drift_ = true;
};

}  // namespace

std::vector<double> initial_modes(const InitialCondition& u0, int modes) {
    const int q = std::max(4096, 8 * modes);
    std::vector<double> samples(q + 1);
    for (int k = 0; k <= q; ++k) samples[k] = u0(static_cast<double>(k) / q);
    std::vector<double> out(modes, 0.0);
    for (int n = 1; n <= modes; ++n) {
        double acc = 0.0;
        for (int k = 1; k < q; ++k) acc += samples[k] * sin_ratio(static_cast<long long>(n) * k, q);
        out[n - 1] = 2.0 * acc / q;
    }
    return out;
}

RowMatrix heat_semigroup_field(const Problem& problem) {
    const NoiseField zero = zero_noise(problem.grid);
    PicardSweep sweep(problem, zero);
    RowMatrix out;
    sweep.initial(out);
    return out;
}

SolutionField picard_solve(const Problem& problem, std::shared_ptr<const NoiseField> noise,
                           const SolverOptions& options) {
    if (!noise) throw std::invalid_argument("picard_solve: missing noise field");
    if (options.k_max < 1) throw std::invalid_argument("picard_solve: k_max must be >= 1");
    check_compatible(problem, *noise);

    SolutionField field;
    field.problem = problem;
    field.noise = noise;

    PicardSweep sweep(problem, *noise);
    RowMatrix current, next;
    sweep.initial(current);
    field.converged = false;
    for (int k = 0; k < options.k_max; ++k) {
        sweep.apply(current, next);
        const double delta = (next - current).cwiseAbs().maxCoeff();
        field.deltas.push_back(delta);
        current.swap(next);
        if (delta < options.tol) {
            field.converged = true;
            break;
        }
    }
    field.values = std::move(current);
    finalize(field);
    return field;
}

SolutionField fd_oracle_solve(const Problem& problem, std::shared_ptr<const NoiseField> noise,
                              FdScheme scheme) {
    if (!noise) throw std::invalid_argument("fd_oracle_solve: missing noise field");
    check_compatible(problem, *noise);
    const auto& g = problem.grid;
    const double dt = g.dt(), dx = g.dx();
    const double r = dt / (dx * dx);
    if (scheme == FdScheme::explicit_euler && dt > 0.5 * dx * dx) {
        throw std::invalid_argument("fd_oracle_solve: explicit scheme unstable (dt > dx^2/2)");
    }

    SolutionField field;
    field.problem = problem;
    field.noise = noise;
    field.values.resize(g.nt + 1, g.nx + 1);
    for (int j = 0; j <= g.nx; ++j) field.values(0, j) = problem.u0(g.x(j));
    field.values(0, 0) = field.values(0, g.nx) = 0.0;

    const int n_int = g.nx - 1;
    std::vector<double> rhs(n_int), cprime(n_int), dprime(n_int);
    // Thomas factors of (1 + 2r) on the diagonal, -r off it
    if (scheme == FdScheme::semi_implicit) {
        cprime[0] = -r / (1.0 + 2.0 * r);
        for (int k = 1; k < n_int; ++k) cprime[k] = -r / (1.0 + 2.0 * r + r * cprime[k - 1]);
    }
    for (int i = 0; i < g.nt; ++i) {
        const auto u = field.values.row(i);
        const auto dw = noise->row(i);
        for (int j = 1; j < g.nx; ++j) {
            const double uj = u(j);
            const double node_noise = 0.5 * (dw[j - 1] + dw[j]) / dx;
            double v = uj + dt * truncated_drift(problem.pair, problem.cutoff, g.x(j), uj) +
                       truncated_diffusion(problem.pair, problem.cutoff, g.x(j), uj) * node_noise;
            if (scheme == FdScheme::explicit_euler) v += r * (u(j - 1) - 2.0 * uj + u(j + 1));
            rhs[j - 1] = v;
        }
        auto next = field.values.row(i + 1);
        next(0) = next(g.nx) = 0.0;
        if (scheme == FdScheme::explicit_euler) {
            for (int k = 0; k < n_int; ++k) next(k + 1) = rhs[k];
            continue;
        }
        dprime[0] = rhs[0] / (1.0 + 2.0 * r);
        for (int k = 1; k < n_int; ++k) {
            dprime[k] = (rhs[k] + r * dprime[k - 1]) / (1.0 + 2.0 * r + r * cprime[k - 1]);
        }
        next(n_int) = dprime[n_int - 1];
        for (int k = n_int - 2; k >= 0; --k) next(k + 1) = dprime[k] - cprime[k] * next(k + 2);
    }
    finalize(field);
    return field;
}

bool localization_check(const SolutionField& field, double n_level) {
    if (field.values.size() == 0) return true;
    return field.values.cwiseAbs().maxCoeff() < n_level;
}

std::vector<double> row_sup_norms(const SolutionField& field) {
    std::vector<double> out(static_cast<std::size_t>(field.values.rows()));
    for (Eigen::Index i = 0; i < field.values.rows(); ++i) {
        out[static_cast<std::size_t>(i)] = field.values.row(i).cwiseAbs().maxCoeff();
    }
    return out;
}

void MomentAccumulator::add(std::span<const double> row_sups) {
    if (sums_.empty()) sums_.assign(row_sups.size(), 0.0);
    if (row_sups.size() != sums_.size()) {
        throw std::invalid_argument("MomentAccumulator: fields with different time grids");
    }
    for (std::size_t i = 0; i < row_sups.size(); ++i) sums_[i] += std::pow(row_sups[i], p_);
    ++count_;
}

double MomentAccumulator::value() const {
    if (count_ == 0) throw std::invalid_argument("moment_report: empty ensemble");
    double best = 0.0;
    for (double s : sums_) best = std::max(best, s / static_cast<double>(count_));
    return best;
}

double moment_report(std::span<const SolutionField> ensemble, double p) {
    if (!(p >= 2.0)) throw std::invalid_argument("moment_report: p must be >= 2");
    MomentAccumulator acc(p);
    for (const auto& f : ensemble) acc.add(row_sup_norms(f));
    return acc.value();
}

RowMatrix restrict_to(const SolutionField& field, const GridSpec& coarse) {
    const auto& g = field.grid();
    if (g.nx % coarse.nx != 0 || g.nt % coarse.nt != 0 || g.T != coarse.T) {
        throw std::invalid_argument("restrict_to: grids are not nested");
    }
    const int sx = g.nx / coarse.nx, st = g.nt / coarse.nt;
    RowMatrix out(coarse.nt + 1, coarse.nx + 1);
    for (int i = 0; i <= coarse.nt; ++i) {
        for (int j = 0; j <= coarse.nx; ++j) out(i, j) = field.values(i * st, j * sx);
    }
    return out;
}

double relative_sup_discrepancy(const SolutionField& a, const SolutionField& b) {
    const RowMatrix bv = restrict_to(b, a.grid());
    const double scale = a.values.cwiseAbs().maxCoeff();
    const double diff = (a.values - bv).cwiseAbs().maxCoeff();
    return scale > 0.0 ? diff / scale : diff;
}

void write_solution(const std::filesystem::path& path, const SolutionField& field) {
    write_grid_binary(path, field.grid(),
                      std::span<const double>(field.values.data(),
                                              static_cast<std::size_t>(field.values.size())));
    nlohmann::json side;
    side["seed"] = field.seed;
    side["n_level"] = field.n_level;
    side["iterate_deltas"] = field.deltas;
    side["localized"] = field.localized;
    side["converged"] = field.converged;
    side["family"] = field.problem.pair.name;
    side["noise_level"] = field.noise ? field.noise->level() : 0;
    std::ofstream out(path.string() + ".json");
    out << side.dump(2) << "\n";
}

}  // namespace spde
