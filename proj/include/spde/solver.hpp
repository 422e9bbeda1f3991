#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "spde/coefficients.hpp"
#include "spde/heat_kernel.hpp"
#include "spde/noise.hpp"
#include "spde/spectral.hpp"

namespace spde {

/// Everything a solve needs apart from the noise path.
struct Problem {
    GridSpec grid;
    CoefficientPair pair = additive_family();
    CutoffSpec cutoff{5.0};
    InitialCondition u0 = InitialCondition::sine(1.0);
    KernelSpec kernel = KernelSpec::for_floor();
    int modes = 0;  // sine modes in the mild-form solver; 0 selects 2 nx - 1

    int mode_count() const { return modes > 0 ? modes : ModalBasis::default_modes(grid); }
};

struct SolverOptions {
    int k_max = 12;
    double tol = 1e-4;
};

/// Grid values of u_n at nodes (t_i, x_j), i = 0..nt, j = 0..nx.
/// Immutable once returned by a solver.
struct SolutionField {
    Problem problem;
    std::shared_ptr<const NoiseField> noise;
    RowMatrix values;
    std::vector<double> deltas;  // sup-norm difference of successive Picard iterates
    bool converged = true;
    bool localized = true;       // sup |u| < n over the grid
    std::uint64_t seed = 0;
    double n_level = 0.0;

    const GridSpec& grid() const noexcept { return problem.grid; }
    double operator()(int i, int j) const noexcept { return values(i, j); }
};

/// Mild-form Picard iteration u_{k+1} = Phi(u_k), started from u_{n,0}(t) = G_t u0.
/// Drift and noise integrands are frozen on each time step and convolved with
/// the kernel exactly per sine mode. Stops once the sup-norm delta drops below
/// `tol`; `converged` is false if k_max sweeps did not get there.
SolutionField picard_solve(const Problem& problem, std::shared_ptr<const NoiseField> noise,
                           const SolverOptions& options = {});

enum class FdScheme { semi_implicit, explicit_euler };

/// Finite-difference oracle: implicit (or explicit) three-point Laplacian,
/// explicit truncated drift, nodal noise sigma(x_j,u) (dW_{j-1} + dW_j) / (2 dx).
/// Throws std::invalid_argument for an explicit scheme with dt > dx^2 / 2.
SolutionField fd_oracle_solve(const Problem& problem, std::shared_ptr<const NoiseField> noise,
                              FdScheme scheme = FdScheme::semi_implicit);

/// G_t u0 on the grid (the zeroth Picard iterate).
RowMatrix heat_semigroup_field(const Problem& problem);

/// Sine coefficients 2 int_0^1 u0(y) sin(n pi y) dy, n = 1..modes.
std::vector<double> initial_modes(const InitialCondition& u0, int modes);

bool localization_check(const SolutionField& field, double n_level);

/// max_j |u(t_i, x_j)| for every time row.
std::vector<double> row_sup_norms(const SolutionField& field);

/// max over time rows of the ensemble mean of ||u(t_i,.)||_inf^p.
double moment_report(std::span<const SolutionField> ensemble, double p);

/// Streaming form of moment_report over per-field row sup-norms.
class MomentAccumulator {
public:
    explicit MomentAccumulator(double p) : p_(p) {}
    void add(std::span<const double> row_sups);
    double value() const;
    std::size_t count() const noexcept { return count_; }

private:
    double p_;
    std::size_t count_ = 0;
    std::vector<double> sums_;
};

/// Values of a field at the nodes of a coarser grid whose nodes it contains.
RowMatrix restrict_to(const SolutionField& field, const GridSpec& coarse);

/// max |a - b| / max |a| on the nodes of a's grid.
double relative_sup_discrepancy(const SolutionField& a, const SolutionField& b);

/// Binary dump with the noise layout (header nx, nt, T; then (nt+1) x (nx+1)
/// values) plus a JSON sidecar `<path>.json`.
void write_solution(const std::filesystem::path& path, const SolutionField& field);

}  // namespace spde
