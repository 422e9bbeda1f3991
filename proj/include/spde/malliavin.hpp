#pragma once

#include <memory>
#include <span>
#include <vector>

#include "spde/solver.hpp"

namespace spde {

/// m(n) at the interior nodes and m_hat(n) dW/dt at the cell midpoints of a
/// base solution, i.e. the coefficients of the linearized mild equation.
struct Linearization {
    RowMatrix drift;   // nt x (nx-1): m(x_j, u(t_i, x_j))
    RowMatrix noise;   // nt x nx: m_hat(x_{j+1/2}, mean of u(t_i, x_j), u(t_i, x_{j+1})) dW_ij / dt
    bool vanishes = false;  // m = m_hat = 0 everywhere
};

Linearization linearize(const SolutionField& base);

/// D_{s,y} u_n(t_i, x_j) for a grid source point (s, y) = (t_{s_index}, x_{y_index}).
///
/// Rows t_i <= s hold zero (the derivative vanishes before s; the point mass at
/// t = s is not representable on the grid). For t_i > s,
///   values = a + b,  a = G_{t-s}(x,y) H_n(|u(s,y)|) sigma(y, u(s,y)),
/// and b collects the two convolutions against m D and m_hat D dW.
struct DerivativeField {
    std::shared_ptr<const SolutionField> base;
    int s_index = 0;
    int y_index = 0;
    RowMatrix values;
    RowMatrix a_values;
    RowMatrix b_values;
    std::vector<double> deltas;
    bool converged = true;
};

struct DerivativeOptions {
    int k_max = 40;
    double tol = 1e-9;
};

/// Picard iteration of the linear mild equation for D, driven by the same noise
/// as the base solve. The first cell [s, s + dt) is excluded from both
/// convolutions.
DerivativeField derivative_solve(std::shared_ptr<const SolutionField> base, int s_index, int y_index,
                                 const DerivativeOptions& options = {});

/// The same discrete fixed point reached in one causal pass, up to row `last_row`
/// (inclusive; -1 for nt). `lin` and `kernel_rows` (from kernel_lag_rows for
/// y_index) may be supplied to share work between calls.
DerivativeField derivative_march(std::shared_ptr<const SolutionField> base, int s_index, int y_index,
                                 int last_row = -1, const Linearization* lin = nullptr,
                                 const RowMatrix* kernel_rows = nullptr);

/// Source-term kernel factor H_n(|u(s,y)|) sigma(y, u(s,y)).
double source_factor(const SolutionField& base, int s_index, int y_index);

/// (a, b) with a recomputed in closed form and b the convolution part, so that
/// a + b reproduces the stored values bit for bit.
struct Decomposition {
    RowMatrix a;
    RowMatrix b;
};
Decomposition ab_decompose(const DerivativeField& field);

/// D_{s,y} u_n(t, x) at one target (t_index, x_index) for every grid source
/// s_index in [s_lo, t_index) and every node y, obtained from a single backward
/// (adjoint) pass through the discrete derivative equation.
struct DerivativeSlice {
    int t_index = 0;
    int x_index = 0;
    int s_lo = 0;
    RowMatrix values;  // row k <-> s_index = s_lo + k, column j <-> y_index = j
    RowMatrix a;
    RowMatrix b;
};
DerivativeSlice derivative_slice(const SolutionField& base, const Linearization& lin, int t_index,
                                 int x_index, int s_lo);

/// Quadrature of int_0^t int_0^1 D_{s,y}u(t,x)^2 dy ds from values on a regular
/// (s,y) sub-grid: trapezoid in y (the boundary values are zero), trapezoid in s,
/// and an inverse-square-root model on the last interval [s_max, t].
/// `values(k, j)` belongs to (s_times[k], y_points[j]); s_times ascending, all < t.
double malliavin_norm_quadrature(std::span<const double> s_times, std::span<const double> y_points,
                                 const RowMatrix& values, double t);

/// malliavin_norm over a collection of derivative fields whose sources form a
/// regular (s,y) sub-grid. Sources at or after t contribute nothing.
double malliavin_norm(std::span<const DerivativeField> fields, int t_index, int x_index);

/// One row of the positivity probe.
struct PositivityRow {
    double eps = 0.0;
    double mean_b2 = 0.0;           // ensemble mean of int int b^2
    double mean_a2 = 0.0;           // ensemble mean of int int a^2
    double min_a2 = 0.0;            // smallest int int a^2 across seeds
    double lower_bound = 0.0;       // (c1/2) min{sin^2(pi l), sin^2(pi(1-l))} eps, c1 = 2 c0^2
    double fraction_positive = 0.0; // share of seeds with (1/2) int int a^2 - int int b^2 > 0
    bool bound_holds = true;        // min_a2 >= lower_bound (1 - tolerance), checked for eps < 3/(4 pi^2)
};

/// Per-seed window integrals for one base path.
struct WindowIntegrals {
    std::vector<double> a2;
    std::vector<double> b2;
};

/// int_{t-eps}^t int_0^1 a^2 and b^2 dy ds at (t_index, x_index) for every
/// window length eps_steps[k] * dt.
WindowIntegrals window_integrals(const SolutionField& base, int t_index, int x_index,
                                 std::span<const int> eps_steps);

/// Assembles the probe table from per-seed window integrals.
std::vector<PositivityRow> positivity_table(std::span<const WindowIntegrals> per_seed,
                                            std::span<const double> eps_list, double x, double l,
                                            double c0, double tolerance = 1e-6);

/// Throws std::domain_error unless l > 0 and x lies in [l, 1 - l].
void check_probe_point(double x, double l);

/// Empirical moments E|D(t,x+h) - D(t,x)|^p and E|D(t+h,x) - D(t,x)|^p
/// accumulated over seeds, then fitted on a log-log scale.
class KolmogorovAccumulator {
public:
    KolmogorovAccumulator(int t_index, int x_index, double p, std::vector<int> space_offsets,
                          std::vector<int> time_offsets);
    void add(const DerivativeField& field);
    /// Adds another accumulator's sums (same target and offsets).
    void merge(const KolmogorovAccumulator& other);

    struct Fit {
        double alpha = 0.0;  // temporal exponent
        double beta = 0.0;   // spatial exponent
        std::vector<double> time_moments;
        std::vector<double> space_moments;
    };
    Fit fit(const GridSpec& grid) const;

private:
    int t_index_, x_index_;
    double p_;
    std::vector<int> dx_, dt_;
    std::vector<double> sx_, st_;
    std::size_t count_ = 0;
};

KolmogorovAccumulator::Fit kolmogorov_fit(std::span<const DerivativeField> fields, int t_index,
                                          int x_index, double p, std::vector<int> space_offsets,
                                          std::vector<int> time_offsets);

/// For target time t_hat: int_{t_hat-eps}^{t_hat} int_0^1 ||D_{s,y}u(t_hat,.)||_inf^2 dy ds
/// for each eps_steps[k], from forward solves at sources t_hat - lag dt
/// (lag in `lags`, which must contain every eps step) and nodes `y_indices`.
/// The unresolved cell [t_hat - dt, t_hat] is taken as dt times the lag-1 value.
std::vector<double> localized_derivative_norms(std::shared_ptr<const SolutionField> base,
                                               const Linearization& lin, int t_hat_index,
                                               std::span<const int> eps_steps,
                                               std::span<const int> lags,
                                               std::span<const int> y_indices);

}  // namespace spde
