#pragma once

#include <Eigen/Dense>
#include <vector>

#include "spde/heat_kernel.hpp"
#include "spde/noise.hpp"

namespace spde {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Sine-mode machinery shared by the mild-form solvers.
///
/// A space-time integrand held constant on each time step contributes to mode
/// n over [t_i, t_{i+1}) exactly
///
///   A_n(i+1) = e^{-lam_n dt} A_n(i) + (1 - e^{-lam_n dt}) / lam_n * P_n(i),
///
/// with P_n(i) its sine projection; for the noise term P_n carries the cell
/// increment divided by dt against the cell average of the sine, i.e. the
/// kernel averaged over the noise cell in time and space.
struct ModalBasis {
    ModalBasis(const GridSpec& grid, int modes);

    GridSpec grid;
    int modes;

    RowMatrix node_to_mode;  // (nx-1) x M: 2 dx sin(n pi x_j) for n < nx, else 0 (trapezoid)
    RowMatrix cell_to_mode;  // nx x M: 2 x (average of sin(n pi y) over cell j)
    RowMatrix mode_to_node;  // M x (nx-1): sin(n pi x_j)
    std::vector<double> decay;   // e^{-lam_n dt}
    std::vector<double> weight;  // (1 - e^{-lam_n dt}) / lam_n

    /// Default number of modes, 2 nx - 1: the cell noise has content above the
    /// Cell data resolves 2 nx - 1 modes (nodal drift data only nx - 1).
    static int default_modes(const GridSpec& grid) { return 2 * grid.nx - 1; }
};

/// sin(pi k / d) with k reduced modulo 2d first.
double sin_ratio(long long k, long long d);

/// Rows of the heat kernel at lags d dt (d = 1..max_lag) for a fixed source
/// y_j, evaluated at all nodes: row d holds G_{d dt}(x_i, y_j), i = 0..nx.
/// Series (via per-mode powers) for lags >= t_floor, image sums below.
RowMatrix kernel_lag_rows(const KernelSpec& spec, const GridSpec& grid, int y_index, int max_lag);

}  // namespace spde
