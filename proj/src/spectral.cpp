#include "spde/spectral.hpp"

#include <cmath>
#include <stdexcept>

namespace spde {

double sin_ratio(long long k, long long d) {
    long long r = k % (2 * d);
    if (r < 0) r += 2 * d;
    if (r == 0 || r == d) return 0.0;
    return std::sin(kPi * static_cast<double>(r) / static_cast<double>(d));
}

ModalBasis::ModalBasis(const GridSpec& g, int m) : grid(g), modes(m) {
    grid.validate();
    if (modes < 1) throw std::invalid_argument("ModalBasis: need at least one mode");
    const int nx = grid.nx;
    const double dx = grid.dx();
    const double dt = grid.dt();
    node_to_mode.resize(nx - 1, modes);
    mode_to_node.resize(modes, nx - 1);
    cell_to_mode.resize(nx, modes);
    for (int n = 1; n <= modes; ++n) {
        for (int j = 1; j < nx; ++j) {
            const double s = sin_ratio(static_cast<long long>(n) * j, nx);
            // nodal data carries no modes at or above nx
            node_to_mode(j - 1, n - 1) = n < nx ? 2.0 * dx * s : 0.0;
            mode_to_node(n - 1, j - 1) = s;
        }
        // cell average of sin(n pi y) = sin(n pi x_{j+1/2}) sin(h) / h, h = n pi dx / 2
        const double h = 0.5 * kPi * static_cast<double>(n) * dx;
        const double sinc = std::sin(h) / h;
        for (int j = 0; j < nx; ++j) {
            // x_{j+1/2} = (2j+1) / (2 nx)
            cell_to_mode(j, n - 1) = 2.0 * sinc * sin_ratio(static_cast<long long>(n) * (2 * j + 1), 2LL * nx);
        }
    }
    decay.resize(modes);
    weight.resize(modes);
    for (int n = 1; n <= modes; ++n) {
        const double lam = kPi2 * static_cast<double>(n) * static_cast<double>(n);
        decay[n - 1] = std::exp(-lam * dt);
        weight[n - 1] = -std::expm1(-lam * dt) / lam;
    }
}

RowMatrix kernel_lag_rows(const KernelSpec& spec, const GridSpec& grid, int y_index, int max_lag) {
    const int nx = grid.nx;
    if (y_index < 0 || y_index > nx) throw std::out_of_range("kernel_lag_rows: y_index out of range");
    RowMatrix rows = RowMatrix::Zero(max_lag + 1, nx + 1);
    if (y_index == 0 || y_index == nx || max_lag < 1) return rows;
    const double y = grid.x(y_index);
    const double dt = grid.dt();
    const int n_modes = static_cast<int>(spec.n_terms());

    int first_series = 1;
    while (first_series <= max_lag && static_cast<double>(first_series) * dt < spec.t_floor()) {
        for (int i = 1; i < nx; ++i) {
            rows(first_series, i) = eval_kernel_images(first_series * dt, grid.x(i), y);
        }
        ++first_series;
    }
    if (first_series > max_lag) return rows;

    const int count = max_lag - first_series + 1;
    RowMatrix coeff(count, n_modes);
    for (int n = 1; n <= n_modes; ++n) {
        const double lam = kPi2 * static_cast<double>(n) * static_cast<double>(n);
        const double sy = sin_ratio(static_cast<long long>(n) * y_index, nx);
        for (int d = 0; d < count; ++d) {
            const double e = std::exp(-lam * static_cast<double>(first_series + d) * dt);
            coeff(d, n - 1) = e < 1e-25 ? 0.0 : 2.0 * e * sy;
        }
    }
    RowMatrix sines(n_modes, nx + 1);
    for (int n = 1; n <= n_modes; ++n) {
        for (int i = 0; i <= nx; ++i) sines(n - 1, i) = sin_ratio(static_cast<long long>(n) * i, nx);
    }
    rows.bottomRows(count).noalias() = coeff * sines;
    rows.col(0).setZero();
    rows.col(nx).setZero();
    return rows;
}

}  // namespace spde
