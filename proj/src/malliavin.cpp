#include "spde/malliavin.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "spde/stats.hpp"

namespace spde {

namespace {

void check_source(const GridSpec& g, int s_index, int y_index) {
    if (s_index < 0 || s_index >= g.nt) throw std::out_of_range("derivative: s_index out of range");
    if (y_index < 0 || y_index > g.nx) throw std::out_of_range("derivative: y_index out of range");
}

// Kernel value at lag d dt, images below t_floor and the series above.
double lag_kernel(const KernelSpec& spec, const GridSpec& g, int d, double x, double y) {
    const double tau = d * g.dt();
    return tau < spec.t_floor() ? eval_kernel_images(tau, x, y) : eval_kernel(spec, tau, x, y);
}

// Modal projection of the linearized integrand for one time row of D.
Eigen::RowVectorXd project_row(const ModalBasis& basis, const Linearization& lin, int i,
                               const RowMatrix& d) {
    const int nx = basis.grid.nx;
    Eigen::RowVectorXd interior = d.row(i).segment(1, nx - 1).cwiseProduct(lin.drift.row(i));
    Eigen::RowVectorXd mid(nx);
    for (int j = 0; j < nx; ++j) mid[j] = 0.5 * (d(i, j) + d(i, j + 1)) * lin.noise(i, j);
    Eigen::RowVectorXd q = interior * basis.node_to_mode;
    q.noalias() += mid * basis.cell_to_mode;
    return q;
}

RowMatrix source_rows(const SolutionField& base, int s_index, int y_index, const RowMatrix& kernel_rows,
                      int last_row) {
    const auto& g = base.grid();
    const double c = source_factor(base, s_index, y_index);
    RowMatrix a = RowMatrix::Zero(g.nt + 1, g.nx + 1);
    for (int i = s_index + 1; i <= last_row; ++i) a.row(i) = c * kernel_rows.row(i - s_index);
    a.col(0).setZero();
    a.col(g.nx).setZero();
    return a;
}

DerivativeField march(std::shared_ptr<const SolutionField> base, const ModalBasis& basis,
                      const Linearization& lin, int s_index, int y_index, int last_row,
                      const RowMatrix& kernel_rows) {
    const auto& g = base->grid();
    DerivativeField out;
    out.base = base;
    out.s_index = s_index;
    out.y_index = y_index;
    out.a_values = source_rows(*base, s_index, y_index, kernel_rows, last_row);
    out.b_values = RowMatrix::Zero(g.nt + 1, g.nx + 1);
    out.values = out.a_values;
    if (!lin.vanishes) {
        const int m = basis.modes;
        Eigen::RowVectorXd amps = Eigen::RowVectorXd::Zero(m);
        for (int i = s_index + 1; i <= last_row; ++i) {
            if (i > s_index + 1) {
                out.b_values.row(i).segment(1, g.nx - 1).noalias() = amps * basis.mode_to_node;
                out.values.row(i) = out.a_values.row(i) + out.b_values.row(i);
            }
            if (i == last_row || i == g.nt) break;
            const Eigen::RowVectorXd q = project_row(basis, lin, i, out.values);
            for (int n = 0; n < m; ++n) amps[n] = basis.decay[n] * amps[n] + basis.weight[n] * q[n];
        }
    }
    return out;
}

int resolve_last_row(const GridSpec& g, int s_index, int last_row) {
    if (last_row < 0) return g.nt;
    if (last_row > g.nt) throw std::out_of_range("derivative_march: last_row beyond the grid");
    return std::max(last_row, s_index);
}

// Trapezoid in y over nodes with the zero boundary values.
double y_energy(const Eigen::Ref<const Eigen::RowVectorXd>& row, double dx) {
    return dx * row.squaredNorm();
}

}  // namespace

Linearization linearize(const SolutionField& base) {
    const auto& g = base.grid();
    const auto& pair = base.problem.pair;
    const auto& cutoff = base.problem.cutoff;
    Linearization lin;
    lin.drift = RowMatrix::Zero(g.nt, g.nx - 1);
    lin.noise = RowMatrix::Zero(g.nt, g.nx);
    const double inv_dt = 1.0 / g.dt();
    bool any = false;
    for (int i = 0; i < g.nt; ++i) {
        for (int j = 1; j < g.nx; ++j) {
            const double m = multiplier_fields(pair, cutoff, g.x(j), base(i, j)).m;
            lin.drift(i, j - 1) = m;
            any = any || m != 0.0;
        }
        const auto dw = base.noise->row(i);
        for (int j = 0; j < g.nx; ++j) {
            const double um = 0.5 * (base(i, j) + base(i, j + 1));
            const double mh = multiplier_fields(pair, cutoff, g.x_mid(j), um).m_hat;
            lin.noise(i, j) = mh * dw[j] * inv_dt;
            any = any || lin.noise(i, j) != 0.0;
        }
    }
    lin.vanishes = !any;
    return lin;
}

double source_factor(const SolutionField& base, int s_index, int y_index) {
    const auto& g = base.grid();
    return truncated_diffusion(base.problem.pair, base.problem.cutoff, g.x(y_index), base(s_index, y_index));
}

DerivativeField derivative_march(std::shared_ptr<const SolutionField> base, int s_index, int y_index,
                                 int last_row, const Linearization* lin, const RowMatrix* kernel_rows) {
    if (!base) throw std::invalid_argument("derivative_march: missing base solution");
    const auto& g = base->grid();
    check_source(g, s_index, y_index);
    last_row = resolve_last_row(g, s_index, last_row);
    Linearization own;
    if (!lin) {
        own = linearize(*base);
        lin = &own;
    }
    RowMatrix own_rows;
    if (!kernel_rows || kernel_rows->rows() <= last_row - s_index) {
        own_rows = kernel_lag_rows(base->problem.kernel, g, y_index, std::max(1, last_row - s_index));
        kernel_rows = &own_rows;
    }
    const ModalBasis basis(g, base->problem.mode_count());
    return march(base, basis, *lin, s_index, y_index, last_row, *kernel_rows);
}

DerivativeField derivative_solve(std::shared_ptr<const SolutionField> base, int s_index, int y_index,
                                 const DerivativeOptions& options) {
    if (!base) throw std::invalid_argument("derivative_solve: missing base solution");
    if (options.k_max < 1) throw std::invalid_argument("derivative_solve: k_max must be >= 1");
    const auto& g = base->grid();
    check_source(g, s_index, y_index);
    const Linearization lin = linearize(*base);
    const ModalBasis basis(g, base->problem.mode_count());
    const RowMatrix rows = kernel_lag_rows(base->problem.kernel, g, y_index, std::max(1, g.nt - s_index));

    DerivativeField out;
    out.base = base;
    out.s_index = s_index;
    out.y_index = y_index;
    out.a_values = source_rows(*base, s_index, y_index, rows, g.nt);
    out.b_values = RowMatrix::Zero(g.nt + 1, g.nx + 1);

    // rows s+1 .. nt-1 carry integrands; B(s+1) = 0
    const int first = s_index + 1;
    const int count = g.nt - first;
    const int m = basis.modes;
    RowMatrix current = out.a_values;
    RowMatrix interior(std::max(count, 0), g.nx - 1), mid(std::max(count, 0), g.nx);
    RowMatrix proj(std::max(count, 0), m), amps(std::max(count, 0) + 1, m);
    out.converged = false;
    for (int k = 0; k < options.k_max; ++k) {
        RowMatrix b = RowMatrix::Zero(g.nt + 1, g.nx + 1);
        if (count > 0 && !lin.vanishes) {
            for (int r = 0; r < count; ++r) {
                const int i = first + r;
                for (int j = 1; j < g.nx; ++j) interior(r, j - 1) = current(i, j) * lin.drift(i, j - 1);
                for (int j = 0; j < g.nx; ++j) {
                    mid(r, j) = 0.5 * (current(i, j) + current(i, j + 1)) * lin.noise(i, j);
                }
            }
            proj.noalias() = interior * basis.node_to_mode;
            proj.noalias() += mid * basis.cell_to_mode;
            amps.row(0).setZero();
            for (int r = 0; r < count; ++r) {
                for (int n = 0; n < m; ++n) {
                    amps(r + 1, n) = basis.decay[n] * amps(r, n) + basis.weight[n] * proj(r, n);
                }
            }
            // amps row r holds B(first + r)
            b.block(first + 1, 1, count, g.nx - 1).noalias() = amps.bottomRows(count) * basis.mode_to_node;
        }
        RowMatrix next = out.a_values + b;
        const double delta = (next - current).cwiseAbs().maxCoeff();
        out.deltas.push_back(delta);
        current.swap(next);
        out.b_values.swap(b);
        if (delta < options.tol) {
            out.converged = true;
            break;
        }
    }
    out.values = std::move(current);
    return out;
}

Decomposition ab_decompose(const DerivativeField& field) {
    if (!field.base) throw std::invalid_argument("ab_decompose: field has no base solution");
    const auto& g = field.base->grid();
    const RowMatrix rows =
        kernel_lag_rows(field.base->problem.kernel, g, field.y_index, std::max(1, g.nt - field.s_index));
    Decomposition out;
    out.a = source_rows(*field.base, field.s_index, field.y_index, rows, g.nt);
    // rows past a partial march carry no values
    for (int i = 0; i <= g.nt; ++i) {
        if (field.values.row(i).isZero(0.0) && field.b_values.row(i).isZero(0.0)) out.a.row(i).setZero();
    }
    out.b = field.b_values;
    return out;
}

DerivativeSlice derivative_slice(const SolutionField& base, const Linearization& lin, int t_index,
                                 int x_index, int s_lo) {
    const auto& g = base.grid();
    if (t_index < 1 || t_index > g.nt) throw std::out_of_range("derivative_slice: t_index out of range");
    if (x_index < 0 || x_index > g.nx) throw std::out_of_range("derivative_slice: x_index out of range");
    if (s_lo < 0 || s_lo >= t_index) throw std::out_of_range("derivative_slice: s_lo out of range");

    const auto& spec = base.problem.kernel;
    const int nx = g.nx;
    const int rows = t_index - s_lo;
    DerivativeSlice out;
    out.t_index = t_index;
    out.x_index = x_index;
    out.s_lo = s_lo;
    out.values = RowMatrix::Zero(rows, nx + 1);
    out.a = RowMatrix::Zero(rows, nx + 1);
    out.b = RowMatrix::Zero(rows, nx + 1);
    if (x_index == 0 || x_index == nx) return out;

    const double x = g.x(x_index);
    RowMatrix factor(rows, nx + 1);
    for (int k = 0; k < rows; ++k) {
        const int s = s_lo + k;
        for (int j = 0; j <= nx; ++j) {
            factor(k, j) = (j == 0 || j == nx) ? 0.0 : source_factor(base, s, j);
            if (factor(k, j) != 0.0) out.a(k, j) = factor(k, j) * lag_kernel(spec, g, t_index - s, x, g.x(j));
        }
    }

    if (!lin.vanishes && rows > 1) {
        const ModalBasis basis(g, base.problem.mode_count());
        const int m = basis.modes;
        // z.row(l - s_lo): sensitivity of D(t, x) to the source a(l, .), l = s_lo+1 .. t-1
        RowMatrix z = RowMatrix::Zero(rows, nx + 1);
        Eigen::VectorXd w = basis.mode_to_node.col(x_index - 1);
        Eigen::VectorXd q(m);
        for (int l = t_index - 1; l > s_lo; --l) {
            for (int n = 0; n < m; ++n) q[n] = basis.weight[n] * w[n];
            const Eigen::VectorXd p_int = basis.node_to_mode * q;
            const Eigen::VectorXd p_mid = basis.cell_to_mode * q;
            auto zl = z.row(l - s_lo);
            for (int j = 1; j < nx; ++j) zl[j] = lin.drift(l, j - 1) * p_int[j - 1];
            for (int j = 0; j < nx; ++j) {
                const double r = 0.5 * lin.noise(l, j) * p_mid[j];
                zl[j] += r;
                zl[j + 1] += r;
            }
            zl[0] = zl[nx] = 0.0;
            const Eigen::VectorXd zin = zl.segment(1, nx - 1).transpose();
            Eigen::VectorXd next = basis.mode_to_node * zin;
            for (int n = 0; n < m; ++n) next[n] += basis.decay[n] * w[n];
            w.swap(next);
        }

        // b(s, y) = c(s, y) sum_{l>s} sum_j z_l(j) G_{(l-s)dt}(x_j, y), summed per sine mode
        const int terms = static_cast<int>(spec.n_terms());
        RowMatrix sines(nx + 1, terms);
        for (int j = 0; j <= nx; ++j) {
            for (int n = 1; n <= terms; ++n) sines(j, n - 1) = sin_ratio(static_cast<long long>(n) * j, nx);
        }
        const RowMatrix zhat = z * sines;
        std::vector<double> e(terms);
        for (int n = 1; n <= terms; ++n) e[n - 1] = std::exp(-kPi2 * n * n * g.dt());
        RowMatrix rsum = RowMatrix::Zero(rows, terms);
        for (int k = rows - 2; k >= 0; --k) {
            for (int n = 0; n < terms; ++n) rsum(k, n) = e[n] * (zhat(k + 1, n) + rsum(k + 1, n));
        }
        RowMatrix conv = 2.0 * rsum * sines.transpose();

        // lags below t_floor: swap the series for the image sum
        for (int d = 1; d < rows && d * g.dt() < spec.t_floor(); ++d) {
            RowMatrix diff(nx + 1, nx + 1);
            for (int i = 0; i <= nx; ++i) {
                for (int j = 0; j <= nx; ++j) {
                    double series = 0.0;
                    for (int n = 0; n < terms; ++n) {
                        series += 2.0 * std::pow(e[n], d) * sines(i, n) * sines(j, n);
                    }
                    diff(i, j) = eval_kernel_images(d * g.dt(), g.x(i), g.x(j)) - series;
                }
            }
            for (int k = 0; k + d < rows; ++k) conv.row(k).noalias() += z.row(k + d) * diff;
        }
        out.b = conv.cwiseProduct(factor);
    }
    out.values = out.a + out.b;
    return out;
}

double malliavin_norm_quadrature(std::span<const double> s_times, std::span<const double> y_points,
                                 const RowMatrix& values, double t) {
    if (s_times.empty() || y_points.empty()) return 0.0;
    if (values.rows() != static_cast<Eigen::Index>(s_times.size()) ||
        values.cols() != static_cast<Eigen::Index>(y_points.size())) {
        throw std::invalid_argument("malliavin_norm_quadrature: shape mismatch");
    }
    std::vector<double> ys;
    ys.reserve(y_points.size() + 2);
    const bool lead = y_points.front() > 0.0;
    const bool trail = y_points.back() < 1.0;
    if (lead) ys.push_back(0.0);
    ys.insert(ys.end(), y_points.begin(), y_points.end());
    if (trail) ys.push_back(1.0);

    std::vector<double> fs(s_times.size());
    std::vector<double> sq(ys.size(), 0.0);
    for (std::size_t k = 0; k < s_times.size(); ++k) {
        for (std::size_t j = 0; j < y_points.size(); ++j) {
            const double v = values(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j));
            sq[j + (lead ? 1 : 0)] = v * v;
        }
        fs[k] = trapezoid(ys, sq);
    }
    double total = trapezoid(s_times, fs);
    total += s_times.front() * fs.front();
    // F(s) ~ (t - s)^{-1/2} on the last interval
    total += 2.0 * (t - s_times.back()) * fs.back();
    return total;
}

double malliavin_norm(std::span<const DerivativeField> fields, int t_index, int x_index) {
    if (t_index <= 0 || fields.empty()) return 0.0;
    const auto& g = fields.front().base->grid();
    std::map<int, int> s_pos, y_pos;
    for (const auto& f : fields) {
        if (f.s_index < t_index) s_pos.emplace(f.s_index, 0);
        y_pos.emplace(f.y_index, 0);
    }
    if (s_pos.empty()) return 0.0;
    std::vector<double> s_times, y_points;
    for (auto& [s, pos] : s_pos) {
        pos = static_cast<int>(s_times.size());
        s_times.push_back(g.t(s));
    }
    for (auto& [y, pos] : y_pos) {
        pos = static_cast<int>(y_points.size());
        y_points.push_back(g.x(y));
    }
    RowMatrix values = RowMatrix::Constant(static_cast<Eigen::Index>(s_times.size()),
                                           static_cast<Eigen::Index>(y_points.size()),
                                           std::numeric_limits<double>::quiet_NaN());
    for (const auto& f : fields) {
        if (f.s_index >= t_index) continue;
        values(s_pos[f.s_index], y_pos[f.y_index]) = f.values(t_index, x_index);
    }
    if (values.hasNaN()) throw std::invalid_argument("malliavin_norm: sources do not cover a regular sub-grid");
    return malliavin_norm_quadrature(s_times, y_points, values, g.t(t_index));
}

WindowIntegrals window_integrals(const SolutionField& base, int t_index, int x_index,
                                 std::span<const int> eps_steps) {
    if (eps_steps.empty()) return {};
    const int widest = *std::max_element(eps_steps.begin(), eps_steps.end());
    if (widest < 1 || widest > t_index) throw std::invalid_argument("window_integrals: window outside [0, t]");
    const auto& g = base.grid();
    const Linearization lin = linearize(base);
    const DerivativeSlice slice = derivative_slice(base, lin, t_index, x_index, t_index - widest);
    const int rows = widest;
    std::vector<double> fa(rows), fb(rows);
    for (int k = 0; k < rows; ++k) {
        fa[k] = y_energy(slice.a.row(k), g.dx());
        fb[k] = y_energy(slice.b.row(k), g.dx());
    }
    const double dt = g.dt();
    WindowIntegrals out;
    for (int e : eps_steps) {
        if (e < 1) throw std::invalid_argument("window_integrals: empty window");
        double ia = 0.0, ib = 0.0;
        for (int k = rows - e; k < rows - 1; ++k) {
            ia += 0.5 * dt * (fa[k] + fa[k + 1]);
            ib += 0.5 * dt * (fb[k] + fb[k + 1]);
        }
        // last cell [t - dt, t]: a^2 ~ (t - s)^{-1/2}, b^2 -> 0 linearly
        ia += 2.0 * dt * fa[rows - 1];
        ib += 0.5 * dt * fb[rows - 1];
        out.a2.push_back(ia);
        out.b2.push_back(ib);
    }
    return out;
}

void check_probe_point(double x, double l) {
    if (!(l > 0.0) || !(l < 0.5) || x < l || x > 1.0 - l) {
        throw std::domain_error("positivity_probe: x must lie in [l, 1 - l] with 0 < l < 1/2");
    }
}

std::vector<PositivityRow> positivity_table(std::span<const WindowIntegrals> per_seed,
                                            std::span<const double> eps_list, double x, double l,
                                            double c0, double tolerance) {
    check_probe_point(x, l);
    const double s1 = std::sin(kPi * l), s2 = std::sin(kPi * (1.0 - l));
    const double floor_sin = std::min(s1 * s1, s2 * s2);
    const double c1 = 2.0 * c0 * c0;
    std::vector<PositivityRow> table;
    for (std::size_t k = 0; k < eps_list.size(); ++k) {
        PositivityRow row;
        row.eps = eps_list[k];
        row.lower_bound = 0.5 * c1 * floor_sin * row.eps;
        row.min_a2 = std::numeric_limits<double>::infinity();
        std::size_t positive = 0;
        for (const auto& w : per_seed) {
            if (w.a2.size() != eps_list.size() || w.b2.size() != eps_list.size()) {
                throw std::invalid_argument("positivity_table: window count mismatch");
            }
            row.mean_a2 += w.a2[k];
            row.mean_b2 += w.b2[k];
            row.min_a2 = std::min(row.min_a2, w.a2[k]);
            if (0.5 * w.a2[k] - w.b2[k] > 0.0) ++positive;
        }
        const double n = static_cast<double>(per_seed.size());
        if (per_seed.empty()) {
            row.min_a2 = 0.0;
        } else {
            row.mean_a2 /= n;
            row.mean_b2 /= n;
            row.fraction_positive = static_cast<double>(positive) / n;
        }
        if (row.eps < 3.0 / (4.0 * kPi2)) row.bound_holds = row.min_a2 >= row.lower_bound * (1.0 - tolerance);
        table.push_back(row);
    }
    return table;
}

KolmogorovAccumulator::KolmogorovAccumulator(int t_index, int x_index, double p,
                                             std::vector<int> space_offsets, std::vector<int> time_offsets)
    : t_index_(t_index), x_index_(x_index), p_(p), dx_(std::move(space_offsets)),
      dt_(std::move(time_offsets)), sx_(dx_.size(), 0.0), st_(dt_.size(), 0.0) {
    if (!(p > 4.0)) throw std::invalid_argument("kolmogorov_fit: p must exceed 4");
    if (dx_.size() < 2 || dt_.size() < 2) throw std::invalid_argument("kolmogorov_fit: need two offsets per axis");
}

void KolmogorovAccumulator::add(const DerivativeField& field) {
    const auto& g = field.base->grid();
    const auto& v = field.values;
    for (std::size_t k = 0; k < dx_.size(); ++k) {
        const int j = x_index_ + dx_[k];
        if (j < 0 || j > g.nx) throw std::out_of_range("kolmogorov_fit: spatial offset leaves the grid");
        sx_[k] += std::pow(std::abs(v(t_index_, j) - v(t_index_, x_index_)), p_);
    }
    for (std::size_t k = 0; k < dt_.size(); ++k) {
        const int i = t_index_ + dt_[k];
        if (i <= field.s_index || i > g.nt) throw std::out_of_range("kolmogorov_fit: temporal offset leaves (s, T]");
        st_[k] += std::pow(std::abs(v(i, x_index_) - v(t_index_, x_index_)), p_);
    }
    ++count_;
}

void KolmogorovAccumulator::merge(const KolmogorovAccumulator& other) {
    if (other.t_index_ != t_index_ || other.x_index_ != x_index_ || other.p_ != p_ || other.dx_ != dx_ ||
        other.dt_ != dt_) {
        throw std::invalid_argument("kolmogorov_fit: merging accumulators with different targets");
    }
    for (std::size_t k = 0; k < sx_.size(); ++k) sx_[k] += other.sx_[k];
    for (std::size_t k = 0; k < st_.size(); ++k) st_[k] += other.st_[k];
    count_ += other.count_;
}

KolmogorovAccumulator::Fit KolmogorovAccumulator::fit(const GridSpec& grid) const {
    if (count_ == 0) throw std::invalid_argument("kolmogorov_fit: no fields");
    Fit out;
    std::vector<double> hx, ht;
    for (std::size_t k = 0; k < dx_.size(); ++k) {
        hx.push_back(std::abs(dx_[k]) * grid.dx());
        out.space_moments.push_back(sx_[k] / static_cast<double>(count_));
    }
    for (std::size_t k = 0; k < dt_.size(); ++k) {
        ht.push_back(std::abs(dt_[k]) * grid.dt());
        out.time_moments.push_back(st_[k] / static_cast<double>(count_));
    }
    out.beta = power_law_exponent(hx, out.space_moments);
    out.alpha = power_law_exponent(ht, out.time_moments);
    return out;
}

KolmogorovAccumulator::Fit kolmogorov_fit(std::span<const DerivativeField> fields, int t_index,
                                          int x_index, double p, std::vector<int> space_offsets,
                                          std::vector<int> time_offsets) {
    if (fields.empty()) throw std::invalid_argument("kolmogorov_fit: no fields");
    KolmogorovAccumulator acc(t_index, x_index, p, std::move(space_offsets), std::move(time_offsets));
    for (const auto& f : fields) acc.add(f);
    return acc.fit(fields.front().base->grid());
}

std::vector<double> localized_derivative_norms(std::shared_ptr<const SolutionField> base,
                                               const Linearization& lin, int t_hat_index,
                                               std::span<const int> eps_steps,
                                               std::span<const int> lags,
                                               std::span<const int> y_indices) {
    const auto& g = base->grid();
    std::vector<int> sorted(lags.begin(), lags.end());
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    if (sorted.empty() || sorted.front() != 1) throw std::invalid_argument("localized_derivative_norms: lags must include 1");
    if (sorted.back() > t_hat_index) throw std::invalid_argument("localized_derivative_norms: lag reaches before t = 0");
    for (int e : eps_steps) {
        if (!std::binary_search(sorted.begin(), sorted.end(), e)) {
            throw std::invalid_argument("localized_derivative_norms: every window must be a lag");
        }
    }
    std::vector<int> ys(y_indices.begin(), y_indices.end());
    std::sort(ys.begin(), ys.end());

    const ModalBasis basis(g, base->problem.mode_count());
    RowMatrix sup2(sorted.size(), ys.size());
    for (std::size_t c = 0; c < ys.size(); ++c) {
        const RowMatrix rows = kernel_lag_rows(base->problem.kernel, g, ys[c], sorted.back());
        for (std::size_t r = 0; r < sorted.size(); ++r) {
            const int s = t_hat_index - sorted[r];
            const DerivativeField f = march(base, basis, lin, s, ys[c], t_hat_index, rows);
            const double sup = f.values.row(t_hat_index).cwiseAbs().maxCoeff();
            sup2(r, c) = sup * sup;
        }
    }
    // integrate over y (zeros at the walls), then over the lag tau = t_hat - s
    std::vector<double> yq{0.0}, vq(ys.size() + 2, 0.0);
    for (int y : ys) yq.push_back(g.x(y));
    yq.push_back(1.0);
    std::vector<double> taus, fy;
    for (std::size_t r = 0; r < sorted.size(); ++r) {
        for (std::size_t c = 0; c < ys.size(); ++c) vq[c + 1] = sup2(r, c);
        taus.push_back(sorted[r] * g.dt());
        fy.push_back(trapezoid(yq, vq));
    }
    std::vector<double> out;
    for (int e : eps_steps) {
        const auto end = std::upper_bound(sorted.begin(), sorted.end(), e) - sorted.begin();
        double total = g.dt() * fy.front();
        total += trapezoid(std::span<const double>(taus.data(), static_cast<std::size_t>(end)),
                           std::span<const double>(fy.data(), static_cast<std::size_t>(end)));
        out.push_back(total);
    }
    return out;
}

}  // namespace spde
