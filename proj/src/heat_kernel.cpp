#include "spde/heat_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace spde {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_unit(double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) {
        throw std::domain_error(std::string("heat_kernel: ") + name + " must lie in [0,1]");
    }
}

bool on_boundary(double v) { return v == 0.0 || v == 1.0; }

// Squared L2(dz) distance between G_{t-r}(x,.) and G_{s-r}(y,.) via sine orthogonality:
// sum_n 2 (e^{-lam_n (t-r)} X_n - e^{-lam_n (s-r)} Y_n)^2, the second term dropped for r >= s.
class DifferenceEnergy {
public:
    DifferenceEnergy(std::size_t n_terms, double x, double y) : xs_(n_terms), ys_(n_terms) {
        for (std::size_t n = 1; n <= n_terms; ++n) {
            xs_[n - 1] = on_boundary(x) ? 0.0 : std::sin(static_cast<double>(n) * kPi * x);
            ys_[n - 1] = on_boundary(y) ? 0.0 : std::sin(static_cast<double>(n) * kPi * y);
        }
    }

    double operator()(double lag_t, double lag_s) const {
        const bool with_s = lag_s > 0.0;
        // q^{n^2} by the recurrence e_{n+1} = e_n q^{2n+1}
        const double qt = std::exp(-kPi2 * lag_t);
        const double qs = with_s ? std::exp(-kPi2 * lag_s) : 0.0;
        double et = qt, gt = qt * qt * qt, qt2 = qt * qt;
        double es = qs, gs = qs * qs * qs, qs2 = qs * qs;
        double acc = 0.0;
        for (std::size_t i = 0; i < xs_.size(); ++i) {
            const double d = et * xs_[i] - es * ys_[i];
            acc += d * d;
            if (et < 1e-20 && es < 1e-20) break;
            et *= gt;
            gt *= qt2;
            es *= gs;
            gs *= qs2;
        }
        return 2.0 * acc;
    }

private:
    std::vector<double> xs_;
    std::vector<double> ys_;
};

// Integrates `fn(r)` over [a,b] on panels clustered geometrically toward b.
template <typename Fn>
double graded_integral(double a, double b, const GradedQuadrature& quad,
                       const std::vector<double>& gl_x, const std::vector<double>& gl_w, Fn&& fn) {
    const double len = b - a;
    if (!(len > 0.0)) return 0.0;
    const double ratio = std::pow(1e-13, 1.0 / static_cast<double>(quad.panels));
    double acc = 0.0;
    double left_gap = len;  // distance from b of the panel's left end
    for (std::size_t k = 0; k <= quad.panels; ++k) {
        const double right_gap = (k == quad.panels) ? 0.0 : left_gap * ratio;
        const double lo = b - left_gap;
        const double hi = b - right_gap;
        const double half = 0.5 * (hi - lo);
        const double mid = 0.5 * (hi + lo);
        for (std::size_t g = 0; g < gl_x.size(); ++g) {
            acc += gl_w[g] * half * fn(mid + half * gl_x[g]);
        }
        left_gap = right_gap;
    }
    return acc;
}

// int_0^t h(r)^power dr with the singular points r = s and r = t resolved.
double difference_energy_integral(const KernelSpec& spec, double s, double t, double x, double y,
                                  double power, const GradedQuadrature& quad) {
    const DifferenceEnergy energy(spec.n_terms(), x, y);
    std::vector<double> gl_x, gl_w;
    gauss_legendre(quad.order, gl_x, gl_w);
    auto integrand = [&](double r) {
        const double h = energy(t - r, s - r);
        return power == 1.0 ? h : std::pow(h, power);
    };
    return graded_integral(0.0, s, quad, gl_x, gl_w, integrand) +
           graded_integral(s, t, quad, gl_x, gl_w, integrand);
}

void check_time_pair(double s, double t) {
    if (!(s >= 0.0 && t >= s)) throw std::domain_error("heat_kernel: requires 0 <= s <= t");
}

}  // namespace

KernelSpec::KernelSpec(std::size_t n_terms, double t_floor) : n_terms_(n_terms), t_floor_(t_floor) {
    if (n_terms_ < 1) throw std::invalid_argument("KernelSpec: n_terms must be >= 1");
    if (!(t_floor_ > 0.0)) throw std::invalid_argument("KernelSpec: t_floor must be positive");
}

KernelSpec KernelSpec::for_floor(double t_floor, double tail_tol, std::size_t cap) {
    if (!(t_floor > 0.0)) throw std::invalid_argument("KernelSpec: t_floor must be positive");
    std::size_t n = 1;
    while (n < cap && KernelSpec(n, t_floor).tail_bound() >= tail_tol) ++n;
    return KernelSpec(n, t_floor);
}

double KernelSpec::tail_bound() const noexcept {
    const double nn = static_cast<double>(n_terms_);
    return 2.0 * std::exp(-kPi2 * nn * nn * t_floor_) / (-std::expm1(-kPi2 * t_floor_));
}

double eval_kernel(const KernelSpec& spec, double t, double x, double y) {
    if (!(t >= spec.t_floor())) {
        throw std::domain_error("eval_kernel: t below t_floor; raise N or use the image sum");
    }
    require_unit(x, "x");
    require_unit(y, "y");
    if (on_boundary(x) || on_boundary(y)) return 0.0;
    double acc = 0.0;
    for (std::size_t n = 1; n <= spec.n_terms(); ++n) {
        const double nd = static_cast<double>(n);
        const double decay = std::exp(-kPi2 * nd * nd * t);
        if (decay < 1e-25) break;
        acc += decay * (std::sin(nd * kPi * x) * std::sin(nd * kPi * y));
    }
    return 2.0 * acc;
}

double eval_kernel_images(double t, double x, double y) {
    if (!(t > 0.0)) throw std::domain_error("eval_kernel_images: t must be positive");
    require_unit(x, "x");
    require_unit(y, "y");
    if (on_boundary(x) || on_boundary(y)) return 0.0;
    const double norm = 1.0 / std::sqrt(4.0 * kPi * t);
    auto phi = [&](double z) { return norm * std::exp(-z * z / (4.0 * t)); };
    double acc = phi(x - y) - phi(x + y);
    for (int k = 1;; ++k) {
        const double shift = 2.0 * k;
        const double a = phi(x - y + shift), b = phi(x - y - shift);
        const double c = phi(x + y + shift), d = phi(x + y - shift);
        acc += (a + b) - (c + d);
        if (std::max({a, b, c, d}) < 1e-15) break;
    }
    return acc;
}

double eval_kernel_any(const KernelSpec& spec, double t, double x, double y) {
    return t >= spec.t_floor() ? eval_kernel(spec, t, x, y) : eval_kernel_images(t, x, y);
}

double gaussian_bound_check(const KernelSpec& spec, double t, double x, double y) {
    const double g = eval_kernel(spec, t, x, y);
    // terms are at most 2 in size, so the summed rounding error stays below this
    const double floor = 4.0 * static_cast<double>(spec.n_terms()) * std::numeric_limits<double>::epsilon();
    if (g <= floor) return 0.0;
    const double free = std::exp(-(x - y) * (x - y) / (4.0 * t)) / std::sqrt(4.0 * kPi * t);
    return (g - floor) / free;
}

double semigroup_defect(const KernelSpec& spec, double s, double t, double x, double y,
                        std::size_t quad_points) {
    if (quad_points < 2) throw std::invalid_argument("semigroup_defect: quad_points must be >= 2");
    const double h = 1.0 / static_cast<double>(quad_points);
    double acc = 0.0;
    for (std::size_t k = 1; k < quad_points; ++k) {
        const double z = static_cast<double>(k) * h;
        acc += eval_kernel(spec, s, x, z) * eval_kernel(spec, t, z, y);
    }
    return std::abs(acc * h - eval_kernel(spec, s + t, x, y));
}

double mass_integral(const KernelSpec& spec, double t, double x, std::size_t quad_points) {
    const double h = 1.0 / static_cast<double>(quad_points);
    double acc = 0.0;
    for (std::size_t k = 1; k < quad_points; ++k) {
        acc += eval_kernel(spec, t, x, static_cast<double>(k) * h);
    }
    return acc * h;
}

double parseval_defect(const KernelSpec& spec, double u, double x, std::size_t quad_points) {
    const double h = 1.0 / static_cast<double>(quad_points);
    double quad = 0.0;
    for (std::size_t k = 1; k < quad_points; ++k) {
        const double g = eval_kernel(spec, u, x, static_cast<double>(k) * h);
        quad += g * g;
    }
    double series = 0.0;
    for (std::size_t n = 1; n <= spec.n_terms(); ++n) {
        const double nd = static_cast<double>(n);
        const double sn = std::sin(nd * kPi * x);
        series += 2.0 * std::exp(-2.0 * kPi2 * nd * nd * u) * sn * sn;
    }
    return std::abs(quad * h - series);
}

double l2_time_integral(const KernelSpec& spec, double t, double x) {
    require_unit(x, "x");
    if (!(t >= 0.0)) throw std::domain_error("l2_time_integral: t must be >= 0");
    if (t == 0.0 || on_boundary(x)) return 0.0;
    if (t >= 0.5 * spec.t_floor()) {
        double acc = 0.0;
        for (std::size_t n = 1; n <= spec.n_terms(); ++n) {
            const double nd = static_cast<double>(n);
            const double lam = kPi2 * nd * nd;
            const double sn = std::sin(nd * kPi * x);
            acc += sn * sn * std::exp(-2.0 * lam * t) / lam;
        }
        return 0.5 * x * (1.0 - x) - acc;
    }
    // int_0^t G_{2u}(x,x) du with u = v^2
    std::vector<double> gl_x, gl_w;
    gauss_legendre(64, gl_x, gl_w);
    const double vmax = std::sqrt(t);
    double acc = 0.0;
    for (std::size_t g = 0; g < gl_x.size(); ++g) {
        const double v = 0.5 * vmax * (gl_x[g] + 1.0);
        acc += gl_w[g] * 2.0 * v * eval_kernel_images(2.0 * v * v, x, x);
    }
    return 0.5 * vmax * acc;
}

double window_energy(const KernelSpec& spec, double eps) {
    double acc = 0.0;
    for (std::size_t k = 1; k <= spec.n_terms(); ++k) {
        const double kd = static_cast<double>(k);
        const double lam2 = 2.0 * kPi2 * kd * kd;
        acc += -std::expm1(-lam2 * eps) / lam2;
    }
    return acc;
}

double g2_operator_ratio(const KernelSpec& spec, double t, double x, double p) {
    if (!(p > 1.0)) throw std::domain_error("g2_operator_ratio: p must exceed 1");
    if (!(t > 0.0)) throw std::domain_error("g2_operator_ratio: t must be positive");
    const double bound = 2.0 * p * std::pow(t, 1.0 / (2.0 * p));
    return l2_time_integral(spec, t, x) / bound;
}

double lemma_a1_ratio(const KernelSpec& spec, double s, double t, double x, double y,
                      const GradedQuadrature& quad) {
    check_time_pair(s, t);
    require_unit(x, "x");
    require_unit(y, "y");
    if (s == t && x == y) return kNaN;
    const double scale = std::pow(t - s, 0.25) + std::sqrt(std::abs(x - y));
    const double num = difference_energy_integral(spec, s, t, x, y, 1.0, quad);
    return num / (scale * scale);
}

double lemma_a2_ratio(const KernelSpec& spec, double s, double t, double x, double y, double p,
                      const GradedQuadrature& quad) {
    if (!(p > 4.0)) throw std::domain_error("lemma_a2_ratio: p must exceed 4");
    check_time_pair(s, t);
    require_unit(x, "x");
    require_unit(y, "y");
    if (s == t && x == y) return kNaN;
    const double inner = difference_energy_integral(spec, s, t, x, y, p / (p - 2.0), quad);
    const double num = std::pow(inner, 0.5 * (p - 2.0));
    const double den =
        std::pow(std::abs(x - y), 0.5 * (p - 4.0)) + std::pow(t - s, 0.25 * (p - 4.0));
    return num / den;
}

void gauss_legendre(std::size_t n, std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.assign(n, 0.0);
    weights.assign(n, 0.0);
    const std::size_t half = (n + 1) / 2;
    for (std::size_t i = 0; i < half; ++i) {
        double z = std::cos(kPi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = 0.0;
            for (std::size_t j = 1; j <= n; ++j) {
                const double p2 = p1;
                p1 = p0;
                const double jd = static_cast<double>(j);
                p0 = ((2.0 * jd - 1.0) * z * p1 - (jd - 1.0) * p2) / jd;
            }
            dp = static_cast<double>(n) * (z * p0 - p1) / (z * z - 1.0);
            const double step = p0 / dp;
            z -= step;
            if (std::abs(step) < 1e-16) break;
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = weights[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
}

}  // namespace spde
