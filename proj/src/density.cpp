#include "spde/density.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

#include "spde/stats.hpp"

namespace spde {

double DensityEstimate::mass() const { return trapezoid(eval_grid, density); }

double DensityEstimate::operator()(double x) const {
    if (eval_grid.empty() || x < eval_grid.front() || x > eval_grid.back()) return 0.0;
    const auto it = std::upper_bound(eval_grid.begin(), eval_grid.end(), x);
    if (it == eval_grid.end()) return density.back();
    const auto k = static_cast<std::size_t>(it - eval_grid.begin());
    const double x0 = eval_grid[k - 1], x1 = eval_grid[k];
    const double w = (x - x0) / (x1 - x0);
    return (1.0 - w) * density[k - 1] + w * density[k];
}

double sample_mean(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("sample_mean: empty sample");
    double acc = 0.0;
    for (double v : values) acc += v;
    return acc / static_cast<double>(values.size());
}

double sample_variance(std::span<const double> values) {
    if (values.size() < 2) throw std::invalid_argument("sample_variance: need two samples");
    const double m = sample_mean(values);
    double acc = 0.0;
    for (double v : values) acc += (v - m) * (v - m);
    return acc / static_cast<double>(values.size() - 1);
}

DensityEstimate estimate_density(std::span<const double> values, BandwidthRule rule) {
    if (values.size() < kMinDensitySamples) {
        throw std::invalid_argument("estimate_density: at least 100 samples required");
    }
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *lo_it, hi = *hi_it;
    const double var = sample_variance(values);
    if (lo == hi || !(var > 0.0)) throw DegenerateLaw(lo);

    const double n = static_cast<double>(values.size());
    double h = rule.kind == BandwidthRule::Kind::fixed ? rule.value : 1.06 * std::sqrt(var) * std::pow(n, -0.2);
    if (!(h > 0.0)) throw std::invalid_argument("estimate_density: bandwidth must be positive");

    DensityEstimate out;
    out.samples = values.size();
    out.bandwidth = h;
    out.eval_grid = linspace(lo - 3.0 * h, hi + 3.0 * h, kDensityGridPoints);
    out.density.assign(kDensityGridPoints, 0.0);
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double norm = 1.0 / (n * h * std::sqrt(2.0 * kPi));
    const double reach = 9.0 * h;  // exp(-40.5) is below double resolution of the sum
    for (std::size_t k = 0; k < kDensityGridPoints; ++k) {
        const double x = out.eval_grid[k];
        auto it = std::lower_bound(sorted.begin(), sorted.end(), x - reach);
        double acc = 0.0;
        for (; it != sorted.end() && *it <= x + reach; ++it) {
            const double z = (x - *it) / h;
            acc += std::exp(-0.5 * z * z);
        }
        out.density[k] = acc * norm;
    }
    return out;
}

double normal_cdf(double x, double mean, double sd) {
    return 0.5 * std::erfc(-(x - mean) / (sd * std::sqrt(2.0)));
}

double ks_statistic(std::span<const double> values, const std::function<double(double)>& cdf) {
    if (values.empty()) throw std::invalid_argument("ks_statistic: empty sample");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double f = cdf(sorted[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}

double l1_distance(const DensityEstimate& p, const DensityEstimate& q, std::size_t points) {
    if (p.eval_grid.empty() || q.eval_grid.empty()) throw std::invalid_argument("l1_distance: empty estimate");
    const double lo = std::min(p.eval_grid.front(), q.eval_grid.front());
    const double hi = std::max(p.eval_grid.back(), q.eval_grid.back());
    const auto grid = linspace(lo, hi, std::max<std::size_t>(points, 2));
    std::vector<double> diff(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) diff[k] = std::abs(p(grid[k]) - q(grid[k]));
    return trapezoid(grid, diff);
}

double window_sup(const SolutionField& field, const SupWindow& w) {
    const auto& g = field.grid();
    if (!(w.x_lo > 0.0) || !(w.x_hi < 1.0) || w.x_lo > w.x_hi || w.t_lo < 0.0 || w.t_hi > g.T ||
        w.t_lo >= w.t_hi) {
        throw std::invalid_argument("sup_samples: window must sit inside (0,1) x (0,T]");
    }
    double best = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (int i = 1; i <= g.nt; ++i) {
        const double t = g.t(i);
        if (t <= w.t_lo || t > w.t_hi) continue;
        for (int j = 1; j < g.nx; ++j) {
            const double x = g.x(j);
            if (x < w.x_lo || x > w.x_hi) continue;
            best = std::max(best, field(i, j));
            any = true;
        }
    }
    if (!any) throw std::invalid_argument("sup_samples: window contains no grid node");
    return best;
}

std::vector<double> sup_samples(std::span<const SolutionField> ensemble, const SupWindow& window) {
    std::vector<double> out;
    out.reserve(ensemble.size());
    for (const auto& f : ensemble) out.push_back(window_sup(f, window));
    return out;
}

RefinementReport refinement_stability(std::span<const double> coarse, std::span<const double> fine) {
    RefinementReport r;
    std::optional<DensityEstimate> pc, pf;
    double loc_c = 0.0, loc_f = 0.0;
    try {
        pc = estimate_density(coarse);
    } catch (const DegenerateLaw& e) {
        r.coarse_degenerate = true;
        loc_c = e.location();
    }
    try {
        pf = estimate_density(fine);
    } catch (const DegenerateLaw& e) {
        r.fine_degenerate = true;
        loc_f = e.location();
    }
    if (pc && pf) {
        r.l1 = l1_distance(*pc, *pf);
    } else if (!pc && !pf) {
        r.location_gap = std::abs(loc_c - loc_f);
        r.l1 = loc_c == loc_f ? 0.0 : 2.0;
    } else {
        r.l1 = 2.0;  // a point mass against a density
    }
    return r;
}

void write_density_csv(const std::filesystem::path& path, const DensityEstimate& estimate,
                       const std::string& header_json) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_density_csv: cannot open " + path.string());
    out << "# " << header_json << "\n";
    out << "abscissa,density\n";
    out << std::setprecision(17);
    for (std::size_t k = 0; k < estimate.eval_grid.size(); ++k) {
        out << estimate.eval_grid[k] << "," << estimate.density[k] << "\n";
    }
}

}  // namespace spde
