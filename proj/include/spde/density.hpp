#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "spde/solver.hpp"

namespace spde {

/// Raised when a sample has zero variance: the law looks like a point mass.
class DegenerateLaw : public std::runtime_error {
public:
    explicit DegenerateLaw(double location)
        : std::runtime_error("density: samples have zero variance (degenerate law)"), location_(location) {}
    double location() const noexcept { return location_; }

private:
    double location_;
};

struct BandwidthRule {
    enum class Kind { silverman, fixed } kind = Kind::silverman;
    double value = 0.0;  // used by Kind::fixed

    static BandwidthRule silverman() { return {}; }
    static BandwidthRule fixed(double h) { return {Kind::fixed, h}; }
};

struct DensityEstimate {
    std::size_t samples = 0;
    double bandwidth = 0.0;
    std::vector<double> eval_grid;
    std::vector<double> density;
    std::optional<std::pair<std::string, double>> statistic_vs_reference;

    /// Trapezoid integral over eval_grid.
    double mass() const;
    /// Linear interpolation, zero outside the grid.
    double operator()(double x) const;
};

inline constexpr std::size_t kMinDensitySamples = 100;
inline constexpr std::size_t kDensityGridPoints = 512;

/// Gaussian-kernel density estimate on [min - 3h, max + 3h] (512 points).
/// Throws std::invalid_argument below 100 samples and DegenerateLaw on zero variance.
DensityEstimate estimate_density(std::span<const double> values,
                                 BandwidthRule rule = BandwidthRule::silverman());

double sample_mean(std::span<const double> values);
/// Unbiased sample variance.
double sample_variance(std::span<const double> values);

double normal_cdf(double x, double mean = 0.0, double sd = 1.0);

/// sup_x |F_n(x) - F(x)| for the empirical CDF of `values`.
double ks_statistic(std::span<const double> values, const std::function<double(double)>& cdf);

/// int |p - q| over a common grid covering both supports.
double l1_distance(const DensityEstimate& p, const DensityEstimate& q, std::size_t points = 2048);

struct SupWindow {
    double t_lo = 0.0;  // open end
    double t_hi = 0.0;  // closed end
    double x_lo = 0.25;
    double x_hi = 0.75;
};

/// max u(t_i, x_j) over grid nodes with t_lo < t_i <= t_hi and x_lo <= x_j <= x_hi.
/// Throws std::invalid_argument if the window contains no node or leaves (0,1) x (0,T].
double window_sup(const SolutionField& field, const SupWindow& window);

std::vector<double> sup_samples(std::span<const SolutionField> ensemble, const SupWindow& window);

/// Comparison of two sample sets standing for a coarse and a refined level.
struct RefinementReport {
    double l1 = 0.0;
    bool coarse_degenerate = false;
    bool fine_degenerate = false;
    /// |location difference| when both levels are point masses.
    double location_gap = 0.0;
};
RefinementReport refinement_stability(std::span<const double> coarse, std::span<const double> fine);

/// abscissa,density rows preceded by a single '#'-prefixed JSON header line.
void write_density_csv(const std::filesystem::path& path, const DensityEstimate& estimate,
                       const std::string& header_json);

}  // namespace spde
