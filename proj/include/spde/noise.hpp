#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace spde {

/// Uniform space-time grid on [0,T] x [0,1].
struct GridSpec {
    int nx = 64;     // spatial cells; nodes x_j = j / nx, j = 0..nx
    int nt = 1024;   // time steps; nodes t_i = i T / nt, i = 0..nt
    double T = 0.25;

    GridSpec() = default;
    GridSpec(int nx_, int nt_, double T_);

    /// Throws std::invalid_argument unless nx >= 2, nt >= 1 and T > 0.
    void validate() const;

    double dx() const noexcept { return 1.0 / nx; }
    double dt() const noexcept { return T / nt; }
    double x(int j) const noexcept { return static_cast<double>(j) / nx; }
    double x_mid(int j) const noexcept { return (static_cast<double>(j) + 0.5) / nx; }
    double t(int i) const noexcept { return T * static_cast<double>(i) / nt; }

    /// The (2 nx, 4 nt) grid used for coupled refinement.
    GridSpec refined() const { return GridSpec(2 * nx, 4 * nt, T); }

    bool operator==(const GridSpec&) const = default;
};

/// Philox4x32-10 counter-based generator.
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter generate(Counter ctr, Key key) noexcept;
    static Key key_from_seed(std::uint64_t seed) noexcept {
        return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    }
};

/// Two independent standard normals for counter `ctr` under `key` (Box-Muller
/// on two 53-bit uniforms).
std::array<double, 2> philox_normal_pair(Philox4x32::Counter ctr, Philox4x32::Key key) noexcept;

/// One realization of discretized space-time white noise: cell (i,j) covers
/// [t_i, t_{i+1}) x [x_j, x_{j+1}) and holds an N(0, dt dx) increment.
/// Immutable after construction.
class NoiseField {
public:
    NoiseField(GridSpec grid, std::uint64_t seed, int level, std::vector<double> increments);

    const GridSpec& grid() const noexcept { return grid_; }
    std::uint64_t seed() const noexcept { return seed_; }
    /// 0 for a freshly sampled field, +1 per coupled refinement.
    int level() const noexcept { return level_; }
    bool is_zero() const noexcept { return zero_; }

    double operator()(int i, int j) const noexcept {
        return increments_[static_cast<std::size_t>(i) * grid_.nx + j];
    }
    std::span<const double> row(int i) const noexcept {
        return {increments_.data() + static_cast<std::size_t>(i) * grid_.nx,
                static_cast<std::size_t>(grid_.nx)};
    }
    std::span<const double> increments() const noexcept { return increments_; }

private:
    GridSpec grid_;
    std::uint64_t seed_;
    int level_;
    bool zero_ = false;
    std::vector<double> increments_;

    friend NoiseField zero_noise(const GridSpec& grid);
};

/// Deterministic in (grid, seed). Cell (i,j) is addressable through the
/// Philox counter (i, j/2, 0, 0) keyed by the seed.
NoiseField sample_noise(const GridSpec& grid, std::uint64_t seed);

/// A zero field on `grid` (deterministic control runs).
NoiseField zero_noise(const GridSpec& grid);

/// Splits each cell into 2 (space) x 4 (time) children whose increments sum to
/// the parent's and are jointly distributed as white noise on the refined grid.
NoiseField refine_noise(const NoiseField& parent);

/// Brings a level-0 field down the refinement chain `levels` times.
NoiseField sample_refined_noise(const GridSpec& base, std::uint64_t seed, int levels);

/// sum_{i,j} integrand(i,j) * increment(i,j).
template <typename Integrand>
double walsh_integral(const NoiseField& field, Integrand&& integrand) {
    const auto& g = field.grid();
    double acc = 0.0;
    for (int i = 0; i < g.nt; ++i) {
        const auto r = field.row(i);
        for (int j = 0; j < g.nx; ++j) acc += integrand(i, j) * r[j];
    }
    return acc;
}

/// Flat binary dump: int32 nx, int32 nt, float64 T, then float64 values row-major
/// (time x space), all little-endian.
void write_grid_binary(const std::filesystem::path& path, const GridSpec& grid,
                       std::span<const double> values);
std::vector<double> read_grid_binary(const std::filesystem::path& path, GridSpec& grid);

void write_noise(const std::filesystem::path& path, const NoiseField& field);
NoiseField read_noise(const std::filesystem::path& path, std::uint64_t seed);

/// Parses decimal or 0x-prefixed hexadecimal seeds.
std::uint64_t parse_seed(const std::string& text);

}  // namespace spde
