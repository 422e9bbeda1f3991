#include "spde/noise.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "spde/heat_kernel.hpp"

namespace spde {

static_assert(std::endian::native == std::endian::little,
              "binary dumps assume a little-endian host");

namespace {

constexpr std::uint32_t kMulA = 0xD2511F53u;
constexpr std::uint32_t kMulB = 0xCD9E8D57u;
constexpr std::uint32_t kWeylA = 0x9E3779B9u;
constexpr std::uint32_t kWeylB = 0xBB67AE85u;

// Refinement counters carry this tag in word 2 so they never collide with base cells.
constexpr std::uint32_t kRefineTag = 0x80000000u;

double to_unit(std::uint32_t hi, std::uint32_t lo) noexcept {
    const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32 | lo) >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;  // open interval (0,1)
}

}  // namespace

GridSpec::GridSpec(int nx_, int nt_, double T_) : nx(nx_), nt(nt_), T(T_) { validate(); }

void GridSpec::validate() const {
    if (nx < 2) throw std::invalid_argument("GridSpec: nx must be >= 2");
    if (nt < 1) throw std::invalid_argument("GridSpec: nt must be >= 1");
    if (!(T > 0.0) || !std::isfinite(T)) throw std::invalid_argument("GridSpec: T must be > 0");
}

Philox4x32::Counter Philox4x32::generate(Counter ctr, Key key) noexcept {
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(kMulA) * ctr[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kMulB) * ctr[2];
        ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
               static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
        key[0] += kWeylA;
        key[1] += kWeylB;
    }
    return ctr;
}

std::array<double, 2> philox_normal_pair(Philox4x32::Counter ctr, Philox4x32::Key key) noexcept {
    const auto r = Philox4x32::generate(ctr, key);
    const double u1 = to_unit(r[0], r[1]);
    const double u2 = to_unit(r[2], r[3]);
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 2.0 * kPi * u2;
    return {rad * std::cos(ang), rad * std::sin(ang)};
}

NoiseField::NoiseField(GridSpec grid, std::uint64_t seed, int level, std::vector<double> increments)
    : grid_(grid), seed_(seed), level_(level), increments_(std::move(increments)) {
    grid_.validate();
    if (increments_.size() != static_cast<std::size_t>(grid_.nt) * grid_.nx) {
        throw std::invalid_argument("NoiseField: increment count does not match the grid");
    }
}

NoiseField sample_noise(const GridSpec& grid, std::uint64_t seed) {
    grid.validate();
    const auto key = Philox4x32::key_from_seed(seed);
    const double scale = std::sqrt(grid.dt() * grid.dx());
    std::vector<double> inc(static_cast<std::size_t>(grid.nt) * grid.nx);
    for (int i = 0; i < grid.nt; ++i) {
        double* row = inc.data() + static_cast<std::size_t>(i) * grid.nx;
        for (int j = 0; j < grid.nx; j += 2) {
            const auto z = philox_normal_pair(
                {static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j / 2), 0u, 0u}, key);
            row[j] = scale * z[0];
            if (j + 1 < grid.nx) row[j + 1] = scale * z[1];
        }
    }
    return NoiseField(grid, seed, 0, std::move(inc));
}

NoiseField zero_noise(const GridSpec& grid) {
    NoiseField f(grid, 0, 0, std::vector<double>(static_cast<std::size_t>(grid.nt) * grid.nx, 0.0));
    f.zero_ = true;
    return f;
}

NoiseField refine_noise(const NoiseField& parent) {
    const GridSpec& g = parent.grid();
    const GridSpec fine = g.refined();
    const int child_level = parent.level() + 1;
    const auto key = Philox4x32::key_from_seed(parent.seed());
    const double child_sd = std::sqrt(fine.dt() * fine.dx());
    std::vector<double> inc(static_cast<std::size_t>(fine.nt) * fine.nx);
    std::array<double, 8> z{};
    for (int i = 0; i < g.nt; ++i) {
        for (int j = 0; j < g.nx; ++j) {
            for (std::uint32_t k = 0; k < 4; ++k) {
                const auto pair = philox_normal_pair(
                    {static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j),
                     kRefineTag | static_cast<std::uint32_t>(child_level), k},
                    key);
                z[2 * k] = child_sd * pair[0];
                z[2 * k + 1] = child_sd * pair[1];
            }
            double mean = 0.0;
            for (double v : z) mean += v;
            mean /= 8.0;
            const double share = parent(i, j) / 8.0;
            // children: 4 time slices x 2 space halves
            for (int a = 0; a < 4; ++a) {
                for (int b = 0; b < 2; ++b) {
                    const std::size_t fi = static_cast<std::size_t>(4 * i + a);
                    inc[fi * fine.nx + 2 * j + b] = share + (z[2 * a + b] - mean);
                }
            }
        }
    }
    if (parent.is_zero()) return zero_noise(fine);
    return NoiseField(fine, parent.seed(), child_level, std::move(inc));
}

NoiseField sample_refined_noise(const GridSpec& base, std::uint64_t seed, int levels) {
    NoiseField f = sample_noise(base, seed);
    for (int l = 0; l < levels; ++l) f = refine_noise(f);
    return f;
}

void write_grid_binary(const std::filesystem::path& path, const GridSpec& grid,
                       std::span<const double> values) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    const std::int32_t nx = grid.nx, nt = grid.nt;
    const double T = grid.T;
    out.write(reinterpret_cast<const char*>(&nx), sizeof nx);
    out.write(reinterpret_cast<const char*>(&nt), sizeof nt);
    out.write(reinterpret_cast<const char*>(&T), sizeof T);
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size_bytes()));
}

std::vector<double> read_grid_binary(const std::filesystem::path& path, GridSpec& grid) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::int32_t nx = 0, nt = 0;
    double T = 0.0;
    in.read(reinterpret_cast<char*>(&nx), sizeof nx);
    in.read(reinterpret_cast<char*>(&nt), sizeof nt);
    in.read(reinterpret_cast<char*>(&T), sizeof T);
    if (!in) throw std::runtime_error("truncated header in " + path.string());
    grid = GridSpec(nx, nt, T);
    std::vector<double> values;
    double v = 0.0;
    while (in.read(reinterpret_cast<char*>(&v), sizeof v)) values.push_back(v);
    return values;
}

void write_noise(const std::filesystem::path& path, const NoiseField& field) {
    write_grid_binary(path, field.grid(), field.increments());
}

NoiseField read_noise(const std::filesystem::path& path, std::uint64_t seed) {
    GridSpec grid;
    auto values = read_grid_binary(path, grid);
    return NoiseField(grid, seed, 0, std::move(values));
}

std::uint64_t parse_seed(const std::string& text) {
    if (text.empty()) throw std::invalid_argument("empty seed");
    std::size_t pos = 0;
    std::uint64_t value = 0;
    try {
        if (text.size() > 2 && text[0] == '0' && (text[1] == 'x' || text[1] == 'X')) {
            value = std::stoull(text.substr(2), &pos, 16);
            pos += 2;
        } else {
            if (text[0] == '-') throw std::invalid_argument("negative");
            value = std::stoull(text, &pos, 10);
        }
    } catch (const std::exception&) {
        throw std::invalid_argument("invalid seed '" + text + "'");
    }
    if (pos != text.size()) throw std::invalid_argument("invalid seed '" + text + "'");
    return value;
}

}  // namespace spde
