#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "spde/coefficients.hpp"
#include "spde/noise.hpp"

namespace spde {

/// Invalid or unreadable configuration (CLI exit status 2).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SeedRange {
    std::uint64_t first = 1;
    std::uint64_t last = 1;  // inclusive

    std::size_t size() const noexcept { return static_cast<std::size_t>(last - first + 1); }
    std::uint64_t at(std::size_t k) const noexcept { return first + k; }
    /// The first `count` seeds of the same stream.
    SeedRange prefix(std::size_t count) const;
};

/// "a..b", a single seed, or either end in 0x-hex.
SeedRange parse_seed_range(const std::string& text);
std::string format_seed_range(const SeedRange& range);

struct RunConfig {
    std::string experiment;
    GridSpec grid;
    std::string family = "additive";
    std::vector<double> family_params;
    double cutoff = 5.0;
    double u0_amplitude = 1.0;
    SeedRange seeds;
    std::filesystem::path out_dir = "out";
    int threads = 1;
    /// Experiment-specific keys (eps lists, exponents, windows, thresholds).
    std::map<std::string, std::string> knobs;

    /// Set keys, in file order, for hashing and echoing.
    std::vector<std::pair<std::string, std::string>> entries;

    double number(const std::string& key) const;
    int integer(const std::string& key) const;
    std::vector<double> numbers(const std::string& key) const;
    std::vector<int> integers(const std::string& key) const;
    const std::string& text(const std::string& key) const;

    CoefficientPair pair() const { return make_family(family, family_params); }

    /// Canonical "key=value" lines with every default filled in.
    std::string canonical() const;
};

/// Parses the key=value grammar (or JSON when the text starts with '{'), fills
/// the experiment's defaults and validates. Throws ConfigError.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

/// Applies an override and re-validates (used by --seeds, --out, --threads).
void set_config_value(RunConfig& config, const std::string& key, const std::string& value);

/// Grid, family, seeds, knob names and the coefficient assumptions.
void validate_config(const RunConfig& config);

std::uint64_t fnv1a(const std::string& bytes);

}  // namespace spde
