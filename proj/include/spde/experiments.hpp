#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "spde/config.hpp"
#include "spde/density.hpp"
#include "spde/malliavin.hpp"

namespace spde {

struct Knob {
    std::string key;
    std::string default_value;
    std::string doc;
};

struct ExperimentInfo {
    std::string name;
    std::string summary;
    /// Defaults for the common keys (grid, family, seeds ...).
    std::vector<std::pair<std::string, std::string>> base_defaults;
    std::vector<Knob> knobs;
};

const std::vector<ExperimentInfo>& experiment_registry();
const ExperimentInfo& find_experiment(const std::string& name);

struct Assertion {
    std::string name;
    bool passed = false;
    double value = 0.0;
    double threshold = 0.0;
    std::string detail;
};

/// A parent/child pair of fields that share one noise path through refinement.
struct Coupling {
    std::uint64_t seed = 0;
    GridSpec parent;
    GridSpec child;
};

struct ExperimentResult {
    std::string experiment;
    std::vector<Assertion> assertions;
    std::vector<std::filesystem::path> artifacts;  // relative to the output directory
    std::vector<Coupling> couplings;

    bool passed() const;
};

/// Runs every assertion of the configured experiment, writing artifacts into
/// config.out_dir. Throws ConfigError for an unknown experiment.
ExperimentResult run_experiment(const RunConfig& config);

/// Writes <out_dir>/manifest.json for a finished run.
std::filesystem::path emit_manifest(const RunConfig& config, const ExperimentResult& result);

std::string format_assertion(const Assertion& a);

// ---- pipelines shared by the experiments and the acceptance suite ----

Problem make_problem(const RunConfig& config);

/// Solves every seed of the range on `threads` workers and hands each solution
/// to `consume(index, field)` (called from the worker; write results by index).
void for_each_solution(const Problem& problem, const SeedRange& seeds, int threads, int refine_levels,
                       const SolverOptions& options,
                       const std::function<void(std::size_t, const SolutionField&)>& consume);

/// Positivity-probe window integrals for each seed.
std::vector<WindowIntegrals> positivity_windows(const Problem& problem, const SeedRange& seeds,
                                                int threads, double t, double x,
                                                std::span<const double> eps_list);

/// Mean over seeds of the localized derivative norm at each window.
std::vector<double> mean_localized_norms(const Problem& problem, const SeedRange& seeds, int threads,
                                         int t_hat_index, std::span<const int> eps_steps,
                                         std::span<const int> lags, std::span<const int> y_indices);

KolmogorovAccumulator::Fit kolmogorov_ensemble(const Problem& problem, const SeedRange& seeds,
                                               int threads, int s_index, int y_index, int t_index,
                                               int x_index, double p, std::vector<int> space_offsets,
                                               std::vector<int> time_offsets);

/// Grid-max samples over the window at the problem's grid after `refine_levels`
/// coupled refinements of a level-0 path on `problem.grid`.
std::vector<double> window_sup_samples(const Problem& problem, const SeedRange& seeds, int threads,
                                       int refine_levels, const SupWindow& window);

/// u(t_index, x_index) per seed.
std::vector<double> point_samples(const Problem& problem, const SeedRange& seeds, int threads,
                                  int t_index, int x_index);

}  // namespace spde
