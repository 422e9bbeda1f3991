#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace spde {

using CoefficientFn = std::function<double(double x, double u)>;

/// Drift f and diffusion sigma together with their u-derivatives and the
/// declared constants of the well-posedness assumptions.
struct CoefficientPair {
    std::string name;
    CoefficientFn f;
    CoefficientFn f_u;
    CoefficientFn sigma;
    CoefficientFn sigma_u;
    double K_f = 0.0;      // bound and Lipschitz constant of f
    double K_sigma = 0.0;  // bound and Lipschitz constant of sigma
    double c0 = 0.0;       // nondegeneracy floor of sigma

    /// True when sigma does not depend on u and f vanishes (m = m_hat = 0).
    bool additive = false;
};

/// f = 0, sigma = scale.
CoefficientPair additive_family(double sigma_scale = 1.0);

/// f = drift_scale * tanh(u), sigma = 1 + sigma_amp * sin(u); defaults 1/2 and 1/4.
CoefficientPair nonlinear_family(double drift_scale = 0.5, double sigma_amp = 0.25);

/// Looks a family up by name ("additive" or "nonlinear") with an optional parameter list.
CoefficientPair make_family(const std::string& name, std::span<const double> params = {});

/// C^1 cut-off H_n: 1 on [0,n), 0 on [n+1, inf), smoothstep 1 - 3w^2 + 2w^3 between.
struct CutoffSpec {
    double n = 5.0;

    explicit CutoffSpec(double level = 5.0);
};

double cutoff_eval(const CutoffSpec& spec, double x);
/// dH_n/dr at r = |x|; |slope| <= 1.5.
double cutoff_slope(const CutoffSpec& spec, double x);

double truncated_drift(const CoefficientPair& pair, const CutoffSpec& spec, double x, double u);
double truncated_diffusion(const CoefficientPair& pair, const CutoffSpec& spec, double x, double u);

/// Effective Lipschitz constants of the truncated coefficients in u:
/// C = K + 1.5 sup|coefficient|, with the cut-off's maximal slope 1.5.
struct TruncatedConstants {
    double C_f = 0.0;
    double C_sigma = 0.0;
};
TruncatedConstants truncated_constants(const CoefficientPair& pair);

/// m = d/du [H_n(|u|) f(x,u)], m_hat = d/du [H_n(|u|) sigma(x,u)].
struct Multipliers {
    double m = 0.0;
    double m_hat = 0.0;
};
Multipliers multiplier_fields(const CoefficientPair& pair, const CutoffSpec& spec, double x, double u);

/// Worst-case margins over a sample cloud; a margin below zero is a violation.
struct AssumptionReport {
    bool passed = true;
    double bound_margin_f = 0.0;      // K_f - max|f|
    double bound_margin_sigma = 0.0;  // K_sigma - max|sigma|
    double lipschitz_margin_f = 0.0;
    double lipschitz_margin_sigma = 0.0;
    double floor_margin = 0.0;        // min sigma - c0 over u >= 0
    std::vector<std::string> violations;
};

/// Checks boundedness, Lipschitz continuity (finite differences against the
/// declared constants) and sigma >= c0 on u >= 0 over the cloud
/// `x_samples` x `u_samples`.
AssumptionReport validate_assumptions(const CoefficientPair& pair, std::span<const double> u_samples,
                                      std::span<const double> x_samples);

/// `count` evenly spaced values on [lo, hi].
std::vector<double> linspace(double lo, double hi, std::size_t count);

/// Initial condition with u0(0) = u0(1) = 0.
struct InitialCondition {
    std::string name = "sine";
    std::function<double(double)> fn;

    /// a sin(pi x)
    static InitialCondition sine(double amplitude = 1.0);
    static InitialCondition zero();
    /// Throws std::invalid_argument unless fn vanishes at both endpoints.
    void validate() const;
    double operator()(double x) const { return fn(x); }
};

}  // namespace spde
