#include "spde/coefficients.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "spde/heat_kernel.hpp"

namespace spde {

CoefficientPair additive_family(double sigma_scale) {
    CoefficientPair p;
    p.name = "additive";
    p.f = [](double, double) { return 0.0; };
    p.f_u = [](double, double) { return 0.0; };
    p.sigma = [sigma_scale](double, double) { return sigma_scale; };
    p.sigma_u = [](double, double) { return 0.0; };
    p.K_f = 0.0;
    p.K_sigma = std::abs(sigma_scale);
    p.c0 = std::abs(sigma_scale);
    p.additive = true;
    return p;
}

CoefficientPair nonlinear_family(double drift_scale, double sigma_amp) {
    if (!(sigma_amp >= 0.0 && sigma_amp < 1.0)) {
        throw std::invalid_argument("nonlinear family: sigma amplitude must lie in [0,1)");
    }
    CoefficientPair p;
    p.name = "nonlinear";
    p.f = [drift_scale](double, double u) { return drift_scale * std::tanh(u); };
    p.f_u = [drift_scale](double, double u) {
        const double c = std::cosh(u);
        return drift_scale / (c * c);
    };
    p.sigma = [sigma_amp](double, double u) { return 1.0 + sigma_amp * std::sin(u); };
    p.sigma_u = [sigma_amp](double, double u) { return sigma_amp * std::cos(u); };
    p.K_f = std::abs(drift_scale);
    p.K_sigma = 1.0 + sigma_amp;
    p.c0 = 1.0 - sigma_amp;
    return p;
}

CoefficientPair make_family(const std::string& name, std::span<const double> params) {
    if (name == "additive") {
        if (params.size() > 1) throw std::invalid_argument("additive family takes at most 1 parameter");
        return additive_family(params.empty() ? 1.0 : params[0]);
    }
    if (name == "nonlinear") {
        if (params.size() > 2) throw std::invalid_argument("nonlinear family takes at most 2 parameters");
        return nonlinear_family(params.size() > 0 ? params[0] : 0.5, params.size() > 1 ? params[1] : 0.25);
    }
    throw std::invalid_argument("unknown coefficient family '" + name + "'");
}

CutoffSpec::CutoffSpec(double level) : n(level) {
    if (!(n > 0.0)) throw std::invalid_argument("CutoffSpec: n must be positive");
}

double cutoff_eval(const CutoffSpec& spec, double x) {
    const double r = std::abs(x);
    if (r < spec.n) return 1.0;
    if (r >= spec.n + 1.0) return 0.0;
    const double w = r - spec.n;
    return 1.0 - 3.0 * w * w + 2.0 * w * w * w;
}

double cutoff_slope(const CutoffSpec& spec, double x) {
    const double r = std::abs(x);
    if (r < spec.n || r >= spec.n + 1.0) return 0.0;
    const double w = r - spec.n;
    return -6.0 * w + 6.0 * w * w;
}

double truncated_drift(const CoefficientPair& pair, const CutoffSpec& spec, double x, double u) {
    const double h = cutoff_eval(spec, u);
    return h == 0.0 ? 0.0 : h * pair.f(x, u);
}

double truncated_diffusion(const CoefficientPair& pair, const CutoffSpec& spec, double x, double u) {
    const double h = cutoff_eval(spec, u);
    return h == 0.0 ? 0.0 : h * pair.sigma(x, u);
}

TruncatedConstants truncated_constants(const CoefficientPair& pair) {
    // sup|f| <= K_f and sup|sigma| <= K_sigma by assumption
    return {pair.K_f + 1.5 * pair.K_f, pair.K_sigma + 1.5 * pair.K_sigma};
}

Multipliers multiplier_fields(const CoefficientPair& pair, const CutoffSpec& spec, double x, double u) {
    const double h = cutoff_eval(spec, u);
    const double slope = cutoff_slope(spec, u);
    // H_n'(|u|) vanishes on a neighbourhood of u = 0, so sign(0) never matters
    const double sgn = u > 0.0 ? 1.0 : (u < 0.0 ? -1.0 : 0.0);
    Multipliers out;
    if (h == 0.0) return out;
    out.m = h * pair.f_u(x, u);
    out.m_hat = h * pair.sigma_u(x, u);
    if (slope != 0.0) {
        out.m += slope * sgn * pair.f(x, u);
        out.m_hat += slope * sgn * pair.sigma(x, u);
    }
    return out;
}

AssumptionReport validate_assumptions(const CoefficientPair& pair, std::span<const double> u_samples,
                                      std::span<const double> x_samples) {
    AssumptionReport rep;
    if (u_samples.empty() || x_samples.empty()) {
        rep.passed = false;
        rep.violations.push_back("empty sample cloud");
        return rep;
    }
    constexpr double kStep = 1e-6;
    double max_f = 0.0, max_s = 0.0, max_fu = 0.0, max_su = 0.0;
    double min_sigma = std::numeric_limits<double>::infinity();
    for (double x : x_samples) {
        for (double u : u_samples) {
            const double fv = pair.f(x, u), sv = pair.sigma(x, u);
            max_f = std::max(max_f, std::abs(fv));
            max_s = std::max(max_s, std::abs(sv));
            const double dfu = (pair.f(x, u + kStep) - pair.f(x, u - kStep)) / (2.0 * kStep);
            const double dsu = (pair.sigma(x, u + kStep) - pair.sigma(x, u - kStep)) / (2.0 * kStep);
            max_fu = std::max({max_fu, std::abs(dfu), std::abs(pair.f_u(x, u))});
            max_su = std::max({max_su, std::abs(dsu), std::abs(pair.sigma_u(x, u))});
            if (u >= 0.0) min_sigma = std::min(min_sigma, sv);
        }
    }
    // finite differences carry O(h^2) error; allow it in the Lipschitz comparison
    constexpr double kSlack = 1e-8;
    rep.bound_margin_f = pair.K_f - max_f;
    rep.bound_margin_sigma = pair.K_sigma - max_s;
    rep.lipschitz_margin_f = pair.K_f - max_fu;
    rep.lipschitz_margin_sigma = pair.K_sigma - max_su;
    rep.floor_margin = std::isfinite(min_sigma) ? min_sigma - pair.c0 : 0.0;
    if (rep.bound_margin_f < 0.0) rep.violations.push_back("boundedness of f (assumption 2)");
    if (rep.bound_margin_sigma < 0.0) rep.violations.push_back("boundedness of sigma (assumption 2)");
    if (rep.lipschitz_margin_f < -kSlack) rep.violations.push_back("Lipschitz continuity of f (assumption 1)");
    if (rep.lipschitz_margin_sigma < -kSlack) {
        rep.violations.push_back("Lipschitz continuity of sigma (assumption 1)");
    }
    if (!(pair.c0 > 0.0)) rep.violations.push_back("nondegeneracy floor c0 must be positive (assumption 3)");
    if (rep.floor_margin < 0.0) rep.violations.push_back("sigma >= c0 (assumption 3)");
    rep.passed = rep.violations.empty();
    return rep;
}

std::vector<double> linspace(double lo, double hi, std::size_t count) {
    std::vector<double> v(count);
    if (count == 1) {
        v[0] = lo;
        return v;
    }
    for (std::size_t i = 0; i < count; ++i) {
        v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    }
    return v;
}

InitialCondition InitialCondition::sine(double amplitude) {
    InitialCondition ic;
    ic.name = "sine";
    ic.fn = [amplitude](double x) {
        if (x == 0.0 || x == 1.0) return 0.0;
        return amplitude * std::sin(kPi * x);
    };
    return ic;
}

InitialCondition InitialCondition::zero() {
    InitialCondition ic;
    ic.name = "zero";
    ic.fn = [](double) { return 0.0; };
    return ic;
}

void InitialCondition::validate() const {
    if (!fn) throw std::invalid_argument("initial condition is empty");
    if (fn(0.0) != 0.0 || fn(1.0) != 0.0) {
        throw std::invalid_argument("initial condition must vanish at x = 0 and x = 1");
    }
}

}  // namespace spde
