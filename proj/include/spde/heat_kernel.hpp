#pragma once

#include <cstddef>
#include <numbers>
#include <random>
#include <span>
#include <vector>

namespace spde {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kPi2 = kPi * kPi;

/// Truncated sine-series representation of the Dirichlet heat kernel on [0,1]
///
///   G_t(x,y) = sum_{n=1}^{N} 2 exp(-pi^2 n^2 t) sin(n pi x) sin(n pi y)
///
/// Series evaluation is only permitted for t >= t_floor, where the discarded
/// tail is bounded by tail_bound().
class KernelSpec {
public:
    KernelSpec(std::size_t n_terms, double t_floor);

    /// Smallest N whose tail bound at t_floor is below `tail_tol`, capped.
    static KernelSpec for_floor(double t_floor = 1e-4, double tail_tol = 1e-12,
                                std::size_t cap = 4096);

    std::size_t n_terms() const noexcept { return n_terms_; }
    double t_floor() const noexcept { return t_floor_; }

    /// Upper bound of sum_{n>N} 2 exp(-pi^2 n^2 t) for every t >= t_floor.
    double tail_bound() const noexcept;

private:
    std::size_t n_terms_;
    double t_floor_;
};

/// Series evaluation; throws std::domain_error for t < t_floor or x, y outside [0,1].
/// Exactly zero when x or y lies on the boundary; bit-exactly symmetric in (x,y).
double eval_kernel(const KernelSpec& spec, double t, double x, double y);

/// Method-of-images evaluation, sum_k phi(x-y+2k) - phi(x+y+2k) with phi the
/// centred Gaussian of variance 2t. Images are added until a term drops below 1e-15.
double eval_kernel_images(double t, double x, double y);

/// Series for t >= t_floor, images below it.
double eval_kernel_any(const KernelSpec& spec, double t, double x, double y);

/// (eval_kernel - r) divided by the free-space heat kernel exp(-(x-y)^2/4t)/sqrt(4 pi t),
/// where r = 4 N eps bounds the rounding error of the series sum.
/// Returns 0 when the kernel value does not exceed r.
double gaussian_bound_check(const KernelSpec& spec, double t, double x, double y);

/// |int_0^1 G_s(x,z) G_t(z,y) dz - G_{s+t}(x,y)| with a trapezoid rule on
/// `quad_points` intervals.
double semigroup_defect(const KernelSpec& spec, double s, double t, double x, double y,
                        std::size_t quad_points = 512);

/// int_0^1 G_t(x,y) dy by the trapezoid rule.
double mass_integral(const KernelSpec& spec, double t, double x, std::size_t quad_points = 512);

/// |trapezoid of int_0^1 G_u(x,y)^2 dy - sum_n 2 exp(-2 pi^2 n^2 u) sin^2(n pi x)|.
double parseval_defect(const KernelSpec& spec, double u, double x,
                       std::size_t quad_points = 1024);

/// int_0^t int_0^1 G_{t-s}(x,y)^2 dy ds
///   = sum_n sin^2(n pi x) (1 - exp(-2 pi^2 n^2 t)) / (pi^2 n^2).
///
/// The modes above N are accounted for through the closed form
/// sum_n sin^2(n pi x)/(pi^2 n^2) = x(1-x)/2, so the value is the untruncated
/// one to within tail_bound() for t >= t_floor/2. Shorter horizons integrate
/// G_{2u}(x,x) over u by image sums. Accepts t = +infinity.
double l2_time_integral(const KernelSpec& spec, double t, double x);

/// sum_{k<=N} (1 - exp(-2 pi^2 k^2 eps)) / (2 pi^2 k^2), the eps-window kernel energy.
double window_energy(const KernelSpec& spec, double eps);

/// l2_time_integral(t,x) / int_0^t (t-s)^{-(1-1/(2p))} ds, i.e. the G^2 operator
/// bound applied to the constant function 1.
double g2_operator_ratio(const KernelSpec& spec, double t, double x, double p);

/// Graded Gauss-Legendre rule for time integrals with inverse-square-root
/// endpoint singularities: `panels` geometric panels per segment, clustered at
/// the singular end, each carrying an `order`-point Gauss-Legendre rule.
struct GradedQuadrature {
    std::size_t panels = 48;
    std::size_t order = 8;

    GradedQuadrature refined() const { return {panels * 2, order}; }
};

/// [int_0^t int_0^1 (G_{t-r}(x,z) - G_{s-r}(y,z))^2 dz dr] / (|t-s|^{1/4} + |x-y|^{1/2})^2
/// with G_u = 0 for u <= 0. The z-integral is exact (sine orthogonality);
/// the r-integral uses `quad`. Returns quiet NaN when s == t and x == y.
double lemma_a1_ratio(const KernelSpec& spec, double s, double t, double x, double y,
                      const GradedQuadrature& quad = {});

/// [int_0^t (int_0^1 (G_{t-r}(x,z)-G_{s-r}(y,z))^2 dz)^{p/(p-2)} dr]^{(p-2)/2}
///   / (|x-y|^{(p-4)/2} + |t-s|^{(p-4)/4}).
/// Throws std::domain_error for p <= 4. Returns quiet NaN when s == t and x == y.
double lemma_a2_ratio(const KernelSpec& spec, double s, double t, double x, double y, double p,
                      const GradedQuadrature& quad = {});

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
void gauss_legendre(std::size_t n, std::vector<double>& nodes, std::vector<double>& weights);

}  // namespace spde
