#pragma once

// Reference computations used only by the tests. They avoid the library's
// evaluation paths: plain loops in long double, no recurrences or GEMMs.

#include <cmath>
#include <functional>
#include <numbers>

namespace oracle {

inline constexpr long double pi = std::numbers::pi_v<long double>;

/// sum_{n<=terms} 2 e^{-pi^2 n^2 t} sin(n pi x) sin(n pi y)
inline double kernel_series(double t, double x, double y, int terms = 4000) {
    long double acc = 0.0L;
    for (int n = 1; n <= terms; ++n) {
        const long double e = std::exp(-pi * pi * n * n * static_cast<long double>(t));
        if (e < 1e-30L) break;
        acc += 2.0L * e * std::sin(n * pi * x) * std::sin(n * pi * y);
    }
    return static_cast<double>(acc);
}

/// sum_k phi(x - y + 2k) - phi(x + y + 2k), phi centred Gaussian with variance 2t, |k| <= 50
inline double kernel_images(double t, double x, double y) {
    auto phi = [t](long double z) { return std::exp(-z * z / (4.0L * t)) / std::sqrt(4.0L * pi * t); };
    long double acc = 0.0L;
    for (int k = -50; k <= 50; ++k) acc += phi(x - y + 2.0L * k) - phi(x + y + 2.0L * k);
    return static_cast<double>(acc);
}

/// int_0^t int_0^1 G_{t-s}(x,y)^2 dy ds by direct summation of
/// sin^2(n pi x)(1 - e^{-2 pi^2 n^2 t})/(pi^2 n^2) over many terms plus the
/// integral tail estimate 1/(2 pi^2 N) (valid once e^{-2 pi^2 N^2 t} is negligible).
inline double l2_direct(double t, double x, int terms = 400000) {
    long double acc = 0.0L;
    for (int n = 1; n <= terms; ++n) {
        const long double lam = pi * pi * n * n;
        const long double s = std::sin(n * pi * x);
        acc += s * s * (1.0L - std::exp(-2.0L * lam * t)) / lam;
    }
    return static_cast<double>(acc + 1.0L / (2.0L * pi * pi * terms));
}

/// Closed form of int_0^t int_0^1 (G_{t-r}(x,z) - G_{s-r}(y,z))^2 dz dr, s <= t,
/// truncated to `terms` modes (every r-integral is an exponential integral).
inline double a1_numerator(double s, double t, double x, double y, int terms) {
    long double acc = 0.0L;
    for (int n = 1; n <= terms; ++n) {
        const long double lam = pi * pi * n * n;
        const long double sx = std::sin(n * pi * x), sy = std::sin(n * pi * y);
        acc += (sx * sx * (1.0L - std::exp(-2.0L * lam * t)) + sy * sy * (1.0L - std::exp(-2.0L * lam * s)) -
                2.0L * sx * sy * std::exp(-lam * (t - s)) * (1.0L - std::exp(-2.0L * lam * s))) /
               lam;
    }
    return static_cast<double>(acc);
}

/// int_0^1 (G_a(x,z) - G_b(y,z))^2 dz with G_b = 0 for b <= 0, `terms` modes.
inline long double difference_energy(long double a, long double b, double x, double y, int terms) {
    long double acc = 0.0L;
    for (int n = 1; n <= terms; ++n) {
        const long double lam = pi * pi * n * n;
        const long double d = std::exp(-lam * a) * std::sin(n * pi * x) -
                              (b > 0.0L ? std::exp(-lam * b) * std::sin(n * pi * y) : 0.0L);
        acc += 2.0L * d * d;
    }
    return acc;
}

/// Composite Simpson on [0, 1] with `m` (even) intervals.
inline long double simpson(const std::function<long double(long double)>& f, int m) {
    const long double h = 1.0L / m;
    long double acc = f(0.0L) + f(1.0L);
    for (int k = 1; k < m; ++k) acc += (k % 2 ? 4.0L : 2.0L) * f(k * h);
    return acc * h / 3.0L;
}

}  // namespace oracle
