#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>

namespace tlmp {

// Floor applied to variance denominators; the zero-initialized first
// iterations would otherwise divide by zero.
inline constexpr double kVarFloor = 1e-12;

inline double floored(double v) { return v < kVarFloor ? kVarFloor : v; }

/// Digamma via upward recurrence into the asymptotic region (x >= 6) and a
/// Bernoulli-series tail. Good to ~1e-14 for x > 0.
inline double digamma(double x) {
    double acc = 0.0;
    while (x < 6.0) {
        acc -= 1.0 / x;
        x += 1.0;
    }
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    const double series =
        inv2 * (1.0 / 12.0 -
                inv2 * (1.0 / 120.0 -
                        inv2 * (1.0 / 252.0 -
                                inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0)))));
    return acc + std::log(x) - 0.5 * inv - series;
}

/// log(sum_i exp(v_i)) with max-shift.
inline double log_sum_exp(const Eigen::Ref<const Eigen::ArrayXd>& v) {
    const double m = v.maxCoeff();
    return m + std::log((v - m).exp().sum());
}

/// Convex blend used by every damped recursion. theta == 1 short-circuits so
/// the damped code path is bit-identical to the undamped equations.
inline double damp(double theta, double fresh, double prev) {
    return theta == 1.0 ? fresh : theta * fresh + (1.0 - theta) * prev;
}

inline Eigen::MatrixXd damp(double theta, const Eigen::MatrixXd& fresh,
                            const Eigen::MatrixXd& prev) {
    if (theta == 1.0) return fresh;
    return theta * fresh + (1.0 - theta) * prev;
}

/// SplitMix64 mixer; also the documented per-trial seed derivation:
/// seed_i = splitmix64(seed + (i+1)*GOLDEN_GAMMA).
inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    return splitmix64(base + (index + 1) * 0x9e3779b97f4a7c15ULL);
}

}  // namespace tlmp
