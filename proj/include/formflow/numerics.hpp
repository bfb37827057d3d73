#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace formflow {

// Seeded uniform sampler. Doubles are built from the raw 64-bit engine output
// instead of std::uniform_real_distribution, whose algorithm is not pinned by
// the standard, so sample sets are identical across standard libraries.
class Sampler {
public:
    explicit Sampler(std::uint64_t seed = 0) : engine_(seed) {}

    double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(unit() * static_cast<double>(n)); }

    // `count` points drawn uniformly from the box [lo_i, hi_i].
    std::vector<std::vector<double>> box(std::span<const double> lo, std::span<const double> hi, std::size_t count) {
        std::vector<std::vector<double>> points(count, std::vector<double>(lo.size()));
        for (auto& p : points) {
            for (std::size_t i = 0; i < lo.size(); ++i) p[i] = uniform(lo[i], hi[i]);
        }
        return points;
    }

private:
    std::mt19937_64 engine_;
};

// One classical fourth-order Runge-Kutta step for y' = f(y).
// `rhs(y, dy)` writes the derivative of y into dy.
template <class Rhs>
std::vector<double> rk4_step(Rhs&& rhs, const std::vector<double>& y, double h) {
    const std::size_t n = y.size();
    std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
    rhs(y, k1);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
    rhs(tmp, k2);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
    rhs(tmp, k3);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * k3[i];
    rhs(tmp, k4);
    std::vector<double> next(n);
    for (std::size_t i = 0; i < n; ++i) {
        next[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    return next;
}

}  // namespace formflow
