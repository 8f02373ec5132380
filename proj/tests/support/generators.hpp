#pragma once

// Hand-rolled random inputs for property tests.

#include "fstline/kinematics.hpp"

#include <cmath>
#include <random>
#include <vector>

namespace gen {

using fstline::Charge;
using fstline::Trajectory;
using fstline::TrajectoryPair;

inline std::mt19937_64& rng()
{
    static std::mt19937_64 engine(20240611);
    return engine;
}

inline double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng()); }

/// Smooth world-line x(t) = x0 + w t + A/om (cos(phi) - cos(om t + phi)), so
/// v(t) = w + A sin(om t + phi) and acc(t) = A om cos(om t + phi).
struct Wave {
    double x0, w, amp, om, phi;

    [[nodiscard]] double x(double t) const { return x0 + w * t + amp / om * (std::cos(phi) - std::cos(om * t + phi)); }
    [[nodiscard]] double v(double t) const { return w + amp * std::sin(om * t + phi); }
    [[nodiscard]] double a(double t) const { return amp * om * std::cos(om * t + phi); }
    [[nodiscard]] double speed_bound() const { return std::abs(w) + std::abs(amp); }
};

inline Wave random_wave(double x0, double max_speed)
{
    const double w = uniform(-0.5, 0.5) * max_speed;
    const double amp = uniform(0.0, max_speed - std::abs(w));
    return {x0, w, amp, uniform(0.2, 2.0), uniform(0.0, 6.283185307179586)};
}

/// Samples `w` on [from, to] with about `nodes` nodes; node accelerations are
/// supplied only when `with_acc` is set.
inline Trajectory sample(const Wave& w, double from, double to, std::size_t nodes, Charge label,
                         bool with_acc = true)
{
    std::vector<double> t(nodes), x(nodes), v(nodes), a;
    for (std::size_t i = 0; i < nodes; ++i) {
        t[i] = from + (to - from) * static_cast<double>(i) / static_cast<double>(nodes - 1);
        x[i] = w.x(t[i]);
        v[i] = w.v(t[i]);
        if (with_acc) a.push_back(w.a(t[i]));
    }
    return Trajectory(std::move(t), std::move(x), std::move(v), label, std::move(a));
}

/// Admissible pair: both waves subluminal (sup speed <= max_speed) and the
/// upper one at least `gap` above the lower one on [from, to] and beyond
/// (the free extensions diverge or stay parallel only if the gap still
/// holds, which the caller's window keeps true).
struct RandomPair {
    Wave upper, lower;
    TrajectoryPair pair;
};

inline RandomPair random_pair(double from, double to, std::size_t nodes, double max_speed = 0.6, double gap = 1.0)
{
    for (;;) {
        Wave up = random_wave(0.0, max_speed);
        Wave lo = random_wave(0.0, max_speed);
        // lift the upper wave until the sampled gap exceeds `gap`
        double worst = 1e300;
        for (int k = 0; k <= 4000; ++k) {
            const double t = from + (to - from) * k / 4000.0;
            worst = std::min(worst, up.x(t) - lo.x(t));
        }
        up.x0 += gap - worst + uniform(0.0, 1.0);
        try {
            auto a = sample(up, from, to, nodes, Charge::a);
            auto b = sample(lo, from, to, nodes, Charge::b);
            return {up, lo, TrajectoryPair(std::move(a), std::move(b))};
        } catch (const fstline::Error&) {
            // the interpolant can overshoot the speed bound on a coarse grid; draw again
        }
    }
}

} // namespace gen
