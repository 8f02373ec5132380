#pragma once

#include "fstline/errors.hpp"
#include "fstline/kinematics.hpp"

#include <cmath>
#include <concepts>
#include <limits>
#include <string>
#include <vector>

namespace fstline {

enum class Direction { retarded, advanced };

/// Anything with a subluminal position/velocity defined for all times.
template <class W>
concept WorldLine = requires(const W& w, double t) {
    { w.position(t) } -> std::convertible_to<double>;
    { w.velocity(t) } -> std::convertible_to<double>;
    { w.max_speed() } -> std::convertible_to<double>;
};

struct DelayOptions {
    double hard_cap = 1e6;     // largest admissible |s - t|
    double tolerance = 1e-12;  // relative to (1 + |t|)
    int max_iterations = 200;
};

/// Time s on `source` that lies on the light cone of the observer event
/// (t, x): s = t -+ |x - source(s)|.
///
/// Safeguarded Newton on the delay d = |s - t| inside the bracket
/// [d0/(1+V), d0/(1-V)], d0 = |x - source(t)|, V = sup|source velocity|.
template <WorldLine W>
double delay_time(const W& source, double x, double t, Direction dir, const DelayOptions& opt = {})
{
    const double d0 = std::abs(x - source.position(t));
    if (d0 == 0.0) return t;
    const double speed = source.max_speed();
    require(speed < 1.0, ErrorKind::domain, "light-cone source is not subluminal");
    const double sgn_dir = dir == Direction::advanced ? 1.0 : -1.0;

    double lo = d0 / (1.0 + speed);
    double hi = d0 / (1.0 - speed);
    require(lo <= opt.hard_cap, ErrorKind::delay_cap_exceeded,
            "delay at t = " + std::to_string(t) + " exceeds cap");
    hi = std::min(hi, opt.hard_cap);

    auto phi = [&](double d, double& dphi) {
        const double s = t + sgn_dir * d;
        const double gap = x - source.position(s);
        const double sgn = gap >= 0.0 ? 1.0 : -1.0;
        dphi = 1.0 + sgn * source.velocity(s) * sgn_dir;
        return d - std::abs(gap);
    };

    double dphi = 0.0;
    const double v_now = source.velocity(t);
    const double sgn0 = x - source.position(t) >= 0.0 ? 1.0 : -1.0;
    double d = d0 / (1.0 + sgn0 * v_now * sgn_dir);
    if (!(d > lo && d < hi)) d = 0.5 * (lo + hi);

    const double scale = 1.0 + std::abs(t);
    double f = phi(d, dphi);
    for (int it = 0; it < opt.max_iterations && f != 0.0; ++it) {
        if (f < 0.0)
            lo = d;
        else
            hi = d;
        double next = d - f / dphi;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        const double step = std::abs(next - d);
        d = next;
        f = phi(d, dphi);
        if (step <= 4 * std::numeric_limits<double>::epsilon() * (1.0 + d) ||
            std::abs(f) <= 1e-3 * opt.tolerance * scale)
            break;
    }
    if (std::abs(f) > opt.tolerance * scale) {
        require(hi < opt.hard_cap, ErrorKind::delay_cap_exceeded,
                "delay at t = " + std::to_string(t) + " exceeds cap");
        throw Error(ErrorKind::delay_not_converged,
                    "residual " + std::to_string(f) + " at t = " + std::to_string(t));
    }
    return t + sgn_dir * d;
}

/// Which of the four advanced/retarded times: t1 lives on charge a (observer
/// b), t2 lives on charge b (observer a).
enum class DelayKind { t1_plus, t1_minus, t2_plus, t2_minus };

inline Direction direction_of(DelayKind k)
{
    return (k == DelayKind::t1_plus || k == DelayKind::t2_plus) ? Direction::advanced : Direction::retarded;
}

inline double delay_of(const TrajectoryPair& pair, double t, DelayKind which, const DelayOptions& opt = {})
{
    const Direction dir = direction_of(which);
    if (which == DelayKind::t2_plus || which == DelayKind::t2_minus)
        return delay_time(pair.lower(), pair.upper().position(t), t, dir, opt);
    return delay_time(pair.upper(), pair.lower().position(t), t, dir, opt);
}

/// d/dt of the requested delay time.
inline double delay_derivative(const TrajectoryPair& pair, double t, DelayKind which,
                               const DelayOptions& opt = {})
{
    const double s = delay_of(pair, t, which, opt);
    const double pm = direction_of(which) == Direction::advanced ? 1.0 : -1.0;
    if (which == DelayKind::t2_plus || which == DelayKind::t2_minus)
        return (1.0 + pm * pair.upper().velocity(t)) / (1.0 + pm * pair.lower().velocity(s));
    return (1.0 - pm * pair.lower().velocity(t)) / (1.0 - pm * pair.upper().velocity(s));
}

struct BreakpointLadder {
    std::vector<double> sigma;  // sigma_1, sigma_2, ... on charge a
    std::vector<double> tau;    // tau_1, tau_2, ... on charge b
    bool truncated = false;     // ladder left the sampled window
};

/// Regularity breakpoints: sigma_{k+1} = t1+(tau_k), tau_{k+1} = t2+(sigma_{k+1}),
/// starting from tau_0 = T+.
inline BreakpointLadder breakpoint_ladder(const TrajectoryPair& pair, double t_plus, int count,
                                          const DelayOptions& opt = {})
{
    BreakpointLadder out;
    const double limit = std::min(pair.upper().back(), pair.lower().back());
    double tau = t_plus;
    for (int k = 1; k <= count; ++k) {
        const double sig = delay_of(pair, tau, DelayKind::t1_plus, opt);
        if (sig > limit) {
            out.truncated = true;
            break;
        }
        const double next_tau = delay_of(pair, sig, DelayKind::t2_plus, opt);
        if (next_tau > limit) {
            out.truncated = true;
            break;
        }
        out.sigma.push_back(sig);
        out.tau.push_back(next_tau);
        tau = next_tau;
    }
    return out;
}

} // namespace fstline
