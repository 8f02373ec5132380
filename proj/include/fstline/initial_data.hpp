#pragma once

#include "fstline/errors.hpp"
#include "fstline/kinematics.hpp"
#include "fstline/lightcone.hpp"

#include <cmath>
#include <string>
#include <variant>
#include <vector>

namespace fstline {

/// Position and velocity of a at t = 0 plus a strip of b whose ends lie on
/// the light cone through (0, a0).
struct FstHalfLine {
    double a0 = 0.0;
    double a0_dot = 0.0;
    Trajectory b_strip;

    [[nodiscard]] double t_minus() const { return b_strip.front(); }
    [[nodiscard]] double t_plus() const { return b_strip.back(); }
};

/// Newtonian Cauchy data at t = 0.
struct Cauchy {
    double a0 = 1.0;
    double a0_dot = 0.0;
    double b0 = -1.0;
    double b0_dot = 0.0;
};

/// Finite strips a|[T1-, T1+] and b|[T2-, T2+] with T2+- = t2+-(T1+) and
/// T1- = t1-(T2-).
struct StripPair {
    Trajectory a_strip;
    Trajectory b_strip;
};

using InitialData = std::variant<FstHalfLine, Cauchy, StripPair>;

inline void validate(const FstHalfLine& d, double tolerance = 1e-10)
{
    require(std::abs(d.a0_dot) < 1.0, ErrorKind::invalid_input, "|a0_dot| must be < 1");
    const double tp = d.t_plus(), tm = d.t_minus();
    require(tm < 0.0 && tp > 0.0, ErrorKind::invalid_input, "strip must straddle t = 0 (T- < 0 < T+)");
    require(std::abs(tp - (d.a0 - d.b_strip.position(tp))) <= tolerance * (1.0 + std::abs(tp)),
            ErrorKind::invalid_input, "strip end violates T+ = a0 - b0(T+)");
    require(std::abs(tm + (d.a0 - d.b_strip.position(tm))) <= tolerance * (1.0 + std::abs(tm)),
            ErrorKind::invalid_input, "strip start violates T- = -(a0 - b0(T-))");
    for (double x : d.b_strip.positions())
        require(x < d.a0, ErrorKind::invalid_input, "strip must stay below a0 (b0 < a0)");
}

inline void validate(const Cauchy& d)
{
    require(d.a0 > d.b0, ErrorKind::invalid_input, "Cauchy data must satisfy a0 > b0");
    require(std::abs(d.a0_dot) < 1.0 && std::abs(d.b0_dot) < 1.0, ErrorKind::invalid_input,
            "Cauchy velocities must satisfy |v| < 1");
}

inline void validate(const StripPair& s, double tolerance = 1e-10, const DelayOptions& opt = {})
{
    const TrajectoryPair pair(s.a_strip, s.b_strip);
    const double t1p = s.a_strip.back(), t1m = s.a_strip.front();
    const double t2p = s.b_strip.back(), t2m = s.b_strip.front();
    auto close = [&](double u, double w) { return std::abs(u - w) <= tolerance * (1.0 + std::abs(w)); };
    require(close(delay_of(pair, t1p, DelayKind::t2_plus, opt), t2p), ErrorKind::invalid_input,
            "strip violates T2+ = t2+(T1+)");
    require(close(delay_of(pair, t1p, DelayKind::t2_minus, opt), t2m), ErrorKind::invalid_input,
            "strip violates T2- = t2-(T1+)");
    require(close(delay_of(pair, t2m, DelayKind::t1_minus, opt), t1m), ErrorKind::invalid_input,
            "strip violates T1- = t1-(T2-)");
}

inline void validate(const InitialData& data)
{
    std::visit([](const auto& d) { validate(d); }, data);
}

/// Light-cone compatible strip of uniformly moving b (position b_at_zero at
/// t = 0, velocity w) with nodes spaced at most `step` apart.
inline FstHalfLine uniform_strip_data(double a0, double a0_dot, double b_at_zero, double w, double step)
{
    require(a0 > b_at_zero, ErrorKind::invalid_input, "strip must start below a0");
    require(std::abs(w) < 1.0 && step > 0.0, ErrorKind::invalid_input, "bad strip velocity or step");
    const double gap = a0 - b_at_zero;
    const double tp = gap / (1.0 + w);
    const double tm = -gap / (1.0 - w);
    const auto n = static_cast<std::size_t>(std::ceil((tp - tm) / step));
    std::vector<double> t(n + 1), x(n + 1), v(n + 1, w), acc(n + 1, 0.0);
    for (std::size_t i = 0; i <= n; ++i) {
        t[i] = i == n ? tp : tm + (tp - tm) * static_cast<double>(i) / static_cast<double>(n);
        x[i] = b_at_zero + w * t[i];
    }
    return {a0, a0_dot, Trajectory(std::move(t), std::move(x), std::move(v), Charge::b, std::move(acc))};
}

} // namespace fstline
