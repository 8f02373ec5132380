#pragma once

#include "fstline/errors.hpp"
#include "fstline/initial_data.hpp"
#include "fstline/kinematics.hpp"
#include "fstline/lightcone.hpp"
#include "fstline/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace fstline {

/// Inverse of the velocity factor rho: f(rho(v)) = v.
inline double moebius_f(double u)
{
    require(u != -1.0, ErrorKind::light_line_singularity, "velocity factor -1 maps to the light line");
    return (u - 1.0) / (u + 1.0);
}

struct StepperOptions {
    DelayOptions delay{};
    double domain_slack = 0.25;  // tolerated overshoot past a strip end, in units of its last cell
    double derivative_spacing = 0.05;  // stencil spacing for leg accelerations (at least one step)
};

namespace detail {

inline double last_cell(const Trajectory& tr, bool at_end)
{
    const auto t = tr.times();
    return at_end ? t[t.size() - 1] - t[t.size() - 2] : t[1] - t[0];
}

} // namespace detail

/// Velocity factor rho(a'(t)) demanded by the b equation at the a-event
/// (t, x), read off the b strip at the retarded time s = t2-(t, x) and the a
/// strip at r = t1-(s).
inline double g_field(double t, double x, const StripPair& strips, double kappa_b, const StepperOptions& opt = {})
{
    require(kappa_b > 0.0, ErrorKind::invalid_input, "reconstruction needs kappa_b > 0");
    const Trajectory& a = strips.a_strip;
    const Trajectory& b = strips.b_strip;
    const double s = delay_time(b, x, t, Direction::retarded, opt.delay);
    const double slack_hi = opt.domain_slack * detail::last_cell(b, true);
    const double slack_lo = opt.domain_slack * detail::last_cell(b, false);
    if (s > b.back() + slack_hi || s < b.front() - slack_lo)
        throw Error(ErrorKind::domain_exit, "event (" + std::to_string(t) + ", " + std::to_string(x) +
                                                ") is not reachable from the b strip (retarded time " +
                                                std::to_string(s) + ")");
    const auto bs = b.eval(s);
    require(x - bs.position > 0.0, ErrorKind::ordering_violation,
            "a fell below b at t = " + std::to_string(t));

    const double r = delay_time(a, bs.position, s, Direction::retarded, opt.delay);
    if (r < a.front() - opt.domain_slack * detail::last_cell(a, false))
        throw Error(ErrorKind::strip_too_short,
                    "nested retarded time " + std::to_string(r) + " precedes the a strip start " +
                        std::to_string(a.front()));
    const auto ar = a.eval(r);
    const double gap = ar.position - bs.position;
    require(gap > 0.0, ErrorKind::ordering_violation, "a strip below b at t = " + std::to_string(r));

    const double vb = bs.velocity;
    const double gamma3 = std::pow(1.0 - vb * vb, -1.5);
    const double db = x - bs.position;
    return -2.0 * db * db * (b.acceleration_cubic(s) * gamma3 / kappa_b + 0.5 * sigma(ar.velocity) / (gap * gap));
}

namespace detail {

/// a'(t) = f(g(t, a)) with the failure modes of the reconstruction.
inline double leg_velocity(double t, double x, const StripPair& strips, double kappa_b, const StepperOptions& opt)
{
    const double g = g_field(t, x, strips, kappa_b, opt);
    if (std::abs(g) <= 1e-12 || g == -1.0)
        throw Error(ErrorKind::light_line_singularity,
                    "velocity factor " + std::to_string(g) + " at t = " + std::to_string(t) +
                        " puts the charge on the light line");
    const double v = moebius_f(g);
    require(std::abs(v) < 1.0, ErrorKind::superluminal,
            "velocity factor " + std::to_string(g) + " at t = " + std::to_string(t) + " has no subluminal velocity");
    return v;
}

struct RkStep {
    double x;
    bool ok;
};

inline RkStep rk4_step(double t, double x, double v0, double dt, const StripPair& strips, double kappa_b,
                       const StepperOptions& opt)
{
    try {
        const double k1 = v0;
        const double k2 = leg_velocity(t + 0.5 * dt, x + 0.5 * dt * k1, strips, kappa_b, opt);
        const double k3 = leg_velocity(t + 0.5 * dt, x + 0.5 * dt * k2, strips, kappa_b, opt);
        const double k4 = leg_velocity(t + dt, x + dt * k3, strips, kappa_b, opt);
        return {x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4), true};
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::domain_exit) return {0.0, false};
        throw;
    }
}

inline Trajectory leg_trajectory(std::vector<double> t, std::vector<double> x, std::vector<double> v, Charge label,
                                 const StepperOptions& opt)
{
    const double step = t.size() > 1 ? t[1] - t[0] : 1.0;
    const auto stride = static_cast<std::size_t>(std::max(1.0, std::round(opt.derivative_spacing / step)));
    auto acc = numerics::strided_derivative(t, v, stride);
    return Trajectory(std::move(t), std::move(x), std::move(v), label, std::move(acc));
}

} // namespace detail

/// Extends a from T1+ to t1+(T2+) by the classical Runge-Kutta method. The
/// last step is shortened so that the leg ends exactly on the light cone of
/// (T2+, b(T2+)).
inline Trajectory extend_a(const StripPair& strips, double kappa_b, double step, const StepperOptions& opt = {})
{
    require(step > 0.0, ErrorKind::invalid_input, "step must be > 0");
    const Trajectory& a = strips.a_strip;
    const Trajectory& b = strips.b_strip;
    const double target = b.back();
    auto retarded = [&](double t, double x) { return delay_time(b, x, t, Direction::retarded, opt.delay); };

    std::vector<double> ts{a.back()}, xs{a.positions().back()}, vs{};
    vs.push_back(detail::leg_velocity(ts[0], xs[0], strips, kappa_b, opt));

    // Full steps while the end of the step stays inside the domain.
    for (;;) {
        const double t = ts.back(), x = xs.back();
        const auto next = detail::rk4_step(t, x, vs.back(), step, strips, kappa_b, opt);
        if (!next.ok || retarded(t + step, next.x) >= target) break;
        ts.push_back(t + step);
        xs.push_back(next.x);
        vs.push_back(detail::leg_velocity(ts.back(), xs.back(), strips, kappa_b, opt));
        require(ts.size() < 50'000'000, ErrorKind::domain_exit, "leg does not terminate");
    }
    // Final step of length delta solving t2-(t + delta, x(delta)) = T2+. A
    // very short remainder is merged into the previous step.
    if (ts.size() > 1) {
        const double t = ts[ts.size() - 2];
        const double retarded_last = retarded(ts.back(), xs.back());
        if (target - retarded_last < 0.1 * (target - retarded(t, xs[xs.size() - 2]))) {
            ts.pop_back();
            xs.pop_back();
            vs.pop_back();
        }
    }
    const double t0 = ts.back(), x0 = xs.back(), v0 = vs.back();
    auto phi = [&](double d) {
        const auto r = detail::rk4_step(t0, x0, v0, d, strips, kappa_b, opt);
        if (!r.ok) return std::numeric_limits<double>::infinity();
        return retarded(t0 + d, r.x) - target;
    };
    double lo = 0.0, hi = 2.0 * step;
    double flo = retarded(t0, x0) - target, fhi = phi(hi);
    while (!(fhi > 0.0)) {
        lo = hi;
        flo = fhi;
        hi *= 2.0;
        fhi = phi(hi);
        require(hi < 1e6, ErrorKind::domain_exit, "leg end not bracketed");
    }
    // Illinois regula falsi, bisection while the upper value is unbounded.
    int side = 0;
    double d = hi;
    for (int it = 0; it < 200; ++it) {
        d = std::isfinite(fhi) ? (lo * fhi - hi * flo) / (fhi - flo) : 0.5 * (lo + hi);
        if (!(d > lo && d < hi)) d = 0.5 * (lo + hi);
        const double fd = phi(d);
        if (fd == 0.0 || hi - lo <= 4 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(t0))) break;
        if (fd > 0.0) {
            hi = d;
            fhi = fd;
            if (side == 1 && std::isfinite(flo)) flo *= 0.5;
            side = 1;
        } else {
            lo = d;
            flo = fd;
            if (side == -1 && std::isfinite(fhi)) fhi *= 0.5;
            side = -1;
        }
        if (std::abs(fd) <= 1e-15 * (1.0 + std::abs(target))) break;
    }
    const auto end = detail::rk4_step(t0, x0, v0, d, strips, kappa_b, opt);
    require(end.ok, ErrorKind::domain_exit, "leg end left the domain");
    ts.push_back(t0 + d);
    xs.push_back(end.x);
    vs.push_back(detail::leg_velocity(ts.back(), xs.back(), strips, kappa_b, opt));
    require(ts.size() >= 2 && ts.back() > ts[ts.size() - 2], ErrorKind::domain_exit, "degenerate leg");
    if (ts.size() == 2) {
        // Too short for a difference stencil: add a midpoint.
        const double tm = 0.5 * (ts[0] + ts[1]);
        const auto mid = detail::rk4_step(ts[0], xs[0], vs[0], tm - ts[0], strips, kappa_b, opt);
        ts.insert(ts.begin() + 1, tm);
        xs.insert(xs.begin() + 1, mid.x);
        vs.insert(vs.begin() + 1, detail::leg_velocity(tm, mid.x, strips, kappa_b, opt));
    }
    return detail::leg_trajectory(std::move(ts), std::move(xs), std::move(vs), Charge::a, opt);
}

/// Extends b from T2+ to t2+(t1+(T2+)) given the freshly extended a leg on
/// [T1+, t1+(T2+)] and the b strip on [T2-, T2+]. Mirror image of extend_a.
inline Trajectory extend_b(const Trajectory& a_leg, const Trajectory& b_strip, double kappa_a, double step,
                           const StepperOptions& opt = {})
{
    const StripPair mirrored{b_strip.mirrored_in_space(Charge::a), a_leg.mirrored_in_space(Charge::b)};
    return extend_a(mirrored, kappa_a, step, opt).mirrored_in_space(Charge::b);
}

enum class TimeDirection { future, past };

struct LegInfo {
    Charge charge = Charge::a;
    double from = 0.0;
    double to = 0.0;
    std::size_t nodes = 0;
};

struct Reconstruction {
    TrajectoryPair pair;
    std::vector<LegInfo> legs;
};

/// Failure inside a leg; carries everything reconstructed before it.
class ReconstructionError : public Error {
public:
    ReconstructionError(ErrorKind kind, const std::string& what, Reconstruction partial, int leg, Charge charge)
        : Error(kind, what), partial_(std::move(partial)), leg_(leg), charge_(charge)
    {
    }

    [[nodiscard]] const Reconstruction& partial() const noexcept { return partial_; }
    [[nodiscard]] int failing_leg() const noexcept { return leg_; }
    [[nodiscard]] Charge failing_charge() const noexcept { return charge_; }

private:
    Reconstruction partial_;
    int leg_;
    Charge charge_;
};

namespace detail {

/// Joins two trajectories sharing an end node; the joint takes the later
/// piece's acceleration.
inline Trajectory concatenate(const Trajectory& first, const Trajectory& second)
{
    std::vector<double> t(first.times().begin(), first.times().end());
    std::vector<double> x(first.positions().begin(), first.positions().end());
    std::vector<double> v(first.velocities().begin(), first.velocities().end());
    std::vector<double> acc(first.node_accelerations().begin(), first.node_accelerations().end());
    t.pop_back();
    x.pop_back();
    v.pop_back();
    acc.pop_back();
    t.insert(t.end(), second.times().begin(), second.times().end());
    x.insert(x.end(), second.positions().begin(), second.positions().end());
    v.insert(v.end(), second.velocities().begin(), second.velocities().end());
    acc.insert(acc.end(), second.node_accelerations().begin(), second.node_accelerations().end());
    return Trajectory(std::move(t), std::move(x), std::move(v), first.label(), std::move(acc));
}

/// (a, b) -> (-b(-t), -a(-t)): maps past reconstruction onto future
/// reconstruction.
inline Trajectory reverse_mirror(const Trajectory& tr, Charge label)
{
    return tr.reflected_in_time().mirrored_in_space(label);
}

inline Reconstruction reconstruct_future(const StripPair& strips, double kappa_a, double kappa_b, double horizon,
                                         double step, int max_legs, const StepperOptions& opt)
{
    Reconstruction out{TrajectoryPair(strips.a_strip, strips.b_strip), {}};
    if (horizon <= 0.0 || max_legs == 0) return out;
    const double target = std::min(strips.a_strip.back(), strips.b_strip.back()) + horizon;
    Trajectory a_piece = strips.a_strip, b_piece = strips.b_strip;
    Trajectory a_all = strips.a_strip, b_all = strips.b_strip;
    int leg = 0;
    while (std::min(a_all.back(), b_all.back()) < target && (max_legs < 0 || leg < max_legs)) {
        const Charge which = leg % 2 == 0 ? Charge::a : Charge::b;
        try {
            if (which == Charge::a) {
                validate(StripPair{a_piece, b_piece}, 1e-9, opt.delay);
                a_piece = extend_a({a_piece, b_piece}, kappa_b, step, opt);
                a_all = concatenate(a_all, a_piece);
                out.legs.push_back({Charge::a, a_piece.front(), a_piece.back(), a_piece.size()});
            } else {
                b_piece = extend_b(a_piece, b_piece, kappa_a, step, opt);
                b_all = concatenate(b_all, b_piece);
                out.legs.push_back({Charge::b, b_piece.front(), b_piece.back(), b_piece.size()});
            }
            out.pair = TrajectoryPair(a_all, b_all);
        } catch (const Error& e) {
            throw ReconstructionError(e.kind(),
                                      "leg " + std::to_string(leg + 1) + " (" + to_string(which) + "): " + e.what(),
                                      out, leg + 1, which);
        }
        ++leg;
    }
    return out;
}

} // namespace detail

/// Method of steps from finite strips. Future legs alternate a, b, a, ...;
/// the past is handled by the symmetry (a, b) -> (-b(-t), -a(-t)). Legs run
/// until both charges reach min(strip ends) + horizon or `max_legs` legs
/// (negative: unlimited) are done.
inline Reconstruction reconstruct(const StripPair& strips, double kappa_a, double kappa_b, double horizon,
                                  TimeDirection direction, double step, int max_legs = -1,
                                  const StepperOptions& opt = {})
{
    validate(strips, 1e-9, opt.delay);
    require(step > 0.0, ErrorKind::invalid_input, "step must be > 0");
    if (direction == TimeDirection::future)
        return detail::reconstruct_future(strips, kappa_a, kappa_b, horizon, step, max_legs, opt);

    auto to_mirror = [](const Trajectory& a, const Trajectory& b) {
        return StripPair{detail::reverse_mirror(b, Charge::a), detail::reverse_mirror(a, Charge::b)};
    };
    auto back = [](const Reconstruction& r) {
        Reconstruction o{TrajectoryPair(detail::reverse_mirror(r.pair.lower(), Charge::a),
                                        detail::reverse_mirror(r.pair.upper(), Charge::b)),
                         {}};
        for (const auto& l : r.legs)
            o.legs.push_back({l.charge == Charge::a ? Charge::b : Charge::a, -l.to, -l.from, l.nodes});
        return o;
    };
    try {
        return back(detail::reconstruct_future(to_mirror(strips.a_strip, strips.b_strip), kappa_b, kappa_a, horizon,
                                               step, max_legs, opt));
    } catch (const ReconstructionError& e) {
        const Charge c = e.failing_charge() == Charge::a ? Charge::b : Charge::a;
        throw ReconstructionError(e.kind(), e.what(), back(e.partial()), e.failing_leg(), c);
    }
}

} // namespace fstline
