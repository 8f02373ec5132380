#pragma once

#include "fstline/errors.hpp"
#include "fstline/kinematics.hpp"
#include "fstline/lightcone.hpp"

#include <string>

namespace fstline {

namespace detail {

/// Delayed Coulomb term seen by an observer at (t, x) from `source` along
/// one light-cone direction.
struct DelayedTerm {
    double time;
    double distance;  // |x - source(time)|
    double velocity;  // source velocity at `time`
};

inline DelayedTerm delayed_term(const Trajectory& source, double x, double t, Direction dir,
                                bool observer_above, const DelayOptions& opt)
{
    const double s = delay_time(source, x, t, dir, opt);
    const auto st = source.eval(s);
    const double gap = observer_above ? x - st.position : st.position - x;
    require(gap > 0.0, ErrorKind::ordering_violation,
            "non-positive delayed separation at t = " + std::to_string(t));
    return {s, gap, st.velocity};
}

} // namespace detail

/// Momentum rate of charge a (the upper one). Positive for kappa_a > 0.
inline double force_on_a(const TrajectoryPair& pair, const ModelSpec& model, double t,
                         const DelayOptions& opt = {})
{
    const double x = pair.upper().position(t);
    double total = 0.0;
    if (model.eps_minus != 0.0) {
        const auto r = detail::delayed_term(pair.lower(), x, t, Direction::retarded, true, opt);
        const double w = model.velocity_factors ? rho(r.velocity) : 1.0;
        total += model.eps_minus * w / (r.distance * r.distance);
    }
    if (model.eps_plus != 0.0) {
        const auto r = detail::delayed_term(pair.lower(), x, t, Direction::advanced, true, opt);
        const double w = model.velocity_factors ? sigma(r.velocity) : 1.0;
        total += model.eps_plus * w / (r.distance * r.distance);
    }
    return model.kappa_a * total;
}

/// Momentum rate of charge b (the lower one). Negative for kappa_b > 0.
inline double force_on_b(const TrajectoryPair& pair, const ModelSpec& model, double t,
                         const DelayOptions& opt = {})
{
    const double y = pair.lower().position(t);
    double total = 0.0;
    if (model.eps_minus != 0.0) {
        const auto r = detail::delayed_term(pair.upper(), y, t, Direction::retarded, false, opt);
        const double w = model.velocity_factors ? sigma(r.velocity) : 1.0;
        total += model.eps_minus * w / (r.distance * r.distance);
    }
    if (model.eps_plus != 0.0) {
        const auto r = detail::delayed_term(pair.upper(), y, t, Direction::advanced, false, opt);
        const double w = model.velocity_factors ? rho(r.velocity) : 1.0;
        total += model.eps_plus * w / (r.distance * r.distance);
    }
    return -model.kappa_b * total;
}

inline double force_on(Charge c, const TrajectoryPair& pair, const ModelSpec& model, double t,
                       const DelayOptions& opt = {})
{
    return c == Charge::a ? force_on_a(pair, model, t, opt) : force_on_b(pair, model, t, opt);
}

} // namespace fstline
