#pragma once

#include "fstline/assessment.hpp"
#include "fstline/errors.hpp"
#include "fstline/initial_data.hpp"
#include "fstline/kinematics.hpp"
#include "fstline/lightcone.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <variant>
#include <vector>

namespace fstline {

struct AprioriBounds {
    double v_cap = 0.0;    // velocity bound
    double d_min = 0.0;    // separation bound
    double v_sep = 0.0;    // asymptotic relative velocity
    double t_sep = 0.0;    // time from which v_sep holds
    double a_decay = 0.0;  // (1 + |t|)|acc| bound

    void validate() const
    {
        require(v_cap > 0.0 && v_cap < 1.0 && v_sep > 0.0 && v_sep < 1.0, ErrorKind::invalid_input,
                "v_cap and v_sep must lie in (0, 1)");
        require(d_min > 0.0 && a_decay > 0.0 && t_sep > 0.0, ErrorKind::invalid_input,
                "d_min, a_decay and t_sep must be positive");
    }
};

namespace detail {

inline double boosted_cap(double boost_speed, double own_speed, double coupling_term)
{
    const double num = 1.0 - boost_speed;
    const double den = 4.0 / std::sqrt(1.0 - own_speed * own_speed) + coupling_term;
    const double cap = std::sqrt(1.0 - num * num / (den * den));
    // a cap within rounding of 1 is reported as the largest double below 1
    return std::min(cap, std::nextafter(1.0, 0.0));
}

} // namespace detail

/// Closed-form velocity cap. `reference_speed` is the sup of the reference
/// velocities (it enters through the initial momentum bound).
inline double velocity_bound_constant(const InitialData& data, const ModelSpec& model, double reference_speed = 0.0)
{
    if (const auto* f = std::get_if<FstHalfLine>(&data)) {
        const double gap = f->a0 - f->b_strip.position(0.0);
        const double strip_speed = f->b_strip.max_speed();
        const double vx = detail::boosted_cap(strip_speed, std::max(std::abs(f->a0_dot), reference_speed),
                                              3.0 * model.kappa_a / gap);
        const double vy = detail::boosted_cap(std::abs(f->a0_dot), std::max(strip_speed, reference_speed),
                                              3.0 * model.kappa_b / gap);
        return std::max({vx, vy, strip_speed});
    }
    if (const auto* c = std::get_if<Cauchy>(&data)) {
        const double gap = c->a0 - c->b0;
        const double weight = 4.0 * (model.eps_minus + model.eps_plus);
        const double sa = std::max(std::abs(c->a0_dot), reference_speed);
        const double sb = std::max(std::abs(c->b0_dot), reference_speed);
        const double va_past = detail::boosted_cap(std::abs(c->b0_dot), sa, weight * model.kappa_a / gap);
        const double vb_past = detail::boosted_cap(std::abs(c->a0_dot), sb, weight * model.kappa_b / gap);
        const double va_future = detail::boosted_cap(vb_past, sa, weight * model.kappa_a / gap);
        const double vb_future = detail::boosted_cap(va_past, sb, weight * model.kappa_b / gap);
        return std::max({va_past, vb_past, va_future, vb_future});
    }
    throw Error(ErrorKind::invalid_input, "velocity bound needs FST or Cauchy data");
}

/// Lower bound on the separation implied by the velocity cap.
inline double distance_bound_constant(const InitialData& data, const ModelSpec& model, double v_cap)
{
    double a0_dot = 0.0, gap = 0.0;
    if (const auto* f = std::get_if<FstHalfLine>(&data)) {
        a0_dot = f->a0_dot;
        gap = f->a0 - f->b_strip.position(0.0);
    } else if (const auto* c = std::get_if<Cauchy>(&data)) {
        a0_dot = c->a0_dot;
        gap = c->a0 - c->b0;
    } else {
        throw Error(ErrorKind::invalid_input, "distance bound needs FST or Cauchy data");
    }
    const double k = model.kappa_a;
    return k * (1.0 - v_cap) * (1.0 - v_cap) / (4.0 / std::sqrt(1.0 - a0_dot * a0_dot) + 3.0 * k / gap);
}

struct BoundCheck {
    std::string name;
    double observed = 0.0;
    double limit = 0.0;
    double margin = 0.0;  // positive when the check passes
    bool pass = false;
};

struct BoundsReport {
    AprioriBounds bounds;
    std::vector<BoundCheck> checks;

    [[nodiscard]] bool pass() const
    {
        return std::all_of(checks.begin(), checks.end(), [](const BoundCheck& c) { return c.pass; });
    }
};

namespace detail {

template <class F>
void sample_window(double from, double to, double step, F&& f)
{
    if (!(to > from)) return;
    const auto n = static_cast<std::size_t>(std::ceil((to - from) / step));
    for (std::size_t i = 0; i <= n; ++i) f(i == n ? to : from + (to - from) * static_cast<double>(i) / n);
}

inline double default_sample_step(const TrajectoryPair& pair)
{
    const auto t = pair.upper().times();
    return 0.25 * (t.back() - t.front()) / static_cast<double>(t.size() - 1);
}

} // namespace detail

struct BoundsOptions {
    double slack = 0.01;
    double sample_step = 0.0;  // 0: a quarter of the mean grid spacing
    bool two_sided = false;    // relative velocity gap asserted for t <= -t_sep too
};

/// Dense-sampling check of a pair against the bound constants.
inline BoundsReport check_bounds(const TrajectoryPair& pair, const AprioriBounds& bounds,
                                 const AssessmentWindow& window, const BoundsOptions& opt = {})
{
    BoundsReport rep{bounds, {}};
    const double step = opt.sample_step > 0.0 ? opt.sample_step : detail::default_sample_step(pair);
    double vmax = 0.0, decay = 0.0, sep = std::numeric_limits<double>::infinity();
    double gap = std::numeric_limits<double>::infinity();
    bool gap_sampled = false;
    for (const Charge c : {Charge::a, Charge::b}) {
        const Trajectory& tr = c == Charge::a ? pair.upper() : pair.lower();
        detail::sample_window(window.from(c), window.to(c), step, [&](double t) {
            vmax = std::max(vmax, std::abs(tr.velocity(t)));
            decay = std::max(decay, (1.0 + std::abs(t)) * std::abs(tr.acceleration_at(t)));
        });
    }
    const double lo = std::max(window.a_from, window.b_from), hi = std::min(window.a_to, window.b_to);
    detail::sample_window(lo, hi, step, [&](double t) {
        sep = std::min(sep, pair.upper().position(t) - pair.lower().position(t));
        const double rel = pair.upper().velocity(t) - pair.lower().velocity(t);
        if (t >= bounds.t_sep) {
            gap = std::min(gap, rel);
            gap_sampled = true;
        }
        if (opt.two_sided && t <= -bounds.t_sep) {
            gap = std::min(gap, -rel);
            gap_sampled = true;
        }
    });
    auto add = [&](std::string name, double observed, double limit, double margin) {
        rep.checks.push_back({std::move(name), observed, limit, margin, margin > 0.0});
    };
    add("velocity", vmax, bounds.v_cap, bounds.v_cap - vmax);
    add("separation", sep, bounds.d_min * (1.0 - opt.slack), sep - bounds.d_min * (1.0 - opt.slack));
    if (gap_sampled)
        add("separation_rate", gap, bounds.v_sep, gap - bounds.v_sep);
    else
        add("separation_rate", 0.0, bounds.v_sep, -1.0);
    add("acceleration_decay", decay, bounds.a_decay, bounds.a_decay - decay);
    return rep;
}

/// Bound constants for a computed solution: the closed-form velocity cap and
/// separation bound, and the remaining existence constants measured from the
/// solution itself with the given relative margin.
inline AprioriBounds estimate_bounds(const TrajectoryPair& pair, const InitialData& data, const ModelSpec& model,
                                     const AssessmentWindow& window, double reference_speed, bool two_sided,
                                     double margin = 0.1)
{
    AprioriBounds b;
    b.v_cap = velocity_bound_constant(data, model, reference_speed);
    b.d_min = distance_bound_constant(data, model, b.v_cap);

    const double step = detail::default_sample_step(pair);
    const double lo = std::max(window.a_from, window.b_from), hi = std::min(window.a_to, window.b_to);
    double sep = std::numeric_limits<double>::infinity(), decay = 0.0;
    detail::sample_window(lo, hi, step, [&](double t) {
        sep = std::min(sep, pair.upper().position(t) - pair.lower().position(t));
    });
    for (const Charge c : {Charge::a, Charge::b}) {
        const Trajectory& tr = c == Charge::a ? pair.upper() : pair.lower();
        detail::sample_window(window.from(c), window.to(c), step, [&](double t) {
            decay = std::max(decay, (1.0 + std::abs(t)) * std::abs(tr.acceleration_at(t)));
        });
    }
    if (!(b.d_min > 0.0)) b.d_min = 0.5 * sep;  // zero coupling: the closed form degenerates
    b.a_decay = decay > 0.0 ? (1.0 + margin) * decay : margin;

    // v_sep: a fraction of the relative velocity at the end of the window;
    // t_sep: the last time the gap is below that level, plus a margin.
    auto rel = [&](double t) { return pair.upper().velocity(t) - pair.lower().velocity(t); };
    double end_gap = rel(hi);
    if (two_sided) end_gap = std::min(end_gap, -rel(lo));
    b.v_sep = std::clamp(0.5 * end_gap, 1e-6, 0.999);
    double last_below = 0.0;
    detail::sample_window(lo, hi, step, [&](double t) {
        if (t >= 0.0 && rel(t) <= b.v_sep) last_below = std::max(last_below, t);
        if (two_sided && t <= 0.0 && -rel(t) <= b.v_sep) last_below = std::max(last_below, -t);
    });
    b.t_sep = std::max(last_below * (1.0 + margin), margin);
    return b;
}

// ---------------------------------------------------------------------------
// Energy functionals
// ---------------------------------------------------------------------------

struct EnergySample {
    double t = 0.0;
    double kinetic = 0.0;        // (1 - boost X') / sqrt(1 - X'^2)
    double pot_minus = 0.0;      // 1 / (X(t) - Y(t2-))
    double pot_plus = 0.0;       // 1 / (X(t) - Y(t2+))
    double combined = 0.0;       // kinetic + kappa_a [eps- (1+boost) pot- + eps+ (1-boost) pot+]
    double t2_minus = 0.0;
    double t2_plus = 0.0;
    double delayed_velocity_minus = 0.0;  // Y'(t2-)
    double delayed_velocity_plus = 0.0;   // Y'(t2+)
    double separation = 0.0;              // X(t) - Y(t)
};

inline std::vector<EnergySample> energy_series(const TrajectoryPair& pair, const ModelSpec& model, double boost,
                                               double from, double to, double sample_step,
                                               const DelayOptions& opt = {})
{
    require(std::abs(boost) < 1.0, ErrorKind::invalid_input, "boost must satisfy |boost| < 1");
    require(sample_step > 0.0, ErrorKind::invalid_input, "sample step must be positive");
    std::vector<EnergySample> out;
    detail::sample_window(from, to, sample_step, [&](double t) {
        EnergySample e;
        e.t = t;
        const auto x = pair.upper().eval(t);
        e.kinetic = (1.0 - boost * x.velocity) / std::sqrt(1.0 - x.velocity * x.velocity);
        e.t2_minus = delay_of(pair, t, DelayKind::t2_minus, opt);
        e.t2_plus = delay_of(pair, t, DelayKind::t2_plus, opt);
        const auto ym = pair.lower().eval(e.t2_minus), yp = pair.lower().eval(e.t2_plus);
        e.pot_minus = 1.0 / (x.position - ym.position);
        e.pot_plus = 1.0 / (x.position - yp.position);
        e.delayed_velocity_minus = ym.velocity;
        e.delayed_velocity_plus = yp.velocity;
        e.separation = x.position - pair.lower().position(t);
        e.combined = e.kinetic + model.kappa_a * (model.eps_minus * (1.0 + boost) * e.pot_minus +
                                                  model.eps_plus * (1.0 - boost) * e.pot_plus);
        out.push_back(e);
    });
    return out;
}

// ---------------------------------------------------------------------------
// Acceleration tail
// ---------------------------------------------------------------------------

struct DecayFit {
    double coefficient = 0.0;        // C in C / (1 + |t|)
    double relative_residual = 0.0;  // ||y - C g|| / ||y||
    double sup_weighted = 0.0;       // sup (1 + |t|)|acc| over the whole range
    std::size_t samples = 0;
};

/// Least-squares fit of |acc(t)| to C/(1+|t|) on the outer half of [from, to]
/// (measured in |t|).
inline DecayFit fit_acceleration_decay(const Trajectory& tr, double from, double to, double sample_step)
{
    DecayFit fit;
    const double reach = std::max(std::abs(from), std::abs(to));
    double yg = 0.0, gg = 0.0, yy = 0.0;
    std::vector<std::pair<double, double>> pts;
    detail::sample_window(from, to, sample_step, [&](double t) {
        const double y = std::abs(tr.acceleration_at(t));
        fit.sup_weighted = std::max(fit.sup_weighted, (1.0 + std::abs(t)) * y);
        if (std::abs(t) < 0.5 * reach) return;
        const double g = 1.0 / (1.0 + std::abs(t));
        yg += y * g;
        gg += g * g;
        yy += y * y;
        pts.emplace_back(g, y);
    });
    fit.samples = pts.size();
    if (pts.empty() || yy == 0.0) return fit;
    fit.coefficient = yg / gg;
    double rr = 0.0;
    for (const auto& [g, y] : pts) rr += (y - fit.coefficient * g) * (y - fit.coefficient * g);
    fit.relative_residual = std::sqrt(rr / yy);
    return fit;
}

} // namespace fstline
