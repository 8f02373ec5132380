#pragma once

#include "fstline/errors.hpp"
#include "fstline/initial_data.hpp"
#include "fstline/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace fstline {

/// Closed-form world-line: velocity ramps between consecutive knots with the
/// smoothstep profile 3s^2 - 2s^3, constant outside the knots. An optional
/// strip replaces the curve on its own domain and before it.
class ReferenceTrajectory {
public:
    ReferenceTrajectory() = default;

    /// `anchor_position` is the position at knots.front().
    ReferenceTrajectory(std::vector<double> knots, std::vector<double> knot_velocities, double anchor_position,
                        std::optional<Trajectory> strip = std::nullopt)
        : k_(std::move(knots)), u_(std::move(knot_velocities)), strip_(std::move(strip))
    {
        require(!k_.empty() && k_.size() == u_.size(), ErrorKind::invalid_input, "reference knots malformed");
        for (std::size_t j = 1; j < k_.size(); ++j)
            require(k_[j] > k_[j - 1], ErrorKind::invalid_input, "reference knots must increase");
        for (double u : u_)
            require(std::abs(u) < 1.0, ErrorKind::invalid_input, "reference knot velocity must be < 1");
        if (strip_)
            require(std::abs(strip_->back() - k_.front()) < 1e-14 * (1.0 + std::abs(k_.front())),
                    ErrorKind::invalid_input, "reference strip must end at the first knot");
        p_.resize(k_.size());
        p_[0] = anchor_position;
        for (std::size_t j = 1; j < k_.size(); ++j) p_[j] = p_[j - 1] + 0.5 * (k_[j] - k_[j - 1]) * (u_[j - 1] + u_[j]);
    }

    [[nodiscard]] KinematicState eval(double t) const
    {
        if (strip_ && t < k_.front()) return strip_->eval(t);
        if (t <= k_.front()) return {p_.front() + u_.front() * (t - k_.front()), u_.front(), 0.0};
        if (t >= k_.back()) return {p_.back() + u_.back() * (t - k_.back()), u_.back(), 0.0};
        const std::size_t j = static_cast<std::size_t>(std::upper_bound(k_.begin(), k_.end(), t) - k_.begin()) - 1;
        const double len = k_[j + 1] - k_[j];
        const double s = (t - k_[j]) / len;
        const double du = u_[j + 1] - u_[j];
        return {p_[j] + len * (u_[j] * s + du * (s * s * s - 0.5 * s * s * s * s)),
                u_[j] + du * s * s * (3.0 - 2.0 * s), du / len * 6.0 * s * (1.0 - s)};
    }

    [[nodiscard]] double position(double t) const { return eval(t).position; }
    [[nodiscard]] double velocity(double t) const { return eval(t).velocity; }
    [[nodiscard]] double acceleration(double t) const { return eval(t).acceleration; }

    [[nodiscard]] double max_speed() const
    {
        double m = 0.0;
        for (double u : u_) m = std::max(m, std::abs(u));
        return strip_ ? std::max(m, strip_->max_speed()) : m;
    }

    [[nodiscard]] const std::vector<double>& knots() const noexcept { return k_; }
    [[nodiscard]] const std::optional<Trajectory>& strip() const noexcept { return strip_; }

private:
    std::vector<double> k_, u_, p_;
    std::optional<Trajectory> strip_;
};

struct ReferencePair {
    ReferenceTrajectory x0;
    ReferenceTrajectory y0;
    double switch_time = 1.0;
    double start_time = 0.0;  // the conditions are asserted for t >= start_time
    bool two_sided = false;   // Cauchy mode: asserted on the whole line
};

struct ReferenceCheck {
    bool subluminal = false;
    bool separated = false;
    bool diverging = false;
    bool monotone_acceleration = false;
    bool compact_acceleration = false;
    double min_separation = 0.0;

    [[nodiscard]] bool ok() const
    {
        return subluminal && separated && diverging && monotone_acceleration && compact_acceleration;
    }
};

/// The five conditions on a reference pair, checked by dense sampling.
inline ReferenceCheck check_reference(const ReferencePair& r, int samples = 20000)
{
    ReferenceCheck c;
    const double lo = r.two_sided ? -r.switch_time - 1.0 : r.start_time;
    const double hi = r.switch_time + 1.0;
    c.subluminal = r.x0.max_speed() < 1.0 && r.y0.max_speed() < 1.0;
    c.monotone_acceleration = true;
    c.compact_acceleration = true;
    c.min_separation = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= samples; ++i) {
        const double t = lo + (hi - lo) * i / samples;
        const auto x = r.x0.eval(t), y = r.y0.eval(t);
        c.min_separation = std::min(c.min_separation, x.position - y.position);
        const bool in_strip = r.y0.strip() && t < r.y0.strip()->back();
        if (x.acceleration < 0.0 || (!in_strip && y.acceleration > 0.0)) c.monotone_acceleration = false;
        const bool outside = r.two_sided ? std::abs(t) >= r.switch_time : t >= r.switch_time;
        if (outside && (x.acceleration != 0.0 || y.acceleration != 0.0)) c.compact_acceleration = false;
    }
    c.separated = c.min_separation > 0.0;
    c.diverging = r.x0.velocity(r.switch_time) - r.y0.velocity(r.switch_time) > 0.0;
    if (r.two_sided)
        c.diverging = c.diverging && r.x0.velocity(-r.switch_time) - r.y0.velocity(-r.switch_time) < 0.0;
    return c;
}

/// Explicit reference pair adapted to the data: x0 ramps up to
/// +outgoing_speed and y0 down to -outgoing_speed (and the reverse in the
/// past for Cauchy data).
inline ReferencePair build_reference(const InitialData& data, double outgoing_speed)
{
    require(outgoing_speed > 0.0 && outgoing_speed < 1.0, ErrorKind::invalid_input,
            "outgoing_speed must lie in (0, 1)");
    const double u = outgoing_speed;
    ReferencePair r;
    if (const auto* c = std::get_if<Cauchy>(&data)) {
        validate(*c);
        r.switch_time = 1.0;
        r.two_sided = true;
        r.x0 = ReferenceTrajectory({-1.0, 0.0, 1.0}, {std::min(-u, c->a0_dot), c->a0_dot, std::max(u, c->a0_dot)},
                                   c->a0 - 0.5 * (std::min(-u, c->a0_dot) + c->a0_dot));
        r.y0 = ReferenceTrajectory({-1.0, 0.0, 1.0}, {std::max(u, c->b0_dot), c->b0_dot, std::min(-u, c->b0_dot)},
                                   c->b0 - 0.5 * (std::max(u, c->b0_dot) + c->b0_dot));
    } else if (const auto* f = std::get_if<FstHalfLine>(&data)) {
        validate(*f);
        const double tp = f->t_plus();
        const double w = f->b_strip.velocity(tp);
        r.switch_time = tp + 1.0;
        r.start_time = 0.0;
        r.x0 = ReferenceTrajectory({0.0, r.switch_time}, {f->a0_dot, std::max(u, f->a0_dot)}, f->a0);
        r.y0 = ReferenceTrajectory({tp, r.switch_time}, {w, std::min(-u, w)}, f->b_strip.position(tp), f->b_strip);
    } else {
        throw Error(ErrorKind::invalid_input, "reference pairs are built from FST or Cauchy data only");
    }
    const auto check = check_reference(r);
    require(check.separated && check.diverging, ErrorKind::reference_construction,
            "reference pair crosses before switch time (min separation " + std::to_string(check.min_separation) +
                "); use a larger outgoing_speed");
    require(check.ok(), ErrorKind::reference_construction, "reference pair violates its defining conditions");
    return r;
}

} // namespace fstline
