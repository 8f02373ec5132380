#pragma once

#include "fstline/errors.hpp"
#include "fstline/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace fstline {

// ---------------------------------------------------------------------------
// Scalar relativistic maps (c = 1)
// ---------------------------------------------------------------------------

inline double momentum(double v)
{
    require(std::abs(v) < 1.0, ErrorKind::domain, "momentum of |v| >= 1 (v = " + std::to_string(v) + ")");
    return v / std::sqrt(1.0 - v * v);
}

inline double velocity_from_momentum(double p) { return p / std::sqrt(1.0 + p * p); }

/// Doppler-like weight of the retarded term.
inline double rho(double v)
{
    require(std::abs(v) < 1.0, ErrorKind::domain, "rho of |v| >= 1");
    return (1.0 + v) / (1.0 - v);
}

/// Doppler-like weight of the advanced term.
inline double sigma(double v)
{
    require(std::abs(v) < 1.0, ErrorKind::domain, "sigma of |v| >= 1");
    return (1.0 - v) / (1.0 + v);
}

inline double lorentz_gamma(double v) { return 1.0 / std::sqrt(1.0 - v * v); }

// ---------------------------------------------------------------------------
// Trajectory
// ---------------------------------------------------------------------------

enum class Charge { a, b };

inline const char* to_string(Charge c) { return c == Charge::a ? "a" : "b"; }

struct KinematicState {
    double position;
    double velocity;
    double acceleration;
};

/// A sampled world-line segment.
///
/// Inside the grid the position is the Hermite interpolant of the node data:
/// quintic when node accelerations are given, cubic otherwise. Outside it the
/// charge moves freely with the boundary node's velocity. A second, smoother acceleration channel is kept
/// for consumers that need accelerations at delayed times: node accelerations
/// (given, or differentiated from node velocities) joined by a C1 cubic.
class Trajectory {
public:
    Trajectory() = default;

    Trajectory(std::vector<double> times, std::vector<double> positions, std::vector<double> velocities,
               Charge label = Charge::a, std::vector<double> node_accelerations = {})
        : t_(std::move(times)), x_(std::move(positions)), v_(std::move(velocities)),
          acc_(std::move(node_accelerations)), label_(label)
    {
        has_node_acc_ = !acc_.empty();
        validate();
        derive_channel();
    }

    /// Copy whose difference stencils do not reach across the given times
    /// (points of reduced smoothness).
    [[nodiscard]] Trajectory with_breaks(std::vector<double> breaks) const
    {
        Trajectory copy = *this;
        std::erase_if(breaks, [&](double b) { return !(b > t_.front() && b < t_.back()); });
        std::sort(breaks.begin(), breaks.end());
        copy.breaks_ = std::move(breaks);
        copy.derive_channel();
        return copy;
    }

    [[nodiscard]] std::span<const double> breaks() const noexcept { return breaks_; }

    [[nodiscard]] Charge label() const noexcept { return label_; }
    [[nodiscard]] std::size_t size() const noexcept { return t_.size(); }
    [[nodiscard]] std::span<const double> times() const noexcept { return t_; }
    [[nodiscard]] std::span<const double> positions() const noexcept { return x_; }
    [[nodiscard]] std::span<const double> velocities() const noexcept { return v_; }
    /// Node accelerations of the smooth channel (given or differentiated).
    [[nodiscard]] std::span<const double> node_accelerations() const noexcept { return acc_; }
    [[nodiscard]] bool has_node_accelerations() const noexcept { return has_node_acc_; }
    [[nodiscard]] double front() const noexcept { return t_.front(); }
    [[nodiscard]] double back() const noexcept { return t_.back(); }

    [[nodiscard]] bool covers(double t) const noexcept { return t >= t_.front() && t <= t_.back(); }

    /// Supremum of |velocity| of the interpolant (and hence of the whole
    /// extended world-line).
    [[nodiscard]] double max_speed() const noexcept { return max_speed_; }

    [[nodiscard]] KinematicState eval(double t) const
    {
        if (t <= t_.front()) {
            if (t == t_.front()) return {x_.front(), v_.front(), cell(0, t).curvature};
            return {x_.front() + v_.front() * (t - t_.front()), v_.front(), 0.0};
        }
        if (t >= t_.back()) {
            if (t == t_.back()) return {x_.back(), v_.back(), cell(t_.size() - 2, t).curvature};
            return {x_.back() + v_.back() * (t - t_.back()), v_.back(), 0.0};
        }
        const std::size_t i = numerics::locate_cell(t_, t);
        if (t == t_[i]) return {x_[i], v_[i], cell(i, t).curvature};
        const auto h = cell(i, t);
        return {h.value, h.slope, h.curvature};
    }

    [[nodiscard]] double position(double t) const { return eval(t).position; }
    [[nodiscard]] double velocity(double t) const { return eval(t).velocity; }

    /// Smooth acceleration channel; zero on the free extension.
    [[nodiscard]] double acceleration_at(double t) const
    {
        if (t < t_.front() || t > t_.back()) return 0.0;
        return acceleration_cubic(t);
    }

    /// Acceleration channel continued polynomially from the boundary cells
    /// (for evaluations a hair outside the grid).
    [[nodiscard]] double acceleration_cubic(double t) const
    {
        const std::size_t i = numerics::locate_cell(t_, t);
        return numerics::hermite_cell(t_[i], t_[i + 1], acc_[i], acc_[i + 1], jerk_[i], jerk_left_[i + 1], t)
            .value;
    }

    /// Sub-trajectory on [from, to]; end nodes are interpolated.
    [[nodiscard]] Trajectory cut(double from, double to) const
    {
        require(from < to && covers(from) && covers(to), ErrorKind::invalid_input,
                "cut interval must lie inside the trajectory grid");
        const double snap = 1e-9 * (1.0 + std::abs(to - from));
        std::vector<double> t, x, v, a;
        auto push = [&](double time) {
            const auto s = eval(time);
            t.push_back(time);
            x.push_back(s.position);
            v.push_back(s.velocity);
            a.push_back(acceleration_at(time));
        };
        auto push_node = [&](std::size_t i) {
            t.push_back(t_[i]);
            x.push_back(x_[i]);
            v.push_back(v_[i]);
            a.push_back(acc_[i]);
        };
        push(from);
        for (std::size_t i = 0; i < t_.size(); ++i) {
            if (t_[i] <= from || t_[i] >= to) continue;
            if (t_[i] - from < snap) {
                t.pop_back(), x.pop_back(), v.pop_back(), a.pop_back();
                push_node(i);
                continue;
            }
            if (to - t_[i] < snap) continue;
            push_node(i);
        }
        push(to);
        return Trajectory(std::move(t), std::move(x), std::move(v), label_, std::move(a)).with_breaks(breaks_);
    }

    /// t -> -t (velocities flip, accelerations keep their sign).
    [[nodiscard]] Trajectory reflected_in_time() const
    {
        const std::size_t n = t_.size();
        std::vector<double> t(n), x(n), v(n), a(n);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t j = n - 1 - i;
            t[i] = -t_[j];
            x[i] = x_[j];
            v[i] = -v_[j];
            a[i] = acc_[j];
        }
        std::vector<double> breaks;
        for (double b : breaks_) breaks.push_back(-b);
        return Trajectory(std::move(t), std::move(x), std::move(v), label_,
                          has_node_acc_ ? std::move(a) : std::vector<double>{})
            .with_breaks(std::move(breaks));
    }

    /// x -> -x.
    [[nodiscard]] Trajectory mirrored_in_space(Charge new_label) const
    {
        std::vector<double> x(x_.size()), v(v_.size()), a(acc_.size());
        for (std::size_t i = 0; i < x_.size(); ++i) {
            x[i] = -x_[i];
            v[i] = -v_[i];
            a[i] = -acc_[i];
        }
        return Trajectory(t_, std::move(x), std::move(v), new_label,
                          has_node_acc_ ? std::move(a) : std::vector<double>{})
            .with_breaks(breaks_);
    }

    [[nodiscard]] Trajectory relabeled(Charge label) const
    {
        Trajectory copy = *this;
        copy.label_ = label;
        return copy;
    }

private:
    void derive_channel()
    {
        if (!has_node_acc_) acc_ = numerics::nodal_derivative(t_, v_, 5, breaks_);
        jerk_ = numerics::nodal_derivative(t_, acc_, 5, breaks_);
        jerk_left_ = breaks_.empty() ? jerk_ : numerics::nodal_derivative(t_, acc_, 5, breaks_, true);
    }

    [[nodiscard]] numerics::HermiteValue cell(std::size_t i, double t) const
    {
        if (has_node_acc_) return quintic(i).at(t);
        return numerics::hermite_cell(t_[i], t_[i + 1], x_[i], x_[i + 1], v_[i], v_[i + 1], t);
    }

    [[nodiscard]] numerics::QuinticCell quintic(std::size_t i) const
    {
        return {t_[i], t_[i + 1], x_[i], x_[i + 1], v_[i], v_[i + 1], acc_[i], acc_[i + 1]};
    }

    void validate()
    {
        require(t_.size() >= 2, ErrorKind::invalid_input, "trajectory needs at least 2 nodes");
        require(x_.size() == t_.size() && v_.size() == t_.size(), ErrorKind::invalid_input,
                "trajectory columns differ in length");
        require(acc_.empty() || acc_.size() == t_.size(), ErrorKind::invalid_input,
                "acceleration column length mismatch");
        for (std::size_t i = 0; i < t_.size(); ++i) {
            require(std::isfinite(t_[i]) && std::isfinite(x_[i]) && std::isfinite(v_[i]),
                    ErrorKind::invalid_input, "non-finite trajectory sample");
            require(std::abs(v_[i]) < 1.0, ErrorKind::domain,
                    "node velocity |v| >= 1 at t = " + std::to_string(t_[i]));
            if (i > 0)
                require(t_[i] > t_[i - 1], ErrorKind::invalid_input,
                        "trajectory grid must be strictly increasing");
        }
        max_speed_ = 0.0;
        for (std::size_t i = 0; i + 1 < t_.size(); ++i) {
            if (has_node_acc_) {
                require(std::isfinite(acc_[i]) && std::isfinite(acc_[i + 1]), ErrorKind::invalid_input,
                        "non-finite node acceleration");
                max_speed_ = std::max(max_speed_, quintic(i).max_abs_slope());
                continue;
            }
            const double h = t_[i + 1] - t_[i];
            const double slope = (x_[i + 1] - x_[i]) / h;
            // v(s) = qa s^2 + qb s + v0 on the cell
            const double qa = -6 * slope + 3 * v_[i] + 3 * v_[i + 1];
            const double qb = 6 * slope - 4 * v_[i] - 2 * v_[i + 1];
            double m = std::max(std::abs(v_[i]), std::abs(v_[i + 1]));
            if (qa != 0.0) {
                const double s = -qb / (2 * qa);
                if (s > 0.0 && s < 1.0) m = std::max(m, std::abs(qa * s * s + qb * s + v_[i]));
            }
            max_speed_ = std::max(max_speed_, m);
        }
        require(max_speed_ < 1.0, ErrorKind::domain,
                "interpolated velocity reaches the speed of light");
    }

    std::vector<double> t_, x_, v_, acc_, breaks_;
    std::vector<double> jerk_, jerk_left_;  // one-sided values differ only at break nodes
    Charge label_ = Charge::a;
    bool has_node_acc_ = false;
    double max_speed_ = 0.0;
};

/// Upper (charge a) and lower (charge b) world-lines.
class TrajectoryPair {
public:
    TrajectoryPair(Trajectory upper, Trajectory lower) : upper_(std::move(upper)), lower_(std::move(lower))
    {
        const double lo = std::max(upper_.front(), lower_.front());
        const double hi = std::min(upper_.back(), lower_.back());
        auto check = [&](std::span<const double> grid) {
            for (double t : grid) {
                if (t < lo || t > hi) continue;
                const double gap = upper_.position(t) - lower_.position(t);
                require(gap > 0.0, ErrorKind::ordering_violation,
                        "charge a not above charge b at t = " + std::to_string(t));
            }
        };
        check(upper_.times());
        check(lower_.times());
    }

    [[nodiscard]] const Trajectory& upper() const noexcept { return upper_; }
    [[nodiscard]] const Trajectory& lower() const noexcept { return lower_; }

    [[nodiscard]] TrajectoryPair reflected_in_time() const
    {
        return {upper_.reflected_in_time(), lower_.reflected_in_time()};
    }

    /// (a, b) -> (-b, -a): mirror space and swap the charges.
    [[nodiscard]] TrajectoryPair mirrored_swapped() const
    {
        return {lower_.mirrored_in_space(Charge::a), upper_.mirrored_in_space(Charge::b)};
    }

private:
    Trajectory upper_;
    Trajectory lower_;
};

// ---------------------------------------------------------------------------
// Model selection
// ---------------------------------------------------------------------------

enum class Family { fst, synge, toy, custom };

inline const char* to_string(Family f)
{
    switch (f) {
    case Family::fst: return "fst";
    case Family::synge: return "synge";
    case Family::toy: return "toy";
    case Family::custom: return "custom";
    }
    return "custom";
}

inline Family parse_family(const std::string& s)
{
    if (s == "fst") return Family::fst;
    if (s == "synge") return Family::synge;
    if (s == "toy") return Family::toy;
    if (s == "custom") return Family::custom;
    throw Error(ErrorKind::invalid_input, "unknown model family '" + s + "'");
}

/// Weights of the advanced/retarded terms, couplings and the velocity-factor
/// switch. Any eps in [0, 1] is accepted; fst, synge and toy are the
/// supported families.
struct ModelSpec {
    double eps_plus = 0.5;
    double eps_minus = 0.5;
    double kappa_a = 1.0;
    double kappa_b = 1.0;
    bool velocity_factors = true;

    static ModelSpec fst(double ka = 1.0, double kb = 1.0) { return {0.5, 0.5, ka, kb, true}; }
    static ModelSpec synge(double ka = 1.0, double kb = 1.0) { return {0.0, 1.0, ka, kb, true}; }
    static ModelSpec toy(double ka = 1.0, double kb = 1.0) { return {0.5, 0.5, ka, kb, false}; }

    static ModelSpec of(Family f, double ka, double kb)
    {
        switch (f) {
        case Family::fst: return fst(ka, kb);
        case Family::synge: return synge(ka, kb);
        case Family::toy: return toy(ka, kb);
        case Family::custom: break;
        }
        throw Error(ErrorKind::invalid_input, "custom family needs explicit weights");
    }

    [[nodiscard]] Family family() const noexcept
    {
        if (eps_plus == 0.5 && eps_minus == 0.5) return velocity_factors ? Family::fst : Family::toy;
        if (eps_plus == 0.0 && eps_minus == 1.0 && velocity_factors) return Family::synge;
        return Family::custom;
    }

    [[nodiscard]] bool time_symmetric() const noexcept { return eps_plus == eps_minus; }

    void validate() const
    {
        require(eps_plus >= 0.0 && eps_plus <= 1.0 && eps_minus >= 0.0 && eps_minus <= 1.0,
                ErrorKind::invalid_input, "eps_plus and eps_minus must lie in [0, 1]");
        require(eps_plus + eps_minus > 0.0, ErrorKind::invalid_input, "eps_plus + eps_minus must be > 0");
        // Zero coupling is admitted as the free-motion limit.
        require(kappa_a >= 0.0 && kappa_b >= 0.0, ErrorKind::invalid_input,
                "couplings kappa_a, kappa_b must be non-negative");
    }
};

// ---------------------------------------------------------------------------
// Norm
// ---------------------------------------------------------------------------

/// max(sup|v|, sup (1+|t-t_ref|)|acc|) sampled `oversampling` times per cell
/// of the grid `t`. Accelerations come from the acceleration channel, not from
/// the curvature of the position interpolant, which loses about log10(x/h^2)
/// digits to cancellation.
template <class Vel, class Acc>
double weighted_sup(std::span<const double> t, Vel&& velocity, Acc&& acceleration, double reference_time,
                    int oversampling = 8)
{
    double sup = 0.0;
    for (std::size_t i = 0; i + 1 < t.size(); ++i) {
        for (int k = 0; k <= oversampling; ++k) {
            if (k == oversampling && i + 2 < t.size()) continue;
            const double s = k == oversampling ? t[i + 1] : t[i] + (t[i + 1] - t[i]) * k / oversampling;
            sup = std::max({sup, std::abs(velocity(s)),
                            (1.0 + std::abs(s - reference_time)) * std::abs(acceleration(s))});
        }
    }
    return sup;
}

inline double trajectory_norm(const Trajectory& tr, double reference_time, int oversampling = 8)
{
    return weighted_sup(
        tr.times(), [&](double s) { return tr.velocity(s); }, [&](double s) { return tr.acceleration_at(s); },
        reference_time, oversampling);
}

/// Discrete version of the weighted trajectory-pair norm.
inline double pair_norm(const TrajectoryPair& pair, double reference_time, int oversampling = 8)
{
    return std::max(trajectory_norm(pair.upper(), reference_time, oversampling),
                    trajectory_norm(pair.lower(), reference_time, oversampling));
}

/// Norm of the difference of two trajectories sharing a grid.
inline double difference_norm(const Trajectory& p, const Trajectory& q, double reference_time,
                              int oversampling = 8)
{
    require(p.size() == q.size() && p.front() == q.front() && p.back() == q.back(), ErrorKind::invalid_input,
            "difference_norm needs a shared grid");
    return weighted_sup(
        p.times(), [&](double s) { return p.velocity(s) - q.velocity(s); },
        [&](double s) { return p.acceleration_at(s) - q.acceleration_at(s); }, reference_time, oversampling);
}

inline double pair_distance(const TrajectoryPair& p, const TrajectoryPair& q, double reference_time,
                            int oversampling = 8)
{
    return std::max(difference_norm(p.upper(), q.upper(), reference_time, oversampling),
                    difference_norm(p.lower(), q.lower(), reference_time, oversampling));
}

} // namespace fstline
