#pragma once

#include "fstline/assessment.hpp"
#include "fstline/diagnostics.hpp"
#include "fstline/errors.hpp"
#include "fstline/forces.hpp"
#include "fstline/initial_data.hpp"
#include "fstline/kinematics.hpp"
#include "fstline/lightcone.hpp"
#include "fstline/reference.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

namespace fstline {

enum class Quadrature { trapezoid, simpson };

struct SolverConfig {
    double t_min = -50.0;  // ignored in FST mode (the solution starts at 0)
    double t_max = 50.0;
    double h = 0.01;
    double damping = 0.5;
    std::vector<double> lambda_schedule{0.25, 0.5, 0.75, 1.0};
    int max_iterations = 2000;  // total over all stages
    double tolerance = 1e-10;
    double boundary_buffer = 0.0;  // extra width excluded at open window ends
    double outgoing_speed = 0.5;
    Quadrature quadrature = Quadrature::simpson;
    int residual_stencil = 5;
    int oversampling = 8;
    int threads = 1;
    bool align_ladder = true;  // FST: finish on a grid with nodes at the regularity breakpoints
    DelayOptions delay{};

    void validate() const
    {
        require(h > 0.0, ErrorKind::invalid_input, "grid step h must be > 0");
        require(tolerance > 0.0, ErrorKind::invalid_input, "tolerance must be > 0");
        require(damping > 0.0 && damping <= 1.0, ErrorKind::invalid_input, "damping must lie in (0, 1]");
        require(!lambda_schedule.empty() && lambda_schedule.back() == 1.0, ErrorKind::invalid_input,
                "lambda schedule must end at 1");
        for (std::size_t i = 0; i < lambda_schedule.size(); ++i) {
            require(lambda_schedule[i] >= 0.0 && lambda_schedule[i] <= 1.0, ErrorKind::invalid_input,
                    "lambda values must lie in [0, 1]");
            require(i == 0 || lambda_schedule[i] >= lambda_schedule[i - 1], ErrorKind::invalid_input,
                    "lambda schedule must be nondecreasing");
        }
        require(max_iterations > 0, ErrorKind::invalid_input, "max_iterations must be > 0");
        require(oversampling > 0, ErrorKind::invalid_input, "oversampling must be > 0");
        require(boundary_buffer >= 0.0, ErrorKind::invalid_input, "boundary_buffer must be >= 0");
        require(residual_stencil >= 3 && residual_stencil % 2 == 1, ErrorKind::invalid_input,
                "residual_stencil must be odd and >= 3");
    }
};

struct ResidualReport {
    double value = 0.0;
    double time = 0.0;
    Charge charge = Charge::a;
    std::size_t nodes = 0;
};

struct StageReport {
    double lambda = 0.0;
    int iterations = 0;
    double increment = 0.0;
};

struct SolveReport {
    bool converged = false;
    int iterations = 0;
    double increment = 0.0;
    ResidualReport residual;
    AssessmentWindow window;
    BoundsReport bounds;
    std::vector<StageReport> stages;
    std::string message;
};

struct Solution {
    TrajectoryPair pair;
    SolveReport report;
};

/// Raised when an iterate loses ordering or subluminality; carries the
/// offending iterate.
class AdmissibilityError : public Error {
public:
    AdmissibilityError(const std::string& what, Trajectory a, Trajectory b, int iteration, double lambda)
        : Error(ErrorKind::ordering_violation, what), a_(std::move(a)), b_(std::move(b)), iteration_(iteration),
          lambda_(lambda)
    {
    }

    [[nodiscard]] const Trajectory& iterate_a() const noexcept { return a_; }
    [[nodiscard]] const Trajectory& iterate_b() const noexcept { return b_; }
    [[nodiscard]] int iteration() const noexcept { return iteration_; }
    [[nodiscard]] double lambda() const noexcept { return lambda_; }

private:
    Trajectory a_, b_;
    int iteration_;
    double lambda_;
};

// ---------------------------------------------------------------------------
// Residual
// ---------------------------------------------------------------------------

/// Max over interior nodes of |d/dt momentum(v) - force|, the derivative
/// being a centred difference of the node momenta over `stencil` nodes.
inline ResidualReport residual(const TrajectoryPair& pair, const ModelSpec& model, const AssessmentWindow& window,
                               const DelayOptions& opt = {}, int stencil = 3)
{
    require(stencil >= 3 && stencil % 2 == 1, ErrorKind::invalid_input, "residual stencil must be odd and >= 3");
    const auto half = static_cast<std::size_t>(stencil / 2);
    ResidualReport rep;
    for (const Charge c : {Charge::a, Charge::b}) {
        const Trajectory& tr = c == Charge::a ? pair.upper() : pair.lower();
        const auto t = tr.times();
        const auto v = tr.velocities();
        const double lo = window.from(c), hi = window.to(c);
        const double eps = 1e-9 * (1.0 + std::max(std::abs(lo), std::abs(hi)));
        for (std::size_t i = half; i + half < t.size(); ++i) {
            if (t[i - half] < lo - eps || t[i + half] > hi + eps) continue;
            if (window.straddles(t[i - half], t[i + half])) continue;
            const auto w = numerics::derivative_weights(t.subspan(i - half, 2 * half + 1), t[i], 1);
            double dp = 0.0;
            for (std::size_t k = 0; k < w.size(); ++k) dp += w[k] * momentum(v[i - half + k]);
            const double defect = std::abs(dp - force_on(c, pair, model, t[i], opt));
            ++rep.nodes;
            if (defect > rep.value || rep.nodes == 1) {
                rep.value = defect;
                rep.time = t[i];
                rep.charge = c;
            }
        }
    }
    return rep;
}

namespace detail {

/// Runs f(i) for i in [0, n) on up to `threads` workers.
template <class F>
void parallel_for(std::size_t n, int threads, F&& f)
{
    const auto width = static_cast<std::size_t>(std::max(1, threads));
    if (width == 1 || n < 2 * width) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::exception_ptr failure;
    std::mutex guard;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < width; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < n; i += width) f(i);
            } catch (...) {
                std::lock_guard lock(guard);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

/// Weights w_j with sum_j w_j f(nodes[j]) = integral over [lo, hi] of the
/// interpolating polynomial through the nodes.
inline std::vector<double> interval_weights(std::span<const double> nodes, double lo, double hi)
{
    const std::size_t n = nodes.size();
    const double c = 0.5 * (lo + hi), s = 0.5 * (hi - lo);
    // Vandermonde system in the scaled variable (t - c)/s.
    std::vector<double> m(n * n), rhs(n);
    for (std::size_t k = 0; k < n; ++k) {
        rhs[k] = (k % 2 == 0) ? 2.0 * s / static_cast<double>(k + 1) : 0.0;
        for (std::size_t j = 0; j < n; ++j) m[k * n + j] = std::pow((nodes[j] - c) / s, static_cast<double>(k));
    }
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(m[r * n + col]) > std::abs(m[piv * n + col])) piv = r;
        for (std::size_t j = 0; j < n; ++j) std::swap(m[col * n + j], m[piv * n + j]);
        std::swap(rhs[col], rhs[piv]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = m[r * n + col] / m[col * n + col];
            for (std::size_t j = col; j < n; ++j) m[r * n + j] -= f * m[col * n + j];
            rhs[r] -= f * rhs[col];
        }
    }
    std::vector<double> w(n);
    for (std::size_t r = n; r-- > 0;) {
        double acc = rhs[r];
        for (std::size_t j = r + 1; j < n; ++j) acc -= m[r * n + j] * w[j];
        w[r] = acc / m[r * n + r];
    }
    return w;
}

/// Integral of f over [t[i], t[i+1]]; the interpolation stencil stays on
/// the nodes [lo, hi].
inline double cell_integral(std::span<const double> t, std::span<const double> f, std::size_t i,
                            std::size_t lo, std::size_t hi, Quadrature q)
{
    const double h = t[i + 1] - t[i];
    if (q == Quadrature::trapezoid || hi < lo + 3) return 0.5 * h * (f[i] + f[i + 1]);
    const std::size_t start = std::clamp(i > lo ? i - 1 : lo, lo, hi - 3);
    const auto w = interval_weights(t.subspan(start, 4), t[i], t[i + 1]);
    double acc = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) acc += w[j] * f[start + j];
    return acc;
}

/// Discretisation of one charge: grid, integration anchor and the reference
/// trajectory sampled at the nodes.
struct ChargeGrid {
    Charge charge = Charge::a;
    std::vector<double> t;
    std::size_t anchor = 0;  // integration starts here; earlier nodes are frozen in FST mode
    bool frozen_prefix = false;
    double anchor_velocity = 0.0;
    double anchor_position = 0.0;
    std::vector<double> v0, a0;  // reference samples
    std::vector<double> frozen_x, frozen_v, frozen_acc;
    std::vector<double> knots;  // interior times of reduced smoothness; they are grid nodes
};

inline std::vector<double> uniform_nodes(double from, double to, double h)
{
    const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround((to - from) / h)));
    std::vector<double> t(n + 1);
    for (std::size_t i = 0; i <= n; ++i)
        t[i] = i == n ? to : from + (to - from) * static_cast<double>(i) / static_cast<double>(n);
    return t;
}

/// Nodes on [from, to] with step close to h, including every knot inside.
inline std::vector<double> knotted_nodes(double from, double to, double h, std::vector<double> knots)
{
    std::erase_if(knots, [&](double k) { return !(k > from + 0.5 * h && k < to - 0.5 * h); });
    std::sort(knots.begin(), knots.end());
    knots.push_back(to);
    std::vector<double> t{from};
    double start = from;
    for (const double k : knots) {
        if (k - start < 0.5 * h) continue;
        const auto piece = uniform_nodes(start, k, h);
        t.insert(t.end(), piece.begin() + 1, piece.end());
        start = k;
    }
    if (t.back() != to) t.back() = to;
    return t;
}

inline void sample_reference(ChargeGrid& g, const ReferenceTrajectory& ref)
{
    g.v0.resize(g.t.size());
    g.a0.resize(g.t.size());
    for (std::size_t i = 0; i < g.t.size(); ++i) {
        const auto s = ref.eval(g.t[i]);
        g.v0[i] = s.velocity;
        g.a0[i] = s.acceleration;
    }
}

} // namespace detail

/// Discretised homotopy map for fixed data, reference pair and grid.
class HomotopyMap {
public:
    /// `a_knots`/`b_knots` (FST only) become grid nodes that quadrature
    /// stencils do not cross.
    HomotopyMap(const InitialData& data, const ModelSpec& model, const ReferencePair& ref, const SolverConfig& cfg,
                std::vector<double> a_knots = {}, std::vector<double> b_knots = {})
        : model_(model), cfg_(cfg), ref_(ref)
    {
        model_.validate();
        cfg_.validate();
        if (const auto* c = std::get_if<Cauchy>(&data)) {
            validate(*c);
            require(cfg_.t_min < 0.0 && cfg_.t_max > 0.0, ErrorKind::invalid_input,
                    "Cauchy window must contain t = 0 in its interior");
            cauchy_ = true;
            a_ = two_sided_grid(Charge::a, c->a0, c->a0_dot, ref.x0);
            b_ = two_sided_grid(Charge::b, c->b0, c->b0_dot, ref.y0);
        } else if (const auto* f = std::get_if<FstHalfLine>(&data)) {
            validate(*f);
            require(cfg_.t_max > f->t_plus() + 2.0 * cfg_.h, ErrorKind::invalid_input,
                    "t_max must lie beyond the strip end T+");
            t_plus_ = f->t_plus();
            a_.charge = Charge::a;
            a_.t = detail::knotted_nodes(0.0, cfg_.t_max, cfg_.h, a_knots);
            a_.knots = std::move(a_knots);
            a_.anchor = 0;
            a_.anchor_position = f->a0;
            a_.anchor_velocity = f->a0_dot;
            detail::sample_reference(a_, ref.x0);

            b_.charge = Charge::b;
            const auto st = f->b_strip.times();
            const auto tail = detail::knotted_nodes(t_plus_, cfg_.t_max, cfg_.h, b_knots);
            b_.knots = std::move(b_knots);
            b_.t.assign(st.begin(), st.end());
            b_.t.insert(b_.t.end(), tail.begin() + 1, tail.end());
            b_.anchor = st.size() - 1;
            b_.frozen_prefix = true;
            b_.anchor_position = f->b_strip.positions().back();
            b_.anchor_velocity = f->b_strip.velocities().back();
            const auto sx = f->b_strip.positions(), sv = f->b_strip.velocities();
            const auto sa = f->b_strip.node_accelerations();
            b_.frozen_x.assign(sx.begin(), sx.end());
            b_.frozen_v.assign(sv.begin(), sv.end());
            b_.frozen_acc.assign(sa.begin(), sa.end());
            detail::sample_reference(b_, ref.y0);
        } else {
            throw Error(ErrorKind::invalid_input, "the homotopy map needs FST or Cauchy data");
        }
    }

    [[nodiscard]] bool cauchy_mode() const noexcept { return cauchy_; }
    [[nodiscard]] double t_plus() const noexcept { return t_plus_; }
    [[nodiscard]] const detail::ChargeGrid& grid(Charge c) const { return c == Charge::a ? a_ : b_; }

    /// The reference pair sampled on the grids (the image at lambda = 0).
    [[nodiscard]] TrajectoryPair reference_pair() const { return apply(0.0, std::nullopt); }

    [[nodiscard]] TrajectoryPair operator()(double lambda, const TrajectoryPair& input) const
    {
        return apply(lambda, input);
    }

private:
    struct NodeData {
        std::vector<double> x, v, acc;
    };

    detail::ChargeGrid two_sided_grid(Charge c, double pos, double vel, const ReferenceTrajectory& ref) const
    {
        detail::ChargeGrid g;
        g.charge = c;
        auto left = detail::uniform_nodes(cfg_.t_min, 0.0, cfg_.h);
        const auto right = detail::uniform_nodes(0.0, cfg_.t_max, cfg_.h);
        g.anchor = left.size() - 1;
        left.insert(left.end(), right.begin() + 1, right.end());
        g.t = std::move(left);
        g.anchor_position = pos;
        g.anchor_velocity = vel;
        detail::sample_reference(g, ref);
        return g;
    }

    NodeData integrate(const detail::ChargeGrid& g, double lambda, const std::vector<double>& force) const
    {
        const std::size_t n = g.t.size();
        NodeData out{std::vector<double>(n), std::vector<double>(n), std::vector<double>(n)};
        // Cumulative force integral from the anchor.
        std::vector<double> impulse(n, 0.0);
        const std::size_t first = g.frozen_prefix ? g.anchor : 0;
        std::vector<std::size_t> cuts{first, n - 1};
        if (g.frozen_prefix) cuts.push_back(g.anchor);
        for (const double k : g.knots) {
            const auto it = std::lower_bound(g.t.begin(), g.t.end(), k);
            if (it != g.t.end() && *it == k) cuts.push_back(static_cast<std::size_t>(it - g.t.begin()));
        }
        std::sort(cuts.begin(), cuts.end());
        auto integral = [&](std::size_t i) {
            const auto hi = std::upper_bound(cuts.begin(), cuts.end(), i);
            return detail::cell_integral(g.t, force, i, *(hi - 1), *hi, cfg_.quadrature);
        };
        for (std::size_t i = g.anchor + 1; i < n; ++i) impulse[i] = impulse[i - 1] + integral(i - 1);
        for (std::size_t i = g.anchor; i-- > first;) impulse[i] = impulse[i + 1] - integral(i);

        const double p_data = momentum(g.anchor_velocity);
        for (std::size_t i = first; i < n; ++i) {
            const double p = (1.0 - lambda) * momentum(g.v0[i]) + lambda * (p_data + impulse[i]);
            const double g0 = lorentz_gamma(g.v0[i]);
            const double dp = (1.0 - lambda) * g.a0[i] * g0 * g0 * g0 + lambda * force[i];
            const double root = std::sqrt(1.0 + p * p);
            out.v[i] = i == g.anchor ? g.anchor_velocity : p / root;
            out.acc[i] = dp / (root * root * root);
        }
        // Positions from the anchor by the end-corrected trapezoid rule (the
        // node slopes of the velocity are known exactly).
        auto step = [&](std::size_t i, std::size_t j) {
            const double h = g.t[j] - g.t[i];
            return 0.5 * h * (out.v[i] + out.v[j]) + h * h / 12.0 * (out.acc[i] - out.acc[j]);
        };
        out.x[g.anchor] = g.anchor_position;
        for (std::size_t i = g.anchor + 1; i < n; ++i) out.x[i] = out.x[i - 1] + step(i - 1, i);
        for (std::size_t i = g.anchor; i-- > first;) out.x[i] = out.x[i + 1] - step(i, i + 1);
        if (g.frozen_prefix) {
            for (std::size_t i = 0; i < g.anchor; ++i) {
                out.x[i] = g.frozen_x[i];
                out.v[i] = g.frozen_v[i];
                out.acc[i] = g.frozen_acc[i];
            }
        }
        return out;
    }

    std::vector<double> forces(const detail::ChargeGrid& g, const std::optional<TrajectoryPair>& input) const
    {
        std::vector<double> f(g.t.size(), 0.0);
        if (!input || (g.charge == Charge::a ? model_.kappa_a : model_.kappa_b) == 0.0) return f;
        const std::size_t first = g.frozen_prefix ? g.anchor : 0;
        detail::parallel_for(g.t.size() - first, cfg_.threads, [&](std::size_t k) {
            f[first + k] = force_on(g.charge, *input, model_, g.t[first + k], cfg_.delay);
        });
        return f;
    }

    TrajectoryPair apply(double lambda, const std::optional<TrajectoryPair>& input) const
    {
        auto na = integrate(a_, lambda, forces(a_, input));
        auto nb = integrate(b_, lambda, forces(b_, input));
        Trajectory ta(a_.t, std::move(na.x), std::move(na.v), Charge::a, std::move(na.acc));
        Trajectory tb(b_.t, std::move(nb.x), std::move(nb.v), Charge::b, std::move(nb.acc));
        if (!a_.knots.empty()) ta = ta.with_breaks(a_.knots);
        if (!b_.knots.empty() || !cauchy_) tb = tb.with_breaks(with_anchor(b_.knots));
        return TrajectoryPair(std::move(ta), std::move(tb));
    }

    [[nodiscard]] std::vector<double> with_anchor(std::vector<double> knots) const
    {
        knots.push_back(t_plus_);
        return knots;
    }

    ModelSpec model_;
    SolverConfig cfg_;
    ReferencePair ref_;
    detail::ChargeGrid a_, b_;
    bool cauchy_ = false;
    double t_plus_ = 0.0;
};

/// One application of the homotopy map at parameter lambda.
inline TrajectoryPair apply_H(double lambda, const TrajectoryPair& pair, const ModelSpec& model,
                              const InitialData& data, const ReferencePair& ref, const SolverConfig& config)
{
    return HomotopyMap(data, model, ref, config)(lambda, pair);
}

/// Assessment window of a solution: nodes whose delayed arguments all land
/// on the other charge's grid (beyond it only the free extension is known),
/// shrunk further by `buffer` at the open ends. In FST mode the evaluation
/// starts at 0 for a and at `t_plus` for b.
inline AssessmentWindow solution_window(const TrajectoryPair& pair, const ModelSpec& model, bool fst_mode,
                                        double t_plus, double buffer, const DelayOptions& opt = {})
{
    AssessmentWindow w;
    for (const Charge c : {Charge::a, Charge::b}) {
        const Trajectory& tr = c == Charge::a ? pair.upper() : pair.lower();
        const Trajectory& other = c == Charge::a ? pair.lower() : pair.upper();
        const double start = !fst_mode ? tr.front() : (c == Charge::a ? 0.0 : t_plus);
        const auto kinds = c == Charge::a ? std::pair{DelayKind::t2_minus, DelayKind::t2_plus}
                                          : std::pair{DelayKind::t1_minus, DelayKind::t1_plus};
        auto clean = [&](double t) {
            if (model.eps_minus != 0.0 && delay_of(pair, t, kinds.first, opt) < other.front()) return false;
            if (model.eps_plus != 0.0 && delay_of(pair, t, kinds.second, opt) > other.back()) return false;
            return true;
        };
        double from = tr.back(), to = tr.front();
        for (const double t : tr.times()) {
            if (t < start || !clean(t)) continue;
            from = std::min(from, t);
            to = std::max(to, t);
        }
        if (!fst_mode) from = std::max(from, tr.front() + buffer);
        to = std::min(to, tr.back() - buffer);
        (c == Charge::a ? w.a_from : w.b_from) = from;
        (c == Charge::a ? w.a_to : w.b_to) = to;
    }
    return w;
}

namespace detail {

inline Trajectory blend(const Trajectory& p, const Trajectory& q, double w)
{
    const std::size_t n = p.size();
    std::vector<double> x(n), v(n), acc(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = (1.0 - w) * p.positions()[i] + w * q.positions()[i];
        v[i] = (1.0 - w) * p.velocities()[i] + w * q.velocities()[i];
        acc[i] = (1.0 - w) * p.node_accelerations()[i] + w * q.node_accelerations()[i];
    }
    return Trajectory(std::vector<double>(p.times().begin(), p.times().end()), std::move(x), std::move(v),
                      p.label(), std::move(acc))
        .with_breaks({q.breaks().begin(), q.breaks().end()});
}

/// Node values of `tr` on a new grid (acceleration from its smooth channel).
inline Trajectory resample(const Trajectory& tr, std::span<const double> grid)
{
    std::vector<double> x(grid.size()), v(grid.size()), acc(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto s = tr.eval(grid[i]);
        x[i] = s.position;
        v[i] = s.velocity;
        acc[i] = tr.acceleration_at(grid[i]);
    }
    return Trajectory(std::vector<double>(grid.begin(), grid.end()), std::move(x), std::move(v), tr.label(),
                      std::move(acc));
}

} // namespace detail

/// Damped fixed-point iteration with lambda continuation, warm-started from
/// the reference pair.
inline Solution solve(const InitialData& data, const ModelSpec& model, const SolverConfig& config,
                      const std::function<void(const StageReport&)>& progress = {})
{
    config.validate();
    model.validate();
    const ReferencePair ref = build_reference(data, config.outgoing_speed);
    HomotopyMap map(data, model, ref, config);

    SolveReport rep;
    TrajectoryPair pair = map.reference_pair();
    int used = 0;
    double damping = config.damping;
    // Damped iteration at one lambda; false when the budget runs out.
    auto run_stage = [&](const HomotopyMap& m, double lambda) {
        StageReport stage{lambda, 0, 0.0};
        bool done = false;
        while (used < config.max_iterations) {
            ++used;
            ++stage.iterations;
            TrajectoryPair image = m(lambda, pair);
            stage.increment = pair_distance(image, pair, 0.0, config.oversampling);
            if (progress) progress(stage);
            if (stage.increment < config.tolerance) {
                done = true;
                break;
            }
            Trajectory a = detail::blend(pair.upper(), image.upper(), damping);
            Trajectory b = detail::blend(pair.lower(), image.lower(), damping);
            try {
                pair = TrajectoryPair(a, b);
            } catch (const Error& e) {
                throw AdmissibilityError("iterate lost admissibility at lambda = " + std::to_string(lambda) +
                                             ", iteration " + std::to_string(used) + ": " + e.what(),
                                         std::move(a), std::move(b), used, lambda);
            }
        }
        rep.stages.push_back(stage);
        rep.increment = stage.increment;
        if (!done) rep.message = "iteration budget exhausted at lambda = " + std::to_string(lambda);
        return done;
    };

    // Without coupling the map ignores its input: one undamped step at
    // lambda = 1 lands on the fixed point.
    const bool free = model.kappa_a == 0.0 && model.kappa_b == 0.0;
    bool ok = true;
    if (free) {
        damping = 1.0;
        ok = run_stage(map, 1.0);
    } else {
        for (const double lambda : config.lambda_schedule) {
            if (!(ok = run_stage(map, lambda))) break;
        }
    }
    if (ok && !free && !map.cauchy_mode() && config.align_ladder) {
        // Finish on a grid with nodes at the breakpoints, warm-started from
        // the converged uniform-grid pair.
        const auto ladder = breakpoint_ladder(pair, map.t_plus(), 64, config.delay);
        map = HomotopyMap(data, model, ref, config, ladder.sigma, ladder.tau);
        std::vector<double> b_breaks = ladder.tau;
        b_breaks.push_back(map.t_plus());
        pair = TrajectoryPair(detail::resample(pair.upper(), map.grid(Charge::a).t).with_breaks(ladder.sigma),
                              detail::resample(pair.lower(), map.grid(Charge::b).t).with_breaks(b_breaks));
        ok = run_stage(map, 1.0);
    }
    rep.converged = ok;
    rep.iterations = used;
    if (ok) rep.message = "converged";

    rep.window = solution_window(pair, model, !map.cauchy_mode(), map.t_plus(), config.boundary_buffer,
                                 config.delay);
    if (!map.cauchy_mode()) {
        const auto ladder = breakpoint_ladder(pair, map.t_plus(), 64, config.delay);
        rep.window.breaks.push_back(map.t_plus());
        rep.window.breaks.insert(rep.window.breaks.end(), ladder.sigma.begin(), ladder.sigma.end());
        rep.window.breaks.insert(rep.window.breaks.end(), ladder.tau.begin(), ladder.tau.end());
        if (!config.align_ladder) {
            std::vector<double> b_breaks = ladder.tau;
            b_breaks.push_back(map.t_plus());
            pair = TrajectoryPair(pair.upper().with_breaks(ladder.sigma), pair.lower().with_breaks(b_breaks));
        }
    }
    rep.residual = residual(pair, model, rep.window, config.delay, config.residual_stencil);
    const double ref_speed = std::max(ref.x0.max_speed(), ref.y0.max_speed());
    const auto bounds = estimate_bounds(pair, data, model, rep.window, ref_speed, map.cauchy_mode());
    rep.bounds = check_bounds(pair, bounds, rep.window, {0.01, 0.0, map.cauchy_mode()});
    return {std::move(pair), std::move(rep)};
}

} // namespace fstline
