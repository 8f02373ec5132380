// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "fstline/diagnostics.hpp"
#include "fstline/fixedpoint.hpp"
#include "fstline/stepper.hpp"
#include "generators.hpp"
#include "oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>

using namespace fstline;

namespace {

// pinned tolerances
constexpr double delay_tol = 1e-12;
constexpr double delay_runtime_s = 10.0;
constexpr int free_max_iterations = 2;
constexpr double free_residual = 1e-12;
constexpr double solve_residual = 1e-6;
constexpr double cauchy_runtime_s = 120.0;
constexpr double half_line_runtime_s = 300.0;
constexpr double mirror_tol = 1e-8;
constexpr double reversal_factor = 10.0;
constexpr double round_trip_tol = 1e-4;
constexpr double order_ratio = 12.0;
constexpr double decay_fit_tol = 0.2;
constexpr double energy_slope_tol = 5e-4;
constexpr double convergence_ratio = 3.5;

int failures = 0;

void report(int n, bool pass, const std::string& detail)
{
    if (!pass) ++failures;
    std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", n, detail.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Trajectory line(double x0, double w, double from, double to, Charge c)
{
    return Trajectory({from, to}, {x0 + w * from, x0 + w * to}, {w, w}, c, {0.0, 0.0});
}

double max_error(const Trajectory& tr, const Trajectory& oracle, double from, double to)
{
    double e = 0.0;
    for (double t : tr.times())
        if (t >= from && t <= to) e = std::max(e, std::abs(tr.position(t) - oracle.position(t)));
    return e;
}

void delay_solver()
{
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;
    bool sandwich = true;
    // static source at 0 seen from x = 3
    const TrajectoryPair still(line(3.0, 0.0, -50, 50, Charge::a), line(0.0, 0.0, -50, 50, Charge::b));
    for (double t = -10; t <= 10; t += 0.5)
        worst = std::max(worst, std::abs(delay_of(still, t, DelayKind::t2_minus) - (t - 3.0)) / (1 + std::abs(t)));
    // drifting source b(s) = b0 + w s seen from a static x
    for (double w : {-0.7, -0.2, 0.3, 0.8}) {
        const double b0 = -1.0, x = 20.0;
        // long enough for the earliest retarded time, short enough that the lines never meet
        const double from = (-5.0 - x + b0) / (1 - w) - 1.0;
        const TrajectoryPair drift(line(x, 0.0, from, 6, Charge::a), line(b0, w, from, 6, Charge::b));
        for (double t = -5; t <= 5; t += 0.5) {
            const double exact = (t - x + b0) / (1 - w);
            worst = std::max(worst, std::abs(delay_of(drift, t, DelayKind::t2_minus) - exact) / (1 + std::abs(t)));
        }
    }
    for (int k = 0; k < 1000; ++k) {
        const auto rp = gen::random_pair(-30, 30, 121);
        const auto& p = rp.pair;
        const double t = gen::uniform(-5, 5);
        const double xa = p.upper().position(t), xb = p.lower().position(t), gap = xa - xb;
        for (auto kind : {DelayKind::t2_minus, DelayKind::t2_plus, DelayKind::t1_minus, DelayKind::t1_plus}) {
            const bool on_b = kind == DelayKind::t2_minus || kind == DelayKind::t2_plus;
            const bool adv = kind == DelayKind::t2_plus || kind == DelayKind::t1_plus;
            const Trajectory& src = on_b ? p.lower() : p.upper();
            const double x = on_b ? xa : xb;
            const double s = delay_of(p, t, kind);
            worst = std::max(worst, std::abs(s - oracle::delay_by_bisection(src, x, t, adv)) / (1 + std::abs(t)));
            const double d = std::abs(x - src.position(s));
            sandwich = sandwich && d >= 0.5 * gap * (1 - 1e-12) && d <= gap / (1 - src.max_speed()) * (1 + 1e-12) &&
                       (adv ? s > t : s < t);
        }
    }
    const double secs = seconds_since(t0);
    report(1, worst < delay_tol && sandwich && secs < delay_runtime_s,
           fmt("max relative delay error %.3g (< %g), sandwich %s, %.2f s (< %g s)", worst, delay_tol,
               sandwich ? "holds" : "violated", secs, delay_runtime_s));
}

void zero_coupling()
{
    bool ok = true;
    std::string detail;
    SolverConfig cfg;
    cfg.t_min = -50.0;
    cfg.t_max = 50.0;
    cfg.h = 0.01;
    for (const auto family : {Family::fst, Family::synge, Family::toy}) {
        const auto sol = solve(Cauchy{1.0, 0.2, -1.0, 0.2}, ModelSpec::of(family, 0.0, 0.0), cfg);
        const auto& r = sol.report;
        ok = ok && r.converged && r.iterations <= free_max_iterations && r.residual.value < free_residual;
        detail += fmt("%s: %d it, residual %.3g; ", to_string(family), r.iterations, r.residual.value);
    }
    report(2, ok, detail + fmt("limits %d it, %g", free_max_iterations, free_residual));
}

struct CauchyRun {
    Solution sol;
    double seconds;
};

CauchyRun synge_cauchy(double h)
{
    SolverConfig cfg;
    cfg.t_min = -50.0;
    cfg.t_max = 50.0;
    cfg.h = h;
    const auto t0 = std::chrono::steady_clock::now();
    auto sol = solve(Cauchy{1.0, 0.0, -1.0, 0.0}, ModelSpec::synge(1.0, 1.0), cfg);
    return {std::move(sol), seconds_since(t0)};
}

void cauchy_solve(const CauchyRun& run)
{
    const auto& r = run.sol.report;
    const Cauchy data{1.0, 0.0, -1.0, 0.0};
    const auto ref = build_reference(data, SolverConfig{}.outgoing_speed);
    const double cap =
        velocity_bound_constant(data, ModelSpec::synge(1.0, 1.0), std::max(ref.x0.max_speed(), ref.y0.max_speed()));
    std::string checks;
    for (const auto& c : r.bounds.checks)
        checks += fmt("%s %.3g/%.3g%s; ", c.name.c_str(), c.observed, c.limit, c.pass ? "" : " FAILED");
    report(3,
           r.converged && r.residual.value < solve_residual && r.bounds.pass() && r.bounds.bounds.v_cap == cap &&
               run.seconds < cauchy_runtime_s,
           fmt("converged %s in %d it, residual %.3g (< %g), v_cap %.6f, bounds (1%% slack): %s%.1f s (< %g s)",
               r.converged ? "yes" : "no", r.iterations, r.residual.value, solve_residual, cap, checks.c_str(),
               run.seconds, cauchy_runtime_s));
}

struct HalfLineRun {
    FstHalfLine data;
    Solution sol;
    double seconds;
};

constexpr double half_line_kappa = 0.25;

HalfLineRun fst_half_line()
{
    const double h = 0.01;
    auto data = uniform_strip_data(2.0, 0.0, -2.0, 0.0, h);
    SolverConfig cfg;
    cfg.t_max = 120.0;
    cfg.h = h;
    const auto t0 = std::chrono::steady_clock::now();
    auto sol = solve(data, ModelSpec::fst(half_line_kappa, half_line_kappa), cfg);
    return {std::move(data), std::move(sol), seconds_since(t0)};
}

void half_line_solve(const HalfLineRun& run)
{
    const auto& r = run.sol.report;
    const auto& strip = run.data.b_strip;
    const auto& b = run.sol.pair.lower();
    bool exact = b.size() >= strip.size();
    for (std::size_t i = 0; exact && i < strip.size(); ++i)
        exact = b.times()[i] == strip.times()[i] && b.positions()[i] == strip.positions()[i] &&
                b.velocities()[i] == strip.velocities()[i];
    report(4, r.converged && r.residual.value < solve_residual && exact && run.seconds < half_line_runtime_s,
           fmt("converged %s in %d it, residual %.3g (< %g) on a [%g, %g], b [%g, %g], strip node-exact %s, "
               "%.1f s (< %g s)",
               r.converged ? "yes" : "no", r.iterations, r.residual.value, solve_residual, r.window.a_from,
               r.window.a_to, r.window.b_from, r.window.b_to, exact ? "yes" : "no", run.seconds,
               half_line_runtime_s));
}

void toy_mirror()
{
    SolverConfig cfg;
    cfg.t_min = -50.0;
    cfg.t_max = 50.0;
    cfg.h = 0.02;
    const auto sol = solve(Cauchy{1.0, 0.2, -1.0, -0.2}, ModelSpec::toy(1.0, 1.0), cfg);
    const auto& a = sol.pair.upper();
    const auto& b = sol.pair.lower();
    double worst = 0.0;
    for (double t = a.front(); t <= a.back(); t += 0.005) worst = std::max(worst, std::abs(a.position(t) + b.position(t)));
    report(5, sol.report.converged && worst < mirror_tol,
           fmt("converged %s, max|a+b| %.3g (< %g)", sol.report.converged ? "yes" : "no", worst, mirror_tol));
}

void time_reversal(const HalfLineRun& run)
{
    const auto model = ModelSpec::fst(half_line_kappa, half_line_kappa);
    const auto& w = run.sol.report.window;
    const int stencil = SolverConfig{}.residual_stencil;
    const auto forward = residual(run.sol.pair, model, w, {}, stencil);
    const auto backward = residual(run.sol.pair.reflected_in_time(), model, w.reflected(), {}, stencil);
    report(6, backward.value <= reversal_factor * forward.value && backward.nodes == forward.nodes,
           fmt("reflected residual %.3g vs original %.3g (factor <= %g), %zu nodes", backward.value, forward.value,
               reversal_factor, backward.nodes));
}

void round_trip(const HalfLineRun& run)
{
    const auto& pair = run.sol.pair;
    // strips past the first regularity breakpoint
    const double t1p = run.sol.report.window.breaks.at(1) + 0.5;
    const double t2p = delay_of(pair, t1p, DelayKind::t2_plus);
    const double t2m = delay_of(pair, t1p, DelayKind::t2_minus);
    const double t1m = delay_of(pair, t2m, DelayKind::t1_minus);
    const StripPair strips{pair.upper().cut(t1m, t1p), pair.lower().cut(t2m, t2p)};
    const double k = half_line_kappa;

    double dev = 0.0;
    std::size_t legs = 0;
    try {
        const auto r = reconstruct(strips, k, k, 1e9, TimeDirection::future, 1e-3, 3);
        legs = r.legs.size();
        dev = std::max(max_error(r.pair.upper(), pair.upper(), t1p, pair.upper().back()),
                       max_error(r.pair.lower(), pair.lower(), t2p, pair.lower().back()));
    } catch (const Error& e) {
        report(7, false, std::string("reconstruction failed: ") + e.what());
        return;
    }
    const double coarse = max_error(extend_a(strips, k, 0.1), pair.upper(), t1p, pair.upper().back());
    const double fine = max_error(extend_a(strips, k, 0.05), pair.upper(), t1p, pair.upper().back());
    const double ratio = coarse / fine;
    report(7, legs == 3 && dev < round_trip_tol && ratio >= order_ratio,
           fmt("%zu legs at h = 1e-3, max deviation %.3g (< %g); first-leg error %.3g at h = 0.1, %.3g at h = 0.05, "
               "ratio %.2f (>= %g)",
               legs, dev, round_trip_tol, coarse, fine, ratio, order_ratio));
}

void decay_shape(const CauchyRun& run)
{
    const auto& w = run.sol.report.window;
    // outer half of the window on the receding side
    const auto fa = fit_acceleration_decay(run.sol.pair.upper(), 0.5 * w.a_to, w.a_to, 0.05);
    const auto fb = fit_acceleration_decay(run.sol.pair.lower(), 0.5 * w.b_to, w.b_to, 0.05);
    const double fit = std::max(fa.relative_residual, fb.relative_residual);
    const double sup =
        std::max(fit_acceleration_decay(run.sol.pair.upper(), w.a_from, w.a_to, 0.05).sup_weighted,
                 fit_acceleration_decay(run.sol.pair.lower(), w.b_from, w.b_to, 0.05).sup_weighted);
    report(8, fit < decay_fit_tol && std::isfinite(sup),
           fmt("C/(1+|t|) fit on [%g, %g]: C = %.4g, relative residual %.3g (< %g); sup (1+|t|)|acc| over the window = %.4g", 0.5 * w.a_to,
               w.a_to, fa.coefficient, fit, decay_fit_tol, sup));
}

void energy_direction(const CauchyRun& run)
{
    const auto& w = run.sol.report.window;
    const auto series = energy_series(run.sol.pair, ModelSpec::synge(1.0, 1.0), 0.0, w.a_from, w.a_to, 0.05);
    double worst = -1e300;
    std::size_t used = 0;
    for (std::size_t i = 1; i < series.size(); ++i) {
        // b's delayed history is non-increasing there
        if (series[i - 1].t2_minus < 0.0) continue;
        worst = std::max(worst, (series[i].combined - series[i - 1].combined) / (series[i].t - series[i - 1].t));
        ++used;
    }
    report(9, used > 0 && worst <= energy_slope_tol,
           fmt("max discrete dE/dt %.3g (<= %g) over %zu samples", worst, energy_slope_tol, used));
}

void convergence_order(const CauchyRun& fine)
{
    const auto coarse = synge_cauchy(0.02);
    const double ratio = coarse.sol.report.residual.value / fine.sol.report.residual.value;
    report(10, coarse.sol.report.converged && ratio >= convergence_ratio,
           fmt("residual %.3g at h = 0.02, %.3g at h = 0.01, ratio %.2f (>= %g)", coarse.sol.report.residual.value,
               fine.sol.report.residual.value, ratio, convergence_ratio));
}

} // namespace

int main()
{
    delay_solver();
    zero_coupling();
    const auto cauchy = synge_cauchy(0.01);
    cauchy_solve(cauchy);
    const auto half_line = fst_half_line();
    half_line_solve(half_line);
    toy_mirror();
    time_reversal(half_line);
    round_trip(half_line);
    decay_shape(cauchy);
    energy_direction(cauchy);
    convergence_order(cauchy);
    std::printf("%d of 10 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
