#include "commands.hpp"

#include "config.hpp"

#include "fstline/diagnostics.hpp"
#include "fstline/fixedpoint.hpp"
#include "fstline/lightcone.hpp"
#include "fstline/stepper.hpp"
#include "fstline/trajectory_io.hpp"

#include <spdlog/spdlog.h>

#include <atomic>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace fstline::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path make_run_dir(const fs::path& out, const std::string& tag)
{
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    localtime_r(&now, &tm);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y%m%d-%H%M%S", &tm);
    fs::create_directories(out);
    fs::path dir = out / (std::string(stamp) + "-" + tag);
    for (int k = 2; fs::exists(dir); ++k) dir = out / (std::string(stamp) + "-" + tag + "-" + std::to_string(k));
    fs::create_directories(dir);
    return dir;
}

json window_json(const AssessmentWindow& w)
{
    return {{"a_from", w.a_from}, {"a_to", w.a_to}, {"b_from", w.b_from}, {"b_to", w.b_to}, {"breaks", w.breaks}};
}

AssessmentWindow window_from_json(const json& j)
{
    AssessmentWindow w;
    w.a_from = j.at("a_from").get<double>();
    w.a_to = j.at("a_to").get<double>();
    w.b_from = j.at("b_from").get<double>();
    w.b_to = j.at("b_to").get<double>();
    w.breaks = j.at("breaks").get<std::vector<double>>();
    return w;
}

json residual_json(const ResidualReport& r)
{
    return {{"value", r.value}, {"time", r.time}, {"charge", to_string(r.charge)}, {"nodes", r.nodes}};
}

json bounds_json(const BoundsReport& b)
{
    json checks = json::array();
    for (const auto& c : b.checks)
        checks.push_back(
            {{"name", c.name}, {"observed", c.observed}, {"limit", c.limit}, {"margin", c.margin}, {"pass", c.pass}});
    return {{"constants",
             {{"v_cap", b.bounds.v_cap},
              {"d_min", b.bounds.d_min},
              {"v_sep", b.bounds.v_sep},
              {"t_sep", b.bounds.t_sep},
              {"a_decay", b.bounds.a_decay}}},
            {"checks", checks},
            {"pass", b.pass()}};
}

double t_plus_of(const InitialData& data)
{
    if (const auto* f = std::get_if<FstHalfLine>(&data)) return f->t_plus();
    return 0.0;
}

void write_energy(const fs::path& path, const std::vector<EnergySample>& series)
{
    std::ofstream out(path);
    require(static_cast<bool>(out), ErrorKind::io, "cannot write " + path.string());
    out << "t,kinetic,pot_minus,pot_plus,combined,t2_minus,t2_plus\n";
    for (const auto& e : series)
        out << io::format_double(e.t) << ',' << io::format_double(e.kinetic) << ','
            << io::format_double(e.pot_minus) << ',' << io::format_double(e.pot_plus) << ','
            << io::format_double(e.combined) << ',' << io::format_double(e.t2_minus) << ','
            << io::format_double(e.t2_plus) << '\n';
}

struct SolveOutcome {
    bool converged = false;
    bool bounds_pass = false;
    SolveReport report;
};

/// Runs one solve and writes all artifacts into `dir`. Config problems
/// surface as ConfigError.
SolveOutcome solve_into(const Config& cfg, const fs::path& dir)
{
    const InitialData data = make_initial_data(cfg);
    const double t_plus = t_plus_of(data);
    io::write_json(dir / "config.json", to_json(cfg));
    if (const auto* f = std::get_if<FstHalfLine>(&data)) io::write_csv(dir / "strip_b.csv", f->b_strip);

    const Solution sol = [&] {
        try {
            return solve(data, cfg.model, cfg.solver, [](const StageReport& s) {
                spdlog::debug("lambda {} iteration {} increment {:.3e}", s.lambda, s.iterations, s.increment);
            });
        } catch (const AdmissibilityError& e) {
            io::write_csv(dir / "iterate_a.csv", e.iterate_a());
            io::write_csv(dir / "iterate_b.csv", e.iterate_b());
            io::write_json(dir / "report.json", {{"converged", false},
                                                 {"iterations", e.iteration()},
                                                 {"lambda", e.lambda()},
                                                 {"message", e.what()}});
            throw;
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::invalid_input || e.kind() == ErrorKind::reference_construction)
                throw ConfigError(e.what());
            throw;
        }
    }();
    const auto& rep = sol.report;
    spdlog::info("{} after {} iterations, increment {:.3e}, residual {:.3e} at t = {}",
                 rep.converged ? "converged" : "not converged", rep.iterations, rep.increment, rep.residual.value,
                 rep.residual.time);

    io::write_csv(dir / "trajectory_a.csv", sol.pair.upper());
    io::write_csv(dir / "trajectory_b.csv", sol.pair.lower());
    json meta = to_json(cfg);
    meta["t_plus"] = t_plus;
    meta["fst_mode"] = std::holds_alternative<FstHalfLine>(data);
    io::write_json(dir / "solution.json", io::to_json(sol.pair, meta));

    json stages = json::array();
    for (const auto& s : rep.stages)
        stages.push_back({{"lambda", s.lambda}, {"iterations", s.iterations}, {"increment", s.increment}});
    io::write_json(dir / "report.json", {{"converged", rep.converged},
                                         {"iterations", rep.iterations},
                                         {"increment", rep.increment},
                                         {"residual", residual_json(rep.residual)},
                                         {"window", window_json(rep.window)},
                                         {"t_plus", t_plus},
                                         {"stages", stages},
                                         {"bounds_pass", rep.bounds.pass()},
                                         {"message", rep.message}});
    io::write_json(dir / "bounds.json", bounds_json(rep.bounds));

    const auto& w = rep.window;
    if (w.a_to > w.a_from)
        write_energy(dir / "energy.csv",
                     energy_series(sol.pair, cfg.model, cfg.energy_boost, w.a_from, w.a_to, cfg.energy_step,
                                   cfg.solver.delay));
    return {rep.converged, rep.bounds.pass(), rep};
}

std::string family_tag(const Config& cfg) { return to_string(cfg.model.family()); }

/// A solution file given directly or as the run directory containing it.
fs::path solution_file(const fs::path& p) { return fs::is_directory(p) ? p / "solution.json" : p; }

struct LoadedRun {
    TrajectoryPair pair;
    json metadata;
};

LoadedRun load_solution(const fs::path& p)
{
    const json j = io::read_json(solution_file(p));
    return {io::pair_from_json(j), j.value("metadata", json::object())};
}

json leg_deviation(const TrajectoryPair& rec, const LegInfo& leg, const TrajectoryPair& oracle)
{
    const Trajectory& tr = leg.charge == Charge::a ? rec.upper() : rec.lower();
    const Trajectory& ref = leg.charge == Charge::a ? oracle.upper() : oracle.lower();
    double dx = 0.0, dv = 0.0, at = leg.from;
    std::size_t compared = 0;
    const auto t = tr.times();
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < leg.from || t[i] > leg.to || !ref.covers(t[i])) continue;
        ++compared;
        const double ex = std::abs(tr.positions()[i] - ref.position(t[i]));
        dv = std::max(dv, std::abs(tr.velocities()[i] - ref.velocity(t[i])));
        if (ex >= dx) {
            dx = ex;
            at = t[i];
        }
    }
    return {{"max_position_deviation", dx}, {"max_velocity_deviation", dv}, {"at", at}, {"compared_nodes", compared}};
}

} // namespace

int cmd_solve(const Options& opt)
{
    const Config cfg = load_config(opt.config);
    const fs::path dir = make_run_dir(opt.out, family_tag(cfg));
    spdlog::info("run directory {}", dir.string());
    std::cout << dir.string() << std::endl;
    try {
        const auto out = solve_into(cfg, dir);
        if (!out.converged) std::cerr << "not converged: " << out.report.message << '\n';
        if (!out.bounds_pass) std::cerr << "bound checks failed (see bounds.json)\n";
        return out.converged && out.bounds_pass ? Exit::ok : Exit::failed;
    } catch (const AdmissibilityError& e) {
        std::cerr << e.what() << " (iterate written to " << dir.string() << ")\n";
        return Exit::failed;
    }
}

int cmd_reconstruct(const Options& opt)
{
    const Config cfg = load_config(opt.config);
    const auto& rc = cfg.reconstruct;
    StripPair strips;
    if (!rc.a_strip.empty() || !rc.b_strip.empty()) {
        if (rc.a_strip.empty() || rc.b_strip.empty())
            throw ConfigError("reconstruct needs both a_strip and b_strip");
        strips = {io::read_csv(rc.a_strip, Charge::a), io::read_csv(rc.b_strip, Charge::b)};
    } else {
        if (rc.source.empty()) throw ConfigError("reconstruct needs source or a_strip/b_strip");
        const auto run = load_solution(rc.source);
        const auto& pair = run.pair;
        double t1p = 0.0;
        if (rc.t1_plus) {
            t1p = *rc.t1_plus;
        } else {
            const auto ladder = breakpoint_ladder(pair, run.metadata.value("t_plus", 0.0), 1, cfg.solver.delay);
            if (ladder.sigma.empty()) throw ConfigError("solution too short for the default t1_plus");
            t1p = ladder.sigma.front() + 0.5;
        }
        const double t2p = delay_of(pair, t1p, DelayKind::t2_plus, cfg.solver.delay);
        const double t2m = delay_of(pair, t1p, DelayKind::t2_minus, cfg.solver.delay);
        const double t1m = delay_of(pair, t2m, DelayKind::t1_minus, cfg.solver.delay);
        if (!pair.upper().covers(t1m) || !pair.upper().covers(t1p) || !pair.lower().covers(t2m) ||
            !pair.lower().covers(t2p))
            throw ConfigError("strips around t1_plus = " + std::to_string(t1p) + " leave the solution grid");
        strips = {pair.upper().cut(t1m, t1p), pair.lower().cut(t2m, t2p)};
    }
    try {
        validate(strips, 1e-9, cfg.solver.delay);
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }

    const fs::path dir = make_run_dir(opt.out, "reconstruct");
    std::cout << dir.string() << std::endl;
    io::write_csv(dir / "strip_a.csv", strips.a_strip);
    io::write_csv(dir / "strip_b.csv", strips.b_strip);

    std::optional<TrajectoryPair> oracle;
    if (!opt.oracle.empty()) oracle = load_solution(opt.oracle).pair;

    StepperOptions so;
    so.delay = cfg.solver.delay;
    so.derivative_spacing = rc.derivative_spacing;
    json report;
    Reconstruction rec{TrajectoryPair(strips.a_strip, strips.b_strip), {}};
    int code = Exit::ok;
    try {
        rec = reconstruct(strips, cfg.model.kappa_a, cfg.model.kappa_b, rc.horizon, rc.direction, rc.step,
                          rc.max_legs, so);
        report["success"] = true;
    } catch (const ReconstructionError& e) {
        rec = e.partial();
        report["success"] = false;
        report["error"] = {{"kind", to_string(e.kind())},
                           {"leg", e.failing_leg()},
                           {"charge", to_string(e.failing_charge())},
                           {"message", e.what()}};
        std::cerr << e.what() << '\n';
        code = Exit::failed;
    }
    io::write_csv(dir / "trajectory_a.csv", rec.pair.upper());
    io::write_csv(dir / "trajectory_b.csv", rec.pair.lower());
    io::write_json(dir / "reconstruction.json", io::to_json(rec.pair, {{"kappa_a", cfg.model.kappa_a},
                                                                       {"kappa_b", cfg.model.kappa_b},
                                                                       {"step", rc.step}}));
    json legs = json::array();
    double worst = 0.0;
    for (std::size_t k = 0; k < rec.legs.size(); ++k) {
        const auto& l = rec.legs[k];
        json leg{{"leg", k + 1}, {"charge", to_string(l.charge)}, {"from", l.from}, {"to", l.to}, {"nodes", l.nodes}};
        if (oracle) {
            leg["deviation"] = leg_deviation(rec.pair, l, *oracle);
            worst = std::max(worst, leg["deviation"]["max_position_deviation"].get<double>());
        }
        legs.push_back(leg);
    }
    report["legs"] = legs;
    if (oracle) report["max_deviation"] = worst;
    io::write_json(dir / "report.json", report);
    spdlog::info("{} legs reconstructed", rec.legs.size());
    return code;
}

int cmd_check(const Options& opt)
{
    Config cfg;
    std::optional<TrajectoryPair> pair;
    std::optional<AssessmentWindow> window;
    bool have_data = false;
    double t_plus = 0.0;
    if (!opt.run.empty()) {
        cfg = load_config(opt.run / "config.json");
        pair.emplace(io::read_csv(opt.run / "trajectory_a.csv", Charge::a),
                     io::read_csv(opt.run / "trajectory_b.csv", Charge::b));
        const json rep = io::read_json(opt.run / "report.json");
        if (rep.contains("window")) window = window_from_json(rep.at("window"));
        t_plus = rep.value("t_plus", 0.0);
        have_data = true;
    } else {
        if (opt.config.empty()) throw ConfigError("check needs --config or a run directory");
        cfg = load_config(opt.config);
        const auto& c = cfg.check;
        if (!c.solution.empty())
            pair.emplace(load_solution(c.solution).pair);
        else if (!c.a.empty() && !c.b.empty())
            pair.emplace(io::read_csv(c.a, Charge::a), io::read_csv(c.b, Charge::b));
        else
            throw ConfigError("[check] needs solution or a and b");
        have_data = cfg.tree.get_child_optional("data").has_value();
        t_plus = c.t_plus;
    }
    const bool fst_mode = t_plus > 0.0;
    if (!window) {
        window = solution_window(*pair, cfg.model, fst_mode, t_plus, cfg.solver.boundary_buffer, cfg.solver.delay);
        if (fst_mode) window->breaks.push_back(t_plus);
    }
    const auto res = residual(*pair, cfg.model, *window, cfg.solver.delay, cfg.solver.residual_stencil);
    json out{{"residual", residual_json(res)}, {"window", window_json(*window)}, {"tolerance", cfg.check.tolerance}};
    bool pass = res.value <= cfg.check.tolerance;
    if (have_data) {
        const InitialData data = make_initial_data(cfg);
        const auto ref = build_reference(data, cfg.solver.outgoing_speed);
        const double ref_speed = std::max(ref.x0.max_speed(), ref.y0.max_speed());
        const bool two_sided = std::holds_alternative<Cauchy>(data);
        const auto bounds = estimate_bounds(*pair, data, cfg.model, *window, ref_speed, two_sided);
        const auto br = check_bounds(*pair, bounds, *window, {0.01, 0.0, two_sided});
        out["bounds"] = bounds_json(br);
        pass = pass && br.pass();
    }
    out["pass"] = pass;
    std::cout << out.dump(2) << std::endl;
    if (!pass)
        std::cerr << "check failed: max defect " << res.value << " at t = " << res.time << " (charge "
                  << to_string(res.charge) << ")\n";
    return pass ? Exit::ok : Exit::failed;
}

int cmd_ladder(const Options& opt)
{
    std::optional<TrajectoryPair> pair;
    double t_plus = 0.0;
    int count = 16;
    DelayOptions delay;
    if (!opt.run.empty()) {
        const auto run = load_solution(opt.run);
        pair.emplace(run.pair);
        t_plus = run.metadata.value("t_plus", 0.0);
        if (!opt.config.empty()) count = load_config(opt.config).ladder_count;
    } else {
        if (opt.config.empty()) throw ConfigError("ladder needs --config or a run directory");
        const Config cfg = load_config(opt.config);
        if (cfg.check.solution.empty()) throw ConfigError("ladder needs [check] solution");
        const auto run = load_solution(cfg.check.solution);
        pair.emplace(run.pair);
        t_plus = cfg.check.t_plus > 0.0 ? cfg.check.t_plus : run.metadata.value("t_plus", 0.0);
        count = cfg.ladder_count;
        delay = cfg.solver.delay;
    }
    if (opt.count > 0) count = opt.count;
    if (!(t_plus > 0.0)) throw ConfigError("the breakpoint ladder needs an FST solution (t_plus > 0)");
    const auto ladder = breakpoint_ladder(*pair, t_plus, count, delay);
    std::cout << "k,sigma,tau\n";
    for (std::size_t k = 0; k < ladder.sigma.size(); ++k)
        std::cout << k + 1 << ',' << io::format_double(ladder.sigma[k]) << ',' << io::format_double(ladder.tau[k])
                  << '\n';
    if (ladder.truncated) spdlog::warn("ladder left the trajectory window after {} rungs", ladder.sigma.size());
    return Exit::ok;
}

namespace {

struct SweepJob {
    std::size_t index;
    double kappa, separation, velocity, h;

    [[nodiscard]] std::string key() const
    {
        return std::to_string(index) + ',' + io::format_double(kappa) + ',' + io::format_double(separation) + ',' +
               io::format_double(velocity) + ',' + io::format_double(h);
    }
};

const char* sweep_header =
    "index,kappa,separation,velocity,h,status,converged,iterations,increment,residual,v_cap,d_min,v_sep,t_sep,"
    "a_decay,bounds_pass";

} // namespace

int cmd_sweep(const Options& opt)
{
    const Config base = load_config(opt.config);
    std::vector<SweepJob> jobs;
    for (double k : base.sweep.kappa)
        for (double s : base.sweep.separation)
            for (double v : base.sweep.velocity)
                for (double h : base.sweep.h) jobs.push_back({jobs.size(), k, s, v, h});

    fs::create_directories(opt.out / "runs");
    const fs::path table = opt.out / "sweep.csv";
    std::map<std::size_t, std::string> rows;  // index -> full line
    if (fs::exists(table)) {
        std::ifstream in(table);
        std::string line;
        std::getline(in, line);
        if (line != sweep_header) throw ConfigError(table.string() + " is not a sweep table from this tool");
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto idx = static_cast<std::size_t>(std::stoul(line.substr(0, line.find(','))));
            if (idx < jobs.size() && line.rfind(jobs[idx].key() + ',', 0) == 0) rows[idx] = line;
        }
        spdlog::info("resuming sweep: {} of {} runs already done", rows.size(), jobs.size());
    }

    std::mutex guard;
    std::ofstream append;
    {
        std::ofstream fresh(table, std::ios::trunc);
        fresh << sweep_header << '\n';
        for (const auto& [idx, line] : rows) fresh << line << '\n';
    }
    append.open(table, std::ios::app);

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next++;
            if (i >= jobs.size()) return;
            {
                std::lock_guard lock(guard);
                if (rows.count(i)) continue;
            }
            const SweepJob& job = jobs[i];
            Config cfg = base;
            cfg.model.kappa_a = cfg.model.kappa_b = job.kappa;
            cfg.data.a0 = 0.5 * job.separation;
            cfg.data.b0 = -0.5 * job.separation;
            cfg.data.a0_dot = job.velocity;
            cfg.data.b0_dot = -job.velocity;
            cfg.solver.h = job.h;
            const fs::path dir = opt.out / "runs" / ("run_" + std::to_string(i));
            fs::create_directories(dir);
            std::ostringstream row;
            row << job.key() << ',';
            try {
                const auto out = solve_into(cfg, dir);
                const auto& b = out.report.bounds.bounds;
                row << "ok," << out.converged << ',' << out.report.iterations << ','
                    << io::format_double(out.report.increment) << ',' << io::format_double(out.report.residual.value)
                    << ',' << io::format_double(b.v_cap) << ',' << io::format_double(b.d_min) << ','
                    << io::format_double(b.v_sep) << ',' << io::format_double(b.t_sep) << ','
                    << io::format_double(b.a_decay) << ',' << out.bounds_pass;
            } catch (const std::exception& e) {
                spdlog::warn("sweep run {} failed: {}", i, e.what());
                row << "error,0,0,,,,,,,,0";
            }
            std::lock_guard lock(guard);
            rows[i] = row.str();
            append << rows[i] << '\n' << std::flush;
        }
    };
    std::vector<std::thread> pool;
    const int width = std::max(1, opt.workers);
    for (int w = 0; w < width; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    append.close();

    // final table in index order
    std::ofstream sorted(table, std::ios::trunc);
    sorted << sweep_header << '\n';
    for (const auto& [idx, line] : rows) sorted << line << '\n';
    std::cout << table.string() << std::endl;
    return Exit::ok;
}

} // namespace fstline::cli
