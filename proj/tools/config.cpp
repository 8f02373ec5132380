#include "config.hpp"

#include "fstline/trajectory_io.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/json_parser.hpp>

#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace fstline::cli {

namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>>& known_keys()
{
    static const std::map<std::string, std::set<std::string>> keys{
        {"model", {"family", "kappa", "kappa_a", "kappa_b", "eps_plus", "eps_minus", "velocity_factors"}},
        {"data", {"kind", "a0", "a0_dot", "b0", "b0_dot", "strip_step", "b_strip"}},
        {"solver",
         {"t_min", "t_max", "h", "damping", "lambda_schedule", "max_iterations", "tolerance", "boundary_buffer",
          "outgoing_speed", "quadrature", "residual_stencil", "oversampling", "threads", "align_ladder"}},
        {"output", {"energy_boost", "energy_step", "ladder_count", "seed"}},
        {"reconstruct",
         {"source", "t1_plus", "a_strip", "b_strip", "horizon", "direction", "step", "max_legs",
          "derivative_spacing"}},
        {"sweep", {"kappa", "separation", "velocity", "h"}},
        {"check", {"a", "b", "solution", "tolerance", "t_plus"}},
    };
    return keys;
}

std::string trim(std::string s)
{
    const auto first = s.find_first_not_of(" \t\"");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\"");
    return s.substr(first, last - first + 1);
}

class Reader {
public:
    Reader(const pt::ptree& tree, std::filesystem::path base) : tree_(tree), base_(std::move(base)) {}

    [[nodiscard]] std::optional<std::string> raw(const std::string& section, const std::string& key) const
    {
        const auto sec = tree_.get_child_optional(section);
        if (!sec) return std::nullopt;
        const auto node = sec->get_child_optional(pt::ptree::path_type(key, '\0'));
        if (!node) return std::nullopt;
        if (!node->empty()) {
            // JSON array: join the children
            std::string joined;
            for (const auto& [k, child] : *node) joined += (joined.empty() ? "" : ",") + child.data();
            return joined;
        }
        return trim(node->data());
    }

    double number(const std::string& section, const std::string& key, double fallback) const
    {
        const auto s = raw(section, key);
        if (!s) return fallback;
        return to_number(*s, section + "." + key);
    }

    int integer(const std::string& section, const std::string& key, int fallback) const
    {
        const double v = number(section, key, fallback);
        if (v != std::floor(v)) throw ConfigError(section + "." + key + " must be an integer");
        return static_cast<int>(v);
    }

    bool boolean(const std::string& section, const std::string& key, bool fallback) const
    {
        const auto s = raw(section, key);
        if (!s) return fallback;
        if (*s == "true" || *s == "1" || *s == "yes" || *s == "on") return true;
        if (*s == "false" || *s == "0" || *s == "no" || *s == "off") return false;
        throw ConfigError(section + "." + key + ": expected a boolean, got '" + *s + "'");
    }

    std::string text(const std::string& section, const std::string& key, const std::string& fallback) const
    {
        return raw(section, key).value_or(fallback);
    }

    std::filesystem::path path(const std::string& section, const std::string& key) const
    {
        const auto s = raw(section, key);
        if (!s || s->empty()) return {};
        std::filesystem::path p(*s);
        return p.is_absolute() || base_.empty() ? p : base_ / p;
    }

    std::vector<double> list(const std::string& section, const std::string& key,
                             std::vector<double> fallback) const
    {
        const auto s = raw(section, key);
        if (!s) return fallback;
        std::vector<double> out;
        std::stringstream ss(*s);
        for (std::string item; std::getline(ss, item, ',');) {
            item = trim(item);
            if (!item.empty()) out.push_back(to_number(item, section + "." + key));
        }
        if (out.empty()) throw ConfigError(section + "." + key + " is an empty list");
        return out;
    }

private:
    static double to_number(const std::string& s, const std::string& where)
    {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(s, &used);
        } catch (const std::exception&) {
            throw ConfigError(where + ": expected a number, got '" + s + "'");
        }
        if (used != s.size()) throw ConfigError(where + ": expected a number, got '" + s + "'");
        return v;
    }

    const pt::ptree& tree_;
    std::filesystem::path base_;
};

void reject_unknown(const pt::ptree& tree)
{
    const auto& keys = known_keys();
    for (const auto& [section, child] : tree) {
        const auto it = keys.find(section);
        if (it == keys.end()) throw ConfigError("unknown config section [" + section + "]");
        for (const auto& [key, value] : child)
            if (!it->second.count(key)) throw ConfigError("unknown key '" + key + "' in [" + section + "]");
    }
}

Config build(const pt::ptree& tree, const std::filesystem::path& base_dir)
{
    reject_unknown(tree);
    const Reader r(tree, base_dir);
    Config c;
    c.tree = tree;
    c.base_dir = base_dir;

    // [model]
    Family family{};
    try {
        family = parse_family(r.text("model", "family", "fst"));
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    const double kappa = r.number("model", "kappa", 1.0);
    const double ka = r.number("model", "kappa_a", kappa);
    const double kb = r.number("model", "kappa_b", kappa);
    if (family == Family::custom) {
        c.model = {r.number("model", "eps_plus", 0.5), r.number("model", "eps_minus", 0.5), ka, kb,
                   r.boolean("model", "velocity_factors", true)};
    } else {
        c.model = ModelSpec::of(family, ka, kb);
        // explicit weights are accepted only when they agree with the family
        if (r.number("model", "eps_plus", c.model.eps_plus) != c.model.eps_plus ||
            r.number("model", "eps_minus", c.model.eps_minus) != c.model.eps_minus ||
            r.boolean("model", "velocity_factors", c.model.velocity_factors) != c.model.velocity_factors)
            throw ConfigError("eps_plus, eps_minus or velocity_factors contradict family = " +
                              std::string(to_string(family)) + " (use family = custom)");
    }

    // [data]
    const std::string kind = r.text("data", "kind", family == Family::fst ? "fst" : "cauchy");
    if (kind == "cauchy")
        c.data.kind = DataKind::cauchy;
    else if (kind == "fst")
        c.data.kind = DataKind::fst;
    else
        throw ConfigError("data.kind must be cauchy or fst, got '" + kind + "'");
    c.data.a0 = r.number("data", "a0", c.data.a0);
    c.data.a0_dot = r.number("data", "a0_dot", c.data.a0_dot);
    c.data.b0 = r.number("data", "b0", c.data.b0);
    c.data.b0_dot = r.number("data", "b0_dot", c.data.b0_dot);
    c.data.strip_step = r.number("data", "strip_step", 0.0);
    c.data.b_strip = r.path("data", "b_strip");

    // [solver]
    auto& s = c.solver;
    s.t_min = r.number("solver", "t_min", s.t_min);
    s.t_max = r.number("solver", "t_max", s.t_max);
    s.h = r.number("solver", "h", s.h);
    s.damping = r.number("solver", "damping", s.damping);
    s.lambda_schedule = r.list("solver", "lambda_schedule", s.lambda_schedule);
    s.max_iterations = r.integer("solver", "max_iterations", s.max_iterations);
    s.tolerance = r.number("solver", "tolerance", s.tolerance);
    s.boundary_buffer = r.number("solver", "boundary_buffer", s.boundary_buffer);
    s.outgoing_speed = r.number("solver", "outgoing_speed", s.outgoing_speed);
    const std::string quad = r.text("solver", "quadrature", "simpson");
    if (quad == "simpson")
        s.quadrature = Quadrature::simpson;
    else if (quad == "trapezoid")
        s.quadrature = Quadrature::trapezoid;
    else
        throw ConfigError("solver.quadrature must be simpson or trapezoid");
    s.residual_stencil = r.integer("solver", "residual_stencil", s.residual_stencil);
    s.oversampling = r.integer("solver", "oversampling", s.oversampling);
    s.threads = r.integer("solver", "threads", s.threads);
    s.align_ladder = r.boolean("solver", "align_ladder", s.align_ladder);

    // [output]
    c.energy_boost = r.number("output", "energy_boost", c.energy_boost);
    c.energy_step = r.number("output", "energy_step", c.energy_step);
    c.ladder_count = r.integer("output", "ladder_count", c.ladder_count);
    const double seed = r.number("output", "seed", 0.0);
    if (seed < 0.0 || seed != std::floor(seed)) throw ConfigError("output.seed must be a non-negative integer");
    c.seed = static_cast<std::uint64_t>(seed);

    // [reconstruct]
    auto& rc = c.reconstruct;
    rc.source = r.path("reconstruct", "source");
    if (const auto t1 = r.raw("reconstruct", "t1_plus"); t1 && *t1 != "auto")
        rc.t1_plus = r.number("reconstruct", "t1_plus", 0.0);
    rc.a_strip = r.path("reconstruct", "a_strip");
    rc.b_strip = r.path("reconstruct", "b_strip");
    rc.horizon = r.number("reconstruct", "horizon", rc.horizon);
    const std::string dir = r.text("reconstruct", "direction", "future");
    if (dir == "future")
        rc.direction = TimeDirection::future;
    else if (dir == "past")
        rc.direction = TimeDirection::past;
    else
        throw ConfigError("reconstruct.direction must be future or past");
    rc.step = r.number("reconstruct", "step", rc.step);
    rc.max_legs = r.integer("reconstruct", "max_legs", rc.max_legs);
    rc.derivative_spacing = r.number("reconstruct", "derivative_spacing", rc.derivative_spacing);

    // [sweep]
    c.sweep.kappa = r.list("sweep", "kappa", {c.model.kappa_a});
    c.sweep.separation = r.list("sweep", "separation", {c.data.a0 - c.data.b0});
    c.sweep.velocity = r.list("sweep", "velocity", {c.data.a0_dot});
    c.sweep.h = r.list("sweep", "h", {s.h});

    // [check]
    c.check.a = r.path("check", "a");
    c.check.b = r.path("check", "b");
    c.check.solution = r.path("check", "solution");
    c.check.tolerance = r.number("check", "tolerance", c.check.tolerance);
    c.check.t_plus = r.number("check", "t_plus", c.check.t_plus);

    try {
        c.model.validate();
        c.solver.validate();
        if (c.data.kind == DataKind::cauchy && c.data.b_strip.empty())
            validate(Cauchy{c.data.a0, c.data.a0_dot, c.data.b0, c.data.b0_dot});
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    if (!(c.energy_step > 0.0)) throw ConfigError("output.energy_step must be > 0");
    if (!(std::abs(c.energy_boost) < 1.0)) throw ConfigError("output.energy_boost must satisfy |boost| < 1");
    if (!(rc.step > 0.0)) throw ConfigError("reconstruct.step must be > 0");
    return c;
}

} // namespace

Config parse_config(const std::string& text, bool json, const std::filesystem::path& base_dir)
{
    pt::ptree tree;
    std::istringstream in(text);
    try {
        if (json)
            pt::read_json(in, tree);
        else
            pt::read_ini(in, tree);
    } catch (const pt::file_parser_error& e) {
        throw ConfigError(std::string("config syntax error: ") + e.what());
    }
    return build(tree, base_dir);
}

Config load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    const bool json = path.extension() == ".json";
    return parse_config(buf.str(), json, path.parent_path());
}

InitialData make_initial_data(const Config& cfg)
{
    const auto& d = cfg.data;
    try {
        if (d.kind == DataKind::cauchy) {
            Cauchy c{d.a0, d.a0_dot, d.b0, d.b0_dot};
            validate(c);
            return c;
        }
        if (!d.b_strip.empty()) {
            FstHalfLine f{d.a0, d.a0_dot, io::read_csv(d.b_strip, Charge::b)};
            validate(f);
            return f;
        }
        const double step = d.strip_step > 0.0 ? d.strip_step : cfg.solver.h;
        return uniform_strip_data(d.a0, d.a0_dot, d.b0, d.b0_dot, step);
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
}

nlohmann::json to_json(const Config& cfg)
{
    const auto& s = cfg.solver;
    nlohmann::json j;
    j["model"] = {{"family", to_string(cfg.model.family())},
                  {"eps_plus", cfg.model.eps_plus},
                  {"eps_minus", cfg.model.eps_minus},
                  {"kappa_a", cfg.model.kappa_a},
                  {"kappa_b", cfg.model.kappa_b},
                  {"velocity_factors", cfg.model.velocity_factors}};
    j["data"] = {{"kind", cfg.data.kind == DataKind::cauchy ? "cauchy" : "fst"},
                 {"a0", cfg.data.a0},
                 {"a0_dot", cfg.data.a0_dot},
                 {"b0", cfg.data.b0},
                 {"b0_dot", cfg.data.b0_dot},
                 {"strip_step", cfg.data.strip_step},
                 {"b_strip", cfg.data.b_strip.string()}};
    j["solver"] = {{"t_min", s.t_min},
                   {"t_max", s.t_max},
                   {"h", s.h},
                   {"damping", s.damping},
                   {"lambda_schedule", s.lambda_schedule},
                   {"max_iterations", s.max_iterations},
                   {"tolerance", s.tolerance},
                   {"boundary_buffer", s.boundary_buffer},
                   {"outgoing_speed", s.outgoing_speed},
                   {"quadrature", s.quadrature == Quadrature::simpson ? "simpson" : "trapezoid"},
                   {"residual_stencil", s.residual_stencil},
                   {"oversampling", s.oversampling},
                   {"threads", s.threads},
                   {"align_ladder", s.align_ladder}};
    j["output"] = {{"energy_boost", cfg.energy_boost},
                   {"energy_step", cfg.energy_step},
                   {"ladder_count", cfg.ladder_count},
                   {"seed", cfg.seed}};
    return j;
}

} // namespace fstline::cli
