#pragma once

#include "fstline/fixedpoint.hpp"
#include "fstline/initial_data.hpp"
#include "fstline/kinematics.hpp"
#include "fstline/stepper.hpp"

#include <boost/property_tree/ptree.hpp>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace fstline::cli {

/// Raised for anything wrong with a configuration file (exit code 2).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class DataKind { cauchy, fst };

struct DataConfig {
    DataKind kind = DataKind::cauchy;
    double a0 = 1.0, a0_dot = 0.0;
    double b0 = -1.0, b0_dot = 0.0;  // Cauchy data, or b(0) and velocity of a uniform FST strip
    double strip_step = 0.0;         // 0: the solver step
    std::filesystem::path b_strip;   // FST strip from a CSV file instead
};

struct ReconstructConfig {
    std::filesystem::path source;    // solution.json the strips are cut from
    std::optional<double> t1_plus;   // default: first breakpoint sigma_1 + 0.5
    std::filesystem::path a_strip, b_strip;  // alternatively explicit strip CSVs
    double horizon = 10.0;
    TimeDirection direction = TimeDirection::future;
    double step = 1e-3;
    int max_legs = -1;
    double derivative_spacing = 0.05;
};

struct SweepConfig {
    std::vector<double> kappa, separation, velocity, h;
};

struct CheckConfig {
    std::filesystem::path a, b, solution;
    double tolerance = 1e-6;
    double t_plus = 0.0;  // > 0: FST mode window starting at 0 for a and t_plus for b
};

struct Config {
    ModelSpec model;
    DataConfig data;
    SolverConfig solver;
    ReconstructConfig reconstruct;
    SweepConfig sweep;
    CheckConfig check;
    double energy_boost = 0.0;
    double energy_step = 0.05;
    int ladder_count = 16;
    std::uint64_t seed = 0;
    std::filesystem::path base_dir;  // relative paths resolve against the config file
    boost::property_tree::ptree tree;
};

/// Reads an INI ([model], [data], [solver], ...) or JSON file. Unknown
/// sections or keys are rejected.
Config load_config(const std::filesystem::path& path);

/// Parses already loaded text; `json` picks the syntax.
Config parse_config(const std::string& text, bool json, const std::filesystem::path& base_dir = {});

/// Initial data described by the [data] section.
InitialData make_initial_data(const Config& cfg);

/// Flat echo of the effective configuration.
nlohmann::json to_json(const Config& cfg);

} // namespace fstline::cli
