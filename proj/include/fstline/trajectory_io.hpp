#pragma once

#include "fstline/errors.hpp"
#include "fstline/kinematics.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fstline::io {

/// Shortest text that reads back to the same double (17 significant digits).
inline std::string format_double(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline double parse_double(const std::string& s, const std::string& where)
{
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw Error(ErrorKind::io, "cannot parse number '" + s + "' in " + where);
    }
    require(used == s.size(), ErrorKind::io, "trailing characters in '" + s + "' in " + where);
    return v;
}

/// CSV with header `t,x,v,acc`.
inline void write_csv(std::ostream& out, const Trajectory& tr)
{
    out << "t,x,v,acc\n";
    const auto t = tr.times(), x = tr.positions(), v = tr.velocities(), a = tr.node_accelerations();
    for (std::size_t i = 0; i < t.size(); ++i)
        out << format_double(t[i]) << ',' << format_double(x[i]) << ',' << format_double(v[i]) << ','
            << format_double(a[i]) << '\n';
}

inline void write_csv(const std::filesystem::path& path, const Trajectory& tr)
{
    std::ofstream out(path);
    require(static_cast<bool>(out), ErrorKind::io, "cannot open " + path.string() + " for writing");
    write_csv(out, tr);
    require(static_cast<bool>(out), ErrorKind::io, "write failed for " + path.string());
}

/// Reads `t,x,v` or `t,x,v,acc`. Without the acc column accelerations are
/// differentiated from the velocities.
inline Trajectory read_csv(std::istream& in, Charge label, const std::string& name = "csv")
{
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), ErrorKind::io, name + " is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const bool with_acc = line == "t,x,v,acc";
    require(with_acc || line == "t,x,v", ErrorKind::io, name + ": expected header t,x,v or t,x,v,acc");
    std::vector<double> t, x, v, a;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
        const std::string where = name + " line " + std::to_string(row);
        require(cells.size() == (with_acc ? 4u : 3u), ErrorKind::io, where + ": wrong number of columns");
        t.push_back(parse_double(cells[0], where));
        x.push_back(parse_double(cells[1], where));
        v.push_back(parse_double(cells[2], where));
        if (with_acc) a.push_back(parse_double(cells[3], where));
    }
    return Trajectory(std::move(t), std::move(x), std::move(v), label, std::move(a));
}

inline Trajectory read_csv(const std::filesystem::path& path, Charge label)
{
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorKind::io, "cannot open " + path.string());
    return read_csv(in, label, path.string());
}

inline nlohmann::json to_json(const Trajectory& tr)
{
    const auto t = tr.times(), x = tr.positions(), v = tr.velocities(), a = tr.node_accelerations();
    return {{"label", to_string(tr.label())},
            {"t", std::vector<double>(t.begin(), t.end())},
            {"x", std::vector<double>(x.begin(), x.end())},
            {"v", std::vector<double>(v.begin(), v.end())},
            {"acc", std::vector<double>(a.begin(), a.end())},
            {"breaks", std::vector<double>(tr.breaks().begin(), tr.breaks().end())}};
}

inline Trajectory trajectory_from_json(const nlohmann::json& j)
{
    try {
        const Charge label = j.at("label").get<std::string>() == "b" ? Charge::b : Charge::a;
        auto acc = j.contains("acc") ? j.at("acc").get<std::vector<double>>() : std::vector<double>{};
        Trajectory tr(j.at("t").get<std::vector<double>>(), j.at("x").get<std::vector<double>>(),
                      j.at("v").get<std::vector<double>>(), label, std::move(acc));
        if (j.contains("breaks")) tr = tr.with_breaks(j.at("breaks").get<std::vector<double>>());
        return tr;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::io, std::string("malformed trajectory JSON: ") + e.what());
    }
}

/// Both charges plus free-form metadata.
inline nlohmann::json to_json(const TrajectoryPair& pair, const nlohmann::json& metadata = nlohmann::json::object())
{
    return {{"metadata", metadata}, {"a", to_json(pair.upper())}, {"b", to_json(pair.lower())}};
}

inline TrajectoryPair pair_from_json(const nlohmann::json& j)
{
    try {
        return {trajectory_from_json(j.at("a")), trajectory_from_json(j.at("b"))};
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::io, std::string("malformed solution JSON: ") + e.what());
    }
}

inline nlohmann::json read_json(const std::filesystem::path& path)
{
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorKind::io, "cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::io, path.string() + ": " + e.what());
    }
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j)
{
    std::ofstream out(path);
    require(static_cast<bool>(out), ErrorKind::io, "cannot open " + path.string() + " for writing");
    out << j.dump(2) << '\n';
    require(static_cast<bool>(out), ErrorKind::io, "write failed for " + path.string());
}

} // namespace fstline::io
