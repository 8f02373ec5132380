#include <catch2/catch_test_macros.hpp>

#include "fstline/trajectory_io.hpp"
#include "generators.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace fstline;

namespace {

bool bit_equal(std::span<const double> p, std::span<const double> q)
{
    return std::equal(p.begin(), p.end(), q.begin(), q.end());
}

bool same(const Trajectory& p, const Trajectory& q)
{
    return p.label() == q.label() && bit_equal(p.times(), q.times()) && bit_equal(p.positions(), q.positions()) &&
           bit_equal(p.velocities(), q.velocities()) && bit_equal(p.node_accelerations(), q.node_accelerations()) &&
           bit_equal(p.breaks(), q.breaks());
}

} // namespace

TEST_CASE("CSV round trip is bit-exact", "[io][property]")
{
    for (int k = 0; k < 100; ++k) {
        const auto tr = gen::sample(gen::random_wave(gen::uniform(-1e3, 1e3), 0.9), gen::uniform(-50, 0),
                                    gen::uniform(1, 50), 37, k % 2 ? Charge::a : Charge::b);
        std::stringstream s;
        io::write_csv(s, tr);
        CHECK(same(io::read_csv(s, tr.label()), tr));
    }
}

TEST_CASE("three-column CSV input", "[io]")
{
    std::stringstream s("t,x,v\n0,1,0.5\n0.5,1.25,0.5\n1,1.5,0.5\n");
    const auto tr = io::read_csv(s, Charge::b);
    CHECK(tr.size() == 3);
    CHECK(tr.label() == Charge::b);
    CHECK(std::abs(tr.position(0.25) - 1.125) < 1e-15);
    CHECK_FALSE(tr.has_node_accelerations());
}

TEST_CASE("malformed CSV input", "[io]")
{
    auto parse = [](std::string text) {
        std::stringstream s(std::move(text));
        return io::read_csv(s, Charge::a);
    };
    CHECK_THROWS_AS(parse(""), Error);
    CHECK_THROWS_AS(parse("time,pos,vel\n0,0,0\n1,0,0\n"), Error);
    CHECK_THROWS_AS(parse("t,x,v\n0,0,0\n1,0\n"), Error);
    CHECK_THROWS_AS(parse("t,x,v\n0,0,0\n1,zero,0\n"), Error);
    CHECK_THROWS_AS(parse("t,x,v\n0,0,0\n1,0,0x\n"), Error);
    try {
        parse("t,x,v\n0,0,0\n1,zero,0\n");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::io);
    }
    // well-formed text but a superluminal trajectory
    try {
        parse("t,x,v\n0,0,0\n1,0,1.5\n");
        FAIL("expected a domain error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::domain);
    }
}

TEST_CASE("JSON round trip is bit-exact", "[io][property]")
{
    for (int k = 0; k < 50; ++k) {
        const auto rp = gen::random_pair(-10, 10, 41);
        const auto a = rp.pair.upper().with_breaks({gen::uniform(-5, 5)});
        const TrajectoryPair pair(a, rp.pair.lower());
        const nlohmann::json meta = {{"family", "fst"}, {"kappa", 0.1 * k}};
        const auto j = io::to_json(pair, meta);
        const auto text = j.dump();
        const auto back = io::pair_from_json(nlohmann::json::parse(text));
        CHECK(same(back.upper(), pair.upper()));
        CHECK(same(back.lower(), pair.lower()));
        CHECK(nlohmann::json::parse(text).at("metadata") == meta);
    }
}

TEST_CASE("files on disk", "[io]")
{
    const auto dir = std::filesystem::temp_directory_path() / "fstline_io_test";
    std::filesystem::create_directories(dir);
    const auto rp = gen::random_pair(-3, 3, 21);
    io::write_csv(dir / "a.csv", rp.pair.upper());
    CHECK(same(io::read_csv(dir / "a.csv", Charge::a), rp.pair.upper()));
    io::write_json(dir / "pair.json", io::to_json(rp.pair));
    const auto back = io::pair_from_json(io::read_json(dir / "pair.json"));
    CHECK(same(back.lower(), rp.pair.lower()));
    CHECK_THROWS_AS(io::read_csv(dir / "missing.csv", Charge::a), Error);
    {
        std::ofstream bad(dir / "bad.json");
        bad << "{ not json";
    }
    CHECK_THROWS_AS(io::read_json(dir / "bad.json"), Error);
    CHECK_THROWS_AS(io::pair_from_json(nlohmann::json{{"a", 1}}), Error);
    std::filesystem::remove_all(dir);
}

TEST_CASE("number formatting keeps every bit", "[io][property]")
{
    for (int k = 0; k < 10000; ++k) {
        const double v = std::ldexp(gen::uniform(-1, 1), static_cast<int>(gen::uniform(-60, 60)));
        CHECK(io::parse_double(io::format_double(v), "test") == v);
    }
}
