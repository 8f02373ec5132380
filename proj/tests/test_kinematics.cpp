#include <catch2/catch_approx.hpp>
#include <catch2/catch_test_macros.hpp>

#include "fstline/kinematics.hpp"
#include "generators.hpp"

#include <cmath>

using namespace fstline;
using Catch::Approx;

TEST_CASE("momentum and its inverse", "[kinematics]")
{
    CHECK(momentum(0.0) == 0.0);
    CHECK(momentum(0.6) == Approx(0.75).epsilon(1e-15));
    CHECK(momentum(0.8) == Approx(4.0 / 3.0).epsilon(1e-15));
    CHECK(momentum(-0.6) == -momentum(0.6));
    CHECK(velocity_from_momentum(0.0) == 0.0);
    CHECK(velocity_from_momentum(0.75) == Approx(0.6).epsilon(1e-15));

    for (int k = 0; k < 1000; ++k) {
        const double v = gen::uniform(-0.999, 0.999);
        CHECK(std::abs(velocity_from_momentum(momentum(v)) - v) < 1e-12);
    }
    double prev = momentum(-0.99);
    for (double v = -0.98; v < 0.99; v += 0.01) {
        const double p = momentum(v);
        CHECK(p > prev);
        prev = p;
    }
}

TEST_CASE("superluminal arguments are domain errors", "[kinematics]")
{
    for (double v : {1.0, -1.0, 1.5}) {
        CHECK_THROWS_AS(momentum(v), Error);
        CHECK_THROWS_AS(rho(v), Error);
        CHECK_THROWS_AS(sigma(v), Error);
    }
    try {
        momentum(1.0);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::domain);
    }
}

TEST_CASE("velocity factors", "[kinematics]")
{
    CHECK(rho(0.0) == 1.0);
    CHECK(sigma(0.0) == 1.0);
    CHECK(rho(0.5) == Approx(3.0).epsilon(1e-15));
    for (int k = 0; k < 1000; ++k) {
        const double v = gen::uniform(-0.999, 0.999);
        CHECK(rho(v) * sigma(v) == Approx(1.0).epsilon(1e-12));
        CHECK(rho(-v) == Approx(sigma(v)).epsilon(1e-14));
    }
}

TEST_CASE("eval reproduces nodes and extends freely", "[kinematics]")
{
    const Trajectory tr({0.0, 1.0, 2.5}, {1.0, 1.5, 1.7}, {0.4, 0.3, 0.1}, Charge::a);
    for (std::size_t i = 0; i < tr.size(); ++i) {
        const auto s = tr.eval(tr.times()[i]);
        CHECK(s.position == tr.positions()[i]);
        CHECK(s.velocity == tr.velocities()[i]);
    }
    const auto after = tr.eval(4.0);
    CHECK(after.position == Approx(1.7 + 0.1 * 1.5).epsilon(1e-15));
    CHECK(after.velocity == 0.1);
    CHECK(after.acceleration == 0.0);
    const auto before = tr.eval(-2.0);
    CHECK(before.position == Approx(1.0 - 0.4 * 2.0).epsilon(1e-15));
    CHECK(before.velocity == 0.4);
    CHECK(before.acceleration == 0.0);
    CHECK(tr.acceleration_at(5.0) == 0.0);
}

TEST_CASE("two-node segment matches an independent Hermite basis", "[kinematics]")
{
    for (int k = 0; k < 200; ++k) {
        const double t0 = gen::uniform(-5, 5), h = gen::uniform(0.1, 3.0);
        const double x0 = gen::uniform(-2, 2), x1 = x0 + gen::uniform(-0.5, 0.5) * h;
        const double v0 = gen::uniform(-0.5, 0.5), v1 = gen::uniform(-0.5, 0.5);
        const Trajectory tr({t0, t0 + h}, {x0, x1}, {v0, v1});
        const double s = gen::uniform(0.0, 1.0);
        const double s2 = s * s, s3 = s2 * s;
        const double oracle = (2 * s3 - 3 * s2 + 1) * x0 + (s3 - 2 * s2 + s) * h * v0 + (-2 * s3 + 3 * s2) * x1 +
                              (s3 - s2) * h * v1;
        CHECK(std::abs(tr.position(t0 + s * h) - oracle) < 1e-14 * (1 + std::abs(oracle)));
        // midpoint: (x0 + x1)/2 + h (v0 - v1)/8
        CHECK(std::abs(tr.position(t0 + 0.5 * h) - (0.5 * (x0 + x1) + h * (v0 - v1) / 8)) < 1e-14);
    }
}

TEST_CASE("quintic interpolation when node accelerations are given", "[kinematics]")
{
    // polynomial of degree 5 is reproduced exactly from its value, slope and curvature at two nodes
    auto p = [](double t) { return 0.01 * t * t * t * t * t - 0.02 * t * t * t + 0.1 * t; };
    auto dp = [](double t) { return 0.05 * t * t * t * t - 0.06 * t * t + 0.1; };
    auto ddp = [](double t) { return 0.2 * t * t * t - 0.12 * t; };
    const Trajectory tr({0.0, 1.3}, {p(0.0), p(1.3)}, {dp(0.0), dp(1.3)}, Charge::a, {ddp(0.0), ddp(1.3)});
    for (double t = 0.0; t <= 1.3; t += 0.05) {
        const auto s = tr.eval(t);
        CHECK(s.position == Approx(p(t)).margin(1e-14));
        CHECK(s.velocity == Approx(dp(t)).margin(1e-13));
        CHECK(s.acceleration == Approx(ddp(t)).margin(1e-12));
    }
}

TEST_CASE("interpolant is C1 and subluminal", "[kinematics][property]")
{
    for (int k = 0; k < 200; ++k) {
        const auto w = gen::random_wave(0.0, 0.9);
        const bool with_acc = k % 2 == 0;
        const Trajectory tr = gen::sample(w, -3.0, 3.0, 25, Charge::a, with_acc);
        double dense = 0.0;
        for (int j = 0; j <= 6000; ++j) dense = std::max(dense, std::abs(tr.velocity(-3.0 + 6.0 * j / 6000.0)));
        CHECK(dense < 1.0);
        CHECK(dense <= tr.max_speed() + 1e-12);
        const double eps = 1e-9;
        for (double node : tr.times()) {
            CHECK(std::abs(tr.position(node - eps) - tr.position(node + eps)) < 1e-8);
            CHECK(std::abs(tr.velocity(node - eps) - tr.velocity(node + eps)) < 1e-6);
        }
    }
}

TEST_CASE("grid validation", "[kinematics]")
{
    CHECK_THROWS_AS(Trajectory({0.0}, {0.0}, {0.0}), Error);
    CHECK_THROWS_AS(Trajectory({0.0, 0.0}, {0.0, 1.0}, {0.0, 0.0}), Error);
    CHECK_THROWS_AS(Trajectory({0.0, 1.0}, {0.0, 1.0}, {0.0, 1.0}), Error);
    CHECK_THROWS_AS(Trajectory({0.0, 1.0}, {0.0, 1.0}, {0.0}), Error);
    // node speeds are fine but the cubic bulges past the light line
    CHECK_THROWS_AS(Trajectory({0.0, 1.0}, {0.0, 1.4}, {0.9, 0.9}), Error);
}

TEST_CASE("pair ordering", "[kinematics]")
{
    const Trajectory a({0.0, 1.0}, {1.0, 1.0}, {0.0, 0.0});
    const Trajectory b({0.0, 1.0}, {0.0, 0.0}, {0.0, 0.0}, Charge::b);
    CHECK_NOTHROW(TrajectoryPair(a, b));
    try {
        TrajectoryPair(b, a);
        FAIL("expected an ordering violation");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::ordering_violation);
    }
}

TEST_CASE("pair norm examples", "[kinematics]")
{
    const Trajectory ca({-2.0, 0.0, 2.0}, {1.0, 1.0, 1.0}, {0.0, 0.0, 0.0});
    const Trajectory cb({-2.0, 0.0, 2.0}, {-1.0, -1.0, -1.0}, {0.0, 0.0, 0.0}, Charge::b);
    CHECK(pair_norm(TrajectoryPair(ca, cb), 0.0) == 0.0);

    const Trajectory ua({-2.0, 0.0, 2.0}, {1.0 - 0.6, 1.0, 1.6}, {0.3, 0.3, 0.3});
    const Trajectory ub({-2.0, 0.0, 2.0}, {-1.0 + 0.6, -1.0, -1.6}, {-0.3, -0.3, -0.3}, Charge::b);
    CHECK(pair_norm(TrajectoryPair(ua, ub), 0.0) == Approx(0.3).epsilon(1e-14));
}

TEST_CASE("pair norm agrees with a brute-force dense maximum", "[kinematics][property]")
{
    for (int k = 0; k < 10; ++k) {
        const auto rp = gen::random_pair(-4.0, 4.0, 41);
        const double tref = gen::uniform(-1.0, 1.0);
        double dense = 0.0;
        for (const Trajectory* tr : {&rp.pair.upper(), &rp.pair.lower()}) {
            for (int j = 0; j <= 100000; ++j) {
                const double t = -4.0 + 8.0 * j / 100000.0;
                dense = std::max({dense, std::abs(tr->velocity(t)),
                                  (1 + std::abs(t - tref)) * std::abs(tr->acceleration_at(t))});
            }
        }
        const double sampled = pair_norm(rp.pair, tref);
        CHECK(sampled <= dense * (1 + 1e-12));
        CHECK(sampled >= dense * (1 - 2e-3));
    }
}

TEST_CASE("weighted sup is a norm on offsets", "[kinematics][property]")
{
    for (int k = 0; k < 50; ++k) {
        const auto p = gen::sample(gen::random_wave(0.0, 0.4), -3, 3, 31, Charge::a);
        const auto q = gen::sample(gen::random_wave(0.0, 0.4), -3, 3, 31, Charge::a);
        const double c = gen::uniform(-3, 3);
        auto norm_of = [&](auto&& vel, auto&& acc) { return weighted_sup(p.times(), vel, acc, 0.0); };
        const double np = norm_of([&](double s) { return p.velocity(s); }, [&](double s) { return p.acceleration_at(s); });
        const double nq = norm_of([&](double s) { return q.velocity(s); }, [&](double s) { return q.acceleration_at(s); });
        const double sum = norm_of([&](double s) { return p.velocity(s) + q.velocity(s); },
                                   [&](double s) { return p.acceleration_at(s) + q.acceleration_at(s); });
        const double scaled = norm_of([&](double s) { return c * p.velocity(s); },
                                      [&](double s) { return c * p.acceleration_at(s); });
        CHECK(sum <= np + nq + 1e-14);
        CHECK(scaled == Approx(std::abs(c) * np).epsilon(1e-14));
        CHECK(difference_norm(p, p, 0.0) == 0.0);
    }
}

TEST_CASE("reflection, mirroring and cutting", "[kinematics]")
{
    const auto w = gen::random_wave(0.5, 0.5);
    const Trajectory tr = gen::sample(w, -2.0, 3.0, 51, Charge::a);
    const Trajectory r = tr.reflected_in_time();
    const Trajectory m = tr.mirrored_in_space(Charge::b);
    for (double t = -1.9; t < 2.9; t += 0.173) {
        CHECK(r.position(-t) == Approx(tr.position(t)).margin(1e-13));
        CHECK(r.velocity(-t) == Approx(-tr.velocity(t)).margin(1e-13));
        CHECK(m.position(t) == Approx(-tr.position(t)).margin(1e-13));
        CHECK(m.velocity(t) == Approx(-tr.velocity(t)).margin(1e-13));
    }
    const Trajectory c = tr.cut(-0.55, 1.234);
    CHECK(c.front() == -0.55);
    CHECK(c.back() == 1.234);
    for (double t = -0.5; t < 1.2; t += 0.05) CHECK(c.position(t) == Approx(tr.position(t)).margin(1e-9));
    CHECK_THROWS_AS(tr.cut(-3.0, 0.0), Error);
}

TEST_CASE("difference stencils respect breaks", "[kinematics]")
{
    // velocity with a kink at t = 1: acceleration jumps from 0 to 0.2
    std::vector<double> t, x, v;
    for (int i = 0; i <= 40; ++i) {
        const double s = 0.05 * i;
        t.push_back(s);
        v.push_back(s < 1.0 ? 0.1 : 0.1 + 0.2 * (s - 1.0));
        x.push_back(s < 1.0 ? 0.1 * s : 0.1 * s + 0.1 * (s - 1.0) * (s - 1.0));
    }
    const Trajectory plain(t, x, v);
    const Trajectory broken = plain.with_breaks({1.0});
    CHECK(broken.breaks().size() == 1);
    CHECK(std::abs(broken.node_accelerations()[10]) < 1e-12);  // t = 0.5
    CHECK(broken.node_accelerations()[30] == Approx(0.2).margin(1e-12));  // t = 1.5
    CHECK(broken.node_accelerations()[20] == Approx(0.2).margin(1e-12));  // right-sided at the break
    CHECK(std::abs(plain.node_accelerations()[19]) > 1e-3);  // stencil across the kink smears it
    CHECK(std::abs(broken.node_accelerations()[19]) < 1e-12);
}

TEST_CASE("model families", "[kinematics]")
{
    CHECK(ModelSpec::fst().family() == Family::fst);
    CHECK(ModelSpec::synge().family() == Family::synge);
    CHECK(ModelSpec::toy().family() == Family::toy);
    CHECK(parse_family("toy") == Family::toy);
    CHECK_THROWS_AS(parse_family("maxwell"), Error);
    CHECK_THROWS_AS((ModelSpec{0.0, 0.0, 1.0, 1.0, true}.validate()), Error);
    CHECK_THROWS_AS((ModelSpec{0.5, 0.5, -1.0, 1.0, true}.validate()), Error);
    CHECK_NOTHROW(ModelSpec::fst(0.0, 0.0).validate());
}
