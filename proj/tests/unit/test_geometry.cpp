#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "spatialmut/errors.hpp"
#include "spatialmut/geometry.hpp"

using namespace spatialmut;

namespace {

TorusPoint random_point(std::mt19937_64& rng, int d, double side) {
    std::uniform_real_distribution<double> u(0.0, side);
    std::array<double, 3> c{u(rng), u(rng), u(rng)};
    return TorusPoint(std::span<const double>(c.data(), static_cast<std::size_t>(d)), side);
}

std::vector<MutationEvent> random_log(std::mt19937_64& rng, int d, double side, int events, int types, double horizon) {
    std::uniform_real_distribution<double> time(0.0, horizon);
    std::uniform_int_distribution<int> type(1, types);
    std::vector<MutationEvent> log;
    for (int i = 0; i < events; ++i) log.push_back({type(rng), random_point(rng, d, side), time(rng), true});
    std::sort(log.begin(), log.end(), [](const auto& a, const auto& b) { return a.time < b.time; });
    return log;
}

}  // namespace

TEST_CASE("coordinates are canonicalized") {
    const TorusPoint p({12.5, -1.0}, 10.0);
    CHECK(p[0] == doctest::Approx(2.5));
    CHECK(p[1] == doctest::Approx(9.0));
    CHECK(TorusPoint({10.0}, 10.0) == TorusPoint({0.0}, 10.0));
    CHECK(wrap_coordinate(-1e-300, 10.0) < 10.0);
    CHECK(wrap_coordinate(-1e-300, 10.0) >= 0.0);
}

TEST_CASE("torus distance examples") {
    CHECK(torus_distance(TorusPoint({1.0}, 10.0), TorusPoint({9.0}, 10.0)) == doctest::Approx(2.0));
    CHECK(torus_distance(TorusPoint({3.3, 4.4}, 10.0), TorusPoint({3.3, 4.4}, 10.0)) == 0.0);
    CHECK(torus_distance(TorusPoint({1.0, 1.0}, 10.0), TorusPoint({9.0, 2.0}, 10.0)) == doctest::Approx(std::sqrt(5.0)));
    const double far = torus_distance(TorusPoint({0.0, 0.0}, 10.0), TorusPoint({5.0, 5.0}, 10.0));
    CHECK(far == doctest::Approx(std::sqrt(50.0)));
    CHECK(far == doctest::Approx(max_torus_distance(2, 10.0)));
}

TEST_CASE("torus distance rejects mismatched tori") {
    CHECK_THROWS_AS(torus_distance(TorusPoint({1.0}, 10.0), TorusPoint({1.0, 2.0}, 10.0)), DimensionMismatchError);
    CHECK_THROWS_AS(torus_distance(TorusPoint({1.0}, 10.0), TorusPoint({1.0}, 11.0)), DimensionMismatchError);
}

TEST_CASE("torus distance properties on random triples") {
    std::mt19937_64 rng(11);
    for (int d = 1; d <= 3; ++d) {
        const double side = 7.0;
        std::uniform_real_distribution<double> shift(-20.0, 20.0);
        for (int i = 0; i < 3000; ++i) {
            const auto x = random_point(rng, d, side);
            const auto y = random_point(rng, d, side);
            const auto z = random_point(rng, d, side);
            const double xy = torus_distance(x, y);
            REQUIRE(xy == doctest::Approx(torus_distance(y, x)).epsilon(1e-15));
            REQUIRE(xy <= max_torus_distance(d, side) + 1e-12);
            REQUIRE(torus_distance(x, z) <= xy + torus_distance(y, z) + 1e-12);
            REQUIRE(xy == doctest::Approx(oracle::torus_distance(x.coords(), y.coords(), side)).epsilon(1e-12));
            std::array<double, 3> v{shift(rng), shift(rng), shift(rng)};
            const std::span<const double> off(v.data(), static_cast<std::size_t>(d));
            REQUIRE(std::abs(torus_distance(x.translated(off), y.translated(off)) - xy) <= 1e-12);
        }
    }
}

TEST_CASE("covered level examples") {
    const double alpha = 2.0;
    const TorusPoint x({5.0}, 10.0);
    CHECK(covered_level(x, 3.0, {}, alpha) == 0);

    // distance 1 = 0.5 * alpha * (t - s)
    std::vector<MutationEvent> log{{1, TorusPoint({4.0}, 10.0), 2.0, true}};
    CHECK(covered_level(x, 3.0, log, alpha) == 1);

    log.push_back({2, TorusPoint({5.5}, 10.0), 2.5, true});
    CHECK(covered_level(x, 3.0, log, alpha) == 2);
    CHECK(covered_level(x, 3.0, log, alpha) == oracle::brute_level(x.coords(), 3.0, log, alpha));

    log.push_back({3, TorusPoint({5.0}, 10.0), 2.9, false});
    CHECK(covered_level(x, 3.0, log, alpha) == 2);
}

TEST_CASE("covered level with a grid index matches a brute-force scan") {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> dims(1, 3);
    std::uniform_int_distribution<int> counts(0, 40);
    std::uniform_int_distribution<int> cells(1, 24);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    int covered = 0;
    for (int instance = 0; instance < 10000; ++instance) {
        const int d = dims(rng);
        const double side = 1.0 + 20.0 * unit(rng);
        const double alpha = 0.05 + unit(rng);
        const double horizon = side / alpha * unit(rng);
        const auto log = random_log(rng, d, side, counts(rng), 4, horizon);
        const double t = horizon * (1.0 + 0.5 * unit(rng));
        const auto x = random_point(rng, d, side);
        const auto index = GridIndex::snapshot(log, t, alpha, cells(rng));
        const int expected = oracle::brute_level(x.coords(), t, log, alpha);
        REQUIRE(covered_level(x, t, log, alpha, &index) == expected);
        REQUIRE(covered_level(x, t, log, alpha) == expected);
        covered += expected > 0;
    }
    CHECK(covered > 1000);
}

TEST_CASE("growing ball index matches a brute-force scan") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int d = 1; d <= 3; ++d) {
        const double side = 10.0;
        const double alpha = 0.7;
        GrowingBallIndex index(side, d, alpha, 12);
        std::vector<MutationEvent> log;
        double t = 0.0;
        for (int step = 0; step < 3000; ++step) {
            t += 0.004 * unit(rng);
            if (unit(rng) < 0.02) {
                MutationEvent e{1 + static_cast<int>(unit(rng) * 3), random_point(rng, d, side), t, true};
                index.add(e);
                log.push_back(e);
            }
            const auto x = random_point(rng, d, side);
            REQUIRE(index.level(x, t) == oracle::brute_level(x.coords(), t, log, alpha));
        }
    }
}

TEST_CASE("union volume examples") {
    const std::vector<Ball> arcs{{TorusPoint({2.0}, 10.0), 1.5}, {TorusPoint({3.0}, 10.0), 1.0}};
    const auto exact = union_volume(arcs, 10.0, 1, ExactOneDim{});
    CHECK(exact.estimate == doctest::Approx(3.5).epsilon(1e-14));
    CHECK(exact.half_width == 0.0);

    const double r = 2.0;
    const std::vector<Ball> disk{{TorusPoint({3.0, 4.0}, 10.0), r}};
    const auto mc = union_volume(disk, 10.0, 2, MonteCarloVolume{200000, 3});
    CHECK(std::abs(mc.estimate - std::numbers::pi * r * r) <= mc.half_width);

    for (int d = 1; d <= 3; ++d) {
        const std::array<double, 3> c{1.0, 2.0, 3.0};
        const std::vector<Ball> full{{TorusPoint(std::span<const double>(c.data(), static_cast<std::size_t>(d)), 10.0),
                                      max_torus_distance(d, 10.0)}};
        const auto v = union_volume(full, 10.0, d, MonteCarloVolume{1000, 1});
        CHECK(v.estimate == std::pow(10.0, d));
        CHECK(v.half_width == 0.0);
    }
    CHECK(union_volume({}, 10.0, 2, MonteCarloVolume{}).estimate == 0.0);
    CHECK_THROWS_AS(union_volume(disk, 10.0, 2, ExactOneDim{}), UnsupportedMethodError);
}

TEST_CASE("wrapped arcs are measured on the circle") {
    const std::vector<Ball> arcs{{TorusPoint({0.5}, 10.0), 1.0}, {TorusPoint({9.8}, 10.0), 0.5}};
    // [9.5, 10) u [0, 1.5] u [9.3, 10.3]: total 0.7 + 1.5 = 2.2
    CHECK(union_volume(arcs, 10.0, 1, ExactOneDim{}).estimate == doctest::Approx(2.2));
    const std::vector<Ball> whole{{TorusPoint({1.0}, 10.0), 6.0}};
    CHECK(union_volume(whole, 10.0, 1, ExactOneDim{}).estimate == doctest::Approx(10.0));
}

TEST_CASE("union volume is monotone under adding balls") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<Ball> balls;
        double previous = 0.0;
        for (int i = 0; i < 12; ++i) {
            balls.push_back({random_point(rng, 1, 10.0), 3.0 * unit(rng)});
            const double now = union_volume(balls, 10.0, 1, ExactOneDim{}).estimate;
            REQUIRE(now >= previous - 1e-12);
            REQUIRE(now <= 10.0 + 1e-12);
            previous = now;
        }
    }
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<Ball> subset;
        for (int i = 0; i < 5; ++i) subset.push_back({random_point(rng, 2, 10.0), 2.0 * unit(rng)});
        auto superset = subset;
        superset.push_back({random_point(rng, 2, 10.0), 2.0 * unit(rng)});
        const auto a = union_volume(subset, 10.0, 2, MonteCarloVolume{40000, 7});
        const auto b = union_volume(superset, 10.0, 2, MonteCarloVolume{40000, 8});
        REQUIRE(b.estimate >= a.estimate - a.half_width - b.half_width);
    }
}

TEST_CASE("Monte Carlo half-width covers the exact length") {
    std::mt19937_64 rng(33);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (bool stratified : {true, false}) {
        int inside = 0;
        for (int trial = 0; trial < 500; ++trial) {
            std::vector<Ball> balls;
            const int n = 1 + static_cast<int>(unit(rng) * 8);
            for (int i = 0; i < n; ++i) balls.push_back({random_point(rng, 1, 10.0), 2.0 * unit(rng)});
            const double exact = union_volume(balls, 10.0, 1, ExactOneDim{}).estimate;
            const auto mc = union_volume(balls, 10.0, 1, MonteCarloVolume{4000, static_cast<std::uint64_t>(trial), stratified});
            inside += std::abs(mc.estimate - exact) <= mc.half_width;
        }
        CAPTURE(stratified);
        CHECK(inside >= 490);
    }
}
