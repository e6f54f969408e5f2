#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "spatialmut/process.hpp"

using namespace spatialmut;

namespace {

ModelParams params_of(int d, double L, double alpha, std::vector<double> mu) {
    ModelParams p;
    p.d = d;
    p.L = L;
    p.alpha = alpha;
    p.K = static_cast<int>(mu.size());
    p.mu = std::move(mu);
    return p;
}

}  // namespace

TEST_CASE("acceptance rule examples") {
    const double alpha = 1.0;
    const MutationEvent type1{1, TorusPoint({5.0}, 10.0), 2.0, true};
    const MutationEvent type2{2, TorusPoint({5.0}, 10.0), 2.0, true};
    CHECK(accept_candidate(type1, {}, alpha));
    CHECK_FALSE(accept_candidate(type2, {}, alpha));

    const std::vector<MutationEvent> one_ball{{1, TorusPoint({4.5}, 10.0), 0.0, true}};
    CHECK(accept_candidate(type2, one_ball, alpha));
    CHECK_FALSE(accept_candidate(type1, one_ball, alpha));

    auto nested = one_ball;
    nested.push_back({2, TorusPoint({5.2}, 10.0), 1.0, true});
    CHECK_FALSE(accept_candidate(type2, nested, alpha));
    CHECK(accept_candidate(MutationEvent{3, TorusPoint({5.0}, 10.0), 2.0, true}, nested, alpha));
}

TEST_CASE("parameter validation") {
    CHECK_NOTHROW(params_of(1, 10.0, 1.0, {0.1, 0.2}).validate());
    CHECK_THROWS_AS(params_of(4, 10.0, 1.0, {0.1}).validate(), InvalidArgumentError);
    CHECK_THROWS_AS(params_of(1, 0.0, 1.0, {0.1}).validate(), InvalidArgumentError);
    CHECK_THROWS_AS(params_of(1, 10.0, -1.0, {0.1}).validate(), InvalidArgumentError);
    CHECK_THROWS_AS(params_of(1, 10.0, 1.0, {0.0}).validate(), InvalidArgumentError);
    auto short_mu = params_of(1, 10.0, 1.0, {0.1});
    short_mu.K = 2;
    CHECK_THROWS_AS(short_mu.validate(), InvalidArgumentError);
    CHECK(params_of(2, 3.0, 1.0, {0.1}).volume() == doctest::Approx(9.0).epsilon(1e-12));
    CHECK_FALSE(params_of(1, 10.0, 1.0, {0.2, 0.1}).rates_nondecreasing());
}

TEST_CASE("replicates are deterministic in their seed") {
    const auto p = params_of(2, 20.0, 0.5, {0.001, 0.01, 0.1});
    const auto a = simulate_replicate(p, ReplicateSeed{77, 3});
    const auto b = simulate_replicate(p, ReplicateSeed{77, 3});
    CHECK(a == b);
    CHECK(a.seed == ReplicateSeed{77, 3});
    const auto c = simulate_replicate(p, ReplicateSeed{77, 4});
    CHECK(a.sigma != c.sigma);
    const auto e = simulate_replicate(p, ReplicateSeed{78, 3});
    CHECK(a.sigma != e.sigma);
}

TEST_CASE("completed records satisfy the structural invariants") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 300; ++trial) {
        const int d = 1 + trial % 3;
        const int K = 1 + (trial / 3) % 4;
        const double L = 2.0 + 10.0 * unit(rng);
        const double N = std::pow(L, d);
        std::vector<double> mu;
        for (int j = 0; j < K; ++j) mu.push_back(std::exp(std::log(1.0 / N) + 3.0 * unit(rng)));
        const auto p = params_of(d, L, 0.2 + unit(rng), mu);
        const auto r = simulate_replicate(p, ReplicateSeed{static_cast<std::uint64_t>(trial), 0});

        REQUIRE(r.sigma.size() == static_cast<std::size_t>(K));
        REQUIRE(r.sigma2.size() == static_cast<std::size_t>(K - 1));
        REQUIRE(r.sigma[0] > 0.0);
        for (int j = 1; j < K; ++j) REQUIRE(r.sigma[j] > r.sigma[j - 1]);
        for (int j = 0; j + 1 < K; ++j) {
            if (r.sigma2[j]) {
                REQUIRE(*r.sigma2[j] > r.sigma[j]);
                REQUIRE(*r.sigma2[j] <= r.sigma[K - 1]);
            }
        }
        for (int i = 1; i <= K; ++i) {
            for (int j = i + 1; j <= K; ++j) {
                REQUIRE(r.distance(i, j) <= max_torus_distance(d, L) + 1e-12);
                REQUIRE(r.distance(i, j) == doctest::Approx(torus_distance(r.first_locations[i - 1], r.first_locations[j - 1])));
            }
        }
        for (int j = 0; j < K; ++j) {
            REQUIRE(r.counts[j].generated == r.counts[j].accepted + r.counts[j].rejected);
            REQUIRE(r.counts[j].accepted >= 1);
        }
        // every accepted event respected the thinning rule against earlier acceptances
        for (std::size_t e = 0; e < r.accepted_events.size(); ++e) {
            const auto& ev = r.accepted_events[e];
            const std::span<const MutationEvent> before(r.accepted_events.data(), e);
            REQUIRE(oracle::brute_level(ev.origin.coords(), ev.time, before, p.alpha) == ev.mtype - 1);
            if (e > 0) REQUIRE(ev.time >= r.accepted_events[e - 1].time);
        }
        REQUIRE(r.accepted_events.back().mtype == K);
        REQUIRE(r.accepted_events.back().time == r.sigma[K - 1]);
    }
}

TEST_CASE("level sets are nested") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const int d = 1 + trial % 3;
        const auto p = params_of(d, 6.0, 0.5, {0.002, 0.05, 0.3, 1.0});
        const auto events = simulate_events(p, ReplicateSeed{5, static_cast<std::uint32_t>(trial)}, 12.0);
        for (int probe = 0; probe < 1000; ++probe) {
            std::array<double, 3> x{6.0 * unit(rng), 6.0 * unit(rng), 6.0 * unit(rng)};
            const std::span<const double> xs(x.data(), static_cast<std::size_t>(d));
            const double t = 12.0 * unit(rng);
            const int level = oracle::brute_level(xs, t, events, p.alpha);
            // each level j >= 1 at (x, t) is witnessed by every lower type
            for (int j = 1; j < level; ++j) {
                bool witnessed = false;
                for (const auto& e : events) {
                    if (e.mtype == j && e.time <= t && oracle::torus_distance(xs, e.origin.coords(), 6.0) <= p.alpha * (t - e.time)) {
                        witnessed = true;
                        break;
                    }
                }
                REQUIRE(witnessed);
            }
        }
    }
}

TEST_CASE("first arrival is exponential with rate N mu_1") {
    const auto p = params_of(1, 100.0, 1.0, {1e-3});
    double sum = 0.0;
    const std::uint32_t m = 100000;
    for (std::uint32_t i = 0; i < m; ++i) {
        const auto r = simulate_replicate(p, ReplicateSeed{2024, i});
        sum += p.volume() * p.mu[0] * r.sigma[0];
    }
    CHECK(sum / m >= 0.99);
    CHECK(sum / m <= 1.01);
}

TEST_CASE("volume snapshots") {
    const auto p = params_of(1, 100.0, 1.0, {1e-4, 1e-6});
    const ReplicateSeed seed{31, 0};
    const auto record = simulate_replicate(p, seed);
    const double s1 = record.sigma[0];
    const std::vector<double> times{0.5 * s1, s1 + 3.0, s1 + 10.0};
    const auto events = simulate_events(p, seed, times.back());
    int type1_before = 0;
    for (const auto& e : events) type1_before += e.mtype == 1 && e.time <= times.back();
    REQUIRE(type1_before == 1);

    const auto snap = volume_snapshot(p, seed, times, 1);
    REQUIRE(snap.size() == 3);
    CHECK(snap[0].estimate == 0.0);
    CHECK(snap[1].estimate == doctest::Approx(2.0 * 3.0).epsilon(1e-12));
    CHECK(snap[2].estimate == doctest::Approx(2.0 * 10.0).epsilon(1e-12));
    CHECK(snap[1].half_width == 0.0);
    CHECK(volume_snapshot(p, seed, times, 2)[1].estimate == 0.0);

    const std::vector<double> unsorted{2.0, 1.0};
    CHECK_THROWS_AS(volume_snapshot(p, seed, unsorted, 1), InvalidArgumentError);
}

TEST_CASE("guards stop runaway replicates") {
    const auto p = params_of(1, 100.0, 1.0, {1e-4, 1e-12});
    Guards few_events;
    few_events.max_events = 50;
    try {
        simulate_replicate(p, 1, few_events);
        FAIL("expected a resource limit");
    } catch (const ResourceLimitError& e) {
        REQUIRE(e.counts.size() == 2);
        std::uint64_t total = 0;
        for (const auto& c : e.counts) total += c.generated;
        CHECK(total <= 50);
    }
    Guards short_time;
    short_time.max_time = 1.0;
    CHECK_THROWS_AS(simulate_replicate(p, 1, short_time), ResourceLimitError);
}
