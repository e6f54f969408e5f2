#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "spatialmut/errors.hpp"
#include "spatialmut/geometry.hpp"

namespace spatialmut {

/// Concrete model: torus [0, L]^d with volume N = L^d, spread rate alpha,
/// per-volume mutation rates mu[0..K-1] for types 1..K, and target type K.
struct ModelParams {
    int d = 1;
    double L = 1.0;
    double alpha = 1.0;
    std::vector<double> mu;
    int K = 1;

    double volume() const;
    /// mu_j for 1-based type j.
    double mu_of(int j) const { return mu.at(static_cast<std::size_t>(j - 1)); }

    /// Throws InvalidArgumentError on a malformed tuple.
    void validate() const;
    /// Advisory only: false if mu_1..mu_K is not nondecreasing.
    bool rates_nondecreasing() const;
};

struct Guards {
    std::uint64_t max_events = 10'000'000;  // candidates generated, all types
    double max_time = 1.0e6;
};

struct ReplicateSeed {
    std::uint64_t master = 0;
    std::uint32_t index = 0;

    friend bool operator==(const ReplicateSeed&, const ReplicateSeed&) = default;
};

struct CandidateCounts {
    std::uint64_t generated = 0;
    std::uint64_t accepted = 0;
    std::uint64_t rejected = 0;

    friend bool operator==(const CandidateCounts&, const CandidateCounts&) = default;
};

/// Output of one replicate. Vectors indexed by type - 1.
struct PassageRecord {
    std::vector<double> sigma;                 // sigma_1..sigma_K
    std::vector<std::optional<double>> sigma2;  // sigma_j^(2), j < K; nullopt = censored at sigma_K
    std::vector<TorusPoint> first_locations;   // origin of the first type-j mutation
    std::map<std::pair<int, int>, double> distances;  // D_{i,j}, 1 <= i < j <= K
    std::vector<CandidateCounts> counts;
    std::vector<MutationEvent> accepted_events;  // in acceptance order
    ReplicateSeed seed;

    double distance(int i, int j) const { return distances.at({i, j}); }

    friend bool operator==(const PassageRecord&, const PassageRecord&) = default;
};

/// Thrown when a replicate exceeds its guards; carries what was done so far.
struct ResourceLimitError : Error {
    ResourceLimitError(const std::string& what, std::vector<CandidateCounts> partial, double reached_time)
        : Error(what), counts(std::move(partial)), time(reached_time) {}
    std::vector<CandidateCounts> counts;
    double time;
};

/// Thinning rule: a type-j candidate becomes a mutation iff it lands where
/// the current level is exactly j - 1.
bool accept_candidate(const MutationEvent& candidate, std::span<const MutationEvent> log, double alpha);

/// Runs the event-driven simulation until the first accepted type-K event.
///
/// Each type j has its own homogeneous Poisson stream of candidates with
/// temporal rate N * mu_j and uniform locations, drawn from counter-based
/// substreams keyed by (seed.master, seed.index, j). The stream of type j
/// is started at sigma_{j-1} (time 0 for type 1): before that every type-j
/// candidate is rejected, and by memorylessness the stream restarted at
/// that stopping time has the same law. Candidate counts therefore cover
/// the active period of each stream.
///
/// Equal candidate times are resolved by lower type first.
PassageRecord simulate_replicate(const ModelParams& params, ReplicateSeed seed, const Guards& guards = {});

inline PassageRecord simulate_replicate(const ModelParams& params, std::uint64_t seed, const Guards& guards = {}) {
    return simulate_replicate(params, ReplicateSeed{seed, 0}, guards);
}

struct VolumeSample {
    double time = 0.0;
    double estimate = 0.0;
    double half_width = 0.0;
};

/// Simulates one replicate up to max(times) (not stopping at sigma_K) and
/// measures Y_level(t), the volume of the region of type >= level, at each
/// requested time. Exact in d = 1, Monte Carlo otherwise.
std::vector<VolumeSample> volume_snapshot(const ModelParams& params, ReplicateSeed seed, std::span<const double> times,
                                          int level, const Guards& guards = {},
                                          std::uint64_t mc_samples = 200000);

/// Every accepted event of a replicate run up to time `until`, without
/// stopping at sigma_K. Used for event maps and nesting checks.
std::vector<MutationEvent> simulate_events(const ModelParams& params, ReplicateSeed seed, double until,
                                           const Guards& guards = {});

}  // namespace spatialmut
