#include "spatialmut/process.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "spatialmut/rng.hpp"

namespace spatialmut {

double ModelParams::volume() const { return std::pow(L, d); }

void ModelParams::validate() const {
    if (d < 1 || d > 3) throw InvalidArgumentError("d must be 1, 2 or 3");
    if (!(L > 0.0) || !std::isfinite(L)) throw InvalidArgumentError("L must be positive and finite");
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidArgumentError("alpha must be positive and finite");
    if (K < 1) throw InvalidArgumentError("K must be at least 1");
    if (mu.size() < static_cast<std::size_t>(K)) throw InvalidArgumentError("mu must list at least K rates");
    for (double m : mu) {
        if (!(m > 0.0) || !std::isfinite(m)) throw InvalidArgumentError("every mutation rate must be positive and finite");
    }
}

bool ModelParams::rates_nondecreasing() const {
    for (int j = 1; j < K; ++j) {
        if (mu[j] < mu[j - 1]) return false;
    }
    return true;
}

bool accept_candidate(const MutationEvent& candidate, std::span<const MutationEvent> log, double alpha) {
    return covered_level(candidate.origin, candidate.time, log, alpha) == candidate.mtype - 1;
}

namespace {

class Engine {
public:
    Engine(const ModelParams& params, ReplicateSeed seed, const Guards& guards)
        : params_(params),
          seed_(seed),
          guards_(guards),
          index_(params.L, params.d, params.alpha) {
        params.validate();
        if (guards.max_events == 0 || !(guards.max_time > 0.0)) throw InvalidArgumentError("guards must be positive");
        const double volume = params.volume();
        const auto k = static_cast<std::size_t>(params.K);
        record_.sigma.assign(k, std::numeric_limits<double>::quiet_NaN());
        record_.sigma2.assign(k - 1, std::nullopt);
        record_.first_locations.assign(k, TorusPoint{});
        record_.counts.assign(k, {});
        record_.seed = seed;
        streams_.reserve(k);
        for (int j = 1; j <= params.K; ++j) {
            const auto type = static_cast<std::uint32_t>(j);
            streams_.push_back(Stream{Substream({seed.master, seed.index, type, StreamPurpose::ArrivalTime}),
                                      Substream({seed.master, seed.index, type, StreamPurpose::Location}),
                                      volume * params.mu_of(j), kNever});
        }
        activate(0, 0.0);
    }

    /// Processes candidates until `stop` returns true after an acceptance, or
    /// the next candidate lies beyond `horizon`. `before` sees each candidate
    /// time before it is processed.
    void run(double horizon, const std::function<bool()>& stop, const std::function<void(double)>& before) {
        while (true) {
            std::size_t j = 0;
            for (std::size_t i = 1; i < streams_.size(); ++i) {
                if (streams_[i].next_time < streams_[j].next_time) j = i;  // strict: lower type wins ties
            }
            const double t = streams_[j].next_time;
            if (t > horizon) return;
            if (before) before(t);
            if (t > guards_.max_time) {
                throw ResourceLimitError("candidate time exceeded max_time guard (" + std::to_string(guards_.max_time) + ")",
                                         record_.counts, t);
            }
            if (generated_ >= guards_.max_events) {
                throw ResourceLimitError("candidate count exceeded max_events guard (" + std::to_string(guards_.max_events) + ")",
                                         record_.counts, t);
            }
            if (process(j, t) && stop && stop()) return;
        }
    }

    PassageRecord& record() { return record_; }
    const GrowingBallIndex& index() const { return index_; }

    void finish_distances() {
        for (int i = 1; i <= params_.K; ++i) {
            for (int j = i + 1; j <= params_.K; ++j) {
                record_.distances[{i, j}] = torus_distance(record_.first_locations[i - 1], record_.first_locations[j - 1]);
            }
        }
    }

private:
    static constexpr double kNever = std::numeric_limits<double>::infinity();

    struct Stream {
        Substream arrivals;
        Substream locations;
        double rate;
        double next_time;
    };

    void activate(std::size_t j, double from) { streams_[j].next_time = from + streams_[j].arrivals.exponential(streams_[j].rate); }

    // Returns true when the candidate was accepted.
    bool process(std::size_t j, double t) {
        auto& stream = streams_[j];
        std::array<double, 3> coords{};
        for (int i = 0; i < params_.d; ++i) coords[i] = stream.locations.uniform() * params_.L;
        const TorusPoint x(std::span<const double>(coords.data(), static_cast<std::size_t>(params_.d)), params_.L);
        stream.next_time = t + stream.arrivals.exponential(stream.rate);
        ++generated_;

        const int type = static_cast<int>(j) + 1;
        auto& counts = record_.counts[j];
        ++counts.generated;
        const int level = index_.level(x, t);

        const bool seen = counts.accepted > 0;
        if (seen && j < record_.sigma2.size() && !record_.sigma2[j] && level >= type - 1) record_.sigma2[j] = t;

        if (level != type - 1) {
            ++counts.rejected;
            return false;
        }
        ++counts.accepted;
        MutationEvent ev{type, x, t, true};
        index_.add(ev);
        record_.accepted_events.push_back(ev);
        if (!seen) {
            record_.sigma[j] = t;
            record_.first_locations[j] = x;
            if (j + 1 < streams_.size()) activate(j + 1, t);
        }
        return true;
    }

    const ModelParams& params_;
    ReplicateSeed seed_;
    Guards guards_;
    GrowingBallIndex index_;
    std::vector<Stream> streams_;
    PassageRecord record_;
    std::uint64_t generated_ = 0;
};

}  // namespace

PassageRecord simulate_replicate(const ModelParams& params, ReplicateSeed seed, const Guards& guards) {
    Engine engine(params, seed, guards);
    auto& rec = engine.record();
    const auto last = static_cast<std::size_t>(params.K - 1);
    engine.run(std::numeric_limits<double>::infinity(), [&] { return rec.counts[last].accepted > 0; }, {});
    engine.finish_distances();
    return std::move(rec);
}

std::vector<MutationEvent> simulate_events(const ModelParams& params, ReplicateSeed seed, double until, const Guards& guards) {
    Engine engine(params, seed, guards);
    engine.run(until, {}, {});
    return std::move(engine.record().accepted_events);
}

std::vector<VolumeSample> volume_snapshot(const ModelParams& params, ReplicateSeed seed, std::span<const double> times,
                                          int level, const Guards& guards, std::uint64_t mc_samples) {
    if (!std::is_sorted(times.begin(), times.end())) throw InvalidArgumentError("snapshot times must be sorted ascending");
    if (level < 1 || level > params.K) throw InvalidArgumentError("level must be within 1..K");
    std::vector<VolumeSample> out;
    if (times.empty()) return out;
    if (times.front() < 0.0) throw InvalidArgumentError("snapshot times must be nonnegative");

    Engine engine(params, seed, guards);
    std::size_t next = 0;
    auto measure = [&](double q) {
        std::vector<Ball> balls;
        for (const auto& ev : engine.record().accepted_events) {
            if (ev.mtype >= level && ev.time <= q) balls.push_back({ev.origin, params.alpha * (q - ev.time)});
        }
        VolumeMethod method = ExactOneDim{};
        if (params.d != 1) {
            method = MonteCarloVolume{mc_samples, seed.master ^ (std::uint64_t{seed.index} << 32) ^ out.size(), true};
        }
        const auto v = union_volume(balls, params.L, params.d, method);
        out.push_back({q, v.estimate, v.half_width});
    };
    auto flush_before = [&](double t) {
        while (next < times.size() && times[next] < t) measure(times[next++]);
    };
    engine.run(times.back(), {}, flush_before);
    while (next < times.size()) measure(times[next++]);
    return out;
}

}  // namespace spatialmut
