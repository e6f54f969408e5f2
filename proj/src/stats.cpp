#include "spatialmut/stats.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <mutex>
#include <ostream>
#include <thread>

#include "spatialmut/rng.hpp"

namespace spatialmut {

namespace {

constexpr double kZ99 = 2.5758293035489004;
constexpr double kCensoringWarning = 0.05;

// Calls task(i) for i in [0, count) on up to `workers` threads; rethrows the
// exception of the lowest failing index.
template <typename Task>
void parallel_for(std::uint32_t count, unsigned workers, Task&& task) {
    workers = std::max(1u, std::min<unsigned>(workers, count));
    if (workers == 1) {
        for (std::uint32_t i = 0; i < count; ++i) task(i);
        return;
    }
    std::atomic<std::uint32_t> next{0};
    std::mutex failure_mutex;
    std::exception_ptr failure;
    std::uint32_t failed_index = count;
    auto body = [&] {
        while (true) {
            const std::uint32_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                task(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (i < failed_index) {
                    failed_index = i;
                    failure = std::current_exception();
                }
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(body);
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace

double ks_statistic(std::span<const double> sorted_sample, const std::function<double(double)>& cdf) {
    if (sorted_sample.empty()) throw InvalidArgumentError("KS statistic needs a nonempty sample");
    const double m = static_cast<double>(sorted_sample.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < sorted_sample.size(); ++i) {
        const double x = sorted_sample[i];
        if (std::isnan(x)) throw InvalidArgumentError("sample contains NaN");
        if (i > 0 && x < sorted_sample[i - 1]) throw InvalidArgumentError("sample must be sorted ascending");
        const double f = cdf(x);
        worst = std::max({worst, (static_cast<double>(i) + 1.0) / m - f, f - static_cast<double>(i) / m});
    }
    return std::clamp(worst, 0.0, 1.0);
}

double ks_statistic(std::span<const double> sorted_sample, const LimitLaw& law) {
    return ks_statistic(sorted_sample, [&](double x) { return law.cdf(x); });
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw InvalidArgumentError("two-sample KS needs nonempty samples");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0;
    std::size_t j = 0;
    double worst = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        worst = std::max(worst, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return worst;
}

double ks_critical_value(std::size_t m) {
    if (m == 0) throw InvalidArgumentError("critical value needs a positive sample size");
    return 1.63 / std::sqrt(static_cast<double>(m));
}

std::vector<PassageRecord> run_replicates(const ModelParams& params, std::uint64_t master_seed, std::uint32_t count,
                                          const Guards& guards, unsigned workers) {
    params.validate();
    std::vector<PassageRecord> out(count);
    parallel_for(count, workers, [&](std::uint32_t i) { out[i] = simulate_replicate(params, {master_seed, i}, guards); });
    return out;
}

std::vector<VolumeRow> volume_diagnostic(const ModelParams& params, int k, std::span<const double> times,
                                         std::uint32_t replicates, std::uint64_t master_seed, const Guards& guards,
                                         unsigned workers) {
    params.validate();
    if (replicates == 0) throw InvalidArgumentError("volume diagnostic needs at least one replicate");
    const double limit = std::pow(params.volume(), 1.0 / params.d) / (2.0 * params.alpha);
    for (double t : times) {
        if (t > limit) {
            throw HypothesisViolationError("time " + format_double(t) + " exceeds N^(1/d)/(2 alpha) = " + format_double(limit));
        }
    }
    std::vector<std::vector<VolumeSample>> runs(replicates);
    parallel_for(replicates, workers,
                 [&](std::uint32_t i) { runs[i] = volume_snapshot(params, {master_seed, i}, times, k, guards); });

    std::vector<VolumeRow> rows;
    for (std::size_t q = 0; q < times.size(); ++q) {
        VolumeRow row;
        row.time = times[q];
        if (times[q] == 0.0) {
            row.degenerate = true;
            rows.push_back(row);
            continue;
        }
        const double expected = v_k(params, k, times[q]);
        double sum = 0.0;
        double sum_sq = 0.0;
        for (const auto& run : runs) {
            const double r = run[q].estimate / expected;
            sum += r;
            sum_sq += r * r;
        }
        const double n = static_cast<double>(replicates);
        row.mean_ratio = sum / n;
        const double var = replicates > 1 ? std::max(0.0, (sum_sq - n * row.mean_ratio * row.mean_ratio) / (n - 1.0)) : 0.0;
        row.ci_half_width = kZ99 * std::sqrt(var / n);
        rows.push_back(row);
    }
    return rows;
}

bool ValidationReport::passed() const {
    return std::all_of(targets.begin(), targets.end(), [](const TargetReport& t) { return t.pass; });
}

double time_scale(const ModelParams& params, const std::string& scale_name) {
    if (scale_name == "1/(N*mu_1)") return 1.0 / (params.volume() * params.mu_of(1));
    if (scale_name.rfind("beta_", 0) == 0) {
        const int n = std::stoi(scale_name.substr(5));
        return beta_k(params, n);
    }
    throw InvalidArgumentError("unknown time scale '" + scale_name + "'");
}

ScaledLaw resolve_law(const ValidationConfig& config) {
    if (config.law) return *config.law;
    if (!config.family) throw NoLawError("no family and no explicit law: nothing to compare sigma_K against");
    Regime regime;
    try {
        regime = classify(*config.family);
    } catch (const MissingLimitsError&) {
        // Finite-N proxy for the limits: c_i = mu_i/mu_1, infinite where mu_i grows faster.
        ScalingFamily with_limits = *config.family;
        std::vector<double> c;
        for (int i = 1; i <= with_limits.k; ++i) {
            const bool faster = with_limits.a[static_cast<std::size_t>(i - 1)] > with_limits.a[0];
            c.push_back(faster ? std::numeric_limits<double>::infinity() : config.params.mu_of(i) / config.params.mu_of(1));
        }
        with_limits.c = std::move(c);
        regime = classify(with_limits);
    }
    if (!regime.law || !regime.scale) {
        throw NoLawError("regime " + std::string(to_string(regime.kind)) + " has no limit law (" + regime.reason + ")");
    }
    return {*regime.law, regime.scale->name};
}

namespace {

TargetReport ks_target(std::string name, std::vector<double> sample, const LimitLaw& law, std::string rescale_name,
                       double factor, double user_threshold) {
    TargetReport rep;
    rep.name = std::move(name);
    rep.rescale_name = std::move(rescale_name);
    rep.rescale_factor = factor;
    rep.law_name = law.name();
    rep.sample_size = sample.size();
    if (sample.empty()) return rep;
    for (double& x : sample) x /= factor;
    std::sort(sample.begin(), sample.end());
    rep.ks = ks_statistic(sample, law);
    rep.critical_value = ks_critical_value(sample.size());
    rep.threshold = std::max(user_threshold, *rep.critical_value);
    rep.pass = *rep.ks <= *rep.threshold;
    return rep;
}

}  // namespace

ValidationReport run_validation(const ValidationConfig& config) {
    config.params.validate();
    if (config.replicates == 0) throw InvalidArgumentError("replicates must be positive");
    if (!(config.ks_threshold > 0.0)) throw InvalidArgumentError("ks_threshold must be positive");
    if (config.targets.empty()) throw InvalidArgumentError("no validation targets");
    const auto& p = config.params;
    const auto needs_ks = std::any_of(config.targets.begin(), config.targets.end(),
                                      [](const Target& t) { return t.kind != TargetKind::VolumeDiagnostic; });
    if (needs_ks && config.replicates < 100) throw InvalidArgumentError("KS targets need at least 100 replicates");

    std::optional<ScaledLaw> sigma_law;
    for (const auto& t : config.targets) {
        if (t.kind == TargetKind::SigmaLaw && !sigma_law) sigma_law = resolve_law(config);
    }

    const auto start = std::chrono::steady_clock::now();
    ValidationReport report;
    report.master_seed = config.master_seed;
    report.replicates = config.replicates;
    report.generator = std::string(Philox4x32::name);
    if (needs_ks) report.records = run_replicates(p, config.master_seed, config.replicates, config.guards, config.workers);
    const auto& records = report.records;

    for (const auto& t : config.targets) {
        switch (t.kind) {
            case TargetKind::SigmaLaw: {
                std::vector<double> sample;
                for (const auto& r : records) sample.push_back(r.sigma.back());
                report.targets.push_back(ks_target("sigma_" + std::to_string(p.K) + "_law", std::move(sample), sigma_law->law,
                                                   sigma_law->scale_name, time_scale(p, sigma_law->scale_name),
                                                   config.ks_threshold));
                break;
            }
            case TargetKind::SigmaOneExact: {
                std::vector<double> sample;
                for (const auto& r : records) sample.push_back(r.sigma.front());
                report.targets.push_back(ks_target("sigma1_exact", std::move(sample), LimitLaw::exp1(), "1/(N*mu_1)",
                                                   time_scale(p, "1/(N*mu_1)"), config.ks_threshold));
                break;
            }
            case TargetKind::DistanceLaw: {
                const int j = t.j;
                const int k = t.k == 0 ? p.K : t.k;
                if (j < 1 || j >= k || k > p.K) throw InvalidArgumentError("distance target needs 1 <= j < k <= K");
                std::vector<double> sample;
                std::size_t censored = 0;
                std::size_t observed = 0;
                for (const auto& r : records) {
                    sample.push_back(r.distance(j, k));
                    if (r.sigma2[j - 1]) ++observed;
                    else ++censored;
                }
                auto rep = ks_target("distance_law(" + std::to_string(j) + "," + std::to_string(k) + ")", std::move(sample),
                                     LimitLaw::distance(p.d), "alpha*kappa_" + std::to_string(j + 1),
                                     p.alpha * kappa_j(p, j + 1), config.ks_threshold);
                rep.sigma2_censored = censored;
                rep.sigma2_observed = observed;
                rep.censoring_warning = static_cast<double>(observed) > kCensoringWarning * static_cast<double>(records.size());
                report.targets.push_back(std::move(rep));
                break;
            }
            case TargetKind::VolumeDiagnostic: {
                const int level = t.k == 0 ? 1 : t.k;
                const std::uint32_t reps = t.replicates == 0 ? config.replicates : t.replicates;
                TargetReport rep;
                rep.name = "volume_diag(" + std::to_string(level) + ")";
                rep.rescale_name = "v_" + std::to_string(level);
                rep.sample_size = reps;
                rep.volume_rows = volume_diagnostic(p, level, t.times, reps, config.master_seed, config.guards, config.workers);
                rep.pass = std::all_of(rep.volume_rows.begin(), rep.volume_rows.end(), [&](const VolumeRow& row) {
                    return row.degenerate || std::abs(row.mean_ratio - 1.0) <= t.tolerance;
                });
                report.targets.push_back(std::move(rep));
                break;
            }
        }
    }
    report.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

// ---------------------------------------------------------------------------
// Serialization

std::string format_double(double x) {
    if (std::isnan(x)) return "NA";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

nlohmann::json to_json(const ValidationReport& report) {
    nlohmann::json targets = nlohmann::json::array();
    for (const auto& t : report.targets) {
        nlohmann::json j{{"name", t.name},
                         {"sample_size", t.sample_size},
                         {"rescale", t.rescale_name},
                         {"rescale_factor", t.rescale_factor},
                         {"law", t.law_name},
                         {"pass", t.pass}};
        j["ks_statistic"] = t.ks ? nlohmann::json(*t.ks) : nlohmann::json(nullptr);
        j["critical_value_1pct"] = t.critical_value ? nlohmann::json(*t.critical_value) : nlohmann::json(nullptr);
        j["threshold"] = t.threshold ? nlohmann::json(*t.threshold) : nlohmann::json(nullptr);
        if (t.name.rfind("distance_law", 0) == 0) {
            j["sigma2_censored"] = t.sigma2_censored;
            j["sigma2_observed"] = t.sigma2_observed;
            j["censoring_warning"] = t.censoring_warning;
        }
        if (!t.volume_rows.empty()) {
            nlohmann::json rows = nlohmann::json::array();
            for (const auto& r : t.volume_rows) {
                rows.push_back({{"time", r.time}, {"mean_ratio", r.mean_ratio}, {"ci_half_width", r.ci_half_width},
                                {"degenerate", r.degenerate}});
            }
            j["volume_rows"] = rows;
        }
        targets.push_back(std::move(j));
    }
    return {{"targets", targets},
            {"pass", report.passed()},
            {"metadata",
             {{"master_seed", report.master_seed},
              {"replicates", report.replicates},
              {"generator", report.generator},
              {"wall_time_seconds", report.wall_time_seconds}}}};
}

nlohmann::json to_json(const Regime& regime) {
    nlohmann::json j{{"kind", to_string(regime.kind)}, {"reason", regime.reason}};
    j["l"] = regime.l ? nlohmann::json(*regime.l) : nlohmann::json(nullptr);
    j["scale"] = regime.scale ? nlohmann::json(regime.scale->name) : nlohmann::json(nullptr);
    j["scale_exponent"] = regime.scale ? nlohmann::json(to_string(regime.scale->exponent)) : nlohmann::json(nullptr);
    j["law"] = regime.law ? nlohmann::json(regime.law->name()) : nlohmann::json(nullptr);
    return j;
}

void write_replicates_csv(std::ostream& out, std::span<const PassageRecord> records, int K) {
    out << "replicate_index";
    for (int j = 1; j <= K; ++j) out << ",sigma_" << j;
    for (int j = 1; j < K; ++j) out << ",sigma2_" << j;
    for (int i = 1; i <= K; ++i)
        for (int j = i + 1; j <= K; ++j) out << ",D_" << i << "_" << j;
    for (int j = 1; j <= K; ++j) out << ",accepted_" << j;
    for (int j = 1; j <= K; ++j) out << ",rejected_" << j;
    out << "\n";
    for (const auto& r : records) {
        out << r.seed.index;
        for (double s : r.sigma) out << "," << format_double(s);
        for (const auto& s2 : r.sigma2) out << "," << (s2 ? format_double(*s2) : std::string("NA"));
        for (int i = 1; i <= K; ++i)
            for (int j = i + 1; j <= K; ++j) out << "," << format_double(r.distance(i, j));
        for (const auto& c : r.counts) out << "," << c.accepted;
        for (const auto& c : r.counts) out << "," << c.rejected;
        out << "\n";
    }
}

void write_events_csv(std::ostream& out, std::span<const PassageRecord> records, int d) {
    out << "replicate_index,mtype,time";
    for (int i = 1; i <= d; ++i) out << ",x" << i;
    out << "\n";
    for (const auto& r : records) {
        for (const auto& ev : r.accepted_events) {
            out << r.seed.index << "," << ev.mtype << "," << format_double(ev.time);
            for (double c : ev.origin.coords()) out << "," << format_double(c);
            out << "\n";
        }
    }
}

}  // namespace spatialmut
