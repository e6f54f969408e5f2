#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spatialmut/asymptotics.hpp"
#include "spatialmut/process.hpp"
#include "spatialmut/regimes.hpp"

namespace spatialmut {

/// One-sample Kolmogorov-Smirnov distance of an ascending sample against a
/// continuous CDF: max_i max(i/M - F(x_i), F(x_i) - (i-1)/M).
double ks_statistic(std::span<const double> sorted_sample, const std::function<double(double)>& cdf);
double ks_statistic(std::span<const double> sorted_sample, const LimitLaw& law);

/// Two-sample KS distance; inputs need not be sorted.
double ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Asymptotic 1% critical value of the one-sample statistic, 1.63/sqrt(M).
double ks_critical_value(std::size_t m);

/// Runs replicates 0..count-1 of (params, master_seed) on `workers` threads.
/// Output is indexed by replicate, so it does not depend on `workers`.
std::vector<PassageRecord> run_replicates(const ModelParams& params, std::uint64_t master_seed, std::uint32_t count,
                                          const Guards& guards = {}, unsigned workers = 1);

struct VolumeRow {
    double time = 0.0;
    double mean_ratio = 1.0;  // mean of Y_k(t)/v_k(t) across replicates
    double ci_half_width = 0.0;  // 99%, from the sample standard error
    bool degenerate = false;  // t = 0, ratio fixed to 1
};

/// Averages volume_snapshot over `replicates` runs. Every time must satisfy
/// t <= N^(1/d)/(2 alpha) (balls may not wrap onto themselves), otherwise
/// HypothesisViolationError.
std::vector<VolumeRow> volume_diagnostic(const ModelParams& params, int k, std::span<const double> times,
                                         std::uint32_t replicates, std::uint64_t master_seed = 0,
                                         const Guards& guards = {}, unsigned workers = 1);

enum class TargetKind { SigmaLaw, DistanceLaw, VolumeDiagnostic, SigmaOneExact };

struct Target {
    TargetKind kind = TargetKind::SigmaLaw;
    int j = 1;  // DistanceLaw: D_{j,k}
    int k = 0;  // DistanceLaw / VolumeDiagnostic level; 0 means K (or 1 for volume)
    std::vector<double> times;  // VolumeDiagnostic, absolute time units
    std::uint32_t replicates = 0;  // VolumeDiagnostic; 0 means the run's M
    double tolerance = 0.1;  // VolumeDiagnostic: |mean ratio - 1| allowed
};

/// Law plus the time unit that sigma_K is divided by.
struct ScaledLaw {
    LimitLaw law;
    std::string scale_name;  // "1/(N*mu_1)" or "beta_<n>"
};

struct ValidationConfig {
    ModelParams params;
    std::optional<ScalingFamily> family;
    std::optional<ScaledLaw> law;  // overrides the classified law when set
    std::uint32_t replicates = 0;
    std::uint64_t master_seed = 0;
    std::vector<Target> targets;
    double ks_threshold = 0.05;
    unsigned workers = 1;
    Guards guards;
};

struct TargetReport {
    std::string name;
    std::size_t sample_size = 0;
    std::string rescale_name;
    double rescale_factor = 1.0;
    std::string law_name;
    std::optional<double> ks;
    std::optional<double> critical_value;
    std::optional<double> threshold;
    bool pass = false;
    std::size_t sigma2_censored = 0;  // second arrival not seen by sigma_K
    std::size_t sigma2_observed = 0;  // second type-j arrival before sigma_K
    bool censoring_warning = false;
    std::vector<VolumeRow> volume_rows;
};

struct ValidationReport {
    std::vector<TargetReport> targets;
    std::uint64_t master_seed = 0;
    std::uint32_t replicates = 0;
    std::string generator;
    double wall_time_seconds = 0.0;
    std::vector<PassageRecord> records;  // not part of the JSON

    bool passed() const;
};

/// Time unit for sigma_K under `scale_name` at concrete parameters.
double time_scale(const ModelParams& params, const std::string& scale_name);

/// Resolves the law for sigma_K: the explicit override, else the regime of
/// the family. NoLawError when neither yields a law.
ScaledLaw resolve_law(const ValidationConfig& config);

ValidationReport run_validation(const ValidationConfig& config);

nlohmann::json to_json(const ValidationReport& report);
nlohmann::json to_json(const Regime& regime);

/// Replicate table: replicate_index, sigma_1..sigma_K, sigma2_1..sigma2_{K-1}
/// (NA when censored), D_i_j for i < j, accepted_j, rejected_j.
void write_replicates_csv(std::ostream& out, std::span<const PassageRecord> records, int K);
/// Accepted events: replicate_index, mtype, time, x1..xd.
void write_events_csv(std::ostream& out, std::span<const PassageRecord> records, int d);

/// Shortest decimal form that round-trips a double (17 significant digits).
std::string format_double(double x);

}  // namespace spatialmut
