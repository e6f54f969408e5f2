#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spatialmut/stats.hpp"

namespace spatialmut {

/// Malformed experiment file. The message names the offending key path
/// (or line/column for syntax errors).
struct ConfigError : Error {
    using Error::Error;
};

/// Parsed experiment file (strict schema; unknown keys are rejected):
///
///   model   {d, L, alpha, mu: [..], K}                       required
///   family  {a: ["p/q", ..], b: "p/q", c: [x | "inf", ..]}   optional
///   law     {kind: exp1|weibull|hypoexponential|distance,
///            k, rates, d, scale}                             optional
///   run     {replicates, master_seed, workers, ks_threshold,
///            guards {max_events, max_time}}                  required
///   targets ["sigma_k_law" | "sigma1_exact" |
///            {kind: distance_law, j, k} |
///            {kind: volume_diag, level, times, replicates, tolerance}]
///   output  {dir, formats: [csv, json, events]}              optional
struct ExperimentConfig {
    ValidationConfig validation;
    std::string output_dir;
    std::vector<std::string> formats{"csv", "json"};
    nlohmann::json resolved;  // normalized document, echoed into meta.json

    bool wants(const std::string& format) const;
};

ExperimentConfig parse_experiment(const nlohmann::json& doc);
ExperimentConfig parse_experiment_text(const std::string& text);
ExperimentConfig load_experiment(const std::filesystem::path& path);

/// Re-derives `resolved` after fields were overridden programmatically.
void refresh_resolved(ExperimentConfig& config);

ScalingFamily parse_family(const nlohmann::json& family, int d, int k);
ScaledLaw parse_law(const nlohmann::json& law, int d);

}  // namespace spatialmut
