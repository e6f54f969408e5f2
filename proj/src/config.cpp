#include "spatialmut/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace spatialmut {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw ConfigError(path + ": expected an object");
    for (const auto& [key, value] : obj.items()) {
        const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
        if (!known) throw ConfigError(path + "." + key + ": unknown key");
    }
}

const json& require(const json& obj, const char* key, const std::string& path) {
    if (!obj.contains(key)) throw ConfigError(path + "." + key + ": missing required key");
    return obj.at(key);
}

double number(const json& v, const std::string& path) {
    if (!v.is_number()) throw ConfigError(path + ": expected a number");
    return v.get<double>();
}

long long integer(const json& v, const std::string& path) {
    if (!v.is_number_integer()) throw ConfigError(path + ": expected an integer");
    return v.get<long long>();
}

// Numbers or the string "inf".
double extended_number(const json& v, const std::string& path) {
    if (v.is_string() && (v.get<std::string>() == "inf" || v.get<std::string>() == "Infinity")) {
        return std::numeric_limits<double>::infinity();
    }
    return number(v, path);
}

Rational rational(const json& v, const std::string& path) {
    try {
        if (v.is_number_integer()) return Rational(v.get<long long>());
        if (v.is_string()) return parse_rational(v.get<std::string>());
    } catch (const InvalidArgumentError& e) {
        throw ConfigError(path + ": " + e.what());
    }
    throw ConfigError(path + ": expected a rational as \"p/q\" or an integer");
}

std::string check_scale(const std::string& scale, const std::string& path) {
    if (scale == "1/(N*mu_1)") return scale;
    if (scale.rfind("beta_", 0) == 0 && scale.size() > 5 &&
        std::all_of(scale.begin() + 5, scale.end(), [](char c) { return c >= '0' && c <= '9'; })) {
        return scale;
    }
    throw ConfigError(path + ": scale must be \"1/(N*mu_1)\" or \"beta_<n>\"");
}

Target parse_target(const json& t, const std::string& path) {
    Target out;
    if (t.is_string()) {
        const auto name = t.get<std::string>();
        if (name == "sigma_k_law") out.kind = TargetKind::SigmaLaw;
        else if (name == "sigma1_exact") out.kind = TargetKind::SigmaOneExact;
        else throw ConfigError(path + ": unknown target '" + name + "'");
        return out;
    }
    check_keys(t, path, {"kind", "j", "k", "level", "times", "replicates", "tolerance"});
    const auto& kind = require(t, "kind", path);
    if (!kind.is_string()) throw ConfigError(path + ".kind: expected a string");
    const auto name = kind.get<std::string>();
    if (name == "sigma_k_law") {
        out.kind = TargetKind::SigmaLaw;
    } else if (name == "sigma1_exact") {
        out.kind = TargetKind::SigmaOneExact;
    } else if (name == "distance_law") {
        out.kind = TargetKind::DistanceLaw;
        out.j = static_cast<int>(integer(require(t, "j", path), path + ".j"));
        out.k = static_cast<int>(integer(require(t, "k", path), path + ".k"));
    } else if (name == "volume_diag") {
        out.kind = TargetKind::VolumeDiagnostic;
        if (t.contains("level")) out.k = static_cast<int>(integer(t["level"], path + ".level"));
        const auto& times = require(t, "times", path);
        if (!times.is_array()) throw ConfigError(path + ".times: expected an array");
        for (std::size_t i = 0; i < times.size(); ++i) out.times.push_back(number(times[i], path + ".times[" + std::to_string(i) + "]"));
        if (!std::is_sorted(out.times.begin(), out.times.end())) throw ConfigError(path + ".times: must be ascending");
        if (t.contains("replicates")) out.replicates = static_cast<std::uint32_t>(integer(t["replicates"], path + ".replicates"));
        if (t.contains("tolerance")) out.tolerance = number(t["tolerance"], path + ".tolerance");
    } else {
        throw ConfigError(path + ".kind: unknown target '" + name + "'");
    }
    return out;
}

json target_to_json(const Target& t) {
    switch (t.kind) {
        case TargetKind::SigmaLaw: return {{"kind", "sigma_k_law"}};
        case TargetKind::SigmaOneExact: return {{"kind", "sigma1_exact"}};
        case TargetKind::DistanceLaw: return {{"kind", "distance_law"}, {"j", t.j}, {"k", t.k}};
        case TargetKind::VolumeDiagnostic:
            return {{"kind", "volume_diag"}, {"level", t.k == 0 ? 1 : t.k}, {"times", t.times}, {"replicates", t.replicates},
                    {"tolerance", t.tolerance}};
    }
    return nullptr;
}

json extended_to_json(double x) { return std::isinf(x) ? json("inf") : json(x); }

}  // namespace

bool ExperimentConfig::wants(const std::string& format) const {
    return std::find(formats.begin(), formats.end(), format) != formats.end();
}

ScalingFamily parse_family(const json& family, int d, int k) {
    check_keys(family, "family", {"a", "b", "c"});
    ScalingFamily out;
    out.d = d;
    out.k = k;
    const auto& a = require(family, "a", "family");
    if (!a.is_array()) throw ConfigError("family.a: expected an array");
    for (std::size_t i = 0; i < a.size(); ++i) out.a.push_back(rational(a[i], "family.a[" + std::to_string(i) + "]"));
    out.b = rational(require(family, "b", "family"), "family.b");
    if (family.contains("c")) {
        const auto& c = family["c"];
        if (!c.is_array()) throw ConfigError("family.c: expected an array");
        std::vector<double> limits;
        for (std::size_t i = 0; i < c.size(); ++i) limits.push_back(extended_number(c[i], "family.c[" + std::to_string(i) + "]"));
        out.c = std::move(limits);
    }
    try {
        out.validate();
    } catch (const InvalidArgumentError& e) {
        throw ConfigError(std::string("family: ") + e.what());
    }
    return out;
}

ScaledLaw parse_law(const json& law, int d) {
    check_keys(law, "law", {"kind", "k", "rates", "d", "scale"});
    const auto& kind = require(law, "kind", "law");
    if (!kind.is_string()) throw ConfigError("law.kind: expected a string");
    const auto name = kind.get<std::string>();
    std::string scale = law.contains("scale") ? law["scale"].get<std::string>() : std::string();
    try {
        if (name == "exp1") {
            return {LimitLaw::exp1(), check_scale(scale.empty() ? "1/(N*mu_1)" : scale, "law.scale")};
        }
        if (name == "weibull") {
            const int k = static_cast<int>(integer(require(law, "k", "law"), "law.k"));
            return {LimitLaw::weibull(d, k), check_scale(scale.empty() ? "beta_" + std::to_string(k) : scale, "law.scale")};
        }
        if (name == "hypoexponential") {
            const auto& rates = require(law, "rates", "law");
            if (!rates.is_array()) throw ConfigError("law.rates: expected an array");
            std::vector<double> c;
            for (std::size_t i = 0; i < rates.size(); ++i) c.push_back(extended_number(rates[i], "law.rates[" + std::to_string(i) + "]"));
            return {LimitLaw::hypoexponential(std::move(c)), check_scale(scale.empty() ? "1/(N*mu_1)" : scale, "law.scale")};
        }
        if (name == "distance") {
            const int ld = law.contains("d") ? static_cast<int>(integer(law["d"], "law.d")) : d;
            return {LimitLaw::distance(ld), check_scale(scale.empty() ? "1/(N*mu_1)" : scale, "law.scale")};
        }
    } catch (const Error& e) {
        if (dynamic_cast<const ConfigError*>(&e) != nullptr) throw;
        throw ConfigError(std::string("law: ") + e.what());
    }
    throw ConfigError("law.kind: unknown law '" + name + "'");
}

ExperimentConfig parse_experiment(const json& doc) {
    check_keys(doc, "config", {"model", "family", "law", "run", "targets", "output"});
    ExperimentConfig out;
    auto& v = out.validation;

    const auto& model = require(doc, "model", "config");
    check_keys(model, "model", {"d", "L", "alpha", "mu", "K"});
    v.params.d = static_cast<int>(integer(require(model, "d", "model"), "model.d"));
    v.params.L = number(require(model, "L", "model"), "model.L");
    v.params.alpha = number(require(model, "alpha", "model"), "model.alpha");
    const auto& mu = require(model, "mu", "model");
    if (!mu.is_array()) throw ConfigError("model.mu: expected an array");
    for (std::size_t i = 0; i < mu.size(); ++i) v.params.mu.push_back(number(mu[i], "model.mu[" + std::to_string(i) + "]"));
    v.params.K = static_cast<int>(integer(require(model, "K", "model"), "model.K"));
    if (v.params.mu.size() < static_cast<std::size_t>(std::max(v.params.K, 0))) throw ConfigError("model.mu: needs at least K entries");
    try {
        v.params.validate();
    } catch (const InvalidArgumentError& e) {
        throw ConfigError(std::string("model: ") + e.what());
    }

    if (doc.contains("family")) v.family = parse_family(doc["family"], v.params.d, v.params.K);
    if (doc.contains("law")) v.law = parse_law(doc["law"], v.params.d);

    const auto& run = require(doc, "run", "config");
    check_keys(run, "run", {"replicates", "master_seed", "workers", "ks_threshold", "guards"});
    const long long reps = integer(require(run, "replicates", "run"), "run.replicates");
    if (reps < 1 || reps > std::numeric_limits<std::uint32_t>::max()) throw ConfigError("run.replicates: must be positive");
    v.replicates = static_cast<std::uint32_t>(reps);
    if (run.contains("master_seed")) {
        if (!run["master_seed"].is_number_unsigned()) throw ConfigError("run.master_seed: expected a nonnegative integer");
        v.master_seed = run["master_seed"].get<std::uint64_t>();
    }
    if (run.contains("workers")) {
        const long long w = integer(run["workers"], "run.workers");
        if (w < 1) throw ConfigError("run.workers: must be positive");
        v.workers = static_cast<unsigned>(w);
    }
    if (run.contains("ks_threshold")) {
        v.ks_threshold = number(run["ks_threshold"], "run.ks_threshold");
        if (!(v.ks_threshold > 0.0)) throw ConfigError("run.ks_threshold: must be positive");
    }
    if (run.contains("guards")) {
        const auto& g = run["guards"];
        check_keys(g, "run.guards", {"max_events", "max_time"});
        if (g.contains("max_events")) {
            const long long me = integer(g["max_events"], "run.guards.max_events");
            if (me < 1) throw ConfigError("run.guards.max_events: must be positive");
            v.guards.max_events = static_cast<std::uint64_t>(me);
        }
        if (g.contains("max_time")) {
            v.guards.max_time = number(g["max_time"], "run.guards.max_time");
            if (!(v.guards.max_time > 0.0)) throw ConfigError("run.guards.max_time: must be positive");
        }
    }

    if (doc.contains("targets")) {
        const auto& targets = doc["targets"];
        if (!targets.is_array()) throw ConfigError("targets: expected an array");
        for (std::size_t i = 0; i < targets.size(); ++i) v.targets.push_back(parse_target(targets[i], "targets[" + std::to_string(i) + "]"));
    }

    if (doc.contains("output")) {
        const auto& output = doc["output"];
        check_keys(output, "output", {"dir", "formats"});
        if (output.contains("dir")) {
            if (!output["dir"].is_string()) throw ConfigError("output.dir: expected a string");
            out.output_dir = output["dir"].get<std::string>();
        }
        if (output.contains("formats")) {
            const auto& f = output["formats"];
            if (!f.is_array()) throw ConfigError("output.formats: expected an array");
            out.formats.clear();
            for (std::size_t i = 0; i < f.size(); ++i) {
                if (!f[i].is_string()) throw ConfigError("output.formats[" + std::to_string(i) + "]: expected a string");
                const auto name = f[i].get<std::string>();
                if (name != "csv" && name != "json" && name != "events") {
                    throw ConfigError("output.formats[" + std::to_string(i) + "]: unknown format '" + name + "'");
                }
                out.formats.push_back(name);
            }
        }
    }
    out.resolved = doc;
    refresh_resolved(out);
    return out;
}

void refresh_resolved(ExperimentConfig& config) {
    const auto& v = config.validation;
    json& r = config.resolved;
    std::vector<json> mu;
    for (double m : v.params.mu) mu.emplace_back(m);
    r["model"] = {{"d", v.params.d}, {"L", v.params.L}, {"alpha", v.params.alpha}, {"mu", mu}, {"K", v.params.K}};
    if (v.family) {
        std::vector<std::string> a;
        for (const auto& x : v.family->a) a.push_back(to_string(x));
        r["family"] = {{"a", a}, {"b", to_string(v.family->b)}};
        if (v.family->c) {
            json c = json::array();
            for (double x : *v.family->c) c.push_back(extended_to_json(x));
            r["family"]["c"] = c;
        }
    }
    r["run"] = {{"replicates", v.replicates},
                {"master_seed", v.master_seed},
                {"workers", v.workers},
                {"ks_threshold", v.ks_threshold},
                {"guards", {{"max_events", v.guards.max_events}, {"max_time", v.guards.max_time}}}};
    json targets = json::array();
    for (const auto& t : v.targets) targets.push_back(target_to_json(t));
    r["targets"] = targets;
    r["output"] = {{"dir", config.output_dir}, {"formats", config.formats}};
}

ExperimentConfig parse_experiment_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("syntax error: ") + e.what());
    }
    try {
        return parse_experiment(doc);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("type error: ") + e.what());
    }
}

ExperimentConfig load_experiment(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_experiment_text(buf.str());
}

}  // namespace spatialmut
