#include <chrono>
#include <cstdlib>
#include <limits>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "spatialmut/config.hpp"
#include "spatialmut/rng.hpp"
#include "spatialmut/stats.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace spatialmut;

namespace {

constexpr const char* kVersion = "1.0.0";

enum Exit { kOk = 0, kStatFail = 1, kUsage = 2, kResource = 3 };

unsigned default_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

fs::path output_dir(const std::string& flag, const ExperimentConfig& config) {
    if (!flag.empty()) return flag;
    if (!config.output_dir.empty()) return config.output_dir;
    if (const char* env = std::getenv("SPATIALMUT_OUT"); env != nullptr && *env != '\0') return env;
    return ".";
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) out.push_back(item);
    return out;
}

double parse_extended(const std::string& text) {
    if (text == "inf" || text == "Infinity") return std::numeric_limits<double>::infinity();
    std::size_t used = 0;
    const double x = std::stod(text, &used);
    if (used != text.size()) throw InvalidArgumentError("malformed number '" + text + "'");
    return x;
}

void write_file(const fs::path& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << body;
}

json meta_json(const ExperimentConfig& config, double wall_time) {
    return {{"version", kVersion},
            {"master_seed", config.validation.master_seed},
            {"replicates", config.validation.replicates},
            {"generator", Philox4x32::name},
            {"wall_time_seconds", wall_time},
            {"config", config.resolved}};
}

struct SimulateOptions {
    std::string config;
    std::optional<std::uint32_t> replicates;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> workers;
    std::string out;
    bool events = false;
};

int cmd_simulate(const SimulateOptions& opt) {
    ExperimentConfig config = load_experiment(opt.config);
    auto& v = config.validation;
    if (opt.replicates) v.replicates = *opt.replicates;
    if (opt.seed) v.master_seed = *opt.seed;
    v.workers = opt.workers.value_or(default_workers());
    if (opt.events && !config.wants("events")) config.formats.push_back("events");
    refresh_resolved(config);

    const auto start = std::chrono::steady_clock::now();
    const auto records = run_replicates(v.params, v.master_seed, v.replicates, v.guards, v.workers);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const fs::path dir = output_dir(opt.out, config);
    fs::create_directories(dir);
    std::ostringstream table;
    write_replicates_csv(table, records, v.params.K);
    write_file(dir / "replicates.csv", table.str());
    if (config.wants("events")) {
        std::ostringstream events;
        write_events_csv(events, records, v.params.d);
        write_file(dir / "events.csv", events.str());
    }
    write_file(dir / "meta.json", meta_json(config, wall).dump(2) + "\n");
    std::cout << "wrote " << records.size() << " replicates to " << dir.string() << "\n";
    return kOk;
}

struct ClassifyOptions {
    int d = 1;
    std::optional<int> k;
    std::string a;
    std::string b = "0";
    std::string c;
};

int cmd_classify(const ClassifyOptions& opt) {
    ScalingFamily family;
    family.d = opt.d;
    for (const auto& item : split_list(opt.a)) family.a.push_back(parse_rational(item));
    family.b = parse_rational(opt.b);
    family.k = opt.k.value_or(static_cast<int>(family.a.size()));
    if (!opt.c.empty()) {
        std::vector<double> c;
        for (const auto& item : split_list(opt.c)) c.push_back(parse_extended(item));
        family.c = std::move(c);
    }
    std::cout << to_json(classify(family)).dump(2) << "\n";
    return kOk;
}

struct ValidateOptions {
    std::string config;
    std::optional<unsigned> workers;
    std::string out;
};

int cmd_validate(const ValidateOptions& opt) {
    ExperimentConfig config = load_experiment(opt.config);
    config.validation.workers = opt.workers.value_or(default_workers());
    refresh_resolved(config);
    resolve_law(config.validation);  // no-law errors before any simulation

    const ValidationReport report = run_validation(config.validation);
    const fs::path dir = output_dir(opt.out, config);
    fs::create_directories(dir);
    json doc = to_json(report);
    doc["meta"] = meta_json(config, report.wall_time_seconds);
    write_file(dir / "report.json", doc.dump(2) + "\n");
    std::ostringstream table;
    write_replicates_csv(table, report.records, config.validation.params.K);
    write_file(dir / "samples.csv", table.str());

    for (const auto& t : report.targets) {
        std::cout << (t.pass ? "PASS " : "FAIL ") << t.name;
        if (t.ks) std::cout << " ks=" << *t.ks << " threshold=" << t.threshold.value_or(0.0);
        if (t.censoring_warning) std::cout << " (second arrivals observed before sigma_K)";
        std::cout << "\n";
    }
    return report.passed() ? kOk : kStatFail;
}

struct CdfOptions {
    std::string law;
    int d = 1;
    int k = 1;
    std::string rates;
    std::vector<double> at;
    std::optional<double> from;
    std::optional<double> to;
    int n = 101;
    std::string csv;
};

int cmd_cdf(const CdfOptions& opt) {
    std::optional<LimitLaw> law;
    if (opt.law == "exp1") {
        law = LimitLaw::exp1();
    } else if (opt.law == "thm3" || opt.law == "weibull") {
        law = LimitLaw::weibull(opt.d, opt.k);
    } else if (opt.law == "hypoexponential") {
        std::vector<double> rates;
        for (const auto& item : split_list(opt.rates)) rates.push_back(parse_extended(item));
        law = LimitLaw::hypoexponential(std::move(rates));
    } else if (opt.law == "distance") {
        law = LimitLaw::distance(opt.d);
    } else {
        throw InvalidArgumentError("unknown law '" + opt.law + "'");
    }

    std::vector<double> grid = opt.at;
    if (opt.from || opt.to) {
        if (!opt.from || !opt.to) throw InvalidArgumentError("--from and --to go together");
        if (opt.n < 2) throw InvalidArgumentError("--n must be at least 2");
        for (int i = 0; i < opt.n; ++i) grid.push_back(*opt.from + (*opt.to - *opt.from) * i / (opt.n - 1));
    }
    if (grid.empty()) throw InvalidArgumentError("give --at or --from/--to");

    std::ostringstream table;
    table << "t,cdf\n";
    for (double t : grid) table << format_double(t) << "," << format_double(law->cdf(t)) << "\n";
    if (opt.csv.empty()) {
        std::cout << table.str();
    } else {
        write_file(opt.csv, table.str());
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Event-driven simulator for multi-type mutations spreading on a torus"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    SimulateOptions sim;
    auto* simulate = app.add_subcommand("simulate", "Run replicates and write replicates.csv and meta.json");
    simulate->add_option("--config", sim.config, "Experiment JSON")->required();
    simulate->add_option("--replicates", sim.replicates, "Override run.replicates")->check(CLI::PositiveNumber);
    simulate->add_option("--seed", sim.seed, "Override run.master_seed");
    simulate->add_option("--workers", sim.workers, "Worker threads (default: all cores)")->check(CLI::PositiveNumber);
    simulate->add_option("--out", sim.out, "Output directory (default: output.dir, then $SPATIALMUT_OUT)");
    simulate->add_flag("--events", sim.events, "Also write events.csv");

    ClassifyOptions cls;
    auto* classify_cmd = app.add_subcommand("classify", "Print the limit regime of a power-law family as JSON");
    classify_cmd->add_option("--d", cls.d, "Dimension")->check(CLI::Range(1, 3));
    classify_cmd->add_option("--k", cls.k, "Target type (default: number of exponents)");
    classify_cmd->add_option("--a", cls.a, "Rate exponents, comma separated rationals")->required();
    classify_cmd->add_option("--b", cls.b, "Spread-rate exponent");
    classify_cmd->add_option("--c", cls.c, "Limits mu_i/mu_1, comma separated (inf allowed)");

    ValidateOptions val;
    auto* validate = app.add_subcommand("validate", "Run the statistical checks and write report.json and samples.csv");
    validate->add_option("--config", val.config, "Experiment JSON")->required();
    validate->add_option("--workers", val.workers, "Worker threads (default: all cores)")->check(CLI::PositiveNumber);
    validate->add_option("--out", val.out, "Output directory");

    CdfOptions cdf;
    auto* cdf_cmd = app.add_subcommand("cdf", "Evaluate a limit CDF");
    cdf_cmd->add_option("--law", cdf.law, "exp1 | thm3 | weibull | hypoexponential | distance")->required();
    cdf_cmd->add_option("--d", cdf.d, "Dimension")->check(CLI::Range(1, 3));
    cdf_cmd->add_option("--k", cdf.k, "Type index for thm3/weibull")->check(CLI::PositiveNumber);
    cdf_cmd->add_option("--rates", cdf.rates, "Hypoexponential rates, comma separated (inf allowed)");
    cdf_cmd->add_option("--at", cdf.at, "Evaluation points");
    cdf_cmd->add_option("--from", cdf.from, "Grid start");
    cdf_cmd->add_option("--to", cdf.to, "Grid end");
    cdf_cmd->add_option("--n", cdf.n, "Grid size");
    cdf_cmd->add_option("--csv", cdf.csv, "Write the table here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (simulate->parsed()) return cmd_simulate(sim);
        if (classify_cmd->parsed()) return cmd_classify(cls);
        if (validate->parsed()) return cmd_validate(val);
        if (cdf_cmd->parsed()) return cmd_cdf(cdf);
    } catch (const ResourceLimitError& e) {
        std::cerr << "resource limit: " << e.what() << "\n";
        return kResource;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: malformed number (" << e.what() << ")\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    }
    return kUsage;
}
