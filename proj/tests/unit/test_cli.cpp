#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
};

Result run(const std::string& args) {
    const std::string command = std::string(SPATIALMUT_CLI_PATH) + " " + args + " 2>/dev/null";
    FILE* pipe = popen(command.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::string out;
    char buffer[4096];
    while (const auto n = std::fread(buffer, 1, sizeof buffer, pipe)) out.append(buffer, n);
    const int status = pclose(pipe);
    return {WEXITSTATUS(status), out};
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("spatialmut_cli_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

fs::path write_config(const fs::path& dir, const std::string& body) {
    const fs::path path = dir / "config.json";
    std::ofstream(path) << body;
    return path;
}

std::string read(const fs::path& path) {
    std::ifstream in(path);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::size_t line_count(const std::string& text) { return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')); }

double cdf_value(const std::string& table) {
    const auto line = table.substr(table.find('\n') + 1);
    return std::stod(line.substr(line.find(',') + 1));
}

const char* kFast = R"({
  "model": {"d": 1, "L": 10000, "alpha": 10000, "mu": [0.01, 100], "K": 2},
  "family": {"a": ["-1/2", "1/2"], "b": "1"},
  "run": {"replicates": 200, "master_seed": 4},
  "targets": ["sigma_k_law"]
})";

}  // namespace

TEST_CASE("cdf subcommand") {
    auto r = run("cdf --law exp1 --at 1");
    CHECK(r.code == 0);
    CHECK(cdf_value(r.out) == doctest::Approx(0.6321206).epsilon(1e-7));
    r = run("cdf --law thm3 --d 1 --k 2 --at 1");
    CHECK(cdf_value(r.out) == doctest::Approx(0.2834687).epsilon(1e-7));
    r = run("cdf --law distance --d 1 --at 1");
    CHECK(cdf_value(r.out) == doctest::Approx(0.9109).epsilon(2e-4));
    r = run("cdf --law hypoexponential --rates 1,2 --from 0 --to 4 --n 5");
    CHECK(r.code == 0);
    CHECK(line_count(r.out) == 6);
    CHECK(run("cdf --law nope --at 1").code == 2);
    CHECK(run("cdf --law exp1").code == 2);

    const auto dir = scratch("cdf");
    CHECK(run("cdf --law exp1 --from 0 --to 1 --n 3 --csv " + (dir / "cdf.csv").string()).code == 0);
    CHECK(read(dir / "cdf.csv").rfind("t,cdf\n0,0\n", 0) == 0);
}

TEST_CASE("classify subcommand") {
    auto r = run("classify --d 1 --b 1 --a=-3,-3,-3 --c 1,1,1");
    CHECK(r.code == 0);
    auto j = nlohmann::json::parse(r.out);
    CHECK(j["kind"] == "Theorem1");
    CHECK(j["scale_exponent"] == "2");

    j = nlohmann::json::parse(run("classify --d 1 --b 1 --a=-1/2,1/2").out);
    CHECK(j["kind"] == "Theorem2");
    CHECK(j["law"] == "exp1");
    CHECK(j["scale_exponent"] == "-1/2");

    j = nlohmann::json::parse(run("classify --d 1 --b 0 --a=-2/3,-2/3").out);
    CHECK(j["kind"] == "Theorem3");
    CHECK(j["scale_exponent"] == "1/9");

    j = nlohmann::json::parse(run("classify --d 1 --b 0 --a=-4/5,0,1").out);
    CHECK(j["kind"] == "Theorem4");
    CHECK(j["l"] == 2);
    CHECK(j["scale_exponent"] == "-1/15");

    r = run("classify --d 1 --b 0 --a=-1/2,1");
    CHECK(r.code == 0);
    CHECK(nlohmann::json::parse(r.out)["kind"] == "Boundary");
    CHECK(nlohmann::json::parse(run("classify --a=0,-1").out)["kind"] == "Unclassified");
    CHECK(run("classify --a 1//2").code == 2);
    CHECK(run("classify --d 1 --b 1 --a=-3,-3").code == 2);
}

TEST_CASE("simulate subcommand") {
    const auto dir = scratch("simulate");
    const auto config = write_config(dir, kFast);
    auto r = run("simulate --config " + config.string() + " --out " + (dir / "a").string() + " --workers 1");
    REQUIRE(r.code == 0);
    const auto table = read(dir / "a" / "replicates.csv");
    CHECK(line_count(table) == 201);
    const auto meta = nlohmann::json::parse(read(dir / "a" / "meta.json"));
    CHECK(meta["generator"] == "philox4x32-10");
    CHECK(meta["master_seed"] == 4);
    CHECK(meta["config"]["model"]["K"] == 2);
    CHECK_FALSE(fs::exists(dir / "a" / "events.csv"));

    r = run("simulate --config " + config.string() + " --out " + (dir / "b").string() + " --replicates 50 --events --workers 3");
    REQUIRE(r.code == 0);
    CHECK(line_count(read(dir / "b" / "replicates.csv")) == 51);
    CHECK(nlohmann::json::parse(read(dir / "b" / "meta.json"))["config"]["run"]["replicates"] == 50);
    CHECK(fs::exists(dir / "b" / "events.csv"));
    // identical inputs give identical bytes, whatever the worker count
    CHECK(read(dir / "b" / "replicates.csv") == [&] {
        run("simulate --config " + config.string() + " --out " + (dir / "c").string() + " --replicates 50 --workers 1");
        return read(dir / "c" / "replicates.csv");
    }());

    const std::string env_dir = (dir / "env").string();
    const std::string command = "SPATIALMUT_OUT=" + env_dir + " " + SPATIALMUT_CLI_PATH + " simulate --config " +
                                config.string() + " --replicates 5 > /dev/null";
    CHECK(std::system(command.c_str()) == 0);
    CHECK(fs::exists(dir / "env" / "replicates.csv"));
}

TEST_CASE("simulate exit codes") {
    const auto dir = scratch("simulate_errors");
    auto config = write_config(dir, R"({"model": {"d": 1, "L": 10, "alpha": 1, "K": 1}, "run": {"replicates": 10}})");
    CHECK(run("simulate --config " + config.string()).code == 2);
    CHECK(run("simulate --config " + (dir / "missing.json").string()).code == 2);
    CHECK(run("simulate").code == 2);
    config = write_config(dir, R"({"model": {"d": 1, "L": 100, "alpha": 1, "mu": [1e-4, 1e-12], "K": 2},
                                   "run": {"replicates": 2, "guards": {"max_events": 20}}})");
    CHECK(run("simulate --config " + config.string() + " --out " + dir.string()).code == 3);
}

TEST_CASE("validate subcommand") {
    const auto dir = scratch("validate");
    auto config = write_config(dir, kFast);
    auto r = run("validate --config " + config.string() + " --out " + dir.string());
    CHECK(r.code == 0);
    CHECK(fs::exists(dir / "report.json"));
    CHECK(line_count(read(dir / "samples.csv")) == 201);
    const auto report = nlohmann::json::parse(read(dir / "report.json"));
    CHECK(report["targets"][0]["pass"] == true);

    // many-balls sample tested against the wrong law
    config = write_config(dir, R"({
      "model": {"d": 1, "L": 1000000, "alpha": 1, "mu": [0.0001, 0.0001], "K": 2},
      "law": {"kind": "exp1", "scale": "beta_2"},
      "run": {"replicates": 300, "master_seed": 1},
      "targets": ["sigma_k_law"]})");
    r = run("validate --config " + config.string() + " --out " + dir.string());
    CHECK(r.code == 1);
    CHECK(fs::exists(dir / "report.json"));

    config = write_config(dir, R"({
      "model": {"d": 1, "L": 10000, "alpha": 1, "mu": [0.01, 1], "K": 2},
      "family": {"a": ["-1/2", "1"], "b": "0"},
      "run": {"replicates": 300},
      "targets": ["sigma_k_law"]})");
    CHECK(run("validate --config " + config.string() + " --out " + dir.string()).code == 2);
}
