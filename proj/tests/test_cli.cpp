#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "monoloc/cli.hpp"

using namespace monoloc;
using json = nlohmann::ordered_json;

namespace {

std::filesystem::path scratch() {
    auto dir = std::filesystem::temp_directory_path() / "monoloc_cli_test";
    std::filesystem::create_directories(dir);
    return dir;
}

std::string write_config(const json& j, const std::string& name) {
    auto path = scratch() / name;
    std::ofstream out(path);
    out << j.dump(2);
    return path.string();
}

int run(std::vector<std::string> args) {
    std::vector<const char*> argv{"monoloc"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return run_cli(int(argv.size()), argv.data());
}

json fast_ids_config() {
    json j;
    j["frequency"] = {{"kind", "golden"}, {"terms", 30}};
    j["potential"] = {{"kind", "sawtooth"}, {"gamma", 20.0}};
    j["scales"] = {144};
    return j;
}

} // namespace

TEST_CASE("schema errors carry json pointers") {
    CHECK_THROWS_WITH_AS(parse_config(json::parse(R"({"frequenzy": {}})")),
                         doctest::Contains("/frequenzy"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config(json::parse(R"({"tau": 0.2})")),
                         doctest::Contains("/tau"), ConfigError);
    CHECK_THROWS_WITH_AS(
        parse_config(json::parse(R"({"frequency": {"kind": "noble"}})")),
        doctest::Contains("/frequency/kind"), ConfigError);
    CHECK_THROWS_WITH_AS(
        parse_config(
            json::parse(R"({"frequency": {"kind": "coefficients", "coefficients": [0, 0]}})")),
        doctest::Contains("/frequency/coefficients/1"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config(json::parse(R"({"potential": {"gamma": -2}})")),
                         doctest::Contains("/potential/gamma"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config(json::parse(R"({"energies": {"window": [3, 1]}})")),
                         doctest::Contains("/energies/window"), ConfigError);
}

TEST_CASE("defaults are materialized into the canonical form") {
    ExperimentConfig c = parse_config(json::object());
    CHECK(c.frequency_kind == "golden");
    CHECK(c.raw.at("tau").get<double>() == 0.05);
    CHECK(c.raw.at("potential").at("kind") == "sawtooth");
    // same inputs, same hash; different inputs, different hash
    ExperimentConfig c2 = parse_config(json::object());
    CHECK(config_hash_hex(c.raw) == config_hash_hex(c2.raw));
    ExperimentConfig c3 = parse_config(json::parse(R"({"sigma": 0.3})"));
    CHECK(config_hash_hex(c.raw) != config_hash_hex(c3.raw));
}

TEST_CASE("frequency and potential construction from config") {
    ExperimentConfig c = parse_config(json::parse(
        R"({"frequency": {"kind": "coefficients", "coefficients": [0, 2, 2, 2, 2, 2, 2]}})"));
    FrequencyModel f = config_frequency(c);
    CHECK(f.cf.convergent_denominators.back() == 169);
    ExperimentConfig cs = parse_config(
        json::parse(R"({"potential": {"kind": "step_linear", "cut": 0.25, "height": 3}})"));
    MonotonePotential p = config_potential(cs);
    CHECK(p.evaluate(0.5) == doctest::Approx(0.5 * 20.0 + 3.0));
}

TEST_CASE("energy selection rules") {
    ExperimentConfig c = parse_config(json::parse(R"({"energies": {"values": [1.5, 2.5]}})"));
    MonotonePotential p = config_potential(c);
    auto es = config_energies(c, p);
    REQUIRE(es.size() == 2);
    CHECK(es[0] == 1.5);
    // unbounded potential without a window is a config error
    ExperimentConfig cu = parse_config(json::parse(R"({"potential": {"kind": "log_singular"}})"));
    MonotonePotential pu = config_potential(cu);
    CHECK_THROWS_WITH_AS(config_energies(cu, pu), doctest::Contains("window"), ConfigError);
}

TEST_CASE("cf subcommand runs and reports") {
    auto out = (scratch() / "cf_out").string();
    auto cfg = write_config(fast_ids_config(), "cf.json");
    CHECK(run({"cf", "--config", cfg, "--out", out}) == 0);
    CHECK(std::filesystem::exists(out + "/report.json"));
    CHECK(std::filesystem::exists(out + "/convergents.csv"));
    std::ifstream in(out + "/report.json");
    json rep = json::parse(in);
    CHECK(rep.at("command") == "cf");
    CHECK(rep.at("outcome") == "pass");
}

TEST_CASE("ids subcommand writes tables and is byte deterministic") {
    auto cfg = write_config(fast_ids_config(), "ids.json");
    auto out1 = (scratch() / "ids_out1").string();
    auto out2 = (scratch() / "ids_out2").string();
    CHECK(run({"ids", "--config", cfg, "--out", out1}) == 0);
    CHECK(run({"ids", "--config", cfg, "--out", out2}) == 0);
    auto slurp = [](const std::string& p) {
        std::ifstream in(p);
        return std::string(std::istreambuf_iterator<char>(in), {});
    };
    CHECK(slurp(out1 + "/report.json") == slurp(out2 + "/report.json"));
    CHECK(slurp(out1 + "/ids.csv") == slurp(out2 + "/ids.csv"));
    CHECK(!slurp(out1 + "/lyapunov.csv").empty());
}

TEST_CASE("exit codes distinguish failure classes") {
    // 2: malformed config
    auto badpath = (scratch() / "nope.json").string();
    CHECK(run({"ids", "--config", badpath}) == 2);
    auto badjson = scratch() / "bad.json";
    {
        std::ofstream o(badjson);
        o << "{ not json";
    }
    CHECK(run({"ids", "--config", badjson.string()}) == 2);
    json unknown = fast_ids_config();
    unknown["mystery"] = 1;
    CHECK(run({"ids", "--config", write_config(unknown, "unknown.json")}) == 2);
    // 2: CLI misuse
    CHECK(run({"ids"}) == 2);
    // 3: scale beyond the certified orbit budget at low precision
    json big = fast_ids_config();
    big["scales"] = {20000000000LL};
    big["precision_bits"] = 64;
    CHECK(run({"ids", "--config", write_config(big, "big.json")}) == 3);
}

TEST_CASE("seed override changes the canonical hash") {
    auto cfg = write_config(fast_ids_config(), "seeded.json");
    auto outa = (scratch() / "seed_a").string();
    auto outb = (scratch() / "seed_b").string();
    CHECK(run({"cf", "--config", cfg, "--out", outa, "--seed", "7"}) == 0);
    CHECK(run({"cf", "--config", cfg, "--out", outb, "--seed", "8"}) == 0);
    auto hash = [](const std::string& p) {
        std::ifstream in(p + "/report.json");
        return json::parse(in).at("config_hash").get<std::string>();
    };
    CHECK(hash(outa) != hash(outb));
}

TEST_CASE("ldt subcommand passes at a denominator scale") {
    json j = fast_ids_config();
    j["scales"] = {89};
    auto out = (scratch() / "ldt_out").string();
    const int rc = run({"ldt", "--config", write_config(j, "ldt.json"), "--out", out});
    CHECK(rc == 0);
    std::ifstream in(out + "/report.json");
    json rep = json::parse(in);
    bool saw_mid = false;
    for (const auto& row : rep.at("checks"))
        if (row.at("id").get<std::string>() == "ldt.mid_band_density") saw_mid = true;
    CHECK(saw_mid);
}

TEST_CASE("localize subcommand produces a profile and coverage map") {
    json j = fast_ids_config();
    j["scales"] = {377};
    j["localize"] = {{"box_size", 233}};
    auto out = (scratch() / "loc_out").string();
    const int rc = run({"localize", "--config", write_config(j, "loc.json"), "--out", out});
    CHECK(rc == 0);
    CHECK(std::filesystem::exists(out + "/profile.csv"));
    CHECK(std::filesystem::exists(out + "/annuli.csv"));
    CHECK(std::filesystem::exists(out + "/coverage.csv"));
    std::ifstream in(out + "/report.json");
    json rep = json::parse(in);
    bool cov = false;
    for (const auto& row : rep.at("checks"))
        if (row.at("id").get<std::string>() == "localize.good_interval_coverage") {
            cov = true;
            CHECK(row.at("pass").get<bool>());
        }
    CHECK(cov);
}
