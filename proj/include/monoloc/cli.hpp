#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "monoloc/arithmetic.hpp"
#include "monoloc/potential.hpp"
#include "monoloc/report.hpp"

namespace monoloc {

// exit code 2
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
// exit code 3
struct ResourceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
    nlohmann::ordered_json raw; // canonical form, defaults filled, drives the hash

    std::string frequency_kind = "golden"; // golden | silver | coefficients
    std::vector<std::int64_t> coefficients;
    int cf_terms = 40;

    std::string potential_kind = "sawtooth"; // sawtooth | log_singular | step_linear
    double gamma = 20;
    double offset = 0;  // sawtooth vertical offset
    double weight = 1;  // log_singular logarithm weight
    double cutpos = 0.5;
    double height = 1;  // step_linear jump size

    std::vector<std::int64_t> scales;
    std::vector<double> energies; // explicit list wins over window/count
    int energy_count = 12;
    double energy_lo = std::numeric_limits<double>::quiet_NaN();
    double energy_hi = std::numeric_limits<double>::quiet_NaN();

    double tau = 0.05;
    double sigma = 0.2;
    double C_d = 4.0;
    int precision_bits = 256;
    std::uint64_t seed = 1;
    std::string out_dir = ".";
    double x0 = 0.6180339887498949;

    // localize
    int k_max = 0; // 0 selects the largest scale fitting the box
    std::int64_t box_size = 0;
    double E_target = std::numeric_limits<double>::quiet_NaN();
    double noise_floor = -30;
    double ipr_min = 0.05;

    bool synthetic_selftest = false; // ids: closed-form table cross-check
};

// schema-validating parse; errors carry the JSON pointer of the offending field
ExperimentConfig parse_config(const nlohmann::ordered_json& j);
ExperimentConfig load_config(const std::string& path);

FrequencyModel config_frequency(const ExperimentConfig& c);
MonotonePotential config_potential(const ExperimentConfig& c);
// explicit values, else the window, else the potential's default grid span
std::vector<double> config_energies(const ExperimentConfig& c, const MonotonePotential& pot);

RunReport cmd_cf(const ExperimentConfig& c);
RunReport cmd_ids_lyap(const ExperimentConfig& c);
RunReport cmd_ldt(const ExperimentConfig& c);
RunReport cmd_localize(const ExperimentConfig& c);
RunReport cmd_verify(const ExperimentConfig& c);

// full front door: parses argv, dispatches, writes report.json / report.txt /
// CSVs into the output directory, prints the text rendering.
// exit: 0 pass, 1 check failure, 2 config error, 3 resource error, 4 inconclusive
int run_cli(int argc, const char* const* argv);

} // namespace monoloc
