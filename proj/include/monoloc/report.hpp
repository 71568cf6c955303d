#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace monoloc {

// one bound evaluation: the identifier names what is being bounded, not where
// the run happened to be when it checked it
struct CheckRow {
    std::string id;
    double observed = 0;
    double bound = 0;
    double slack = 0; // bound - observed in the direction that makes + headroom
    bool pass = false;
    std::string note;
};

struct RunReport {
    std::string command;
    std::string version;
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string outcome = "pass"; // pass | fail | inconclusive
    std::vector<CheckRow> checks;
    nlohmann::ordered_json tables = nlohmann::ordered_json::object();

    bool all_pass() const;
    void refresh_outcome(); // fail if any check fails, unless already inconclusive
    nlohmann::ordered_json to_json() const;
    std::string render_text() const;
};

const char* version_string();

// FNV-1a over the canonical dump; stable across runs and platforms
std::string config_hash_hex(const nlohmann::ordered_json& canonical);

// frozen numeric formatting for CSV cells (%.12g, nan/inf spelled out)
std::string format_double(double v);

void write_text_file(const std::string& path, const std::string& content);
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

} // namespace monoloc
