#include "monoloc/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace monoloc {

const char* version_string() { return "monoloc 0.1.0"; }

bool RunReport::all_pass() const {
    for (const CheckRow& c : checks)
        if (!c.pass) return false;
    return true;
}

void RunReport::refresh_outcome() {
    if (outcome == "inconclusive") return;
    outcome = all_pass() ? "pass" : "fail";
}

nlohmann::ordered_json RunReport::to_json() const {
    nlohmann::ordered_json j;
    j["command"] = command;
    j["version"] = version;
    j["config_hash"] = config_hash;
    j["seed"] = seed;
    j["outcome"] = outcome;
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const CheckRow& c : checks) {
        nlohmann::ordered_json r;
        r["id"] = c.id;
        r["observed"] = format_double(c.observed);
        r["bound"] = format_double(c.bound);
        r["slack"] = format_double(c.slack);
        r["pass"] = c.pass;
        if (!c.note.empty()) r["note"] = c.note;
        rows.push_back(std::move(r));
    }
    j["checks"] = std::move(rows);
    j["tables"] = tables;
    return j;
}

std::string RunReport::render_text() const {
    std::ostringstream os;
    os << command << " | " << version << " | config " << config_hash << " | seed " << seed
       << "\n";
    for (const CheckRow& c : checks) {
        os << (c.pass ? "  pass  " : "  FAIL  ") << c.id << "  observed "
           << format_double(c.observed) << "  bound " << format_double(c.bound) << "  slack "
           << format_double(c.slack);
        if (!c.note.empty()) os << "  (" << c.note << ")";
        os << "\n";
    }
    os << "outcome: " << outcome << "\n";
    return os.str();
}

std::string config_hash_hex(const nlohmann::ordered_json& canonical) {
    const std::string s = canonical.dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << content;
    if (!out) throw std::runtime_error("short write to " + path);
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
    std::ostringstream os;
    for (std::size_t i = 0; i < header.size(); ++i)
        os << header[i] << (i + 1 < header.size() ? "," : "\n");
    for (const auto& row : rows) {
        if (row.size() != header.size())
            throw std::logic_error("csv row width does not match the header of " + path);
        for (std::size_t i = 0; i < row.size(); ++i)
            os << row[i] << (i + 1 < row.size() ? "," : "\n");
    }
    write_text_file(path, os.str());
}

} // namespace monoloc
