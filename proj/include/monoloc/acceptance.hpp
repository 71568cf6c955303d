#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace monoloc {

struct CriterionResult {
    int index = 0;
    std::string name;
    bool pass = false;
    double seconds = 0;
    std::string detail;
};

// the ten release gates, each timed and summarized in one line; `live`
// receives a line as each criterion finishes
std::vector<CriterionResult> run_acceptance(std::uint64_t seed = 1, std::ostream* live = nullptr);

} // namespace monoloc
