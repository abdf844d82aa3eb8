#pragma once

#include <string>
#include <vector>

namespace byzagg {

struct CriterionResult {
    std::string id;      // "A1" .. "A9"
    bool pass{false};
    std::string detail;  // measured values vs thresholds
    double seconds{0.0};
};

// Run the named criteria ("A1".."A9"); empty selection means all of them.
// Throws std::invalid_argument for an unknown id.
std::vector<CriterionResult> run_acceptance(const std::vector<std::string>& suites);

// Prints one "<id> PASS|FAIL <detail>" line per criterion; returns 0 iff all
// selected criteria pass, 2 for an unknown suite id.
int cmd_accept(const std::vector<std::string>& suites);

} // namespace byzagg
