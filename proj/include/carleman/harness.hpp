#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "carleman/scenario.hpp"

namespace carleman {

inline constexpr const char* kToolVersion = "0.1.0";

/// Commands accepted by `run`.
const std::vector<std::string>& run_commands();

/// Executes `command` (geometry, carleman, inverse-source,
/// inverse-coefficient or all) for the scenario, writing CSV/SVG files and
/// manifest.json into out_dir. Progress and errors go to `log`.
/// Returns 0 when every pass flag is true, 2 when a hypothesis of the
/// estimates is violated, 1 otherwise.
int run(const std::string& command, const Scenario& scenario, const std::filesystem::path& out_dir,
        std::ostream& log);

/// Table of built-in scenarios, one per line: name, expectation, description.
void print_scenarios(std::ostream& out);

}  // namespace carleman
