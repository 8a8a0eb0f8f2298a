#pragma once

#include <optional>
#include <string>

#include "recipe.hpp"

namespace oddm {

// Commands return the process exit code: 0 ok, 3 failed checks. Config
// problems throw ConfigError/ConstellationError and map to exit code 2 in
// the driver.

// Runs every system over the grid; writes the CSV to out_csv and a
// human-readable sidecar next to it. Single-system output uses the plain
// sweep format; multiple systems prepend a label column; recipes with
// analysis enabled append a closed-form BER column.
int cmd_run(const Recipe& recipe, const std::string& out_csv);

struct AnalyzeOptions {
  std::string out_csv;               // curve mode when set
  std::optional<double> at_ebn0_db;  // print a single value instead
  bool rho_search = false;           // print the scaling-factor report
};
int cmd_analyze(const Recipe& recipe, const AnalyzeOptions& opt);

struct SelftestOptions {
  bool verbose = false;  // also print measured errors and tolerances
  // Fault injection: perturb one constellation entry so the table check
  // must trip; proves the suite can actually fail.
  bool corrupt_constellation = false;
};
int cmd_selftest(const SelftestOptions& opt);

// fig4.csv -> fig4.meta.txt (extension replaced, or appended when absent).
std::string meta_path_for(const std::string& csv_path);

}  // namespace oddm
